//! Slow, direct reference implementations. They share no code paths with
//! the fast versions beyond graph construction and are used by the
//! `selfcheck` suite and the tests.

use crate::candgen::GenConfig;
use crate::center::ScoreMatrix;
use crate::chemgraph::{apply_edits, BondType, Edit, EditSet, MolGraph};
use crate::diffengine::{Activation, Matrix, ParamStore};
use crate::wln::{GraphTensors, WlnConfig};
use std::collections::BTreeSet;

/// Generates every assignment of a bond type to every pair, then keeps
/// those that change between one and `max_changes` pairs and pass the
/// enabled filters. The candidate cap is ignored.
pub fn brute_force_candidates(reactants: &MolGraph, pairs: &[(usize, usize)], cfg: &GenConfig) -> BTreeSet<EditSet> {
    let mut uniq: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    uniq.sort_unstable();
    uniq.dedup();
    let m = uniq.len();
    let base = cfg.alphabet.len();
    let mut out = BTreeSet::new();
    let total = base.pow(m as u32);
    for code in 0..total {
        let mut rest = code;
        let mut edits = Vec::new();
        for &(u, v) in &uniq {
            let t = cfg.alphabet[rest % base];
            rest /= base;
            if t != reactants.bond_type(u, v) {
                edits.push(Edit::new(u, v, t));
            }
        }
        if edits.is_empty() || edits.len() > cfg.max_changes {
            continue;
        }
        if cfg.aromatic_rule
            && edits
                .iter()
                .any(|e| e.new == BondType::Aromatic && !(reactants.atom(e.u).aromatic && reactants.atom(e.v).aromatic))
        {
            continue;
        }
        if cfg.enforce_connectivity && !edges_connected(&edits) {
            continue;
        }
        let set = EditSet::new(edits).expect("distinct pairs");
        if cfg.enforce_valence {
            let product = apply_edits(reactants, &set).expect("every edit changes its pair");
            if !all_within_valence(&product) {
                continue;
            }
        }
        out.insert(set);
    }
    out
}

/// Graph search over the edited pairs.
fn edges_connected(edits: &[Edit]) -> bool {
    let mut reached = vec![edits[0].u];
    let mut grew = true;
    while grew {
        grew = false;
        for e in edits {
            let (hu, hv) = (reached.contains(&e.u), reached.contains(&e.v));
            if hu != hv {
                reached.push(if hu { e.v } else { e.u });
                grew = true;
            }
        }
    }
    edits.iter().all(|e| reached.contains(&e.u))
}

fn all_within_valence(g: &MolGraph) -> bool {
    (0..g.n_atoms()).all(|i| {
        let sum: f64 = g.bonds().iter().filter(|b| b.a == i || b.b == i).map(|b| b.order.order()).sum();
        g.max_valence(i).is_none_or(|max| sum.floor() as u32 <= max)
    })
}

/// Top `k` pairs by repeated arg-max over a copy of the scores.
pub fn brute_force_top_k(scores: &ScoreMatrix, k: usize) -> Vec<(usize, usize)> {
    let n = scores.n_atoms();
    let mut taken = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < k {
        let mut best: Option<((usize, usize), f64)> = None;
        for u in 0..n {
            for v in u + 1..n {
                if taken.contains(&(u, v)) {
                    continue;
                }
                let s = scores.get(u, v);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some(((u, v), s));
                }
            }
        }
        let Some((p, _)) = best else { break };
        taken.insert(p);
        out.push(p);
    }
    out
}

fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => x.max(0.0),
        Activation::Tanh => x.tanh(),
    }
}

/// `W x` for a weight stored as rows of outputs.
fn apply(w: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..w.rows()).map(|k| w.row(k).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// The network written out with explicit loops. The atom vectors use the
/// rank-1 tensor inner product
/// `c_v[k] = Σ_u Σ_{a,b,c} W0[k,a] W1[k,b] W2[k,c] h_u[a] f_uv[b] h_v[c]`.
/// Returns `(h, c)`.
pub fn naive_wln(store: &ParamStore, cfg: &WlnConfig, graph: &GraphTensors, x: &Matrix) -> (Matrix, Matrix) {
    let w = |t: &str| &store.get(&cfg.name(t)).expect("parameter present").value;
    let n = graph.n_atoms;
    let hd = cfg.hidden;
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|v| if cfg.project_input { apply(w("W_in"), x.row(v)) } else { x.row(v).to_vec() })
        .collect();
    let message = |hu: &[f64], f: &[f64]| -> Vec<f64> {
        let cat: Vec<f64> = hu.iter().chain(f).copied().collect();
        apply(w("V"), &cat).into_iter().map(|z| act(cfg.activation, z)).collect()
    };
    for _ in 0..cfg.depth {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let mut agg = vec![0.0; hd];
            for e in 0..graph.n_edges() {
                if graph.dst[e] != v {
                    continue;
                }
                let f = graph.bond_feats.row(e);
                let mut m = message(&h[graph.src[e]], f);
                if cfg.centered_messages {
                    let b = message(&vec![0.0; hd], f);
                    for (mi, bi) in m.iter_mut().zip(b) {
                        *mi -= bi;
                    }
                }
                for (a, mi) in agg.iter_mut().zip(m) {
                    *a += mi;
                }
            }
            let s = apply(w("U1"), &h[v]);
            let t = apply(w("U2"), &agg);
            next.push(s.iter().zip(t).map(|(a, b)| act(cfg.activation, a + b)).collect());
        }
        h = next;
    }
    let (w0, w1, w2) = (w("W0"), w("W1"), w("W2"));
    let mut c = Matrix::zeros(n, hd);
    for e in 0..graph.n_edges() {
        let (u, v) = (graph.src[e], graph.dst[e]);
        let f = graph.bond_feats.row(e);
        for k in 0..hd {
            let mut acc = 0.0;
            for a in 0..hd {
                for b in 0..f.len() {
                    for cc in 0..hd {
                        acc += w0.get(k, a) * w1.get(k, b) * w2.get(k, cc) * h[u][a] * f[b] * h[v][cc];
                    }
                }
            }
            c.set(v, k, c.get(v, k) + acc);
        }
    }
    let hm = Matrix::from_vec(n, hd, h.concat());
    (hm, c)
}

/// `log Σ exp(s) - s[target]` computed with a max shift.
pub fn reference_rank_loss(scores: &[f64], target: usize) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln() - scores[target]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::center::pair_list;
    use crate::chemgraph::parse_smiles;

    #[test]
    fn top_k_prefers_earlier_pair_on_ties() {
        let s = ScoreMatrix::new(3, vec![0.5, 0.9, 0.5]);
        assert_eq!(brute_force_top_k(&s, 2), vec![(0, 2), (0, 1)]);
        assert_eq!(pair_list(3)[1], (0, 2));
    }

    #[test]
    fn brute_force_counts() {
        let g = parse_smiles("CC").unwrap();
        let cfg = GenConfig {
            enforce_valence: false,
            enforce_connectivity: false,
            aromatic_rule: false,
            ..GenConfig::default()
        };
        assert_eq!(brute_force_candidates(&g, &[(0, 1)], &cfg).len(), 4);
    }

    #[test]
    fn reference_loss_uniform() {
        assert!((reference_rank_loss(&[0.3; 4], 2) - 4f64.ln()).abs() < 1e-12);
    }
}
