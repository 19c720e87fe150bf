//! Built-in correctness suite shared by the `selfcheck` command and the
//! acceptance tests: gradients against central differences, and the fast
//! code paths against the reference implementations in [`crate::oracle`].

use crate::candgen::{enumerate_candidates, GenConfig};
use crate::center::{label_pairs, CenterInput, CenterModel, CenterVariant, PairLabels};
use crate::chemgraph::{apply_edits, parse_smiles, BondType, Edit, EditSet, MolGraph};
use crate::diffengine::{grad_check, Activation, DiffError, GradCheckConfig, GradCheckReport, Matrix, ParamStore, Tape};
use crate::oracle::{brute_force_candidates, naive_wln, reference_rank_loss};
use crate::ranker::{RankerModel, RankerVariant};
use crate::synth::{random_molecule, random_reactants};
use crate::wliso::{brute_force_isomorphic, wl_equivalent};
use crate::wln::{embed_atoms, GraphTensors, WlnConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{mark}] {}: {}", self.name, self.detail)
    }
}

/// Thirty small molecules: twenty random ones of two to seven atoms and
/// ten atom-permuted copies of them, so isomorphic pairs are present.
pub fn wl_corpus(seed: u64) -> Vec<MolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<MolGraph> = (0..20).map(|i| random_molecule(&mut rng, 2 + i % 6, 0.4)).collect();
    for i in 0..10 {
        let g = &out[2 * i];
        let mut perm: Vec<usize> = (0..g.n_atoms()).collect();
        perm.shuffle(&mut rng);
        out.push(g.permuted(&perm));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WlStats {
    pub iso_pairs: usize,
    /// Isomorphic pairs that WL also calls equivalent.
    pub iso_agreed: usize,
    pub noniso_pairs: usize,
    /// Non-isomorphic pairs that WL tells apart.
    pub noniso_distinguished: usize,
}

pub fn wl_stats(corpus: &[MolGraph], depth: usize) -> WlStats {
    let mut s = WlStats::default();
    for i in 0..corpus.len() {
        for j in i + 1..corpus.len() {
            let iso = brute_force_isomorphic(&corpus[i], &corpus[j]).expect("corpus molecules are small");
            let wl = wl_equivalent(&corpus[i], &corpus[j], depth);
            if iso {
                s.iso_pairs += 1;
                s.iso_agreed += usize::from(wl);
            } else {
                s.noniso_pairs += 1;
                s.noniso_distinguished += usize::from(!wl);
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTarget {
    CenterLocal,
    CenterGlobal,
    RankerSumPool,
    RankerWldn,
}

impl GradTarget {
    pub const ALL: [GradTarget; 4] = [
        GradTarget::CenterLocal,
        GradTarget::CenterGlobal,
        GradTarget::RankerSumPool,
        GradTarget::RankerWldn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GradTarget::CenterLocal => "center loss (local)",
            GradTarget::CenterGlobal => "center loss (global)",
            GradTarget::RankerSumPool => "ranking loss (sum-pool)",
            GradTarget::RankerWldn => "ranking loss (difference network)",
        }
    }
}

/// A random instance of up to ten atoms: reactants and between two and six
/// candidate products made by editing random pairs.
fn random_instance(rng: &mut ChaCha8Rng) -> (MolGraph, Vec<MolGraph>) {
    loop {
        let n = rng.gen_range(4..=10);
        let comps = rng.gen_range(1..=2);
        let g = random_reactants(rng, n, comps);
        let mut pairs = Vec::new();
        while pairs.len() < 3 {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v && !pairs.contains(&(u.min(v), u.max(v))) {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        let cfg = GenConfig {
            max_changes: 2,
            ..GenConfig::default()
        };
        let mut products: Vec<MolGraph> = enumerate_candidates(&g, &pairs, &cfg)
            .expect("valid pairs")
            .candidates
            .into_iter()
            .map(|c| c.product)
            .collect();
        products.shuffle(rng);
        products.truncate(6);
        if products.len() >= 2 {
            return (g, products);
        }
    }
}

/// Worst relative gradient error for `target` over `instances` random
/// instances, alternating ReLU and tanh.
pub fn gradient_report(target: GradTarget, seed: u64, instances: usize) -> Result<GradCheckReport, DiffError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<GradCheckReport> = None;
    for i in 0..instances {
        let act = if i % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        let (g, products) = random_instance(&mut rng);
        let mut store = ParamStore::new();
        let gc = GradCheckConfig {
            seed: seed.wrapping_add(i as u64),
            ..GradCheckConfig::default()
        };
        let report = match target {
            GradTarget::CenterLocal | GradTarget::CenterGlobal => {
                let variant = if target == GradTarget::CenterLocal {
                    CenterVariant::Local
                } else {
                    CenterVariant::Global
                };
                let mut model = CenterModel::new(variant, 6, 2);
                model.wln.activation = act;
                model.init(&mut store, &mut rng);
                let input = CenterInput::new(&g, model.features);
                let n = g.n_atoms();
                let labels = PairLabels::from_pairs(n, (0..2).map(|_| {
                    let u = rng.gen_range(0..n - 1);
                    (u, rng.gen_range(u + 1..n))
                }));
                grad_check(&store, |s, t| model.loss(t, s, &input, &labels), gc)?
            }
            GradTarget::RankerSumPool | GradTarget::RankerWldn => {
                let variant = if target == GradTarget::RankerSumPool {
                    RankerVariant::SumPool
                } else {
                    RankerVariant::Wldn
                };
                let mut model = RankerModel::new(variant, 6, 2);
                model.diff.hidden = 5;
                model.embed.activation = act;
                model.diff.activation = act;
                model.init(&mut store, &mut rng);
                let r = GraphTensors::new(&g, model.features);
                let ps: Vec<GraphTensors> = products.iter().map(|p| GraphTensors::new(p, model.features)).collect();
                let t_idx = rng.gen_range(0..ps.len());
                grad_check(
                    &store,
                    |s, t| model.loss(t, s, &r, &ps, t_idx).map_err(|e| match e {
                        crate::ranker::RankError::Diff(d) => d,
                        other => panic!("{other}"),
                    }),
                    gc,
                )?
            }
        };
        if worst.as_ref().is_none_or(|w| report.max_rel_error > w.max_rel_error) {
            let (checked, skipped, noise) = worst.as_ref().map_or((0, 0, 0), |w| (w.checked, w.skipped_kinks, w.below_noise));
            worst = Some(GradCheckReport {
                checked: checked + report.checked,
                skipped_kinks: skipped + report.skipped_kinks,
                below_noise: noise + report.below_noise,
                ..report
            });
        } else if let Some(w) = worst.as_mut() {
            w.checked += report.checked;
            w.skipped_kinks += report.skipped_kinks;
            w.below_noise += report.below_noise;
        }
    }
    Ok(worst.expect("at least one instance"))
}

/// Largest absolute difference between the fast network and the loop
/// reference over random graphs, inputs and settings (`h` and `c`).
pub fn equation_form_error(seed: u64, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..trials {
        let n = rng.gen_range(2..=9);
        let g = random_reactants(&mut rng, n, 1 + i % 2);
        let graph = GraphTensors::new(&g, Default::default());
        let input_dim = rng.gen_range(3..=7);
        let mut cfg = WlnConfig::new("eq", input_dim, rng.gen_range(3..=6), rng.gen_range(0..=3));
        cfg.activation = if i % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        cfg.centered_messages = i % 3 == 0;
        let mut store = ParamStore::new();
        cfg.init(&mut store, &mut rng);
        let x = Matrix::from_vec(n, input_dim, (0..n * input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let e = embed_atoms(&mut tape, &store, &cfg, &graph, xv).expect("shapes agree");
        let (h, c) = naive_wln(&store, &cfg, &graph, &x);
        for (fast, slow) in [(tape.value(e.h), &h), (tape.value(e.c), &c)] {
            for (a, b) in fast.data().iter().zip(slow.data()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnumStats {
    pub instances: usize,
    pub agreed: usize,
    pub first_mismatch: Option<String>,
}

const AROMATIC_PARTS: [&str; 4] = ["c1ccccc1", "c1ccncc1", "Cc1ccc(O)cc1", "c1ccoc1"];

/// Compares the enumerator with the brute-force reference on `instances`
/// constructed reactant sets, with K ≤ 4 and max_changes ≤ 3.
pub fn enumeration_agreement(seed: u64, instances: usize) -> EnumStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = EnumStats::default();
    for i in 0..instances {
        let (size, comps) = (rng.gen_range(3..=7), rng.gen_range(1..=2));
        let mut g = random_reactants(&mut rng, size, comps);
        if i % 3 == 0 {
            g = g.merged(&parse_smiles(AROMATIC_PARTS[i / 3 % AROMATIC_PARTS.len()]).expect("fixture"));
        }
        let n = g.n_atoms();
        let k = rng.gen_range(1..=4);
        // pairs drawn near a seed atom so connected subsets are common
        let seed_atom = rng.gen_range(0..n);
        let mut pairs = Vec::new();
        let mut guard = 0;
        while pairs.len() < k && guard < 200 {
            guard += 1;
            let u = if rng.gen_bool(0.6) { seed_atom } else { rng.gen_range(0..n) };
            let v = rng.gen_range(0..n);
            if u != v && !pairs.contains(&(u.min(v), u.max(v))) {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        let cfg = GenConfig {
            k,
            max_changes: rng.gen_range(1..=3),
            enforce_valence: i % 5 != 4,
            enforce_connectivity: i % 7 != 6,
            aromatic_rule: i % 4 != 3,
            cap: usize::MAX,
            ..GenConfig::default()
        };
        let fast = enumerate_candidates(&g, &pairs, &cfg).expect("valid pairs");
        let fast_set: BTreeSet<EditSet> = fast.candidates.iter().map(|c| c.edits.clone()).collect();
        let slow = brute_force_candidates(&g, &pairs, &cfg);
        s.instances += 1;
        if fast_set == slow && fast_set.len() == fast.candidates.len() && !fast.truncated {
            s.agreed += 1;
        } else if s.first_mismatch.is_none() {
            s.first_mismatch = Some(format!(
                "instance {i}: {} pairs, max_changes {}: {} vs {} edit sets",
                pairs.len(),
                cfg.max_changes,
                fast.candidates.len(),
                slow.len()
            ));
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkStats {
    /// Synthetic reactions whose true edits pass every filter.
    pub cases: usize,
    /// Of those, how many had the true edit set in the candidate list.
    pub found: usize,
}

/// Random reactions with one to three edits hidden among up to eight
/// pairs; checks that admissible true edits are always enumerated.
pub fn coverage_link(seed: u64, trials: usize) -> LinkStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GenConfig {
        k: 8,
        ..GenConfig::default()
    };
    let mut s = LinkStats::default();
    for _ in 0..trials {
        let n = rng.gen_range(4..=16);
        let comps = rng.gen_range(1..=3);
        let g = random_reactants(&mut rng, n, comps);
        let n_edits = rng.gen_range(1..=3);
        let mut edits: Vec<Edit> = Vec::new();
        let mut guard = 0;
        while edits.len() < n_edits && guard < 100 {
            guard += 1;
            // grow the center from atoms already touched
            let u = match edits.choose(&mut rng) {
                Some(e) if rng.gen_bool(0.8) => *[e.u, e.v].choose(&mut rng).unwrap(),
                _ => rng.gen_range(0..n),
            };
            let v = rng.gen_range(0..n);
            let cur = if u != v { g.bond_type(u, v) } else { BondType::None };
            let t = BondType::ALL[rng.gen_range(0..4)];
            if u == v || t == cur || edits.iter().any(|e| e.pair() == (u.min(v), u.max(v))) {
                continue;
            }
            edits.push(Edit::new(u, v, t));
        }
        let truth = EditSet::new(edits).expect("distinct pairs");
        let admissible = brute_force_candidates(&g, &truth.pairs().collect::<Vec<_>>(), &cfg).contains(&truth);
        if !admissible {
            continue;
        }
        let mut pairs: Vec<(usize, usize)> = truth.pairs().collect();
        while pairs.len() < cfg.k {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v && !pairs.contains(&(u.min(v), u.max(v))) {
                pairs.push((u.min(v), u.max(v)));
            }
            if pairs.len() >= n * (n - 1) / 2 {
                break;
            }
        }
        pairs.shuffle(&mut rng);
        let list = enumerate_candidates(&g, &pairs, &cfg).expect("valid pairs");
        s.cases += 1;
        if list.candidates.iter().any(|c| c.edits == truth) {
            s.found += 1;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityErrors {
    /// `|loss - P ln 2|` with every pair score at one half.
    pub center_uniform: f64,
    /// `|loss - ln(m + 1)|` with equal scores on `m + 1` candidates.
    pub ranking_uniform: f64,
    /// `|score|` of the unchanged reactants as a candidate.
    pub identity_score: f64,
}

pub fn analytic_identities(seed: u64, trials: usize) -> IdentityErrors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = IdentityErrors::default();
    for i in 0..trials {
        let (g, products) = random_instance(&mut rng);
        let n = g.n_atoms();
        let variant = if i % 2 == 0 { CenterVariant::Local } else { CenterVariant::Global };
        let model = CenterModel::new(variant, 8, 3);
        let mut store = ParamStore::new();
        model.init(&mut store, &mut rng);
        store.get_mut("center.u").expect("head").value.fill(0.0);
        let labels = match products.first().map(|p| label_pairs(&g, p)) {
            Some(Ok((l, _))) => l,
            _ => PairLabels::from_pairs(n, [(0, 1)]),
        };
        let input = CenterInput::new(&g, model.features);
        let mut tape = Tape::new();
        let loss = model.loss(&mut tape, &store, &input, &labels).expect("valid model");
        let p = (n * (n - 1) / 2) as f64;
        e.center_uniform = e.center_uniform.max((tape.value(loss).item() - p * 2f64.ln()).abs());

        let rv = if i % 2 == 0 { RankerVariant::Wldn } else { RankerVariant::SumPool };
        let ranker = RankerModel::new(rv, 8, 3);
        let mut rstore = ParamStore::new();
        ranker.init(&mut rstore, &mut rng);
        let mut all: Vec<&MolGraph> = vec![&g];
        all.extend(products.iter());
        let scores = ranker.score_graphs(&rstore, &g, &all).expect("valid model");
        e.identity_score = e.identity_score.max(scores[0].abs());

        rstore.get_mut("ranker.u").expect("head").value.fill(0.0);
        let m_plus_1 = products.len() + 1;
        let mut withtruth = products.clone();
        withtruth.push(apply_edits(&g, &EditSet::empty()).expect("empty edit set"));
        let r = GraphTensors::new(&g, ranker.features);
        let ps: Vec<GraphTensors> = withtruth.iter().map(|p| GraphTensors::new(p, ranker.features)).collect();
        let mut tape = Tape::new();
        let l = ranker.loss(&mut tape, &rstore, &r, &ps, m_plus_1 - 1).expect("valid model");
        let v = tape.value(l).item();
        e.ranking_uniform = e.ranking_uniform.max((v - (m_plus_1 as f64).ln()).abs());
        let zeros = vec![0.0; m_plus_1];
        e.ranking_uniform = e.ranking_uniform.max((reference_rank_loss(&zeros, 0) - v).abs());
    }
    e
}

/// Gradient relative error bound and related tolerances used by
/// [`run_all`].
pub const GRAD_TOLERANCE: f64 = 1e-4;
pub const FORM_TOLERANCE: f64 = 1e-10;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Runs every check with modest instance counts.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let wl = wl_stats(&wl_corpus(seed), 3);
    out.push(Check {
        name: "WL equivalence is sound".into(),
        passed: wl.iso_agreed == wl.iso_pairs && wl.noniso_distinguished * 100 >= wl.noniso_pairs * 99,
        detail: format!(
            "{}/{} isomorphic pairs agreed, {}/{} non-isomorphic pairs distinguished",
            wl.iso_agreed, wl.iso_pairs, wl.noniso_distinguished, wl.noniso_pairs
        ),
    });
    for t in GradTarget::ALL {
        let check = match gradient_report(t, seed, 4) {
            Ok(r) => Check {
                name: format!("gradient of {}", t.name()),
                passed: r.max_rel_error < GRAD_TOLERANCE && r.checked > 0,
                detail: format!(
                    "max relative error {:.2e} over {} coordinates ({} at kinks, {} compared absolutely)",
                    r.max_rel_error, r.checked, r.skipped_kinks, r.below_noise
                ),
            },
            Err(e) => Check {
                name: format!("gradient of {}", t.name()),
                passed: false,
                detail: e.to_string(),
            },
        };
        out.push(check);
    }
    let form = equation_form_error(seed, 12);
    out.push(Check {
        name: "elementwise and tensor forms agree".into(),
        passed: form < FORM_TOLERANCE,
        detail: format!("max abs difference {form:.2e}"),
    });
    let en = enumeration_agreement(seed, 20);
    out.push(Check {
        name: "enumerator matches brute force".into(),
        passed: en.agreed == en.instances,
        detail: match &en.first_mismatch {
            None => format!("{}/{} instances", en.agreed, en.instances),
            Some(m) => format!("{}/{} instances; {m}", en.agreed, en.instances),
        },
    });
    let link = coverage_link(seed, 200);
    out.push(Check {
        name: "covered centers yield the true candidate".into(),
        passed: link.cases > 0 && link.found == link.cases,
        detail: format!("{}/{} reactions", link.found, link.cases),
    });
    let id = analytic_identities(seed, 6);
    out.push(Check {
        name: "analytic identities".into(),
        passed: id.center_uniform < IDENTITY_TOLERANCE && id.ranking_uniform < IDENTITY_TOLERANCE && id.identity_score < IDENTITY_TOLERANCE,
        detail: format!(
            "center {:.1e}, ranking {:.1e}, identity score {:.1e}",
            id.center_uniform, id.ranking_uniform, id.identity_score
        ),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let checks = run_all(1);
        for c in &checks {
            assert!(c.passed, "{c}");
        }
    }
}
