//! Candidate products from a predicted reaction center.
//!
//! Every non-empty subset of the selected pairs (up to `max_changes`
//! pairs) is combined with every assignment of a new bond type to each pair
//! in it. Assignments that overload an atom's valence, that connect
//! aromatic bonds to non-aromatic atoms, or whose edited pairs do not form
//! one connected piece are dropped.

use crate::chemgraph::{apply_edits, BondType, Edit, EditSet, MolGraph};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    /// Number of top-scoring pairs the center model hands over.
    pub k: usize,
    /// Largest number of pairs edited at once.
    pub max_changes: usize,
    /// Bond types a pair may take.
    pub alphabet: Vec<BondType>,
    pub enforce_valence: bool,
    pub enforce_connectivity: bool,
    /// Only allow aromatic bonds between atoms flagged aromatic.
    pub aromatic_rule: bool,
    /// Candidates beyond this count are dropped and the list is flagged.
    pub cap: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            k: 6,
            max_changes: 3,
            alphabet: BondType::ALL.to_vec(),
            enforce_valence: true,
            enforce_connectivity: true,
            aromatic_rule: true,
            cap: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CandGenError {
    #[error("max_changes must be at least 1")]
    NoChangesAllowed,
    #[error("pair ({0}, {1}) is not a pair of distinct reactant atoms")]
    BadPair(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub edits: EditSet,
    pub product: MolGraph,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateList {
    pub candidates: Vec<Candidate>,
    pub truncated: bool,
}

/// True iff no atom's bond-order sum (aromatic bonds count 1.5, floored
/// after summing) exceeds its maximum valence.
pub fn valence_ok(g: &MolGraph) -> bool {
    (0..g.n_atoms()).all(|i| g.max_valence(i).is_none_or(|max| g.bond_order_sum(i) <= max))
}

/// True iff the edited pairs, taken as edges over the atoms they touch,
/// form a single connected piece.
pub fn connectivity_ok(edits: &EditSet) -> bool {
    let atoms = edits.atoms();
    if atoms.len() <= 2 {
        return true;
    }
    let idx = |a: usize| atoms.binary_search(&a).expect("touched atom");
    let mut parent: Vec<usize> = (0..atoms.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merged = 0;
    for (u, v) in edits.pairs() {
        let (ru, rv) = (find(&mut parent, idx(u)), find(&mut parent, idx(v)));
        if ru != rv {
            parent[ru] = rv;
            merged += 1;
        }
    }
    merged + 1 == atoms.len()
}

/// Enumerates candidates for the given pairs (duplicates ignored), ordered
/// by the number of edited pairs, then by the positions of the edited pairs
/// in `pairs` (lexicographic), then by bond types in alphabet order.
pub fn enumerate_candidates(reactants: &MolGraph, pairs: &[(usize, usize)], cfg: &GenConfig) -> Result<CandidateList, CandGenError> {
    if cfg.max_changes == 0 {
        return Err(CandGenError::NoChangesAllowed);
    }
    let n = reactants.n_atoms();
    let mut uniq: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        if a == b || a >= n || b >= n {
            return Err(CandGenError::BadPair(a, b));
        }
        let p = (a.min(b), a.max(b));
        if !uniq.contains(&p) {
            uniq.push(p);
        }
    }
    // per pair: current type and the alphabet minus it (and minus aromatic
    // where the rule forbids it)
    let options: Vec<Vec<BondType>> = uniq
        .iter()
        .map(|&(u, v)| {
            let cur = reactants.bond_type(u, v);
            let both_aromatic = reactants.atom(u).aromatic && reactants.atom(v).aromatic;
            cfg.alphabet
                .iter()
                .copied()
                .filter(|&t| t != cur && !(cfg.aromatic_rule && t == BondType::Aromatic && !both_aromatic))
                .collect()
        })
        .collect();
    let half_sums: Vec<u32> = (0..n)
        .map(|i| {
            reactants
                .neighbors(i)
                .iter()
                .map(|&(_, b)| reactants.bonds()[b].order.half_order())
                .sum()
        })
        .collect();

    let mut out = CandidateList::default();
    let mut seen = HashSet::new();
    let max_size = cfg.max_changes.min(uniq.len());
    let mut delta = vec![0i64; n];
    'sizes: for size in 1..=max_size {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            let subset_pairs: Vec<(usize, usize)> = subset.iter().map(|&i| uniq[i]).collect();
            let connected = !cfg.enforce_connectivity || size == 1 || {
                let probe = EditSet::new(subset_pairs.iter().map(|&(u, v)| Edit::new(u, v, BondType::Single)))
                    .expect("distinct pairs");
                connectivity_ok(&probe)
            };
            if connected && subset.iter().all(|&i| !options[i].is_empty()) {
                let mut choice = vec![0usize; size];
                loop {
                    let edits: Vec<Edit> = subset
                        .iter()
                        .zip(&choice)
                        .map(|(&i, &c)| Edit::new(uniq[i].0, uniq[i].1, options[i][c]))
                        .collect();
                    if !cfg.enforce_valence || valence_after(reactants, &half_sums, &edits, &mut delta) {
                        let set = EditSet::new(edits).expect("distinct pairs");
                        if seen.insert(set.clone()) {
                            if out.candidates.len() == cfg.cap {
                                out.truncated = true;
                                break 'sizes;
                            }
                            let product = apply_edits(reactants, &set).expect("edits change every pair");
                            out.candidates.push(Candidate {
                                edits: set,
                                product,
                                score: None,
                            });
                        }
                    }
                    // odometer over type choices, first pair most significant
                    let mut pos = size;
                    loop {
                        if pos == 0 {
                            break;
                        }
                        pos -= 1;
                        choice[pos] += 1;
                        if choice[pos] < options[subset[pos]].len() {
                            break;
                        }
                        choice[pos] = 0;
                        if pos == 0 {
                            pos = usize::MAX;
                            break;
                        }
                    }
                    if pos == usize::MAX {
                        break;
                    }
                }
            }
            if !next_combination(&mut subset, uniq.len()) {
                break;
            }
        }
    }
    Ok(out)
}

/// Valence check restricted to the atoms the edits touch; other atoms keep
/// their reactant environment.
fn valence_after(g: &MolGraph, half_sums: &[u32], edits: &[Edit], delta: &mut [i64]) -> bool {
    for e in edits {
        let d = i64::from(e.new.half_order()) - i64::from(g.bond_type(e.u, e.v).half_order());
        delta[e.u] += d;
        delta[e.v] += d;
    }
    let mut ok = true;
    for e in edits {
        for a in [e.u, e.v] {
            if let Some(max) = g.max_valence(a) {
                let half = i64::from(half_sums[a]) + delta[a];
                if half / 2 > i64::from(max) {
                    ok = false;
                }
            }
        }
    }
    for e in edits {
        delta[e.u] = 0;
        delta[e.v] = 0;
    }
    ok
}

/// Advances `c` to the next `c.len()`-combination of `0..n` in
/// lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    fn no_filters() -> GenConfig {
        GenConfig {
            enforce_valence: false,
            enforce_connectivity: false,
            aromatic_rule: false,
            ..GenConfig::default()
        }
    }

    #[test]
    fn combinations_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn raw_counts() {
        let g = parse_smiles("CC").unwrap();
        let one = enumerate_candidates(&g, &[(0, 1)], &no_filters()).unwrap();
        assert_eq!(one.candidates.len(), 4);
        let g = parse_smiles("CC.CC").unwrap();
        let cfg = GenConfig { max_changes: 2, ..no_filters() };
        let two = enumerate_candidates(&g, &[(0, 1), (2, 3)], &cfg).unwrap();
        assert_eq!(two.candidates.len(), 24);
        assert!(two.candidates[..8].iter().all(|c| c.edits.len() == 1));
    }

    #[test]
    fn valence_filter() {
        let g = parse_smiles("C(C)(C)(C)C.C").unwrap();
        assert!(valence_ok(&g));
        let list = enumerate_candidates(&g, &[(0, 5)], &GenConfig::default()).unwrap();
        assert!(list.candidates.is_empty());
        let p = apply_edits(&g, &EditSet::new([Edit::new(0, 5, BondType::Single)]).unwrap()).unwrap();
        assert!(!valence_ok(&p));
    }

    #[test]
    fn connectivity_cases() {
        let s = |e: &[(usize, usize)]| EditSet::new(e.iter().map(|&(u, v)| Edit::new(u, v, BondType::Single))).unwrap();
        assert!(connectivity_ok(&s(&[(1, 2)])));
        assert!(connectivity_ok(&s(&[(1, 2), (2, 3)])));
        assert!(!connectivity_ok(&s(&[(1, 2), (5, 6)])));
    }

    #[test]
    fn cap_truncates() {
        let g = parse_smiles("CCCC").unwrap();
        let cfg = GenConfig { cap: 3, ..no_filters() };
        let list = enumerate_candidates(&g, &[(0, 1), (1, 2)], &cfg).unwrap();
        assert_eq!(list.candidates.len(), 3);
        assert!(list.truncated);
    }

    #[test]
    fn aromatic_rule() {
        let g = parse_smiles("c1ccccc1.C").unwrap();
        let list = enumerate_candidates(&g, &[(0, 6)], &GenConfig::default()).unwrap();
        assert!(list.candidates.iter().all(|c| c.edits.edits()[0].new != BondType::Aromatic));
    }
}
