//! Discrete Weisfeiler-Lehman relabeling, graph fingerprints and an exact
//! isomorphism check for small graphs.
//!
//! Labels are 64-bit FNV-1a hashes (offset basis `0xcbf29ce484222325`,
//! prime `0x100000001b3`), so they are identical across runs and platforms.
//! The hashed byte strings are:
//!
//! * depth 0: `b'A'`, atomic number (1 byte), formal charge (1 byte, two's
//!   complement), aromatic flag (1 byte, 0 or 1);
//! * depth `l + 1`: `b'R'`, the atom's own depth-`l` label (8 bytes,
//!   little-endian), then for every neighbor, sorted ascending by
//!   `(bond code, neighbor label)`, the bond code (1 byte: single 1,
//!   double 2, triple 3, aromatic 4) followed by the neighbor's depth-`l`
//!   label (8 bytes, little-endian).
//!
//! WL equivalence is a necessary condition for isomorphism, not a
//! sufficient one: regular graphs with equal degree sequences (for example
//! two triangles versus a hexagon) receive identical fingerprints.

use crate::chemgraph::{BondType, MolGraph};
use thiserror::Error;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Largest graph accepted by [`brute_force_isomorphic`].
pub const BRUTE_FORCE_MAX_ATOMS: usize = 10;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn initial_label(g: &MolGraph, i: usize) -> u64 {
    let a = g.atom(i);
    fnv1a(&[
        b'A',
        a.element.atomic_number(),
        a.formal_charge as u8,
        u8::from(a.aromatic),
    ])
}

/// Per-atom labels after `depth` refinement rounds.
pub fn wl_labels(g: &MolGraph, depth: usize) -> Vec<u64> {
    let mut labels: Vec<u64> = (0..g.n_atoms()).map(|i| initial_label(g, i)).collect();
    let mut buf = Vec::new();
    let mut nbrs: Vec<(u8, u64)> = Vec::new();
    for _ in 0..depth {
        let next = (0..g.n_atoms())
            .map(|v| {
                nbrs.clear();
                nbrs.extend(
                    g.neighbors(v)
                        .iter()
                        .map(|&(u, b)| (g.bonds()[b].order.code(), labels[u])),
                );
                nbrs.sort_unstable();
                buf.clear();
                buf.push(b'R');
                buf.extend_from_slice(&labels[v].to_le_bytes());
                for &(code, label) in &nbrs {
                    buf.push(code);
                    buf.extend_from_slice(&label.to_le_bytes());
                }
                fnv1a(&buf)
            })
            .collect();
        labels = next;
    }
    labels
}

/// Multiset of final node labels plus multiset of labeled edge triples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WlFingerprint {
    /// Sorted node labels.
    pub node_labels: Vec<u64>,
    /// Sorted `(low label, bond type, high label)` triples.
    pub edge_triples: Vec<(u64, BondType, u64)>,
}

pub fn wl_fingerprint(g: &MolGraph, depth: usize) -> WlFingerprint {
    let labels = wl_labels(g, depth);
    let mut node_labels = labels.clone();
    node_labels.sort_unstable();
    let mut edge_triples: Vec<_> = g
        .bonds()
        .iter()
        .map(|b| {
            let (x, y) = (labels[b.a], labels[b.b]);
            (x.min(y), b.order, x.max(y))
        })
        .collect();
    edge_triples.sort_unstable();
    WlFingerprint {
        node_labels,
        edge_triples,
    }
}

/// True iff the fingerprints at `depth` match. `false` proves the graphs
/// are not isomorphic; `true` does not prove they are.
pub fn wl_equivalent(g1: &MolGraph, g2: &MolGraph, depth: usize) -> bool {
    g1.n_atoms() == g2.n_atoms()
        && g1.n_bonds() == g2.n_bonds()
        && wl_fingerprint(g1, depth) == wl_fingerprint(g2, depth)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("brute-force isomorphism is limited to {max} atoms, got {got}")]
pub struct SizeLimitExceeded {
    pub max: usize,
    pub got: usize,
}

/// Exact isomorphism by backtracking over atom assignments. Atoms must
/// agree on element, formal charge and aromatic flag; bonds on type.
pub fn brute_force_isomorphic(g1: &MolGraph, g2: &MolGraph) -> Result<bool, SizeLimitExceeded> {
    let n = g1.n_atoms().max(g2.n_atoms());
    if n > BRUTE_FORCE_MAX_ATOMS {
        return Err(SizeLimitExceeded {
            max: BRUTE_FORCE_MAX_ATOMS,
            got: n,
        });
    }
    if g1.n_atoms() != g2.n_atoms() || g1.n_bonds() != g2.n_bonds() {
        return Ok(false);
    }
    let n = g1.n_atoms();
    let matrix = |g: &MolGraph| {
        let mut m = vec![BondType::None; n * n];
        for b in g.bonds() {
            m[b.a * n + b.b] = b.order;
            m[b.b * n + b.a] = b.order;
        }
        m
    };
    let (m1, m2) = (matrix(g1), matrix(g2));
    let same_atom = |i: usize, j: usize| {
        let (a, b) = (g1.atom(i), g2.atom(j));
        a.element == b.element
            && a.formal_charge == b.formal_charge
            && a.aromatic == b.aromatic
            && a.degree == b.degree
    };

    fn extend(
        i: usize,
        n: usize,
        mapping: &mut Vec<usize>,
        used: &mut [bool],
        m1: &[BondType],
        m2: &[BondType],
        same_atom: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if i == n {
            return true;
        }
        for j in 0..n {
            if used[j] || !same_atom(i, j) {
                continue;
            }
            let consistent = (0..i).all(|k| m1[i * n + k] == m2[j * n + mapping[k]]);
            if !consistent {
                continue;
            }
            used[j] = true;
            mapping.push(j);
            if extend(i + 1, n, mapping, used, m1, m2, same_atom) {
                return true;
            }
            mapping.pop();
            used[j] = false;
        }
        false
    }

    let mut mapping = Vec::with_capacity(n);
    let mut used = vec![false; n];
    Ok(extend(0, n, &mut mapping, &mut used, &m1, &m2, &same_atom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    fn g(s: &str) -> MolGraph {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn ethane_atoms_share_a_label() {
        for depth in 0..4 {
            let l = wl_labels(&g("CC"), depth);
            assert_eq!(l[0], l[1]);
        }
    }

    #[test]
    fn ethanol_middle_carbon_differs() {
        let l = wl_labels(&g("CCO"), 1);
        assert_ne!(l[0], l[1]);
        let l0 = wl_labels(&g("CCO"), 0);
        assert_eq!(l0[0], l0[1]);
    }

    #[test]
    fn isobutane_vs_butane() {
        let a = wl_labels(&g("CC(C)C"), 2);
        let b = wl_labels(&g("CCCC"), 2);
        let (mut a, mut b) = (a, b);
        a.sort_unstable();
        b.sort_unstable();
        assert_ne!(a, b);
    }

    #[test]
    fn single_atom_fingerprint() {
        let fp = wl_fingerprint(&g("C"), 3);
        assert_eq!(fp.node_labels.len(), 1);
        assert!(fp.edge_triples.is_empty());
    }

    #[test]
    fn notation_does_not_matter() {
        assert_eq!(wl_fingerprint(&g("CCO"), 3), wl_fingerprint(&g("OCC"), 3));
        assert!(wl_equivalent(&g("CCO"), &g("OCC"), 3));
    }

    #[test]
    fn benzene_vs_cyclohexane() {
        assert!(!wl_equivalent(&g("c1ccccc1"), &g("C1CCCCC1"), 3));
    }

    #[test]
    fn documented_blind_spot() {
        let hexagon = g("C1CCCCC1");
        let triangles = g("C1CC1.C1CC1");
        assert!(wl_equivalent(&hexagon, &triangles, 5));
        assert!(!brute_force_isomorphic(&hexagon, &triangles).unwrap());
    }

    #[test]
    fn brute_force_cases() {
        let x = g("CC(=O)N");
        assert!(brute_force_isomorphic(&x, &x).unwrap());
        assert!(brute_force_isomorphic(&x, &g("NC(C)=O")).unwrap());
        assert!(!brute_force_isomorphic(&g("CCO"), &g("CCN")).unwrap());
        assert!(!brute_force_isomorphic(&g("C=CO"), &g("CC=O")).unwrap());
        let big = g("CCCCCCCCCCC");
        assert_eq!(
            brute_force_isomorphic(&big, &big).unwrap_err(),
            SizeLimitExceeded { max: 10, got: 11 }
        );
    }

    #[test]
    fn refinement_is_monotone() {
        let m = g("CC(C)C(=O)Nc1ccccc1");
        for depth in 0..4 {
            let coarse = wl_labels(&m, depth);
            let fine = wl_labels(&m, depth + 1);
            for i in 0..m.n_atoms() {
                for j in 0..m.n_atoms() {
                    if fine[i] == fine[j] {
                        assert_eq!(coarse[i], coarse[j]);
                    }
                }
            }
        }
    }
}
