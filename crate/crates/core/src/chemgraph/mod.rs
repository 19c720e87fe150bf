//! Molecular graphs: atoms, typed bonds, derived chemistry, SMILES I/O,
//! feature vectors and bond edits.
//!
//! Hydrogens are never graph nodes. A bracket H count is stored in
//! [`Atom::explicit_h`]; any remaining hydrogens are derived from the
//! valence table and reported by [`Atom::implicit_h`].

mod edit;
mod element;
mod features;
mod smiles;

pub use edit::{apply_edits, Edit, EditError, EditSet};
pub use element::{Element, SUPPORTED_ELEMENTS};
pub use features::{
    atom_features, atom_features_with, bond_features, FeatureOptions, ATOM_FDIM,
    ATOM_FDIM_WITH_CHARGE, BOND_FDIM,
};
pub use smiles::{parse_smiles, write_smiles, SmilesError, SmilesErrorKind};

use std::fmt;
use thiserror::Error;

/// Bond alphabet. `None` only appears inside edit sets, where it encodes
/// deletion of a bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondType {
    None,
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondType {
    /// Every bond type, in canonical order.
    pub const ALL: [BondType; 5] = [
        BondType::None,
        BondType::Single,
        BondType::Double,
        BondType::Triple,
        BondType::Aromatic,
    ];

    /// Numeric bond order; aromatic bonds count 1.5.
    pub fn order(self) -> f64 {
        match self {
            BondType::None => 0.0,
            BondType::Single => 1.0,
            BondType::Double => 2.0,
            BondType::Triple => 3.0,
            BondType::Aromatic => 1.5,
        }
    }

    /// Bond order in half units, so sums stay exact.
    pub(crate) fn half_order(self) -> u32 {
        match self {
            BondType::None => 0,
            BondType::Single => 2,
            BondType::Double => 4,
            BondType::Triple => 6,
            BondType::Aromatic => 3,
        }
    }

    /// Stable small integer code (used by hashing and one-hot encodings).
    pub fn code(self) -> u8 {
        match self {
            BondType::None => 0,
            BondType::Single => 1,
            BondType::Double => 2,
            BondType::Triple => 3,
            BondType::Aromatic => 4,
        }
    }

    pub fn is_multiple(self) -> bool {
        matches!(self, BondType::Double | BondType::Triple | BondType::Aromatic)
    }
}

impl fmt::Display for BondType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BondType::None => "none",
            BondType::Single => "single",
            BondType::Double => "double",
            BondType::Triple => "triple",
            BondType::Aromatic => "aromatic",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for BondType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "0" => Ok(BondType::None),
            "single" | "1" => Ok(BondType::Single),
            "double" | "2" => Ok(BondType::Double),
            "triple" | "3" => Ok(BondType::Triple),
            "aromatic" | "1.5" | "a" => Ok(BondType::Aromatic),
            other => Err(format!("unknown bond type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub map_number: Option<u32>,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Hydrogen count written in a bracket atom, if any.
    pub explicit_h: Option<u8>,
    /// Number of heavy-atom neighbors. Derived.
    pub degree: u8,
    /// Hydrogens implied by the valence table. Derived.
    pub implicit_h: u8,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            map_number: None,
            formal_charge: 0,
            aromatic: false,
            explicit_h: None,
            degree: 0,
            implicit_h: 0,
        }
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h.unwrap_or(0) + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    /// Lower atom index.
    pub a: usize,
    /// Higher atom index.
    pub b: usize,
    pub order: BondType,
    pub conjugated: bool,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("bond {bond} references atom {atom} but the graph has {n_atoms} atoms")]
    AtomOutOfRange {
        bond: usize,
        atom: usize,
        n_atoms: usize,
    },
    #[error("bond {0} is a self-loop")]
    SelfLoop(usize),
    #[error("atoms {0} and {1} are bonded more than once")]
    DuplicateBond(usize, usize),
    #[error("bond {0} has type none")]
    NoneBond(usize),
}

/// Labeled multigraph of atoms and typed bonds. May hold several
/// connected components.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    valence_warnings: Vec<usize>,
}

impl MolGraph {
    /// Builds a graph and populates every derived field. Bond endpoints are
    /// normalized so that `a < b`; bond order in the list is preserved.
    pub fn new(
        atoms: Vec<Atom>,
        bonds: impl IntoIterator<Item = (usize, usize, BondType)>,
    ) -> Result<MolGraph, GraphError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut out = Vec::new();
        for (idx, (u, v, order)) in bonds.into_iter().enumerate() {
            for atom in [u, v] {
                if atom >= n {
                    return Err(GraphError::AtomOutOfRange {
                        bond: idx,
                        atom,
                        n_atoms: n,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(idx));
            }
            if order == BondType::None {
                return Err(GraphError::NoneBond(idx));
            }
            if adjacency[u].iter().any(|&(w, _)| w == v) {
                return Err(GraphError::DuplicateBond(u.min(v), u.max(v)));
            }
            adjacency[u].push((v, idx));
            adjacency[v].push((u, idx));
            out.push(Bond {
                a: u.min(v),
                b: u.max(v),
                order,
                conjugated: false,
                in_ring: false,
            });
        }
        let mut g = MolGraph {
            atoms,
            bonds: out,
            adjacency,
            valence_warnings: Vec::new(),
        };
        g.derive();
        Ok(g)
    }

    pub fn empty() -> MolGraph {
        MolGraph {
            atoms: Vec::new(),
            bonds: Vec::new(),
            adjacency: Vec::new(),
            valence_warnings: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor, bond index)` pairs of atom `i`, in bond-insertion order.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    /// Index of the bond joining `u` and `v`, if any.
    pub fn bond_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency
            .get(u)?
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, b)| b)
    }

    /// Bond type between two atoms, `BondType::None` when unbonded.
    pub fn bond_type(&self, u: usize, v: usize) -> BondType {
        self.bond_between(u, v)
            .map_or(BondType::None, |b| self.bonds[b].order)
    }

    /// Atoms whose bond-order sum exceeds the maximum valence.
    pub fn valence_warnings(&self) -> &[usize] {
        &self.valence_warnings
    }

    /// Sum of bond orders at an atom, floored after summing.
    pub fn bond_order_sum(&self, i: usize) -> u32 {
        let half: u32 = self.adjacency[i]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.half_order())
            .sum();
        half / 2
    }

    /// Atom index carrying `map`, if any.
    pub fn atom_by_map(&self, map: u32) -> Option<usize> {
        self.atoms.iter().position(|a| a.map_number == Some(map))
    }

    /// Connected-component id per atom; ids are assigned in order of each
    /// component's lowest atom index.
    pub fn components(&self) -> Vec<usize> {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn n_components(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    /// Unweighted shortest-path distances from `source` (`usize::MAX` when
    /// unreachable).
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.atoms.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Copy of the graph restricted to `keep` (atom order preserved).
    pub fn subgraph(&self, keep: &[usize]) -> MolGraph {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
            atoms.push(self.atoms[old].clone());
        }
        let bonds: Vec<_> = self
            .bonds
            .iter()
            .filter(|b| remap[b.a] != usize::MAX && remap[b.b] != usize::MAX)
            .map(|b| (remap[b.a], remap[b.b], b.order))
            .collect();
        MolGraph::new(atoms, bonds).expect("subgraph of a valid graph is valid")
    }

    /// Relabels atoms: atom `i` of `self` becomes atom `perm[i]`. Bonds are
    /// listed in the original order.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = vec![Atom::new(Element::CARBON); self.atoms.len()];
        for (i, a) in self.atoms.iter().enumerate() {
            atoms[perm[i]] = a.clone();
        }
        let bonds: Vec<_> = self
            .bonds
            .iter()
            .map(|b| (perm[b.a], perm[b.b], b.order))
            .collect();
        MolGraph::new(atoms, bonds).expect("permutation of a valid graph is valid")
    }

    /// Disjoint union; atoms of `other` follow atoms of `self`.
    pub fn merged(&self, other: &MolGraph) -> MolGraph {
        let offset = self.atoms.len();
        let atoms: Vec<_> = self.atoms.iter().chain(other.atoms.iter()).cloned().collect();
        let bonds: Vec<_> = self
            .bonds
            .iter()
            .map(|b| (b.a, b.b, b.order))
            .chain(other.bonds.iter().map(|b| (b.a + offset, b.b + offset, b.order)))
            .collect();
        MolGraph::new(atoms, bonds).expect("union of valid graphs is valid")
    }

    /// Largest bond-order sum allowed at an atom, `None` when the element has
    /// no table entry.
    pub fn max_valence(&self, i: usize) -> Option<u32> {
        let a = &self.atoms[i];
        element::max_valence(a.element, a.formal_charge)
    }

    /// Sets atom map numbers to `1..=n` by index.
    pub fn with_index_maps(&self) -> MolGraph {
        let mut g = self.clone();
        for (i, a) in g.atoms.iter_mut().enumerate() {
            a.map_number = Some(i as u32 + 1);
        }
        g
    }

    /// Moves every atom's implied hydrogens into its written H count, as a
    /// mapped SMILES with all-bracket atoms would state them. Total H is
    /// unchanged; `implicit_h` becomes zero except where a written count
    /// was already short of the valence.
    pub fn with_explicit_hydrogens(&self) -> MolGraph {
        let mut g = self.clone();
        for a in &mut g.atoms {
            a.explicit_h = Some(a.total_h());
            a.implicit_h = 0;
        }
        g
    }

    pub(crate) fn derive(&mut self) {
        let n = self.atoms.len();
        self.valence_warnings.clear();
        for i in 0..n {
            let sum = self.bond_order_sum(i);
            let atom = &self.atoms[i];
            let h_val = element::hydrogen_valence(atom.element, atom.formal_charge);
            let explicit = u32::from(atom.explicit_h.unwrap_or(0));
            let implicit = h_val.saturating_sub(sum).saturating_sub(explicit);
            if let Some(max) = element::max_valence(atom.element, atom.formal_charge) {
                if sum > max {
                    self.valence_warnings.push(i);
                }
            }
            let degree = self.adjacency[i].len();
            let atom = &mut self.atoms[i];
            atom.implicit_h = implicit.min(u32::from(u8::MAX)) as u8;
            atom.degree = degree.min(usize::from(u8::MAX)) as u8;
        }
        let bridges = find_bridges(n, &self.adjacency, self.bonds.len());
        let carries_multiple: Vec<bool> = (0..n)
            .map(|i| {
                self.adjacency[i]
                    .iter()
                    .any(|&(_, b)| self.bonds[b].order.is_multiple())
            })
            .collect();
        for (idx, bond) in self.bonds.iter_mut().enumerate() {
            bond.in_ring = !bridges[idx];
            bond.conjugated = bond.order == BondType::Aromatic
                || (carries_multiple[bond.a] && carries_multiple[bond.b]);
        }
    }
}

/// Marks bridge bonds with Tarjan's low-link method (iterative).
fn find_bridges(n: usize, adjacency: &[Vec<(usize, usize)>], n_bonds: usize) -> Vec<bool> {
    let mut is_bridge = vec![false; n_bonds];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    // (vertex, bond used to enter it, next neighbor cursor)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(frame) = stack.last_mut() {
            let (v, parent_bond, cursor) = *frame;
            if cursor < adjacency[v].len() {
                frame.2 += 1;
                let (w, b) = adjacency[v][cursor];
                if b == parent_bond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, b, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    is_bridge
}
