use super::{BondType, MolGraph};
use std::fmt;
use thiserror::Error;

/// One bond change: the pair `(u, v)` (with `u < v`) takes bond type `new`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edit {
    pub u: usize,
    pub v: usize,
    pub new: BondType,
}

impl Edit {
    pub fn new(a: usize, b: usize, new: BondType) -> Edit {
        Edit {
            u: a.min(b),
            v: a.max(b),
            new,
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("edit joins atom {0} to itself")]
    SelfPair(usize),
    #[error("pair ({0}, {1}) is edited more than once")]
    DuplicatePair(usize, usize),
    #[error("edit references atom {atom} but the graph has {n_atoms} atoms")]
    AtomOutOfRange { atom: usize, n_atoms: usize },
    #[error("pair ({u}, {v}) already has bond type {current}")]
    Unchanged {
        u: usize,
        v: usize,
        current: BondType,
    },
    #[error("no atom carries map number {0}")]
    UnknownMap(u32),
}

/// A set of bond edits over distinct atom pairs, kept sorted by pair.
/// Also the identity of a candidate product.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditSet {
    edits: Vec<Edit>,
}

impl EditSet {
    pub fn new(edits: impl IntoIterator<Item = Edit>) -> Result<EditSet, EditError> {
        let mut edits: Vec<Edit> = edits
            .into_iter()
            .map(|e| Edit::new(e.u, e.v, e.new))
            .collect();
        if let Some(e) = edits.iter().find(|e| e.u == e.v) {
            return Err(EditError::SelfPair(e.u));
        }
        edits.sort_unstable();
        if let Some(w) = edits.windows(2).find(|w| w[0].pair() == w[1].pair()) {
            return Err(EditError::DuplicatePair(w[0].u, w[0].v));
        }
        Ok(EditSet { edits })
    }

    /// Builds an edit set from atom map numbers.
    pub fn from_maps(
        g: &MolGraph,
        edits: impl IntoIterator<Item = (u32, u32, BondType)>,
    ) -> Result<EditSet, EditError> {
        let mut out = Vec::new();
        for (a, b, t) in edits {
            let u = g.atom_by_map(a).ok_or(EditError::UnknownMap(a))?;
            let v = g.atom_by_map(b).ok_or(EditError::UnknownMap(b))?;
            out.push(Edit::new(u, v, t));
        }
        EditSet::new(out)
    }

    pub fn empty() -> EditSet {
        EditSet::default()
    }

    pub fn edits(&self) -> &[Edit] {
        &self.edits
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edits.iter().map(Edit::pair)
    }

    /// Atoms touched by any edit, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<usize> {
        let mut atoms: Vec<usize> = self.edits.iter().flat_map(|e| [e.u, e.v]).collect();
        atoms.sort_unstable();
        atoms.dedup();
        atoms
    }

    /// Map-number form `(map_u, map_v, type)`, for display.
    pub fn to_maps(&self, g: &MolGraph) -> Vec<(Option<u32>, Option<u32>, BondType)> {
        self.edits
            .iter()
            .map(|e| (g.atom(e.u).map_number, g.atom(e.v).map_number, e.new))
            .collect()
    }
}

impl fmt::Display for EditSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.edits.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({},{})->{}", e.u, e.v, e.new)?;
        }
        f.write_str("}")
    }
}

/// Applies bond edits to a copy of `reactants`. Edited bonds keep their
/// position in the bond list, deleted bonds are dropped and new bonds are
/// appended in edit order. Atoms are never added or removed. Touched atoms
/// lose their bracket hydrogen count so hydrogens are re-derived from the
/// valence table.
pub fn apply_edits(reactants: &MolGraph, edits: &EditSet) -> Result<MolGraph, EditError> {
    let n = reactants.n_atoms();
    for e in edits.edits() {
        if e.v >= n {
            return Err(EditError::AtomOutOfRange { atom: e.v, n_atoms: n });
        }
        let current = reactants.bond_type(e.u, e.v);
        if current == e.new {
            return Err(EditError::Unchanged {
                u: e.u,
                v: e.v,
                current,
            });
        }
    }
    if edits.is_empty() {
        return Ok(reactants.clone());
    }
    let lookup = |u: usize, v: usize| {
        edits
            .edits()
            .binary_search_by(|e| e.pair().cmp(&(u, v)))
            .ok()
            .map(|i| edits.edits()[i].new)
    };
    let mut bonds = Vec::with_capacity(reactants.n_bonds() + edits.len());
    for b in reactants.bonds() {
        match lookup(b.a, b.b) {
            Some(BondType::None) => {}
            Some(t) => bonds.push((b.a, b.b, t)),
            None => bonds.push((b.a, b.b, b.order)),
        }
    }
    for e in edits.edits() {
        if reactants.bond_between(e.u, e.v).is_none() {
            bonds.push((e.u, e.v, e.new));
        }
    }
    let mut atoms = reactants.atoms().to_vec();
    for atom in edits.atoms() {
        atoms[atom].explicit_h = None;
    }
    Ok(MolGraph::new(atoms, bonds).expect("edits keep the graph valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::{parse_smiles, write_smiles};

    #[test]
    fn substitution_leaves_chloride_isolated() {
        let r = parse_smiles("[CH3:1][Cl:2].[NH2:3][CH3:4]").unwrap();
        let edits =
            EditSet::from_maps(&r, [(1, 2, BondType::None), (1, 3, BondType::Single)]).unwrap();
        let p = apply_edits(&r, &edits).unwrap();
        assert_eq!(p.n_atoms(), 4);
        assert_eq!(p.n_components(), 2);
        assert_eq!(p.bond_type(0, 2), BondType::Single);
        assert_eq!(p.bond_type(0, 1), BondType::None);
        assert_eq!(p.atom(2).total_h(), 1);
        assert_eq!(p.atom(0).total_h(), 3);
        assert_eq!(write_smiles(&p), "[CH3:1][NH:3][CH3:4].[ClH:2]");
        // input untouched
        assert_eq!(r.bond_type(0, 1), BondType::Single);
    }

    #[test]
    fn empty_edit_is_identity() {
        let r = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(apply_edits(&r, &EditSet::empty()).unwrap(), r);
    }

    #[test]
    fn rejects_bad_edits() {
        let r = parse_smiles("CC").unwrap();
        assert_eq!(
            EditSet::new([Edit::new(1, 1, BondType::Single)]).unwrap_err(),
            EditError::SelfPair(1)
        );
        assert_eq!(
            EditSet::new([Edit::new(0, 1, BondType::Double), Edit::new(1, 0, BondType::None)])
                .unwrap_err(),
            EditError::DuplicatePair(0, 1)
        );
        let same = EditSet::new([Edit::new(0, 1, BondType::Single)]).unwrap();
        assert!(matches!(apply_edits(&r, &same), Err(EditError::Unchanged { .. })));
        let far = EditSet::new([Edit::new(0, 5, BondType::Single)]).unwrap();
        assert!(matches!(apply_edits(&r, &far), Err(EditError::AtomOutOfRange { .. })));
    }

    #[test]
    fn untouched_bonds_keep_their_order() {
        let r = parse_smiles("CCCCO").unwrap();
        let edits = EditSet::new([Edit::new(1, 2, BondType::None), Edit::new(0, 4, BondType::Single)]).unwrap();
        let p = apply_edits(&r, &edits).unwrap();
        let pairs: Vec<_> = p.bonds().iter().map(|b| (b.a, b.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (3, 4), (0, 4)]);
    }
}
