use super::{BondType, MolGraph, SUPPORTED_ELEMENTS};

const ELEMENT_SLOTS: usize = SUPPORTED_ELEMENTS.len() + 1;
const DEGREE_SLOTS: usize = 6;
const H_SLOTS: usize = 5;
const IMPLICIT_SLOTS: usize = 6;
const CHARGE_SLOTS: usize = 3;

/// Atom feature width: element (13 + unknown), degree 0..5, total H 0..4,
/// implicit valence 0..5, aromatic bit.
pub const ATOM_FDIM: usize = ELEMENT_SLOTS + DEGREE_SLOTS + H_SLOTS + IMPLICIT_SLOTS + 1;
/// Atom feature width with the optional formal-charge one-hot (−, 0, +).
pub const ATOM_FDIM_WITH_CHARGE: usize = ATOM_FDIM + CHARGE_SLOTS;
/// Bond feature width: type one-hot (single, double, triple, aromatic),
/// conjugated bit, in-ring bit.
pub const BOND_FDIM: usize = 6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FeatureOptions {
    pub include_charge: bool,
}

impl FeatureOptions {
    pub fn atom_dim(self) -> usize {
        if self.include_charge {
            ATOM_FDIM_WITH_CHARGE
        } else {
            ATOM_FDIM
        }
    }
}

pub fn atom_features(g: &MolGraph, atom: usize) -> Vec<f64> {
    atom_features_with(g, atom, FeatureOptions::default())
}

pub fn atom_features_with(g: &MolGraph, atom: usize, opts: FeatureOptions) -> Vec<f64> {
    let a = g.atom(atom);
    let mut f = vec![0.0; opts.atom_dim()];
    let mut offset = 0;
    let mut hot = |offset: &mut usize, slot: usize, width: usize| {
        f[*offset + slot.min(width - 1)] = 1.0;
        *offset += width;
    };
    hot(&mut offset, a.element.feature_slot(), ELEMENT_SLOTS);
    hot(&mut offset, usize::from(a.degree), DEGREE_SLOTS);
    hot(&mut offset, usize::from(a.total_h()), H_SLOTS);
    hot(&mut offset, usize::from(a.implicit_h), IMPLICIT_SLOTS);
    if opts.include_charge {
        let slot = match a.formal_charge.signum() {
            -1 => 0,
            0 => 1,
            _ => 2,
        };
        f[offset + 1 + slot] = 1.0;
    }
    if a.aromatic {
        f[offset] = 1.0;
    }
    f
}

pub fn bond_features(g: &MolGraph, bond: usize) -> [f64; BOND_FDIM] {
    let b = &g.bonds()[bond];
    let mut f = [0.0; BOND_FDIM];
    let slot = match b.order {
        BondType::Single | BondType::None => 0,
        BondType::Double => 1,
        BondType::Triple => 2,
        BondType::Aromatic => 3,
    };
    f[slot] = 1.0;
    f[4] = f64::from(u8::from(b.conjugated));
    f[5] = f64::from(u8::from(b.in_ring));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    const DEGREE0: usize = ELEMENT_SLOTS;
    const H0: usize = DEGREE0 + DEGREE_SLOTS;
    const IMPL0: usize = H0 + H_SLOTS;
    const AROM: usize = IMPL0 + IMPLICIT_SLOTS;

    #[test]
    fn dimensions() {
        assert_eq!(ATOM_FDIM, 32);
        let g = parse_smiles("C").unwrap();
        assert_eq!(atom_features(&g, 0).len(), ATOM_FDIM);
        let opts = FeatureOptions { include_charge: true };
        assert_eq!(atom_features_with(&g, 0, opts).len(), ATOM_FDIM_WITH_CHARGE);
    }

    #[test]
    fn methane() {
        let g = parse_smiles("[CH4:1]").unwrap();
        let f = atom_features(&g, 0);
        assert_eq!(f[0], 1.0);
        assert_eq!(f[DEGREE0], 1.0);
        assert_eq!(f[H0 + 4], 1.0);
        assert_eq!(f[AROM], 0.0);
        assert_eq!(f.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn benzene_carbon() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let f = atom_features(&g, 0);
        assert_eq!(f[AROM], 1.0);
        assert_eq!(f[DEGREE0 + 2], 1.0);
        assert_eq!(f[H0 + 1], 1.0);
    }

    #[test]
    fn amide_nitrogen_has_two_hydrogens() {
        let g = parse_smiles("CC(=O)N").unwrap();
        let f = atom_features(&g, 3);
        assert_eq!(f[1], 1.0, "nitrogen slot");
        assert_eq!(f[H0 + 2], 1.0);
        assert_eq!(f[IMPL0 + 2], 1.0);
    }

    #[test]
    fn one_hots_clamp() {
        let g = parse_smiles("[Pd](C)(C)(C)(C)(C)(C)C").unwrap();
        let f = atom_features(&g, 0);
        assert_eq!(f[ELEMENT_SLOTS - 1], 1.0, "unknown bucket");
        assert_eq!(f[DEGREE0 + 5], 1.0, "degree 7 clamps to the last slot");
    }

    #[test]
    fn charge_slots() {
        let g = parse_smiles("[NH4+].[O-]C").unwrap();
        let opts = FeatureOptions { include_charge: true };
        let n = atom_features_with(&g, 0, opts);
        let o = atom_features_with(&g, 1, opts);
        assert_eq!(n[AROM + 3], 1.0);
        assert_eq!(o[AROM + 1], 1.0);
    }

    #[test]
    fn bond_feature_cases() {
        let g = parse_smiles("CC").unwrap();
        assert_eq!(bond_features(&g, 0), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let g = parse_smiles("c1ccccc1").unwrap();
        for b in 0..6 {
            assert_eq!(bond_features(&g, b), [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        }
        // C=O in CC(=O)C=C: both ends carry a double bond
        let g = parse_smiles("CC(=O)C=C").unwrap();
        let co = g.bond_between(1, 2).unwrap();
        assert_eq!(bond_features(&g, co), [0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        // C(=O)-C(=C): single bond joining two multiply-bonded carbons
        let cc = g.bond_between(1, 3).unwrap();
        assert_eq!(bond_features(&g, cc)[4], 1.0);
        let first = g.bond_between(0, 1).unwrap();
        assert_eq!(bond_features(&g, first)[4], 0.0);
    }
}
