use std::fmt;

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// A chemical element, stored as its atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

impl Element {
    pub const HYDROGEN: Element = Element(1);
    pub const BORON: Element = Element(5);
    pub const CARBON: Element = Element(6);
    pub const NITROGEN: Element = Element(7);
    pub const OXYGEN: Element = Element(8);
    pub const FLUORINE: Element = Element(9);
    pub const SILICON: Element = Element(14);
    pub const PHOSPHORUS: Element = Element(15);
    pub const SULFUR: Element = Element(16);
    pub const CHLORINE: Element = Element(17);
    pub const SELENIUM: Element = Element(34);
    pub const BROMINE: Element = Element(35);
    pub const TIN: Element = Element(50);
    pub const IODINE: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (1..=118).contains(&z).then_some(Element(z))
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|&s| s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[usize::from(self.0) - 1]
    }

    /// Slot in the element one-hot; the last slot is the unknown bucket.
    pub fn feature_slot(self) -> usize {
        SUPPORTED_ELEMENTS
            .iter()
            .position(|&e| e == self)
            .unwrap_or(SUPPORTED_ELEMENTS.len())
    }

    pub fn is_supported(self) -> bool {
        SUPPORTED_ELEMENTS.contains(&self)
    }

    /// Elements that may appear outside brackets in SMILES.
    pub fn in_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Elements with a lowercase aromatic SMILES form.
    pub fn has_aromatic_form(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Elements with a dedicated feature slot, in one-hot order.
pub const SUPPORTED_ELEMENTS: [Element; 13] = [
    Element::CARBON,
    Element::NITROGEN,
    Element::OXYGEN,
    Element::SULFUR,
    Element::PHOSPHORUS,
    Element::FLUORINE,
    Element::CHLORINE,
    Element::BROMINE,
    Element::IODINE,
    Element::BORON,
    Element::SILICON,
    Element::TIN,
    Element::SELENIUM,
];

/// Neutral valences as (valence used for implicit H, maximum valence).
fn neutral_valence(el: Element) -> Option<(u32, u32)> {
    Some(match el {
        Element::CARBON | Element::SILICON | Element::TIN => (4, 4),
        Element::NITROGEN => (3, 3),
        Element::OXYGEN => (2, 2),
        Element::SULFUR | Element::SELENIUM => (2, 6),
        Element::PHOSPHORUS => (3, 5),
        Element::FLUORINE | Element::CHLORINE | Element::BROMINE | Element::IODINE => (1, 1),
        Element::BORON => (3, 3),
        Element::HYDROGEN => (1, 1),
        _ => return None,
    })
}

fn adjust_for_charge(el: Element, valence: u32, charge: i8) -> u32 {
    let magnitude = u32::from(charge.unsigned_abs());
    match charge.signum() {
        1 if matches!(
            el,
            Element::NITROGEN
                | Element::OXYGEN
                | Element::SULFUR
                | Element::PHOSPHORUS
                | Element::SELENIUM
        ) =>
        {
            valence + magnitude
        }
        // boranes gain a bond as anions (BH4-)
        -1 if el == Element::BORON => valence + magnitude,
        0 => valence,
        _ => valence.saturating_sub(magnitude),
    }
}

/// Valence used to derive implicit hydrogens; 0 for unknown elements.
pub(crate) fn hydrogen_valence(el: Element, charge: i8) -> u32 {
    neutral_valence(el).map_or(0, |(h, _)| adjust_for_charge(el, h, charge))
}

/// Maximum total bond order, `None` for elements without a table entry.
pub(crate) fn max_valence(el: Element, charge: i8) -> Option<u32> {
    neutral_valence(el).map(|(_, max)| adjust_for_charge(el, max, charge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for z in 1..=118u8 {
            let e = Element::from_atomic_number(z).unwrap();
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
        assert_eq!(Element::from_symbol("Xx"), None);
    }

    #[test]
    fn unknown_elements_share_the_bucket() {
        let li = Element::from_symbol("Li").unwrap();
        let pd = Element::from_symbol("Pd").unwrap();
        assert_eq!(li.feature_slot(), SUPPORTED_ELEMENTS.len());
        assert_eq!(pd.feature_slot(), SUPPORTED_ELEMENTS.len());
        assert_eq!(Element::CARBON.feature_slot(), 0);
    }

    #[test]
    fn charged_valences() {
        assert_eq!(hydrogen_valence(Element::NITROGEN, 1), 4);
        assert_eq!(hydrogen_valence(Element::OXYGEN, -1), 1);
        assert_eq!(hydrogen_valence(Element::BORON, -1), 4);
        assert_eq!(hydrogen_valence(Element::CARBON, 1), 3);
        assert_eq!(max_valence(Element::SULFUR, 0), Some(6));
        assert_eq!(hydrogen_valence(Element::SULFUR, 0), 2);
        assert_eq!(max_valence(Element::from_symbol("Pd").unwrap(), 0), None);
    }
}
