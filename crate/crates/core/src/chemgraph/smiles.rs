//! SMILES reading and writing.
//!
//! Supported grammar:
//!
//! * organic-subset atoms `B C N O P S F Cl Br I` and aromatic `b c n o p s`;
//! * bracket atoms `[isotope? symbol chirality? Hn? charge? :map?]`, where the
//!   symbol is any element (or aromatic `se`, `as`); isotope and chirality
//!   are read and discarded;
//! * bonds `- = # :` plus `/` and `\`, which are read as single bonds;
//! * branches `( )`, ring closures `0-9` and `%nn`, and `.` between
//!   components.
//!
//! No aromaticity perception is done: lowercase atoms are aromatic, and an
//! unmarked bond between two aromatic atoms is aromatic unless it is not on
//! a ring, in which case it is single. Bracket hydrogens (`[H]`) attached to
//! a single heavy atom are folded into that atom's hydrogen count.

use super::{Atom, BondType, Element, MolGraph};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("unexpected character '{0}'")]
    Unexpected(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unsupported element '{0}'")]
    UnsupportedElement(String),
    #[error("ring closure {0} was never closed")]
    UnclosedRing(u32),
    #[error("ring closure {0} bond symbols disagree")]
    RingBondMismatch(u32),
    #[error("ring closure {0} joins an atom to itself")]
    RingSelfLoop(u32),
    #[error("atoms are bonded twice")]
    DuplicateBond,
    #[error("branch opened without a preceding atom")]
    BranchWithoutAtom,
    #[error("unbalanced parenthesis")]
    UnbalancedParen,
    #[error("bond symbol not followed by an atom")]
    DanglingBond,
    #[error("ring closure without a preceding atom")]
    RingWithoutAtom,
    #[error("number too large")]
    NumberTooLarge,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES error at byte {offset}: {kind}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

struct RawBond {
    a: usize,
    b: usize,
    order: BondType,
    implicit: bool,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bracket_h: Vec<bool>,
    bonds: Vec<RawBond>,
}

impl<'a> Parser<'a> {
    fn err(&self, offset: usize, kind: SmilesErrorKind) -> SmilesError {
        SmilesError { offset, kind }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<Option<u32>, SmilesError> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(c @ b'0'..=b'9') = self.peek() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(c - b'0')))
                .ok_or_else(|| self.err(start, SmilesErrorKind::NumberTooLarge))?;
            self.pos += 1;
        }
        Ok((self.pos > start).then_some(value))
    }

    fn add_bond(&mut self, a: usize, b: usize, explicit: Option<BondType>, at: usize) -> Result<(), SmilesError> {
        if self.bonds.iter().any(|r| (r.a == a && r.b == b) || (r.a == b && r.b == a)) {
            return Err(self.err(at, SmilesErrorKind::DuplicateBond));
        }
        let (order, implicit) = match explicit {
            Some(order) => (order, false),
            None if self.atoms[a].aromatic && self.atoms[b].aromatic => (BondType::Aromatic, true),
            None => (BondType::Single, false),
        };
        self.bonds.push(RawBond { a, b, order, implicit });
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let rest = &self.text[self.pos..];
        let (symbol, aromatic, len) = if rest.starts_with(b"Cl") {
            ("Cl", false, 2)
        } else if rest.starts_with(b"Br") {
            ("Br", false, 2)
        } else {
            match rest[0] {
                b'B' => ("B", false, 1),
                b'C' => ("C", false, 1),
                b'N' => ("N", false, 1),
                b'O' => ("O", false, 1),
                b'P' => ("P", false, 1),
                b'S' => ("S", false, 1),
                b'F' => ("F", false, 1),
                b'I' => ("I", false, 1),
                b'b' => ("B", true, 1),
                b'c' => ("C", true, 1),
                b'n' => ("N", true, 1),
                b'o' => ("O", true, 1),
                b'p' => ("P", true, 1),
                b's' => ("S", true, 1),
                c if c.is_ascii_alphabetic() => {
                    let end = rest
                        .iter()
                        .skip(1)
                        .position(|c| !c.is_ascii_lowercase())
                        .map_or(rest.len(), |p| p + 1)
                        .min(2);
                    let sym = String::from_utf8_lossy(&rest[..end]).into_owned();
                    return Err(self.err(start, SmilesErrorKind::UnsupportedElement(sym)));
                }
                c => return Err(self.err(start, SmilesErrorKind::Unexpected(c as char))),
            }
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(symbol).expect("organic subset symbol"));
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1; // '['
        self.number()?; // isotope, discarded
        let sym_start = self.pos;
        let rest = &self.text[self.pos..];
        let (element, aromatic) = if rest.starts_with(b"se") {
            self.pos += 2;
            (Element::SELENIUM, true)
        } else if rest.starts_with(b"as") {
            self.pos += 2;
            (Element::from_symbol("As").expect("arsenic"), true)
        } else {
            match rest.first() {
                Some(&c @ (b'b' | b'c' | b'n' | b'o' | b'p' | b's')) => {
                    self.pos += 1;
                    let upper = (c as char).to_ascii_uppercase().to_string();
                    (Element::from_symbol(&upper).expect("aromatic subset"), true)
                }
                Some(c) if c.is_ascii_uppercase() => {
                    let two = rest
                        .get(..2)
                        .filter(|s| s[1].is_ascii_lowercase())
                        .and_then(|s| Element::from_symbol(std::str::from_utf8(s).ok()?));
                    if let Some(e) = two {
                        self.pos += 2;
                        (e, false)
                    } else if let Some(e) = Element::from_symbol(&(*c as char).to_string()) {
                        self.pos += 1;
                        (e, false)
                    } else {
                        let end = if rest.get(1).is_some_and(|c| c.is_ascii_lowercase()) { 2 } else { 1 };
                        let sym = String::from_utf8_lossy(&rest[..end]).into_owned();
                        return Err(self.err(sym_start, SmilesErrorKind::UnsupportedElement(sym)));
                    }
                }
                Some(&c) => {
                    let sym = (c as char).to_string();
                    return Err(self.err(sym_start, SmilesErrorKind::UnsupportedElement(sym)));
                }
                None => return Err(self.err(self.pos, SmilesErrorKind::UnexpectedEnd)),
            }
        };
        // chirality, discarded
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }
        for class in [b"TH", b"AL", b"SP", b"TB", b"OH"] {
            if self.text[self.pos..].starts_with(class) {
                self.pos += 2;
                self.number()?;
                break;
            }
        }
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            let h = self.number()?.unwrap_or(1);
            atom.explicit_h = Some(u8::try_from(h).map_err(|_| self.err(self.pos, SmilesErrorKind::NumberTooLarge))?);
        } else {
            atom.explicit_h = Some(0);
        }
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let unit: i32 = if sign == b'+' { 1 } else { -1 };
            let charge = if let Some(n) = self.number()? {
                unit * n as i32
            } else {
                let mut c = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    c += unit;
                }
                c
            };
            atom.formal_charge = i8::try_from(charge).map_err(|_| self.err(self.pos, SmilesErrorKind::NumberTooLarge))?;
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            let at = self.pos;
            let map = self.number()?.ok_or_else(|| match self.peek() {
                Some(c) => self.err(at, SmilesErrorKind::Unexpected(c as char)),
                None => self.err(at, SmilesErrorKind::UnexpectedEnd),
            })?;
            atom.map_number = (map > 0).then_some(map);
        }
        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(c) => return Err(self.err(self.pos, SmilesErrorKind::Unexpected(c as char))),
            None => return Err(self.err(open, SmilesErrorKind::UnexpectedEnd)),
        }
        Ok(atom)
    }

    fn parse(mut self) -> Result<MolGraph, SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        let mut pending: Option<(BondType, usize)> = None;
        let mut rings: HashMap<u32, (usize, Option<BondType>, usize)> = HashMap::new();

        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(self.err(at, SmilesErrorKind::BranchWithoutAtom));
                    }
                    if pending.is_some() {
                        return Err(self.err(at, SmilesErrorKind::DanglingBond));
                    }
                    branches.push((prev, at));
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(self.err(at, SmilesErrorKind::DanglingBond));
                    }
                    let (p, _) = branches
                        .pop()
                        .ok_or_else(|| self.err(at, SmilesErrorKind::UnbalancedParen))?;
                    prev = p;
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return Err(self.err(at, SmilesErrorKind::DanglingBond));
                    }
                    if !branches.is_empty() {
                        return Err(self.err(at, SmilesErrorKind::UnbalancedParen));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(self.err(at, SmilesErrorKind::Unexpected(c as char)));
                    }
                    let order = match c {
                        b'=' => BondType::Double,
                        b'#' => BondType::Triple,
                        b':' => BondType::Aromatic,
                        _ => BondType::Single,
                    };
                    pending = Some((order, at));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let atom = prev.ok_or_else(|| self.err(at, SmilesErrorKind::RingWithoutAtom))?;
                    let label = if c == b'%' {
                        self.pos += 1;
                        let digits = self.text.get(self.pos..self.pos + 2);
                        match digits {
                            Some([a @ b'0'..=b'9', b @ b'0'..=b'9']) => {
                                self.pos += 2;
                                u32::from(a - b'0') * 10 + u32::from(b - b'0')
                            }
                            _ => {
                                return Err(match self.peek() {
                                    Some(c) => self.err(self.pos, SmilesErrorKind::Unexpected(c as char)),
                                    None => self.err(self.pos, SmilesErrorKind::UnexpectedEnd),
                                })
                            }
                        }
                    } else {
                        self.pos += 1;
                        u32::from(c - b'0')
                    };
                    let bond_here = pending.take().map(|(o, _)| o);
                    if let Some((other, bond_there, _)) = rings.remove(&label) {
                        if other == atom {
                            return Err(self.err(at, SmilesErrorKind::RingSelfLoop(label)));
                        }
                        let order = match (bond_there, bond_here) {
                            (Some(x), Some(y)) if x != y => {
                                return Err(self.err(at, SmilesErrorKind::RingBondMismatch(label)))
                            }
                            (x, y) => x.or(y),
                        };
                        self.add_bond(other, atom, order, at)?;
                    } else {
                        rings.insert(label, (atom, bond_here, at));
                    }
                }
                b'[' | b'A'..=b'Z' | b'a'..=b'z' | b'*' => {
                    if c == b'*' {
                        return Err(self.err(at, SmilesErrorKind::UnsupportedElement("*".into())));
                    }
                    let atom = if c == b'[' { self.bracket_atom()? } else { self.organic_atom()? };
                    self.atoms.push(atom);
                    self.bracket_h.push(c == b'[');
                    let idx = self.atoms.len() - 1;
                    if let Some(p) = prev {
                        let order = pending.take().map(|(o, _)| o);
                        self.add_bond(p, idx, order, at)?;
                    }
                    prev = Some(idx);
                }
                other => return Err(self.err(at, SmilesErrorKind::Unexpected(other as char))),
            }
        }
        if let Some((_, at)) = pending {
            return Err(self.err(at, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, at)) = branches.last() {
            return Err(self.err(at, SmilesErrorKind::UnbalancedParen));
        }
        if let Some((&label, &(_, _, at))) = rings.iter().min_by_key(|(_, v)| v.2) {
            return Err(self.err(at, SmilesErrorKind::UnclosedRing(label)));
        }
        Ok(self.finish())
    }

    fn finish(self) -> MolGraph {
        let Parser { mut atoms, bracket_h, bonds, .. } = self;
        // fold [H] atoms that hang off exactly one heavy atom
        let n = atoms.len();
        let mut drop = vec![false; n];
        for (i, atom) in atoms.iter().enumerate() {
            if atom.element != Element::HYDROGEN || atom.map_number.is_some() || !bracket_h[i] {
                continue;
            }
            let incident: Vec<&RawBond> = bonds.iter().filter(|b| b.a == i || b.b == i).collect();
            if let [bond] = incident.as_slice() {
                let other = if bond.a == i { bond.b } else { bond.a };
                if bond.order == BondType::Single && atoms[other].element != Element::HYDROGEN {
                    drop[i] = true;
                }
            }
        }
        for b in bonds.iter() {
            for (h, heavy) in [(b.a, b.b), (b.b, b.a)] {
                if drop[h] {
                    let e = atoms[heavy].explicit_h.unwrap_or(0);
                    atoms[heavy].explicit_h = Some(e.saturating_add(1));
                }
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut kept = Vec::with_capacity(n);
        for (i, atom) in atoms.into_iter().enumerate() {
            if !drop[i] {
                remap[i] = kept.len();
                kept.push(atom);
            }
        }
        let kept_bonds: Vec<&RawBond> = bonds.iter().filter(|b| !drop[b.a] && !drop[b.b]).collect();
        let triples = kept_bonds.iter().map(|b| (remap[b.a], remap[b.b], b.order));
        let mut g = MolGraph::new(kept, triples).expect("parser emits a valid graph");
        // unmarked aromatic-aromatic bonds off any ring are single
        let mut changed = false;
        let fixed: Vec<_> = kept_bonds
            .iter()
            .zip(g.bonds())
            .map(|(raw, bond)| {
                if raw.implicit && !bond.in_ring {
                    changed = true;
                    (bond.a, bond.b, BondType::Single)
                } else {
                    (bond.a, bond.b, bond.order)
                }
            })
            .collect();
        if changed {
            g = MolGraph::new(g.atoms().to_vec(), fixed).expect("same topology");
        }
        g
    }
}

/// Parses a SMILES string into a molecular graph with derived fields set.
/// Valence violations are not errors; see [`MolGraph::valence_warnings`].
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let text = text.trim();
    Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bracket_h: Vec::new(),
        bonds: Vec::new(),
    }
    .parse()
}

fn atom_text(g: &MolGraph, i: usize, out: &mut String) {
    let atom = g.atom(i);
    let lower = atom.aromatic && atom.element.has_aromatic_form();
    let symbol = if lower {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    let short_ok = atom.map_number.is_none()
        && atom.formal_charge == 0
        && atom.element.in_organic_subset()
        && (!atom.aromatic || lower)
        && {
            let h_val = super::element::hydrogen_valence(atom.element, 0);
            h_val.saturating_sub(g.bond_order_sum(i)) == u32::from(atom.total_h())
        };
    if short_ok {
        out.push_str(&symbol);
        return;
    }
    out.push('[');
    out.push_str(&symbol);
    match atom.total_h() {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", c.unsigned_abs());
        }
    }
    if let Some(m) = atom.map_number {
        let _ = write!(out, ":{m}");
    }
    out.push(']');
}

fn bond_text(g: &MolGraph, bond: usize) -> &'static str {
    let b = &g.bonds()[bond];
    let both_aromatic = g.atom(b.a).aromatic && g.atom(b.b).aromatic;
    match b.order {
        BondType::Single if both_aromatic => "-",
        BondType::Single | BondType::None => "",
        BondType::Double => "=",
        BondType::Triple => "#",
        BondType::Aromatic if both_aromatic && b.in_ring => "",
        BondType::Aromatic => ":",
    }
}

fn ring_label(d: u32) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

/// Writes a SMILES string by depth-first traversal from the lowest atom
/// index of each component, visiting neighbors in index order. The output
/// reparses to an isomorphic graph but is not canonical.
pub fn write_smiles(g: &MolGraph) -> String {
    let n = g.n_atoms();
    let sorted_nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            let mut v = g.neighbors(i).to_vec();
            v.sort_unstable();
            v
        })
        .collect();

    // pass 1: spanning forest and ring-closure bonds
    let mut visited = vec![false; n];
    let mut bond_seen = vec![false; g.n_bonds()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut ring_bonds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        roots.push(root);
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if top.1 >= sorted_nbrs[v].len() {
                stack.pop();
                continue;
            }
            let (w, b) = sorted_nbrs[v][top.1];
            top.1 += 1;
            if bond_seen[b] {
                continue;
            }
            bond_seen[b] = true;
            if visited[w] {
                ring_bonds[w].push(b);
                ring_bonds[v].push(b);
            } else {
                visited[w] = true;
                children[v].push((w, b));
                stack.push((w, 0));
            }
        }
    }

    // pass 2: emission
    let mut out = String::new();
    let mut open: HashMap<usize, u32> = HashMap::new();
    let mut free: Vec<bool> = vec![true; 100];
    for (ci, &root) in roots.iter().enumerate() {
        if ci > 0 {
            out.push('.');
        }
        // explicit stack of emission tasks
        enum Task {
            Atom(usize),
            Text(&'static str),
        }
        let mut tasks = vec![Task::Atom(root)];
        while let Some(task) = tasks.pop() {
            let v = match task {
                Task::Text(t) => {
                    out.push_str(t);
                    continue;
                }
                Task::Atom(v) => v,
            };
            atom_text(g, v, &mut out);
            for &b in &ring_bonds[v] {
                if let Some(d) = open.remove(&b) {
                    out.push_str(bond_text(g, b));
                    out.push_str(&ring_label(d));
                    free[d as usize] = true;
                } else {
                    let d = (1..100).find(|&d| free[d]).expect("fewer than 100 open rings") as u32;
                    free[d as usize] = false;
                    open.insert(b, d);
                    out.push_str(&ring_label(d));
                }
            }
            let kids = &children[v];
            // pushed in reverse so the first child is emitted first
            for (k, &(w, b)) in kids.iter().enumerate().rev() {
                let last = k + 1 == kids.len();
                if !last {
                    tasks.push(Task::Text(")"));
                }
                tasks.push(Task::Atom(w));
                tasks.push(Task::Text(bond_text(g, b)));
                if !last {
                    tasks.push(Task::Text("("));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> SmilesErrorKind {
        parse_smiles(text).unwrap_err().kind
    }

    #[test]
    fn mapped_methanol() {
        let g = parse_smiles("[CH3:1][OH:2]").unwrap();
        assert_eq!(g.n_atoms(), 2);
        assert_eq!(g.n_bonds(), 1);
        assert_eq!(g.atom(0).map_number, Some(1));
        assert_eq!(g.atom(0).total_h(), 3);
        assert_eq!(g.atom(1).map_number, Some(2));
        assert_eq!(g.atom(1).total_h(), 1);
        assert_eq!(g.bonds()[0].order, BondType::Single);
    }

    #[test]
    fn cyclopropane_is_a_ring() {
        let g = parse_smiles("C1CC1").unwrap();
        assert_eq!((g.n_atoms(), g.n_bonds()), (3, 3));
        assert!(g.bonds().iter().all(|b| b.in_ring));
    }

    #[test]
    fn acetamide_and_benzene() {
        let g = parse_smiles("CC(=O)N.c1ccccc1").unwrap();
        assert_eq!(g.n_components(), 2);
        assert_eq!(g.atoms().iter().filter(|a| a.aromatic).count(), 6);
        let co = g.bond_between(1, 2).unwrap();
        assert_eq!(g.bonds()[co].order, BondType::Double);
        assert!(g.bonds()[co].conjugated);
        assert_eq!(g.atom(3).total_h(), 2);
        assert!(g.atoms()[4..].iter().all(|a| a.total_h() == 1));
        assert!(g.bonds()[4..].iter().all(|b| b.order == BondType::Aromatic && b.in_ring));
    }

    #[test]
    fn biphenyl_link_is_single() {
        let g = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = g.bond_between(5, 6).unwrap();
        assert_eq!(g.bonds()[link].order, BondType::Single);
        assert_eq!(g.bonds().iter().filter(|b| b.order == BondType::Aromatic).count(), 12);
    }

    #[test]
    fn bracket_details() {
        let g = parse_smiles("[13CH3:7][N+](C)(C)C.[O-]C(=O)C.[Na+]").unwrap();
        assert_eq!(g.atom(0).map_number, Some(7));
        assert_eq!(g.atom(1).formal_charge, 1);
        assert_eq!(g.atom(5).formal_charge, -1);
        assert_eq!(g.atom(9).element, Element::from_symbol("Na").unwrap());
        assert!(g.valence_warnings().is_empty());
        let g = parse_smiles("[C@@H](F)(Cl)Br").unwrap();
        assert_eq!(g.atom(0).total_h(), 1);
        let g = parse_smiles("[Fe++]").unwrap();
        assert_eq!(g.atom(0).formal_charge, 2);
        let g = parse_smiles("[nH]1cccc1").unwrap();
        assert_eq!(g.atom(0).total_h(), 1);
        let g = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(g.atom(0).element, Element::SELENIUM);
        assert!(g.atom(0).aromatic);
    }

    #[test]
    fn slash_bonds_are_single() {
        let g = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(g.bonds()[0].order, BondType::Single);
        assert_eq!(g.bonds()[1].order, BondType::Double);
    }

    #[test]
    fn percent_ring_labels() {
        let g = parse_smiles("C%12CCC%12").unwrap();
        assert_eq!(g.n_bonds(), 4);
        assert!(g.bonds().iter().all(|b| b.in_ring));
    }

    #[test]
    fn hydrogen_atoms_are_folded() {
        let g = parse_smiles("[H]C([H])(C)C").unwrap();
        assert_eq!(g.n_atoms(), 3);
        assert_eq!(g.atom(0).total_h(), 2);
        let h2 = parse_smiles("[H][H]").unwrap();
        assert_eq!(h2.n_atoms(), 2);
    }

    #[test]
    fn valence_violation_is_a_warning() {
        let g = parse_smiles("C(C)(C)(C)(C)C").unwrap();
        assert_eq!(g.valence_warnings(), &[0]);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let e = parse_smiles("CC(C").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::UnbalancedParen);
        assert_eq!(e.offset, 2);
        assert_eq!(parse_smiles("CC)").unwrap_err().offset, 2);
        assert_eq!(kind("C1CC"), SmilesErrorKind::UnclosedRing(1));
        assert_eq!(kind("[Xx]"), SmilesErrorKind::UnsupportedElement("Xx".into()));
        assert_eq!(kind("CQ"), SmilesErrorKind::UnsupportedElement("Q".into()));
        assert_eq!(kind("C="), SmilesErrorKind::DanglingBond);
        assert_eq!(kind("C11"), SmilesErrorKind::RingSelfLoop(1));
        assert_eq!(kind("C1C1"), SmilesErrorKind::DuplicateBond);
        assert_eq!(kind("C=1CC-1"), SmilesErrorKind::RingBondMismatch(1));
        assert_eq!(kind("[CH3"), SmilesErrorKind::UnexpectedEnd);
        assert_eq!(kind("(C)"), SmilesErrorKind::BranchWithoutAtom);
        assert_eq!(kind("1CC"), SmilesErrorKind::RingWithoutAtom);
        assert_eq!(parse_smiles("CC$C").unwrap_err().offset, 2);
    }

    #[test]
    fn writer_basics() {
        let c = parse_smiles("C").unwrap();
        assert_eq!(write_smiles(&c), "C");
        let ring = parse_smiles("C1CC1").unwrap();
        assert_eq!(write_smiles(&ring), "C1CC1");
        let mapped = parse_smiles("[CH3:1][Cl:2].[NH2:3][CH3:4]").unwrap();
        assert_eq!(write_smiles(&mapped), "[CH3:1][Cl:2].[NH2:3][CH3:4]");
        let branched = parse_smiles("CC(=O)N").unwrap();
        assert_eq!(write_smiles(&branched), "CC(=O)N");
        let benzene = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(write_smiles(&benzene), "c1ccccc1");
        let biphenyl = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(write_smiles(&biphenyl), "c1ccccc1-c1ccccc1");
    }

    #[test]
    fn writer_round_trips_bonds() {
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "C1CC2CCC1CC2",
            "[NH4+].[O-]C(=O)C",
            "C#N",
            "c1ccc2ccccc2c1",
            "c1cc:c:cc1",
            "[Pd]",
        ] {
            let g = parse_smiles(s).unwrap();
            let again = parse_smiles(&write_smiles(&g)).unwrap();
            assert_eq!(g.n_atoms(), again.n_atoms(), "{s}");
            assert_eq!(g.n_bonds(), again.n_bonds(), "{s}");
            let mut h1: Vec<u8> = g.atoms().iter().map(|a| a.total_h()).collect();
            let mut h2: Vec<u8> = again.atoms().iter().map(|a| a.total_h()).collect();
            h1.sort_unstable();
            h2.sort_unstable();
            assert_eq!(h1, h2, "{s}");
        }
    }
}
