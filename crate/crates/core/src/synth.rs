//! Synthetic molecules and atom-mapped toy reactions for tests, demos and
//! benchmarks.
//!
//! Toy reactions are built from small templates: a reactant SMILES with
//! marker map numbers (`:91`, `:92`, ...) on the reacting atoms, filled with
//! substituents, plus the bond edits between marked atoms. The edits are
//! applied to the parsed reactants and the product is written back out, so
//! every generated line is consistent by construction.

use crate::chemgraph::{apply_edits, parse_smiles, write_smiles, Atom, BondType, Edit, EditSet, Element, MolGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ELEMENTS: [(Element, u32, f64); 5] = [
    (Element::CARBON, 4, 0.6),
    (Element::NITROGEN, 3, 0.15),
    (Element::OXYGEN, 2, 0.15),
    (Element::SULFUR, 2, 0.05),
    (Element::CHLORINE, 1, 0.05),
];

fn pick_element(rng: &mut impl Rng) -> (Element, u32) {
    let mut x: f64 = rng.gen();
    for &(e, cap, w) in &ELEMENTS {
        if x < w {
            return (e, cap);
        }
        x -= w;
    }
    (Element::CARBON, 4)
}

/// A random connected, valence-respecting, non-aromatic molecule.
/// `ring_prob` is the chance of each of up to two extra ring-closing bonds.
pub fn random_molecule(rng: &mut impl Rng, n_atoms: usize, ring_prob: f64) -> MolGraph {
    let mut atoms = Vec::with_capacity(n_atoms);
    let mut cap = Vec::with_capacity(n_atoms);
    let mut bonds: Vec<(usize, usize, BondType)> = Vec::new();
    for i in 0..n_atoms {
        if i == 0 {
            atoms.push(Atom::new(Element::CARBON));
            cap.push(4);
            continue;
        }
        let open: Vec<usize> = (0..i).filter(|&j| cap[j] > 0).collect();
        let j = *open.choose(rng).expect("the generator keeps one open valence");
        let (mut el, mut c) = pick_element(rng);
        let room = c.min(cap[j]);
        let mut order = match rng.gen_range(0..20) {
            0 if room >= 3 => BondType::Triple,
            1..=4 if room >= 2 => BondType::Double,
            _ => BondType::Single,
        };
        let open_total: u32 = open.iter().map(|&k| cap[k]).sum();
        let used = order.order() as u32;
        if i + 1 < n_atoms && open_total + c < 2 * used + 1 {
            // would saturate every atom; a carbon keeps the chain growing
            el = Element::CARBON;
            c = 4;
            order = BondType::Single;
        }
        let used = order.order() as u32;
        atoms.push(Atom::new(el));
        cap.push(c - used);
        cap[j] -= used;
        bonds.push((j, i, order));
    }
    for _ in 0..2 {
        if n_atoms < 3 || !rng.gen_bool(ring_prob) {
            continue;
        }
        let u = rng.gen_range(0..n_atoms);
        let v = rng.gen_range(0..n_atoms);
        let adjacent = bonds.iter().any(|&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u));
        if u != v && !adjacent && cap[u] > 0 && cap[v] > 0 {
            cap[u] -= 1;
            cap[v] -= 1;
            bonds.push((u.min(v), u.max(v), BondType::Single));
        }
    }
    MolGraph::new(atoms, bonds).expect("generator emits valid bonds")
}

/// Several random molecules merged into one multi-component graph with
/// `total_atoms` atoms.
pub fn random_reactants(rng: &mut impl Rng, total_atoms: usize, components: usize) -> MolGraph {
    let components = components.clamp(1, total_atoms.max(1));
    let mut g = MolGraph::empty();
    let mut left = total_atoms;
    for c in 0..components {
        let size = if c + 1 == components {
            left
        } else {
            (total_atoms / components).max(1)
        };
        left -= size;
        g = g.merged(&random_molecule(rng, size, 0.3));
    }
    g
}

/// A reaction template. Marker maps in `reactants` identify the atoms named
/// by `edits`.
#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub name: &'static str,
    /// Reactant SMILES with `{A}` / `{B}` substituent slots.
    pub reactants: &'static str,
    pub reagents: &'static str,
    pub edits: &'static [(u32, u32, BondType)],
}

/// Substituents that can prefix a marked atom (`{A}[C:91]...`).
pub const PREFIX_GROUPS: [&str; 8] = ["C", "CC", "CCC", "CC(C)", "c1ccccc1", "C1CCCCC1", "COc1ccc(cc1)", "CSC"];
/// Substituents that can follow a marked atom (`...[N:93]{B}`).
pub const SUFFIX_GROUPS: [&str; 8] = ["C", "CC", "C(C)C", "c1ccccc1", "C1CCCC1", "CCOC", "c1ccncc1", "CC#N"];

pub const TEMPLATES: [Template; 6] = [
    Template {
        name: "amine alkylation",
        reactants: "{A}[CH2:91][Br:92].[NH2:93]{B}",
        reagents: "",
        edits: &[(91, 92, BondType::None), (91, 93, BondType::Single)],
    },
    Template {
        name: "amide coupling",
        reactants: "{A}[C:91](=O)[OH:92].[NH2:93]{B}",
        reagents: "",
        edits: &[(91, 92, BondType::None), (91, 93, BondType::Single)],
    },
    Template {
        name: "ester formation",
        reactants: "{A}[C:91](=O)[Cl:92].[OH:93]{B}",
        reagents: "",
        edits: &[(91, 92, BondType::None), (91, 93, BondType::Single)],
    },
    Template {
        name: "ketone reduction",
        reactants: "{A}[C:91](=[O:92]){B}",
        reagents: "[BH3-]C#N",
        edits: &[(91, 92, BondType::Single)],
    },
    Template {
        name: "dehydrohalogenation",
        reactants: "{A}[CH2:91][CH2:92][Br:93]",
        reagents: "CC(C)(C)[O-]",
        edits: &[(92, 93, BondType::None), (91, 92, BondType::Double)],
    },
    Template {
        name: "aromatic substitution",
        reactants: "[O-][N+](=O)c1cc[c:91]([F:92])cc1.[NH2:93]{B}",
        reagents: "",
        edits: &[(91, 92, BondType::None), (91, 93, BondType::Single)],
    },
];

/// Builds a mapped reaction line from reactant SMILES containing marker
/// maps. All reactant atoms are renumbered `1..=n` by position; reagent
/// atoms stay unmapped. The product is the largest component after the
/// edits.
pub fn build_reaction(reactants: &str, reagents: &str, edits: &[(u32, u32, BondType)]) -> Result<String, String> {
    let g = parse_smiles(reactants).map_err(|e| format!("{reactants}: {e}"))?;
    let set = EditSet::from_maps(&g, edits.iter().copied()).map_err(|e| e.to_string())?;
    let g = g.with_index_maps();
    let p = apply_edits(&g, &set).map_err(|e| e.to_string())?;
    if !p.valence_warnings().is_empty() {
        return Err(format!("template overloads atoms {:?}", p.valence_warnings()));
    }
    let comps = p.components();
    let n_comp = p.n_components();
    let mut sizes = vec![0usize; n_comp];
    for &c in &comps {
        sizes[c] += 1;
    }
    let main = (0..n_comp).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
    let keep: Vec<usize> = (0..p.n_atoms()).filter(|&i| comps[i] == main).collect();
    let product = p.subgraph(&keep);
    Ok(format!("{}>{}>{}", write_smiles(&g), reagents, write_smiles(&product)))
}

pub fn instantiate(t: &Template, a: &str, b: &str) -> Result<String, String> {
    let r = t.reactants.replace("{A}", a).replace("{B}", b);
    build_reaction(&r, t.reagents, t.edits)
}

/// The textbook substitution `CH3Cl + CH3NH2`.
pub fn substitution_example() -> String {
    "[CH3:1][Cl:2].[NH2:3][CH3:4]>>[CH3:1][NH:3][CH3:4]".to_string()
}

/// Ring closure onto an aromatic diamine; its center is the three pairs
/// (27,28), (7,27) and (8,27).
pub fn ring_closure_example() -> String {
    "[cH:1]1[cH:2][cH:3][cH:4][c:6](:[n:8])[c:5]1:[nH:7].[CH3:29][c:27][Cl:28]>>\
     [CH3:29][c:27]1[nH:7][c:5]2[cH:1][cH:2][cH:3][cH:4][c:6]2[n:8]1"
        .to_string()
}

/// `count` toy reactions: the two hand-built examples followed by template
/// instances with seeded random substituents (no duplicates).
pub fn toy_reactions(seed: u64, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![substitution_example(), ring_closure_example()];
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count {
        // rotate on attempts, so templates with few distinct instances do
        // not stall the loop once exhausted
        let t = &TEMPLATES[attempts % TEMPLATES.len()];
        attempts += 1;
        let a = PREFIX_GROUPS.choose(&mut rng).unwrap();
        let b = SUFFIX_GROUPS.choose(&mut rng).unwrap();
        if let Ok(line) = instantiate(t, a, b) {
            if !out.contains(&line) {
                out.push(line);
            }
        }
    }
    out.truncate(count);
    out
}

/// One substrate family whose outcome depends only on the reagent: with a
/// hydride donor the ketone is reduced, with a bulky base the chloride is
/// eliminated. Alternates between the two, `count` lines in total.
pub fn reagent_dependent_reactions(count: usize) -> Vec<String> {
    let substrate = "{A}[C:91](=[O:92])[CH2:93][CH2:94][Cl:95]";
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        let a = PREFIX_GROUPS[(i / 2) % PREFIX_GROUPS.len()];
        let r = substrate.replace("{A}", a);
        let line = if i % 2 == 0 {
            build_reaction(&r, "[BH3-]C#N", &[(91, 92, BondType::Single)])
        } else {
            build_reaction(&r, "CC(C)(C)[O-]", &[(94, 95, BondType::None), (93, 94, BondType::Double)])
        }
        .expect("fixture templates are valid");
        out.push(line);
        i += 1;
    }
    out
}

/// Reactions whose centers are two or three adjacent edits, so the changed
/// atoms interact: eliminations and the aromatic ring closure.
pub fn adjacent_edit_reactions(count: usize) -> Vec<String> {
    let mut out = vec![ring_closure_example()];
    let elim = &TEMPLATES[4];
    let mut i = 0;
    while out.len() < count {
        let a = PREFIX_GROUPS[i % PREFIX_GROUPS.len()];
        let line = match i / PREFIX_GROUPS.len() {
            0 => instantiate(elim, a, ""),
            // each further pass lengthens the chain, so lines never repeat
            pass => build_reaction(
                &format!("{a}{}[CH2:91][CH2:92][CH2:93][Br:94]", "C".repeat(pass - 1)),
                "CC(C)(C)[O-]",
                &[(93, 94, BondType::None), (92, 93, BondType::Double)],
            ),
        }
        .expect("fixture templates are valid");
        if !out.contains(&line) {
            out.push(line);
        }
        i += 1;
    }
    out
}

/// Edits between the marker atoms of a template, for tests that need the
/// expected center of an instantiated template.
pub fn template_edits(t: &Template, a: &str, b: &str) -> Result<(MolGraph, EditSet), String> {
    let r = t.reactants.replace("{A}", a).replace("{B}", b);
    let g = parse_smiles(&r).map_err(|e| e.to_string())?;
    let set = EditSet::from_maps(&g, t.edits.iter().copied()).map_err(|e| e.to_string())?;
    Ok((g, set))
}

/// `k` distinct pairs among the atoms nearest to `seed` (breadth-first
/// order, then other components by index), the way a predicted center
/// clusters around a reactive site.
pub fn local_pairs(g: &MolGraph, seed: usize, k: usize) -> Vec<(usize, usize)> {
    let n = g.n_atoms();
    let mut order = vec![seed];
    let mut seen = vec![false; n];
    seen[seed] = true;
    let mut head = 0;
    while order.len() < n {
        if head == order.len() {
            let next = (0..n).find(|&i| !seen[i]).expect("unvisited atom");
            seen[next] = true;
            order.push(next);
        }
        let v = order[head];
        head += 1;
        for &(u, _) in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                order.push(u);
            }
        }
    }
    let mut pairs = Vec::with_capacity(k);
    'outer: for j in 1..n {
        for i in 0..j {
            if pairs.len() == k {
                break 'outer;
            }
            let (a, b) = (order[i], order[j]);
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs
}

/// Random edit set over `atoms` atoms, for property tests.
pub fn random_edit_set(rng: &mut impl Rng, atoms: usize, edits: usize) -> EditSet {
    let mut out: Vec<Edit> = Vec::new();
    let mut guard = 0;
    while out.len() < edits && guard < 1000 {
        guard += 1;
        let u = rng.gen_range(0..atoms);
        let v = rng.gen_range(0..atoms);
        if u == v || out.iter().any(|e| e.pair() == (u.min(v), u.max(v))) {
            continue;
        }
        out.push(Edit::new(u, v, BondType::ALL[rng.gen_range(0..5)]));
    }
    EditSet::new(out).expect("pairs are distinct")
}
