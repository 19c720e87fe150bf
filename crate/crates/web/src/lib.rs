//! Browser front end: molecule description with WL classes, WL versus
//! exact isomorphism, and product prediction with the bundled models.
//!
//! Every operation has a plain Rust entry point returning a serializable
//! result, and a `wasm_bindgen` wrapper that returns JSON (`{"error": ..}`
//! on failure).

use rexgen::candgen::GenConfig;
use rexgen::chemgraph::{parse_smiles, write_smiles, MolGraph};
use rexgen::diffengine::ParamStore;
use rexgen::pipeline::{parse_reactants, Predictor};
use rexgen::wliso::{brute_force_isomorphic, wl_equivalent, wl_fingerprint, wl_labels, BRUTE_FORCE_MAX_ATOMS};
use serde::Serialize;
use std::cell::OnceCell;
use wasm_bindgen::prelude::*;

/// Models trained on the synthetic template set (`rexgen train-center` and
/// `train-ranker`, hidden 32, depth 3).
const CENTER_CKPT: &str = include_str!("../assets/center.ckpt");
const RANKER_CKPT: &str = include_str!("../assets/ranker.ckpt");

/// Held-out reactions of the models' training distribution: name,
/// reactants (`reactants>reagents>` where a reagent matters) and the
/// recorded product.
pub const EXAMPLES: [(&str, &str, &str); 5] = [
    ("amine alkylation", "CCCBr.NCC", "CCCNCC"),
    ("amide coupling", "CC(=O)O.NCC", "CC(=O)NCC"),
    ("ester formation", "COc1ccc(cc1)C(=O)Cl.Oc1ccccc1", "COc1ccc(cc1)C(=O)Oc1ccccc1"),
    ("aromatic substitution", "[O-][N+](=O)c1ccc(F)cc1.NCCOC", "[O-][N+](=O)c1ccc(cc1)NCCOC"),
    ("ketone reduction", "COc1ccc(cc1)C(=O)C>[BH3-]C#N>", "COc1ccc(cc1)C(O)C"),
];

#[derive(Debug, Clone, Serialize)]
pub struct AtomInfo {
    pub index: usize,
    pub symbol: String,
    pub charge: i8,
    pub aromatic: bool,
    pub hydrogens: u8,
    pub map: Option<u32>,
    /// Final WL label as 16 hex digits.
    pub label: String,
    /// Index of the atom's WL class; atoms in one class look alike to WL.
    pub class: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Description {
    pub smiles: String,
    pub n_atoms: usize,
    pub n_bonds: usize,
    pub n_components: usize,
    /// Distinct WL labels after 0, 1, ..., depth rounds.
    pub classes_per_round: Vec<usize>,
    pub atoms: Vec<AtomInfo>,
    /// Hash of the whole fingerprint, as 16 hex digits.
    pub fingerprint: String,
}

fn parse(smiles: &str) -> Result<MolGraph, String> {
    parse_smiles(smiles.trim()).map_err(|e| e.to_string())
}

fn class_ids(labels: &[u64]) -> Vec<usize> {
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    labels.iter().map(|l| distinct.binary_search(l).expect("label present")).collect()
}

pub fn describe(smiles: &str, depth: usize) -> Result<Description, String> {
    let g = parse(smiles)?;
    let labels = wl_labels(&g, depth);
    let classes = class_ids(&labels);
    let atoms = g
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| AtomInfo {
            index: i,
            symbol: a.element.symbol().to_string(),
            charge: a.formal_charge,
            aromatic: a.aromatic,
            hydrogens: a.total_h(),
            map: a.map_number,
            label: format!("{:016x}", labels[i]),
            class: classes[i],
        })
        .collect();
    let classes_per_round = (0..=depth)
        .map(|d| {
            let mut l = wl_labels(&g, d);
            l.sort_unstable();
            l.dedup();
            l.len()
        })
        .collect();
    let fp = wl_fingerprint(&g, depth);
    let mut h = std::hash::DefaultHasher::new();
    std::hash::Hash::hash(&fp, &mut h);
    Ok(Description {
        smiles: write_smiles(&g),
        n_atoms: g.n_atoms(),
        n_bonds: g.n_bonds(),
        n_components: g.n_components(),
        classes_per_round,
        atoms,
        fingerprint: format!("{:016x}", std::hash::Hasher::finish(&h)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub wl_equivalent: bool,
    /// Exact answer, or `None` when either graph is too large to check.
    pub isomorphic: Option<bool>,
}

pub fn compare(a: &str, b: &str, depth: usize) -> Result<Comparison, String> {
    let (g1, g2) = (parse(a)?, parse(b)?);
    Ok(Comparison {
        wl_equivalent: wl_equivalent(&g1, &g2, depth),
        isomorphic: if g1.n_atoms().max(g2.n_atoms()) <= BRUTE_FORCE_MAX_ATOMS {
            brute_force_isomorphic(&g1, &g2).ok()
        } else {
            None
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterPair {
    /// Atoms as `symbol + map number`, e.g. `C4`.
    pub atoms: [String; 2],
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductInfo {
    pub rank: usize,
    pub smiles: String,
    pub score: f64,
    /// Softmax over all candidates.
    pub probability: f64,
    /// One line per edited pair, e.g. `C4-Br5: single -> none`.
    pub edits: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionInfo {
    pub reactants: String,
    pub center: Vec<CenterPair>,
    pub n_candidates: usize,
    pub truncated: bool,
    pub products: Vec<ProductInfo>,
}

thread_local! {
    static PREDICTOR: OnceCell<Result<Predictor, String>> = const { OnceCell::new() };
}

fn bundled_predictor() -> Result<Predictor, String> {
    let load = |text: &str| ParamStore::from_checkpoint_str(text).map_err(|e| e.to_string());
    Predictor::new(load(CENTER_CKPT)?, load(RANKER_CKPT)?, GenConfig::default()).map_err(|e| e.to_string())
}

fn atom_name(g: &MolGraph, i: usize) -> String {
    let a = g.atom(i);
    format!("{}{}", a.element.symbol(), a.map_number.map_or(i + 1, |m| m as usize))
}

/// Predicts products of `reactants` (SMILES, optionally `r>reagents>`) from
/// the top `k` center pairs, returning the best `top_n`.
pub fn predict(reactants: &str, k: usize, top_n: usize) -> Result<PredictionInfo, String> {
    if !(1..=20).contains(&k) {
        return Err("k must lie in 1..=20".into());
    }
    let g = parse_reactants(reactants).map_err(|e| e.to_string())?;
    PREDICTOR.with(|cell| {
        let p = cell.get_or_init(bundled_predictor).as_ref().map_err(Clone::clone)?;
        let mut p = p.clone();
        p.gen.k = k;
        let pred = p.predict_graph(g, usize::MAX).map_err(|e| e.to_string())?;
        let g = &pred.reactants;
        let top = pred.products.first().map_or(0.0, |p| p.score);
        let z: f64 = pred.products.iter().map(|p| (p.score - top).exp()).sum();
        let products = pred
            .products
            .iter()
            .take(top_n)
            .map(|p| ProductInfo {
                rank: p.rank,
                smiles: p.smiles.clone(),
                score: p.score,
                probability: (p.score - top).exp() / z,
                edits: p
                    .edits
                    .edits()
                    .iter()
                    .map(|e| format!("{}-{}: {} -> {}", atom_name(g, e.u), atom_name(g, e.v), g.bond_type(e.u, e.v), e.new))
                    .collect(),
            })
            .collect();
        Ok(PredictionInfo {
            reactants: write_smiles(g),
            center: pred
                .center
                .iter()
                .map(|&((u, v), score)| CenterPair {
                    atoms: [atom_name(g, u), atom_name(g, v)],
                    score,
                })
                .collect(),
            n_candidates: pred.n_candidates,
            truncated: pred.truncated,
            products,
        })
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("plain data serializes"),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

#[wasm_bindgen(js_name = describe)]
pub fn describe_json(smiles: &str, depth: usize) -> String {
    to_json(describe(smiles, depth))
}

#[wasm_bindgen(js_name = compare)]
pub fn compare_json(a: &str, b: &str, depth: usize) -> String {
    to_json(compare(a, b, depth))
}

#[wasm_bindgen(js_name = predict)]
pub fn predict_json(reactants: &str, k: usize, top_n: usize) -> String {
    to_json(predict(reactants, k, top_n))
}

#[wasm_bindgen(js_name = examples)]
pub fn examples_json() -> String {
    let list: Vec<_> = EXAMPLES
        .iter()
        .map(|(name, input, product)| serde_json::json!({ "name": name, "input": input, "product": product }))
        .collect();
    serde_json::Value::Array(list).to_string()
}
