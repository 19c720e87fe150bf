//! Candidate ranking from difference vectors `d_v = c_v(product) - c_v(reactants)`.
//!
//! The sum-pool scorer reads `uᵀ τ(M Σ_v d_v)`. The difference-network
//! scorer first runs a second, separately parameterized WLN over the
//! candidate's graph with `d_v` as node inputs and pools its outputs
//! instead. That second network subtracts the zero-input message baseline
//! so an unchanged candidate scores exactly zero.

use crate::candgen::Candidate;
use crate::chemgraph::{FeatureOptions, MolGraph};
use crate::diffengine::{DiffError, Matrix, ParamStore, Tape, Var};
use crate::wln::{embed_atoms, GraphTensors, WlnConfig};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankerVariant {
    SumPool,
    #[default]
    Wldn,
}

impl std::str::FromStr for RankerVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wln" | "sumpool" => Ok(RankerVariant::SumPool),
            "wldn" => Ok(RankerVariant::Wldn),
            other => Err(format!("unknown ranker variant '{other}'")),
        }
    }
}

impl std::fmt::Display for RankerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RankerVariant::SumPool => "wln",
            RankerVariant::Wldn => "wldn",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error("no candidates to rank")]
    Empty,
    #[error("target index {index} out of range for {len} candidates")]
    BadTarget { index: usize, len: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// `-ln softmax(scores)[target]`.
pub fn rank_loss(scores: &[f64], target: usize) -> Result<f64, RankError> {
    if scores.is_empty() {
        return Err(RankError::Empty);
    }
    if target >= scores.len() {
        return Err(RankError::BadTarget {
            index: target,
            len: scores.len(),
        });
    }
    let mut tape = Tape::new();
    let s = tape.constant(Matrix::column(scores));
    let l = tape.softmax_logloss(s, target)?;
    Ok(tape.value(l).item())
}

/// 1-based rank of `scores[target]` under a stable descending sort: higher
/// scores and equal scores earlier in the list rank ahead of it.
pub fn rank_of(scores: &[f64], target: usize) -> usize {
    let t = scores[target];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(j, &s)| s > t || (s == t && j < target))
        .count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerModel {
    pub variant: RankerVariant,
    /// Embeds reactants and candidate products.
    pub embed: WlnConfig,
    /// Runs over the difference graph (WLDN only).
    pub diff: WlnConfig,
    pub features: FeatureOptions,
}

fn head_name(t: &str) -> String {
    format!("ranker.{t}")
}

impl RankerModel {
    pub fn new(variant: RankerVariant, hidden: usize, depth: usize) -> RankerModel {
        let features = FeatureOptions::default();
        let mut diff = WlnConfig::new("ranker.diff", hidden, hidden, depth);
        diff.centered_messages = true;
        RankerModel {
            variant,
            embed: WlnConfig::new("ranker.wln", features.atom_dim(), hidden, depth),
            diff,
            features,
        }
    }

    fn pooled_dim(&self) -> usize {
        match self.variant {
            RankerVariant::SumPool => self.embed.hidden,
            RankerVariant::Wldn => self.diff.hidden,
        }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut impl Rng) {
        self.embed.init(store, rng);
        if self.variant == RankerVariant::Wldn {
            self.diff.init(store, rng);
        }
        let d = self.pooled_dim();
        store.insert_xavier(head_name("M"), d, d, rng);
        store.insert_xavier(head_name("u"), 1, d, rng);
        store.set_meta("kind", "ranker");
        store.set_meta("ranker.variant", self.variant);
        store.set_meta("ranker.hidden", self.embed.hidden);
        store.set_meta("ranker.depth", self.embed.depth);
        store.set_meta("ranker.diff_hidden", self.diff.hidden);
        store.set_meta("ranker.activation", self.embed.activation);
    }

    pub fn from_store(store: &ParamStore) -> Result<RankerModel, String> {
        let get = |k: &str| store.meta(k).ok_or_else(|| format!("checkpoint lacks '{k}'"));
        if get("kind")? != "ranker" {
            return Err("not a ranker checkpoint".into());
        }
        let num = |k: &str| -> Result<usize, String> { get(k)?.parse().map_err(|e| format!("{k}: {e}")) };
        let variant = get("ranker.variant")?.parse()?;
        let mut m = RankerModel::new(variant, num("ranker.hidden")?, num("ranker.depth")?);
        let act = get("ranker.activation")?.parse()?;
        m.embed.activation = act;
        m.diff.activation = act;
        m.diff.hidden = num("ranker.diff_hidden")?;
        m.embed.validate(store).map_err(|e| e.to_string())?;
        if variant == RankerVariant::Wldn {
            m.diff.validate(store).map_err(|e| e.to_string())?;
        }
        Ok(m)
    }

    /// Reactant atom vectors `c_v(r)`.
    pub fn embed_reactants(&self, tape: &mut Tape, store: &ParamStore, reactants: &GraphTensors) -> Result<Var, DiffError> {
        let x = tape.constant(reactants.atom_feats.clone());
        Ok(embed_atoms(tape, store, &self.embed, reactants, x)?.c)
    }

    /// `d_v` for every atom of `product` (same atom indexing as the
    /// reactants).
    pub fn difference_vectors(&self, tape: &mut Tape, store: &ParamStore, c_r: Var, product: &GraphTensors) -> Result<Var, DiffError> {
        let x = tape.constant(product.atom_feats.clone());
        let c_p = embed_atoms(tape, store, &self.embed, product, x)?.c;
        tape.sub(c_p, c_r)
    }

    /// `uᵀ τ(M Σ_v rows)` as a 1x1 node.
    fn head(&self, tape: &mut Tape, store: &ParamStore, rows: Var) -> Result<Var, DiffError> {
        let m = tape.param(store, &head_name("M"))?;
        let u = tape.param(store, &head_name("u"))?;
        let pooled = tape.sum_rows(rows);
        let z = tape.linear(pooled, m)?;
        let z = tape.activate(z, self.embed.activation);
        tape.linear(z, u)
    }

    /// Score of one candidate given the reactant vectors.
    pub fn score_candidate(&self, tape: &mut Tape, store: &ParamStore, c_r: Var, product: &GraphTensors) -> Result<Var, DiffError> {
        let d = self.difference_vectors(tape, store, c_r, product)?;
        match self.variant {
            RankerVariant::SumPool => self.head(tape, store, d),
            RankerVariant::Wldn => {
                let dl = embed_atoms(tape, store, &self.diff, product, d)?.c;
                self.head(tape, store, dl)
            }
        }
    }

    /// Scores of all candidates as an `m x 1` node.
    pub fn scores(&self, tape: &mut Tape, store: &ParamStore, reactants: &GraphTensors, products: &[GraphTensors]) -> Result<Var, DiffError> {
        let c_r = self.embed_reactants(tape, store, reactants)?;
        let mut parts = Vec::with_capacity(products.len());
        for p in products {
            parts.push(self.score_candidate(tape, store, c_r, p)?);
        }
        tape.concat_rows(&parts)
    }

    /// Softmax log loss of the candidate at `target`.
    pub fn loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        reactants: &GraphTensors,
        products: &[GraphTensors],
        target: usize,
    ) -> Result<Var, RankError> {
        if products.is_empty() {
            return Err(RankError::Empty);
        }
        if target >= products.len() {
            return Err(RankError::BadTarget {
                index: target,
                len: products.len(),
            });
        }
        let s = self.scores(tape, store, reactants, products)?;
        Ok(tape.softmax_logloss(s, target)?)
    }

    pub fn score_graphs(&self, store: &ParamStore, reactants: &MolGraph, products: &[&MolGraph]) -> Result<Vec<f64>, DiffError> {
        let r = GraphTensors::new(reactants, self.features);
        let ps: Vec<GraphTensors> = products.iter().map(|p| GraphTensors::new(p, self.features)).collect();
        let mut tape = Tape::new();
        let s = self.scores(&mut tape, store, &r, &ps)?;
        Ok(tape.value(s).data().to_vec())
    }

    /// Attaches scores and sorts by descending score; equal scores keep
    /// their input order.
    pub fn rank_candidates(&self, store: &ParamStore, reactants: &MolGraph, candidates: Vec<Candidate>) -> Result<Vec<Candidate>, RankError> {
        if candidates.is_empty() {
            return Err(RankError::Empty);
        }
        let products: Vec<&MolGraph> = candidates.iter().map(|c| &c.product).collect();
        let scores = self.score_graphs(store, reactants, &products)?;
        let mut out: Vec<Candidate> = candidates
            .into_iter()
            .zip(scores)
            .map(|(mut c, s)| {
                c.score = Some(s);
                c
            })
            .collect();
        out.sort_by(|a, b| b.score.unwrap().total_cmp(&a.score.unwrap()));
        Ok(out)
    }
}
