use crate::candgen::{enumerate_candidates, CandGenError, GenConfig};
use crate::center::{top_k_pairs, CenterInput, CenterModel};
use crate::chemgraph::{parse_smiles, write_smiles, EditSet, MolGraph, SmilesError};
use crate::diffengine::{DiffError, ParamStore};
use crate::ranker::{RankError, RankerModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("cannot parse reactants: {0}")]
    Parse(#[from] SmilesError),
    #[error("no candidate products: {0} center pair(s) admitted no valid bond change")]
    NoCandidates(usize),
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    CandGen(#[from] CandGenError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedProduct {
    /// 1-based.
    pub rank: usize,
    /// Components of the candidate that contain an edited atom.
    pub smiles: String,
    pub score: f64,
    pub edits: EditSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// The parsed input, with map numbers assigned if it had none.
    pub reactants: MolGraph,
    /// Selected center pairs with their scores, best first.
    pub center: Vec<((usize, usize), f64)>,
    pub products: Vec<RankedProduct>,
    pub n_candidates: usize,
    pub truncated: bool,
}

/// Trained center model and ranker bundled with candidate settings.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub center: CenterModel,
    pub center_store: ParamStore,
    pub ranker: RankerModel,
    pub ranker_store: ParamStore,
    pub gen: GenConfig,
    /// Center pairs scoring below this are not handed to the enumerator.
    pub min_pair_score: f64,
}

/// Parses reactants given either as SMILES or as a reaction line
/// (`reactants>reagents>...`, reagents merged in). If no reactant atom
/// carries a map number, reactant atoms are numbered by position and their
/// hydrogen counts are written out, so the input reads like mapped data
/// (where every reactant atom is a bracket atom).
pub fn parse_reactants(input: &str) -> Result<MolGraph, SmilesError> {
    let mut fields = input.trim().split('>');
    let reactants = fields.next().unwrap_or("");
    let mut g = parse_smiles(reactants.trim())?;
    if g.atoms().iter().all(|a| a.map_number.is_none()) {
        g = g.with_explicit_hydrogens().with_index_maps();
    }
    if let Some(reagents) = fields.next() {
        if !reagents.trim().is_empty() {
            g = g.merged(&parse_smiles(reagents.trim())?);
        }
    }
    Ok(g)
}

/// The components of `product` that contain an edited atom, as SMILES.
pub fn edited_components_smiles(product: &MolGraph, edits: &EditSet) -> String {
    let comps = product.components();
    let touched: Vec<usize> = edits.atoms().iter().map(|&a| comps[a]).collect();
    let keep: Vec<usize> = (0..product.n_atoms()).filter(|&i| touched.contains(&comps[i])).collect();
    write_smiles(&product.subgraph(&keep))
}

impl Predictor {
    pub fn new(center_store: ParamStore, ranker_store: ParamStore, gen: GenConfig) -> Result<Predictor, PredictError> {
        let center = CenterModel::from_store(&center_store).map_err(PredictError::Model)?;
        let ranker = RankerModel::from_store(&ranker_store).map_err(PredictError::Model)?;
        Ok(Predictor {
            center,
            center_store,
            ranker,
            ranker_store,
            gen,
            min_pair_score: 0.0,
        })
    }

    pub fn predict(&self, reactants: &str, top_n: usize) -> Result<Prediction, PredictError> {
        self.predict_graph(parse_reactants(reactants)?, top_n)
    }

    pub fn predict_graph(&self, reactants: MolGraph, top_n: usize) -> Result<Prediction, PredictError> {
        let input = CenterInput::new(&reactants, self.center.features);
        let (scores, _) = self.center.score(&self.center_store, &input)?;
        let center: Vec<((usize, usize), f64)> = top_k_pairs(&scores, self.gen.k)
            .into_iter()
            .map(|(u, v)| ((u, v), scores.get(u, v)))
            .filter(|&(_, s)| s >= self.min_pair_score)
            .collect();
        let pairs: Vec<(usize, usize)> = center.iter().map(|&(p, _)| p).collect();
        let list = enumerate_candidates(&reactants, &pairs, &self.gen)?;
        if list.candidates.is_empty() {
            return Err(PredictError::NoCandidates(pairs.len()));
        }
        let n_candidates = list.candidates.len();
        let ranked = self.ranker.rank_candidates(&self.ranker_store, &reactants, list.candidates)?;
        let products = ranked
            .into_iter()
            .take(top_n)
            .enumerate()
            .map(|(i, c)| RankedProduct {
                rank: i + 1,
                smiles: edited_components_smiles(&c.product, &c.edits),
                score: c.score.expect("ranked candidates carry scores"),
                edits: c.edits,
            })
            .collect();
        Ok(Prediction {
            reactants,
            center,
            products,
            n_candidates,
            truncated: list.truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_are_assigned_when_missing() {
        let g = parse_reactants("CCl.NC").unwrap();
        let maps: Vec<_> = g.atoms().iter().map(|a| a.map_number).collect();
        assert_eq!(maps, vec![Some(1), Some(2), Some(3), Some(4)]);
        let g = parse_reactants("[CH3:7]Cl>CO>").unwrap();
        assert_eq!(g.n_atoms(), 4);
        assert_eq!(g.atom(0).map_number, Some(7));
        assert_eq!(g.atom(1).map_number, None);
        let g = parse_reactants("CCO>[Na+]>").unwrap();
        assert_eq!(g.atom(3).map_number, None);
    }

    #[test]
    fn unmapped_input_reads_like_mapped_input() {
        let plain = parse_reactants("CCC(=O)O.NCC").unwrap();
        let mapped = parse_reactants("[CH3:1][CH2:2][C:3](=[O:4])[OH:5].[NH2:6][CH2:7][CH3:8]").unwrap();
        assert_eq!(plain, mapped);
    }
}
