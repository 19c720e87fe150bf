//! Reaction-center identification: pair labels from mapped reactions, the
//! local and global (attention) pair scorers, the pairwise loss, top-K
//! selection and coverage.

use crate::chemgraph::{BondType, Edit, EditSet, FeatureOptions, MolGraph};
use crate::diffengine::{Activation, DiffError, Matrix, ParamStore, Tape, Var};
use crate::wln::{embed_atoms, GraphTensors, WlnConfig};
use rand::Rng;
use std::collections::HashMap;
use thiserror::Error;

/// Width of `b_uv`: bond-type one-hot (none, single, double, triple,
/// aromatic) plus a same-molecule flag.
pub const PAIR_FDIM: usize = 6;

/// Log clamp of the pairwise loss.
pub const LOSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("product atom {atom} has no map number")]
    UnmappedProductAtom { atom: usize },
    #[error("map number {map} is used twice in the {side}")]
    DuplicateMap { map: u32, side: &'static str },
    #[error("product map number {0} does not occur among the reactants")]
    MissingReactantMap(u32),
}

/// Unordered pairs `(u, v)`, `u < v`, in lexicographic order.
pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            out.push((u, v));
        }
    }
    out
}

/// Index of `(u, v)`, `u < v`, in [`pair_list`].
pub fn pair_index(n: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < n);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

/// Binary reactivity labels over reactant atom pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairLabels {
    n_atoms: usize,
    positive: Vec<(usize, usize)>,
}

impl PairLabels {
    pub fn from_pairs(n_atoms: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> PairLabels {
        let mut positive: Vec<_> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        positive.sort_unstable();
        positive.dedup();
        PairLabels { n_atoms, positive }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.positive.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Positive pairs, sorted.
    pub fn positive(&self) -> &[(usize, usize)] {
        &self.positive
    }

    /// Labels as 0/1 in [`pair_list`] order.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_atoms * self.n_atoms.saturating_sub(1) / 2];
        for &(u, v) in &self.positive {
            out[pair_index(self.n_atoms, u, v)] = 1.0;
        }
        out
    }
}

fn map_index(g: &MolGraph, side: &'static str) -> Result<HashMap<u32, usize>, LabelError> {
    let mut out = HashMap::new();
    for (i, a) in g.atoms().iter().enumerate() {
        if let Some(m) = a.map_number {
            if out.insert(m, i).is_some() {
                return Err(LabelError::DuplicateMap { map: m, side });
            }
        }
    }
    Ok(out)
}

/// Labels and true edits of a mapped reaction, in reactant atom indices.
///
/// Only the largest product component (first one on ties) is compared.
/// A pair is positive iff its bond type differs between the sides, where
/// atoms absent from that component count as unbonded; pairs with both
/// atoms absent are never positive.
pub fn label_pairs(reactants: &MolGraph, product: &MolGraph) -> Result<(PairLabels, EditSet), LabelError> {
    let r_maps = map_index(reactants, "reactants")?;
    map_index(product, "product")?;
    let mut p_to_r = vec![usize::MAX; product.n_atoms()];
    for (i, a) in product.atoms().iter().enumerate() {
        let m = a.map_number.ok_or(LabelError::UnmappedProductAtom { atom: i })?;
        p_to_r[i] = *r_maps.get(&m).ok_or(LabelError::MissingReactantMap(m))?;
    }
    let comps = product.components();
    let n_comp = comps.iter().copied().max().map_or(0, |c| c + 1);
    let mut sizes = vec![0usize; n_comp];
    for &c in &comps {
        sizes[c] += 1;
    }
    let main = (0..n_comp).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)));
    let mut present = vec![false; reactants.n_atoms()];
    let mut r_to_p = vec![usize::MAX; reactants.n_atoms()];
    for (i, &c) in comps.iter().enumerate() {
        if Some(c) == main {
            present[p_to_r[i]] = true;
            r_to_p[p_to_r[i]] = i;
        }
    }
    let product_type = |u: usize, v: usize| {
        if present[u] && present[v] {
            product.bond_type(r_to_p[u], r_to_p[v])
        } else {
            BondType::None
        }
    };
    let mut edits = Vec::new();
    // reactant bonds that change or vanish
    for b in reactants.bonds() {
        if !present[b.a] && !present[b.b] {
            continue;
        }
        let t = product_type(b.a, b.b);
        if t != b.order {
            edits.push(Edit::new(b.a, b.b, t));
        }
    }
    // product bonds that are new
    for b in product.bonds() {
        let (u, v) = (p_to_r[b.a], p_to_r[b.b]);
        if present[u] && present[v] && reactants.bond_type(u, v) == BondType::None {
            edits.push(Edit::new(u, v, b.order));
        }
    }
    let edits = EditSet::new(edits).expect("each pair is visited once");
    let labels = PairLabels::from_pairs(reactants.n_atoms(), edits.pairs());
    Ok((labels, edits))
}

/// `b_uv` for one pair.
pub fn pair_features(g: &MolGraph, comps: &[usize], u: usize, v: usize) -> [f64; PAIR_FDIM] {
    let mut f = [0.0; PAIR_FDIM];
    let t = if u == v { BondType::None } else { g.bond_type(u, v) };
    f[t.code() as usize] = 1.0;
    f[5] = f64::from(u8::from(comps[u] == comps[v]));
    f
}

/// Precomputed network inputs for one reactant graph.
#[derive(Debug, Clone)]
pub struct CenterInput {
    pub graph: GraphTensors,
    pub pairs: Vec<(usize, usize)>,
    pair_u: Vec<usize>,
    pair_v: Vec<usize>,
    /// `b_uv` for every pair in `pairs`.
    pair_feats: Matrix,
    /// `b_uv` for every ordered pair including `u == v`, row `u * n + v`.
    all_pair_feats: Matrix,
}

impl CenterInput {
    pub fn new(g: &MolGraph, opts: FeatureOptions) -> CenterInput {
        let n = g.n_atoms();
        let comps = g.components();
        let pairs = pair_list(n);
        let mut data = Vec::with_capacity(pairs.len() * PAIR_FDIM);
        for &(u, v) in &pairs {
            data.extend_from_slice(&pair_features(g, &comps, u, v));
        }
        let mut all = Vec::with_capacity(n * n * PAIR_FDIM);
        for u in 0..n {
            for v in 0..n {
                all.extend_from_slice(&pair_features(g, &comps, u, v));
            }
        }
        CenterInput {
            graph: GraphTensors::new(g, opts),
            pair_u: pairs.iter().map(|p| p.0).collect(),
            pair_v: pairs.iter().map(|p| p.1).collect(),
            pair_feats: Matrix::from_vec(pairs.len(), PAIR_FDIM, data),
            all_pair_feats: Matrix::from_vec(n * n, PAIR_FDIM, all),
            pairs,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.graph.n_atoms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterVariant {
    #[default]
    Local,
    Global,
}

impl std::str::FromStr for CenterVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(CenterVariant::Local),
            "global" => Ok(CenterVariant::Global),
            other => Err(format!("unknown center variant '{other}'")),
        }
    }
}

impl std::fmt::Display for CenterVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CenterVariant::Local => "local",
            CenterVariant::Global => "global",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterModel {
    pub variant: CenterVariant,
    pub wln: WlnConfig,
    pub features: FeatureOptions,
}

const PREFIX: &str = "center";

impl CenterModel {
    pub fn new(variant: CenterVariant, hidden: usize, depth: usize) -> CenterModel {
        let features = FeatureOptions::default();
        CenterModel {
            variant,
            wln: WlnConfig::new("center.wln", features.atom_dim(), hidden, depth),
            features,
        }
    }

    pub fn activation(&self) -> Activation {
        self.wln.activation
    }

    fn name(t: &str) -> String {
        format!("{PREFIX}.{t}")
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut impl Rng) {
        let h = self.wln.hidden;
        self.wln.init(store, rng);
        store.insert_xavier(Self::name("M_a"), h, h, rng);
        store.insert_xavier(Self::name("M_b"), h, PAIR_FDIM, rng);
        store.insert_xavier(Self::name("u"), 1, h, rng);
        if self.variant == CenterVariant::Global {
            store.insert_xavier(Self::name("P_a"), h, h, rng);
            store.insert_xavier(Self::name("P_b"), h, PAIR_FDIM, rng);
            store.insert_xavier(Self::name("u_att"), 1, h, rng);
        }
        store.set_meta("kind", "center");
        store.set_meta("center.variant", self.variant);
        store.set_meta("center.hidden", h);
        store.set_meta("center.depth", self.wln.depth);
        store.set_meta("center.activation", self.wln.activation);
    }

    /// Rebuilds the model description from checkpoint metadata.
    pub fn from_store(store: &ParamStore) -> Result<CenterModel, String> {
        let get = |k: &str| store.meta(k).ok_or_else(|| format!("checkpoint lacks '{k}'"));
        if get("kind")? != "center" {
            return Err("not a center checkpoint".into());
        }
        let variant = get("center.variant")?.parse()?;
        let hidden = get("center.hidden")?.parse().map_err(|e| format!("center.hidden: {e}"))?;
        let depth = get("center.depth")?.parse().map_err(|e| format!("center.depth: {e}"))?;
        let mut m = CenterModel::new(variant, hidden, depth);
        m.wln.activation = get("center.activation")?.parse()?;
        m.wln.validate(store).map_err(|e| e.to_string())?;
        Ok(m)
    }

    /// `(u, v)` pair head: `σ(uᵀ τ(M_a x_u + M_a x_v + M_b b_uv))` for the
    /// rows of `x` selected by `iu`/`iv`, returned as logits before `σ`.
    fn pair_head(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: Var,
        iu: &[usize],
        iv: &[usize],
        b: &Matrix,
        names: [&str; 3],
    ) -> Result<Var, DiffError> {
        let ma = tape.param(store, &Self::name(names[0]))?;
        let mb = tape.param(store, &Self::name(names[1]))?;
        let u = tape.param(store, &Self::name(names[2]))?;
        let a = tape.linear(x, ma)?;
        let au = tape.gather_rows(a, iu.to_vec())?;
        let av = tape.gather_rows(a, iv.to_vec())?;
        let bc = tape.constant(b.clone());
        let bm = tape.linear(bc, mb)?;
        let s = tape.add(au, av)?;
        let s = tape.add(s, bm)?;
        let t = tape.activate(s, self.activation());
        tape.linear(t, u)
    }

    /// Pair probabilities for every pair in `input.pairs` (a `P x 1` node),
    /// plus the `n x n` attention matrix for the global variant.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: &CenterInput) -> Result<CenterOutput, DiffError> {
        let x = tape.constant(input.graph.atom_feats.clone());
        let c = embed_atoms(tape, store, &self.wln, &input.graph, x)?.c;
        let n = input.n_atoms();
        let (ctx, attention) = match self.variant {
            CenterVariant::Local => (c, None),
            CenterVariant::Global => {
                let iu: Vec<usize> = (0..n * n).map(|k| k / n).collect();
                let iv: Vec<usize> = (0..n * n).map(|k| k % n).collect();
                let logits = self.pair_head(tape, store, c, &iu, &iv, &input.all_pair_feats, ["P_a", "P_b", "u_att"])?;
                let alpha = tape.sigmoid(logits);
                let alpha = tape.reshape(alpha, n, n)?;
                (tape.matmul(alpha, c)?, Some(alpha))
            }
        };
        let logits = self.pair_head(tape, store, ctx, &input.pair_u, &input.pair_v, &input.pair_feats, ["M_a", "M_b", "u"])?;
        let scores = tape.sigmoid(logits);
        Ok(CenterOutput { scores, attention })
    }

    /// `-Σ_{u<v} [y ln s + (1-y) ln(1-s)]` on the tape.
    pub fn loss(&self, tape: &mut Tape, store: &ParamStore, input: &CenterInput, labels: &PairLabels) -> Result<Var, DiffError> {
        let out = self.forward(tape, store, input)?;
        tape.bce(out.scores, labels.dense(), LOSS_FLOOR)
    }

    /// Inference: symmetric score matrix and, for the global model, the
    /// attention map.
    pub fn score(&self, store: &ParamStore, input: &CenterInput) -> Result<(ScoreMatrix, Option<Matrix>), DiffError> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, input)?;
        let scores = ScoreMatrix {
            n_atoms: input.n_atoms(),
            values: tape.value(out.scores).data().to_vec(),
        };
        Ok((scores, out.attention.map(|a| tape.value(a).clone())))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CenterOutput {
    pub scores: Var,
    pub attention: Option<Var>,
}

/// Symmetric pair scores stored once per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_atoms: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    /// `values` in [`pair_list`] order.
    pub fn new(n_atoms: usize, values: Vec<f64>) -> ScoreMatrix {
        assert_eq!(values.len(), n_atoms * n_atoms.saturating_sub(1) / 2);
        ScoreMatrix { n_atoms, values }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Score of `(u, v)` in either order. Panics on `u == v`.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        assert_ne!(u, v, "diagonal is not scored");
        self.values[pair_index(self.n_atoms, u.min(v), u.max(v))]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The `k` highest-scoring pairs, ties broken by `(u, v)` ascending.
pub fn top_k_pairs(scores: &ScoreMatrix, k: usize) -> Vec<(usize, usize)> {
    let pairs = pair_list(scores.n_atoms);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| scores.values[b].total_cmp(&scores.values[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.into_iter().map(|i| pairs[i]).collect()
}

/// True iff every positive pair of `truth` is in `predicted`.
pub fn coverage(predicted: &[(usize, usize)], truth: &PairLabels) -> bool {
    truth
        .positive()
        .iter()
        .all(|&(u, v)| predicted.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (u, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_indexing() {
        let n = 7;
        for (i, &(u, v)) in pair_list(n).iter().enumerate() {
            assert_eq!(pair_index(n, u, v), i);
        }
    }

    #[test]
    fn substitution_labels() {
        let r = parse_smiles("[CH3:1][Cl:2].[NH2:3][CH3:4]").unwrap();
        let p = parse_smiles("[CH3:1][NH:3][CH3:4]").unwrap();
        let (labels, edits) = label_pairs(&r, &p).unwrap();
        assert_eq!(labels.positive(), &[(0, 1), (0, 2)]);
        assert_eq!(edits.to_string(), "{(0,1)->none, (0,2)->single}");
    }

    #[test]
    fn identical_sides_have_no_labels() {
        let r = parse_smiles("[CH3:1][OH:2]").unwrap();
        let (labels, edits) = label_pairs(&r, &r).unwrap();
        assert!(labels.positive().is_empty() && edits.is_empty());
    }

    #[test]
    fn label_errors() {
        let r = parse_smiles("[CH3:1][OH:2]").unwrap();
        assert_eq!(
            label_pairs(&r, &parse_smiles("[CH3:1]O").unwrap()).unwrap_err(),
            LabelError::UnmappedProductAtom { atom: 1 }
        );
        assert_eq!(
            label_pairs(&parse_smiles("[CH3:1][OH:1]").unwrap(), &r).unwrap_err(),
            LabelError::DuplicateMap { map: 1, side: "reactants" }
        );
        assert_eq!(
            label_pairs(&r, &parse_smiles("[CH3:1][OH:5]").unwrap()).unwrap_err(),
            LabelError::MissingReactantMap(5)
        );
    }

    #[test]
    fn zero_head_gives_one_half() {
        let model = CenterModel::new(CenterVariant::Local, 8, 2);
        let mut store = ParamStore::new();
        model.init(&mut store, &mut ChaCha8Rng::seed_from_u64(0));
        store.get_mut("center.u").unwrap().value.fill(0.0);
        let input = CenterInput::new(&parse_smiles("CCO.N").unwrap(), model.features);
        let (s, att) = model.score(&store, &input).unwrap();
        assert!(att.is_none());
        assert!(s.values().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let s = ScoreMatrix::new(4, vec![0.3; 6]);
        assert_eq!(top_k_pairs(&s, 2), vec![(0, 1), (0, 2)]);
        assert_eq!(top_k_pairs(&s, 100).len(), 6);
    }

    #[test]
    fn coverage_cases() {
        let empty = PairLabels::from_pairs(5, []);
        assert!(coverage(&[], &empty));
        let t = PairLabels::from_pairs(5, [(1, 2)]);
        assert!(coverage(&[(3, 4), (2, 1)], &t));
        assert!(!coverage(&[(3, 4)], &t));
    }

    #[test]
    fn checkpoint_metadata_round_trip() {
        let model = CenterModel::new(CenterVariant::Global, 6, 2);
        let mut store = ParamStore::new();
        model.init(&mut store, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(CenterModel::from_store(&store).unwrap(), model);
    }
}
