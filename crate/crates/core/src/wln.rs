//! Weisfeiler-Lehman Network: neural relabeling of atoms followed by a
//! rank-1 edge comparison that produces one vector per atom.
//!
//! With `h⁰ = W_in x_v`, each of the `depth` layers computes
//!
//! ```text
//! h_v ← τ(U1 h_v + U2 Σ_{u∈N(v)} τ(V [h_u, f_uv]))
//! ```
//!
//! with `U1`, `U2`, `V` shared by all layers, and the atom vector is
//!
//! ```text
//! c_v = Σ_{u∈N(v)} (W0 h_u) ⊙ (W1 f_uv) ⊙ (W2 h_v).
//! ```
//!
//! No bias terms are used anywhere, so an all-zero input with centered
//! messages stays exactly zero.

use crate::chemgraph::{atom_features_with, bond_features, FeatureOptions, MolGraph, BOND_FDIM};
use crate::diffengine::{Activation, DiffError, Matrix, ParamStore, Tape, Var};
use rand::Rng;

/// Tensors describing one graph for the network: atom features and both
/// directions of every bond.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTensors {
    pub n_atoms: usize,
    pub atom_feats: Matrix,
    /// Message source of each directed edge.
    pub src: Vec<usize>,
    /// Message destination of each directed edge.
    pub dst: Vec<usize>,
    /// `f_uv` per directed edge, `2 * n_bonds` rows.
    pub bond_feats: Matrix,
}

impl GraphTensors {
    pub fn new(g: &MolGraph, opts: FeatureOptions) -> GraphTensors {
        let n = g.n_atoms();
        let mut atom_data = Vec::with_capacity(n * opts.atom_dim());
        for v in 0..n {
            atom_data.extend(atom_features_with(g, v, opts));
        }
        let mut src = Vec::with_capacity(2 * g.n_bonds());
        let mut dst = Vec::with_capacity(2 * g.n_bonds());
        let mut bond_data = Vec::with_capacity(2 * g.n_bonds() * BOND_FDIM);
        for (i, b) in g.bonds().iter().enumerate() {
            let f = bond_features(g, i);
            for (s, d) in [(b.a, b.b), (b.b, b.a)] {
                src.push(s);
                dst.push(d);
                bond_data.extend_from_slice(&f);
            }
        }
        GraphTensors {
            n_atoms: n,
            atom_feats: Matrix::from_vec(n, opts.atom_dim(), atom_data),
            bond_feats: Matrix::from_vec(src.len(), BOND_FDIM, bond_data),
            src,
            dst,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.src.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlnConfig {
    /// Parameter name prefix, e.g. `"center.wln"`.
    pub prefix: String,
    pub input_dim: usize,
    pub bond_dim: usize,
    pub hidden: usize,
    pub depth: usize,
    pub activation: Activation,
    /// Learn `W_in`. When false, `input_dim` must equal `hidden` and
    /// `h⁰ = x_v`.
    pub project_input: bool,
    /// Subtract `τ(V [0, f_uv])` from every message so a zero input maps to
    /// zero output.
    pub centered_messages: bool,
}

impl WlnConfig {
    pub fn new(prefix: &str, input_dim: usize, hidden: usize, depth: usize) -> WlnConfig {
        WlnConfig {
            prefix: prefix.to_string(),
            input_dim,
            bond_dim: BOND_FDIM,
            hidden,
            depth,
            activation: Activation::Relu,
            project_input: true,
            centered_messages: false,
        }
    }

    pub fn name(&self, tensor: &str) -> String {
        format!("{}.{}", self.prefix, tensor)
    }

    fn shapes(&self) -> Vec<(&'static str, usize, usize)> {
        let h = self.hidden;
        let mut s = vec![
            ("U1", h, h),
            ("U2", h, h),
            ("V", h, h + self.bond_dim),
            ("W0", h, h),
            ("W1", h, self.bond_dim),
            ("W2", h, h),
        ];
        if self.project_input {
            s.push(("W_in", h, self.input_dim));
        }
        s
    }

    /// Adds freshly initialized parameters to `store`.
    pub fn init(&self, store: &mut ParamStore, rng: &mut impl Rng) {
        assert!(self.project_input || self.input_dim == self.hidden);
        for (t, r, c) in self.shapes() {
            store.insert_xavier(self.name(t), r, c, rng);
        }
    }

    /// Checks that `store` holds every tensor with the expected shape.
    pub fn validate(&self, store: &ParamStore) -> Result<(), DiffError> {
        for (t, r, c) in self.shapes() {
            let name = self.name(t);
            let got = store.get(&name).ok_or_else(|| DiffError::UnknownParam(name.clone()))?;
            if got.value.shape() != (r, c) {
                return Err(DiffError::ShapeMismatch {
                    op: "wln parameters",
                    left: got.value.shape(),
                    right: (r, c),
                });
            }
        }
        Ok(())
    }
}

/// Per-atom outputs of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct AtomEmbeddings {
    /// `n_atoms x hidden` matrix of `c_v`.
    pub c: Var,
    /// Final-layer `h_v`.
    pub h: Var,
}

/// Runs the network on `graph` with node inputs `x` (`n_atoms x input_dim`).
pub fn embed_atoms(
    tape: &mut Tape,
    store: &ParamStore,
    cfg: &WlnConfig,
    graph: &GraphTensors,
    x: Var,
) -> Result<AtomEmbeddings, DiffError> {
    let n = graph.n_atoms;
    let xs = tape.value(x).shape();
    if xs != (n, cfg.input_dim) {
        return Err(DiffError::ShapeMismatch {
            op: "wln input",
            left: xs,
            right: (n, cfg.input_dim),
        });
    }
    let act = cfg.activation;
    let mut h = if cfg.project_input {
        let w_in = tape.param(store, &cfg.name("W_in"))?;
        tape.linear(x, w_in)?
    } else {
        x
    };
    let u1 = tape.param(store, &cfg.name("U1"))?;
    let u2 = tape.param(store, &cfg.name("U2"))?;
    let v = tape.param(store, &cfg.name("V"))?;
    let fb = tape.constant(graph.bond_feats.clone());
    let baseline = if cfg.centered_messages {
        let zeros = tape.constant(Matrix::zeros(graph.n_edges(), cfg.hidden));
        let cat = tape.concat_cols(zeros, fb)?;
        let pre = tape.linear(cat, v)?;
        Some(tape.activate(pre, act))
    } else {
        None
    };
    for _ in 0..cfg.depth {
        let hu = tape.gather_rows(h, graph.src.clone())?;
        let cat = tape.concat_cols(hu, fb)?;
        let pre = tape.linear(cat, v)?;
        let mut msg = tape.activate(pre, act);
        if let Some(b) = baseline {
            msg = tape.sub(msg, b)?;
        }
        let agg = tape.scatter_add_rows(msg, graph.dst.clone(), n)?;
        let self_part = tape.linear(h, u1)?;
        let nbr_part = tape.linear(agg, u2)?;
        let sum = tape.add(self_part, nbr_part)?;
        h = tape.activate(sum, act);
    }
    let w0 = tape.param(store, &cfg.name("W0"))?;
    let w1 = tape.param(store, &cfg.name("W1"))?;
    let w2 = tape.param(store, &cfg.name("W2"))?;
    let hu = tape.gather_rows(h, graph.src.clone())?;
    let hv = tape.gather_rows(h, graph.dst.clone())?;
    let a = tape.linear(hu, w0)?;
    let b = tape.linear(fb, w1)?;
    let c = tape.linear(hv, w2)?;
    let ab = tape.mul(a, b)?;
    let abc = tape.mul(ab, c)?;
    let c = tape.scatter_add_rows(abc, graph.dst.clone(), n)?;
    Ok(AtomEmbeddings { c, h })
}

/// Graph vector `c_G = Σ_v c_v` as a `1 x hidden` row.
pub fn embed_graph(
    tape: &mut Tape,
    store: &ParamStore,
    cfg: &WlnConfig,
    graph: &GraphTensors,
    x: Var,
) -> Result<Var, DiffError> {
    let e = embed_atoms(tape, store, cfg, graph, x)?;
    Ok(tape.sum_rows(e.c))
}

/// Convenience: embeds a molecule from its own atom features and returns
/// the `c_v` values.
pub fn atom_vectors(store: &ParamStore, cfg: &WlnConfig, g: &MolGraph, opts: FeatureOptions) -> Result<Matrix, DiffError> {
    let graph = GraphTensors::new(g, opts);
    let mut tape = Tape::new();
    let x = tape.constant(graph.atom_feats.clone());
    let e = embed_atoms(&mut tape, store, cfg, &graph, x)?;
    Ok(tape.value(e.c).clone())
}
