//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Calling
//! [`Tape::backward`] on a 1x1 result sweeps the tape in reverse and returns
//! the gradient of every node that depends on a trainable leaf.

use super::{DiffError, Matrix, ParamStore};
use std::collections::HashMap;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise non-linearity used between linear maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Linear(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Log(Var, f64),
    SumRows(Var),
    SumAll(Var),
    Dot(Var, Var),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
    ConcatCols(Var, Var),
    ConcatRows(Vec<Var>),
    Reshape(Var),
    SoftmaxLogLoss(Var, usize, Vec<f64>),
    Bce(Var, Vec<f64>, f64),
}

struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<String, Var>,
    param_order: Vec<(String, Var)>,
    branch_signature: u64,
}

fn shape_err(op: &'static str, a: &Matrix, b: &Matrix) -> DiffError {
    DiffError::ShapeMismatch {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            branch_signature: 0xcbf2_9ce4_8422_2325,
            ..Tape::default()
        }
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn note_branch(&mut self, taken: bool) {
        self.branch_signature = (self.branch_signature ^ u64::from(taken)).wrapping_mul(0x0000_0100_0000_01b3);
    }

    /// Hash of every data-dependent branch taken so far (ReLU signs and log
    /// clamps). Two passes with equal signatures evaluate the same smooth
    /// piece of the function.
    pub fn branch_signature(&self) -> u64 {
        self.branch_signature
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// A constant input.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A leaf whose gradient is tracked.
    pub fn variable(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Trainable leaf for a named parameter. Repeated calls with the same
    /// name return the same node.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var, DiffError> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let t = store
            .get(name)
            .ok_or_else(|| DiffError::UnknownParam(name.to_string()))?;
        let v = self.push(t.value.clone(), Op::Leaf, t.requires_grad);
        self.params.insert(name.to_string(), v);
        self.param_order.push((name.to_string(), v));
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            return Err(shape_err("matmul", va, vb));
        }
        let out = va.matmul(vb);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// Matrix-vector product `w x` for a column vector `x`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, DiffError> {
        if self.value(x).cols() != 1 {
            return Err(shape_err("matvec", self.value(w), self.value(x)));
        }
        self.matmul(w, x)
    }

    /// Row-wise linear map `x w^T`: each row of `x` (length `in`) is mapped
    /// by `w` (`out x in`).
    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var, DiffError> {
        let (vx, vw) = (self.value(x), self.value(w));
        if vx.cols() != vw.cols() {
            return Err(shape_err("linear", vx, vw));
        }
        let out = vx.matmul_nt(vw);
        let rg = self.rg(x) || self.rg(w);
        Ok(self.push(out, Op::Linear(x, w), rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err(op, va, vb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.same_shape("add", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.same_shape("sub", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    /// Adds the `1 x c` row `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, DiffError> {
        let (va, vr) = (self.value(a), self.value(row));
        if vr.rows() != 1 || vr.cols() != va.cols() {
            return Err(shape_err("add_row", va, vr));
        }
        let mut out = va.clone();
        for r in 0..out.rows() {
            for (o, &x) in out.row_mut(r).iter_mut().zip(vr.data()) {
                *o += x;
            }
        }
        let rg = self.rg(a) || self.rg(row);
        Ok(self.push(out, Op::AddRow(a, row), rg))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).map(|x| x * k);
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, k), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        let signs: Vec<bool> = self.value(a).data().iter().map(|&x| x > 0.0).collect();
        for s in signs {
            self.note_branch(s);
        }
        let rg = self.rg(a);
        self.push(out, Op::Relu(a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        let rg = self.rg(a);
        self.push(out, Op::Tanh(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        let rg = self.rg(a);
        self.push(out, Op::Sigmoid(a), rg)
    }

    pub fn activate(&mut self, a: Var, act: Activation) -> Var {
        match act {
            Activation::Relu => self.relu(a),
            Activation::Tanh => self.tanh(a),
        }
    }

    /// Natural log of `max(a, floor)`; the gradient is zero where clamped.
    pub fn log(&mut self, a: Var, floor: f64) -> Var {
        let clamped: Vec<bool> = self.value(a).data().iter().map(|&x| x <= floor).collect();
        for c in clamped {
            self.note_branch(c);
        }
        let out = self.value(a).map(|x| x.max(floor).ln());
        let rg = self.rg(a);
        self.push(out, Op::Log(a, floor), rg)
    }

    /// Column sums: `n x c -> 1 x c`.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let mut out = Matrix::zeros(1, va.cols());
        for r in 0..va.rows() {
            for (o, &x) in out.data_mut().iter_mut().zip(va.row(r)) {
                *o += x;
            }
        }
        let rg = self.rg(a);
        self.push(out, Op::SumRows(a), rg)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let out = Matrix::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(out, Op::SumAll(a), rg)
    }

    /// Inner product of two same-shaped tensors, as a 1x1 node.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.same_shape("dot", a, b)?;
        let s: f64 = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .sum();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Matrix::scalar(s), Op::Dot(a, b), rg))
    }

    /// `out[k] = a[idx[k]]`.
    pub fn gather_rows(&mut self, a: Var, idx: Vec<usize>) -> Result<Var, DiffError> {
        let va = self.value(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= va.rows()) {
            return Err(DiffError::RowOutOfRange {
                index: bad,
                rows: va.rows(),
            });
        }
        let mut out = Matrix::zeros(idx.len(), va.cols());
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(va.row(i));
        }
        let rg = self.rg(a);
        Ok(self.push(out, Op::GatherRows(a, idx), rg))
    }

    /// `out[idx[k]] += a[k]` into an `n_out`-row result, summing in `k`
    /// order.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Vec<usize>, n_out: usize) -> Result<Var, DiffError> {
        let va = self.value(a);
        if idx.len() != va.rows() {
            return Err(DiffError::ShapeMismatch {
                op: "scatter_add_rows",
                left: va.shape(),
                right: (idx.len(), 1),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n_out) {
            return Err(DiffError::RowOutOfRange { index: bad, rows: n_out });
        }
        let mut out = Matrix::zeros(n_out, va.cols());
        for (k, &i) in idx.iter().enumerate() {
            for (o, &x) in out.row_mut(i).iter_mut().zip(va.row(k)) {
                *o += x;
            }
        }
        let rg = self.rg(a);
        Ok(self.push(out, Op::ScatterAddRows(a, idx), rg))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rows() != vb.rows() {
            return Err(shape_err("concat_cols", va, vb));
        }
        let mut out = Matrix::zeros(va.rows(), va.cols() + vb.cols());
        for r in 0..va.rows() {
            let row = out.row_mut(r);
            row[..va.cols()].copy_from_slice(va.row(r));
            row[va.cols()..].copy_from_slice(vb.row(r));
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::ConcatCols(a, b), rg))
    }

    /// Stacks same-width matrices vertically.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, DiffError> {
        let cols = parts.first().map_or(0, |&p| self.value(p).cols());
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let vp = self.value(p);
            if vp.cols() != cols {
                return Err(shape_err("concat_rows", self.value(parts[0]), vp));
            }
            rows += vp.rows();
            data.extend_from_slice(vp.data());
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, DiffError> {
        let va = self.value(a);
        if va.len() != rows * cols {
            return Err(DiffError::ShapeMismatch {
                op: "reshape",
                left: va.shape(),
                right: (rows, cols),
            });
        }
        let out = Matrix::from_vec(rows, cols, va.data().to_vec());
        let rg = self.rg(a);
        Ok(self.push(out, Op::Reshape(a), rg))
    }

    /// `-log softmax(scores)[target]` over all entries of `scores`.
    pub fn softmax_logloss(&mut self, scores: Var, target: usize) -> Result<Var, DiffError> {
        let vs = self.value(scores);
        if vs.is_empty() {
            return Err(DiffError::EmptyInput("softmax_logloss"));
        }
        if target >= vs.len() {
            return Err(DiffError::RowOutOfRange {
                index: target,
                rows: vs.len(),
            });
        }
        let max = vs.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = vs.data().iter().map(|&s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        let loss = z.ln() + max - vs.data()[target];
        let probs = exps.into_iter().map(|e| e / z).collect();
        let rg = self.rg(scores);
        Ok(self.push(Matrix::scalar(loss), Op::SoftmaxLogLoss(scores, target, probs), rg))
    }

    /// Summed binary cross-entropy `-(y ln s + (1-y) ln(1-s))` of
    /// probabilities `s` against `labels`, with logs clamped at `floor`.
    pub fn bce(&mut self, s: Var, labels: Vec<f64>, floor: f64) -> Result<Var, DiffError> {
        let vs = self.value(s);
        if vs.len() != labels.len() {
            return Err(DiffError::ShapeMismatch {
                op: "bce",
                left: vs.shape(),
                right: (labels.len(), 1),
            });
        }
        let mut loss = 0.0;
        let mut branches = Vec::with_capacity(2 * labels.len());
        for (&p, &y) in vs.data().iter().zip(&labels) {
            branches.push(p <= floor);
            branches.push(1.0 - p <= floor);
            loss -= y * p.max(floor).ln() + (1.0 - y) * (1.0 - p).max(floor).ln();
        }
        for b in branches {
            self.note_branch(b);
        }
        let rg = self.rg(s);
        Ok(self.push(Matrix::scalar(loss), Op::Bce(s, labels, floor), rg))
    }

    /// Reverse sweep from a 1x1 node.
    pub fn backward(&self, root: Var) -> Result<Gradients, DiffError> {
        let shape = self.value(root).shape();
        if shape != (1, 1) {
            return Err(DiffError::NonScalarRoot(shape));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Matrix::scalar(1.0));
        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let mut send = |v: Var, d: Matrix| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&d),
                slot @ None => *slot = Some(d),
            }
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    send(*a, g.matmul_nt(val(*b)));
                }
                if self.rg(*b) {
                    send(*b, val(*a).matmul_tn(g));
                }
            }
            Op::Linear(x, w) => {
                if self.rg(*x) {
                    send(*x, g.matmul(val(*w)));
                }
                if self.rg(*w) {
                    send(*w, g.matmul_tn(val(*x)));
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    send(*a, g.zip_map(val(*b), |x, y| x * y));
                }
                if self.rg(*b) {
                    send(*b, g.zip_map(val(*a), |x, y| x * y));
                }
            }
            Op::AddRow(a, row) => {
                send(*a, g.clone());
                if self.rg(*row) {
                    let mut d = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, &x) in d.data_mut().iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    send(*row, d);
                }
            }
            Op::Scale(a, k) => send(*a, g.map(|x| x * k)),
            Op::Relu(a) => send(*a, g.zip_map(val(*a), |d, x| if x > 0.0 { d } else { 0.0 })),
            Op::Tanh(a) => send(*a, g.zip_map(&node.value, |d, y| d * (1.0 - y * y))),
            Op::Sigmoid(a) => send(*a, g.zip_map(&node.value, |d, y| d * y * (1.0 - y))),
            Op::Log(a, floor) => {
                let floor = *floor;
                send(*a, g.zip_map(val(*a), |d, x| if x > floor { d / x } else { 0.0 }))
            }
            Op::SumRows(a) => {
                let va = val(*a);
                let mut d = Matrix::zeros(va.rows(), va.cols());
                for r in 0..va.rows() {
                    d.row_mut(r).copy_from_slice(g.data());
                }
                send(*a, d);
            }
            Op::SumAll(a) => {
                let (r, c) = val(*a).shape();
                send(*a, Matrix::filled(r, c, g.item()));
            }
            Op::Dot(a, b) => {
                let k = g.item();
                if self.rg(*a) {
                    send(*a, val(*b).map(|x| x * k));
                }
                if self.rg(*b) {
                    send(*b, val(*a).map(|x| x * k));
                }
            }
            Op::GatherRows(a, idx) => {
                let va = val(*a);
                let mut d = Matrix::zeros(va.rows(), va.cols());
                for (k, &i) in idx.iter().enumerate() {
                    for (o, &x) in d.row_mut(i).iter_mut().zip(g.row(k)) {
                        *o += x;
                    }
                }
                send(*a, d);
            }
            Op::ScatterAddRows(a, idx) => {
                let mut d = Matrix::zeros(idx.len(), g.cols());
                for (k, &i) in idx.iter().enumerate() {
                    d.row_mut(k).copy_from_slice(g.row(i));
                }
                send(*a, d);
            }
            Op::ConcatCols(a, b) => {
                let ca = val(*a).cols();
                let cb = val(*b).cols();
                let mut da = Matrix::zeros(g.rows(), ca);
                let mut db = Matrix::zeros(g.rows(), cb);
                for r in 0..g.rows() {
                    da.row_mut(r).copy_from_slice(&g.row(r)[..ca]);
                    db.row_mut(r).copy_from_slice(&g.row(r)[ca..]);
                }
                send(*a, da);
                send(*b, db);
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = val(p).shape();
                    let slice = &g.data()[offset * c..(offset + r) * c];
                    send(p, Matrix::from_vec(r, c, slice.to_vec()));
                    offset += r;
                }
            }
            Op::Reshape(a) => {
                let (r, c) = val(*a).shape();
                send(*a, Matrix::from_vec(r, c, g.data().to_vec()));
            }
            Op::SoftmaxLogLoss(s, target, probs) => {
                let (r, c) = val(*s).shape();
                let k = g.item();
                let mut d: Vec<f64> = probs.iter().map(|p| p * k).collect();
                d[*target] -= k;
                send(*s, Matrix::from_vec(r, c, d));
            }
            Op::Bce(s, labels, floor) => {
                let k = g.item();
                let floor = *floor;
                let vs = val(*s);
                let d: Vec<f64> = vs
                    .data()
                    .iter()
                    .zip(labels)
                    .map(|(&p, &y)| {
                        let mut d = 0.0;
                        if p > floor {
                            d -= y / p;
                        }
                        if 1.0 - p > floor {
                            d += (1.0 - y) / (1.0 - p);
                        }
                        d * k
                    })
                    .collect();
                send(*s, Matrix::from_vec(vs.rows(), vs.cols(), d));
            }
        }
    }

    /// Adds the gradients of every parameter leaf into `store`.
    pub fn accumulate_param_grads(&self, grads: &Gradients, store: &mut ParamStore) {
        for (name, v) in &self.param_order {
            if let (Some(g), Some(t)) = (grads.get(*v), store.get_mut(name)) {
                t.grad.add_assign(g);
            }
        }
    }

    /// `(name, node)` for every parameter pulled onto this tape.
    pub fn params(&self) -> &[(String, Var)] {
        &self.param_order
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sigmoid_at_zero() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::scalar(0.0));
        let y = t.sigmoid(x);
        assert_eq!(t.value(y).item(), 0.5);
    }

    #[test]
    fn uniform_softmax_loss() {
        let mut t = Tape::new();
        let s = t.constant(Matrix::column(&[0.3, 0.3, 0.3, 0.3]));
        for target in 0..4 {
            let l = t.softmax_logloss(s, target).unwrap();
            assert!(close(t.value(l).item(), 4f64.ln(), 1e-12));
        }
    }

    #[test]
    fn relu_backward_masks() {
        let mut t = Tape::new();
        let x = t.variable(Matrix::row_vector(&[-1.0, 2.0]));
        let w = t.constant(Matrix::row_vector(&[3.0, 5.0]));
        let y = t.relu(x);
        let l = t.dot(y, w).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[0.0, 5.0]);
    }

    #[test]
    fn dot_gradient_is_other_operand() {
        let mut t = Tape::new();
        let w = t.variable(Matrix::column(&[0.1, -0.2, 0.3]));
        let x = t.constant(Matrix::column(&[1.0, 2.0, 3.0]));
        let l = t.dot(w, x).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(w).unwrap().data(), &[1.0, 2.0, 3.0]);
        assert!(g.get(x).is_none());
    }

    #[test]
    fn shape_errors_report_both_shapes() {
        let mut t = Tape::new();
        let a = t.constant(Matrix::zeros(2, 3));
        let b = t.constant(Matrix::zeros(2, 2));
        assert_eq!(
            t.matmul(a, b).unwrap_err(),
            DiffError::ShapeMismatch {
                op: "matmul",
                left: (2, 3),
                right: (2, 2)
            }
        );
        assert!(t.add(a, b).is_err());
        let msg = t.linear(a, b).unwrap_err().to_string();
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut t = Tape::new();
        let a = t.variable(Matrix::zeros(2, 2));
        assert_eq!(t.backward(a).unwrap_err(), DiffError::NonScalarRoot((2, 2)));
    }

    #[test]
    fn shared_leaf_accumulates() {
        // l = sum(x * x) -> dl/dx = 2x
        let mut t = Tape::new();
        let x = t.variable(Matrix::row_vector(&[1.0, -2.0]));
        let y = t.mul(x, x).unwrap();
        let l = t.sum_all(y);
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[2.0, -4.0]);
    }

    #[test]
    fn empty_row_gather_and_scatter() {
        let mut t = Tape::new();
        let x = t.variable(Matrix::filled(3, 2, 1.0));
        let none = t.gather_rows(x, vec![]).unwrap();
        assert_eq!(t.value(none).shape(), (0, 2));
        let back = t.scatter_add_rows(none, vec![], 3).unwrap();
        assert_eq!(t.value(back), &Matrix::zeros(3, 2));
        let l = t.sum_all(back);
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap(), &Matrix::zeros(3, 2));
    }
}
