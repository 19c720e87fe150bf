use super::Matrix;
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use thiserror::Error;

/// A learned tensor and its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct DTensor {
    pub value: Matrix,
    pub grad: Matrix,
    pub requires_grad: bool,
}

impl DTensor {
    pub fn new(value: Matrix) -> DTensor {
        let (r, c) = value.shape();
        DTensor {
            value,
            grad: Matrix::zeros(r, c),
            requires_grad: true,
        }
    }

    pub fn frozen(value: Matrix) -> DTensor {
        DTensor {
            requires_grad: false,
            ..DTensor::new(value)
        }
    }
}

/// Uniform in `±sqrt(6 / (rows + cols))`.
pub fn xavier_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Named parameters plus free-form string metadata, both kept in sorted
/// order so iteration and serialization are deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    tensors: BTreeMap<String, DTensor>,
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub const CHECKPOINT_HEADER: &str = "REXGEN-CKPT v1";

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    /// Adds a tensor. Panics on a duplicate name, which would be a bug in
    /// model construction.
    pub fn insert(&mut self, name: impl Into<String>, tensor: DTensor) {
        let name = name.into();
        assert!(!name.contains(char::is_whitespace), "parameter name '{name}' has whitespace");
        let prev = self.tensors.insert(name.clone(), tensor);
        assert!(prev.is_none(), "duplicate parameter '{name}'");
    }

    pub fn insert_xavier(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut impl Rng) {
        self.insert(name, DTensor::new(xavier_uniform(rows, cols, rng)));
    }

    pub fn get(&self, name: &str) -> Option<&DTensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut DTensor> {
        self.tensors.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DTensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut DTensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn n_scalars(&self) -> usize {
        self.tensors.values().map(|t| t.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for t in self.tensors.values_mut() {
            t.grad.fill(0.0);
        }
    }

    pub fn scale_grads(&mut self, k: f64) {
        for t in self.tensors.values_mut() {
            t.grad.data_mut().iter_mut().for_each(|g| *g *= k);
        }
    }

    pub fn grads_finite(&self) -> bool {
        self.tensors.values().all(|t| t.grad.is_finite())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        assert!(!key.contains(char::is_whitespace) && !value.contains('\n'));
        self.meta.insert(key.to_string(), value);
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn meta_entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.meta.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Moves every tensor of `other` into `self`, names prefixed unchanged.
    pub fn absorb(&mut self, other: ParamStore) {
        for (k, v) in other.tensors {
            self.insert(k, v);
        }
    }

    /// Serializes values (not gradients) to the checkpoint text format:
    ///
    /// ```text
    /// REXGEN-CKPT v1
    /// meta <key> <value>        (zero or more, sorted by key)
    /// tensor <name> <rows> <cols>
    /// <rows lines of <cols> space-separated floats>
    /// ```
    ///
    /// Floats use Rust's shortest round-trip formatting, so a save/load
    /// cycle is lossless and identical stores produce identical bytes.
    pub fn to_checkpoint_string(&self) -> String {
        let mut out = String::new();
        out.push_str(CHECKPOINT_HEADER);
        out.push('\n');
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        for (name, t) in &self.tensors {
            let (r, c) = t.value.shape();
            let _ = writeln!(out, "tensor {name} {r} {c}");
            for i in 0..r {
                let row = t.value.row(i);
                for (j, x) in row.iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{x:?}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint_str(text: &str) -> Result<ParamStore, CheckpointError> {
        let err = |line: usize, msg: String| CheckpointError::Format { line: line + 1, msg };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CHECKPOINT_HEADER => {}
            Some((i, h)) => return Err(err(i, format!("expected header '{CHECKPOINT_HEADER}', found '{h}'"))),
            None => return Err(err(0, "empty checkpoint".into())),
        }
        let mut store = ParamStore::new();
        while let Some((i, line)) = lines.next() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                store.meta.insert(k.to_string(), v.to_string());
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [kw, name, rows, cols] = parts[..] else {
                return Err(err(i, format!("malformed tensor line '{line}'")));
            };
            if kw != "tensor" {
                return Err(err(i, format!("unknown record '{kw}'")));
            }
            let parse_dim = |s: &str| s.parse::<usize>().map_err(|e| err(i, format!("bad dimension '{s}': {e}")));
            let (r, c) = (parse_dim(rows)?, parse_dim(cols)?);
            let mut data = Vec::with_capacity(r * c);
            for _ in 0..r {
                let (j, row) = lines.next().ok_or_else(|| err(i, format!("tensor {name} truncated")))?;
                let before = data.len();
                for tok in row.split_whitespace() {
                    data.push(tok.parse::<f64>().map_err(|e| err(j, format!("bad float '{tok}': {e}")))?);
                }
                if data.len() - before != c {
                    return Err(err(j, format!("expected {c} values, found {}", data.len() - before)));
                }
            }
            if store.tensors.contains_key(name) {
                return Err(err(i, format!("duplicate tensor '{name}'")));
            }
            store.tensors.insert(name.to_string(), DTensor::new(Matrix::from_vec(r, c, data)));
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_checkpoint_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ParamStore, CheckpointError> {
        ParamStore::from_checkpoint_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn xavier_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = xavier_uniform(10, 14, &mut rng);
        let limit = 0.5;
        assert!(m.data().iter().all(|x| x.abs() <= limit));
        assert!(m.max_abs() > 0.3);
    }

    #[test]
    fn checkpoint_round_trip_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = ParamStore::new();
        s.insert_xavier("b.W", 3, 4, &mut rng);
        s.insert("a.u", DTensor::new(Matrix::column(&[1.0 / 3.0, -0.0, 1e-300])));
        s.set_meta("hidden", 4);
        s.set_meta("kind", "center local");
        let text = s.to_checkpoint_string();
        assert!(text.starts_with("REXGEN-CKPT v1\nmeta hidden 4\nmeta kind center local\ntensor a.u 3 1\n"));
        let back = ParamStore::from_checkpoint_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_checkpoint_string(), text);
    }

    #[test]
    fn checkpoint_errors_carry_line_numbers() {
        let e = ParamStore::from_checkpoint_str("nope\n").unwrap_err();
        assert!(e.to_string().starts_with("line 1"));
        let e = ParamStore::from_checkpoint_str("REXGEN-CKPT v1\ntensor w 2 2\n1 2\n3\n").unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
        let e = ParamStore::from_checkpoint_str("REXGEN-CKPT v1\ntensor w 2 2\n1 2\n").unwrap_err();
        assert!(e.to_string().contains("truncated"), "{e}");
    }
}
