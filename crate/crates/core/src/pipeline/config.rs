use crate::center::CenterVariant;
use crate::diffengine::Activation;
use crate::ranker::RankerVariant;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("{key}: invalid value '{value}': {msg}")]
    BadValue { key: String, value: String, msg: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

/// Everything a training or evaluation run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    /// Explicit dev/test files; when absent the data file is split by line
    /// hash.
    pub dev_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub k: usize,
    pub max_changes: usize,
    pub hidden: usize,
    /// Width of the difference network; defaults to `hidden`.
    pub diff_hidden: Option<usize>,
    pub depth: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub decay: f64,
    /// The learning rate decays once every this many epochs.
    pub decay_every: usize,
    pub seed: u64,
    pub center_variant: CenterVariant,
    pub ranker_variant: RankerVariant,
    pub augment_truth: bool,
    pub max_atoms: usize,
    pub candidate_cap: usize,
    /// Stop early once the per-epoch training metric reaches this value.
    pub stop_at: Option<f64>,
    /// Stop after this many epochs without dev improvement.
    pub patience: Option<usize>,
    pub top_n: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            dev_data: None,
            test_data: None,
            train_fraction: 0.8,
            dev_fraction: 0.1,
            k: 6,
            max_changes: 3,
            hidden: 64,
            diff_hidden: None,
            depth: 3,
            activation: Activation::Relu,
            epochs: 30,
            batch: 10,
            lr: 1e-3,
            decay: 0.9,
            decay_every: 10,
            seed: 0,
            center_variant: CenterVariant::Global,
            ranker_variant: RankerVariant::Wldn,
            augment_truth: false,
            max_atoms: super::dataset::MAX_ATOMS,
            candidate_cap: 2000,
            stop_at: None,
            patience: None,
            top_n: 5,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        msg: e.to_string(),
    })
}

fn positive(key: &str, value: &str) -> Result<usize, ConfigError> {
    let v: usize = parse(key, value)?;
    if v == 0 {
        return Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            msg: "must be positive".into(),
        });
    }
    Ok(v)
}

impl RunConfig {
    /// Applies one `key=value` setting. Keys match the field names. On error
    /// the configuration is left unchanged.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let mut next = self.clone();
        next.set_raw(key, value.trim())?;
        next.check()?;
        *self = next;
        Ok(())
    }

    fn set_raw(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let opt_path = || if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        match key.trim() {
            "data" => self.data = opt_path(),
            "dev_data" => self.dev_data = opt_path(),
            "test_data" => self.test_data = opt_path(),
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "dev_fraction" => self.dev_fraction = parse(key, v)?,
            "k" => self.k = positive(key, v)?,
            "max_changes" => self.max_changes = positive(key, v)?,
            "hidden" => self.hidden = positive(key, v)?,
            "diff_hidden" => self.diff_hidden = Some(positive(key, v)?),
            "depth" => self.depth = positive(key, v)?,
            "activation" => self.activation = parse(key, v)?,
            "epochs" => self.epochs = positive(key, v)?,
            "batch" => self.batch = positive(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "decay" => self.decay = parse(key, v)?,
            "decay_every" => self.decay_every = positive(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "center_variant" => self.center_variant = parse(key, v)?,
            "ranker_variant" => self.ranker_variant = parse(key, v)?,
            "augment_truth" => self.augment_truth = parse(key, v)?,
            "max_atoms" => self.max_atoms = positive(key, v)?,
            "candidate_cap" => self.candidate_cap = positive(key, v)?,
            "stop_at" => self.stop_at = Some(parse(key, v)?),
            "patience" => self.patience = Some(positive(key, v)?),
            "top_n" => self.top_n = positive(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Cross-field checks, run once all settings are in place.
    fn check(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: f64, msg: &str| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            msg: msg.to_string(),
        };
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(bad("lr", self.lr, "learning rate must be positive"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(bad("decay", self.decay, "decay must lie in (0, 1]"));
        }
        for (key, f) in [("train_fraction", self.train_fraction), ("dev_fraction", self.dev_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(bad(key, f, "split fractions must lie in [0, 1]"));
            }
        }
        if self.train_fraction + self.dev_fraction > 1.0 {
            return Err(bad(
                "train_fraction",
                self.train_fraction,
                "train_fraction + dev_fraction must not exceed 1",
            ));
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    /// Cross-field checks run after the last line, so the order of lines
    /// does not matter. On error the configuration is left unchanged.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut next = self.clone();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            next.set_raw(k, v.trim())?;
        }
        next.check()?;
        *self = next;
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn diff_hidden(&self) -> usize {
        self.diff_hidden.unwrap_or(self.hidden)
    }

    /// K values reported by evaluation: the configured K plus 6, 8 and 10.
    pub fn eval_ks(&self) -> Vec<usize> {
        let mut ks = vec![self.k, 6, 8, 10];
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}
