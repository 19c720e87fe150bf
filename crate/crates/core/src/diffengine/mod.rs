//! Small reverse-mode autodiff engine over dense 2-D `f64` matrices, with
//! Adam, finite-difference gradient checking and a plain-text checkpoint
//! format.

mod adam;
mod gradcheck;
mod matrix;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, noise_floor, relative_error, GradCheckConfig, GradCheckReport, WorstCoordinate};
pub use matrix::Matrix;
pub use params::{xavier_uniform, CheckpointError, DTensor, ParamStore, CHECKPOINT_HEADER};
pub use tape::{sigmoid, Activation, Gradients, Tape, Var};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("{op}: incompatible shapes {}x{} and {}x{}", left.0, left.1, right.0, right.1)]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward needs a 1x1 root, got {}x{}", .0.0, .0.1)]
    NonScalarRoot((usize, usize)),
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
}
