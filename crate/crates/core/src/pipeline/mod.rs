//! Dataset ingestion, training loops, prediction and evaluation.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod predict;
pub mod train;

pub use config::{ConfigError, RunConfig};
pub use dataset::{load_dataset, parse_dataset, parse_record, split_records, Dataset, DatasetError, ReactionRecord, RecordError, Splits};
pub use eval::{evaluate, EvalReport, RankerSource};
pub use predict::{parse_reactants, Prediction, PredictError, Predictor, RankedProduct};
pub use train::{train_center, train_ranker, CenterSource, EpochStats, TrainError, TrainOutcome};
