//! Template-free reaction outcome prediction.

pub mod chemgraph;
pub mod diffengine;
pub mod wliso;
pub mod wln;
pub mod center;
pub mod candgen;
pub mod ranker;
pub mod synth;
pub mod pipeline;
pub mod oracle;
pub mod selfcheck;
