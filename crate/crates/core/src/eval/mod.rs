//! Evaluation harness: synthetic data, ranking metrics and the
//! leave-one-out, NDCG and scalability experiments.

pub mod experiments;
pub mod metrics;
pub mod synth;

pub use synth::{generate_synthetic, generate_synthetic_stream, write_synthetic, GraphModel, SynthError, SynthSpec};
