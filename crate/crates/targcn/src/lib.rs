//! TARGCN: a time-aware relational graph encoder for temporal knowledge
//! graph completion.
//!
//! The pipeline, end to end: for an object-prediction query (s_q, r_q, ?, t_q)
//! the sampler draws a Temporal Neighboring Graph around (s_q, t_q) with
//! probabilities softmax(−|Δt|); the encoder maps each sampled neighbor to a
//! time-aware representation f(h_e ∥ Φ(t, t_q)) and mean-aggregates them
//! through a relational layer; a bilinear score function (Distmult by
//! default) ranks every candidate object, whose representations use the
//! zero-time-difference shortcut f(h_o' ∥ Φ(t_q, t_q)). Training minimizes
//! softmax cross-entropy over the full candidate set with hand-rolled
//! reverse-mode gradients; evaluation reports filtered MRR and Hits@1/3/10.

pub mod config;
pub mod encoder;
pub mod eval;
pub mod ingest;
pub mod math;
pub mod sampler;
pub mod scoring;
pub mod tkg;
pub mod training;

pub use config::{Activation, RunConfig, SamplerVariant, ScoreFn, TimeEncoderVariant};
pub use tkg::{
    add_reciprocals, EntityId, Quadruple, RelationId, SearchRange, SplitTag, TemporalKg,
    TemporalNeighbor, TimeIndex,
};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}, line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite loss at quadruple ({s}, {r}, {o}, {t}): {value}")]
    NonFiniteLoss {
        s: EntityId,
        r: RelationId,
        o: EntityId,
        t: TimeIndex,
        value: f64,
    },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
