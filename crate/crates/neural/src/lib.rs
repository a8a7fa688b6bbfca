//! Dense networks with batch normalization, hand-written backpropagation,
//! Adam and soft target updates.

pub mod checkpoint;
pub mod critic;
pub mod layers;
pub mod mlp;
pub mod params;

use thiserror::Error;

pub use critic::{actor_spec, q_network_spec, CriticCache, TwoBranchCritic};
pub use layers::{Activation, BatchNorm, Dense, Init};
pub use mlp::{Layer, LayerSpec, Mlp, MlpCache, MlpSpec, Mode};
pub use params::{param_distance, soft_update, Adam, Gradients, Parameterized};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("input width {got}, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("batch norm needs at least 2 rows in train mode, got {0}")]
    DegenerateBatch(usize),
    #[error("cache does not belong to the current parameters")]
    StaleCache,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
