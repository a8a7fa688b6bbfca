//! Experiment orchestration for the Aerial-STAR simulator: configuration,
//! training runs, sweeps, metric files and a built-in self test.

pub mod config;
pub mod metrics;
pub mod runner;
pub mod selftest;
pub mod sweeps;

use aerostar_agents::AgentError;
use aerostar_core::energy::EnergyError;
use aerostar_core::fairness::FairnessError;
use aerostar_core::link_budget::LinkError;
use aerostar_core::star_surface::StarError;
use aerostar_core::EnvError;
use thiserror::Error;

pub use config::{ExperimentConfig, Overrides};
pub use metrics::{MetricsRow, HEADER};
pub use runner::{run_training, train_seed, RunSummary, SeedRun};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Surface(#[from] StarError),
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Agent(AgentError::InvalidConfig(_)) => 1,
            HarnessError::Env(EnvError::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }
}
