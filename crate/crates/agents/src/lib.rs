//! Agents for the hybrid continuous/discrete action space: dual-actor DDPG,
//! a single-actor DDPG, a DQN over a hand-built codebook, and a uniform
//! random policy.

pub mod daddpg;
pub mod dqn;
pub mod exploration;
pub mod random;
pub mod replay;

use aerostar_core::environment::ActionLayout;
use aerostar_core::HybridAction;
use aerostar_neural::{checkpoint, NeuralError};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use daddpg::{DaDdpg, Ddpg};
pub use dqn::{Dqn, MOVES, CODEBOOK_SIZE};
pub use exploration::{EpsilonSchedule, OuNoise};
pub use random::RandomAgent;
pub use replay::ReplayBuffer;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("replay holds {have} transitions, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("state has length {got}, expected {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("action has length {got}, expected {expected}")]
    ActionLength { expected: usize, got: usize },
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("observe called without a preceding act")]
    NoPendingAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Daddpg,
    Ddpg,
    Dqn,
    Random,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Daddpg => "daddpg",
            AgentKind::Ddpg => "ddpg",
            AgentKind::Dqn => "dqn",
            AgentKind::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AgentKind::Daddpg, AgentKind::Ddpg, AgentKind::Dqn, AgentKind::Random]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Hidden width; derived from the element count when unset.
    pub hidden: Option<usize>,
    pub actor_head_limit: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_sigma_decay: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            actor_lr: 5e-4,
            critic_lr: 5e-4,
            discount: 1.0,
            tau: 0.005,
            batch_size: 64,
            replay_capacity: 100_000,
            hidden: None,
            actor_head_limit: 3e-3,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            ou_sigma_decay: 0.995,
            epsilon_start: 1.0,
            epsilon_min: 0.05,
            epsilon_decay: 0.995,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidConfig(m.to_string()));
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau outside [0, 1]");
        }
        if self.batch_size < 2 {
            return bad("batch size below 2");
        }
        if self.replay_capacity < self.batch_size {
            return bad("replay capacity below batch size");
        }
        if self.hidden == Some(0) {
            return bad("zero hidden width");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad("epsilon outside [0, 1]");
        }
        Ok(())
    }

    pub fn hidden_width(&self, elements: usize) -> usize {
        self.hidden.unwrap_or(if elements <= 16 { 256 } else { 512 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDims {
    pub state_dim: usize,
    pub layout: ActionLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition<A> {
    pub state: Vec<f64>,
    pub action: A,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub critic_loss: f64,
    pub mean_q: f64,
    pub critic_grad_norm: f64,
    pub actor_grad_norm: f64,
    pub discrete_grad_norm: f64,
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    fn act(&mut self, state: &[f64], explore: bool) -> Result<HybridAction, AgentError>;

    /// Store the transition that followed the most recent `act`.
    fn observe(
        &mut self,
        state: &[f64],
        action: &HybridAction,
        reward: f64,
        next_state: &[f64],
        terminal: bool,
    ) -> Result<(), AgentError>;

    /// One gradient update, or `None` while the replay is still filling.
    fn train_step(&mut self) -> Result<Option<TrainDiagnostics>, AgentError>;

    /// Reset per-episode noise and decay exploration.
    fn end_episode(&mut self);

    /// Current `(σ_ou, ε)`.
    fn exploration(&self) -> (f64, f64);

    fn checkpoint(&self) -> Result<String, AgentError>;
}

/// Build a fresh agent. `seed` drives initialization and exploration.
pub fn build_agent(kind: AgentKind, config: &AgentConfig, dims: AgentDims, seed: u64) -> Result<Box<dyn Agent>, AgentError> {
    config.validate()?;
    Ok(match kind {
        AgentKind::Daddpg => Box::new(DaDdpg::new(config.clone(), dims, seed)?),
        AgentKind::Ddpg => Box::new(Ddpg::new(config.clone(), dims, seed)?),
        AgentKind::Dqn => Box::new(Dqn::new(config.clone(), dims, seed)?),
        AgentKind::Random => Box::new(RandomAgent::new(dims, seed)),
    })
}

#[derive(Deserialize)]
struct Envelope {
    kind: String,
}

/// Rebuild an agent from [`Agent::checkpoint`] output. The replay buffer is
/// not part of a checkpoint.
pub fn restore_agent(text: &str, seed: u64) -> Result<Box<dyn Agent>, AgentError> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    let kind = AgentKind::parse(&env.kind).ok_or_else(|| AgentError::Checkpoint(format!("unknown kind {}", env.kind)))?;
    Ok(match kind {
        AgentKind::Daddpg => Box::new(DaDdpg::restore(checkpoint::from_str(kind.name(), text)?, seed)?),
        AgentKind::Ddpg => Box::new(Ddpg::restore(checkpoint::from_str(kind.name(), text)?, seed)?),
        AgentKind::Dqn => Box::new(Dqn::restore(checkpoint::from_str(kind.name(), text)?, seed)?),
        AgentKind::Random => Box::new(RandomAgent::restore(checkpoint::from_str(kind.name(), text)?, seed)),
    })
}

/// `+1` for positive values, `−1` otherwise.
pub fn threshold(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn stack<'a>(rows: impl Iterator<Item = &'a [f64]>, width: usize) -> Array2<f64> {
    let data: Vec<f64> = rows.flat_map(|r| r.iter().copied()).collect();
    let n = data.len() / width.max(1);
    Array2::from_shape_vec((n, width), data).expect("rows share a width")
}

pub(crate) fn check_state(state: &[f64], dims: &AgentDims) -> Result<(), AgentError> {
    if state.len() != dims.state_dim {
        return Err(AgentError::StateLength {
            expected: dims.state_dim,
            got: state.len(),
        });
    }
    Ok(())
}
