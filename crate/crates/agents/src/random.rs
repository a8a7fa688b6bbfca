use aerostar_core::{HybridAction, SimRng};
use aerostar_neural::checkpoint;
use serde::{Deserialize, Serialize};

use crate::{check_state, Agent, AgentDims, AgentError, AgentKind, TrainDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomState {
    pub dims: AgentDims,
}

/// Uniform continuous actions and fair-coin signs; never trains.
pub struct RandomAgent {
    pub state: RandomState,
    rng: SimRng,
}

impl RandomAgent {
    pub fn new(dims: AgentDims, seed: u64) -> Self {
        Self::restore(RandomState { dims }, seed)
    }

    pub fn restore(state: RandomState, seed: u64) -> Self {
        Self {
            state,
            rng: SimRng::substream(seed, "agent-explore"),
        }
    }
}

impl Agent for RandomAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Random
    }

    fn act(&mut self, state: &[f64], _explore: bool) -> Result<HybridAction, AgentError> {
        check_state(state, &self.state.dims)?;
        let l = &self.state.dims.layout;
        let continuous = (0..l.continuous_len()).map(|_| self.rng.uniform(-1.0, 1.0)).collect();
        let discrete = (0..l.discrete_len())
            .map(|_| if self.rng.coin(0.5) { 1.0 } else { -1.0 })
            .collect();
        Ok(HybridAction { continuous, discrete })
    }

    fn observe(&mut self, _: &[f64], _: &HybridAction, _: f64, _: &[f64], _: bool) -> Result<(), AgentError> {
        Ok(())
    }

    fn train_step(&mut self) -> Result<Option<TrainDiagnostics>, AgentError> {
        Ok(None)
    }

    fn end_episode(&mut self) {}

    fn exploration(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn checkpoint(&self) -> Result<String, AgentError> {
        Ok(checkpoint::to_string(AgentKind::Random.name(), &self.state)?)
    }
}
