//! DQN baseline over a factored discrete codebook.
//!
//! The action space is a constructed one: 7 motion primitives (hover, ±x,
//! ±y, ±z at full speed) times 16 uniform surface patterns (reflect phase in
//! {0, π/2, −π/2, π}, transmit amplitude in {0.3, 0.7}, coupling sign ±).
//! The precoder is not learned; each user gets a matched filter on its
//! direct channel, read from the state, with equal power.

use std::f64::consts::PI;

use aerostar_core::environment::{direct_channels_from_state, matched_filter_raw};
use aerostar_core::star_surface::wrap_phase;
use aerostar_core::{HybridAction, SimRng};
use aerostar_neural::{checkpoint, q_network_spec, soft_update, Adam, Mlp, Mode};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::daddpg::bellman_targets;
use crate::exploration::EpsilonSchedule;
use crate::replay::ReplayBuffer;
use crate::{check_state, stack, Agent, AgentConfig, AgentDims, AgentError, AgentKind, TrainDiagnostics, Transition};

pub const MOVES: usize = 7;
pub const CODEBOOK_SIZE: usize = 16;
pub const ACTIONS: usize = MOVES * CODEBOOK_SIZE;

/// Raw `[speed, elevation, azimuth]` of motion primitive `m`.
pub fn move_raw(m: usize) -> [f64; 3] {
    match m {
        0 => [-1.0, 0.0, 0.0],
        1 => [1.0, 0.0, -1.0],
        2 => [1.0, 0.0, 0.0],
        3 => [1.0, 0.0, -0.5],
        4 => [1.0, 0.0, 0.5],
        5 => [1.0, 1.0, 0.0],
        _ => [1.0, -1.0, 0.0],
    }
}

/// Raw `(θ_R, β_T, sign)` of codebook entry `k`.
pub fn pattern_raw(k: usize) -> (f64, f64, f64) {
    const THETA: [f64; 4] = [0.0, 0.5, -0.5, 1.0];
    const BETA: [f64; 2] = [-0.4, 0.4];
    let theta = THETA[k / 4 % 4];
    let beta = BETA[k / 2 % 2];
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    (theta, beta, sign)
}

/// Environment action for flat index `move * 16 + pattern`.
pub fn action_for_index(index: usize, state: &[f64], dims: &AgentDims) -> HybridAction {
    let l = &dims.layout;
    let (mv, pat) = (index / CODEBOOK_SIZE, index % CODEBOOK_SIZE);
    let (theta, beta, sign) = pattern_raw(pat);
    let mut continuous = move_raw(mv).to_vec();
    continuous.extend(std::iter::repeat_n(theta, l.elements));
    continuous.extend(std::iter::repeat_n(beta, l.elements));
    let directs = direct_channels_from_state(state, l.antennas, l.elements, l.users);
    continuous.extend(matched_filter_raw(&directs));
    if l.free_transmit_phase {
        let theta_t = wrap_phase(wrap_phase(theta * PI) + sign * PI / 2.0) / PI;
        continuous.extend(std::iter::repeat_n(theta_t, l.elements));
    }
    let discrete = if l.uses_discrete { vec![sign; l.elements] } else { Vec::new() };
    HybridAction { continuous, discrete }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnState {
    pub config: AgentConfig,
    pub dims: AgentDims,
    pub q: Mlp,
    pub q_target: Mlp,
    pub opt: Adam,
    pub epsilon: EpsilonSchedule,
}

#[derive(Debug, Clone)]
pub struct DqnBatch {
    pub states: Array2<f64>,
    pub actions: Vec<usize>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub terminals: Vec<bool>,
}

pub struct Dqn {
    pub state: DqnState,
    rng: SimRng,
    buffer: ReplayBuffer<Transition<usize>>,
    pending: Option<usize>,
}

fn argmax(v: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in v.enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best.0
}

impl Dqn {
    pub fn new(config: AgentConfig, dims: AgentDims, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let mut init = SimRng::substream(seed, "agent-init");
        let hidden = config.hidden_width(dims.layout.elements);
        let q = Mlp::new(q_network_spec(dims.state_dim, ACTIONS, hidden), &mut init)?;
        let state = DqnState {
            opt: Adam::new(&q, config.critic_lr),
            q_target: q.clone(),
            epsilon: EpsilonSchedule::new(config.epsilon_start, config.epsilon_min, config.epsilon_decay),
            q,
            config,
            dims,
        };
        Ok(Self::from_state(state, seed))
    }

    fn from_state(state: DqnState, seed: u64) -> Self {
        Self {
            buffer: ReplayBuffer::new(state.config.replay_capacity),
            rng: SimRng::substream(seed, "agent-explore"),
            pending: None,
            state,
        }
    }

    pub fn restore(state: DqnState, seed: u64) -> Result<Self, AgentError> {
        state.config.validate()?;
        Ok(Self::from_state(state, seed))
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>, AgentError> {
        check_state(state, &self.state.dims)?;
        let x = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("one row");
        Ok(self.state.q.predict(x.view())?.row(0).to_vec())
    }

    pub fn greedy_index(&self, state: &[f64]) -> Result<usize, AgentError> {
        Ok(argmax(self.q_values(state)?.into_iter()))
    }

    pub fn critic_targets(&self, batch: &DqnBatch) -> Result<Array1<f64>, AgentError> {
        let q2 = self.state.q_target.predict(batch.next_states.view())?;
        let best: Array1<f64> = q2
            .rows()
            .into_iter()
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(bellman_targets(&batch.rewards, &best, &batch.terminals, self.state.config.discount))
    }

    fn regress(&mut self, states: &Array2<f64>, actions: &[usize], y: &Array1<f64>) -> Result<(f64, f64, f64), AgentError> {
        let st = &mut self.state;
        let (q, cache) = st.q.forward(states.view(), Mode::Train)?;
        let b = y.len() as f64;
        let mut upstream = Array2::zeros(q.dim());
        let mut loss = 0.0;
        let mut mean_q = 0.0;
        for (i, &a) in actions.iter().enumerate() {
            let d = q[[i, a]] - y[i];
            loss += d * d / b;
            mean_q += q[[i, a]] / b;
            upstream[[i, a]] = 2.0 * d / b;
        }
        let (grads, _) = st.q.backward(&cache, &upstream)?;
        st.q.commit(&cache);
        st.opt.update(&mut st.q, &grads)?;
        Ok((loss, mean_q, grads.l2_norm()))
    }

    pub fn train_on(&mut self, batch: &DqnBatch) -> Result<TrainDiagnostics, AgentError> {
        let y = self.critic_targets(batch)?;
        let (loss, mean_q, norm) = self.regress(&batch.states, &batch.actions, &y)?;
        soft_update(&mut self.state.q_target, &self.state.q, self.state.config.tau)?;
        Ok(TrainDiagnostics {
            critic_loss: loss,
            mean_q,
            critic_grad_norm: norm,
            ..Default::default()
        })
    }

    /// Regression step toward fixed targets; returns the loss before the step.
    pub fn critic_fit_step(&mut self, states: &Array2<f64>, actions: &[usize], y: &Array1<f64>) -> Result<f64, AgentError> {
        Ok(self.regress(states, actions, y)?.0)
    }
}

impl Agent for Dqn {
    fn kind(&self) -> AgentKind {
        AgentKind::Dqn
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<HybridAction, AgentError> {
        check_state(state, &self.state.dims)?;
        let index = if explore && self.rng.coin(self.state.epsilon.value) {
            self.rng.below(ACTIONS)
        } else {
            self.greedy_index(state)?
        };
        self.pending = Some(index);
        Ok(action_for_index(index, state, &self.state.dims))
    }

    fn observe(
        &mut self,
        state: &[f64],
        _action: &HybridAction,
        reward: f64,
        next_state: &[f64],
        terminal: bool,
    ) -> Result<(), AgentError> {
        check_state(state, &self.state.dims)?;
        check_state(next_state, &self.state.dims)?;
        let action = self.pending.take().ok_or(AgentError::NoPendingAction)?;
        self.buffer.push(Transition {
            state: state.to_vec(),
            action,
            reward,
            next_state: next_state.to_vec(),
            terminal,
        });
        Ok(())
    }

    fn train_step(&mut self) -> Result<Option<TrainDiagnostics>, AgentError> {
        let bsz = self.state.config.batch_size;
        if self.buffer.len() < bsz {
            return Ok(None);
        }
        let sampled = self.buffer.sample(bsz, &mut self.rng)?;
        let sd = self.state.dims.state_dim;
        let batch = DqnBatch {
            states: stack(sampled.iter().map(|t| t.state.as_slice()), sd),
            actions: sampled.iter().map(|t| t.action).collect(),
            rewards: sampled.iter().map(|t| t.reward).collect(),
            next_states: stack(sampled.iter().map(|t| t.next_state.as_slice()), sd),
            terminals: sampled.iter().map(|t| t.terminal).collect(),
        };
        self.train_on(&batch).map(Some)
    }

    fn end_episode(&mut self) {
        self.state.epsilon.step();
    }

    fn exploration(&self) -> (f64, f64) {
        (0.0, self.state.epsilon.value)
    }

    fn checkpoint(&self) -> Result<String, AgentError> {
        Ok(checkpoint::to_string(AgentKind::Dqn.name(), &self.state)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codebook_is_exhaustive() {
        let mut seen = std::collections::HashSet::new();
        for k in 0..CODEBOOK_SIZE {
            let (t, b, s) = pattern_raw(k);
            seen.insert(((t * 10.0) as i64, (b * 10.0) as i64, s as i64));
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(ACTIONS, 112);
    }

    #[test]
    fn moves_cover_axes() {
        for (m, expected) in [(1, 0.0), (2, PI), (3, PI / 2.0), (4, 1.5 * PI)] {
            let azim = (move_raw(m)[2] + 1.0) * PI;
            assert!((azim - expected).abs() < 1e-12);
        }
        assert_eq!(move_raw(0)[0], -1.0);
        assert_eq!(move_raw(5)[1], 1.0);
        assert_eq!(move_raw(6)[1], -1.0);
    }

    #[test]
    fn argmax_picks_first_maximum() {
        assert_eq!(argmax([1.0, 3.0, 3.0, -1.0].into_iter()), 1);
    }
}
