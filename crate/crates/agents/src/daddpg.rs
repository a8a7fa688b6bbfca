use aerostar_core::environment::decode_discrete;
use aerostar_core::{HybridAction, SimRng};
use aerostar_neural::{actor_spec, checkpoint, soft_update, Adam, Mlp, Mode, TwoBranchCritic};
use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::exploration::{EpsilonSchedule, OuNoise};
use crate::replay::ReplayBuffer;
use crate::{
    check_state, stack, threshold, Agent, AgentConfig, AgentDims, AgentError, AgentKind, TrainDiagnostics, Transition,
};

/// A sampled minibatch in matrix form. Actions are continuous ∥ discrete.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub terminals: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition<Vec<f64>>], state_dim: usize, action_dim: usize) -> Self {
        Self {
            states: stack(ts.iter().map(|t| t.state.as_slice()), state_dim),
            actions: stack(ts.iter().map(|t| t.action.as_slice()), action_dim),
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_states: stack(ts.iter().map(|t| t.next_state.as_slice()), state_dim),
            terminals: ts.iter().map(|t| t.terminal).collect(),
        }
    }
}

/// `y = r + ζ q'` with `q'` dropped on terminal rows.
pub fn bellman_targets(rewards: &Array1<f64>, next_q: &Array1<f64>, terminals: &[bool], discount: f64) -> Array1<f64> {
    Array1::from_shape_fn(rewards.len(), |i| {
        if terminals[i] {
            rewards[i]
        } else {
            rewards[i] + discount * next_q[i]
        }
    })
}

/// One MSE step of the critic toward `y`. Returns (loss before the step,
/// mean Q, gradient norm).
pub(crate) fn critic_step(
    critic: &mut TwoBranchCritic,
    opt: &mut Adam,
    states: &Array2<f64>,
    actions: &Array2<f64>,
    y: &Array1<f64>,
) -> Result<(f64, f64, f64), AgentError> {
    let (q, cache) = critic.forward(states.view(), actions.view(), Mode::Train)?;
    let q = q.column(0).to_owned();
    let diff = &q - y;
    let b = y.len() as f64;
    let loss = diff.mapv(|d| d * d).sum() / b;
    let upstream = (&diff * (2.0 / b)).insert_axis(Axis(1));
    let (grads, _, _) = critic.backward(&cache, &upstream)?;
    critic.commit(&cache);
    opt.update(critic, &grads)?;
    Ok((loss, q.mean().unwrap_or(0.0), grads.l2_norm()))
}

/// Ascend `mean Q(s, a)` where columns `start..start + width` of `a` come
/// from `actor(s)` and the rest from `base_actions`.
pub(crate) fn actor_step(
    actor: &mut Mlp,
    opt: &mut Adam,
    critic: &TwoBranchCritic,
    states: &Array2<f64>,
    base_actions: &Array2<f64>,
    start: usize,
) -> Result<f64, AgentError> {
    let (mu, cache) = actor.forward(states.view(), Mode::Train)?;
    let width = mu.ncols();
    let mut actions = base_actions.clone();
    actions.slice_mut(s![.., start..start + width]).assign(&mu);
    let (_, ccache) = critic.forward(states.view(), actions.view(), Mode::Train)?;
    let b = states.nrows() as f64;
    let upstream = Array2::from_elem((states.nrows(), 1), -1.0 / b);
    let (_, _, da) = critic.backward(&ccache, &upstream)?;
    let dmu = da.slice(s![.., start..start + width]).to_owned();
    let (grads, _) = actor.backward(&cache, &dmu)?;
    actor.commit(&cache);
    opt.update(actor, &grads)?;
    Ok(grads.l2_norm())
}

fn row(state: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("one row")
}

fn noisy(mu: &[f64], noise: &[f64]) -> Vec<f64> {
    mu.iter().zip(noise).map(|(m, n)| (m + n).clamp(-1.0, 1.0)).collect()
}

fn check_action(action: &HybridAction, dims: &AgentDims) -> Result<(), AgentError> {
    let (c, d) = (dims.layout.continuous_len(), dims.layout.discrete_len());
    if action.continuous.len() != c || action.discrete.len() != d {
        return Err(AgentError::ActionLength {
            expected: c + d,
            got: action.continuous.len() + action.discrete.len(),
        });
    }
    Ok(())
}

/// Learnable state of the dual-actor agent; this is what a checkpoint holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaDdpgState {
    pub config: AgentConfig,
    pub dims: AgentDims,
    pub actor: Mlp,
    pub actor_target: Mlp,
    /// Absent when the surface has no discrete block.
    pub discrete: Option<Mlp>,
    pub discrete_target: Option<Mlp>,
    pub critic: TwoBranchCritic,
    pub critic_target: TwoBranchCritic,
    pub actor_opt: Adam,
    pub discrete_opt: Option<Adam>,
    pub critic_opt: Adam,
    pub ou: OuNoise,
    pub epsilon: EpsilonSchedule,
}

/// Dual-actor DDPG: one actor for the continuous block, one for the coupling
/// signs, one shared critic.
pub struct DaDdpg {
    pub state: DaDdpgState,
    rng: SimRng,
    buffer: ReplayBuffer<Transition<Vec<f64>>>,
}

impl DaDdpg {
    pub fn new(config: AgentConfig, dims: AgentDims, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let mut init = SimRng::substream(seed, "agent-init");
        let hidden = config.hidden_width(dims.layout.elements);
        let (dc, dd) = (dims.layout.continuous_len(), dims.layout.discrete_len());
        let actor = Mlp::new(actor_spec(dims.state_dim, dc, hidden, config.actor_head_limit), &mut init)?;
        let discrete = if dd > 0 {
            Some(Mlp::new(
                actor_spec(dims.state_dim, dd, hidden, config.actor_head_limit),
                &mut init,
            )?)
        } else {
            None
        };
        let critic = TwoBranchCritic::new(dims.state_dim, dc + dd, hidden, &mut init)?;
        let state = DaDdpgState {
            actor_opt: Adam::new(&actor, config.actor_lr),
            discrete_opt: discrete.as_ref().map(|d| Adam::new(d, config.actor_lr)),
            critic_opt: Adam::new(&critic, config.critic_lr),
            actor_target: actor.clone(),
            discrete_target: discrete.clone(),
            critic_target: critic.clone(),
            ou: OuNoise::new(dc, config.ou_theta, config.ou_sigma, config.ou_sigma_decay),
            epsilon: EpsilonSchedule::new(config.epsilon_start, config.epsilon_min, config.epsilon_decay),
            actor,
            discrete,
            critic,
            config,
            dims,
        };
        Ok(Self::from_state(state, seed))
    }

    fn from_state(state: DaDdpgState, seed: u64) -> Self {
        Self {
            buffer: ReplayBuffer::new(state.config.replay_capacity),
            rng: SimRng::substream(seed, "agent-explore"),
            state,
        }
    }

    pub fn restore(state: DaDdpgState, seed: u64) -> Result<Self, AgentError> {
        state.config.validate()?;
        Ok(Self::from_state(state, seed))
    }

    pub fn buffer(&self) -> &ReplayBuffer<Transition<Vec<f64>>> {
        &self.buffer
    }

    fn action_dim(&self) -> usize {
        self.state.dims.layout.total_len()
    }

    /// Bellman targets from the three target networks. The discrete target
    /// actor's output is thresholded to ±1, matching what replay stores.
    pub fn critic_targets(&self, batch: &Batch) -> Result<Array1<f64>, AgentError> {
        let st = &self.state;
        let mu_c = st.actor_target.predict(batch.next_states.view())?;
        let next_actions = match &st.discrete_target {
            Some(d) => {
                let mu_d = d.predict(batch.next_states.view())?.mapv(threshold);
                ndarray::concatenate(Axis(1), &[mu_c.view(), mu_d.view()]).expect("row counts agree")
            }
            None => mu_c,
        };
        let q = st.critic_target.predict(batch.next_states.view(), next_actions.view())?;
        Ok(bellman_targets(
            &batch.rewards,
            &q.column(0).to_owned(),
            &batch.terminals,
            st.config.discount,
        ))
    }

    /// Full update on a given batch: critic, continuous actor (discrete slot
    /// holds the sampled signs), discrete actor (continuous slot holds the
    /// sampled values), then soft target updates.
    pub fn train_on(&mut self, batch: &Batch) -> Result<TrainDiagnostics, AgentError> {
        let y = self.critic_targets(batch)?;
        let st = &mut self.state;
        let (loss, mean_q, cnorm) = critic_step(&mut st.critic, &mut st.critic_opt, &batch.states, &batch.actions, &y)?;
        let anorm = actor_step(
            &mut st.actor,
            &mut st.actor_opt,
            &st.critic,
            &batch.states,
            &batch.actions,
            0,
        )?;
        let dnorm = match (&mut st.discrete, &mut st.discrete_opt) {
            (Some(d), Some(opt)) => actor_step(
                d,
                opt,
                &st.critic,
                &batch.states,
                &batch.actions,
                st.dims.layout.continuous_len(),
            )?,
            _ => 0.0,
        };
        let tau = st.config.tau;
        soft_update(&mut st.critic_target, &st.critic, tau)?;
        soft_update(&mut st.actor_target, &st.actor, tau)?;
        if let (Some(t), Some(o)) = (&mut st.discrete_target, &st.discrete) {
            soft_update(t, o, tau)?;
        }
        Ok(TrainDiagnostics {
            critic_loss: loss,
            mean_q,
            critic_grad_norm: cnorm,
            actor_grad_norm: anorm,
            discrete_grad_norm: dnorm,
        })
    }

    /// Critic-only regression step toward fixed targets; returns the loss
    /// measured before the step.
    pub fn critic_fit_step(&mut self, states: &Array2<f64>, actions: &Array2<f64>, y: &Array1<f64>) -> Result<f64, AgentError> {
        let st = &mut self.state;
        Ok(critic_step(&mut st.critic, &mut st.critic_opt, states, actions, y)?.0)
    }

    /// Continuous actor output and discrete logits, eval mode.
    pub fn policy(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
        check_state(state, &self.state.dims)?;
        let x = row(state);
        let mu = self.state.actor.predict(x.view())?.row(0).to_vec();
        let logits = match &self.state.discrete {
            Some(d) => d.predict(x.view())?.row(0).to_vec(),
            None => Vec::new(),
        };
        Ok((mu, logits))
    }
}

impl Agent for DaDdpg {
    fn kind(&self) -> AgentKind {
        AgentKind::Daddpg
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<HybridAction, AgentError> {
        let (mu, logits) = self.policy(state)?;
        let continuous = if explore {
            let n = self.state.ou.sample(&mut self.rng);
            noisy(&mu, &n)
        } else {
            noisy(&mu, &vec![0.0; mu.len()])
        };
        let eps = if explore { self.state.epsilon.value } else { 0.0 };
        let discrete = decode_discrete(&logits, eps, &mut self.rng)
            .into_iter()
            .map(|s| s.as_f64())
            .collect();
        Ok(HybridAction { continuous, discrete })
    }

    fn observe(
        &mut self,
        state: &[f64],
        action: &HybridAction,
        reward: f64,
        next_state: &[f64],
        terminal: bool,
    ) -> Result<(), AgentError> {
        check_state(state, &self.state.dims)?;
        check_state(next_state, &self.state.dims)?;
        check_action(action, &self.state.dims)?;
        self.buffer.push(Transition {
            state: state.to_vec(),
            action: action.concat(),
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
        let batch = Batch::from_transitions(&sampled, self.state.dims.state_dim, self.action_dim());
        self.train_on(&batch).map(Some)
    }

    fn end_episode(&mut self) {
        self.state.ou.reset();
        self.state.ou.decay_sigma();
        self.state.epsilon.step();
    }

    fn exploration(&self) -> (f64, f64) {
        (self.state.ou.sigma, self.state.epsilon.value)
    }

    fn checkpoint(&self) -> Result<String, AgentError> {
        Ok(checkpoint::to_string(AgentKind::Daddpg.name(), &self.state)?)
    }
}

/// Learnable state of the single-actor agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgState {
    pub config: AgentConfig,
    pub dims: AgentDims,
    /// Outputs the continuous block followed by one pre-threshold value per
    /// coupling sign.
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: TwoBranchCritic,
    pub critic_target: TwoBranchCritic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub ou: OuNoise,
    pub epsilon: EpsilonSchedule,
}

/// Single-actor DDPG whose trailing outputs are thresholded into signs.
pub struct Ddpg {
    pub state: DdpgState,
    rng: SimRng,
    buffer: ReplayBuffer<Transition<Vec<f64>>>,
}

impl Ddpg {
    pub fn new(config: AgentConfig, dims: AgentDims, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let mut init = SimRng::substream(seed, "agent-init");
        let hidden = config.hidden_width(dims.layout.elements);
        let (dc, dd) = (dims.layout.continuous_len(), dims.layout.discrete_len());
        let actor = Mlp::new(
            actor_spec(dims.state_dim, dc + dd, hidden, config.actor_head_limit),
            &mut init,
        )?;
        let critic = TwoBranchCritic::new(dims.state_dim, dc + dd, hidden, &mut init)?;
        let state = DdpgState {
            actor_opt: Adam::new(&actor, config.actor_lr),
            critic_opt: Adam::new(&critic, config.critic_lr),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            ou: OuNoise::new(dc, config.ou_theta, config.ou_sigma, config.ou_sigma_decay),
            epsilon: EpsilonSchedule::new(config.epsilon_start, config.epsilon_min, config.epsilon_decay),
            actor,
            critic,
            config,
            dims,
        };
        Ok(Self::from_state(state, seed))
    }

    fn from_state(state: DdpgState, seed: u64) -> Self {
        Self {
            buffer: ReplayBuffer::new(state.config.replay_capacity),
            rng: SimRng::substream(seed, "agent-explore"),
            state,
        }
    }

    pub fn restore(state: DdpgState, seed: u64) -> Result<Self, AgentError> {
        state.config.validate()?;
        Ok(Self::from_state(state, seed))
    }

    pub fn critic_targets(&self, batch: &Batch) -> Result<Array1<f64>, AgentError> {
        let st = &self.state;
        let dc = st.dims.layout.continuous_len();
        let mut next = st.actor_target.predict(batch.next_states.view())?;
        next.slice_mut(s![.., dc..]).mapv_inplace(threshold);
        let q = st.critic_target.predict(batch.next_states.view(), next.view())?;
        Ok(bellman_targets(
            &batch.rewards,
            &q.column(0).to_owned(),
            &batch.terminals,
            st.config.discount,
        ))
    }

    pub fn train_on(&mut self, batch: &Batch) -> Result<TrainDiagnostics, AgentError> {
        let y = self.critic_targets(batch)?;
        let st = &mut self.state;
        let (loss, mean_q, cnorm) = critic_step(&mut st.critic, &mut st.critic_opt, &batch.states, &batch.actions, &y)?;
        let anorm = actor_step(
            &mut st.actor,
            &mut st.actor_opt,
            &st.critic,
            &batch.states,
            &batch.actions,
            0,
        )?;
        soft_update(&mut st.critic_target, &st.critic, st.config.tau)?;
        soft_update(&mut st.actor_target, &st.actor, st.config.tau)?;
        Ok(TrainDiagnostics {
            critic_loss: loss,
            mean_q,
            critic_grad_norm: cnorm,
            actor_grad_norm: anorm,
            discrete_grad_norm: 0.0,
        })
    }

    pub fn critic_fit_step(&mut self, states: &Array2<f64>, actions: &Array2<f64>, y: &Array1<f64>) -> Result<f64, AgentError> {
        let st = &mut self.state;
        Ok(critic_step(&mut st.critic, &mut st.critic_opt, states, actions, y)?.0)
    }
}

impl Agent for Ddpg {
    fn kind(&self) -> AgentKind {
        AgentKind::Ddpg
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<HybridAction, AgentError> {
        check_state(state, &self.state.dims)?;
        let out = self.state.actor.predict(row(state).view())?.row(0).to_vec();
        let dc = self.state.dims.layout.continuous_len();
        let (mu, logits) = out.split_at(dc);
        let continuous = if explore {
            let n = self.state.ou.sample(&mut self.rng);
            noisy(mu, &n)
        } else {
            noisy(mu, &vec![0.0; dc])
        };
        let eps = if explore { self.state.epsilon.value } else { 0.0 };
        let discrete = decode_discrete(logits, eps, &mut self.rng)
            .into_iter()
            .map(|s| s.as_f64())
            .collect();
        Ok(HybridAction { continuous, discrete })
    }

    fn observe(
        &mut self,
        state: &[f64],
        action: &HybridAction,
        reward: f64,
        next_state: &[f64],
        terminal: bool,
    ) -> Result<(), AgentError> {
        check_state(state, &self.state.dims)?;
        check_state(next_state, &self.state.dims)?;
        check_action(action, &self.state.dims)?;
        self.buffer.push(Transition {
            state: state.to_vec(),
            action: action.concat(),
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
        let batch = Batch::from_transitions(&sampled, self.state.dims.state_dim, self.state.dims.layout.total_len());
        self.train_on(&batch).map(Some)
    }

    fn end_episode(&mut self) {
        self.state.ou.reset();
        self.state.ou.decay_sigma();
        self.state.epsilon.step();
    }

    fn exploration(&self) -> (f64, f64) {
        (self.state.ou.sigma, self.state.epsilon.value)
    }

    fn checkpoint(&self) -> Result<String, AgentError> {
        Ok(checkpoint::to_string(AgentKind::Ddpg.name(), &self.state)?)
    }
}
