//! Shared fixtures for the agent tests: a plain-loop eval-mode forward pass
//! and a fixed-batch critic regression driver.

#![allow(dead_code)]

use aerostar_agents::daddpg::Batch;
use aerostar_agents::dqn::ACTIONS;
use aerostar_agents::{AgentConfig, AgentDims, AgentKind, DaDdpg, Ddpg, Dqn};
use aerostar_core::environment::ActionLayout;
use aerostar_core::{EnvConfig, RisKind, SimRng};
use aerostar_neural::{Activation, Layer, Mlp, TwoBranchCritic};
use ndarray::{Array1, Array2};

pub fn tiny_dims() -> AgentDims {
    let mut c = EnvConfig::default();
    c.radio.bs_antennas = 2;
    c.radio.ris_elements = 4;
    c.world.reflect_users = 1;
    c.world.transmit_users = 1;
    AgentDims {
        state_dim: c.state_dim(),
        layout: c.layout(),
    }
}

pub fn dims_for(m: usize, n: usize, j: usize, kind: RisKind) -> AgentDims {
    AgentDims {
        state_dim: aerostar_core::environment::state_dim(m, n, j),
        layout: ActionLayout::new(m, n, j, kind),
    }
}

/// Eval-mode forward of one row, written out with explicit loops.
pub fn forward_row(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for layer in net.layers() {
        a = match layer {
            Layer::BatchNorm(bn) => a
                .iter()
                .enumerate()
                .map(|(i, v)| bn.gamma[i] * (v - bn.running_mean[i]) / (bn.running_var[i] + bn.eps).sqrt() + bn.beta[i])
                .collect(),
            Layer::Dense(d) => {
                let (nin, nout) = d.w.dim();
                (0..nout)
                    .map(|j| {
                        let mut z = d.b[j];
                        for i in 0..nin {
                            z += a[i] * d.w[[i, j]];
                        }
                        match d.activation {
                            Activation::Relu => z.max(0.0),
                            Activation::Tanh => z.tanh(),
                            Activation::Linear => z,
                        }
                    })
                    .collect()
            }
        };
    }
    a
}

pub fn critic_row(c: &TwoBranchCritic, s: &[f64], a: &[f64]) -> f64 {
    let mut joined = forward_row(&c.state_branch, s);
    joined.extend(forward_row(&c.action_branch, a));
    forward_row(&c.trunk, &joined)[0]
}

pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A random batch in the agent's action format: continuous entries in
/// (−1, 1), discrete entries ±1.
pub fn random_batch(dims: &AgentDims, rows: usize, rng: &mut SimRng) -> Batch {
    let (dc, dd) = (dims.layout.continuous_len(), dims.layout.discrete_len());
    let states = Array2::from_shape_simple_fn((rows, dims.state_dim), || rng.standard_normal());
    let actions = Array2::from_shape_fn((rows, dc + dd), |(_, c)| {
        if c < dc {
            rng.uniform(-1.0, 1.0)
        } else if rng.coin(0.5) {
            1.0
        } else {
            -1.0
        }
    });
    Batch {
        states,
        actions,
        rewards: (0..rows).map(|_| rng.uniform(-20.0, -5.0)).collect(),
        next_states: Array2::from_shape_simple_fn((rows, dims.state_dim), || rng.standard_normal()),
        terminals: (0..rows).map(|i| i % 7 == 6).collect(),
    }
}

/// Critic loss before each of `updates` regression steps on one batch whose
/// targets are computed once from the agent's target networks, followed by
/// the loss after the last step.
pub fn overfit_losses(kind: AgentKind, dims: AgentDims, config: AgentConfig, updates: usize, seed: u64) -> Vec<f64> {
    let mut rng = SimRng::substream(seed, "overfit");
    let batch = random_batch(&dims, config.batch_size, &mut rng);
    let mut losses = Vec::with_capacity(updates + 1);
    match kind {
        AgentKind::Daddpg => {
            let mut a = DaDdpg::new(config, dims, seed).unwrap();
            let y = a.critic_targets(&batch).unwrap();
            for _ in 0..=updates {
                losses.push(a.critic_fit_step(&batch.states, &batch.actions, &y).unwrap());
            }
        }
        AgentKind::Ddpg => {
            let mut a = Ddpg::new(config, dims, seed).unwrap();
            let y = a.critic_targets(&batch).unwrap();
            for _ in 0..=updates {
                losses.push(a.critic_fit_step(&batch.states, &batch.actions, &y).unwrap());
            }
        }
        AgentKind::Dqn => {
            let mut a = Dqn::new(config, dims, seed).unwrap();
            let actions: Vec<usize> = (0..batch.rewards.len()).map(|_| rng.below(ACTIONS)).collect();
            let db = aerostar_agents::dqn::DqnBatch {
                states: batch.states.clone(),
                actions: actions.clone(),
                rewards: batch.rewards.clone(),
                next_states: batch.next_states.clone(),
                terminals: batch.terminals.clone(),
            };
            let y: Array1<f64> = a.critic_targets(&db).unwrap();
            for _ in 0..=updates {
                losses.push(a.critic_fit_step(&db.states, &actions, &y).unwrap());
            }
        }
        AgentKind::Random => {}
    }
    losses
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
