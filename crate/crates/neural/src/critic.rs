use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::layers::{Activation, Init};
use crate::mlp::{Mlp, MlpCache, MlpSpec, Mode};
use crate::params::{Gradients, Parameterized};
use crate::NeuralError;

/// `BN → dense(hidden, relu) → dense(hidden, relu) → dense(out, tanh)`, with
/// the head drawn from `±head_limit`.
pub fn actor_spec(state_dim: usize, action_dim: usize, hidden: usize, head_limit: f64) -> MlpSpec {
    MlpSpec::new(state_dim)
        .batch_norm()
        .dense(hidden, Activation::Relu)
        .dense(hidden, Activation::Relu)
        .dense_init(action_dim, Activation::Tanh, Init::Uniform(head_limit))
}

/// Like [`actor_spec`] with a linear head, for action-value networks.
pub fn q_network_spec(state_dim: usize, outputs: usize, hidden: usize) -> MlpSpec {
    MlpSpec::new(state_dim)
        .batch_norm()
        .dense(hidden, Activation::Relu)
        .dense(hidden, Activation::Relu)
        .dense(outputs, Activation::Linear)
}

/// Q(s, a) with separate state and action input branches joined before a
/// shared trunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBranchCritic {
    pub state_branch: Mlp,
    pub action_branch: Mlp,
    pub trunk: Mlp,
}

#[derive(Debug, Clone)]
pub struct CriticCache {
    state: MlpCache,
    action: MlpCache,
    trunk: MlpCache,
}

impl TwoBranchCritic {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, hidden: usize, rng: &mut R) -> Result<Self, NeuralError> {
        let state_branch = Mlp::new(
            MlpSpec::new(state_dim).batch_norm().dense(hidden, Activation::Relu),
            rng,
        )?;
        let action_branch = Mlp::new(MlpSpec::new(action_dim).dense(hidden, Activation::Relu), rng)?;
        let trunk = Mlp::new(
            MlpSpec::new(2 * hidden)
                .dense(hidden, Activation::Relu)
                .dense(hidden, Activation::Relu)
                .dense(1, Activation::Linear),
            rng,
        )?;
        Ok(Self {
            state_branch,
            action_branch,
            trunk,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_branch.input_width()
    }

    pub fn action_dim(&self) -> usize {
        self.action_branch.input_width()
    }

    /// Returns a `B × 1` column of values.
    pub fn forward(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        mode: Mode,
    ) -> Result<(Array2<f64>, CriticCache), NeuralError> {
        if states.nrows() != actions.nrows() {
            return Err(NeuralError::ShapeMismatch(format!(
                "{} states vs {} actions",
                states.nrows(),
                actions.nrows()
            )));
        }
        let (hs, state) = self.state_branch.forward(states, mode)?;
        let (ha, action) = self.action_branch.forward(actions, mode)?;
        let joined = concatenate(Axis(1), &[hs.view(), ha.view()]).expect("equal row counts");
        let (q, trunk) = self.trunk.forward(joined.view(), mode)?;
        Ok((q, CriticCache { state, action, trunk }))
    }

    pub fn predict(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        Ok(self.forward(states, actions, Mode::Eval)?.0)
    }

    pub fn commit(&mut self, cache: &CriticCache) {
        self.state_branch.commit(&cache.state);
        self.action_branch.commit(&cache.action);
        self.trunk.commit(&cache.trunk);
    }

    /// Parameter gradients plus gradients with respect to states and actions.
    pub fn backward(
        &self,
        cache: &CriticCache,
        upstream: &Array2<f64>,
    ) -> Result<(Gradients, Array2<f64>, Array2<f64>), NeuralError> {
        let (gt, dj) = self.trunk.backward(&cache.trunk, upstream)?;
        let split = self.state_branch.output_width();
        let ds_h = dj.slice(s![.., ..split]).to_owned();
        let da_h = dj.slice(s![.., split..]).to_owned();
        let (gs, ds) = self.state_branch.backward(&cache.state, &ds_h)?;
        let (ga, da) = self.action_branch.backward(&cache.action, &da_h)?;
        Ok((Gradients::concat(vec![gs, ga, gt]), ds, da))
    }
}

impl Parameterized for TwoBranchCritic {
    fn params(&self) -> Vec<&[f64]> {
        let mut v = self.state_branch.params();
        v.extend(self.action_branch.params());
        v.extend(self.trunk.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.state_branch.params_mut();
        v.extend(self.action_branch.params_mut());
        v.extend(self.trunk.params_mut());
        v
    }

    fn buffers(&self) -> Vec<&[f64]> {
        let mut v = self.state_branch.buffers();
        v.extend(self.action_branch.buffers());
        v.extend(self.trunk.buffers());
        v
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.state_branch.buffers_mut();
        v.extend(self.action_branch.buffers_mut());
        v.extend(self.trunk.buffers_mut());
        v
    }
}
