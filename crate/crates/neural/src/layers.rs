use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    pub fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Linear => {}
        }
    }

    /// Multiply `grad` in place by the derivative, expressed through the
    /// activation's output `a`.
    pub fn backprop(self, a: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(a, |g, &o| {
                if o <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(a, |g, &o| *g *= 1.0 - o * o),
            Activation::Linear => {}
        }
    }
}

/// Weight initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in ±1/√fan_in for weights and biases.
    FanIn,
    /// Uniform in ±limit.
    Uniform(f64),
    Zero,
}

/// Fully connected layer `a = act(x W + b)`; `W` is `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, init: Init, rng: &mut R) -> Self {
        let limit = match init {
            Init::FanIn => 1.0 / (input.max(1) as f64).sqrt(),
            Init::Uniform(l) => l,
            Init::Zero => 0.0,
        };
        let (w, b) = if limit > 0.0 {
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            (
                Array2::from_shape_simple_fn((input, output), || dist.sample(rng)),
                Array1::from_shape_simple_fn(output, || dist.sample(rng)),
            )
        } else {
            (Array2::zeros((input, output)), Array1::zeros(output))
        };
        Self { w, b, activation }
    }

    pub fn input_width(&self) -> usize {
        self.w.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w);
        z += &self.b;
        self.activation.apply(&mut z);
        z
    }

    /// Returns `(dW, db, dx)`.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        a: &Array2<f64>,
        upstream: &Array2<f64>,
    ) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
        let mut dz = upstream.clone();
        self.activation.backprop(a, &mut dz);
        let dw = x.t().dot(&dz);
        let db = dz.sum_axis(Axis(0));
        let dx = dz.dot(&self.w.t());
        (dw, db, dx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Values a batch-norm forward pass leaves behind for backprop.
#[derive(Debug, Clone, PartialEq)]
pub struct BnCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub batch_mean: Array1<f64>,
    pub batch_var: Array1<f64>,
    pub train: bool,
}

impl BatchNorm {
    pub fn new(width: usize, momentum: f64, eps: f64) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum,
            eps,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: ArrayView2<f64>, train: bool) -> Result<(Array2<f64>, BnCache), NeuralError> {
        let (mean, var) = if train {
            if x.nrows() < 2 {
                return Err(NeuralError::DegenerateBatch(x.nrows()));
            }
            let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
            let var = x.var_axis(Axis(0), 0.0);
            (mean, var)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let xhat = (&x - &mean) * &inv_std;
        let y = &xhat * &self.gamma + &self.beta;
        Ok((
            y,
            BnCache {
                xhat,
                inv_std,
                batch_mean: mean,
                batch_var: var,
                train,
            },
        ))
    }

    pub fn commit(&mut self, cache: &BnCache) {
        if !cache.train {
            return;
        }
        let m = self.momentum;
        self.running_mean = &self.running_mean * m + &cache.batch_mean * (1.0 - m);
        self.running_var = &self.running_var * m + &cache.batch_var * (1.0 - m);
    }

    /// Returns `(dgamma, dbeta, dx)`.
    pub fn backward(&self, cache: &BnCache, upstream: &Array2<f64>) -> (Array1<f64>, Array1<f64>, Array2<f64>) {
        let dgamma = (upstream * &cache.xhat).sum_axis(Axis(0));
        let dbeta = upstream.sum_axis(Axis(0));
        let dxhat = upstream * &self.gamma;
        let dx = if cache.train {
            let b = upstream.nrows() as f64;
            let sum_dxhat = dxhat.sum_axis(Axis(0));
            let sum_dxhat_xhat = (&dxhat * &cache.xhat).sum_axis(Axis(0));
            let inner = &dxhat * b - &sum_dxhat - &cache.xhat * &sum_dxhat_xhat;
            inner * &cache.inv_std / b
        } else {
            dxhat * &cache.inv_std
        };
        (dgamma, dbeta, dx)
    }
}
