use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::layers::{Activation, BatchNorm, BnCache, Dense, Init};
use crate::params::{Gradients, Parameterized};
use crate::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Batch statistics in batch-norm layers.
    Train,
    /// Running statistics.
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LayerSpec {
    BatchNorm,
    Dense {
        width: usize,
        activation: Activation,
        init: Init,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub layers: Vec<LayerSpec>,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl MlpSpec {
    pub fn new(input: usize) -> Self {
        Self {
            input,
            layers: Vec::new(),
            bn_momentum: 0.99,
            bn_eps: 1e-5,
        }
    }

    pub fn batch_norm(mut self) -> Self {
        self.layers.push(LayerSpec::BatchNorm);
        self
    }

    pub fn dense(self, width: usize, activation: Activation) -> Self {
        self.dense_init(width, activation, Init::FanIn)
    }

    pub fn dense_init(mut self, width: usize, activation: Activation, init: Init) -> Self {
        self.layers.push(LayerSpec::Dense {
            width,
            activation,
            init,
        });
        self
    }

    pub fn output_width(&self) -> usize {
        self.layers
            .iter()
            .fold(self.input, |w, l| match l {
                LayerSpec::BatchNorm => w,
                LayerSpec::Dense { width, .. } => *width,
            })
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.input == 0 {
            return Err(NeuralError::InvalidSpec("zero input width".into()));
        }
        if !self.layers.iter().any(|l| matches!(l, LayerSpec::Dense { .. })) {
            return Err(NeuralError::InvalidSpec("no dense layer".into()));
        }
        if self.layers.iter().any(|l| matches!(l, LayerSpec::Dense { width: 0, .. })) {
            return Err(NeuralError::InvalidSpec("zero-width dense layer".into()));
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || !(self.bn_eps > 0.0) {
            return Err(NeuralError::InvalidSpec("batch-norm constants".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Dense(Dense),
    BatchNorm(BatchNorm),
}

/// Feed-forward stack of dense and batch-norm layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
    #[serde(default)]
    version: u64,
}

/// Intermediates of one forward pass. `acts[0]` is the input, `acts[i + 1]`
/// the output of layer `i`.
#[derive(Debug, Clone)]
pub struct MlpCache {
    version: u64,
    acts: Vec<Array2<f64>>,
    bn: Vec<Option<BnCache>>,
}

impl MlpCache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("cache holds the input at least")
    }
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self, NeuralError> {
        spec.validate()?;
        let mut width = spec.input;
        let layers = spec
            .layers
            .iter()
            .map(|l| match *l {
                LayerSpec::BatchNorm => Layer::BatchNorm(BatchNorm::new(width, spec.bn_momentum, spec.bn_eps)),
                LayerSpec::Dense {
                    width: out,
                    activation,
                    init,
                } => {
                    let d = Dense::new(width, out, activation, init, rng);
                    width = out;
                    Layer::Dense(d)
                }
            })
            .collect();
        Ok(Self {
            spec,
            layers,
            version: 0,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.spec.input
    }

    pub fn output_width(&self) -> usize {
        self.spec.output_width()
    }

    pub fn forward(&self, x: ArrayView2<f64>, mode: Mode) -> Result<(Array2<f64>, MlpCache), NeuralError> {
        if x.ncols() != self.spec.input {
            return Err(NeuralError::WidthMismatch {
                expected: self.spec.input,
                got: x.ncols(),
            });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut bn = Vec::with_capacity(self.layers.len());
        acts.push(x.to_owned());
        for layer in &self.layers {
            let input = acts.last().expect("non-empty").view();
            match layer {
                Layer::Dense(d) => {
                    let out = d.forward(input);
                    acts.push(out);
                    bn.push(None);
                }
                Layer::BatchNorm(b) => {
                    let (out, c) = b.forward(input, mode == Mode::Train)?;
                    acts.push(out);
                    bn.push(Some(c));
                }
            }
        }
        let out = acts.last().expect("non-empty").clone();
        Ok((
            out,
            MlpCache {
                version: self.version,
                acts,
                bn,
            },
        ))
    }

    /// Eval-mode forward.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        Ok(self.forward(x, Mode::Eval)?.0)
    }

    /// Fold the batch statistics of a train-mode pass into the running ones.
    pub fn commit(&mut self, cache: &MlpCache) {
        for (layer, c) in self.layers.iter_mut().zip(&cache.bn) {
            if let (Layer::BatchNorm(b), Some(c)) = (layer, c) {
                b.commit(c);
            }
        }
    }

    /// Train-mode forward that also updates running statistics.
    pub fn forward_train(&mut self, x: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache), NeuralError> {
        let (out, cache) = self.forward(x, Mode::Train)?;
        self.commit(&cache);
        Ok((out, cache))
    }

    /// Parameter gradients (in [`Parameterized::params`] order) and the
    /// gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, upstream: &Array2<f64>) -> Result<(Gradients, Array2<f64>), NeuralError> {
        if cache.version != self.version || cache.acts.len() != self.layers.len() + 1 {
            return Err(NeuralError::StaleCache);
        }
        if upstream.dim() != cache.output().dim() {
            return Err(NeuralError::ShapeMismatch(format!(
                "upstream {:?} vs output {:?}",
                upstream.dim(),
                cache.output().dim()
            )));
        }
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(2 * self.layers.len());
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            match layer {
                Layer::Dense(d) => {
                    let (dw, db, dx) = d.backward(&cache.acts[i], &cache.acts[i + 1], &g);
                    grads.push(db.to_vec());
                    grads.push(dw.iter().copied().collect());
                    g = dx;
                }
                Layer::BatchNorm(b) => {
                    let c = cache.bn[i].as_ref().ok_or(NeuralError::StaleCache)?;
                    let (dgamma, dbeta, dx) = b.backward(c, &g);
                    grads.push(dbeta.to_vec());
                    grads.push(dgamma.to_vec());
                    g = dx;
                }
            }
        }
        grads.reverse();
        Ok((Gradients(grads), g))
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.w.as_slice().expect("standard layout"));
                    out.push(d.b.as_slice().expect("standard layout"));
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_slice().expect("standard layout"));
                    out.push(b.beta.as_slice().expect("standard layout"));
                }
            }
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.w.as_slice_mut().expect("standard layout"));
                    out.push(d.b.as_slice_mut().expect("standard layout"));
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_slice_mut().expect("standard layout"));
                    out.push(b.beta.as_slice_mut().expect("standard layout"));
                }
            }
        }
        out
    }

    fn buffers(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::BatchNorm(b) => Some([
                    b.running_mean.as_slice().expect("standard layout"),
                    b.running_var.as_slice().expect("standard layout"),
                ]),
                Layer::Dense(_) => None,
            })
            .flatten()
            .collect()
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out = Vec::new();
        for l in &mut self.layers {
            if let Layer::BatchNorm(b) = l {
                out.push(b.running_mean.as_slice_mut().expect("standard layout"));
                out.push(b.running_var.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }
}
