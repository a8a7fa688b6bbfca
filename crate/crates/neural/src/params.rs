use serde::{Deserialize, Serialize};

use crate::NeuralError;

/// Flat views over a network's trainable parameters and its non-trainable
/// buffers (batch-norm running statistics). Orders are stable.
pub trait Parameterized {
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
    fn buffers(&self) -> Vec<&[f64]>;
    fn buffers_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn param_shapes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }
}

/// One gradient block per parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like<P: Parameterized + ?Sized>(net: &P) -> Self {
        Self(net.params().iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|g| g.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().flatten().for_each(|g| *g *= s);
    }

    pub fn shapes(&self) -> Vec<usize> {
        self.0.iter().map(|g| g.len()).collect()
    }

    /// Concatenate block lists, e.g. for composite networks.
    pub fn concat(parts: Vec<Gradients>) -> Self {
        Self(parts.into_iter().flat_map(|g| g.0).collect())
    }
}

fn check_shapes(expected: &[usize], got: &[usize]) -> Result<(), NeuralError> {
    if expected != got {
        return Err(NeuralError::ShapeMismatch(format!(
            "{} blocks vs {} blocks",
            expected.len(),
            got.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<P: Parameterized + ?Sized>(net: &P, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Descend along `grads` with bias-corrected moments.
    pub fn update<P: Parameterized + ?Sized>(&mut self, net: &mut P, grads: &Gradients) -> Result<(), NeuralError> {
        let shapes: Vec<usize> = self.m.iter().map(|m| m.len()).collect();
        check_shapes(&shapes, &grads.shapes())?;
        check_shapes(&shapes, &net.param_shapes())?;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in net
            .params_mut()
            .into_iter()
            .zip(&grads.0)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// `target ← (1 − τ) target + τ online`, applied to parameters and buffers.
pub fn soft_update<P: Parameterized + ?Sized>(target: &mut P, online: &P, tau: f64) -> Result<(), NeuralError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(NeuralError::InvalidSpec(format!("tau {tau} outside [0, 1]")));
    }
    check_shapes(&target.param_shapes(), &online.param_shapes())?;
    let tb: Vec<usize> = target.buffers().iter().map(|b| b.len()).collect();
    let ob: Vec<usize> = online.buffers().iter().map(|b| b.len()).collect();
    check_shapes(&tb, &ob)?;
    let blend = |t: &mut [f64], o: &[f64]| {
        for (a, b) in t.iter_mut().zip(o) {
            *a = (1.0 - tau) * *a + tau * b;
        }
    };
    for (t, o) in target.params_mut().into_iter().zip(online.params()) {
        blend(t, o);
    }
    for (t, o) in target.buffers_mut().into_iter().zip(online.buffers()) {
        blend(t, o);
    }
    Ok(())
}

/// Euclidean distance between two networks' parameter vectors.
pub fn param_distance<P: Parameterized + ?Sized>(a: &P, b: &P) -> f64 {
    a.params()
        .iter()
        .zip(b.params())
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)))
        .sum::<f64>()
        .sqrt()
}
