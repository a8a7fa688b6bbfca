use aerostar_core::SimRng;
use serde::{Deserialize, Serialize};

/// Ornstein-Uhlenbeck process with mean zero and unit time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuNoise {
    pub x: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub decay: f64,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, decay: f64) -> Self {
        Self {
            x: vec![0.0; dim],
            theta,
            sigma,
            decay,
        }
    }

    pub fn sample(&mut self, rng: &mut SimRng) -> Vec<f64> {
        for x in self.x.iter_mut() {
            *x += self.theta * (0.0 - *x) + self.sigma * rng.standard_normal();
        }
        self.x.clone()
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Per-episode decay of `sigma`.
    pub fn decay_sigma(&mut self) {
        self.sigma *= self.decay;
    }

    /// Stationary standard deviation `σ / √(2θ − θ²)`.
    pub fn stationary_std(&self) -> f64 {
        self.sigma / (2.0 * self.theta - self.theta * self.theta).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub value: f64,
    pub min: f64,
    pub decay: f64,
}

impl EpsilonSchedule {
    pub fn new(start: f64, min: f64, decay: f64) -> Self {
        Self {
            value: start.clamp(0.0, 1.0),
            min,
            decay,
        }
    }

    pub fn step(&mut self) {
        self.value = (self.value * self.decay).max(self.min);
    }
}
