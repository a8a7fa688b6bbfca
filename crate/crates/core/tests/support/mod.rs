//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use aerostar_core::numerics::CMatrix;
use aerostar_core::SimRng;
use num_complex::Complex64;

/// One downlink instance written out as plain nested vectors.
#[derive(Debug, Clone)]
pub struct Instance {
    pub m: usize,
    pub n: usize,
    pub j: usize,
    /// BS → surface, `n × m`.
    pub h: Vec<Vec<Complex64>>,
    pub bs_user: Vec<Vec<Complex64>>,
    pub ris_user: Vec<Vec<Complex64>>,
    /// Surface coefficients seen by each user.
    pub phi: Vec<Vec<Complex64>>,
    /// Precoder, `m × j`.
    pub v: Vec<Vec<Complex64>>,
    pub noise: f64,
}

pub fn cn(rng: &mut SimRng, scale: f64) -> Complex64 {
    Complex64::new(rng.standard_normal(), rng.standard_normal()) * (scale / 2f64.sqrt())
}

pub fn random_instance(rng: &mut SimRng) -> Instance {
    let m = 2 + rng.below(3);
    let n = [4, 9, 16][rng.below(3)];
    let j = 2 + rng.below(3);
    let direct = 10f64.powf(rng.uniform(-4.0, 0.0));
    let h: Vec<Vec<Complex64>> = (0..n).map(|_| (0..m).map(|_| cn(rng, 1.0)).collect()).collect();
    let bs_user = (0..j).map(|_| (0..m).map(|_| cn(rng, direct)).collect()).collect();
    let ris_user = (0..j).map(|_| (0..n).map(|_| cn(rng, 1.0)).collect()).collect();
    let phi = (0..j)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::from_polar(rng.uniform(0.0, 1.0), rng.uniform(-3.2, 3.2)))
                .collect()
        })
        .collect();
    let v = (0..m).map(|_| (0..j).map(|_| cn(rng, 0.3)).collect()).collect();
    Instance {
        m,
        n,
        j,
        h,
        bs_user,
        ris_user,
        phi,
        v,
        noise: 10f64.powf(rng.uniform(-3.0, 0.0)),
    }
}

impl Instance {
    pub fn h_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.m, |r, c| self.h[r][c])
    }

    pub fn v_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.m, self.j, |r, c| self.v[r][c])
    }

    /// `Σ_m (h_bu[m] + Σ_n h_ru[n] φ[n] H[n][m]) v[m][i]` by explicit loops.
    pub fn received(&self, user: usize, stream: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..self.m {
            let mut g = self.bs_user[user][m];
            for n in 0..self.n {
                g += self.ris_user[user][n] * self.phi[user][n] * self.h[n][m];
            }
            acc += g * self.v[m][stream];
        }
        acc
    }

    pub fn naive_sinr(&self) -> Vec<f64> {
        (0..self.j)
            .map(|u| {
                let signal = self.received(u, u).norm_sqr();
                let interference: f64 = (0..self.j)
                    .filter(|&i| i != u)
                    .map(|i| self.received(u, i).norm_sqr())
                    .sum();
                signal / (interference + self.noise)
            })
            .collect()
    }
}

/// Rician factor from the first two moments of the envelope power:
/// with `γ = Var(|h|²) / E[|h|²]²`, `K = √(1−γ) / (1 − √(1−γ))`.
pub fn k_factor_moments(samples: &[Complex64]) -> f64 {
    let n = samples.len() as f64;
    let p: Vec<f64> = samples.iter().map(|z| z.norm_sqr()).collect();
    let mean = p.iter().sum::<f64>() / n;
    let var = p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let gamma = var / (mean * mean);
    if gamma >= 1.0 {
        return 0.0;
    }
    let r = (1.0 - gamma).sqrt();
    r / (1.0 - r)
}

pub fn mean_power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64
}
