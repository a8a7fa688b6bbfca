//! Effective cascaded channels, SINR, rates and beamformer projection.
//!
//! A user's received signal for stream `i` is `gᵀ v_i`, where
//! `g = h_bu + Hᵀ Φ h_ru` combines the direct link with the cascade through
//! the surface. SINR uses squared magnitudes and a single thermal noise term.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{dot, norm_sq, CMatrix};
use crate::star_surface::Diagonal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("user index {index} out of range for {users} users")]
    BadUser { index: usize, users: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// `Σ_j ‖v_j‖² ≤ p_max`.
    Total,
    /// `‖v_j‖² ≤ p_max` for every column.
    PerUser,
}

/// BS precoder: column `j` of the M × J matrix feeds user `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub v: CMatrix,
    pub p_max: f64,
}

impl Beamformer {
    pub fn antennas(&self) -> usize {
        self.v.rows()
    }

    pub fn users(&self) -> usize {
        self.v.cols()
    }

    pub fn total_power(&self) -> f64 {
        self.v.frobenius_norm_sq()
    }

    pub fn column_power(&self, j: usize) -> f64 {
        norm_sq(&self.v.column(j))
    }

    pub fn is_feasible(&self, mode: PowerMode) -> bool {
        match mode {
            PowerMode::Total => self.total_power() <= self.p_max + 1e-9,
            PowerMode::PerUser => (0..self.users()).all(|j| self.column_power(j) <= self.p_max + 1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub sinr: Vec<f64>,
    /// bit/s
    pub rates: Vec<f64>,
    pub sum_rate: f64,
}

/// Combined direct + cascaded channel of one user, length M.
pub fn effective_channel(
    h_bs_user: &[Complex64],
    h_ris_user: &[Complex64],
    phi: &Diagonal,
    h_bs_ris: &CMatrix,
) -> Result<Vec<Complex64>, LinkError> {
    let (n, m) = h_bs_ris.shape();
    if h_bs_user.len() != m || h_ris_user.len() != n || phi.len() != n {
        return Err(LinkError::DimensionMismatch(format!(
            "h_bu {}, h_ru {}, phi {}, H {}x{}",
            h_bs_user.len(),
            h_ris_user.len(),
            phi.len(),
            n,
            m
        )));
    }
    let mut g = h_bs_user.to_vec();
    for (row, (h, p)) in h_ris_user.iter().zip(phi.entries()).enumerate() {
        let w = h * p;
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (gm, hm) in g.iter_mut().zip(h_bs_ris.row(row)) {
            *gm += w * hm;
        }
    }
    Ok(g)
}

fn check_shapes(effective: &[Vec<Complex64>], bf: &Beamformer) -> Result<(), LinkError> {
    if effective.len() != bf.users() {
        return Err(LinkError::DimensionMismatch(format!(
            "{} effective channels for a {}-user beamformer",
            effective.len(),
            bf.users()
        )));
    }
    if let Some(bad) = effective.iter().find(|g| g.len() != bf.antennas()) {
        return Err(LinkError::DimensionMismatch(format!(
            "effective channel of length {} for {} antennas",
            bad.len(),
            bf.antennas()
        )));
    }
    Ok(())
}

/// SINR of user `j`.
pub fn sinr(
    effective: &[Vec<Complex64>],
    bf: &Beamformer,
    j: usize,
    noise_power: f64,
) -> Result<f64, LinkError> {
    if !(noise_power > 0.0) {
        return Err(LinkError::NonPositiveNoise(noise_power));
    }
    check_shapes(effective, bf)?;
    if j >= effective.len() {
        return Err(LinkError::BadUser {
            index: j,
            users: effective.len(),
        });
    }
    Ok(sinr_unchecked(effective, bf, j, noise_power))
}

fn sinr_unchecked(effective: &[Vec<Complex64>], bf: &Beamformer, j: usize, noise: f64) -> f64 {
    let g = &effective[j];
    let mut signal = 0.0;
    let mut interference = 0.0;
    for i in 0..bf.users() {
        let p = dot(g, &bf.v.column(i)).norm_sqr();
        if i == j {
            signal = p;
        } else {
            interference += p;
        }
    }
    signal / (interference + noise)
}

/// Per-user SINR and Shannon rates over `bandwidth` Hz.
pub fn rates(
    effective: &[Vec<Complex64>],
    bf: &Beamformer,
    noise_power: f64,
    bandwidth: f64,
) -> Result<LinkReport, LinkError> {
    if !(noise_power > 0.0) {
        return Err(LinkError::NonPositiveNoise(noise_power));
    }
    check_shapes(effective, bf)?;
    let sinr: Vec<f64> = (0..effective.len())
        .map(|j| sinr_unchecked(effective, bf, j, noise_power))
        .collect();
    let rates: Vec<f64> = sinr.iter().map(|g| bandwidth * (1.0 + g).log2()).collect();
    let sum_rate = rates.iter().sum();
    Ok(LinkReport { sinr, rates, sum_rate })
}

/// Map `2·M·J` raw values to a precoder. Consecutive raw pairs are the real
/// and imaginary part of `V[m, j]`, user-major (all antennas of user 0 first).
/// Infeasible precoders are scaled down onto the power boundary.
pub fn project_beamformer(
    raw: &[f64],
    antennas: usize,
    users: usize,
    p_max: f64,
    mode: PowerMode,
) -> Result<Beamformer, LinkError> {
    if raw.len() != 2 * antennas * users {
        return Err(LinkError::DimensionMismatch(format!(
            "{} raw values for {}x{} beamformer",
            raw.len(),
            antennas,
            users
        )));
    }
    let mut v = CMatrix::zeros(antennas, users);
    for j in 0..users {
        for m in 0..antennas {
            let k = 2 * (j * antennas + m);
            v[(m, j)] = Complex64::new(raw[k], raw[k + 1]);
        }
    }
    let p_max = p_max.max(0.0);
    match mode {
        PowerMode::Total => {
            let power = v.frobenius_norm_sq();
            if power > p_max {
                v = v.scale((p_max / power).sqrt());
            }
        }
        PowerMode::PerUser => {
            for j in 0..users {
                let col = v.column(j);
                let power = norm_sq(&col);
                if power > p_max {
                    let s = (p_max / power).sqrt();
                    let scaled: Vec<Complex64> = col.iter().map(|z| z * s).collect();
                    v.set_column(j, &scaled);
                }
            }
        }
    }
    Ok(Beamformer { v, p_max })
}

/// Inverse of the raw layout used by [`project_beamformer`].
pub fn beamformer_to_raw(v: &CMatrix) -> Vec<f64> {
    let (antennas, users) = v.shape();
    let mut raw = Vec::with_capacity(2 * antennas * users);
    for j in 0..users {
        for m in 0..antennas {
            raw.push(v[(m, j)].re);
            raw.push(v[(m, j)].im);
        }
    }
    raw
}

/// Noise power in watts from a density in dBm/Hz over `bandwidth` Hz.
pub fn noise_power_from_density(density_dbm_hz: f64, bandwidth: f64) -> f64 {
    dbm_to_watts(density_dbm_hz + 10.0 * bandwidth.log10())
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
