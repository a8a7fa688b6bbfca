//! Fairness indices and the scalar reward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FairnessError {
    #[error("no users")]
    Empty,
    #[error("all rates are zero")]
    AllZero,
    #[error("negative or non-finite rate {0}")]
    BadRate(f64),
}

fn check(rates: &[f64]) -> Result<(), FairnessError> {
    if rates.is_empty() {
        return Err(FairnessError::Empty);
    }
    if let Some(&bad) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(FairnessError::BadRate(bad));
    }
    Ok(())
}

/// Jain's index `(Σ R)² / (J Σ R²)`.
pub fn jain_index(rates: &[f64]) -> Result<f64, FairnessError> {
    check(rates)?;
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        return Err(FairnessError::AllZero);
    }
    Ok(sum * sum / (rates.len() as f64 * sq))
}

/// Harmonic mean over arithmetic mean. A starved user (zero rate) drives the
/// harmonic mean, and therefore the index, to 0.
pub fn harmonic_fairness_index(rates: &[f64]) -> Result<f64, FairnessError> {
    check(rates)?;
    if rates.iter().any(|&r| r == 0.0) {
        return Ok(0.0);
    }
    let j = rates.len() as f64;
    let hm = j / rates.iter().map(|r| 1.0 / r).sum::<f64>();
    let am = rates.iter().sum::<f64>() / j;
    Ok(hm / am)
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(rates: &[f64]) -> Result<f64, FairnessError> {
    check(rates)?;
    let j = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / j;
    if mean == 0.0 {
        return Err(FairnessError::AllZero);
    }
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / j;
    Ok(var.sqrt() / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub hfi: f64,
    pub jfi: f64,
    pub cv: f64,
}

impl FairnessReport {
    /// All-zero (or empty) rate vectors report zeros instead of failing.
    pub fn from_rates(rates: &[f64]) -> Self {
        match (
            harmonic_fairness_index(rates),
            jain_index(rates),
            coefficient_of_variation(rates),
        ) {
            (Ok(hfi), Ok(jfi), Ok(cv)) => Self { hfi, jfi, cv },
            _ => Self {
                hfi: 0.0,
                jfi: 0.0,
                cv: 0.0,
            },
        }
    }
}

/// Which fairness factor scales the throughput term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessKind {
    Hfi,
    Jfi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    /// Weight per Mbit/s of fairness-scaled sum rate.
    pub alpha: f64,
    /// Weight per watt.
    pub beta: f64,
    pub fairness: FairnessKind,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.15,
            fairness: FairnessKind::Hfi,
        }
    }
}

/// `α · F · ΣR[Mbit/s] − β · P[W]` with `F` the configured fairness factor.
pub fn reward(rates_bps: &[f64], total_power: f64, weights: &RewardWeights) -> Result<f64, FairnessError> {
    let sum_mbps: f64 = rates_bps.iter().sum::<f64>() / 1e6;
    let factor = if sum_mbps == 0.0 {
        0.0
    } else {
        match weights.fairness {
            FairnessKind::Hfi => harmonic_fairness_index(rates_bps)?,
            FairnessKind::Jfi => jain_index(rates_bps)?,
            FairnessKind::None => 1.0,
        }
    };
    Ok(weights.alpha * factor * sum_mbps - weights.beta * total_power)
}
