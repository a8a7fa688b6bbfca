//! Coupled transmission/reflection coefficients of an energy-splitting
//! STAR surface.
//!
//! Each lossless passive element splits power between the two beams
//! (`β_R² + β_T² = 1`) and its transmit phase sits exactly a quarter turn
//! away from its reflect phase; the discrete coupling sign picks which way.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::CMatrix;
use crate::scenario::Side;

const COUPLING_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StarError {
    #[error("transmit amplitude {value} at element {index} is outside [0, 1]")]
    AmplitudeOutOfRange { index: usize, value: f64 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingSign {
    Plus,
    Minus,
}

impl CouplingSign {
    /// Threshold a real value: strictly positive → `Plus`, otherwise `Minus`.
    pub fn from_real(x: f64) -> Self {
        if x > 0.0 {
            CouplingSign::Plus
        } else {
            CouplingSign::Minus
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            CouplingSign::Plus => 1.0,
            CouplingSign::Minus => -1.0,
        }
    }
}

/// Surface variants compared in ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisKind {
    /// Coupled-phase STAR (the physical model).
    StarCoupled,
    /// STAR with a freely chosen transmit phase.
    StarIndependent,
    /// Half the elements reflect only, half transmit only.
    DualTr,
    /// Conventional reflecting surface.
    ReflectOnly,
}

impl RisKind {
    pub fn uses_discrete_sign(self) -> bool {
        !matches!(self, RisKind::StarIndependent)
    }

    pub fn needs_free_transmit_phase(self) -> bool {
        matches!(self, RisKind::StarIndependent)
    }
}

/// Per-element settings chosen by an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrcConfig {
    pub theta_r: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub sign: Vec<CouplingSign>,
}

impl TrcConfig {
    pub fn theta_t(&self) -> Vec<f64> {
        self.theta_r
            .iter()
            .zip(&self.sign)
            .map(|(t, s)| wrap_phase(t + s.as_f64() * FRAC_PI_2))
            .collect()
    }

    pub fn beta_r(&self) -> Vec<f64> {
        self.beta_t.iter().map(|b| (1.0 - b * b).max(0.0).sqrt()).collect()
    }
}

/// Diagonal of an N × N coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal(pub Vec<Complex64>);

impl Diagonal {
    pub fn zeros(n: usize) -> Self {
        Diagonal(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::diagonal(&self.0)
    }
}

/// Reflect and transmit coefficient matrices for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TrcMatrices {
    pub reflect: Diagonal,
    pub transmit: Diagonal,
}

impl TrcMatrices {
    pub fn for_side(&self, side: Side) -> &Diagonal {
        match side {
            Side::Reflect => &self.reflect,
            Side::Transmit => &self.transmit,
        }
    }
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % TAU;
    if y <= -PI {
        y += TAU;
    } else if y > PI {
        y -= TAU;
    }
    y
}

fn check_amplitudes(beta_t: &[f64]) -> Result<(), StarError> {
    for (index, &value) in beta_t.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(StarError::AmplitudeOutOfRange { index, value });
        }
    }
    Ok(())
}

/// Expand per-element settings into the two diagonal coefficient matrices.
pub fn derive_coupled_config(
    theta_r: &[f64],
    beta_t: &[f64],
    sign: &[CouplingSign],
) -> Result<TrcMatrices, StarError> {
    if theta_r.len() != beta_t.len() || theta_r.len() != sign.len() {
        return Err(StarError::LengthMismatch(format!(
            "theta_r {}, beta_t {}, sign {}",
            theta_r.len(),
            beta_t.len(),
            sign.len()
        )));
    }
    check_amplitudes(beta_t)?;
    let mut reflect = Vec::with_capacity(theta_r.len());
    let mut transmit = Vec::with_capacity(theta_r.len());
    for ((&th, &bt), s) in theta_r.iter().zip(beta_t).zip(sign) {
        let br = (1.0 - bt * bt).max(0.0).sqrt();
        let th_t = wrap_phase(th + s.as_f64() * FRAC_PI_2);
        reflect.push(Complex64::from_polar(br, th));
        transmit.push(Complex64::from_polar(bt, th_t));
    }
    Ok(TrcMatrices {
        reflect: Diagonal(reflect),
        transmit: Diagonal(transmit),
    })
}

/// Energy conservation and quarter-turn phase offset on every element.
/// Elements where either amplitude vanishes have no defined phase offset.
pub fn validate_coupling(reflect: &Diagonal, transmit: &Diagonal) -> bool {
    if reflect.len() != transmit.len() {
        return false;
    }
    reflect.0.iter().zip(&transmit.0).all(|(r, t)| {
        let energy_ok = (r.norm_sqr() + t.norm_sqr() - 1.0).abs() <= COUPLING_TOL;
        let phase_ok = if r.norm() <= COUPLING_TOL || t.norm() <= COUPLING_TOL {
            true
        } else {
            (r.arg() - t.arg()).cos().abs() <= COUPLING_TOL
        };
        energy_ok && phase_ok
    })
}

/// Coefficients for any surface variant. `theta_t_free` is only read by
/// [`RisKind::StarIndependent`].
pub fn surface_response(
    kind: RisKind,
    trc: &TrcConfig,
    theta_t_free: Option<&[f64]>,
) -> Result<TrcMatrices, StarError> {
    let n = trc.theta_r.len();
    match kind {
        RisKind::StarCoupled => derive_coupled_config(&trc.theta_r, &trc.beta_t, &trc.sign),
        RisKind::StarIndependent => {
            let theta_t = theta_t_free
                .ok_or_else(|| StarError::LengthMismatch("missing free transmit phases".into()))?;
            if theta_t.len() != n || trc.beta_t.len() != n {
                return Err(StarError::LengthMismatch(format!(
                    "theta_t {} for {} elements",
                    theta_t.len(),
                    n
                )));
            }
            check_amplitudes(&trc.beta_t)?;
            let reflect = trc
                .theta_r
                .iter()
                .zip(trc.beta_r())
                .map(|(&th, br)| Complex64::from_polar(br, th))
                .collect();
            let transmit = theta_t
                .iter()
                .zip(&trc.beta_t)
                .map(|(&th, &bt)| Complex64::from_polar(bt, wrap_phase(th)))
                .collect();
            Ok(TrcMatrices {
                reflect: Diagonal(reflect),
                transmit: Diagonal(transmit),
            })
        }
        RisKind::DualTr => {
            let split = n / 2;
            let beta: Vec<f64> = (0..n).map(|i| if i < split { 0.0 } else { 1.0 }).collect();
            derive_coupled_config(&trc.theta_r, &beta, &trc.sign)
        }
        RisKind::ReflectOnly => {
            let beta = vec![0.0; n];
            derive_coupled_config(&trc.theta_r, &beta, &trc.sign)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn energy_split_example() {
        let m = derive_coupled_config(&[0.0], &[0.6], &[CouplingSign::Plus]).unwrap();
        assert!((m.reflect.0[0] - Complex64::new(0.8, 0.0)).norm() < 1e-12);
        assert!((m.transmit.0[0] - Complex64::new(0.0, 0.6)).norm() < 1e-12);
    }

    #[test]
    fn pure_reflection_and_transmission() {
        let m = derive_coupled_config(&[0.3, -1.0], &[0.0, 0.0], &[CouplingSign::Plus; 2]).unwrap();
        assert!(m.transmit.0.iter().all(|z| z.norm() == 0.0));
        assert!(m.reflect.0.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let m = derive_coupled_config(&[0.3, -1.0], &[1.0, 1.0], &[CouplingSign::Minus; 2]).unwrap();
        assert!(m.reflect.0.iter().all(|z| z.norm() == 0.0));
        assert!(m.transmit.0.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_amplitude() {
        assert_eq!(
            derive_coupled_config(&[0.0], &[1.2], &[CouplingSign::Plus]),
            Err(StarError::AmplitudeOutOfRange { index: 0, value: 1.2 })
        );
        assert!(derive_coupled_config(&[0.0], &[f64::NAN], &[CouplingSign::Plus]).is_err());
    }

    #[test]
    fn validation_detects_violations() {
        let same_phase = Diagonal(vec![Complex64::from_polar(0.6, 0.4)]);
        let other = Diagonal(vec![Complex64::from_polar(0.8, 0.4)]);
        assert!(!validate_coupling(&same_phase, &other));
        let r = Diagonal(vec![Complex64::from_polar(0.9, 0.0)]);
        let t = Diagonal(vec![Complex64::from_polar(0.9, FRAC_PI_2)]);
        assert!(!validate_coupling(&r, &t));
    }

    #[test]
    fn phase_wrapping() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert!((wrap_phase(-3.0 * PI / 2.0) - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn variants() {
        let trc = TrcConfig {
            theta_r: vec![0.1; 4],
            beta_t: vec![0.5; 4],
            sign: vec![CouplingSign::Plus; 4],
        };
        let dual = surface_response(RisKind::DualTr, &trc, None).unwrap();
        assert_eq!(dual.transmit.0[..2], [Complex64::new(0.0, 0.0); 2]);
        assert!(dual.reflect.0[2..].iter().all(|z| z.norm() == 0.0));
        assert!(validate_coupling(&dual.reflect, &dual.transmit));

        let refl = surface_response(RisKind::ReflectOnly, &trc, None).unwrap();
        assert!(refl.transmit.0.iter().all(|z| z.norm() == 0.0));

        let free = [2.0, -2.0, 0.0, 1.0];
        let ind = surface_response(RisKind::StarIndependent, &trc, Some(&free)).unwrap();
        assert!((ind.transmit.0[0].arg() - 2.0).abs() < 1e-12);
        assert!(surface_response(RisKind::StarIndependent, &trc, None).is_err());
    }

    proptest! {
        #[test]
        fn derived_config_always_validates(
            elems in proptest::collection::vec((-PI..PI, 0.0f64..=1.0, any::<bool>()), 1..32)
        ) {
            let theta: Vec<f64> = elems.iter().map(|e| e.0).collect();
            let beta: Vec<f64> = elems.iter().map(|e| e.1).collect();
            let sign: Vec<CouplingSign> = elems.iter().map(|e| if e.2 { CouplingSign::Plus } else { CouplingSign::Minus }).collect();
            let m = derive_coupled_config(&theta, &beta, &sign).unwrap();
            prop_assert!(validate_coupling(&m.reflect, &m.transmit));
            for i in 0..theta.len() {
                let r = m.reflect.0[i].norm_sqr();
                let t = m.transmit.0[i].norm_sqr();
                prop_assert!((r + t - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn derivation_is_elementwise(
            elems in proptest::collection::vec((-PI..PI, 0.0f64..=1.0, any::<bool>()), 2..12),
            shift in 1usize..11,
        ) {
            let theta: Vec<f64> = elems.iter().map(|e| e.0).collect();
            let beta: Vec<f64> = elems.iter().map(|e| e.1).collect();
            let sign: Vec<CouplingSign> = elems.iter().map(|e| if e.2 { CouplingSign::Plus } else { CouplingSign::Minus }).collect();
            let m = derive_coupled_config(&theta, &beta, &sign).unwrap();
            let k = shift % theta.len();
            let rot = |v: &[f64]| { let mut x = v.to_vec(); x.rotate_left(k); x };
            let mut s2 = sign.clone();
            s2.rotate_left(k);
            let p = derive_coupled_config(&rot(&theta), &rot(&beta), &s2).unwrap();
            let mut expected = m.reflect.0.clone();
            expected.rotate_left(k);
            prop_assert_eq!(p.reflect.0, expected);
        }
    }
}
