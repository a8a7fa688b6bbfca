//! Rotary-wing propulsion power, surface drag power and communication
//! efficiency.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{v_dot, v_norm, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("total power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("velocity grid is empty")]
    EmptyGrid,
}

/// Hover induced-power expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InducedModel {
    /// `T^{3/2} / (2ρA)`.
    Literal,
    /// `T^{3/2} / √(2ρA)`, the rotor momentum-theory value.
    MomentumTheory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClimbModel {
    /// Descent costs nothing and regenerates nothing.
    NonNegative,
    /// `±T·ḣ`.
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VperpMode {
    /// Drag uses the full airspeed.
    FullSpeed,
    /// Drag uses the velocity component along the panel normal.
    NormalComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavParams {
    /// Air density, kg/m³.
    pub rho: f64,
    /// Profile drag coefficient δ.
    pub profile_drag: f64,
    /// Total rotor disc area, m².
    pub rotor_area: f64,
    pub solidity: f64,
    /// Blade tip speed rΩ, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub induced_velocity: f64,
    /// Fuselage drag ratio d0.
    pub fuselage_drag: f64,
    /// Weight (thrust in steady flight), N.
    pub weight: f64,
    pub induced_model: InducedModel,
    pub climb_model: ClimbModel,
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            rho: 1.225,
            profile_drag: 0.012,
            rotor_area: 0.503,
            solidity: 0.05,
            tip_speed: 120.0,
            induced_velocity: 4.028,
            fuselage_drag: 0.6,
            weight: 25.0,
            induced_model: InducedModel::Literal,
            climb_model: ClimbModel::NonNegative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisAeroParams {
    pub row_len: usize,
    pub wavelength: f64,
    /// μ in the element spacing λ/μ.
    pub spacing_divisor: f64,
    pub drag_coefficient: f64,
    pub v_perp_mode: VperpMode,
}

impl Default for RisAeroParams {
    fn default() -> Self {
        Self {
            row_len: 4,
            wavelength: crate::channel::C_GHZ / 5.0,
            spacing_divisor: 2.0,
            drag_coefficient: 2.1,
            v_perp_mode: VperpMode::NormalComponent,
        }
    }
}

impl RisAeroParams {
    pub fn area(&self) -> f64 {
        ris_area(self.row_len, self.wavelength, self.spacing_divisor)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub blade: f64,
    pub induced: f64,
    pub parasite: f64,
    pub climb: f64,
    pub ris_drag: f64,
    pub total: f64,
}

impl PowerBreakdown {
    pub fn component_sum(&self) -> f64 {
        self.blade + self.induced + self.parasite + self.climb + self.ris_drag
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

/// Propulsion power at horizontal airspeed `v_horiz` and vertical rate `climb_rate`.
pub fn propulsion_power(params: &UavParams, v_horiz: f64, climb_rate: f64) -> PowerBreakdown {
    let v = v_horiz.max(0.0);
    let rho = params.rho;
    let area = params.rotor_area;
    let tip = params.tip_speed;
    let blade = rho * params.profile_drag * area * params.solidity * tip.powi(3) / 8.0
        * (1.0 + 3.0 * v * v / (tip * tip));
    let hover_induced = match params.induced_model {
        InducedModel::Literal => params.weight.powf(1.5) / (2.0 * rho * area),
        InducedModel::MomentumTheory => params.weight.powf(1.5) / (2.0 * rho * area).sqrt(),
    };
    let vi2 = params.induced_velocity * params.induced_velocity;
    let v2 = v * v;
    let induced = hover_induced * ((v2 * v2 / (4.0 * vi2 * vi2) + 1.0).sqrt() - v2 / (2.0 * vi2));
    let parasite = rho * params.solidity * area * params.fuselage_drag * v.powi(3) / 2.0;
    let climb = match params.climb_model {
        ClimbModel::NonNegative => (params.weight * climb_rate).max(0.0),
        ClimbModel::Signed => params.weight * climb_rate,
    };
    let mut out = PowerBreakdown {
        blade,
        induced,
        parasite,
        climb,
        ris_drag: 0.0,
        total: 0.0,
    };
    out.total = out.component_sum();
    out
}

/// Area of a square panel with `row_len` elements per row at spacing λ/μ.
pub fn ris_area(row_len: usize, wavelength: f64, spacing_divisor: f64) -> f64 {
    let gaps = row_len.saturating_sub(1) as f64;
    gaps * gaps * wavelength * wavelength / (spacing_divisor * spacing_divisor)
}

/// Power spent pushing the panel through the air at `v_perp`.
pub fn ris_drag_power(area: f64, rho: f64, drag_coefficient: f64, v_perp: f64) -> f64 {
    0.5 * rho * area * drag_coefficient * v_perp.abs().powi(3)
}

/// Propulsion plus panel drag for a 3D velocity.
pub fn total_power(
    uav: &UavParams,
    ris: &RisAeroParams,
    velocity: Vec3,
    panel_normal: Vec3,
) -> PowerBreakdown {
    let v_horiz = (velocity[0] * velocity[0] + velocity[1] * velocity[1]).sqrt();
    let mut p = propulsion_power(uav, v_horiz, velocity[2]);
    let v_perp = match ris.v_perp_mode {
        VperpMode::FullSpeed => v_norm(velocity),
        VperpMode::NormalComponent => v_dot(velocity, panel_normal),
    };
    p.ris_drag = ris_drag_power(ris.area(), uav.rho, ris.drag_coefficient, v_perp);
    p.total = p.component_sum();
    p
}

/// Bits per joule.
pub fn efficiency(sum_rate: f64, total: f64) -> Result<f64, EnergyError> {
    if !(total > 0.0) {
        return Err(EnergyError::NonPositivePower(total));
    }
    Ok(sum_rate / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySweep {
    /// `(v, total watts)` per grid point.
    pub points: Vec<(f64, f64)>,
    pub argmin_index: usize,
}

impl VelocitySweep {
    pub fn argmin_velocity(&self) -> f64 {
        self.points[self.argmin_index].0
    }
}

/// Level-flight power over a speed grid with drag on the full airspeed.
/// Ties go to the lowest speed.
pub fn velocity_sweep(
    uav: &UavParams,
    ris_area: f64,
    drag_coefficient: f64,
    v_grid: &[f64],
) -> Result<VelocitySweep, EnergyError> {
    if v_grid.is_empty() {
        return Err(EnergyError::EmptyGrid);
    }
    let points: Vec<(f64, f64)> = v_grid
        .iter()
        .map(|&v| {
            let p = propulsion_power(uav, v, 0.0).total + ris_drag_power(ris_area, uav.rho, drag_coefficient, v);
            (v, p)
        })
        .collect();
    let mut argmin_index = 0;
    for (i, &(v, p)) in points.iter().enumerate() {
        let (best_v, best_p) = points[argmin_index];
        if p < best_p || (p == best_p && v < best_v) {
            argmin_index = i;
        }
    }
    Ok(VelocitySweep { points, argmin_index })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    fn panel() -> RisAeroParams {
        RisAeroParams {
            wavelength: 0.06,
            ..Default::default()
        }
    }

    #[test]
    fn hover_components() {
        let p = propulsion_power(&UavParams::default(), 0.0, 0.0);
        assert!(close(p.blade, 79.86, 1e-3), "{}", p.blade);
        assert!(close(p.induced, 101.43, 1e-3), "{}", p.induced);
        assert_eq!(p.parasite, 0.0);
        assert_eq!(p.climb, 0.0);
    }

    #[test]
    fn forward_flight_components() {
        let p = propulsion_power(&UavParams::default(), 10.0, 0.0);
        assert!(close(p.blade, 81.52, 1e-3), "{}", p.blade);
        assert!(close(p.induced, 16.04, 1e-3), "{}", p.induced);
        assert!(close(p.parasite, 9.24, 1e-3), "{}", p.parasite);
    }

    #[test]
    fn climb_power() {
        let p = propulsion_power(&UavParams::default(), 0.0, 1.0);
        assert!((p.climb - 25.0).abs() < 1e-12);
        let d = propulsion_power(&UavParams::default(), 0.0, -1.0);
        assert_eq!(d.climb, 0.0);
        let signed = UavParams {
            climb_model: ClimbModel::Signed,
            ..Default::default()
        };
        assert!((propulsion_power(&signed, 0.0, -1.0).climb + 25.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_theory_hover() {
        let mt = UavParams {
            induced_model: InducedModel::MomentumTheory,
            ..Default::default()
        };
        assert!(close(propulsion_power(&mt, 0.0, 0.0).induced, 112.60, 1e-3));
    }

    #[test]
    fn panel_area() {
        assert!((ris_area(4, 0.06, 2.0) - 0.0081).abs() < 1e-15);
        assert_eq!(ris_area(1, 0.06, 2.0), 0.0);
        assert!((ris_area(4, 0.06, 4.0) - 0.0081 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn drag_power() {
        assert!(close(ris_drag_power(0.0081, 1.225, 2.1, 10.0), 10.42, 1e-3));
        assert_eq!(ris_drag_power(0.0081, 1.225, 2.1, 0.0), 0.0);
        let a = ris_drag_power(0.0081, 1.225, 2.1, 3.0);
        let b = ris_drag_power(0.0081, 1.225, 2.1, 6.0);
        assert!((b / a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn totals() {
        let uav = UavParams::default();
        let hover = total_power(&uav, &panel(), [0.0; 3], [1.0, 0.0, 0.0]);
        assert!(close(hover.total, 181.29, 1e-3), "{}", hover.total);
        let fwd = total_power(&uav, &panel(), [10.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(close(fwd.total, 117.22, 1e-3), "{}", fwd.total);
        assert!(close(fwd.ris_drag, 10.42, 1e-3));
        let side = total_power(&uav, &panel(), [0.0, 10.0, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(side.ris_drag, 0.0);
        assert!((fwd.total - fwd.component_sum()).abs() <= 1e-9 * fwd.total);
    }

    #[test]
    fn efficiency_values() {
        assert_eq!(efficiency(1e6, 100.0).unwrap(), 1e4);
        assert_eq!(efficiency(0.0, 100.0).unwrap(), 0.0);
        assert_eq!(efficiency(1e6, 200.0).unwrap(), 0.5e4);
        assert!(efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn component_monotonicity() {
        let uav = UavParams::default();
        let mut prev = propulsion_power(&uav, 0.1, 0.0);
        for i in 2..300 {
            let p = propulsion_power(&uav, i as f64 * 0.1, 0.0);
            assert!(p.blade > prev.blade);
            assert!(p.parasite > prev.parasite);
            assert!(p.induced < prev.induced);
            prev = p;
        }
    }

    #[test]
    fn drag_grows_quadratically_in_row_length() {
        let big = ris_area(201, 0.06, 2.0);
        let bigger = ris_area(401, 0.06, 2.0);
        assert!((bigger / big - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_edge_cases() {
        let uav = UavParams::default();
        assert_eq!(velocity_sweep(&uav, 0.0, 2.1, &[]), Err(EnergyError::EmptyGrid));
        let one = velocity_sweep(&uav, 0.0, 2.1, &[7.0]).unwrap();
        assert_eq!(one.argmin_velocity(), 7.0);
        // equal totals: lower speed wins
        let tie = velocity_sweep(&uav, 0.0, 2.1, &[3.0, 3.0]).unwrap();
        assert_eq!(tie.argmin_index, 0);
    }
}
