//! Quick invariant checks runnable from the command line.

use std::f64::consts::FRAC_PI_2;

use aerostar_core::channel::{path_loss_los_db, path_loss_nlos_db};
use aerostar_core::energy::{propulsion_power, ris_area, ris_drag_power, UavParams};
use aerostar_core::environment::{decode_continuous, ActionLayout};
use aerostar_core::fairness::{harmonic_fairness_index, jain_index};
use aerostar_core::star_surface::{surface_response, wrap_phase, TrcConfig};
use aerostar_core::{CouplingSign, EnvConfig, Environment, HybridAction, RisKind, SimRng};

use crate::config::ExperimentConfig;
use crate::sweeps::velocity_area_sweep;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn run_all() -> Vec<Check> {
    vec![
        hover(),
        path_loss(),
        drag(),
        velocity_shape(),
        fairness_values(),
        coupling(),
        determinism(),
        config_round_trip(),
    ]
}

fn hover() -> Check {
    let p = propulsion_power(&UavParams::default(), 0.0, 0.0);
    let ok = rel(p.blade, 79.86) < 1e-3 && rel(p.induced, 101.43) < 1e-3;
    check("hover power", ok, format!("blade {:.3} W, induced {:.3} W", p.blade, p.induced))
}

fn path_loss() -> Check {
    let los = path_loss_los_db(5.0, 1000.0).unwrap_or(f64::NAN);
    let near = path_loss_nlos_db(5.0, 1.0, 1.5).unwrap_or(f64::NAN);
    let near_los = path_loss_los_db(5.0, 1.0).unwrap_or(f64::NAN);
    let ok = (los - 107.979_400_086_720_37).abs() < 1e-6 && near == near_los;
    check("path loss", ok, format!("LoS at 1 km {los:.6} dB"))
}

fn drag() -> Check {
    let area = ris_area(4, 0.06, 2.0);
    let p = ris_drag_power(area, 1.225, 2.1, 10.0);
    let ok = rel(area, 0.0081) < 1e-9 && rel(p, 10.418_625) < 1e-3;
    check("panel drag", ok, format!("area {area:.5} m², {p:.3} W at 10 m/s"))
}

fn velocity_shape() -> Check {
    let cfg = ExperimentConfig::default();
    let rows = match velocity_area_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => return check("velocity sweep", false, e.to_string()),
    };
    let argmins: Vec<f64> = rows.iter().filter(|r| r.is_argmin).map(|r| r.velocity_mps).collect();
    let monotone = argmins.windows(2).all(|w| w[1] <= w[0]);
    let zero: Vec<f64> = rows.iter().filter(|r| r.area_m2 == 0.0).map(|r| r.power_w).collect();
    let min = zero.iter().cloned().fold(f64::INFINITY, f64::min);
    let interior = !zero.is_empty() && min < zero[0] && min < zero[zero.len() - 1];
    check(
        "velocity sweep",
        monotone && interior,
        format!("argmin speeds {argmins:?}"),
    )
}

fn fairness_values() -> Check {
    let h = harmonic_fairness_index(&[1.0, 3.0]).unwrap_or(f64::NAN);
    let j = jain_index(&[1.0, 3.0]).unwrap_or(f64::NAN);
    let mut rng = SimRng::new(11);
    let mut bounded = true;
    for _ in 0..1000 {
        let v: Vec<f64> = (0..4).map(|_| rng.uniform(0.01, 10.0)).collect();
        let hv = harmonic_fairness_index(&v).unwrap_or(f64::NAN);
        bounded &= hv <= 1.0 + 1e-12 && hv > 0.0;
    }
    check(
        "fairness indices",
        h == 0.75 && (j - 0.8).abs() < 1e-15 && bounded,
        format!("HFI {h}, JFI {j}"),
    )
}

fn coupling() -> Check {
    let layout = ActionLayout::new(4, 16, 4, RisKind::StarCoupled);
    let mut rng = SimRng::new(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let raw: Vec<f64> = (0..layout.continuous_len()).map(|_| rng.uniform(-1.5, 1.5)).collect();
        let Ok(dec) = decode_continuous(&raw, &layout, 10.0) else {
            return check("coupling", false, "decode failed".into());
        };
        let sign: Vec<CouplingSign> = (0..16).map(|_| CouplingSign::from_real(rng.uniform(-1.0, 1.0))).collect();
        let cfg = TrcConfig {
            theta_r: dec.theta_r.clone(),
            beta_t: dec.beta_t.clone(),
            sign,
        };
        let Ok(trc) = surface_response(RisKind::StarCoupled, &cfg, None) else {
            return check("coupling", false, "surface response failed".into());
        };
        for (r, t) in trc.reflect.entries().iter().zip(trc.transmit.entries()) {
            worst = worst.max((r.norm_sqr() + t.norm_sqr() - 1.0).abs());
            if r.norm() > 1e-6 && t.norm() > 1e-6 {
                let d = wrap_phase(t.arg() - r.arg()).abs();
                worst = worst.max((d - FRAC_PI_2).abs());
            }
        }
    }
    check("coupling", worst < 1e-9, format!("worst deviation {worst:.2e}"))
}

fn rollout(seed: u64) -> Vec<f64> {
    let mut cfg = EnvConfig::default();
    cfg.radio.bs_antennas = 2;
    cfg.radio.ris_elements = 4;
    cfg.world.reflect_users = 1;
    cfg.world.transmit_users = 1;
    let Ok(mut env) = Environment::new(cfg, seed) else {
        return Vec::new();
    };
    let layout = *env.layout();
    let mut rng = SimRng::new(seed);
    let mut rewards = Vec::new();
    while !env.is_done() {
        let a = HybridAction {
            continuous: (0..layout.continuous_len()).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            discrete: (0..layout.discrete_len()).map(|_| if rng.coin(0.5) { 1.0 } else { -1.0 }).collect(),
        };
        match env.step(&a) {
            Ok(o) => rewards.push(o.reward),
            Err(_) => return Vec::new(),
        }
    }
    rewards
}

fn determinism() -> Check {
    let a = rollout(3);
    let b = rollout(3);
    check(
        "determinism",
        !a.is_empty() && a == b,
        format!("{} slots compared", a.len()),
    )
}

fn config_round_trip() -> Check {
    let cfg = ExperimentConfig::default();
    let ok = cfg
        .to_toml()
        .and_then(|t| ExperimentConfig::from_toml(&t))
        .map(|c| c == cfg)
        .unwrap_or(false);
    check("config round trip", ok, String::new())
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
