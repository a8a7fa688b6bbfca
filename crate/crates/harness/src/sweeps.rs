//! Parameter sweeps: flight power against speed and panel area, efficiency
//! against element count under a fixed heuristic policy, fairness indices
//! against rate dispersion, and training ablations.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use aerostar_core::energy::velocity_sweep;
use aerostar_core::environment::matched_filter_raw;
use aerostar_core::fairness::{harmonic_fairness_index, jain_index, FairnessKind};
use aerostar_core::link_budget::effective_channel;
use aerostar_core::star_surface::{surface_response, wrap_phase, TrcConfig};
use aerostar_core::{CouplingSign, Deployment, Environment, HybridAction, RisKind, SimRng};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::metrics::write_csv;
use crate::runner::{run_training_in, Progress, RunSummary};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityRow {
    pub area_m2: f64,
    pub velocity_mps: f64,
    pub power_w: f64,
    pub is_argmin: bool,
}

pub fn velocity_area_sweep(cfg: &ExperimentConfig) -> Result<Vec<VelocityRow>, HarnessError> {
    let grid = cfg.velocity_sweep.grid();
    let mut rows = Vec::with_capacity(grid.len() * cfg.velocity_sweep.areas.len());
    for &area in &cfg.velocity_sweep.areas {
        let sweep = velocity_sweep(&cfg.uav, area, cfg.surface.drag_coefficient, &grid)?;
        rows.extend(sweep.points.iter().enumerate().map(|(i, &(v, p))| VelocityRow {
            area_m2: area,
            velocity_mps: v,
            power_w: p,
            is_argmin: i == sweep.argmin_index,
        }));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementsRow {
    pub elements: usize,
    pub v_max: f64,
    pub mean_efficiency_bpj: f64,
    pub mean_sum_rate_bps: f64,
    pub mean_power_w: f64,
    pub mean_drag_w: f64,
}

/// Heading toward the horizontal user centroid at full speed, random
/// feasible surface settings, and a matched-filter precoder on the
/// resulting effective channels.
pub fn heuristic_action(env: &Environment, rng: &mut SimRng) -> Result<HybridAction, HarnessError> {
    let layout = *env.layout();
    let world = env.world();
    let n = layout.elements;
    let centroid = world.user_centroid().unwrap_or(world.uav_pose);
    let dx = centroid[0] - world.uav_pose[0];
    let dy = centroid[1] - world.uav_pose[1];
    let azim = dy.atan2(dx).rem_euclid(TAU);

    let theta_raw: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let beta_raw: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let signs: Vec<f64> = (0..n).map(|_| if rng.coin(0.5) { 1.0 } else { -1.0 }).collect();
    let theta_t_raw: Option<Vec<f64>> = layout
        .free_transmit_phase
        .then(|| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect());

    let kind = env.config().surface.kind;
    let trc_cfg = TrcConfig {
        theta_r: theta_raw.iter().map(|v| wrap_phase(v * PI)).collect(),
        beta_t: beta_raw.iter().map(|v| (v + 1.0) / 2.0).collect(),
        sign: if layout.uses_discrete {
            signs.iter().map(|&s| CouplingSign::from_real(s)).collect()
        } else {
            vec![CouplingSign::Plus; n]
        },
    };
    let theta_t: Option<Vec<f64>> = theta_t_raw
        .as_ref()
        .map(|t| t.iter().map(|v| wrap_phase(v * PI)).collect());
    let trc = surface_response(kind, &trc_cfg, theta_t.as_deref())?;
    let ch = env.channels();
    let effective = ch
        .sides
        .iter()
        .enumerate()
        .map(|(j, side)| effective_channel(&ch.bs_user[j], &ch.ris_user[j], trc.for_side(*side), &ch.bs_ris))
        .collect::<Result<Vec<_>, _>>()?;

    let mut continuous = vec![1.0, 0.0, azim / PI - 1.0];
    continuous.extend(theta_raw);
    continuous.extend(beta_raw);
    continuous.extend(matched_filter_raw(&effective));
    if let Some(t) = theta_t_raw {
        continuous.extend(t);
    }
    Ok(HybridAction {
        continuous,
        discrete: if layout.uses_discrete { signs } else { Vec::new() },
    })
}

/// Mean efficiency of the heuristic policy for every (N, V_max) pair.
pub fn elements_sweep(cfg: &ExperimentConfig) -> Result<Vec<ElementsRow>, HarnessError> {
    let sc = &cfg.elements_sweep;
    let mut rows = Vec::new();
    for &n in &sc.elements {
        for &v in &sc.v_max {
            let mut env_cfg = cfg.env_config();
            env_cfg.radio.ris_elements = n;
            env_cfg.world.v_max = v;
            if let Some(p) = sc.noise_power_dbm {
                env_cfg.radio.noise_power_dbm = Some(p);
            }
            if let Some(b) = sc.direct_blockage_db {
                env_cfg.radio.direct_blockage_db = b;
            }
            let mut env = Environment::new(env_cfg, sc.seed)?;
            let mut rng = SimRng::substream(sc.seed, "heuristic");
            let (mut eff, mut rate, mut power, mut drag, mut count) = (0.0, 0.0, 0.0, 0.0, 0usize);
            for _ in 0..sc.episodes {
                env.reset()?;
                loop {
                    let a = heuristic_action(&env, &mut rng)?;
                    let out = env.step(&a)?;
                    eff += out.info.efficiency;
                    rate += out.info.sum_rate;
                    power += out.info.power.total;
                    drag += out.info.power.ris_drag;
                    count += 1;
                    if out.terminal {
                        break;
                    }
                }
            }
            let c = count.max(1) as f64;
            rows.push(ElementsRow {
                elements: n,
                v_max: v,
                mean_efficiency_bpj: eff / c,
                mean_sum_rate_bps: rate / c,
                mean_power_w: power / c,
                mean_drag_w: drag / c,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessRow {
    pub cv: f64,
    pub users: usize,
    pub mean_hfi: f64,
    pub mean_jfi: f64,
    pub samples: usize,
}

/// Lognormal rate vectors whose population coefficient of variation is `cv`.
pub fn fairness_sweep(cfg: &ExperimentConfig) -> Result<Vec<FairnessRow>, HarnessError> {
    let sc = &cfg.fairness_sweep;
    let mut rows = Vec::with_capacity(sc.cv.len() * sc.users.len());
    for &j in &sc.users {
        let mut rng = SimRng::substream(sc.seed, &format!("fairness-{j}"));
        for &cv in &sc.cv {
            let sigma = (1.0 + cv * cv).ln().sqrt();
            let (mut h, mut jf) = (0.0, 0.0);
            let mut rates = vec![0.0; j];
            for _ in 0..sc.samples {
                for r in rates.iter_mut() {
                    *r = (sigma * rng.standard_normal()).exp();
                }
                h += harmonic_fairness_index(&rates)?;
                jf += jain_index(&rates)?;
            }
            rows.push(FairnessRow {
                cv,
                users: j,
                mean_hfi: h / sc.samples as f64,
                mean_jfi: jf / sc.samples as f64,
                samples: sc.samples,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub group: &'static str,
    pub name: String,
    pub config: ExperimentConfig,
}

/// One variant per listed deployment, surface and reward, each changing a
/// single setting of the base config.
pub fn ablation_variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    let mut out = Vec::new();
    for &d in &cfg.ablation.deployments {
        let mut c = cfg.clone();
        c.deployment.mode = d;
        out.push(Variant {
            group: "deployment",
            name: deployment_name(d).into(),
            config: c,
        });
    }
    for &k in &cfg.ablation.surfaces {
        let mut c = cfg.clone();
        c.surface.kind = k;
        out.push(Variant {
            group: "surface",
            name: surface_name(k).into(),
            config: c,
        });
    }
    for &r in &cfg.ablation.rewards {
        let mut c = cfg.clone();
        c.reward.fairness = r;
        out.push(Variant {
            group: "reward",
            name: reward_name(r).into(),
            config: c,
        });
    }
    out
}

pub fn deployment_name(d: Deployment) -> &'static str {
    match d {
        Deployment::Traj3d => "traj3d",
        Deployment::Traj2d => "traj2d",
        Deployment::AltitudeOnly => "altitude_only",
        Deployment::Stationary => "stationary",
    }
}

pub fn surface_name(k: RisKind) -> &'static str {
    match k {
        RisKind::StarCoupled => "star_coupled",
        RisKind::StarIndependent => "star_independent",
        RisKind::DualTr => "dual_tr",
        RisKind::ReflectOnly => "reflect_only",
    }
}

pub fn reward_name(r: FairnessKind) -> &'static str {
    match r {
        FairnessKind::Hfi => "hfi",
        FairnessKind::Jfi => "jfi",
        FairnessKind::None => "none",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub group: String,
    pub variant: String,
    pub seed: u64,
    pub mean_return_last50: f64,
    pub mean_efficiency_last50: f64,
    pub mean_power_last50: f64,
    pub mean_hfi_last50: f64,
    pub qos_violation_rate_last50: f64,
}

/// Train every variant with the base seeds under `dir/<group>_<variant>`.
pub fn run_ablation(
    cfg: &ExperimentConfig,
    dir: &Path,
    progress: Progress,
) -> Result<(Vec<AblationRow>, Vec<RunSummary>), HarnessError> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for v in ablation_variants(cfg) {
        v.config.validate()?;
        let sub = dir.join(format!("{}_{}", v.group, v.name));
        let summary = run_training_in(&v.config, &sub, progress)?;
        rows.extend(summary.seeds.iter().map(|s| AblationRow {
            group: v.group.into(),
            variant: v.name.clone(),
            seed: s.seed,
            mean_return_last50: s.mean_return_last50,
            mean_efficiency_last50: s.mean_efficiency_last50,
            mean_power_last50: s.mean_power_last50,
            mean_hfi_last50: s.mean_hfi_last50,
            qos_violation_rate_last50: s.qos_violation_rate_last50,
        }));
        summaries.push(summary);
    }
    write_csv(&dir.join("ablation.csv"), &rows)?;
    Ok((rows, summaries))
}
