//! Experiment configuration: every simulator, agent and sweep knob in one
//! TOML document. Missing keys take their defaults; unknown keys are errors.

use std::path::{Path, PathBuf};

use aerostar_agents::{AgentConfig, AgentKind};
use aerostar_core::energy::UavParams;
use aerostar_core::environment::{DeploymentConfig, RadioConfig, SurfaceConfig};
use aerostar_core::fairness::{FairnessKind, RewardWeights};
use aerostar_core::scenario::WorldConfig;
use aerostar_core::{Deployment, EnvConfig, RisKind};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const OUTPUT_ENV: &str = "AEROSTAR_OUT";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub radio: RadioConfig,
    pub uav: UavParams,
    pub surface: SurfaceConfig,
    pub reward: RewardWeights,
    pub deployment: DeploymentConfig,
    pub agent: AgentConfig,
    pub experiment: RunSection,
    pub velocity_sweep: VelocitySweepConfig,
    pub elements_sweep: ElementsSweepConfig,
    pub fairness_sweep: FairnessSweepConfig,
    pub ablation: AblationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub name: String,
    pub agent: AgentKind,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Save an agent checkpoint every this many episodes (0: only at the end).
    pub checkpoint_every: usize,
    /// Seeds trained concurrently.
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: "aerostar".into(),
            agent: AgentKind::Daddpg,
            episodes: 3000,
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
            checkpoint_every: 0,
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VelocitySweepConfig {
    /// Panel areas, m².
    pub areas: Vec<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub v_step: f64,
}

impl Default for VelocitySweepConfig {
    fn default() -> Self {
        Self {
            areas: vec![0.0, 0.0081, 0.25, 1.0],
            v_min: 0.0,
            v_max: 30.0,
            v_step: 0.5,
        }
    }
}

impl VelocitySweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        if !(self.v_step > 0.0) || self.v_max < self.v_min {
            return Vec::new();
        }
        let n = ((self.v_max - self.v_min) / self.v_step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.v_min + i as f64 * self.v_step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElementsSweepConfig {
    pub elements: Vec<usize>,
    pub v_max: Vec<f64>,
    pub episodes: usize,
    pub seed: u64,
    /// Replaces the radio noise for the sweep.
    pub noise_power_dbm: Option<f64>,
    /// Replaces the radio direct-link blockage for the sweep.
    pub direct_blockage_db: Option<f64>,
}

impl Default for ElementsSweepConfig {
    fn default() -> Self {
        Self {
            elements: vec![4, 16, 64, 256],
            v_max: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            episodes: 4,
            seed: 0,
            noise_power_dbm: Some(-170.0),
            direct_blockage_db: Some(60.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FairnessSweepConfig {
    pub cv: Vec<f64>,
    pub users: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for FairnessSweepConfig {
    fn default() -> Self {
        Self {
            cv: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.25, 1.5],
            users: vec![2, 4, 8],
            samples: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub deployments: Vec<Deployment>,
    pub surfaces: Vec<RisKind>,
    pub rewards: Vec<FairnessKind>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            deployments: vec![
                Deployment::Traj3d,
                Deployment::Traj2d,
                Deployment::AltitudeOnly,
                Deployment::Stationary,
            ],
            surfaces: vec![
                RisKind::StarCoupled,
                RisKind::StarIndependent,
                RisKind::DualTr,
                RisKind::ReflectOnly,
            ],
            rewards: vec![FairnessKind::Hfi, FairnessKind::Jfi, FairnessKind::None],
        }
    }
}

/// Values from the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub agent: Option<AgentKind>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Apply CLI values, then fall back to the output-root environment
    /// variable when no directory was given on the command line.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.experiment.seeds = vec![s];
        }
        if let Some(e) = o.episodes {
            self.experiment.episodes = e;
        }
        if let Some(a) = o.agent {
            self.experiment.agent = a;
        }
        match &o.output_dir {
            Some(d) => self.experiment.output_dir = d.clone(),
            None => {
                if let Ok(d) = std::env::var(OUTPUT_ENV) {
                    if !d.is_empty() {
                        self.experiment.output_dir = PathBuf::from(d);
                    }
                }
            }
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            world: self.world.clone(),
            radio: self.radio.clone(),
            uav: self.uav.clone(),
            surface: self.surface.clone(),
            reward: self.reward,
            deployment: self.deployment.clone(),
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.experiment.output_dir.join(&self.experiment.name)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.world.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.agent.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.env_config()
            .channel_params()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.experiment.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.experiment.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.experiment.name.is_empty() || self.experiment.name.contains(['/', '\\']) {
            return bad(format!("bad run name {:?}", self.experiment.name));
        }
        if self.velocity_sweep.grid().is_empty() || self.velocity_sweep.areas.is_empty() {
            return bad("velocity sweep grid is empty".into());
        }
        if self.velocity_sweep.areas.iter().any(|a| !(*a >= 0.0)) {
            return bad("velocity sweep areas must be non-negative".into());
        }
        for &n in &self.elements_sweep.elements {
            let r = (n as f64).sqrt().round() as usize;
            if n == 0 || r * r != n {
                return bad(format!("element count {n} is not a positive perfect square"));
            }
        }
        if self.elements_sweep.v_max.iter().any(|v| !(*v >= 0.0)) {
            return bad("elements sweep speeds must be non-negative".into());
        }
        if self.elements_sweep.episodes == 0 {
            return bad("elements sweep needs at least one episode".into());
        }
        if self.fairness_sweep.cv.iter().any(|c| !(*c > 0.0)) {
            return bad("fairness sweep CVs must be positive".into());
        }
        if self.fairness_sweep.users.iter().any(|&j| j < 2) || self.fairness_sweep.samples == 0 {
            return bad("fairness sweep needs at least two users and one sample".into());
        }
        Ok(())
    }
}

/// Defaults for every section, as editable TOML.
pub fn default_toml() -> String {
    ExperimentConfig::default()
        .to_toml()
        .expect("defaults serialize")
}
