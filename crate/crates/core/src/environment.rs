//! The MDP: state encoding, hybrid action decoding and the slot transition.
//!
//! Within a slot the agent's surface and precoder settings act on the
//! channels it observed; its motion command then moves the UAV, users walk,
//! and fresh channels are drawn at the new geometry for the next state.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, build_channel_set, ChannelError, ChannelParams, ChannelSet};
use crate::energy::{self, PowerBreakdown, RisAeroParams, UavParams, VperpMode};
use crate::fairness::{self, FairnessError, FairnessReport, RewardWeights};
use crate::link_budget::{
    self, dbm_to_watts, noise_power_from_density, LinkError, PowerMode,
};
use crate::numerics::{SimRng, Vec3};
use crate::scenario::{self, ScenarioError, WorldConfig, WorldState};
use crate::star_surface::{
    surface_response, validate_coupling, wrap_phase, CouplingSign, RisKind, StarError, TrcConfig,
    TrcMatrices,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Surface(#[from] StarError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error("action block {block} has length {got}, expected {expected}")]
    ActionLength {
        block: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("episode already terminated; call reset")]
    EpisodeOver,
    #[error("constraint violated after decoding: {0}")]
    ConstraintViolation(String),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// How the UAV is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deployment {
    Traj3d,
    /// Elevation forced to zero.
    Traj2d,
    /// Horizontal motion removed.
    AltitudeOnly,
    /// Speed forced to zero.
    Stationary,
}

/// Power charged to a stationary surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryPower {
    Hover,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub carrier_freq_ghz: f64,
    pub rician_kappa: f64,
    pub bs_antennas: usize,
    pub ris_elements: usize,
    pub spacing_divisor: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    /// Overrides the integrated noise density when set.
    pub noise_power_dbm: Option<f64>,
    pub p_max_dbm: f64,
    pub power_mode: PowerMode,
    pub r_qos_bps: f64,
    /// Extra attenuation on every BS → user link, dB.
    pub direct_blockage_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 5.0,
            rician_kappa: 5.0,
            bs_antennas: 4,
            ris_elements: 16,
            spacing_divisor: 2.0,
            bandwidth_hz: 1e6,
            noise_density_dbm_hz: -95.0,
            noise_power_dbm: None,
            p_max_dbm: 29.0,
            power_mode: PowerMode::Total,
            r_qos_bps: 200e3,
            direct_blockage_db: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn noise_power_w(&self) -> f64 {
        match self.noise_power_dbm {
            Some(dbm) => dbm_to_watts(dbm),
            None => noise_power_from_density(self.noise_density_dbm_hz, self.bandwidth_hz),
        }
    }

    pub fn p_max_w(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    pub kind: RisKind,
    pub drag_coefficient: f64,
    pub v_perp_mode: VperpMode,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            kind: RisKind::StarCoupled,
            drag_coefficient: 2.1,
            v_perp_mode: VperpMode::NormalComponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeploymentConfig {
    pub mode: Deployment,
    pub stationary_power: StationaryPower,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            mode: Deployment::Traj3d,
            stationary_power: StationaryPower::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub world: WorldConfig,
    pub radio: RadioConfig,
    pub uav: UavParams,
    pub surface: SurfaceConfig,
    pub reward: RewardWeights,
    pub deployment: DeploymentConfig,
}

impl EnvConfig {
    pub fn channel_params(&self) -> Result<ChannelParams, ChannelError> {
        ChannelParams::new(
            self.radio.carrier_freq_ghz,
            self.radio.rician_kappa,
            self.radio.bs_antennas,
            self.radio.ris_elements,
            self.radio.spacing_divisor,
        )
    }

    pub fn ris_aero(&self) -> Result<RisAeroParams, ChannelError> {
        let cp = self.channel_params()?;
        Ok(RisAeroParams {
            row_len: cp.ris_row_len,
            wavelength: cp.wavelength,
            spacing_divisor: self.radio.spacing_divisor,
            drag_coefficient: self.surface.drag_coefficient,
            v_perp_mode: self.surface.v_perp_mode,
        })
    }

    pub fn layout(&self) -> ActionLayout {
        ActionLayout::new(
            self.radio.bs_antennas,
            self.radio.ris_elements,
            self.world.user_count(),
            self.surface.kind,
        )
    }

    pub fn state_dim(&self) -> usize {
        state_dim(
            self.radio.bs_antennas,
            self.radio.ris_elements,
            self.world.user_count(),
        )
    }
}

/// `3 + 2MN + 2MJ + 2NJ`.
pub fn state_dim(m: usize, n: usize, j: usize) -> usize {
    3 + 2 * m * n + 2 * m * j + 2 * n * j
}

/// Sizes and offsets of the two action blocks.
///
/// Continuous block: `[speed, elevation, azimuth, θ_R × N, β_T × N,
/// beamformer × 2MJ]`, followed by `θ_T × N` only for the independent-phase
/// surface. Discrete block: one coupling sign per element (empty for the
/// independent-phase surface).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLayout {
    pub antennas: usize,
    pub elements: usize,
    pub users: usize,
    pub free_transmit_phase: bool,
    pub uses_discrete: bool,
}

impl ActionLayout {
    pub fn new(antennas: usize, elements: usize, users: usize, kind: RisKind) -> Self {
        Self {
            antennas,
            elements,
            users,
            free_transmit_phase: kind.needs_free_transmit_phase(),
            uses_discrete: kind.uses_discrete_sign(),
        }
    }

    pub fn continuous_len(&self) -> usize {
        3 + 2 * self.elements
            + 2 * self.antennas * self.users
            + if self.free_transmit_phase { self.elements } else { 0 }
    }

    pub fn discrete_len(&self) -> usize {
        if self.uses_discrete {
            self.elements
        } else {
            0
        }
    }

    pub fn total_len(&self) -> usize {
        self.continuous_len() + self.discrete_len()
    }

    fn theta_r_range(&self) -> std::ops::Range<usize> {
        3..3 + self.elements
    }

    fn beta_range(&self) -> std::ops::Range<usize> {
        3 + self.elements..3 + 2 * self.elements
    }

    fn beamformer_range(&self) -> std::ops::Range<usize> {
        let start = 3 + 2 * self.elements;
        start..start + 2 * self.antennas * self.users
    }

    fn theta_t_range(&self) -> std::ops::Range<usize> {
        let start = self.beamformer_range().end;
        start..start + self.elements
    }
}

/// Raw agent output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridAction {
    /// Values in `[−1, 1]`.
    pub continuous: Vec<f64>,
    /// Coupling signs as `±1`.
    pub discrete: Vec<f64>,
}

impl HybridAction {
    /// Continuous and discrete blocks concatenated, as fed to a critic.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = self.continuous.clone();
        v.extend_from_slice(&self.discrete);
        v
    }
}

/// Continuous block mapped to physical quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedContinuous {
    pub speed: f64,
    pub elev: f64,
    pub azim: f64,
    pub theta_r: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub beamformer_raw: Vec<f64>,
    pub theta_t_free: Option<Vec<f64>>,
}

/// Map raw `[−1, 1]` values to speed, heading, surface phases/amplitudes and
/// the raw precoder. Inputs are clamped first.
pub fn decode_continuous(
    raw: &[f64],
    layout: &ActionLayout,
    v_max: f64,
) -> Result<DecodedContinuous, EnvError> {
    if raw.len() != layout.continuous_len() {
        return Err(EnvError::ActionLength {
            block: "continuous",
            got: raw.len(),
            expected: layout.continuous_len(),
        });
    }
    let x: Vec<f64> = raw
        .iter()
        .map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) })
        .collect();
    Ok(DecodedContinuous {
        speed: (x[0] + 1.0) / 2.0 * v_max,
        elev: x[1] * FRAC_PI_2,
        azim: (x[2] + 1.0) * PI,
        theta_r: x[layout.theta_r_range()].iter().map(|v| wrap_phase(v * PI)).collect(),
        beta_t: x[layout.beta_range()].iter().map(|v| (v + 1.0) / 2.0).collect(),
        beamformer_raw: x[layout.beamformer_range()].to_vec(),
        theta_t_free: layout
            .free_transmit_phase
            .then(|| x[layout.theta_t_range()].iter().map(|v| wrap_phase(v * PI)).collect()),
    })
}

/// Threshold logits into coupling signs with ε-greedy exploration.
/// A logit of exactly zero maps to `Minus`.
pub fn decode_discrete(logits: &[f64], epsilon: f64, rng: &mut SimRng) -> Vec<CouplingSign> {
    logits
        .iter()
        .map(|&l| {
            if epsilon > 0.0 && rng.coin(epsilon) {
                if rng.coin(0.5) {
                    CouplingSign::Plus
                } else {
                    CouplingSign::Minus
                }
            } else {
                CouplingSign::from_real(l)
            }
        })
        .collect()
}

/// Users whose rate falls below `r_qos`.
pub fn qos_violations(rates: &[f64], r_qos: f64) -> usize {
    rates.iter().filter(|&&r| r < r_qos).count()
}

/// Precoder raws steering an equal-norm matched filter at each user's
/// direct channel: column `j` is `conj(h_j) / ‖h_j‖`.
pub fn matched_filter_raw(directs: &[Vec<Complex64>]) -> Vec<f64> {
    let mut raw = Vec::new();
    for h in directs {
        let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in h {
            let w = if norm > 0.0 { z.conj() / norm } else { Complex64::new(0.0, 0.0) };
            raw.push(w.re);
            raw.push(w.im);
        }
    }
    raw
}

/// Recover the BS → user channels (scaled) from an encoded state.
pub fn direct_channels_from_state(state: &[f64], m: usize, n: usize, j: usize) -> Vec<Vec<Complex64>> {
    let start = 3 + 2 * m * n;
    (0..j)
        .map(|u| {
            (0..m)
                .map(|k| {
                    let i = start + 2 * (u * m + k);
                    Complex64::new(state[i], state[i + 1])
                })
                .collect()
        })
        .collect()
}

/// Per-slot diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub rates: Vec<f64>,
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
    pub power: PowerBreakdown,
    pub fairness: FairnessReport,
    /// bit/J; stationary runs with no charged power divide by hover power.
    pub efficiency: f64,
    pub qos_violations: usize,
    pub uav_pose: Vec3,
    pub trc: TrcMatrices,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    pub info: StepInfo,
}

/// One simulated Aerial-STAR episode stream.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    channel_params: ChannelParams,
    ris_aero: RisAeroParams,
    layout: ActionLayout,
    noise_power: f64,
    p_max: f64,
    state_scale: f64,
    hover_power: f64,
    world: WorldState,
    channels: ChannelSet,
    channel_rng: SimRng,
    mobility_rng: SimRng,
    done: bool,
}

impl Environment {
    /// Build and reset. Channel fading and user mobility draw from separate
    /// streams derived from `seed`.
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        config.world.validate()?;
        if !(config.radio.bandwidth_hz > 0.0) {
            return Err(EnvError::InvalidConfig("bandwidth must be positive".into()));
        }
        if config.world.user_count() == 0 {
            return Err(EnvError::InvalidConfig("at least one user is required".into()));
        }
        if !(config.radio.direct_blockage_db >= 0.0) {
            return Err(EnvError::InvalidConfig("direct blockage must be non-negative".into()));
        }
        let channel_params = config.channel_params()?;
        let ris_aero = config.ris_aero()?;
        let gain0 = channel::bs_ris_path_gain(
            &channel_params,
            config.world.bs_position,
            config.world.initial_uav_position,
        )?;
        let mut mobility_rng = SimRng::substream(seed, "mobility");
        let mut channel_rng = SimRng::substream(seed, "channel");
        let world = scenario::init_world(&config.world, &mut mobility_rng)?;
        let channels = draw_channels(&world, &channel_params, &config.radio, &mut channel_rng)?;
        Ok(Self {
            layout: config.layout(),
            noise_power: config.radio.noise_power_w(),
            p_max: config.radio.p_max_w(),
            state_scale: 1.0 / gain0.sqrt(),
            hover_power: energy::propulsion_power(&config.uav, 0.0, 0.0).total,
            config,
            channel_params,
            ris_aero,
            world,
            channels,
            channel_rng,
            mobility_rng,
            done: false,
        })
    }

    /// Start a new episode, continuing the random streams.
    pub fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        self.world = scenario::init_world(&self.config.world, &mut self.mobility_rng)?;
        self.channels = draw_channels(&self.world, &self.channel_params, &self.config.radio, &mut self.channel_rng)?;
        self.done = false;
        Ok(self.state())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn layout(&self) -> &ActionLayout {
        &self.layout
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn channel_params(&self) -> &ChannelParams {
        &self.channel_params
    }

    pub fn state_dim(&self) -> usize {
        self.config.state_dim()
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn hover_power(&self) -> f64 {
        self.hover_power
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Encoding of the current observation.
    pub fn state(&self) -> Vec<f64> {
        encode_state(&self.world, &self.channels, &self.config.world, self.state_scale)
    }

    pub fn step(&mut self, action: &HybridAction) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let layout = self.layout;
        if action.discrete.len() != layout.discrete_len() {
            return Err(EnvError::ActionLength {
                block: "discrete",
                got: action.discrete.len(),
                expected: layout.discrete_len(),
            });
        }
        let wc = &self.config.world;
        let mut dec = decode_continuous(&action.continuous, &layout, wc.v_max)?;
        match self.config.deployment.mode {
            Deployment::Traj3d => {}
            Deployment::Traj2d => dec.elev = 0.0,
            Deployment::AltitudeOnly => {
                dec.speed *= dec.elev.sin().abs();
                dec.elev = if dec.elev < 0.0 { -FRAC_PI_2 } else { FRAC_PI_2 };
            }
            Deployment::Stationary => dec.speed = 0.0,
        }

        let sign: Vec<CouplingSign> = if layout.uses_discrete {
            action.discrete.iter().map(|&x| CouplingSign::from_real(x)).collect()
        } else {
            vec![CouplingSign::Plus; layout.elements]
        };
        let trc_cfg = TrcConfig {
            theta_r: dec.theta_r.clone(),
            beta_t: dec.beta_t.clone(),
            sign,
        };
        let kind = self.config.surface.kind;
        let trc = surface_response(kind, &trc_cfg, dec.theta_t_free.as_deref())?;
        let bf = link_budget::project_beamformer(
            &dec.beamformer_raw,
            layout.antennas,
            layout.users,
            self.p_max,
            self.config.radio.power_mode,
        )?;
        self.check_constraints(&dec, &trc, &bf, kind)?;

        let effective = self
            .channels
            .sides
            .iter()
            .enumerate()
            .map(|(j, side)| {
                link_budget::effective_channel(
                    &self.channels.bs_user[j],
                    &self.channels.ris_user[j],
                    trc.for_side(*side),
                    &self.channels.bs_ris,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let report = link_budget::rates(&effective, &bf, self.noise_power, self.config.radio.bandwidth_hz)?;

        let moved = scenario::apply_uav_motion(&self.world, wc, dec.speed, dec.elev, dec.azim);
        let velocity = moved.uav_velocity(wc.slot_duration);
        let power = if self.config.deployment.mode == Deployment::Stationary {
            match self.config.deployment.stationary_power {
                StationaryPower::None => PowerBreakdown::zero(),
                StationaryPower::Hover => energy::propulsion_power(&self.config.uav, 0.0, 0.0),
            }
        } else {
            energy::total_power(&self.config.uav, &self.ris_aero, velocity, moved.panel_normal)
        };
        let mut next = scenario::step_users(&moved, wc, &mut self.mobility_rng);
        next.step = self.world.step + 1;
        self.world = next;
        self.channels = draw_channels(&self.world, &self.channel_params, &self.config.radio, &mut self.channel_rng)?;

        let reward = fairness::reward(&report.rates, power.total, &self.config.reward)?;
        let denom = if power.total > 0.0 { power.total } else { self.hover_power };
        let efficiency = energy::efficiency(report.sum_rate, denom).unwrap_or(0.0);
        let terminal = self.world.step >= wc.episode_steps;
        self.done = terminal;

        Ok(StepOutcome {
            next_state: self.state(),
            reward,
            terminal,
            info: StepInfo {
                fairness: FairnessReport::from_rates(&report.rates),
                qos_violations: qos_violations(&report.rates, self.config.radio.r_qos_bps),
                rates: report.rates,
                sinr: report.sinr,
                sum_rate: report.sum_rate,
                power,
                efficiency,
                uav_pose: self.world.uav_pose,
                trc,
                speed: dec.speed,
            },
        })
    }

    fn check_constraints(
        &self,
        dec: &DecodedContinuous,
        trc: &TrcMatrices,
        bf: &link_budget::Beamformer,
        kind: RisKind,
    ) -> Result<(), EnvError> {
        let fail = |m: &str| Err(EnvError::ConstraintViolation(m.to_string()));
        if dec.speed > self.config.world.v_max + 1e-12 {
            return fail("speed above v_max");
        }
        if dec.theta_r.iter().any(|t| !(*t > -PI && *t <= PI)) {
            return fail("reflect phase outside (-pi, pi]");
        }
        if dec.beta_t.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return fail("amplitude outside [0, 1]");
        }
        if !bf.is_feasible(self.config.radio.power_mode) {
            return fail("beamformer above power budget");
        }
        if kind != RisKind::StarIndependent && !validate_coupling(&trc.reflect, &trc.transmit) {
            return fail("surface coupling");
        }
        Ok(())
    }
}

fn draw_channels(
    world: &WorldState,
    params: &ChannelParams,
    radio: &RadioConfig,
    rng: &mut SimRng,
) -> Result<ChannelSet, ChannelError> {
    let mut set = build_channel_set(world, params, rng)?;
    if radio.direct_blockage_db > 0.0 {
        let a = 10f64.powf(-radio.direct_blockage_db / 20.0);
        set.bs_user.iter_mut().flatten().for_each(|z| *z *= a);
    }
    Ok(set)
}

/// Flatten position and channels into the observation vector.
///
/// Position is normalized to roughly `[−1, 1]` by the area and altitude
/// bounds; channels are multiplied by `channel_scale` and written as
/// interleaved (re, im): BS→surface row-major, then each user's BS link, then
/// each user's surface link, in user-index order.
pub fn encode_state(
    world: &WorldState,
    channels: &ChannelSet,
    config: &WorldConfig,
    channel_scale: f64,
) -> Vec<f64> {
    let m = channels.bs_ris.cols();
    let n = channels.bs_ris.rows();
    let j = channels.user_count();
    let mut s = Vec::with_capacity(state_dim(m, n, j));
    let half = |lo: f64, hi: f64| ((hi - lo) / 2.0).max(1e-9);
    let cx = (config.area_min[0] + config.area_max[0]) / 2.0;
    let cy = (config.area_min[1] + config.area_max[1]) / 2.0;
    let cz = (config.altitude_min + config.altitude_max) / 2.0;
    s.push((world.uav_pose[0] - cx) / half(config.area_min[0], config.area_max[0]));
    s.push((world.uav_pose[1] - cy) / half(config.area_min[1], config.area_max[1]));
    s.push((world.uav_pose[2] - cz) / half(config.altitude_min, config.altitude_max));
    let mut push = |z: &Complex64| {
        s.push(z.re * channel_scale);
        s.push(z.im * channel_scale);
    };
    channels.bs_ris.as_slice().iter().for_each(&mut push);
    channels.bs_user.iter().flatten().for_each(&mut push);
    channels.ris_user.iter().flatten().for_each(&mut push);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EnvConfig {
        let mut c = EnvConfig::default();
        c.radio.bs_antennas = 2;
        c.radio.ris_elements = 4;
        c.world.reflect_users = 1;
        c.world.transmit_users = 1;
        c
    }

    #[test]
    fn state_lengths() {
        assert_eq!(state_dim(4, 16, 4), 291);
        assert_eq!(state_dim(2, 4, 2), 43);
        let env = Environment::new(EnvConfig::default(), 1).unwrap();
        assert_eq!(env.state().len(), 291);
        let env = Environment::new(tiny(), 1).unwrap();
        assert_eq!(env.state().len(), 43);
    }

    #[test]
    fn encoding_is_lossless() {
        let env = Environment::new(tiny(), 2).unwrap();
        let mut ch = env.channels().clone();
        let a = encode_state(env.world(), &ch, &env.config().world, 1.0);
        ch.ris_user[1][2] += Complex64::new(1e-9, 0.0);
        let b = encode_state(env.world(), &ch, &env.config().world, 1.0);
        assert_ne!(a, b);
    }

    #[test]
    fn midpoint_decoding() {
        let layout = ActionLayout::new(2, 4, 2, RisKind::StarCoupled);
        let d = decode_continuous(&vec![0.0; layout.continuous_len()], &layout, 10.0).unwrap();
        assert_eq!(d.speed, 5.0);
        assert_eq!(d.elev, 0.0);
        assert!((d.azim - PI).abs() < 1e-15);
        assert!(d.theta_r.iter().all(|t| *t == 0.0));
        assert!(d.beta_t.iter().all(|b| *b == 0.5));
        assert!(d.theta_t_free.is_none());
    }

    #[test]
    fn boundary_decoding() {
        let layout = ActionLayout::new(2, 4, 2, RisKind::StarCoupled);
        let mut raw = vec![0.0; layout.continuous_len()];
        raw[0] = 1.0;
        raw[3] = -1.0;
        raw[7] = -1.0;
        raw[8] = 7.0;
        let d = decode_continuous(&raw, &layout, 10.0).unwrap();
        assert_eq!(d.speed, 10.0);
        assert_eq!(d.theta_r[0], PI);
        assert_eq!(d.beta_t[0], 0.0);
        assert_eq!(d.beta_t[1], 1.0);
        assert!(decode_continuous(&raw[1..], &layout, 10.0).is_err());
    }

    #[test]
    fn greedy_discrete_decoding() {
        let mut rng = SimRng::new(1);
        let s = decode_discrete(&[0.3, -0.2, 0.0], 0.0, &mut rng);
        assert_eq!(s, vec![CouplingSign::Plus, CouplingSign::Minus, CouplingSign::Minus]);
        assert_eq!(decode_discrete(&[0.3, -0.2, 0.0], 0.0, &mut rng), s);
    }

    #[test]
    fn fully_random_discrete_decoding() {
        let mut rng = SimRng::new(2);
        let logits = vec![5.0; 10_000];
        let plus = decode_discrete(&logits, 1.0, &mut rng)
            .iter()
            .filter(|s| **s == CouplingSign::Plus)
            .count();
        let f = plus as f64 / 10_000.0;
        assert!((f - 0.5).abs() < 0.02, "{f}");
    }

    #[test]
    fn qos_counting() {
        assert_eq!(qos_violations(&[3e5, 4e5, 1e6], 2e5), 0);
        assert_eq!(qos_violations(&[0.0; 4], 2e5), 4);
        assert_eq!(qos_violations(&[0.0; 4], 0.0), 0);
    }

    #[test]
    fn episode_runs_exactly_t_steps() {
        let mut env = Environment::new(tiny(), 3).unwrap();
        let layout = *env.layout();
        let action = HybridAction {
            continuous: vec![0.0; layout.continuous_len()],
            discrete: vec![1.0; layout.discrete_len()],
        };
        let mut n = 0;
        loop {
            let out = env.step(&action).unwrap();
            n += 1;
            assert!(validate_coupling(&out.info.trc.reflect, &out.info.trc.transmit));
            if out.terminal {
                break;
            }
        }
        assert_eq!(n, 30);
        assert!(matches!(env.step(&action), Err(EnvError::EpisodeOver)));
        env.reset().unwrap();
        assert!(env.step(&action).is_ok());
    }

    #[test]
    fn hovering_costs_hover_power() {
        let mut env = Environment::new(tiny(), 4).unwrap();
        let layout = *env.layout();
        let mut c = vec![0.0; layout.continuous_len()];
        c[0] = -1.0;
        let out = env
            .step(&HybridAction {
                continuous: c,
                discrete: vec![-1.0; layout.discrete_len()],
            })
            .unwrap();
        assert!((out.info.power.total - 181.29).abs() < 0.01 * 1.8129);
        assert_eq!(out.info.power.ris_drag, 0.0);
        let expected = fairness::reward(&out.info.rates, out.info.power.total, &env.config().reward).unwrap();
        assert_eq!(out.reward, expected);
    }

    #[test]
    fn bad_action_lengths() {
        let mut env = Environment::new(tiny(), 5).unwrap();
        let bad = HybridAction {
            continuous: vec![0.0; 3],
            discrete: vec![1.0; 4],
        };
        assert!(matches!(env.step(&bad), Err(EnvError::ActionLength { .. })));
    }

    #[test]
    fn layout_sizes() {
        let l = ActionLayout::new(4, 16, 4, RisKind::StarCoupled);
        assert_eq!(l.continuous_len(), 3 + 32 + 32);
        assert_eq!(l.discrete_len(), 16);
        assert_eq!(l.total_len(), 83);
        let ind = ActionLayout::new(4, 16, 4, RisKind::StarIndependent);
        assert_eq!(ind.continuous_len(), 3 + 48 + 32);
        assert_eq!(ind.discrete_len(), 0);
    }

    #[test]
    fn matched_filter_roundtrip_from_state() {
        let env = Environment::new(tiny(), 6).unwrap();
        let s = env.state();
        let d = direct_channels_from_state(&s, 2, 4, 2);
        for (u, h) in d.iter().enumerate() {
            for (a, b) in h.iter().zip(&env.channels().bs_user[u]) {
                let scaled = b * env.state_scale;
                assert!((a - scaled).norm() <= 1e-12 * scaled.norm().max(1.0));
            }
        }
        let raw = matched_filter_raw(&d);
        assert_eq!(raw.len(), 8);
        assert!(raw.iter().all(|x| x.abs() <= 1.0));
    }
}
