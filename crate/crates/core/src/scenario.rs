//! World geometry, user mobility, UAV kinematics and reflect/transmit
//! side classification.
//!
//! The STAR panel hangs vertically under the UAV. Its unit normal is
//! horizontal and points from the transmit region toward the base station;
//! it is fixed when the world is created.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{v_dot, v_norm, v_sub, SimRng, Vec3};

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
/// Half-width of the heading jitter for directional users, radians.
const DIRECTIONAL_JITTER: f64 = PI / 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("could not place a user on the {0:?} side inside the area bounds")]
    InfeasibleRegion(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Reflect,
    Transmit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityModel {
    RandomWalk,
    Directional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub bs_position: Vec3,
    pub initial_uav_position: Vec3,
    /// P: users initially on the reflect (base-station) side.
    pub reflect_users: usize,
    /// Q: users initially on the transmit side.
    pub transmit_users: usize,
    pub user_speed: f64,
    pub user_height: f64,
    pub mobility: MobilityModel,
    /// Fixed drift heading for directional mobility; drawn per episode when absent.
    pub drift_heading: Option<f64>,
    /// Horizontal area bounds `[x_min, y_min]`..`[x_max, y_max]`, meters.
    pub area_min: [f64; 2],
    pub area_max: [f64; 2],
    pub episode_steps: usize,
    pub slot_duration: f64,
    pub v_max: f64,
    pub altitude_min: f64,
    pub altitude_max: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0, 25.0],
            initial_uav_position: [1000.0, 0.0, 50.0],
            reflect_users: 2,
            transmit_users: 2,
            user_speed: 1.0,
            user_height: 1.5,
            mobility: MobilityModel::RandomWalk,
            drift_heading: None,
            area_min: [900.0, -50.0],
            area_max: [1100.0, 50.0],
            episode_steps: 30,
            slot_duration: 1.0,
            v_max: 10.0,
            altitude_min: 20.0,
            altitude_max: 150.0,
        }
    }
}

impl WorldConfig {
    pub fn user_count(&self) -> usize {
        self.reflect_users + self.transmit_users
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: &str| Err(ScenarioError::InvalidConfig(msg.to_string()));
        if !(self.v_max >= 0.0 && self.v_max.is_finite()) {
            return bad("v_max must be finite and non-negative");
        }
        if self.episode_steps == 0 {
            return bad("episode_steps must be at least 1");
        }
        if !(self.slot_duration > 0.0) {
            return bad("slot_duration must be positive");
        }
        if !(self.altitude_min > 0.0 && self.altitude_max >= self.altitude_min) {
            return bad("altitude bounds must be positive and ordered");
        }
        if !(self.user_speed >= 0.0) {
            return bad("user_speed must be non-negative");
        }
        if !(self.area_max[0] >= self.area_min[0] && self.area_max[1] >= self.area_min[1]) {
            return bad("area bounds must be ordered");
        }
        Ok(())
    }

    /// Largest displacement the UAV may make in one slot.
    pub fn max_step_length(&self) -> f64 {
        self.v_max * self.slot_duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bs_position: Vec3,
    pub uav_pose: Vec3,
    pub previous_uav_pose: Vec3,
    pub user_positions: Vec<Vec3>,
    pub panel_normal: Vec3,
    pub drift_heading: f64,
    pub step: usize,
}

impl WorldState {
    /// Velocity implied by the last UAV move, m/s.
    pub fn uav_velocity(&self, slot_duration: f64) -> Vec3 {
        let d = v_sub(self.uav_pose, self.previous_uav_pose);
        [d[0] / slot_duration, d[1] / slot_duration, d[2] / slot_duration]
    }

    pub fn side_of(&self, point: Vec3) -> Side {
        side_of(self.bs_position, self.uav_pose, self.panel_normal, point)
    }

    pub fn user_sides(&self) -> Vec<Side> {
        self.user_positions.iter().map(|&p| self.side_of(p)).collect()
    }

    /// Mean user position.
    pub fn user_centroid(&self) -> Option<Vec3> {
        if self.user_positions.is_empty() {
            return None;
        }
        let n = self.user_positions.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.user_positions {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        Some(c)
    }
}

fn side_of(bs: Vec3, uav: Vec3, normal: Vec3, point: Vec3) -> Side {
    let bs_side = v_dot(v_sub(bs, uav), normal);
    let d = v_dot(v_sub(point, uav), normal);
    if d == 0.0 || d.signum() == bs_side.signum() {
        Side::Reflect
    } else {
        Side::Transmit
    }
}

/// Place users and the UAV for a fresh episode.
pub fn init_world(config: &WorldConfig, rng: &mut SimRng) -> Result<WorldState, ScenarioError> {
    config.validate()?;
    let uav = config.initial_uav_position;
    let to_bs = v_sub(config.bs_position, uav);
    let horiz = (to_bs[0].powi(2) + to_bs[1].powi(2)).sqrt();
    if horiz == 0.0 {
        return Err(ScenarioError::InvalidConfig(
            "base station directly above or below the UAV leaves the panel orientation undefined"
                .into(),
        ));
    }
    let normal = [to_bs[0] / horiz, to_bs[1] / horiz, 0.0];

    // always consumed so both mobility models advance the stream identically
    let drawn_heading = rng.uniform(0.0, TAU);
    let drift_heading = config.drift_heading.unwrap_or(drawn_heading);

    let mut users = Vec::with_capacity(config.user_count());
    for (side, count) in [
        (Side::Reflect, config.reflect_users),
        (Side::Transmit, config.transmit_users),
    ] {
        for _ in 0..count {
            let mut placed = None;
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let p = [
                    rng.uniform(config.area_min[0], config.area_max[0]),
                    rng.uniform(config.area_min[1], config.area_max[1]),
                    config.user_height,
                ];
                if side_of(config.bs_position, uav, normal, p) == side {
                    placed = Some(p);
                    break;
                }
            }
            users.push(placed.ok_or(ScenarioError::InfeasibleRegion(side))?);
        }
    }

    Ok(WorldState {
        bs_position: config.bs_position,
        uav_pose: uav,
        previous_uav_pose: uav,
        user_positions: users,
        panel_normal: normal,
        drift_heading,
        step: 0,
    })
}

/// Move the UAV for one slot at `speed` along the (elevation, azimuth) heading.
pub fn apply_uav_motion(
    world: &WorldState,
    config: &WorldConfig,
    speed: f64,
    elev: f64,
    azim: f64,
) -> WorldState {
    let speed = speed.clamp(0.0, config.v_max);
    let dist = speed * config.slot_duration;
    let dir = [elev.cos() * azim.cos(), elev.cos() * azim.sin(), elev.sin()];
    let mut next = world.clone();
    next.previous_uav_pose = world.uav_pose;
    next.uav_pose = [
        world.uav_pose[0] + dist * dir[0],
        world.uav_pose[1] + dist * dir[1],
        (world.uav_pose[2] + dist * dir[2]).clamp(config.altitude_min, config.altitude_max),
    ];
    next
}

fn reflect_into(x: f64, lo: f64, hi: f64) -> f64 {
    let mut v = x;
    if v < lo {
        v = 2.0 * lo - v;
    }
    if v > hi {
        v = 2.0 * hi - v;
    }
    v.clamp(lo, hi)
}

/// Advance every user by one slot and bounce them off the area edges.
pub fn step_users(world: &WorldState, config: &WorldConfig, rng: &mut SimRng) -> WorldState {
    let step = config.user_speed * config.slot_duration;
    let mut next = world.clone();
    for p in next.user_positions.iter_mut() {
        let heading = match config.mobility {
            MobilityModel::RandomWalk => rng.uniform(0.0, TAU),
            MobilityModel::Directional => {
                world.drift_heading + rng.uniform(-DIRECTIONAL_JITTER, DIRECTIONAL_JITTER)
            }
        };
        p[0] = reflect_into(p[0] + step * heading.cos(), config.area_min[0], config.area_max[0]);
        p[1] = reflect_into(p[1] + step * heading.sin(), config.area_min[1], config.area_max[1]);
    }
    next
}

/// Split users into (reflect-side ids, transmit-side ids). Users on the panel
/// plane count as reflect-side.
pub fn classify_regions(world: &WorldState) -> (Vec<usize>, Vec<usize>) {
    let mut reflect = Vec::new();
    let mut transmit = Vec::new();
    for (i, side) in world.user_sides().into_iter().enumerate() {
        match side {
            Side::Reflect => reflect.push(i),
            Side::Transmit => transmit.push(i),
        }
    }
    (reflect, transmit)
}

/// Horizontal distance helper used by heuristics.
pub fn horizontal_distance(a: Vec3, b: Vec3) -> f64 {
    v_norm([a[0] - b[0], a[1] - b[1], 0.0])
}
