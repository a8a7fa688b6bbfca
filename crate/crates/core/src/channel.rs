//! Path loss and fading for the five downlink channel families.
//!
//! Path loss follows the 3GPP urban-micro expressions with the carrier in GHz
//! and distances in meters. The BS–surface link is Rician with a planar-array
//! line-of-sight term; every link touching a ground user is Rayleigh.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{v_cross, v_dot, v_norm, v_sub, CMatrix, SimRng, Vec3};
use crate::scenario::{Side, WorldState};

/// Speed of light divided by 1e9, so that λ[m] = C_GHZ / f_c[GHz].
pub const C_GHZ: f64 = 0.299_792_458;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("surface element count {0} is not a perfect square")]
    NotSquare(usize),
    #[error("link endpoints coincide")]
    CoincidentEndpoints,
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_freq_ghz: f64,
    pub rician_kappa: f64,
    pub bs_antennas: usize,
    pub ris_elements: usize,
    pub ris_row_len: usize,
    pub antenna_spacing: f64,
    pub element_spacing: f64,
    pub wavelength: f64,
}

impl ChannelParams {
    /// Both spacings are `λ / spacing_divisor`.
    pub fn new(
        carrier_freq_ghz: f64,
        rician_kappa: f64,
        bs_antennas: usize,
        ris_elements: usize,
        spacing_divisor: f64,
    ) -> Result<Self, ChannelError> {
        if !(carrier_freq_ghz > 0.0) {
            return Err(ChannelError::InvalidParams("carrier frequency must be positive".into()));
        }
        if !(rician_kappa >= 0.0) {
            return Err(ChannelError::InvalidParams("rician factor must be non-negative".into()));
        }
        if bs_antennas == 0 {
            return Err(ChannelError::InvalidParams("need at least one BS antenna".into()));
        }
        if !(spacing_divisor > 0.0) {
            return Err(ChannelError::InvalidParams("spacing divisor must be positive".into()));
        }
        let ris_row_len = square_side(ris_elements)?;
        let wavelength = C_GHZ / carrier_freq_ghz;
        Ok(Self {
            carrier_freq_ghz,
            rician_kappa,
            bs_antennas,
            ris_elements,
            ris_row_len,
            antenna_spacing: wavelength / spacing_divisor,
            element_spacing: wavelength / spacing_divisor,
            wavelength,
        })
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::new(5.0, 5.0, 4, 16, 2.0).expect("default channel params are valid")
    }
}

/// Row length of a square panel with `n` elements.
pub fn square_side(n: usize) -> Result<usize, ChannelError> {
    let side = (n as f64).sqrt().round() as usize;
    if n == 0 || side * side != n {
        return Err(ChannelError::NotSquare(n));
    }
    Ok(side)
}

/// Channel realization for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS → surface, N × M.
    pub bs_ris: CMatrix,
    /// BS → user j, length M each.
    pub bs_user: Vec<Vec<Complex64>>,
    /// Surface → user j, length N each.
    pub ris_user: Vec<Vec<Complex64>>,
    pub sides: Vec<Side>,
}

impl ChannelSet {
    pub fn user_count(&self) -> usize {
        self.bs_user.len()
    }

    pub fn is_finite(&self) -> bool {
        let fin = |v: &Vec<Complex64>| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        self.bs_ris.is_finite() && self.bs_user.iter().all(fin) && self.ris_user.iter().all(fin)
    }
}

/// LoS path loss in dB.
pub fn path_loss_los_db(f_c_ghz: f64, d: f64) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    Ok(20.0 * f_c_ghz.log10() + 28.0 + 22.0 * d.log10())
}

/// NLoS path loss in dB, never below the LoS value at the same distance.
pub fn path_loss_nlos_db(f_c_ghz: f64, d: f64, z_s: f64) -> Result<f64, ChannelError> {
    let los = path_loss_los_db(f_c_ghz, d)?;
    let nlos = 36.7 * d.log10() - 0.3 * (z_s - 1.5) + 26.0 * f_c_ghz.log10() + 22.7;
    Ok(nlos.max(los))
}

/// dB loss to linear power gain.
pub fn db_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Uniform linear array response at the BS.
pub fn array_response_bs(psi: f64, m: usize, spacing: f64, wavelength: f64) -> Vec<Complex64> {
    let k = 2.0 * std::f64::consts::PI * spacing * psi.sin() / wavelength;
    (0..m).map(|i| Complex64::from_polar(1.0, k * i as f64)).collect()
}

/// Uniform planar array response at the surface. Element `n` sits at row
/// `n / row_len` and column `n % row_len` (0-based).
pub fn array_response_ris(
    theta: f64,
    phi: f64,
    n: usize,
    row_len: usize,
    spacing: f64,
    wavelength: f64,
) -> Result<Vec<Complex64>, ChannelError> {
    if square_side(n)? != row_len {
        return Err(ChannelError::NotSquare(n));
    }
    let k = 2.0 * std::f64::consts::PI * spacing / wavelength;
    let row_dir = theta.sin() * phi.sin();
    let col_dir = theta.sin() * phi.cos();
    Ok((0..n)
        .map(|i| {
            let row = (i / row_len) as f64;
            let col = (i % row_len) as f64;
            Complex64::from_polar(1.0, k * (row * row_dir + col * col_dir))
        })
        .collect())
}

/// Departure and arrival angles for the BS → surface line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    /// Elevation of the UAV seen from the BS.
    pub psi: f64,
    /// Angle between the panel normal and the direction to the BS.
    pub theta: f64,
    /// Azimuth of the BS direction within the panel plane, measured from the
    /// horizontal in-plane axis toward vertical.
    pub phi: f64,
}

pub fn bs_ris_angles(bs: Vec3, uav: Vec3, normal: Vec3) -> Result<LinkAngles, ChannelError> {
    let d = v_sub(bs, uav);
    let dist = v_norm(d);
    if dist == 0.0 {
        return Err(ChannelError::CoincidentEndpoints);
    }
    let horiz = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let psi = (-d[2]).atan2(horiz);
    let dir = [d[0] / dist, d[1] / dist, d[2] / dist];
    let up = [0.0, 0.0, 1.0];
    let in_plane = v_cross(up, normal);
    let theta = v_dot(dir, normal).clamp(-1.0, 1.0).acos();
    let phi = v_dot(dir, up).atan2(v_dot(dir, in_plane));
    Ok(LinkAngles { psi, theta, phi })
}

/// Linear LoS gain of the BS → surface link at the current geometry.
pub fn bs_ris_path_gain(params: &ChannelParams, bs: Vec3, uav: Vec3) -> Result<f64, ChannelError> {
    let d = v_norm(v_sub(uav, bs));
    if d == 0.0 {
        return Err(ChannelError::CoincidentEndpoints);
    }
    Ok(db_to_gain(path_loss_los_db(params.carrier_freq_ghz, d)?))
}

/// Rician BS → surface channel, N × M.
pub fn sample_bs_ris_channel(
    params: &ChannelParams,
    bs: Vec3,
    uav: Vec3,
    panel_normal: Vec3,
    rng: &mut SimRng,
) -> Result<CMatrix, ChannelError> {
    let angles = bs_ris_angles(bs, uav, panel_normal)?;
    let gain = bs_ris_path_gain(params, bs, uav)?;
    let a_s = array_response_ris(
        angles.theta,
        angles.phi,
        params.ris_elements,
        params.ris_row_len,
        params.element_spacing,
        params.wavelength,
    )?;
    let a_b = array_response_bs(
        angles.psi,
        params.bs_antennas,
        params.antenna_spacing,
        params.wavelength,
    );
    let kappa = params.rician_kappa;
    let (los_w, nlos_w) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    };
    let amp = gain.sqrt();
    Ok(CMatrix::from_fn(params.ris_elements, params.bs_antennas, |n, m| {
        let los = a_s[n] * a_b[m].conj();
        amp * (los_w * los + nlos_w * rng.complex_normal())
    }))
}

/// Rayleigh channel with NLoS path loss, `rows × cols`.
pub fn sample_rayleigh_channel(
    params: &ChannelParams,
    distance: f64,
    z_s: f64,
    rows: usize,
    cols: usize,
    rng: &mut SimRng,
) -> Result<CMatrix, ChannelError> {
    let amp = db_to_gain(path_loss_nlos_db(params.carrier_freq_ghz, distance, z_s)?).sqrt();
    Ok(CMatrix::from_fn(rows, cols, |_, _| amp * rng.complex_normal()))
}

/// Draw a fresh realization of every link from the current geometry.
///
/// The NLoS height term uses the elevated end of each link: the BS mast for
/// BS → user links and the UAV altitude for surface → user links.
pub fn build_channel_set(
    world: &WorldState,
    params: &ChannelParams,
    rng: &mut SimRng,
) -> Result<ChannelSet, ChannelError> {
    let bs = world.bs_position;
    let uav = world.uav_pose;
    let bs_ris = sample_bs_ris_channel(params, bs, uav, world.panel_normal, rng)?;
    let mut bs_user = Vec::with_capacity(world.user_positions.len());
    let mut ris_user = Vec::with_capacity(world.user_positions.len());
    for &u in &world.user_positions {
        let d_bu = v_norm(v_sub(u, bs));
        let h_bu = sample_rayleigh_channel(params, d_bu, bs[2], params.bs_antennas, 1, rng)?;
        let d_ru = v_norm(v_sub(u, uav));
        let h_ru = sample_rayleigh_channel(params, d_ru, uav[2], params.ris_elements, 1, rng)?;
        bs_user.push(h_bu.as_slice().to_vec());
        ris_user.push(h_ru.as_slice().to_vec());
    }
    Ok(ChannelSet {
        bs_ris,
        bs_user,
        ris_user,
        sides: world.user_sides(),
    })
}
