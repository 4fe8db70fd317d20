//! Room geometry, Lambertian path gains and specular image paths.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axis(self, i: usize) -> f64 {
        [self.x, self.y, self.z][i]
    }

    pub fn with_axis(mut self, i: usize, v: f64) -> Self {
        match i {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
        self
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Position plus boresight direction of an emitter or detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Vec3,
}

impl Pose {
    /// Builds a pose; the orientation must already be a unit vector.
    pub fn new(position: Vec3, orientation: Vec3) -> Result<Self> {
        let n = orientation.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                name: "orientation norm",
                value: n,
                expected: "1 +- 1e-12",
            });
        }
        Ok(Self { position, orientation })
    }

    /// Pose whose boresight is tilted `elevation` away from `+z` towards azimuth `azimuth`.
    pub fn tilted_up(position: Vec3, elevation_rad: f64, azimuth_rad: f64) -> Self {
        let (se, ce) = elevation_rad.sin_cos();
        let (sa, ca) = azimuth_rad.sin_cos();
        Self {
            position,
            orientation: Vec3::new(se * ca, se * sa, ce),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Room extent along x, y, z in meters; the floor is at z = 0.
    pub room: [f64; 3],
    /// Transmitter position; it always points straight down.
    pub tx_position: Vec3,
    pub rx_height: (f64, f64),
    pub reflection_coeff: f64,
    pub tx_semiangle_deg: f64,
    pub rx_fov_deg: f64,
    pub rx_elevation_deg: (f64, f64),
    pub rx_rotation_deg: (f64, f64),
    /// Photodiode collection area, m^2.
    pub detector_area: f64,
    /// Hz.
    pub sample_rate: f64,
    /// Total path count including the LOS path.
    pub n_paths: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            room: [5.0, 5.0, 5.0],
            tx_position: Vec3::new(2.5, 2.5, 5.0),
            rx_height: (0.5, 1.5),
            reflection_coeff: 0.7,
            tx_semiangle_deg: 45.0,
            rx_fov_deg: 45.0,
            rx_elevation_deg: (0.0, 30.0),
            rx_rotation_deg: (0.0, 360.0),
            detector_area: 1e-4,
            sample_rate: 200e6,
            n_paths: 2,
        }
    }
}

fn check(name: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name, value, expected })
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for &d in &self.room {
            check("room dimension", d, d > 0.0, "(0, inf)")?;
        }
        check(
            "tx_semiangle_deg",
            self.tx_semiangle_deg,
            self.tx_semiangle_deg > 0.0 && self.tx_semiangle_deg < 90.0,
            "(0, 90)",
        )?;
        check(
            "rx_fov_deg",
            self.rx_fov_deg,
            self.rx_fov_deg > 0.0 && self.rx_fov_deg < 90.0,
            "(0, 90)",
        )?;
        check(
            "reflection_coeff",
            self.reflection_coeff,
            self.reflection_coeff > 0.0 && self.reflection_coeff <= 1.0,
            "(0, 1]",
        )?;
        check(
            "detector_area",
            self.detector_area,
            self.detector_area > 0.0,
            "(0, inf)",
        )?;
        check("sample_rate", self.sample_rate, self.sample_rate > 0.0, "(0, inf)")?;
        check("n_paths", self.n_paths as f64, self.n_paths >= 1, ">= 1")?;
        let (lo, hi) = self.rx_height;
        check("rx_height min", lo, lo >= 0.0 && lo <= hi, "[0, rx_height max]")?;
        check("rx_height max", hi, hi <= self.room[2], "[rx_height min, room z]")?;
        if !self.inside(self.tx_position) {
            return Err(Error::Config("transmitter lies outside the room".into()));
        }
        Ok(())
    }

    pub fn inside(&self, p: Vec3) -> bool {
        (0..3).all(|i| p.axis(i) >= 0.0 && p.axis(i) <= self.room[i])
    }

    pub fn tx_pose(&self) -> Pose {
        Pose {
            position: self.tx_position,
            orientation: Vec3::new(0.0, 0.0, -1.0),
        }
    }

    pub fn lambertian_order(&self) -> Result<f64> {
        lambertian_order(self.tx_semiangle_deg)
    }
}

/// Lambertian mode number `k = -ln 2 / ln cos(semi-angle)`.
pub fn lambertian_order(phi_half_deg: f64) -> Result<f64> {
    check(
        "phi_half",
        phi_half_deg,
        phi_half_deg > 0.0 && phi_half_deg < 90.0,
        "(0, 90) degrees",
    )?;
    Ok(-(2f64.ln()) / phi_half_deg.to_radians().cos().ln())
}

/// Gain of a single Lambertian hop from `src` to `rx`, zero outside the receiver FOV.
fn lambertian_hop(src: Pose, rx: Pose, k: f64, cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let v = rx.position - src.position;
    let d = v.norm();
    if d < 1e-12 {
        return Err(Error::Geometry("emitter and detector coincide"));
    }
    let u = v * (1.0 / d);
    let cos_emit = src.orientation.dot(u);
    let cos_inc = -rx.orientation.dot(u);
    if cos_emit <= 0.0 || cos_inc < cfg.rx_fov_deg.to_radians().cos() {
        return Ok((0.0, d));
    }
    let gain = cfg.detector_area * (k + 1.0) * cos_emit.powf(k) * cos_inc / (2.0 * PI * d * d);
    Ok((gain, d))
}

/// Line-of-sight DC gain between the transmitter and receiver poses.
pub fn los_gain(tx: Pose, rx: Pose, cfg: &ScenarioConfig) -> Result<f64> {
    let k = cfg.lambertian_order()?;
    lambertian_hop(tx, rx, k, cfg).map(|(g, _)| g)
}

/// Reflecting surfaces considered for the specular path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    XMin,
    XMax,
    YMin,
    YMax,
    Ceiling,
}

impl Wall {
    pub const ALL: [Wall; 5] = [Wall::XMin, Wall::XMax, Wall::YMin, Wall::YMax, Wall::Ceiling];

    fn plane(self, room: &[f64; 3]) -> (usize, f64) {
        match self {
            Wall::XMin => (0, 0.0),
            Wall::XMax => (0, room[0]),
            Wall::YMin => (1, 0.0),
            Wall::YMax => (1, room[1]),
            Wall::Ceiling => (2, room[2]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecularPath {
    pub gain: f64,
    /// Excess delay over the LOS path, seconds.
    pub delay: f64,
}

/// Single-bounce specular path via the image of the transmitter in `wall`.
///
/// The reflection point must fall on the wall surface, otherwise the path
/// does not exist and its gain is zero.
pub fn specular_path(tx: Pose, rx: Pose, wall: Wall, cfg: &ScenarioConfig) -> Result<SpecularPath> {
    let k = cfg.lambertian_order()?;
    let (axis, plane) = wall.plane(&cfg.room);
    let image = Pose {
        position: tx.position.with_axis(axis, 2.0 * plane - tx.position.axis(axis)),
        orientation: tx.orientation.with_axis(axis, -tx.orientation.axis(axis)),
    };
    let d_los = (rx.position - tx.position).norm();
    if d_los < 1e-12 {
        return Err(Error::Geometry("transmitter and receiver coincide"));
    }
    let (gain, d_image) = lambertian_hop(image, rx, k, cfg)?;
    let delay = ((d_image - d_los) / SPEED_OF_LIGHT).max(0.0);

    let span = rx.position.axis(axis) - image.position.axis(axis);
    let on_wall = if span.abs() < 1e-15 {
        false
    } else {
        let t = (plane - image.position.axis(axis)) / span;
        let hit = image.position + (rx.position - image.position) * t;
        (0..3).filter(|&i| i != axis).all(|i| {
            let c = hit.axis(i);
            c >= -1e-9 && c <= cfg.room[i] + 1e-9
        })
    };
    let gain = if on_wall { cfg.reflection_coeff * gain } else { 0.0 };
    Ok(SpecularPath { gain, delay })
}

/// Draws a receiver pose uniformly over the floor area at a random height and tilt.
pub fn draw_receiver<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Pose {
    let uniform = |rng: &mut R, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let x = uniform(rng, (0.0, cfg.room[0]));
    let y = uniform(rng, (0.0, cfg.room[1]));
    let z = uniform(rng, cfg.rx_height);
    let rotation = uniform(rng, cfg.rx_rotation_deg).to_radians();
    let elevation = uniform(rng, cfg.rx_elevation_deg).to_radians();
    Pose::tilted_up(Vec3::new(x, y, z), elevation, rotation)
}
