//! Circular-orbit kinematics and satellite/ground-station link geometry.
//!
//! Everything lives in an Earth-centred inertial frame whose x axis points at
//! longitude 0 at `t = 0`. The Earth is a sphere of radius [`EARTH_RADIUS_M`];
//! ground stations sit on its surface and (optionally) co-rotate with it.

use nalgebra::Vector3;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{invalid, QcsError, Result};

/// Mean Earth radius.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Standard gravitational parameter of the Earth.
pub const EARTH_GM: f64 = 3.986_004_418e14;
/// Earth rotation rate, one revolution per solar day.
pub const EARTH_ROTATION_RATE: f64 = TAU / 86_400.0;
/// Speed of light in vacuum.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Range rates below this magnitude are treated as exactly zero (K = +inf).
pub const RANGE_RATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrbitDirection {
    #[default]
    Prograde,
    Retrograde,
}

/// A circular orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitConfig {
    pub altitude_m: f64,
    pub inclination_rad: f64,
    /// Rotation of the orbital plane about the Earth's axis.
    pub raan_rad: f64,
    /// Argument of latitude at `t = 0`.
    pub initial_phase_rad: f64,
    pub direction: OrbitDirection,
}

impl OrbitConfig {
    pub fn new(
        altitude_m: f64,
        inclination_rad: f64,
        raan_rad: f64,
        initial_phase_rad: f64,
        direction: OrbitDirection,
    ) -> Result<Self> {
        let orbit = Self { altitude_m, inclination_rad, raan_rad, initial_phase_rad, direction };
        orbit.validate()?;
        Ok(orbit)
    }

    /// Equatorial prograde orbit.
    pub fn equatorial(altitude_m: f64, initial_phase_rad: f64) -> Self {
        Self { altitude_m, inclination_rad: 0.0, raan_rad: 0.0, initial_phase_rad, direction: OrbitDirection::Prograde }
    }

    /// Polar orbit whose plane contains longitude `raan_rad` at `t = 0`.
    pub fn polar(altitude_m: f64, raan_rad: f64, initial_phase_rad: f64) -> Self {
        Self {
            altitude_m,
            inclination_rad: FRAC_PI_2,
            raan_rad,
            initial_phase_rad,
            direction: OrbitDirection::Prograde,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_m.is_finite() && self.altitude_m > 0.0) {
            return Err(invalid("altitude_m", format!("must be > 0, got {}", self.altitude_m)));
        }
        for (name, v) in [
            ("inclination_rad", self.inclination_rad),
            ("raan_rad", self.raan_rad),
            ("initial_phase_rad", self.initial_phase_rad),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn radius_m(&self) -> f64 {
        EARTH_RADIUS_M + self.altitude_m
    }

    /// Orbital angular rate sqrt(GM / r^3).
    pub fn angular_rate(&self) -> f64 {
        (EARTH_GM / self.radius_m().powi(3)).sqrt()
    }

    pub fn period_s(&self) -> f64 {
        TAU / self.angular_rate()
    }

    pub fn speed_mps(&self) -> f64 {
        self.angular_rate() * self.radius_m()
    }

    fn signed_rate(&self) -> f64 {
        match self.direction {
            OrbitDirection::Prograde => self.angular_rate(),
            OrbitDirection::Retrograde => -self.angular_rate(),
        }
    }

    /// In-plane basis (p, q) and orbit normal n.
    fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let (so, co) = self.raan_rad.sin_cos();
        let (si, ci) = self.inclination_rad.sin_cos();
        let p = Vector3::new(co, so, 0.0);
        let q = Vector3::new(-so * ci, co * ci, si);
        let n = Vector3::new(so * si, -co * si, ci);
        (p, q, n)
    }

    /// Unit normal of the orbital plane, oriented along the angular velocity.
    pub fn angular_velocity(&self) -> Vector3<f64> {
        self.basis().2 * self.signed_rate()
    }
}

/// A station on the spherical Earth.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStationConfig {
    pub name: String,
    pub latitude_rad: f64,
    pub longitude_rad: f64,
    /// Whether the station co-rotates with the Earth.
    pub rotating: bool,
}

impl GroundStationConfig {
    /// A co-rotating station.
    pub fn new(name: impl Into<String>, latitude_rad: f64, longitude_rad: f64) -> Result<Self> {
        let gs = Self { name: name.into(), latitude_rad, longitude_rad, rotating: true };
        gs.validate()?;
        Ok(gs)
    }

    pub fn from_degrees(name: impl Into<String>, lat_deg: f64, lon_deg: f64) -> Result<Self> {
        Self::new(name, lat_deg.to_radians(), lon_deg.to_radians())
    }

    /// Same station with Earth rotation switched off.
    pub fn fixed(mut self) -> Self {
        self.rotating = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude_rad.is_finite() && self.latitude_rad.abs() <= FRAC_PI_2 + 1e-12) {
            return Err(invalid("latitude_rad", format!("|lat| must be <= pi/2, got {}", self.latitude_rad)));
        }
        if !self.longitude_rad.is_finite() {
            return Err(invalid("longitude_rad", "must be finite"));
        }
        Ok(())
    }

    pub fn rotation_rate(&self) -> f64 {
        if self.rotating {
            EARTH_ROTATION_RATE
        } else {
            0.0
        }
    }
}

/// A body that never moves; handy for static test geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedBody {
    pub position_m: Vector3<f64>,
}

/// Position and velocity of a body at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub position_m: Vector3<f64>,
    pub velocity_mps: Vector3<f64>,
    pub epoch_s: f64,
}

/// Anything whose state can be evaluated at an arbitrary time.
pub trait Propagate {
    fn state_at(&self, t_s: f64) -> BodyState;
}

impl Propagate for OrbitConfig {
    fn state_at(&self, t_s: f64) -> BodyState {
        let (p, q, n) = self.basis();
        let w = self.signed_rate();
        let u = self.initial_phase_rad + w * t_s;
        let (su, cu) = u.sin_cos();
        let r = (p * cu + q * su) * self.radius_m();
        BodyState { position_m: r, velocity_mps: (n * w).cross(&r), epoch_s: t_s }
    }
}

impl Propagate for GroundStationConfig {
    fn state_at(&self, t_s: f64) -> BodyState {
        let w = self.rotation_rate();
        let lon = self.longitude_rad + w * t_s;
        let (sl, cl) = self.latitude_rad.sin_cos();
        let r = Vector3::new(cl * lon.cos(), cl * lon.sin(), sl) * EARTH_RADIUS_M;
        BodyState { position_m: r, velocity_mps: Vector3::new(0.0, 0.0, w).cross(&r), epoch_s: t_s }
    }
}

impl Propagate for FixedBody {
    fn state_at(&self, t_s: f64) -> BodyState {
        BodyState { position_m: self.position_m, velocity_mps: Vector3::zeros(), epoch_s: t_s }
    }
}

pub fn propagate<B: Propagate + ?Sized>(body: &B, t_s: f64) -> BodyState {
    body.state_at(t_s)
}

/// Instantaneous satellite / ground-station relative geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryState {
    pub link_distance_m: f64,
    pub zenith_angle_rad: f64,
    /// Angle between the satellite and the station zenith seen from the Earth's centre.
    pub boresight_angle_rad: f64,
    /// Range rate dL/dt; positive while the satellite recedes.
    pub v_rel_rad_mps: f64,
    /// c / |range rate|, +inf when the range rate vanishes.
    pub k_factor: f64,
    pub visible: bool,
}

/// Relative geometry between a satellite and a ground station at one epoch.
pub fn link_geometry(sat: &BodyState, gs: &BodyState) -> Result<GeometryState> {
    if (sat.epoch_s - gs.epoch_s).abs() > 1e-9 {
        return Err(invalid("epoch_s", format!("states at different epochs ({} vs {})", sat.epoch_s, gs.epoch_s)));
    }
    let los = sat.position_m - gs.position_m;
    let l = los.norm();
    if l <= 0.0 || !l.is_finite() {
        return Err(QcsError::DegenerateGeometry("link distance is zero"));
    }
    let u = los / l;
    let v_rad = (sat.velocity_mps - gs.velocity_mps).dot(&u);
    let v_rad = if v_rad.abs() < RANGE_RATE_EPS { 0.0 } else { v_rad };

    let gs_norm = gs.position_m.norm();
    let cos_z = if gs_norm > 0.0 { (u.dot(&gs.position_m) / gs_norm).clamp(-1.0, 1.0) } else { 1.0 };
    let zenith = cos_z.acos();
    let boresight = sat.position_m.cross(&gs.position_m).norm().atan2(sat.position_m.dot(&gs.position_m));

    Ok(GeometryState {
        link_distance_m: l,
        zenith_angle_rad: zenith,
        boresight_angle_rad: boresight,
        v_rel_rad_mps: v_rad,
        k_factor: k_from_range_rate(v_rad),
        visible: zenith < FRAC_PI_2,
    })
}

/// K = c / |v|, with +inf for a vanishing range rate.
pub fn k_from_range_rate(v_rad_mps: f64) -> f64 {
    if v_rad_mps.abs() < RANGE_RATE_EPS {
        f64::INFINITY
    } else {
        SPEED_OF_LIGHT / v_rad_mps.abs()
    }
}

/// Closed-form K for a station whose zenith lies in the orbital plane,
/// using the satellite's own orbital rate.
pub fn k_factor_inplane(theta0_rad: f64, h_m: f64) -> Result<f64> {
    let rate = (EARTH_GM / (EARTH_RADIUS_M + h_m).powi(3)).sqrt();
    k_factor_inplane_with_rate(theta0_rad, h_m, rate)
}

/// Closed-form in-plane K for an arbitrary relative angular rate `omega`
/// (satellite rate minus the station's rate projected on the orbit normal).
pub fn k_factor_inplane_with_rate(theta0_rad: f64, h_m: f64, omega: f64) -> Result<f64> {
    if !(h_m.is_finite() && h_m > 0.0) {
        return Err(invalid("h_m", format!("must be > 0, got {h_m}")));
    }
    if !(0.0..PI).contains(&theta0_rad) {
        return Err(invalid("theta0_rad", format!("must lie in [0, pi), got {theta0_rad}")));
    }
    let rs = EARTH_RADIUS_M + h_m;
    let denom = 2.0 * EARTH_RADIUS_M * rs * omega.abs() * theta0_rad.sin();
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * SPEED_OF_LIGHT * inplane_link_distance(theta0_rad, h_m) / denom)
}

/// Link distance for a central angle `theta0` between station and satellite.
pub fn inplane_link_distance(theta0_rad: f64, h_m: f64) -> f64 {
    let rs = EARTH_RADIUS_M + h_m;
    let re = EARTH_RADIUS_M;
    (re * re + rs * rs - 2.0 * re * rs * theta0_rad.cos()).max(0.0).sqrt()
}

/// cos(zenith) of a satellite at altitude `h` seen over link distance `l`.
pub fn cos_zenith_circular(l_m: f64, h_m: f64) -> f64 {
    h_m / l_m - 0.5 * (l_m * l_m - h_m * h_m) / (EARTH_RADIUS_M * l_m)
}

/// Central angle at which a satellite at altitude `h` sets below the horizon.
pub fn horizon_central_angle(h_m: f64) -> f64 {
    (EARTH_RADIUS_M / (EARTH_RADIUS_M + h_m)).acos()
}

/// Angle at the satellite between nadir and the station, for central angle `theta0`.
pub fn nadir_angle(theta0_rad: f64, h_m: f64) -> f64 {
    let rs = EARTH_RADIUS_M + h_m;
    (EARTH_RADIUS_M * theta0_rad.sin()).atan2(rs - EARTH_RADIUS_M * theta0_rad.cos())
}

/// The in-plane configuration: an equatorial prograde satellite at central angle
/// `theta0` from a non-rotating station at latitude 0, longitude 0.
pub fn inplane_configuration(theta0_rad: f64, h_m: f64) -> (OrbitConfig, GroundStationConfig) {
    let orbit = OrbitConfig::equatorial(h_m, theta0_rad);
    let gs = GroundStationConfig { name: "in-plane".into(), latitude_rad: 0.0, longitude_rad: 0.0, rotating: false };
    (orbit, gs)
}

/// Earth-fixed latitude / longitude of the point below the satellite.
pub fn sub_satellite_point(sat: &BodyState) -> (f64, f64) {
    let r = sat.position_m;
    let lat = (r.z / r.norm()).asin();
    let lon = wrap_angle(r.y.atan2(r.x) - EARTH_ROTATION_RATE * sat.epoch_s);
    (lat, lon)
}

/// Azimuth (from north, towards east) of the ground track below the satellite,
/// measured relative to the rotating Earth.
pub fn ground_track_azimuth(sat: &BodyState) -> f64 {
    track_azimuth(sat, EARTH_ROTATION_RATE)
}

/// Track azimuth seen from a frame turning at `frame_rate` about the polar axis;
/// `0.0` gives the inertial track.
pub fn track_azimuth(sat: &BodyState, frame_rate: f64) -> f64 {
    let r = sat.position_m;
    let v = sat.velocity_mps - Vector3::new(0.0, 0.0, frame_rate).cross(&r);
    let lat = (r.z / r.norm()).asin();
    let lon = r.y.atan2(r.x);
    let east = Vector3::new(-lon.sin(), lon.cos(), 0.0);
    let north = Vector3::new(-lat.sin() * lon.cos(), -lat.sin() * lon.sin(), lat.cos());
    v.dot(&east).atan2(v.dot(&north))
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}
