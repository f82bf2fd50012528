//! Single-photon channel transmittance for the ground/satellite links.

use std::f64::consts::PI;

use crate::error::{invalid, QcsError, Result};
use crate::geometry::{cos_zenith_circular, GeometryState};

/// Link direction. Uplink: the ground station transmits, the satellite receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Uplink,
    Downlink,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Uplink => "up",
            Direction::Downlink => "dwn",
        }
    }
}

/// Optical hardware of the two platforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareParams {
    pub wavelength_m: f64,
    pub tx_radius_sat_m: f64,
    pub tx_radius_gs_m: f64,
    pub rx_radius_sat_m: f64,
    pub rx_radius_gs_m: f64,
    pub det_eff_sat: f64,
    pub det_eff_gs: f64,
    /// Atmospheric transmittance looking straight up.
    pub eta_atm_zenith: f64,
    /// Initial beam waist as a fraction of the transmit aperture radius.
    pub fill_fraction: f64,
}

impl Default for HardwareParams {
    /// 810 nm, 10 cm satellite / 60 cm ground telescopes, 50 % detectors.
    fn default() -> Self {
        Self {
            wavelength_m: 810e-9,
            tx_radius_sat_m: 0.10,
            tx_radius_gs_m: 0.60,
            rx_radius_sat_m: 0.10,
            rx_radius_gs_m: 0.60,
            det_eff_sat: 0.5,
            det_eff_gs: 0.5,
            eta_atm_zenith: 0.6,
            fill_fraction: 0.8,
        }
    }
}

impl HardwareParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength_m", self.wavelength_m),
            ("tx_radius_sat_m", self.tx_radius_sat_m),
            ("tx_radius_gs_m", self.tx_radius_gs_m),
            ("rx_radius_sat_m", self.rx_radius_sat_m),
            ("rx_radius_gs_m", self.rx_radius_gs_m),
            ("fill_fraction", self.fill_fraction),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [("det_eff_sat", self.det_eff_sat), ("det_eff_gs", self.det_eff_gs)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.eta_atm_zenith > 0.0 && self.eta_atm_zenith <= 1.0) {
            return Err(invalid("eta_atm_zenith", format!("must lie in (0, 1], got {}", self.eta_atm_zenith)));
        }
        Ok(())
    }

    /// (transmit radius, receive radius) for a direction.
    pub fn apertures(&self, direction: Direction) -> (f64, f64) {
        match direction {
            Direction::Uplink => (self.tx_radius_gs_m, self.rx_radius_sat_m),
            Direction::Downlink => (self.tx_radius_sat_m, self.rx_radius_gs_m),
        }
    }
}

/// Transmittance budget of one link at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEfficiency {
    pub eta_fs: f64,
    pub eta_atm: f64,
    pub eta_total: f64,
    pub direction: Direction,
    pub below_horizon: bool,
}

impl ChannelEfficiency {
    /// Loss in dB; +inf for a dead link.
    pub fn loss_db(&self) -> f64 {
        -10.0 * self.eta_total.log10()
    }

    /// A lossless-by-construction efficiency, used by synthetic trajectories.
    pub fn fixed(direction: Direction, eta_total: f64) -> Self {
        Self { eta_fs: eta_total, eta_atm: 1.0, eta_total, direction, below_horizon: false }
    }
}

/// Gaussian-beam diffraction loss between apertures `l_m` apart.
pub fn free_space_transmittance(
    l_m: f64,
    tx_radius_m: f64,
    rx_radius_m: f64,
    wavelength_m: f64,
    fill_fraction: f64,
) -> f64 {
    let w0 = fill_fraction * tx_radius_m;
    let rayleigh = PI * w0 * w0 / wavelength_m;
    let w2 = w0 * w0 * (1.0 + (l_m / rayleigh).powi(2));
    1.0 - (-2.0 * rx_radius_m * rx_radius_m / w2).exp()
}

/// Beer-Lambert absorption through a homogeneous atmosphere: eta_zen^sec(zenith).
pub fn atmospheric_transmittance(l_m: f64, h_m: f64, eta_atm_zenith: f64) -> Result<f64> {
    if !(h_m > 0.0 && l_m > 0.0) {
        return Err(invalid("l_m", format!("need L > 0 and h > 0, got L={l_m}, h={h_m}")));
    }
    let cos_z = cos_zenith_circular(l_m, h_m);
    if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&cos_z) {
        return Err(QcsError::GeometryInconsistency { cos_zenith: cos_z });
    }
    if cos_z <= 0.0 {
        return Ok(0.0);
    }
    Ok(eta_atm_zenith.powf(1.0 / cos_z.min(1.0)))
}

/// Atmospheric transmittance from an already-known zenith angle.
pub fn atmospheric_transmittance_at_zenith(zenith_rad: f64, eta_atm_zenith: f64) -> f64 {
    let cos_z = zenith_rad.cos();
    if zenith_rad.abs() >= std::f64::consts::FRAC_PI_2 || cos_z <= 0.0 {
        0.0
    } else {
        eta_atm_zenith.powf(1.0 / cos_z)
    }
}

/// Total single-photon efficiency of one link for a given geometry.
pub fn channel_efficiency(direction: Direction, geom: &GeometryState, hw: &HardwareParams) -> ChannelEfficiency {
    if !geom.visible {
        return ChannelEfficiency { eta_fs: 0.0, eta_atm: 0.0, eta_total: 0.0, direction, below_horizon: true };
    }
    let (tx, rx) = hw.apertures(direction);
    let eta_fs = free_space_transmittance(geom.link_distance_m, tx, rx, hw.wavelength_m, hw.fill_fraction);
    let eta_atm = atmospheric_transmittance_at_zenith(geom.zenith_angle_rad, hw.eta_atm_zenith);
    ChannelEfficiency {
        eta_fs,
        eta_atm,
        eta_total: eta_fs * eta_atm * hw.det_eff_sat * hw.det_eff_gs,
        direction,
        below_horizon: false,
    }
}

/// Efficiency for a satellite at central angle `theta0` in the in-plane configuration.
pub fn inplane_efficiency(direction: Direction, theta0_rad: f64, h_m: f64, hw: &HardwareParams) -> Result<f64> {
    let l = crate::geometry::inplane_link_distance(theta0_rad, h_m);
    let (tx, rx) = hw.apertures(direction);
    let fs = free_space_transmittance(l, tx, rx, hw.wavelength_m, hw.fill_fraction);
    let atm = atmospheric_transmittance(l, h_m, hw.eta_atm_zenith)?;
    Ok(fs * atm * hw.det_eff_sat * hw.det_eff_gs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{link_geometry, GroundStationConfig, OrbitConfig, Propagate, EARTH_RADIUS_M};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_distance_has_no_spreading() {
        let got = free_space_transmittance(0.0, 0.6, 0.1, 810e-9, 0.8);
        let w0: f64 = 0.48;
        assert_relative_eq!(got, 1.0 - (-2.0 * 0.01 / (w0 * w0)).exp(), max_relative = 1e-14);
    }

    #[test]
    fn uplink_free_space_at_500_km() {
        // w0 = 0.48 m, L_R = pi w0^2 / 810 nm = 8.9357e5 m,
        // w^2 = w0^2 (1 + (5e5/L_R)^2) = 0.30258 m^2, eta = 1 - exp(-0.02 / w^2) = 0.063971
        let got = free_space_transmittance(500e3, 0.6, 0.1, 810e-9, 0.8);
        assert_relative_eq!(got, 0.063971, max_relative = 1e-4);
    }

    #[test]
    fn free_space_decreases_with_distance() {
        let v: Vec<f64> = (1..200).map(|i| free_space_transmittance(i as f64 * 1e4, 0.6, 0.1, 810e-9, 0.8)).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn atmosphere_at_zenith_and_below_horizon() {
        assert_relative_eq!(atmospheric_transmittance(500e3, 500e3, 0.5).unwrap(), 0.5, max_relative = 1e-12);
        // L beyond the horizon distance sqrt(Rs^2 - Re^2) ~ 2574 km
        assert_eq!(atmospheric_transmittance(3000e3, 500e3, 0.5).unwrap(), 0.0);
        assert!(matches!(atmospheric_transmittance(50_000e3, 500e3, 0.5), Err(QcsError::GeometryInconsistency { .. })));
    }

    #[test]
    fn atmosphere_at_1500_km_slant() {
        // cos z = 0.5/1.5 - (1500^2 - 500^2)/(2 * 6371 * 1500) = 0.124673
        let cz = 500.0 / 1500.0 - (1500.0f64.powi(2) - 500.0f64.powi(2)) / (2.0 * 6371.0 * 1500.0);
        let got = atmospheric_transmittance(1500e3, 500e3, 0.5).unwrap();
        assert_relative_eq!(got, 0.5f64.powf(1.0 / cz), max_relative = 1e-12);
        assert!(got > 0.0 && got < 0.5);
    }

    fn overhead_geometry() -> GeometryState {
        let orbit = OrbitConfig::equatorial(500e3, 0.0);
        let gs = GroundStationConfig::from_degrees("eq", 0.0, 0.0).unwrap();
        link_geometry(&orbit.state_at(0.0), &gs.state_at(0.0)).unwrap()
    }

    #[test]
    fn overhead_uplink_is_about_20_db() {
        let eff = channel_efficiency(Direction::Uplink, &overhead_geometry(), &HardwareParams::default());
        assert!((eff.loss_db() - 20.0).abs() < 0.5, "loss = {} dB", eff.loss_db());
        assert_relative_eq!(eff.eta_total, eff.eta_fs * eff.eta_atm * 0.25, max_relative = 1e-14);
    }

    #[test]
    fn dead_detector_kills_link() {
        let hw = HardwareParams { det_eff_sat: 0.0, ..Default::default() };
        assert_eq!(channel_efficiency(Direction::Uplink, &overhead_geometry(), &hw).eta_total, 0.0);
    }

    #[test]
    fn below_horizon_is_flagged() {
        let orbit = OrbitConfig::equatorial(500e3, 1.0);
        let gs = GroundStationConfig::from_degrees("eq", 0.0, 0.0).unwrap();
        let g = link_geometry(&orbit.state_at(0.0), &gs.state_at(0.0)).unwrap();
        let eff = channel_efficiency(Direction::Downlink, &g, &HardwareParams::default());
        assert!(eff.below_horizon);
        assert_eq!(eff.eta_total, 0.0);
    }

    #[test]
    fn uplink_never_beats_downlink() {
        let hw = HardwareParams::default();
        for i in 0..=150 {
            let l = 500e3 + i as f64 * 10e3;
            let cz = cos_zenith_circular(l, 500e3);
            let zen = cz.acos();
            let g = GeometryState {
                link_distance_m: l,
                zenith_angle_rad: zen,
                boresight_angle_rad: 0.0,
                v_rel_rad_mps: 1.0,
                k_factor: 1.0,
                visible: zen < std::f64::consts::FRAC_PI_2,
            };
            let up = channel_efficiency(Direction::Uplink, &g, &hw).eta_total;
            let dn = channel_efficiency(Direction::Downlink, &g, &hw).eta_total;
            assert!(up <= dn, "L = {l}: up {up} > down {dn}");
        }
    }

    proptest! {
        #[test]
        fn efficiency_is_a_probability_and_decreasing(
            l1 in 500e3f64..2500e3, dl in 1.0f64..1e5, dir in prop::bool::ANY,
            zen in 0.01f64..0.99, tx in 0.01f64..1.0, rx in 0.01f64..1.0,
        ) {
            let hw = HardwareParams { eta_atm_zenith: zen, tx_radius_gs_m: tx, rx_radius_sat_m: rx, ..Default::default() };
            let d = if dir { Direction::Uplink } else { Direction::Downlink };
            let eta = |l: f64| {
                let h = 500e3;
                let (t, r) = hw.apertures(d);
                free_space_transmittance(l, t, r, hw.wavelength_m, hw.fill_fraction)
                    * atmospheric_transmittance(l, h, hw.eta_atm_zenith).unwrap()
                    * hw.det_eff_gs * hw.det_eff_sat
            };
            let (a, b) = (eta(l1), eta(l1 + dl));
            prop_assert!((0.0..=1.0).contains(&a));
            let horizon = ((EARTH_RADIUS_M + 500e3).powi(2) - EARTH_RADIUS_M.powi(2)).sqrt();
            if l1 + dl < horizon {
                prop_assert!(b < a);
                prop_assert!((-10.0 * b.log10()).is_finite());
            }
        }
    }
}
