//! Scenario files: JSON with unit-suffixed keys.
//!
//! Every section except `orbit` (and the kind-specific inputs of `analyze`)
//! has defaults; the resolved config written to the manifest spells all of
//! them out so it can be fed back in unchanged.

use std::path::{Path, PathBuf};

use qcs_core::geometry::{GroundStationConfig, OrbitConfig, OrbitDirection};
use qcs_core::link_budget::{Direction, HardwareParams};
use qcs_core::network::US_CITIES;
use qcs_core::photon_mc::{ClockModel, SourceParams};
use qcs_core::snr_model::{ProtocolParams, RateParams};
use qcs_core::QcsError;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn field_error(path: &str, e: QcsError) -> ConfigError {
    match e {
        QcsError::InvalidParameter { name, reason } => ConfigError(format!("{path}.{name}: {reason}")),
        other => ConfigError(format!("{path}: {other}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SimulateLink,
    PassTrace,
    Shadow,
    Network,
    Analyze,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::SimulateLink => "simulate-link",
            Kind::PassTrace => "pass-trace",
            Kind::Shadow => "shadow",
            Kind::Network => "network",
            Kind::Analyze => "analyze",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_station: Option<StationSection>,
    #[serde(default)]
    pub hardware: HardwareSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub clock: ClockSection,
    #[serde(default)]
    pub analytic: AnalyticSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow: Option<ShadowSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    #[default]
    Prograde,
    Retrograde,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    pub altitude_km: f64,
    #[serde(default = "ninety")]
    pub inclination_deg: f64,
    #[serde(default)]
    pub raan_deg: f64,
    #[serde(default)]
    pub initial_phase_deg: f64,
    #[serde(default)]
    pub direction: DirectionName,
}

fn ninety() -> f64 {
    90.0
}

impl OrbitSection {
    pub fn to_core(&self) -> Result<OrbitConfig, ConfigError> {
        if !(self.altitude_km.is_finite() && self.altitude_km > 0.0) {
            return Err(ConfigError(format!("orbit.altitude_km: must be > 0, got {}", self.altitude_km)));
        }
        let direction = match self.direction {
            DirectionName::Prograde => OrbitDirection::Prograde,
            DirectionName::Retrograde => OrbitDirection::Retrograde,
        };
        OrbitConfig::new(
            self.altitude_km * 1e3,
            self.inclination_deg.to_radians(),
            self.raan_deg.to_radians(),
            self.initial_phase_deg.to_radians(),
            direction,
        )
        .map_err(|e| field_error("orbit", e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSection {
    #[serde(default = "default_station_name")]
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default = "yes")]
    pub rotating: bool,
}

fn default_station_name() -> String {
    "gs".into()
}

fn yes() -> bool {
    true
}

impl StationSection {
    pub fn to_core(&self, path: &str) -> Result<GroundStationConfig, ConfigError> {
        let gs = GroundStationConfig::from_degrees(self.name.clone(), self.latitude_deg, self.longitude_deg)
            .map_err(|e| field_error(path, e))?;
        Ok(if self.rotating { gs } else { gs.fixed() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareSection {
    pub wavelength_nm: f64,
    pub tx_radius_sat_m: f64,
    pub tx_radius_gs_m: f64,
    pub rx_radius_sat_m: f64,
    pub rx_radius_gs_m: f64,
    pub det_eff_sat: f64,
    pub det_eff_gs: f64,
    pub eta_atm_zenith: f64,
    pub fill_fraction: f64,
}

impl Default for HardwareSection {
    fn default() -> Self {
        let h = HardwareParams::default();
        Self {
            wavelength_nm: h.wavelength_m * 1e9,
            tx_radius_sat_m: h.tx_radius_sat_m,
            tx_radius_gs_m: h.tx_radius_gs_m,
            rx_radius_sat_m: h.rx_radius_sat_m,
            rx_radius_gs_m: h.rx_radius_gs_m,
            det_eff_sat: h.det_eff_sat,
            det_eff_gs: h.det_eff_gs,
            eta_atm_zenith: h.eta_atm_zenith,
            fill_fraction: h.fill_fraction,
        }
    }
}

impl HardwareSection {
    pub fn to_core(&self) -> Result<HardwareParams, ConfigError> {
        let h = HardwareParams {
            wavelength_m: self.wavelength_nm * 1e-9,
            tx_radius_sat_m: self.tx_radius_sat_m,
            tx_radius_gs_m: self.tx_radius_gs_m,
            rx_radius_sat_m: self.rx_radius_sat_m,
            rx_radius_gs_m: self.rx_radius_gs_m,
            det_eff_sat: self.det_eff_sat,
            det_eff_gs: self.det_eff_gs,
            eta_atm_zenith: self.eta_atm_zenith,
            fill_fraction: self.fill_fraction,
        };
        h.validate().map_err(|e| field_error("hardware", e))?;
        Ok(h)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub pair_rate_hz: f64,
    pub bkg_rate_gs_hz: f64,
    pub bkg_rate_sat_hz: f64,
    pub dark_rate_hz: f64,
    pub jitter_sigma_ps: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let s = SourceParams::default();
        Self {
            pair_rate_hz: s.pair_rate_hz,
            bkg_rate_gs_hz: s.bkg_rate_gs_hz,
            bkg_rate_sat_hz: s.bkg_rate_sat_hz,
            dark_rate_hz: s.dark_rate_hz,
            jitter_sigma_ps: s.jitter_sigma_s * 1e12,
        }
    }
}

impl SourceSection {
    pub fn to_core(&self, seed: u64) -> Result<SourceParams, ConfigError> {
        let s = SourceParams {
            pair_rate_hz: self.pair_rate_hz,
            bkg_rate_gs_hz: self.bkg_rate_gs_hz,
            bkg_rate_sat_hz: self.bkg_rate_sat_hz,
            dark_rate_hz: self.dark_rate_hz,
            jitter_sigma_s: self.jitter_sigma_ps * 1e-12,
            seed,
        };
        s.validate().map_err(|e| field_error("source", e))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub t_bin_ns: f64,
    pub n_min: f64,
    pub snr_threshold: f64,
    pub guard_bins: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let p = ProtocolParams::default();
        Self {
            t_bin_ns: p.t_bin_s * 1e9,
            n_min: p.n_min,
            snr_threshold: p.snr_threshold,
            guard_bins: qcs_core::correlation::DEFAULT_GUARD_BINS,
        }
    }
}

impl ProtocolSection {
    pub fn to_core(&self) -> Result<ProtocolParams, ConfigError> {
        let p = ProtocolParams {
            t_bin_s: self.t_bin_ns * 1e-9,
            n_min: self.n_min,
            snr_threshold: self.snr_threshold,
            ..ProtocolParams::default()
        };
        p.validate().map_err(|e| field_error("protocol", e))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClockSection {
    pub offset_us: f64,
}

impl ClockSection {
    pub fn to_core(&self) -> Result<ClockModel, ConfigError> {
        if !self.offset_us.is_finite() {
            return Err(ConfigError("clock.offset_us: must be finite".into()));
        }
        Ok(ClockModel { offset_s: self.offset_us * 1e-6 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDirection {
    #[default]
    Uplink,
    Downlink,
}

impl From<LinkDirection> for Direction {
    fn from(d: LinkDirection) -> Self {
        match d {
            LinkDirection::Uplink => Direction::Uplink,
            LinkDirection::Downlink => Direction::Downlink,
        }
    }
}

/// Inputs of the closed-form precision model used by pass traces, shadows and
/// network timelines.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticSection {
    pub pair_rate_hz: f64,
    pub bkg_rate_hz: f64,
    pub n_min: f64,
    pub snr_threshold: f64,
    pub jitter_sigma_ps: f64,
    pub t_bin_floor_ps: f64,
    pub pass_cap_s: f64,
    pub direction: LinkDirection,
}

impl Default for AnalyticSection {
    fn default() -> Self {
        let r = RateParams::default();
        Self {
            pair_rate_hz: r.pair_rate_hz,
            bkg_rate_hz: 0.0,
            n_min: 10.0,
            snr_threshold: r.snr_threshold,
            jitter_sigma_ps: r.jitter_sigma_s * 1e12,
            t_bin_floor_ps: r.t_bin_floor_s * 1e12,
            pass_cap_s: r.pass_cap_s,
            direction: LinkDirection::Uplink,
        }
    }
}

impl AnalyticSection {
    pub fn to_core(&self) -> Result<RateParams, ConfigError> {
        let checks = [
            ("pair_rate_hz", self.pair_rate_hz, 0.0),
            ("bkg_rate_hz", self.bkg_rate_hz, 0.0),
            ("n_min", self.n_min, 1.0),
            ("snr_threshold", self.snr_threshold, 0.0),
            ("jitter_sigma_ps", self.jitter_sigma_ps, 0.0),
            ("t_bin_floor_ps", self.t_bin_floor_ps, 0.0),
            ("pass_cap_s", self.pass_cap_s, 0.0),
        ];
        for (name, v, min) in checks {
            if !(v.is_finite() && v >= min) {
                return Err(ConfigError(format!("analytic.{name}: must be finite and >= {min}, got {v}")));
            }
        }
        Ok(RateParams {
            pair_rate_hz: self.pair_rate_hz,
            bkg_rate_hz: self.bkg_rate_hz,
            n_min: self.n_min,
            snr_threshold: self.snr_threshold,
            jitter_sigma_s: self.jitter_sigma_ps * 1e-12,
            t_bin_floor_s: self.t_bin_floor_ps * 1e-12,
            pass_cap_s: self.pass_cap_s,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramOutput {
    /// Bins within `hist_half_span_bins` of each peak.
    #[default]
    AroundPeak,
    /// Every non-empty bin.
    Nonzero,
    /// Every bin of the search window.
    Full,
    None,
}

/// Correlation settings shared by `simulate-link` and `analyze`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    #[serde(default = "one")]
    pub bin_ticks: u64,
    /// Explicit `[-T, T]` search window; derived from the link prior when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_half_width_ns: Option<f64>,
    #[serde(default)]
    pub histograms: HistogramOutput,
    #[serde(default = "default_half_span")]
    pub hist_half_span_bins: usize,
    /// Also run the widening bin / shortening acquisition search.
    #[serde(default)]
    pub search: bool,
}

impl Default for CorrelationSection {
    fn default() -> Self {
        Self {
            bin_ticks: 1,
            tau_half_width_ns: None,
            histograms: HistogramOutput::default(),
            hist_half_span_bins: 200,
            search: false,
        }
    }
}

fn one() -> u64 {
    1
}

fn default_half_span() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinkGeometry {
    /// Ground station in the orbital plane, satellite `theta0_deg` past zenith.
    InPlane { theta0_deg: f64 },
    /// `orbit` and `ground_station` sections, propagated.
    Orbital,
    /// Constant range rate and efficiencies.
    Linear { distance_km: f64, range_rate_mps: f64, eta_up: f64, eta_down: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub geometry: LinkGeometry,
    /// Acquisition time; the optimum for the starting geometry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_acq_s: Option<f64>,
    #[serde(default = "one")]
    pub windows: u64,
    #[serde(default)]
    pub start_s: f64,
    /// Start-to-start spacing of successive windows; zero reuses the same stretch of pass.
    #[serde(default)]
    pub window_spacing_s: f64,
    #[serde(default)]
    pub dump: bool,
    #[serde(default)]
    pub correlation: CorrelationSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    #[serde(default)]
    pub start_s: f64,
    pub duration_s: f64,
    #[serde(default = "one_f")]
    pub step_s: f64,
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lat_min_deg: f64,
    pub lat_max_deg: f64,
    pub lon_min_deg: f64,
    pub lon_max_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowSection {
    #[serde(default)]
    pub epoch_s: f64,
    #[serde(default = "nine")]
    pub target_precision: f64,
    #[serde(default = "default_resolution")]
    pub resolution_deg: f64,
    #[serde(default = "yes")]
    pub stations_rotate: bool,
    /// Replaces the geometric K everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_k: Option<f64>,
    /// Explicit grid; the visibility bounding box when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

fn nine() -> f64 {
    9.0
}

fn default_resolution() -> f64 {
    qcs_core::shadow::DEFAULT_RESOLUTION_DEG
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "default_stations")]
    pub stations: Vec<StationSection>,
    #[serde(default = "default_day")]
    pub duration_s: f64,
    #[serde(default = "one_f")]
    pub step_s: f64,
    #[serde(default = "default_holdovers")]
    pub holdover_s: Vec<f64>,
    #[serde(default = "nine")]
    pub sat_clock_precision: f64,
    #[serde(default = "nine")]
    pub target_precision: f64,
    /// Place a polar orbit so that it crosses the stations' centroid northbound at
    /// `centroid_crossing_s`, overriding the orbit angles.
    #[serde(default = "yes")]
    pub orbit_through_centroid: bool,
    /// Defaults to the middle of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid_crossing_s: Option<f64>,
}

fn default_stations() -> Vec<StationSection> {
    US_CITIES
        .iter()
        .map(|&(name, lat, lon)| StationSection {
            name: name.into(),
            latitude_deg: lat,
            longitude_deg: lon,
            rotating: true,
        })
        .collect()
}

fn default_day() -> f64 {
    qcs_core::network::DAY_S
}

fn default_holdovers() -> Vec<f64> {
    vec![0.0, 240.0, 600.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub up_local: PathBuf,
    pub up_remote: PathBuf,
    pub down_local: PathBuf,
    pub down_remote: PathBuf,
    /// Prior on the link distance, used for the search window when
    /// `correlation.tau_half_width_ns` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_distance_km: Option<f64>,
    #[serde(default)]
    pub offset_prior_us: f64,
    #[serde(default)]
    pub correlation: CorrelationSection,
}

/// Parses a scenario or a manifest written by a previous run.
pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("tool") && map.contains_key("config") => {
            map.remove("config").expect("checked above")
        }
        other => other,
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            ConfigError(e.into_inner().to_string())
        } else {
            ConfigError(format!("{path}: {}", e.into_inner()))
        }
    })
}

pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl Scenario {
    /// Fills in the kind-specific section and checks everything the run needs.
    pub fn resolve(mut self, kind: Kind, seed: Option<u64>, base_dir: &Path) -> Result<Self, ConfigError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(ConfigError(format!("kind: config is for `{}`, not `{}`", k.name(), kind.name())));
            }
        }
        self.kind = Some(kind);
        if let Some(s) = seed {
            self.seed = s;
        }
        self.hardware.to_core()?;
        self.source.to_core(self.seed)?;
        self.protocol.to_core()?;
        self.clock.to_core()?;
        self.analytic.to_core()?;

        let need_orbit = |s: &Self| {
            s.orbit.as_ref().ok_or_else(|| ConfigError("orbit: missing section".into())).and_then(|o| o.to_core())
        };
        let need_station = |s: &Self| {
            s.ground_station
                .as_ref()
                .ok_or_else(|| ConfigError("ground_station: missing section".into()))
                .and_then(|g| g.to_core("ground_station"))
        };
        match kind {
            Kind::SimulateLink => {
                let link = self.link.as_ref().ok_or_else(|| ConfigError("link: missing section".into()))?;
                check_correlation(&link.correlation, "link.correlation")?;
                if !(link.windows >= 1) {
                    return Err(ConfigError("link.windows: must be >= 1".into()));
                }
                if let Some(t) = link.t_acq_s {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(ConfigError(format!("link.t_acq_s: must be > 0, got {t}")));
                    }
                }
                match &link.geometry {
                    LinkGeometry::InPlane { theta0_deg } => {
                        need_orbit(&self)?;
                        if !(theta0_deg.abs() < 90.0) {
                            return Err(ConfigError("link.theta0_deg: must lie in (-90, 90)".into()));
                        }
                    }
                    LinkGeometry::Orbital => {
                        need_orbit(&self)?;
                        need_station(&self)?;
                    }
                    LinkGeometry::Linear { distance_km, eta_up, eta_down, .. } => {
                        if !(*distance_km >= 0.0) {
                            return Err(ConfigError("link.distance_km: must be >= 0".into()));
                        }
                        for (name, e) in [("eta_up", eta_up), ("eta_down", eta_down)] {
                            if !(0.0..=1.0).contains(e) {
                                return Err(ConfigError(format!("link.{name}: must lie in [0, 1]")));
                            }
                        }
                    }
                }
            }
            Kind::PassTrace => {
                need_orbit(&self)?;
                need_station(&self)?;
                let t = self.trace.as_ref().ok_or_else(|| ConfigError("trace: missing section".into()))?;
                if !(t.duration_s >= 0.0 && t.step_s > 0.0) {
                    return Err(ConfigError("trace: duration_s must be >= 0 and step_s > 0".into()));
                }
            }
            Kind::Shadow => {
                need_orbit(&self)?;
                let s = self.shadow.get_or_insert_with(|| ShadowSection {
                    epoch_s: 0.0,
                    target_precision: nine(),
                    resolution_deg: default_resolution(),
                    stations_rotate: true,
                    fixed_k: None,
                    grid: None,
                });
                if !(s.resolution_deg >= qcs_core::shadow::MIN_RESOLUTION_DEG) {
                    return Err(ConfigError(format!(
                        "shadow.resolution_deg: must be >= {}, got {}",
                        qcs_core::shadow::MIN_RESOLUTION_DEG,
                        s.resolution_deg
                    )));
                }
            }
            Kind::Network => {
                need_orbit(&self)?;
                let n = self.network.get_or_insert_with(|| NetworkSection {
                    stations: default_stations(),
                    duration_s: default_day(),
                    step_s: 1.0,
                    holdover_s: default_holdovers(),
                    sat_clock_precision: nine(),
                    target_precision: nine(),
                    orbit_through_centroid: true,
                    centroid_crossing_s: None,
                });
                if n.orbit_through_centroid && n.centroid_crossing_s.is_none() {
                    n.centroid_crossing_s = Some(n.duration_s / 2.0);
                }
                for (i, s) in n.stations.iter().enumerate() {
                    s.to_core(&format!("network.stations[{i}]"))?;
                }
                if n.stations.len() < 2 {
                    return Err(ConfigError("network.stations: need at least two stations".into()));
                }
                if !(n.step_s >= 1.0) {
                    return Err(ConfigError(format!("network.step_s: must be >= 1, got {}", n.step_s)));
                }
                if n.holdover_s.iter().any(|h| !(*h >= 0.0)) {
                    return Err(ConfigError("network.holdover_s: entries must be >= 0".into()));
                }
            }
            Kind::Analyze => {
                let a = self.analyze.as_mut().ok_or_else(|| ConfigError("analyze: missing section".into()))?;
                check_correlation(&a.correlation, "analyze.correlation")?;
                if a.correlation.tau_half_width_ns.is_none() && a.max_distance_km.is_none() {
                    return Err(ConfigError(
                        "analyze: set correlation.tau_half_width_ns or max_distance_km to bound the search window"
                            .into(),
                    ));
                }
                for p in [&mut a.up_local, &mut a.up_remote, &mut a.down_local, &mut a.down_remote] {
                    if p.is_relative() {
                        *p = base_dir.join(&*p);
                    }
                }
            }
        }
        Ok(self)
    }
}

fn check_correlation(c: &CorrelationSection, path: &str) -> Result<(), ConfigError> {
    if c.bin_ticks == 0 {
        return Err(ConfigError(format!("{path}.bin_ticks: must be >= 1")));
    }
    if let Some(t) = c.tau_half_width_ns {
        if !(t > 0.0 && t.is_finite()) {
            return Err(ConfigError(format!("{path}.tau_half_width_ns: must be > 0, got {t}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_altitude_is_named() {
        let err = parse(r#"{"orbit": {"inclination_deg": 90}}"#).unwrap_err();
        assert!(err.0.contains("orbit") && err.0.contains("altitude_km"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = parse(r#"{"hardware": {"wavelength_m": 8e-7}}"#).unwrap_err();
        assert!(err.0.contains("hardware") && err.0.contains("wavelength_m"), "{err}");
    }

    #[test]
    fn manifest_wrapper_is_unwrapped() {
        let s = parse(r#"{"tool": "qcs", "version": "0", "config": {"seed": 7}}"#).unwrap();
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn resolved_config_reparses_to_the_same_values() {
        let text = r#"{"orbit": {"altitude_km": 500},
                       "link": {"geometry": {"type": "in-plane", "theta0_deg": 2.0}}}"#;
        let s = parse(text).unwrap().resolve(Kind::SimulateLink, Some(3), Path::new(".")).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let again = parse(&json).unwrap().resolve(Kind::SimulateLink, None, Path::new(".")).unwrap();
        assert_eq!(json, serde_json::to_string(&again).unwrap());
        assert_eq!(again.seed, 3);
    }

    #[test]
    fn kind_mismatch_is_a_config_error() {
        let s = parse(r#"{"kind": "shadow", "orbit": {"altitude_km": 500}}"#).unwrap();
        assert!(s.resolve(Kind::Network, None, Path::new(".")).is_err());
    }

    #[test]
    fn invalid_values_name_the_field() {
        let s = parse(r#"{"orbit": {"altitude_km": -1}}"#).unwrap();
        let err = s.resolve(Kind::Shadow, None, Path::new(".")).unwrap_err();
        assert!(err.0.starts_with("orbit.altitude_km"), "{err}");
    }

    #[test]
    fn bundled_scenarios_resolve() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
        let mut n = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let s = load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let kind = s.kind.unwrap_or_else(|| panic!("{}: no kind", path.display()));
            s.resolve(kind, None, &dir).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
        assert!(n > 0);
    }
}
