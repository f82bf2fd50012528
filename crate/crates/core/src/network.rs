//! Day-scale synchronization timelines for several ground stations sharing one
//! satellite, with optional satellite clock holdover.
//!
//! Precisions are `-log10(t_bin)`; `0.0` stands for "no link".

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::{link_geometry, GroundStationConfig, OrbitConfig, Propagate, EARTH_ROTATION_RATE};
use crate::link_budget::{channel_efficiency, Direction, HardwareParams};
use crate::snr_model::{precision_result, PrecisionResult, RateParams};

/// Reference cities: name, latitude and longitude in degrees.
pub const US_CITIES: [(&str, f64, f64); 4] =
    [("NYC", 40.7128, -74.0060), ("ATL", 33.7490, -84.3880), ("LA", 34.0522, -118.2437), ("SEA", 47.6062, -122.3321)];

pub const DEFAULT_STEP_S: f64 = 1.0;
pub const DAY_S: f64 = 86_400.0;

pub fn us_cities() -> Vec<GroundStationConfig> {
    US_CITIES
        .iter()
        .map(|&(n, lat, lon)| GroundStationConfig::from_degrees(n, lat, lon).expect("valid city coordinates"))
        .collect()
}

/// Polar orbit whose sub-satellite point at `crossing_s` is the stations' centroid
/// (northbound).
pub fn centroid_pass_orbit(stations: &[GroundStationConfig], altitude_m: f64, crossing_s: f64) -> OrbitConfig {
    let n = stations.len().max(1) as f64;
    let lat = stations.iter().map(|s| s.latitude_rad).sum::<f64>() / n;
    let lon = stations.iter().map(|s| s.longitude_rad).sum::<f64>() / n;
    let probe = OrbitConfig::polar(altitude_m, 0.0, 0.0);
    OrbitConfig::polar(altitude_m, lon + EARTH_ROTATION_RATE * crossing_s, lat - probe.angular_rate() * crossing_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub hardware: HardwareParams,
    pub rates: RateParams,
    pub direction: Direction,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            hardware: HardwareParams::default(),
            rates: RateParams { n_min: 10.0, bkg_rate_hz: 0.0, ..RateParams::default() },
            direction: Direction::Uplink,
        }
    }
}

/// Per-epoch link precision of one station.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSeries {
    pub station: String,
    pub step_s: f64,
    /// `None` while the satellite is below the horizon.
    pub results: Vec<Option<PrecisionResult>>,
}

impl LinkSeries {
    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    pub fn epoch_s(&self, i: usize) -> f64 {
        i as f64 * self.step_s
    }

    /// Precision per epoch, `0.0` when invisible or unattainable.
    pub fn precision(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.map_or(0.0, |r| r.precision())).collect()
    }
}

/// Analytic link precision sampled every `step_s` over `[0, duration_s)`.
pub fn link_precision_series(
    gs: &GroundStationConfig,
    orbit: &OrbitConfig,
    model: &LinkModel,
    duration_s: f64,
    step_s: f64,
) -> Result<LinkSeries> {
    if !(step_s >= 1.0) {
        return Err(invalid("step_s", format!("must be >= 1 s, got {step_s}")));
    }
    if !(duration_s >= 0.0) {
        return Err(invalid("duration_s", format!("must be >= 0, got {duration_s}")));
    }
    orbit.validate()?;
    gs.validate()?;
    let n = (duration_s / step_s).ceil() as usize;
    let results = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * step_s;
            let geom = link_geometry(&orbit.state_at(t), &gs.state_at(t)).ok()?;
            if !geom.visible {
                return None;
            }
            let eta = channel_efficiency(model.direction, &geom, &model.hardware).eta_total;
            Some(precision_result(eta, geom.k_factor, &model.rates))
        })
        .collect();
    Ok(LinkSeries { station: gs.name.clone(), step_s, results })
}

/// Pairwise precision after holdover.
///
/// With `holdover_s == 0` only simultaneous links count: `min(p1(t), p2(t))`.
/// Otherwise `min(p1(t), C, max p2(t'))` over `|t' - t| <= ceil(holdover / 2 / step)` epochs.
pub fn combine_with_holdover(
    p1: &[f64],
    p2: &[f64],
    step_s: f64,
    holdover_s: f64,
    sat_clock_precision: f64,
) -> Result<Vec<f64>> {
    if p1.len() != p2.len() {
        return Err(invalid("series", format!("length mismatch: {} vs {}", p1.len(), p2.len())));
    }
    if holdover_s <= 0.0 {
        return Ok(p1.iter().zip(p2).map(|(&a, &b)| if a > 0.0 && b > 0.0 { a.min(b) } else { 0.0 }).collect());
    }
    let w = (holdover_s / 2.0 / step_s).ceil() as usize;
    let best = sliding_max(p2, w);
    Ok(p1
        .iter()
        .zip(best)
        .map(|(&a, b)| if a > 0.0 && b > 0.0 { a.min(b).min(sat_clock_precision) } else { 0.0 })
        .collect())
}

/// `out[i] = max(x[i-w ..= i+w])`, clipped to the series.
fn sliding_max(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for (i, slot) in out.iter_mut().enumerate() {
        while next < n && next <= i + w {
            while dq.back().is_some_and(|&b| x[b] <= x[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + w < i) {
            dq.pop_front();
        }
        *slot = x[*dq.front().expect("window is never empty")];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailySummary {
    /// Maximal runs of consecutive epochs meeting the target.
    pub connections: usize,
    pub longest_gap_s: f64,
    pub connected_fraction: f64,
}

/// Connection statistics of a combined series against `target` precision.
pub fn daily_summary(combined: &[f64], step_s: f64, target: f64) -> DailySummary {
    if combined.is_empty() {
        return DailySummary { connections: 0, longest_gap_s: 0.0, connected_fraction: 0.0 };
    }
    let meets = |p: f64| p > 0.0 && p >= target - 1e-12;
    let mut connections = 0;
    let mut hits = 0usize;
    let mut gap = 0usize;
    let mut longest = 0usize;
    let mut prev = false;
    for &p in combined {
        let m = meets(p);
        if m {
            hits += 1;
            if !prev {
                connections += 1;
            }
            gap = 0;
        } else {
            gap += 1;
            longest = longest.max(gap);
        }
        prev = m;
    }
    DailySummary {
        connections,
        longest_gap_s: longest as f64 * step_s,
        connected_fraction: hits as f64 / combined.len() as f64,
    }
}

/// Combined timeline of one station pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTimeline {
    pub first: usize,
    pub second: usize,
    pub name: String,
    pub holdover_s: f64,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub combined: Vec<f64>,
}

/// All unordered station pairs `(i, j)` with `i < j`.
pub fn station_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Link series for every station, then pair timelines for one holdover.
pub fn pair_timelines(series: &[LinkSeries], holdover_s: f64, sat_clock_precision: f64) -> Result<Vec<PairTimeline>> {
    let prec: Vec<Vec<f64>> = series.iter().map(LinkSeries::precision).collect();
    station_pairs(series.len())
        .into_par_iter()
        .map(|(i, j)| {
            let step = series[i].step_s;
            Ok(PairTimeline {
                first: i,
                second: j,
                name: format!("{}-{}", series[i].station, series[j].station),
                holdover_s,
                combined: combine_with_holdover(&prec[i], &prec[j], step, holdover_s, sat_clock_precision)?,
                p1: prec[i].clone(),
                p2: prec[j].clone(),
            })
        })
        .collect()
}
