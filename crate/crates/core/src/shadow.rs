//! Precision shadows: where on the ground a station could sync with the
//! satellite at a given precision, at one instant.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::{
    horizon_central_angle, link_geometry, sub_satellite_point, track_azimuth, wrap_angle, BodyState,
    GroundStationConfig, Propagate, EARTH_ROTATION_RATE,
};
use crate::link_budget::{channel_efficiency, Direction, HardwareParams};
use crate::snr_model::{precision_result, Binding, PrecisionResult, RateParams};

/// Finest grid resolution accepted, in degrees.
pub const MIN_RESOLUTION_DEG: f64 = 0.1;
pub const DEFAULT_RESOLUTION_DEG: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowParams {
    pub hardware: HardwareParams,
    pub rates: RateParams,
    pub direction: Direction,
    /// Whether virtual stations turn with the Earth.
    pub stations_rotate: bool,
    /// Replaces the geometric K everywhere, leaving only loss to vary.
    pub fixed_k: Option<f64>,
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self {
            hardware: HardwareParams::default(),
            rates: RateParams { n_min: 10.0, bkg_rate_hz: 0.0, ..RateParams::default() },
            direction: Direction::Uplink,
            stations_rotate: true,
            fixed_k: None,
        }
    }
}

/// Achievable precision for a station at `(lat, lon)` (Earth-fixed, radians);
/// `None` when the satellite is below its horizon.
pub fn precision_at_point(
    sat: &BodyState,
    lat_rad: f64,
    lon_rad: f64,
    params: &ShadowParams,
) -> Option<PrecisionResult> {
    let mut gs = GroundStationConfig::new("cell", lat_rad, lon_rad).ok()?;
    gs.rotating = params.stations_rotate;
    if !gs.rotating {
        // keep the Earth-fixed longitude at the satellite epoch
        gs.longitude_rad += crate::geometry::EARTH_ROTATION_RATE * sat.epoch_s;
    }
    let geom = link_geometry(sat, &gs.state_at(sat.epoch_s)).ok()?;
    if !geom.visible {
        return None;
    }
    let eta = channel_efficiency(params.direction, &geom, &params.hardware).eta_total;
    let k = params.fixed_k.unwrap_or(geom.k_factor);
    Some(precision_result(eta, k, &params.rates))
}

/// Regular latitude/longitude grid; nodes sit at `min + i * resolution`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lat_min_deg: f64,
    pub lat_max_deg: f64,
    pub lon_min_deg: f64,
    pub lon_max_deg: f64,
    pub resolution_deg: f64,
}

impl GridSpec {
    /// Bounding box of the satellite's visibility footprint.
    pub fn visibility_box(sat: &BodyState, resolution_deg: f64) -> Self {
        let (lat0, lon0) = sub_satellite_point(sat);
        let h = sat.position_m.norm() - crate::geometry::EARTH_RADIUS_M;
        let rho = horizon_central_angle(h).to_degrees() + 2.0 * resolution_deg;
        let (lat0, lon0) = (lat0.to_degrees(), lon0.to_degrees());
        let lat_min = (lat0 - rho).max(-90.0);
        let lat_max = (lat0 + rho).min(90.0);
        let widest = lat_min.abs().max(lat_max.abs());
        let half_lon = if widest >= 89.9 { 180.0 } else { (rho / widest.to_radians().cos()).min(180.0) };
        Self {
            lat_min_deg: snap(lat_min, lat0, resolution_deg, f64::ceil),
            lat_max_deg: snap(lat_max, lat0, resolution_deg, f64::floor),
            lon_min_deg: snap(lon0 - half_lon, lon0, resolution_deg, f64::floor),
            lon_max_deg: snap(lon0 + half_lon, lon0, resolution_deg, f64::ceil),
            resolution_deg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_deg >= MIN_RESOLUTION_DEG) {
            return Err(invalid(
                "resolution_deg",
                format!("must be >= {MIN_RESOLUTION_DEG}, got {}", self.resolution_deg),
            ));
        }
        if !(self.lat_min_deg <= self.lat_max_deg && self.lon_min_deg <= self.lon_max_deg) {
            return Err(invalid("grid", "min bound exceeds max bound"));
        }
        Ok(())
    }

    pub fn n_lat(&self) -> usize {
        ((self.lat_max_deg - self.lat_min_deg) / self.resolution_deg + 1e-9).floor() as usize + 1
    }

    pub fn n_lon(&self) -> usize {
        ((self.lon_max_deg - self.lon_min_deg) / self.resolution_deg + 1e-9).floor() as usize + 1
    }

    pub fn lat_deg(&self, i: usize) -> f64 {
        self.lat_min_deg + i as f64 * self.resolution_deg
    }

    pub fn lon_deg(&self, j: usize) -> f64 {
        self.lon_min_deg + j as f64 * self.resolution_deg
    }

    /// Nearest grid node to `(lat, lon)` in degrees.
    pub fn nearest(&self, lat_deg: f64, lon_deg: f64) -> Option<(usize, usize)> {
        let i = ((lat_deg - self.lat_min_deg) / self.resolution_deg).round();
        let dlon = wrap_angle((lon_deg - self.lon_min_deg).to_radians()).to_degrees();
        let dlon = if dlon < -0.5 * self.resolution_deg { dlon + 360.0 } else { dlon };
        let j = (dlon / self.resolution_deg).round();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.n_lat() && (j as usize) < self.n_lon())
            .then_some((i as usize, j as usize))
    }
}

// Aligns a bound to the lattice through `centre` so the sub-satellite point is a node.
fn snap(x: f64, centre: f64, res: f64, round: fn(f64) -> f64) -> f64 {
    centre + round((x - centre) / res) * res
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowCell {
    pub visible: bool,
    /// `-log10(t_bin)`; zero when not visible or unattainable.
    pub precision: f64,
    pub t_bin_s: f64,
    pub binding: Option<Binding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowGrid {
    pub spec: GridSpec,
    pub cells: Vec<ShadowCell>,
    pub mask: Vec<bool>,
    pub target_precision: f64,
    pub sat_state: BodyState,
    /// Earth-fixed sub-satellite point, degrees.
    pub sub_point_deg: (f64, f64),
}

impl ShadowGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.spec.n_lon() + j
    }

    pub fn cell(&self, i: usize, j: usize) -> &ShadowCell {
        &self.cells[self.index(i, j)]
    }

    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    /// Mask cells with at least one 4-neighbour outside the mask.
    pub fn boundary_cells(&self) -> Vec<(usize, usize)> {
        let (n, m) = (self.spec.n_lat(), self.spec.n_lon());
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if !self.in_mask(i, j) {
                    continue;
                }
                let edge = i == 0 || j == 0 || i + 1 == n || j + 1 == m;
                if edge
                    || !self.in_mask(i - 1, j)
                    || !self.in_mask(i + 1, j)
                    || !self.in_mask(i, j - 1)
                    || !self.in_mask(i, j + 1)
                {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Mask area in square degrees of arc (cells weighted by `cos(lat)`).
    pub fn mask_area_deg2(&self) -> f64 {
        let res = self.spec.resolution_deg;
        (0..self.spec.n_lat())
            .map(|i| {
                let w = self.spec.lat_deg(i).to_radians().cos() * res * res;
                (0..self.spec.n_lon()).filter(|&j| self.in_mask(i, j)).count() as f64 * w
            })
            .sum()
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Evaluates every grid node; `target_precision <= 0` means any visible cell.
pub fn compute_shadow(
    sat: &BodyState,
    grid: &GridSpec,
    target_precision: f64,
    params: &ShadowParams,
) -> Result<ShadowGrid> {
    grid.validate()?;
    params.hardware.validate()?;
    let (n, m) = (grid.n_lat(), grid.n_lon());
    let cells: Vec<ShadowCell> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let lat = grid.lat_deg(i).to_radians();
            (0..m).map(move |j| {
                let lon = grid.lon_deg(j).to_radians();
                match precision_at_point(sat, lat, lon, params) {
                    None => ShadowCell { visible: false, precision: 0.0, t_bin_s: f64::INFINITY, binding: None },
                    Some(r) => ShadowCell {
                        visible: true,
                        precision: r.precision(),
                        t_bin_s: r.t_bin_achievable_s,
                        binding: Some(r.binding_constraint),
                    },
                }
            })
        })
        .collect();
    let mask = cells.iter().map(|c| meets_target(c, target_precision)).collect();
    let (lat0, lon0) = sub_satellite_point(sat);
    Ok(ShadowGrid {
        spec: *grid,
        cells,
        mask,
        target_precision,
        sat_state: *sat,
        sub_point_deg: (lat0.to_degrees(), lon0.to_degrees()),
    })
}

fn meets_target(c: &ShadowCell, target: f64) -> bool {
    c.visible && (target <= 0.0 || (c.t_bin_s.is_finite() && c.precision >= target - 1e-12))
}

/// Point at angular distance `dist` along initial bearing `az` (radians).
fn destination(lat: f64, lon: f64, az: f64, dist: f64) -> (f64, f64) {
    let lat2 = (lat.sin() * dist.cos() + lat.cos() * dist.sin() * az.cos()).clamp(-1.0, 1.0).asin();
    let lon2 = lon + (az.sin() * dist.sin() * lat.cos()).atan2(dist.cos() - lat.sin() * lat2.sin());
    (lat2, lon2)
}

/// Great-circle length of the mask through the sub-satellite point along
/// bearing `az` (both ways), in degrees.
pub fn extent_along(grid: &ShadowGrid, az_rad: f64) -> f64 {
    let step = grid.spec.resolution_deg / 8.0;
    let (lat0, lon0) = (grid.sub_point_deg.0.to_radians(), grid.sub_point_deg.1.to_radians());
    let walk = |bearing: f64| {
        let mut count = 0usize;
        loop {
            let d = (count as f64 + 0.5) * step;
            if d > 180.0 {
                break;
            }
            let (la, lo) = destination(lat0, lon0, bearing, d.to_radians());
            match grid.spec.nearest(la.to_degrees(), lo.to_degrees()) {
                Some((i, j)) if grid.in_mask(i, j) => count += 1,
                _ => break,
            }
        }
        count
    };
    (walk(az_rad) + walk(az_rad + std::f64::consts::PI)) as f64 * step
}

/// Track azimuth in the frame of the virtual stations.
pub fn station_track_azimuth(sat: &BodyState, params: &ShadowParams) -> f64 {
    track_azimuth(sat, if params.stations_rotate { EARTH_ROTATION_RATE } else { 0.0 })
}

/// `(along, cross)` extents in degrees for a ground track with azimuth `track_az`.
pub fn shadow_extents(grid: &ShadowGrid, track_az_rad: f64) -> (f64, f64) {
    (extent_along(grid, track_az_rad), extent_along(grid, track_az_rad + std::f64::consts::FRAC_PI_2))
}

/// Run-length encoding of the mask in row-major order, starting with a run of `false`.
pub fn mask_run_lengths(grid: &ShadowGrid) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &m in &grid.mask {
        if m == current {
            len += 1;
        } else {
            runs.push(len);
            current = m;
            len = 1;
        }
    }
    runs.push(len);
    runs
}
