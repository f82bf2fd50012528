//! `simulate-link`: Monte Carlo two-way exchanges, correlated and analysed.

use rayon::prelude::*;

use qcs_core::correlation::{
    cross_correlate, measure_snr, offset_from_peaks, CorrelationHistogram, PeakReport, TauWindow, DEFAULT_GUARD_BINS,
};
use qcs_core::geometry::{
    horizon_central_angle, inplane_configuration, inplane_link_distance, link_geometry, Propagate, SPEED_OF_LIGHT,
};
use qcs_core::photon_mc::{
    simulate_two_way_link, write_dump, AcquisitionWindow, LinearLink, LinkScenario, LinkTrajectory, OrbitalLink,
    TwoWayTimestamps,
};
use qcs_core::snr_model::{
    operational_search, optimal_acquisition_time, ProtocolParams, SearchLimits, SearchOutcome, TwoWaySets,
};
use qcs_core::{Direction, QcsError};

use crate::config::{CorrelationSection, HistogramOutput, LinkGeometry, Scenario};
use crate::output::{Csv, Field, OutputDir};
use crate::RunError;

const SUMMARY_HEADER: &[&str] = &[
    "window",
    "start_s",
    "t_acq_s",
    "visible",
    "n_a_up",
    "n_b_up",
    "n_b_dwn",
    "n_a_dwn",
    "tau_ab_s",
    "height_ab",
    "snr_ab",
    "above_ab",
    "tau_ba_s",
    "height_ba",
    "snr_ba",
    "above_ba",
    "unique",
    "delta_hat_s",
    "delta_error_s",
    "travel_time_s",
    "search_status",
    "search_t_bin_s",
    "search_t_acq_s",
    "search_delta_s",
];

pub fn run(sc: &Scenario, out: &OutputDir) -> Result<(), RunError> {
    let link = sc.link.as_ref().expect("resolved");
    let hardware = sc.hardware.to_core()?;
    let source = sc.source.to_core(sc.seed)?;
    let clock = sc.clock.to_core()?;
    let t_bin = sc.protocol.to_core()?.t_bin_s;

    match &link.geometry {
        LinkGeometry::InPlane { theta0_deg } => {
            let h = sc.orbit.as_ref().expect("resolved").to_core()?.altitude_m;
            let (orbit, station) = inplane_configuration(theta0_deg.to_radians(), h);
            let horizon = inplane_link_distance(horizon_central_angle(h), h);
            let k = link_geometry(&orbit.state_at(link.start_s), &station.state_at(link.start_s))?.k_factor;
            let trajectory = OrbitalLink { orbit, station, hardware };
            let scenario = LinkScenario { trajectory, source, clock, t_bin_s: t_bin };
            run_windows(sc, &scenario, horizon, k, out)
        }
        LinkGeometry::Orbital => {
            let orbit = sc.orbit.as_ref().expect("resolved").to_core()?;
            let station = sc.ground_station.as_ref().expect("resolved").to_core("ground_station")?;
            let h = orbit.altitude_m;
            let horizon = inplane_link_distance(horizon_central_angle(h), h);
            let k = link_geometry(&orbit.state_at(link.start_s), &station.state_at(link.start_s))?.k_factor;
            let trajectory = OrbitalLink { orbit, station, hardware };
            let scenario = LinkScenario { trajectory, source, clock, t_bin_s: t_bin };
            run_windows(sc, &scenario, horizon, k, out)
        }
        LinkGeometry::Linear { distance_km, range_rate_mps, eta_up, eta_down } => {
            let k = if *range_rate_mps == 0.0 { f64::INFINITY } else { SPEED_OF_LIGHT / range_rate_mps.abs() };
            let span = link.start_s + link.window_spacing_s * (link.windows - 1) as f64 + link.t_acq_s.unwrap_or(0.0);
            let trajectory = LinearLink {
                distance0_m: distance_km * 1e3,
                range_rate_mps: *range_rate_mps,
                eta_up: *eta_up,
                eta_down: *eta_down,
                horizon_s: span.max(1e-3),
            };
            let max_distance = trajectory.max_distance_m();
            let scenario = LinkScenario { trajectory, source, clock, t_bin_s: t_bin };
            run_windows(sc, &scenario, max_distance, k, out)
        }
    }
}

pub fn tau_window(c: &CorrelationSection, max_distance_m: f64, offset_prior_s: f64, t_bin: f64) -> TauWindow {
    match c.tau_half_width_ns {
        Some(ns) => TauWindow::symmetric((ns * 1e-9 / t_bin).ceil() as i64),
        None => TauWindow::from_prior(max_distance_m, offset_prior_s, t_bin),
    }
}

struct WindowResult {
    row: Vec<Field<'static>>,
}

fn run_windows<T: LinkTrajectory>(
    sc: &Scenario,
    scenario: &LinkScenario<T>,
    max_distance_m: f64,
    k: f64,
    out: &OutputDir,
) -> Result<(), RunError> {
    let link = sc.link.as_ref().expect("resolved");
    let protocol = sc.protocol.to_core()?;
    let t_bin = scenario.t_bin_s;
    let t_acq =
        link.t_acq_s.unwrap_or_else(|| optimal_acquisition_time(k, t_bin * link.correlation.bin_ticks as f64, 1.0));
    let window = tau_window(&link.correlation, max_distance_m, scenario.clock.offset_s, t_bin);

    let rows: Vec<WindowResult> = (0..link.windows)
        .into_par_iter()
        .map(|id| {
            let acq =
                AcquisitionWindow { id, start_s: link.start_s + id as f64 * link.window_spacing_s, duration_s: t_acq };
            let ts = simulate_two_way_link(scenario, &acq)?;
            if link.dump {
                dump_sets(&ts, id, out)?;
            }
            let mut row = vec![Field::U(id), Field::F(acq.start_s), Field::F(t_acq), Field::B(ts.visible)];
            row.extend([&ts.a_up, &ts.b_up, &ts.b_dwn, &ts.a_dwn].map(|s| Field::U(s.len() as u64)));
            let analysis =
                analyse(&ts, &link.correlation, window, &protocol, sc.protocol.guard_bins, &format!("w{id:04}"), out)?;
            row.extend(analysis.fields(scenario.clock.offset_s));
            Ok(WindowResult { row })
        })
        .collect::<Result<_, RunError>>()?;

    let mut csv = Csv::new(SUMMARY_HEADER);
    for r in &rows {
        csv.row(&r.row);
    }
    out.write("windows.csv", &csv.into_bytes())?;
    Ok(())
}

fn dump_sets(ts: &TwoWayTimestamps, id: u64, out: &OutputDir) -> Result<(), RunError> {
    let sets = [
        ("a_up", &ts.a_up, Direction::Uplink),
        ("b_up", &ts.b_up, Direction::Uplink),
        ("b_dwn", &ts.b_dwn, Direction::Downlink),
        ("a_dwn", &ts.a_dwn, Direction::Downlink),
    ];
    for (name, set, dir) in sets {
        let mut buf = Vec::new();
        write_dump(set, dir, &mut buf)?;
        out.write(&format!("w{id:04}_{name}.qts"), &buf)?;
    }
    Ok(())
}

/// Peaks of both histograms plus the optional operational search.
pub struct Analysis {
    pub ab: PeakReport,
    pub ba: PeakReport,
    pub search: Option<Result<SearchOutcome, QcsError>>,
}

impl Analysis {
    pub fn delta_and_travel(&self) -> (f64, f64) {
        offset_from_peaks(self.ab.tau_max_s, self.ba.tau_max_s)
    }

    pub fn fields(&self, truth_offset_s: f64) -> Vec<Field<'static>> {
        let (delta, travel) = self.delta_and_travel();
        let peak = |p: &PeakReport| {
            [Field::F(p.tau_max_s), Field::U(p.height), Field::F(p.snr), Field::U(p.n_peaks_above_threshold as u64)]
        };
        let mut v: Vec<Field<'static>> = Vec::new();
        v.extend(peak(&self.ab));
        v.extend(peak(&self.ba));
        v.push(Field::B(self.ab.is_unique && self.ba.is_unique));
        v.push(Field::F(delta));
        v.push(Field::F(delta - truth_offset_s));
        v.push(Field::F(travel));
        match &self.search {
            None => v.extend([Field::S("skipped"), Field::F(f64::NAN), Field::F(f64::NAN), Field::F(f64::NAN)]),
            Some(Ok(s)) => {
                v.extend([Field::S("ok"), Field::F(s.t_bin_s), Field::F(s.t_acq_s), Field::F(s.estimate.delta_s)])
            }
            Some(Err(_)) => v.extend([Field::S("failed"), Field::F(f64::NAN), Field::F(f64::NAN), Field::F(f64::NAN)]),
        }
        v
    }
}

pub fn analyse(
    ts: &TwoWayTimestamps,
    c: &CorrelationSection,
    window: TauWindow,
    protocol: &ProtocolParams,
    guard_bins: usize,
    prefix: &str,
    out: &OutputDir,
) -> Result<Analysis, RunError> {
    let guard = |h: CorrelationHistogram| if guard_bins == DEFAULT_GUARD_BINS { h } else { h.with_guard(guard_bins) };
    let ab = guard(cross_correlate(&ts.a_up, &ts.b_up, c.bin_ticks, window)?);
    let ba = guard(cross_correlate(&ts.b_dwn, &ts.a_dwn, c.bin_ticks, window)?);
    let pa = measure_snr(&ab, protocol.snr_threshold)?;
    let pb = measure_snr(&ba, protocol.snr_threshold)?;
    write_histogram(&ab, c, &format!("{prefix}_hist_up.csv"), out)?;
    write_histogram(&ba, c, &format!("{prefix}_hist_dwn.csv"), out)?;
    drop((ab, ba));
    let search = c.search.then(|| {
        let sets =
            TwoWaySets { up_local: &ts.a_up, up_remote: &ts.b_up, down_local: &ts.b_dwn, down_remote: &ts.a_dwn };
        operational_search(sets, window, protocol.snr_threshold, protocol.n_min, SearchLimits::default())
    });
    if let Some(Err(e)) = &search {
        if !matches!(e, QcsError::ProtocolFailure { .. }) {
            return Err(e.clone().into());
        }
    }
    Ok(Analysis { ab: pa, ba: pb, search })
}

fn write_histogram(
    h: &CorrelationHistogram,
    c: &CorrelationSection,
    name: &str,
    out: &OutputDir,
) -> Result<(), RunError> {
    let range: Box<dyn Iterator<Item = usize>> = match c.histograms {
        HistogramOutput::None => return Ok(()),
        HistogramOutput::Full => Box::new(0..h.len()),
        HistogramOutput::Nonzero => Box::new((0..h.len()).filter(|&k| h.counts[k] > 0)),
        HistogramOutput::AroundPeak => {
            let k = h.argmax().unwrap_or(0);
            let lo = k.saturating_sub(c.hist_half_span_bins);
            let hi = (k + c.hist_half_span_bins + 1).min(h.len());
            Box::new(lo..hi)
        }
    };
    let mut csv = Csv::new(&["tau_s", "count", "snr_per_bin"]);
    for k in range {
        csv.row(&[Field::F(h.bin_center_s(k)), Field::U(h.counts[k]), Field::F(h.snr_of_bin(k))]);
    }
    out.write(name, &csv.into_bytes())?;
    Ok(())
}
