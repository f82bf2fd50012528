//! `analyze`: offset recovery from four dumped stamp sets.

use std::collections::BTreeMap;
use std::path::Path;

use qcs_core::photon_mc::{read_dump, TimestampSet, TwoWayTimestamps};
use qcs_core::{Direction, QcsError};

use crate::config::Scenario;
use crate::link::{analyse, tau_window};
use crate::output::{sha256_hex, Csv, Field, OutputDir};
use crate::RunError;

fn load(path: &Path, expect: Direction, inputs: &mut BTreeMap<String, String>) -> Result<TimestampSet, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    inputs.insert(path.display().to_string(), sha256_hex(&bytes));
    let (set, dir) = read_dump(bytes.as_slice()).map_err(|e| RunError::Runtime(format!("{}: {e}", path.display())))?;
    if dir != expect {
        return Err(RunError::Runtime(format!(
            "{}: holds {} stamps, expected {}",
            path.display(),
            dir.label(),
            expect.label()
        )));
    }
    Ok(set)
}

pub fn run(sc: &Scenario, out: &OutputDir) -> Result<BTreeMap<String, String>, RunError> {
    let cfg = sc.analyze.as_ref().expect("resolved");
    let protocol = sc.protocol.to_core()?;
    let mut inputs = BTreeMap::new();
    let a_up = load(&cfg.up_local, Direction::Uplink, &mut inputs)?;
    let b_up = load(&cfg.up_remote, Direction::Uplink, &mut inputs)?;
    let b_dwn = load(&cfg.down_local, Direction::Downlink, &mut inputs)?;
    let a_dwn = load(&cfg.down_remote, Direction::Downlink, &mut inputs)?;
    let t_bin = a_up.t_bin_s;
    if [&b_up, &b_dwn, &a_dwn].iter().any(|s| (s.t_bin_s - t_bin).abs() > 1e-12 * t_bin) {
        return Err(QcsError::TickMismatch { a: t_bin, b: b_up.t_bin_s }.into());
    }
    let window =
        tau_window(&cfg.correlation, cfg.max_distance_km.unwrap_or(0.0) * 1e3, cfg.offset_prior_us * 1e-6, t_bin);
    let origin = a_up.window.start.min(b_dwn.window.start);
    let ts = TwoWayTimestamps { a_up, b_up, b_dwn, a_dwn, origin_ticks: origin, visible: true };
    let analysis = analyse(&ts, &cfg.correlation, window, &protocol, sc.protocol.guard_bins, "analysis", out)?;

    let mut header = vec!["n_a_up", "n_b_up", "n_b_dwn", "n_a_dwn"];
    header.extend([
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
    ]);
    let mut csv = Csv::new(&header);
    let mut row: Vec<Field> = [&ts.a_up, &ts.b_up, &ts.b_dwn, &ts.a_dwn].map(|s| Field::U(s.len() as u64)).into();
    // no truth available: the error column stays empty
    row.extend(analysis.fields(f64::NAN));
    csv.row(&row);
    out.write("estimate.csv", &csv.into_bytes())?;
    Ok(inputs)
}
