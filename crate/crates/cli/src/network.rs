//! `network`: day-long pairwise synchronization timelines.

use rayon::prelude::*;

use qcs_core::network::{centroid_pass_orbit, daily_summary, link_precision_series, pair_timelines, LinkModel};

use crate::config::Scenario;
use crate::output::{Csv, Field, OutputDir};
use crate::RunError;

pub fn run(sc: &Scenario, out: &OutputDir) -> Result<(), RunError> {
    let cfg = sc.network.as_ref().expect("resolved");
    let stations = cfg
        .stations
        .iter()
        .enumerate()
        .map(|(i, s)| s.to_core(&format!("network.stations[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut orbit = sc.orbit.as_ref().expect("resolved").to_core()?;
    if cfg.orbit_through_centroid {
        orbit = centroid_pass_orbit(&stations, orbit.altitude_m, cfg.centroid_crossing_s.unwrap_or(0.0));
    }
    let model = LinkModel {
        hardware: sc.hardware.to_core()?,
        rates: sc.analytic.to_core()?,
        direction: sc.analytic.direction.into(),
    };
    let series = stations
        .iter()
        .map(|gs| link_precision_series(gs, &orbit, &model, cfg.duration_s, cfg.step_s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(crate::config_error)?;

    let mut summary = Csv::new(&[
        "pair",
        "holdover_s",
        "target_precision",
        "connections",
        "longest_gap_s",
        "connected_fraction",
        "best_precision",
    ]);
    for &holdover in &cfg.holdover_s {
        let timelines = pair_timelines(&series, holdover, cfg.sat_clock_precision)?;
        timelines.par_iter().try_for_each(|p| -> Result<(), RunError> {
            let mut csv = Csv::new(&["t_s", "p1", "p2", "combined"]);
            for i in 0..p.combined.len() {
                csv.row(&[
                    Field::F(i as f64 * cfg.step_s),
                    Field::F(p.p1[i]),
                    Field::F(p.p2[i]),
                    Field::F(p.combined[i]),
                ]);
            }
            out.write(&format!("pair_{}_h{}.csv", p.name, holdover), &csv.into_bytes())?;
            Ok(())
        })?;
        for p in &timelines {
            let d = daily_summary(&p.combined, cfg.step_s, cfg.target_precision);
            let best = p.combined.iter().copied().fold(0.0, f64::max);
            summary.row(&[
                Field::S(&p.name),
                Field::F(holdover),
                Field::F(cfg.target_precision),
                Field::U(d.connections as u64),
                Field::F(d.longest_gap_s),
                Field::F(d.connected_fraction),
                Field::F(best),
            ]);
        }
    }
    out.write("summary.csv", &summary.into_bytes())?;
    Ok(())
}
