//! `shadow`: achievable precision over a latitude/longitude grid at one instant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qcs_core::geometry::Propagate;
use qcs_core::shadow::{
    compute_shadow, mask_run_lengths, shadow_extents, station_track_azimuth, GridSpec, ShadowGrid, ShadowParams,
};

use crate::config::Scenario;
use crate::output::{Csv, Field, OutputDir};
use crate::RunError;

pub fn run(sc: &Scenario, out: &OutputDir) -> Result<(), RunError> {
    let cfg = sc.shadow.as_ref().expect("resolved");
    let orbit = sc.orbit.as_ref().expect("resolved").to_core()?;
    let params = ShadowParams {
        hardware: sc.hardware.to_core()?,
        rates: sc.analytic.to_core()?,
        direction: sc.analytic.direction.into(),
        stations_rotate: cfg.stations_rotate,
        fixed_k: cfg.fixed_k,
    };
    let sat = orbit.state_at(cfg.epoch_s);
    let spec = match &cfg.grid {
        Some(g) => GridSpec {
            lat_min_deg: g.lat_min_deg,
            lat_max_deg: g.lat_max_deg,
            lon_min_deg: g.lon_min_deg,
            lon_max_deg: g.lon_max_deg,
            resolution_deg: cfg.resolution_deg,
        },
        None => GridSpec::visibility_box(&sat, cfg.resolution_deg),
    };
    let grid = compute_shadow(&sat, &spec, cfg.target_precision, &params).map_err(crate::config_error)?;

    let mut csv = Csv::new(&["lat_deg", "lon_deg", "visible", "precision", "t_bin_s", "binding", "in_mask"]);
    for i in 0..spec.n_lat() {
        for j in 0..spec.n_lon() {
            let c = grid.cell(i, j);
            csv.row(&[
                Field::F(spec.lat_deg(i)),
                Field::F(spec.lon_deg(j)),
                Field::B(c.visible),
                Field::F(c.precision),
                Field::F(if c.t_bin_s.is_finite() { c.t_bin_s } else { f64::NAN }),
                Field::S(c.binding.map_or("", |b| b.label())),
                Field::B(grid.in_mask(i, j)),
            ]);
        }
    }
    out.write("shadow.csv", &csv.into_bytes())?;
    out.write("mask.rle", mask_file(&grid).as_bytes())?;

    let track = station_track_azimuth(&sat, &params);
    let (along, cross) = shadow_extents(&grid, track);
    let mut boundary: BTreeMap<&str, u64> = BTreeMap::new();
    for (i, j) in grid.boundary_cells() {
        *boundary.entry(grid.cell(i, j).binding.map_or("NONE", |b| b.label())).or_default() += 1;
    }
    let visible = grid.cells.iter().filter(|c| c.visible).count() as u64;
    let mut summary = Csv::new(&["quantity", "value"]);
    let mut put = |k: &str, v: Field| summary.row(&[Field::S(k), v]);
    put("sub_satellite_lat_deg", Field::F(grid.sub_point_deg.0));
    put("sub_satellite_lon_deg", Field::F(grid.sub_point_deg.1));
    put("track_azimuth_deg", Field::F(track.to_degrees()));
    put("along_track_extent_deg", Field::F(along));
    put("cross_track_extent_deg", Field::F(cross));
    put("visible_cells", Field::U(visible));
    put("mask_cells", Field::U(grid.mask_count() as u64));
    put("mask_area_deg2", Field::F(grid.mask_area_deg2()));
    for (label, n) in &boundary {
        put(&format!("boundary_binding_{}", label.to_lowercase()), Field::U(*n));
    }
    out.write("summary.csv", &summary.into_bytes())?;
    Ok(())
}

/// Text mask: a header, then alternating run lengths in row-major order
/// (latitude rows from south to north, longitudes west to east), starting with
/// a run of cells outside the mask.
fn mask_file(grid: &ShadowGrid) -> String {
    let s = &grid.spec;
    let mut text = String::from("# qcs shadow mask v1\n");
    writeln!(text, "n_lat {}", s.n_lat()).unwrap();
    writeln!(text, "n_lon {}", s.n_lon()).unwrap();
    writeln!(text, "lat_min_deg {}", s.lat_min_deg).unwrap();
    writeln!(text, "lon_min_deg {}", s.lon_min_deg).unwrap();
    writeln!(text, "resolution_deg {}", s.resolution_deg).unwrap();
    writeln!(text, "target_precision {}", grid.target_precision).unwrap();
    let runs: Vec<String> = mask_run_lengths(grid).iter().map(usize::to_string).collect();
    writeln!(text, "runs {}", runs.join(" ")).unwrap();
    text
}
