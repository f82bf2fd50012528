//! `pass-trace`: closed-form link quantities sampled along a pass.

use qcs_core::geometry::{link_geometry, Propagate};
use qcs_core::link_budget::{channel_efficiency, Direction};
use qcs_core::snr_model::precision_result;

use crate::config::Scenario;
use crate::output::{Csv, Field, OutputDir};
use crate::RunError;

const HEADER: &[&str] = &[
    "t_s",
    "visible",
    "distance_m",
    "zenith_deg",
    "range_rate_mps",
    "k",
    "eta_up",
    "eta_dwn",
    "loss_up_db",
    "loss_dwn_db",
    "t_acq_opt_s",
    "snr_max",
    "t_bin_nmin_s",
    "t_bin_snr_s",
    "t_bin_s",
    "precision",
    "binding",
];

pub fn run(sc: &Scenario, out: &OutputDir) -> Result<(), RunError> {
    let trace = sc.trace.as_ref().expect("resolved");
    let orbit = sc.orbit.as_ref().expect("resolved").to_core()?;
    let station = sc.ground_station.as_ref().expect("resolved").to_core("ground_station")?;
    let hardware = sc.hardware.to_core()?;
    let rates = sc.analytic.to_core()?;
    let direction: Direction = sc.analytic.direction.into();

    let n = (trace.duration_s / trace.step_s).ceil() as usize;
    let mut csv = Csv::new(HEADER);
    for i in 0..n {
        let t = trace.start_s + i as f64 * trace.step_s;
        let g = link_geometry(&orbit.state_at(t), &station.state_at(t))?;
        if !g.visible {
            let mut row = vec![
                Field::F(t),
                Field::B(false),
                Field::F(g.link_distance_m),
                Field::F(g.zenith_angle_rad.to_degrees()),
            ];
            row.extend((4..HEADER.len() - 1).map(|_| Field::F(f64::NAN)));
            row.push(Field::S(""));
            csv.row(&row);
            continue;
        }
        let up = channel_efficiency(Direction::Uplink, &g, &hardware);
        let dwn = channel_efficiency(Direction::Downlink, &g, &hardware);
        let eta = if direction == Direction::Uplink { up.eta_total } else { dwn.eta_total };
        let p = precision_result(eta, g.k_factor, &rates);
        csv.row(&[
            Field::F(t),
            Field::B(true),
            Field::F(g.link_distance_m),
            Field::F(g.zenith_angle_rad.to_degrees()),
            Field::F(g.v_rel_rad_mps),
            Field::F(g.k_factor),
            Field::F(up.eta_total),
            Field::F(dwn.eta_total),
            Field::F(up.loss_db()),
            Field::F(dwn.loss_db()),
            Field::F(p.t_acq_opt_s),
            Field::F(p.snr_max),
            Field::F(p.bound_nmin_s),
            Field::F(p.bound_snr_s),
            Field::F(p.t_bin_achievable_s),
            Field::F(p.precision()),
            Field::S(p.binding_constraint.label()),
        ]);
    }
    out.write("trace.csv", &csv.into_bytes())?;
    Ok(())
}
