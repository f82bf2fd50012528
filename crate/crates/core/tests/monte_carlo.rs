use qcs_core::correlation::{correlate_two_way, cross_correlate, TauWindow};
use qcs_core::photon_mc::*;
use qcs_core::Direction;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const T_BIN: f64 = 0.5e-9;

fn linear(distance0_m: f64, range_rate_mps: f64, eta_up: f64, eta_down: f64) -> LinearLink {
    LinearLink { distance0_m, range_rate_mps, eta_up, eta_down, horizon_s: 1e-2 }
}

fn scenario(link: LinearLink, source: SourceParams, offset_s: f64) -> LinkScenario<LinearLink> {
    LinkScenario { trajectory: link, source, clock: ClockModel { offset_s }, t_bin_s: T_BIN }
}

fn window(id: u64, duration_s: f64) -> AcquisitionWindow {
    AcquisitionWindow { id, start_s: 0.0, duration_s }
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
fn ks_two_sample(mut x: Vec<f64>, mut y: Vec<f64>) -> (f64, f64) {
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let p: f64 = (1..=100).map(|k| 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp()).sum();
    (d, p.clamp(0.0, 1.0))
}

#[test]
fn pair_stream_mean_matches_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let runs = 1000;
    let total: usize = (0..runs).map(|_| generate_pair_stream(1e7, 5e-5, T_BIN, &mut rng).unwrap().len()).sum();
    let mean = total as f64 / runs as f64;
    let sigma = (500.0 / runs as f64).sqrt();
    assert!((mean - 500.0).abs() < 3.0 * sigma, "mean {mean}");
}

#[test]
fn background_mean_matches_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = TickWindow { start: 0, end: 100_000 };
    let runs = 1000;
    let total: usize = (0..runs).map(|_| generate_background(1e6, w, T_BIN, 0.0, &mut rng).unwrap().len()).sum();
    let mean = total as f64 / runs as f64;
    assert!((mean - 50.0).abs() < 3.0 * (50.0 / runs as f64).sqrt(), "mean {mean}");
}

#[test]
fn different_seeds_rarely_collide() {
    let w = TickWindow { start: 0, end: 100_000 };
    let a = generate_background(1e6, w, T_BIN, 0.0, &mut stream_rng(1, 0, 10)).unwrap();
    let b = generate_background(1e6, w, T_BIN, 0.0, &mut stream_rng(2, 0, 10)).unwrap();
    let a: std::collections::HashSet<u64> = a.into_iter().collect();
    let shared = b.iter().filter(|t| a.contains(t)).count();
    assert!((shared as f64) < 1e-3 * b.len().max(1) as f64 + 1.0, "{shared} shared of {}", b.len());
}

#[test]
fn event_driven_gaps_match_per_tick_reference() {
    let n_ticks = 2_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reference = generate_pair_ticks_per_tick(1e7, n_ticks, T_BIN, &mut rng).unwrap();
    let events: Vec<u64> = generate_pair_stream(1e7, n_ticks as f64 * T_BIN, T_BIN, &mut rng)
        .unwrap()
        .into_iter()
        .map(|t| (t / T_BIN).floor() as u64)
        .collect();
    let gaps = |v: &[u64]| v.windows(2).map(|w| (w[1] - w[0]) as f64).collect::<Vec<_>>();
    let (d, p) = ks_two_sample(gaps(&reference), gaps(&events));
    assert!(p > 0.01, "D = {d}, p = {p}");
}

#[test]
fn ks_helper_separates_different_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = generate_pair_stream(1e7, 1e-3, T_BIN, &mut rng).unwrap();
    let b = generate_pair_stream(1.2e7, 1e-3, T_BIN, &mut rng).unwrap();
    let gaps = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    assert!(ks_two_sample(gaps(&a), gaps(&b)).1 < 1e-3);
}

#[test]
fn detected_pairs_average_r_eta_t() {
    let (r, eta, t) = (1e7, 0.05, 5e-5);
    let sc = scenario(
        linear(3e3, 0.0, eta, eta),
        SourceParams { pair_rate_hz: r, bkg_rate_gs_hz: 0.0, bkg_rate_sat_hz: 0.0, seed: 3, ..Default::default() },
        1e-6,
    );
    let runs = 400;
    let total: usize = (0..runs).map(|id| simulate_two_way_link(&sc, &window(id, t)).unwrap().b_up.len()).sum();
    let mean = total as f64 / runs as f64;
    let expected = r * eta * t;
    assert!((mean - expected).abs() < 3.0 * (expected / runs as f64).sqrt(), "mean {mean}, expected {expected}");
}

#[test]
fn static_link_gives_constant_stamp_difference() {
    let (l, delta) = (30e3, 6e-6);
    let sc = scenario(
        linear(l, 0.0, 1.0, 1.0),
        SourceParams { bkg_rate_gs_hz: 0.0, bkg_rate_sat_hz: 0.0, ..Default::default() },
        delta,
    );
    let ts = simulate_two_way_link(&sc, &window(0, 5e-5)).unwrap();
    let travel = l / 299_792_458.0;
    for (dir, shift) in [(Direction::Uplink, travel + delta), (Direction::Downlink, travel - delta)] {
        let (local, remote) = ts.pair(dir);
        assert_eq!(local.len(), remote.len());
        assert!(local.len() > 300);
        let expected = (shift / T_BIN + 0.5).floor() as i64;
        assert!(local.ticks().iter().zip(remote.ticks()).all(|(&a, &b)| b as i64 - a as i64 == expected));
    }
}

#[test]
fn moving_link_drifts_by_one_tick_over_the_optimal_window() {
    let sc = scenario(
        linear(600e3, 3e3, 1.0, 1.0),
        SourceParams { bkg_rate_gs_hz: 0.0, bkg_rate_sat_hz: 0.0, ..Default::default() },
        0.0,
    );
    let ts = simulate_two_way_link(&sc, &window(0, 5e-5)).unwrap();
    let diffs: Vec<i64> = ts.a_up.ticks().iter().zip(ts.b_up.ticks()).map(|(&a, &b)| b as i64 - a as i64).collect();
    assert!(diffs.windows(2).all(|w| w[1] >= w[0]));
    let spread = diffs.last().unwrap() - diffs[0];
    assert!((0..=2).contains(&spread), "spread {spread}");
}

#[test]
fn zero_rates_give_empty_sets() {
    let src = SourceParams { pair_rate_hz: 0.0, bkg_rate_gs_hz: 0.0, bkg_rate_sat_hz: 0.0, ..Default::default() };
    let ts = simulate_two_way_link(&scenario(linear(1e5, 0.0, 0.5, 0.5), src, 1e-6), &window(0, 1e-4)).unwrap();
    assert!(ts.visible);
    assert!(ts.a_up.is_empty() && ts.b_up.is_empty() && ts.b_dwn.is_empty() && ts.a_dwn.is_empty());
}

#[test]
fn invisible_link_is_flagged() {
    let ts =
        simulate_two_way_link(&scenario(linear(1e5, 0.0, 0.0, 0.0), SourceParams::default(), 0.0), &window(0, 1e-4))
            .unwrap();
    assert!(!ts.visible);
    assert!(ts.a_up.is_empty() && ts.b_dwn.is_empty());
}

#[test]
fn same_seed_is_bit_identical() {
    let sc = scenario(
        linear(5e5, 2e3, 0.02, 0.05),
        SourceParams { dark_rate_hz: 1e4, jitter_sigma_s: 1e-10, seed: 99, ..Default::default() },
        3e-6,
    );
    let a = simulate_two_way_link(&sc, &window(4, 1e-4)).unwrap();
    let b = simulate_two_way_link(&sc, &window(4, 1e-4)).unwrap();
    assert_eq!(a, b);
    let c = simulate_two_way_link(&sc, &window(5, 1e-4)).unwrap();
    assert_ne!(a.b_up.ticks(), c.b_up.ticks());
    let other = scenario(sc.trajectory, SourceParams { seed: 100, ..sc.source }, 3e-6);
    assert_ne!(a.a_up.ticks(), simulate_two_way_link(&other, &window(4, 1e-4)).unwrap().a_up.ticks());
}

#[test]
fn labels_partition_each_set() {
    let sc = scenario(linear(5e5, 0.0, 0.1, 0.1), SourceParams { dark_rate_hz: 1e5, ..Default::default() }, 0.0);
    let ts = simulate_two_way_link(&sc, &window(0, 1e-4)).unwrap();
    for set in [&ts.a_up, &ts.b_up, &ts.b_dwn, &ts.a_dwn] {
        let parts: usize =
            [EventLabel::Pair, EventLabel::Background, EventLabel::Dark].iter().map(|&l| set.count_label(l)).sum();
        assert_eq!(parts, set.len());
        assert!(set.ticks().windows(2).all(|w| w[0] <= w[1]));
        assert!(set.ticks().iter().all(|&t| set.window.contains(t)));
    }
}

#[test]
fn stripping_labels_leaves_estimates_unchanged() {
    let sc = scenario(linear(5e5, 1e3, 0.1, 0.1), SourceParams { seed: 8, ..Default::default() }, 2e-6);
    let ts = simulate_two_way_link(&sc, &window(0, 1e-4)).unwrap();
    let stripped = TwoWayTimestamps {
        a_up: ts.a_up.clone().strip_labels(),
        b_up: ts.b_up.clone().strip_labels(),
        b_dwn: ts.b_dwn.clone().strip_labels(),
        a_dwn: ts.a_dwn.clone().strip_labels(),
        ..ts.clone()
    };
    assert!(stripped.a_up.labels().is_none());
    let w = TauWindow::symmetric(20_000);
    assert_eq!(correlate_two_way(&ts, 1, w).unwrap(), correlate_two_way(&stripped, 1, w).unwrap());
}

#[test]
fn dumped_sets_correlate_like_the_originals() {
    let sc = scenario(linear(2e5, 0.0, 0.2, 0.2), SourceParams { seed: 21, ..Default::default() }, 1e-6);
    let ts = simulate_two_way_link(&sc, &window(0, 5e-5)).unwrap();
    let roundtrip = |set: &TimestampSet, dir| {
        let mut buf = Vec::new();
        write_dump(set, dir, &mut buf).unwrap();
        let (back, d) = read_dump(buf.as_slice()).unwrap();
        assert_eq!(d, dir);
        back
    };
    let a = roundtrip(&ts.a_up, Direction::Uplink);
    let b = roundtrip(&ts.b_up, Direction::Uplink);
    assert_eq!(a, ts.a_up);
    let w = TauWindow::symmetric(5_000);
    assert_eq!(cross_correlate(&a, &b, 1, w).unwrap(), cross_correlate(&ts.a_up, &ts.b_up, 1, w).unwrap());
}
