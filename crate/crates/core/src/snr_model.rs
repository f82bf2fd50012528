//! Closed-form SNR and precision model, plus the adaptive `(t_bin, t_acq)` search
//! run on measured timestamps.
//!
//! Notation: `R` pair rate, `eta` channel efficiency, `R_bkg` background rate,
//! `K = c / |range rate|`, `x = R_bkg / (R eta)`.

use crate::correlation::{cross_correlate, estimate_offset, measure_snr, OffsetEstimate, TauWindow, MIN_BINS};
use crate::error::{invalid, QcsError, Result};
use crate::geometry::{horizon_central_angle, k_factor_inplane, nadir_angle};
use crate::link_budget::{inplane_efficiency, Direction, HardwareParams};
use crate::photon_mc::TimestampSet;

/// Bisection tolerance of [`critical_angle`], in radians (0.01 deg).
pub const CRITICAL_ANGLE_TOL_RAD: f64 = 0.01 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub t_bin_s: f64,
    pub n_min: f64,
    pub snr_threshold: f64,
    /// Satellite clock holdover time.
    pub holdover_s: f64,
    /// Satellite clock precision as `-log10(seconds)`.
    pub sat_clock_precision: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self { t_bin_s: 0.5e-9, n_min: 5.0, snr_threshold: 5.0, holdover_s: 0.0, sat_clock_precision: 9.0 }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_bin_s > 0.0 && self.t_bin_s.is_finite()) {
            return Err(invalid("t_bin_s", format!("must be > 0, got {}", self.t_bin_s)));
        }
        if !(self.n_min >= 1.0) {
            return Err(invalid("n_min", format!("must be >= 1, got {}", self.n_min)));
        }
        if !(self.snr_threshold > 0.0) {
            return Err(invalid("snr_threshold", format!("must be > 0, got {}", self.snr_threshold)));
        }
        if !(self.holdover_s >= 0.0) {
            return Err(invalid("holdover_s", format!("must be >= 0, got {}", self.holdover_s)));
        }
        Ok(())
    }
}

/// Which condition sets the achievable bin width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binding {
    /// Minimum pair count per acquisition.
    Nmin,
    /// SNR threshold (only active with detector jitter).
    Snr,
    /// Pass-limited acquisition cannot collect enough pairs.
    Horizon,
    /// Nothing beyond the configured floor.
    None,
}

impl Binding {
    pub fn label(self) -> &'static str {
        match self {
            Binding::Nmin => "NMIN",
            Binding::Snr => "SNR",
            Binding::Horizon => "HORIZON",
            Binding::None => "NONE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionResult {
    /// Achievable bin width; infinite when no bin width works.
    pub t_bin_achievable_s: f64,
    pub binding_constraint: Binding,
    pub snr_max: f64,
    pub t_acq_opt_s: f64,
    pub bound_nmin_s: f64,
    pub bound_snr_s: f64,
}

impl PrecisionResult {
    pub fn is_attainable(&self) -> bool {
        self.t_bin_achievable_s.is_finite()
    }

    /// `-log10(t_bin / 1 s)`; zero when unattainable.
    pub fn precision(&self) -> f64 {
        to_precision(self.t_bin_achievable_s)
    }
}

/// `-log10(t_bin)`, with unattainable (infinite) bins mapped to 0.
pub fn to_precision(t_bin_s: f64) -> f64 {
    if t_bin_s.is_finite() && t_bin_s > 0.0 {
        -t_bin_s.log10()
    } else {
        0.0
    }
}

fn noise_ratio(r: f64, eta: f64, r_bkg: f64) -> f64 {
    r_bkg / (r * eta)
}

/// `min(K t_bin, pass_cap)`.
pub fn optimal_acquisition_time(k: f64, t_bin_s: f64, pass_cap_s: f64) -> f64 {
    let t = k * t_bin_s;
    if t.is_nan() {
        return pass_cap_s;
    }
    t.min(pass_cap_s)
}

/// Peak SNR against acquisition time, piecewise around `t_opt = K t_bin`.
pub fn analytic_snr(t_acq_s: f64, r: f64, eta: f64, r_bkg: f64, t_bin_s: f64, k: f64) -> f64 {
    if eta <= 0.0 || r <= 0.0 || t_acq_s <= 0.0 {
        return 0.0;
    }
    let x = noise_ratio(r, eta, r_bkg);
    if x.is_infinite() {
        return 0.0;
    }
    let below = (eta / (t_bin_s * (1.0 + x))).sqrt() * t_acq_s.sqrt();
    let above = k * (eta * t_bin_s / (1.0 + x).sqrt()).sqrt() / t_acq_s.sqrt();
    let t_opt = k * t_bin_s;
    if t_acq_s < t_opt {
        below
    } else if t_acq_s > t_opt {
        above
    } else {
        below.max(above)
    }
}

/// `sqrt(eta K / (1 + x))`.
pub fn max_snr(eta: f64, k: f64, r: f64, r_bkg: f64) -> f64 {
    if eta <= 0.0 || r <= 0.0 {
        return 0.0;
    }
    (eta * k / (1.0 + noise_ratio(r, eta, r_bkg))).sqrt()
}

/// Mean off-peak histogram count from accidental pairs, background and dark counts.
pub fn noise_floor(r: f64, eta: f64, r_bkg: f64, r_dc: f64, t_acq_s: f64, t_bin_s: f64) -> f64 {
    let tt = t_acq_s * t_bin_s;
    r * r * eta * tt + r * r_bkg * tt + r_dc * (r * eta + r_bkg + r_dc) * tt
}

/// Bin width needed to collect `n_min` pairs per peak bin, plus jitter.
pub fn precision_bound(eta: f64, k: f64, r: f64, n_min: f64, sigma_j_s: f64) -> f64 {
    if eta <= 0.0 || r <= 0.0 {
        return f64::INFINITY;
    }
    n_min / (r * eta * k) + sigma_j_s
}

/// Bin width at which the jittered peak SNR reaches `snr_th`; infinite when
/// no bin width does.
pub fn precision_bound_snr(eta: f64, k: f64, r: f64, r_bkg: f64, snr_th: f64, sigma_j_s: f64) -> f64 {
    if eta <= 0.0 || r <= 0.0 {
        return f64::INFINITY;
    }
    let denom = 1.0 - snr_th * snr_th / (eta * k) * (1.0 + noise_ratio(r, eta, r_bkg));
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    sigma_j_s / denom
}

/// Peak SNR with detector jitter at working bin width `t_bin`.
pub fn jittered_max_snr(eta: f64, k: f64, r: f64, r_bkg: f64, t_bin_s: f64, sigma_j_s: f64) -> f64 {
    if t_bin_s <= sigma_j_s {
        return 0.0;
    }
    max_snr(eta, k, r, r_bkg) * (1.0 - sigma_j_s / t_bin_s)
}

/// Bin width reachable at the SNR threshold instead of the SNR maximum, with
/// `R eta t_acq = n_min`.
pub fn suboptimal_precision(snr_th: f64, n_min: f64, r: f64, eta: f64, r_bkg: f64, k: f64) -> f64 {
    if eta <= 0.0 || r <= 0.0 {
        return f64::INFINITY;
    }
    snr_th * snr_th * n_min / (r * eta * eta * k * k) * (1.0 + noise_ratio(r, eta, r_bkg))
}

/// Rates and limits feeding [`precision_result`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub pair_rate_hz: f64,
    pub bkg_rate_hz: f64,
    pub n_min: f64,
    pub snr_threshold: f64,
    pub jitter_sigma_s: f64,
    /// Smallest bin width the hardware supports.
    pub t_bin_floor_s: f64,
    /// Longest usable acquisition (visibility window).
    pub pass_cap_s: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        Self {
            pair_rate_hz: 1e7,
            bkg_rate_hz: 1e6,
            n_min: 5.0,
            snr_threshold: 5.0,
            jitter_sigma_s: 0.0,
            t_bin_floor_s: 1e-12,
            pass_cap_s: 600.0,
        }
    }
}

/// Achievable bin width for one geometry: the larger of both bounds and the floor.
pub fn precision_result(eta: f64, k: f64, p: &RateParams) -> PrecisionResult {
    let r = p.pair_rate_hz;
    let snr_max = max_snr(eta, k, r, p.bkg_rate_hz);
    let bound_snr = precision_bound_snr(eta, k, r, p.bkg_rate_hz, p.snr_threshold, p.jitter_sigma_s);
    let pass_limited = k.is_infinite() || k * p.t_bin_floor_s > p.pass_cap_s;
    let (bound_nmin, horizon_fail) = if pass_limited {
        // K t_bin exceeds the pass: the count is limited by the pass length
        let enough = r * eta * p.pass_cap_s >= p.n_min;
        (if enough { p.jitter_sigma_s } else { f64::INFINITY }, !enough)
    } else {
        (precision_bound(eta, k, r, p.n_min, p.jitter_sigma_s), false)
    };

    let t_bin = bound_nmin.max(bound_snr).max(p.t_bin_floor_s);
    let binding = if horizon_fail {
        Binding::Horizon
    } else if bound_snr > bound_nmin && bound_snr >= p.t_bin_floor_s {
        Binding::Snr
    } else if bound_nmin >= p.t_bin_floor_s {
        Binding::Nmin
    } else {
        Binding::None
    };
    PrecisionResult {
        t_bin_achievable_s: t_bin,
        binding_constraint: binding,
        snr_max,
        t_acq_opt_s: if t_bin.is_finite() { optimal_acquisition_time(k, t_bin, p.pass_cap_s) } else { 0.0 },
        bound_nmin_s: bound_nmin,
        bound_snr_s: bound_snr,
    }
}

/// Largest in-plane central angle at which the uplink still collects
/// `n_min` pairs per bin of width `t_bin`; `None` when even overhead fails.
pub fn critical_angle(h_m: f64, t_bin_s: f64, n_min: f64, r: f64, hw: &HardwareParams) -> Result<Option<f64>> {
    if !(t_bin_s > 0.0) {
        return Err(invalid("t_bin_s", format!("must be > 0, got {t_bin_s}")));
    }
    let need = n_min / (r * t_bin_s);
    if !need.is_finite() {
        return Ok(None);
    }
    let ok = |theta: f64| -> Result<bool> {
        let eta = inplane_efficiency(Direction::Uplink, theta, h_m, hw)?;
        Ok(eta * k_factor_inplane(theta, h_m)? >= need)
    };
    let horizon = horizon_central_angle(h_m);
    let mut lo = 0.0;
    let mut hi = horizon;
    if !ok(CRITICAL_ANGLE_TOL_RAD * 1e-3)? {
        return Ok(None);
    }
    if ok(hi)? {
        return Ok(Some(hi));
    }
    while hi - lo > CRITICAL_ANGLE_TOL_RAD {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Half-angle of the satellite's service cone for a critical central angle.
pub fn coverage_half_angle(theta_crit_rad: f64, h_m: f64) -> f64 {
    nadir_angle(theta_crit_rad, h_m)
}

/// Search limits of [`operational_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    /// Widest bin, in ticks.
    pub max_bin_ticks: u64,
    /// Shortest acquisition, in ticks.
    pub min_acq_ticks: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_bin_ticks: 1 << 12, min_acq_ticks: 1 << 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub bin_ticks: u64,
    pub acq_ticks: u64,
    pub t_bin_s: f64,
    pub t_acq_s: f64,
    pub estimate: OffsetEstimate,
    pub rungs_tried: usize,
}

/// Stamp sets of a two-way exchange as `(local, remote)` per direction.
#[derive(Debug, Clone, Copy)]
pub struct TwoWaySets<'a> {
    pub up_local: &'a TimestampSet,
    pub up_remote: &'a TimestampSet,
    pub down_local: &'a TimestampSet,
    pub down_remote: &'a TimestampSet,
}

/// Widens the bin (x2) from one tick and, at each width, shortens the
/// acquisition (/2) from the full data set, until both histograms show a unique
/// peak with SNR >= `snr_th` and height >= `n_min`. Widening stops once the
/// window holds fewer than [`MIN_BINS`] bins.
pub fn operational_search(
    sets: TwoWaySets<'_>,
    window: TauWindow,
    snr_th: f64,
    n_min: f64,
    limits: SearchLimits,
) -> Result<SearchOutcome> {
    if sets.up_local.is_empty() && sets.down_local.is_empty() {
        return Err(invalid("timestamps", "no local detections"));
    }
    let start = sets.up_local.window.start.min(sets.down_local.window.start);
    let full = sets.up_local.window.end.max(sets.down_local.window.end) - start;
    let mut rungs = 0;
    let mut bin = 1u64;
    while bin <= limits.max_bin_ticks && (window.hi - window.lo) as u64 / bin >= MIN_BINS as u64 {
        let mut acq = full;
        while acq >= limits.min_acq_ticks.min(full) {
            rungs += 1;
            let ab = cross_correlate(&sets.up_local.restrict(start, start + acq), sets.up_remote, bin, window)?;
            let ba = cross_correlate(&sets.down_local.restrict(start, start + acq), sets.down_remote, bin, window)?;
            let good = |h| -> Result<bool> {
                let p = measure_snr(h, snr_th)?;
                Ok(p.snr >= snr_th && p.height as f64 >= n_min)
            };
            if good(&ab)? && good(&ba)? {
                if let Ok(estimate) = estimate_offset(&ab, &ba, snr_th) {
                    let t_bin = sets.up_local.t_bin_s;
                    return Ok(SearchOutcome {
                        bin_ticks: bin,
                        acq_ticks: acq,
                        t_bin_s: bin as f64 * t_bin,
                        t_acq_s: acq as f64 * t_bin,
                        estimate,
                        rungs_tried: rungs,
                    });
                }
            }
            if acq == 1 {
                break;
            }
            acq /= 2;
        }
        bin *= 2;
    }
    Err(QcsError::ProtocolFailure { snr_threshold: snr_th, n_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const H: f64 = 500e3;

    fn k2deg() -> f64 {
        k_factor_inplane(2f64.to_radians(), H).unwrap()
    }

    #[test]
    fn optimal_acquisition_time_cases() {
        assert_eq!(optimal_acquisition_time(f64::INFINITY, 0.5e-9, 300.0), 300.0);
        let t = optimal_acquisition_time(k2deg(), 0.5e-9, 300.0);
        assert!((t / 4.8e-5 - 1.0).abs() < 0.05, "t_opt = {t}");
        assert_relative_eq!(optimal_acquisition_time(k2deg(), 1e-9, 300.0), 2.0 * t, max_relative = 1e-12);
    }

    #[test]
    fn snr_branches_meet_max() {
        let (r, eta, bkg, tb) = (1e7, 0.01, 1e6, 0.5e-9);
        let k = k2deg();
        let at_opt = analytic_snr(k * tb, r, eta, bkg, tb, k);
        let below = (eta / (tb * (1.0 + bkg / (r * eta)))).sqrt() * (k * tb).sqrt();
        assert_relative_eq!(below, max_snr(eta, k, r, bkg), max_relative = 1e-12);
        assert!(at_opt >= below);
        assert_relative_eq!(analytic_snr(k * tb, r, eta, 0.0, tb, k), max_snr(eta, k, r, 0.0), max_relative = 1e-12);
        let noisy: Vec<f64> = [1e8, 1e12, 1e20, 1e40].iter().map(|&b| analytic_snr(k * tb, r, eta, b, tb, k)).collect();
        assert!(noisy.windows(2).all(|w| w[1] < w[0]) && noisy[3] < 1e-6);
        assert_eq!(analytic_snr(1e-5, r, 0.0, bkg, tb, k), 0.0);
    }

    #[test]
    fn snr_curve_peaks_at_optimum() {
        let (r, eta, bkg, tb) = (1e7, 0.01, 1e6, 0.5e-9);
        let k = k2deg();
        let t_opt = k * tb;
        let grid: Vec<f64> = (0..=400).map(|i| t_opt * 10f64.powf(-2.0 + i as f64 / 100.0)).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| analytic_snr(*a, r, eta, bkg, tb, k).total_cmp(&analytic_snr(*b, r, eta, bkg, tb, k)))
            .unwrap();
        assert!((best / t_opt - 1.0).abs() < 0.1);
    }

    #[test]
    fn snr_slopes_are_plus_minus_half() {
        let (r, eta, bkg, tb) = (1e7, 0.01, 1e6, 0.5e-9);
        let k = k2deg();
        let t_opt = k * tb;
        let slope = |a: f64, b: f64| {
            (analytic_snr(b * t_opt, r, eta, bkg, tb, k) / analytic_snr(a * t_opt, r, eta, bkg, tb, k)).ln()
                / (b / a).ln()
        };
        assert_relative_eq!(slope(0.01, 0.1), 0.5, epsilon = 1e-12);
        assert_relative_eq!(slope(10.0, 100.0), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn max_snr_equal_noise_case() {
        let (eta, k, r) = (0.02, 1e5, 1e7);
        assert_relative_eq!(max_snr(eta, k, r, r * eta), (eta * k / 2.0).sqrt(), max_relative = 1e-12);
        assert!(max_snr(eta, f64::INFINITY, r, 1e6).is_infinite());
    }

    #[test]
    fn noise_floor_terms() {
        assert_eq!(noise_floor(0.0, 0.5, 0.0, 0.0, 1.0, 1e-9), 0.0);
        let two = 1e14 * 0.01 * 1e-4 * 1e-9 + 1e7 * 1e6 * 1e-4 * 1e-9;
        assert_relative_eq!(noise_floor(1e7, 0.01, 1e6, 0.0, 1e-4, 1e-9), two, max_relative = 1e-12);
        assert!(noise_floor(1e7, 0.01, 1e6, 100.0, 1e-4, 1e-9) > two);
    }

    #[test]
    fn nmin_bound_properties() {
        let eta = inplane_efficiency(Direction::Uplink, 3f64.to_radians(), H, &HardwareParams::default()).unwrap();
        let k = k_factor_inplane(3f64.to_radians(), H).unwrap();
        let t = precision_bound(eta, k, 1e7, 5.0, 0.0);
        assert!(t > 0.5e-9 && t < 2e-9, "t_bin at 3 deg = {t}");
        assert_relative_eq!(precision_bound(eta, k, 1e7, 5.0, 300e-12) - t, 300e-12, max_relative = 1e-9);
        assert_relative_eq!(precision_bound(eta, k, 1e7, 10.0, 0.0), 2.0 * t, max_relative = 1e-12);
        assert_eq!(precision_bound(eta, f64::INFINITY, 1e7, 5.0, 1e-10), 1e-10);
    }

    #[test]
    fn snr_bound_limits() {
        assert_eq!(precision_bound_snr(0.01, 1e5, 1e7, 1e6, 5.0, 0.0), 0.0);
        // denominator 1 - 25 (1 + x) / (eta K) -> 0+
        let eta = 0.01;
        let x = 1e6 / (1e7 * eta);
        let k_crit = 25.0 * (1.0 + x) / eta;
        let near = precision_bound_snr(eta, k_crit * (1.0 + 1e-9), 1e7, 1e6, 5.0, 1e-10);
        assert!(near > 1e-3);
        assert!(precision_bound_snr(eta, k_crit * 0.99, 1e7, 1e6, 5.0, 1e-10).is_infinite());
    }

    #[test]
    fn binding_flips_with_background() {
        let eta = inplane_efficiency(Direction::Uplink, 2f64.to_radians(), H, &HardwareParams::default()).unwrap();
        let k = k2deg();
        let base = RateParams { jitter_sigma_s: 300e-12, ..Default::default() };
        let low = precision_result(eta, k, &RateParams { bkg_rate_hz: 1e-2 * base.pair_rate_hz, ..base });
        let high = precision_result(eta, k, &RateParams { bkg_rate_hz: 0.5 * base.pair_rate_hz, ..base });
        assert_eq!(low.binding_constraint, Binding::Nmin);
        assert_eq!(high.binding_constraint, Binding::Snr);
    }

    #[test]
    fn jittered_snr_limits() {
        let (eta, k, r, bkg, tb) = (0.01, 1e5, 1e7, 1e6, 1e-9);
        assert_eq!(jittered_max_snr(eta, k, r, bkg, tb, 0.0), max_snr(eta, k, r, bkg));
        assert_eq!(jittered_max_snr(eta, k, r, bkg, tb, tb), 0.0);
        let s: Vec<f64> = (0..10).map(|i| jittered_max_snr(eta, k, r, bkg, tb, i as f64 * 0.1 * tb)).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn suboptimal_precision_scaling() {
        let (n, r, eta, k) = (5.0, 1e7, 10f64.powf(-2.5), 3e5);
        let base = suboptimal_precision(5.0, n, r, eta, 1e4, k);
        assert_relative_eq!(suboptimal_precision(10.0, n, r, eta, 1e4, k), 4.0 * base, max_relative = 1e-12);
        assert_relative_eq!(
            suboptimal_precision(5.0, n, r, eta, 0.0, k),
            25.0 * n / (r * eta * eta * k * k),
            max_relative = 1e-12
        );
    }

    #[test]
    fn suboptimal_regime_beats_max_snr_regime() {
        let eta = 10f64.powf(-2.5);
        let k = crate::geometry::SPEED_OF_LIGHT / 1e3;
        let max_regime = precision_bound(eta, k, 1e7, 10.0, 0.0);
        let sub = suboptimal_precision(5.0, 10.0, 1e7, eta, 1e4, k);
        assert!(max_regime / sub >= 5.0, "ratio {}", max_regime / sub);
    }

    #[test]
    fn critical_angle_near_three_degrees() {
        let hw = HardwareParams::default();
        let th = critical_angle(H, 1e-9, 5.0, 1e7, &hw).unwrap().unwrap().to_degrees();
        assert!((th - 3.0).abs() <= 0.5, "theta_crit = {th}");
        let cov = coverage_half_angle(th.to_radians(), H).to_degrees();
        assert!((cov - 34.0).abs() <= 3.0, "coverage = {cov}");
        assert_eq!(critical_angle(H, 1e-9, f64::INFINITY, 1e7, &hw).unwrap(), None);
        let dead = HardwareParams { det_eff_sat: 0.0, ..hw };
        assert_eq!(critical_angle(H, 1e-9, 5.0, 1e7, &dead).unwrap(), None);
    }

    #[test]
    fn eta_k_decreases_on_visible_arc() {
        let hw = HardwareParams::default();
        let hz = horizon_central_angle(H);
        let vals: Vec<f64> = (1..200)
            .map(|i| hz * i as f64 / 200.0)
            .map(|t| inplane_efficiency(Direction::Uplink, t, H, &hw).unwrap() * k_factor_inplane(t, H).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    proptest! {
        #[test]
        fn bounds_monotone_in_eta_and_k(
            eta in 1e-4f64..0.5, k in 1e3f64..1e7, f in 1.0f64..10.0,
            bkg in 0.0f64..1e7, sj in 0.0f64..1e-9,
        ) {
            let r = 1e7;
            prop_assert!(precision_bound(eta * f, k, r, 5.0, sj) <= precision_bound(eta, k, r, 5.0, sj));
            prop_assert!(precision_bound(eta, k * f, r, 5.0, sj) <= precision_bound(eta, k, r, 5.0, sj));
            prop_assert!(precision_bound_snr(eta * f, k, r, bkg, 5.0, sj) <= precision_bound_snr(eta, k, r, bkg, 5.0, sj));
            prop_assert!(precision_bound_snr(eta, k * f, r, bkg, 5.0, sj) <= precision_bound_snr(eta, k, r, bkg, 5.0, sj));
        }

        #[test]
        fn without_background_the_peak_is_max_snr(
            eta in 1e-4f64..0.5, k in 1e3f64..1e7, tb in 1e-11f64..1e-8,
        ) {
            let r = 1e7;
            let peak = analytic_snr(k * tb, r, eta, 0.0, tb, k);
            prop_assert!((peak / max_snr(eta, k, r, 0.0) - 1.0).abs() < 1e-9);
            for f in [0.1, 0.5, 0.9, 1.1, 2.0, 10.0] {
                prop_assert!(analytic_snr(f * k * tb, r, eta, 0.0, tb, k) <= peak * (1.0 + 1e-12));
            }
        }

        #[test]
        fn result_never_below_floor(
            eta in 0.0f64..0.5, k in 1.0f64..1e8, sj in 0.0f64..1e-9, bkg in 0.0f64..1e8,
        ) {
            let p = RateParams { jitter_sigma_s: sj, bkg_rate_hz: bkg, ..Default::default() };
            let res = precision_result(eta, k, &p);
            prop_assert!(res.t_bin_achievable_s >= p.t_bin_floor_s);
            if res.is_attainable() {
                prop_assert!(res.t_bin_achievable_s >= res.bound_nmin_s && res.t_bin_achievable_s >= res.bound_snr_s);
            }
        }
    }
}
