//! Cross-correlation of timestamp sets, peak detection and two-way offset recovery.
//!
//! `C(tau)` counts pairs `(a, b)` with `b - a` in a bin starting at `tau`.
//! For the uplink the histogram peaks at `t_ab + offset`, for the downlink at
//! `t_ba - offset`; half their difference is the clock offset.

use crate::error::{invalid, QcsError, Result};
use crate::geometry::SPEED_OF_LIGHT;
use crate::photon_mc::{TickWindow, TimestampSet, TwoWayTimestamps};

/// Fewest bins that still give usable noise statistics.
pub const MIN_BINS: usize = 50;
/// Bins on each side of the maximum left out of the noise estimate.
pub const DEFAULT_GUARD_BINS: usize = 3;

/// Half-open range `[lo, hi)` of `t_B - t_A` in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauWindow {
    pub lo: i64,
    pub hi: i64,
}

impl TauWindow {
    pub fn symmetric(half_width_ticks: i64) -> Self {
        Self { lo: -half_width_ticks, hi: half_width_ticks }
    }

    /// `[-T, T)` with `T = 1.5 (max_distance / c + |offset_prior|)`.
    pub fn from_prior(max_distance_m: f64, offset_prior_s: f64, t_bin_s: f64) -> Self {
        let t = 1.5 * (max_distance_m / SPEED_OF_LIGHT + offset_prior_s.abs());
        Self::symmetric((t / t_bin_s).ceil() as i64)
    }
}

/// Relative number of stamp pairs available at each lag.
///
/// Accidental coincidences scale with it, so a finite acquisition gives a
/// triangular noise floor rather than a flat one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exposure {
    Flat,
    /// Stamps of `a` against stamps of `b`.
    Windows {
        a: TickWindow,
        b: TickWindow,
    },
}

impl Exposure {
    /// Fraction of `a`'s window whose partner at lag `d` ticks lies in `b`.
    pub fn at_lag(&self, d: f64) -> f64 {
        match *self {
            Exposure::Flat => 1.0,
            Exposure::Windows { a, b } => {
                if a.is_empty() {
                    return 0.0;
                }
                let lo = (a.start as f64).max(b.start as f64 - d);
                let hi = (a.end as f64).min(b.end as f64 - d);
                ((hi - lo) / a.len() as f64).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHistogram {
    pub tau_start_tick: i64,
    pub bin_width_ticks: u64,
    pub counts: Vec<u64>,
    pub t_bin_s: f64,
    /// Length of A's acquisition window in ticks.
    pub source_window_ticks: u64,
    /// Noise mean at the maximal bin.
    pub noise_mean: f64,
    pub noise_std: f64,
    /// Noise mean of a bin at full exposure.
    pub noise_full: f64,
    pub exposure: Exposure,
    pub guard_bins: usize,
}

impl CorrelationHistogram {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// First tick of bin `k`.
    pub fn bin_start_tick(&self, k: usize) -> i64 {
        self.tau_start_tick + k as i64 * self.bin_width_ticks as i64
    }

    /// Centre of bin `k` in seconds.
    pub fn bin_center_s(&self, k: usize) -> f64 {
        self.bin_center_ticks(k) * self.t_bin_s
    }

    fn bin_center_ticks(&self, k: usize) -> f64 {
        self.bin_start_tick(k) as f64 + (self.bin_width_ticks as f64 - 1.0) / 2.0
    }

    pub fn bin_width_s(&self) -> f64 {
        self.bin_width_ticks as f64 * self.t_bin_s
    }

    pub fn exposure_of_bin(&self, k: usize) -> f64 {
        self.exposure.at_lag(self.bin_center_ticks(k))
    }

    /// Expected accidental count of bin `k`.
    pub fn noise_mean_of_bin(&self, k: usize) -> f64 {
        self.noise_full * self.exposure_of_bin(k)
    }

    /// `(count - mean) / sqrt(mean)` for bin `k`, with the noise mean of that bin.
    pub fn snr_of_bin(&self, k: usize) -> f64 {
        let m = self.noise_mean_of_bin(k);
        snr_value(self.counts[k] as f64, m, m.sqrt())
    }

    /// Index of the largest bin; ties go to the smallest tau.
    pub fn argmax(&self) -> Option<usize> {
        argmax_of(&self.counts)
    }

    /// Recomputes the noise statistics with a different guard width.
    pub fn with_guard(mut self, guard_bins: usize) -> Self {
        self.guard_bins = guard_bins;
        self.noise_full = noise_full(&self, self.argmax(), guard_bins);
        self.set_peak_noise();
        self
    }

    fn set_peak_noise(&mut self) {
        self.noise_mean = self.argmax().map_or(self.noise_full, |k| self.noise_mean_of_bin(k));
        self.noise_std = self.noise_mean.sqrt();
    }
}

fn snr_value(x: f64, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        (x - mean) / std
    } else if x > mean {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Accidental rate per fully exposed bin, fitted to the bins outside `peak +- guard`.
fn noise_full(h: &CorrelationHistogram, peak: Option<usize>, guard: usize) -> f64 {
    let (lo, hi) = match peak {
        Some(p) => (p.saturating_sub(guard), (p + guard + 1).min(h.len())),
        None => (0, 0),
    };
    let (mut counts, mut exposure) = (0u64, 0.0);
    for k in (0..lo).chain(hi..h.len()) {
        counts += h.counts[k];
        exposure += h.exposure_of_bin(k);
    }
    if exposure > 0.0 {
        counts as f64 / exposure
    } else {
        0.0
    }
}

fn check_compatible(a: &TimestampSet, b: &TimestampSet) -> Result<()> {
    let (x, y) = (a.t_bin_s, b.t_bin_s);
    if (x - y).abs() > 1e-12 * x.abs().max(y.abs()) {
        return Err(QcsError::TickMismatch { a: x, b: y });
    }
    Ok(())
}

/// Builds `C(tau)` over `window` with bins of `bin_width_ticks`.
///
/// The window is trimmed to a whole number of bins.
pub fn cross_correlate(
    a: &TimestampSet,
    b: &TimestampSet,
    bin_width_ticks: u64,
    window: TauWindow,
) -> Result<CorrelationHistogram> {
    check_compatible(a, b)?;
    if bin_width_ticks == 0 {
        return Err(invalid("bin_width_ticks", "must be >= 1"));
    }
    if window.hi <= window.lo {
        return Err(invalid("tau_window", format!("empty window [{}, {})", window.lo, window.hi)));
    }
    let w = bin_width_ticks as i128;
    let n_bins = ((window.hi as i128 - window.lo as i128) / w) as usize;
    if n_bins == 0 {
        return Err(invalid("tau_window", "narrower than one bin"));
    }
    let lo = window.lo as i128;
    let hi = lo + n_bins as i128 * w;

    let mut counts = vec![0u64; n_bins];
    let bt = b.ticks();
    let mut start = 0usize;
    for &ta in a.ticks() {
        let ta = ta as i128;
        while start < bt.len() && (bt[start] as i128) - ta < lo {
            start += 1;
        }
        for &tb in &bt[start..] {
            let d = tb as i128 - ta;
            if d >= hi {
                break;
            }
            counts[((d - lo) / w) as usize] += 1;
        }
    }

    let mut hist = CorrelationHistogram {
        tau_start_tick: window.lo,
        bin_width_ticks,
        counts,
        t_bin_s: a.t_bin_s,
        source_window_ticks: a.window.len(),
        noise_mean: 0.0,
        noise_std: 0.0,
        noise_full: 0.0,
        exposure: Exposure::Windows { a: a.window, b: b.window },
        guard_bins: DEFAULT_GUARD_BINS,
    };
    hist.noise_full = noise_full(&hist, hist.argmax(), DEFAULT_GUARD_BINS);
    hist.set_peak_noise();
    Ok(hist)
}

fn argmax_of(counts: &[u64]) -> Option<usize> {
    let max = *counts.iter().max()?;
    counts.iter().position(|&c| c == max)
}

/// Uplink (`C_AB`) and downlink (`C_BA`) histograms of a two-way exchange.
pub fn correlate_two_way(
    ts: &TwoWayTimestamps,
    bin_width_ticks: u64,
    window: TauWindow,
) -> Result<(CorrelationHistogram, CorrelationHistogram)> {
    let ab = cross_correlate(&ts.a_up, &ts.b_up, bin_width_ticks, window)?;
    let ba = cross_correlate(&ts.b_dwn, &ts.a_dwn, bin_width_ticks, window)?;
    Ok((ab, ba))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    /// First tick of the maximal bin.
    pub tau_max_ticks: i64,
    /// Centre of the maximal bin in seconds.
    pub tau_max_s: f64,
    pub height: u64,
    pub snr: f64,
    pub n_peaks_above_threshold: usize,
    pub is_unique: bool,
}

/// Peak SNR of a histogram and the number of bins above `snr_threshold`.
pub fn measure_snr(hist: &CorrelationHistogram, snr_threshold: f64) -> Result<PeakReport> {
    if hist.len() < MIN_BINS {
        return Err(QcsError::TooFewBins { bins: hist.len(), required: MIN_BINS });
    }
    let k = hist.argmax().unwrap_or(0);
    let height = hist.counts[k];
    let snr = if height == 0 { 0.0 } else { hist.snr_of_bin(k).max(0.0) };
    let n_above = if height == 0 { 0 } else { (0..hist.len()).filter(|&i| hist.snr_of_bin(i) > snr_threshold).count() };
    Ok(PeakReport {
        tau_max_ticks: hist.bin_start_tick(k),
        tau_max_s: hist.bin_center_s(k),
        height,
        snr,
        n_peaks_above_threshold: n_above,
        is_unique: n_above == 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    pub delta_s: f64,
    pub travel_time_s: f64,
    pub precision_s: f64,
    pub snr_ab: f64,
    pub snr_ba: f64,
}

/// Offset from the two peak positions; `delta = (tau_ab - tau_ba) / 2`.
pub fn offset_from_peaks(tau_ab_s: f64, tau_ba_s: f64) -> (f64, f64) {
    ((tau_ab_s - tau_ba_s) / 2.0, (tau_ab_s + tau_ba_s) / 2.0)
}

/// Two-way offset estimate; both peaks must be unique at `snr_threshold`.
pub fn estimate_offset(
    hist_ab: &CorrelationHistogram,
    hist_ba: &CorrelationHistogram,
    snr_threshold: f64,
) -> Result<OffsetEstimate> {
    if (hist_ab.t_bin_s - hist_ba.t_bin_s).abs() > 1e-12 * hist_ab.t_bin_s {
        return Err(QcsError::TickMismatch { a: hist_ab.t_bin_s, b: hist_ba.t_bin_s });
    }
    let ab = measure_snr(hist_ab, snr_threshold)?;
    let ba = measure_snr(hist_ba, snr_threshold)?;
    if !(ab.is_unique && ba.is_unique) {
        return Err(QcsError::AmbiguousPeak { n_ab: ab.n_peaks_above_threshold, n_ba: ba.n_peaks_above_threshold });
    }
    let (delta_s, travel_time_s) = offset_from_peaks(ab.tau_max_s, ba.tau_max_s);
    Ok(OffsetEstimate {
        delta_s,
        travel_time_s,
        precision_s: hist_ab.bin_width_s().max(hist_ba.bin_width_s()),
        snr_ab: ab.snr,
        snr_ba: ba.snr,
    })
}
