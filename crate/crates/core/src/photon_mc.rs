//! Event-driven Monte Carlo of photon-pair exchange between a ground station (A)
//! and a satellite (B).
//!
//! Each direction has its own pair source. Pair emissions follow a Poisson process
//! and are placed on the source's tick grid; the local photon is stamped at the
//! emission tick, the partner is detected remotely with probability eta after
//! travelling `L(t)/c`. Background and dark counts are independent Poisson streams.
//!
//! Clock convention: A reads true time `t`, B reads `t + offset`. Ticks are
//! `u64` counts of `t_bin` measured from a common nominal origin that sits
//! [`TwoWayTimestamps::origin_ticks`] ticks before the acquisition start, so all
//! stamps stay non-negative whatever the sign of the offset.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{invalid, QcsError, Result};
use crate::geometry::{link_geometry, GroundStationConfig, OrbitConfig, Propagate, SPEED_OF_LIGHT};
use crate::link_budget::{channel_efficiency, Direction, HardwareParams};

/// Largest allowed `rate * t_bin`; above it stamps stop being unique per tick.
pub const MAX_OCCUPANCY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub pair_rate_hz: f64,
    pub bkg_rate_gs_hz: f64,
    pub bkg_rate_sat_hz: f64,
    pub dark_rate_hz: f64,
    pub jitter_sigma_s: f64,
    pub seed: u64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            pair_rate_hz: 1e7,
            bkg_rate_gs_hz: 1e6,
            bkg_rate_sat_hz: 1e6,
            dark_rate_hz: 0.0,
            jitter_sigma_s: 0.0,
            seed: 0,
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate_hz", self.pair_rate_hz),
            ("bkg_rate_gs_hz", self.bkg_rate_gs_hz),
            ("bkg_rate_sat_hz", self.bkg_rate_sat_hz),
            ("dark_rate_hz", self.dark_rate_hz),
            ("jitter_sigma_s", self.jitter_sigma_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Constant offset between the two clocks: B reads `t + offset_s` when A reads `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClockModel {
    pub offset_s: f64,
}

impl ClockModel {
    fn reading_offset(&self, party: Party) -> f64 {
        match party {
            Party::A => 0.0,
            Party::B => self.offset_s,
        }
    }
}

/// A is the ground station, B the satellite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    A,
    B,
}

impl Party {
    fn code(self) -> u8 {
        match self {
            Party::A => 0,
            Party::B => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Party::A),
            1 => Ok(Party::B),
            _ => Err(QcsError::MalformedDump(format!("unknown party code {c}"))),
        }
    }

    /// Which party sources photons for a direction.
    pub fn source_of(direction: Direction) -> Self {
        match direction {
            Direction::Uplink => Party::A,
            Direction::Downlink => Party::B,
        }
    }
}

/// Origin of a detection. Diagnostics only; estimation never looks at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EventLabel {
    Pair = 0,
    Background = 1,
    Dark = 2,
}

impl EventLabel {
    fn from_code(c: u8) -> Result<Option<Self>> {
        match c {
            0 => Ok(Some(EventLabel::Pair)),
            1 => Ok(Some(EventLabel::Background)),
            2 => Ok(Some(EventLabel::Dark)),
            NO_LABEL => Ok(None),
            _ => Err(QcsError::MalformedDump(format!("unknown label code {c}"))),
        }
    }
}

const NO_LABEL: u8 = 0xff;

/// Half-open tick interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickWindow {
    pub start: u64,
    pub end: u64,
}

impl TickWindow {
    pub fn contains(&self, tick: u64) -> bool {
        tick >= self.start && tick < self.end
    }

    pub fn len(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Detection stamps of one party for one acquisition window.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampSet {
    ticks: Vec<u64>,
    labels: Option<Vec<EventLabel>>,
    pub t_bin_s: f64,
    pub window: TickWindow,
    pub party: Party,
}

impl TimestampSet {
    /// Builds a set, sorting the stamps and dropping any outside the window.
    pub fn new(party: Party, t_bin_s: f64, window: TickWindow, ticks: Vec<u64>) -> Self {
        let mut ticks: Vec<u64> = ticks.into_iter().filter(|&t| window.contains(t)).collect();
        ticks.sort_unstable();
        Self { ticks, labels: None, t_bin_s, window, party }
    }

    /// Builds a labelled set; labels follow their stamps through the sort.
    pub fn with_labels(party: Party, t_bin_s: f64, window: TickWindow, events: Vec<(u64, EventLabel)>) -> Self {
        let mut events: Vec<(u64, EventLabel)> = events.into_iter().filter(|e| window.contains(e.0)).collect();
        events.sort_by_key(|e| (e.0, e.1 as u8));
        let (ticks, labels) = events.into_iter().unzip();
        Self { ticks, labels: Some(labels), t_bin_s, window, party }
    }

    pub fn empty(party: Party, t_bin_s: f64, window: TickWindow) -> Self {
        Self::new(party, t_bin_s, window, Vec::new())
    }

    pub fn ticks(&self) -> &[u64] {
        &self.ticks
    }

    pub fn labels(&self) -> Option<&[EventLabel]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn strip_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Stamps falling in `[start, end)`, with the window narrowed accordingly.
    pub fn restrict(&self, start: u64, end: u64) -> Self {
        let start = start.max(self.window.start);
        let end = end.min(self.window.end).max(start);
        let lo = self.ticks.partition_point(|&t| t < start);
        let hi = self.ticks.partition_point(|&t| t < end);
        Self {
            ticks: self.ticks[lo..hi].to_vec(),
            labels: self.labels.as_ref().map(|l| l[lo..hi].to_vec()),
            t_bin_s: self.t_bin_s,
            window: TickWindow { start, end },
            party: self.party,
        }
    }

    pub fn count_label(&self, label: EventLabel) -> usize {
        self.labels.as_ref().map_or(0, |l| l.iter().filter(|&&x| x == label).count())
    }
}

/// Emission times on `[0, t_acq_s)` of a Poisson source, drawn from exponential
/// inter-arrival gaps.
pub fn generate_pair_stream<R: Rng + ?Sized>(
    rate_hz: f64,
    t_acq_s: f64,
    t_bin_s: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_occupancy(rate_hz, t_bin_s)?;
    poisson_times(rate_hz, t_acq_s, rng)
}

fn check_occupancy(rate_hz: f64, t_bin_s: f64) -> Result<()> {
    let product = rate_hz * t_bin_s;
    if !(product < MAX_OCCUPANCY) {
        return Err(QcsError::DenseRegime { product, limit: MAX_OCCUPANCY });
    }
    Ok(())
}

fn poisson_times<R: Rng + ?Sized>(rate_hz: f64, t_acq_s: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate_hz.is_finite() && rate_hz >= 0.0) {
        return Err(invalid("rate_hz", format!("must be finite and >= 0, got {rate_hz}")));
    }
    if rate_hz == 0.0 || t_acq_s <= 0.0 {
        return Ok(Vec::new());
    }
    let gap = Exp::new(rate_hz).map_err(|e| invalid("rate_hz", e.to_string()))?;
    let mut out = Vec::with_capacity((rate_hz * t_acq_s * 1.1) as usize + 8);
    let mut t = gap.sample(rng);
    while t < t_acq_s {
        out.push(t);
        t += gap.sample(rng);
    }
    Ok(out)
}

/// Reference generator: one Bernoulli trial with probability `rate * t_bin` per tick.
/// Only meant for short windows, to check the event-driven sampler against.
pub fn generate_pair_ticks_per_tick<R: Rng + ?Sized>(
    rate_hz: f64,
    n_ticks: u64,
    t_bin_s: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    check_occupancy(rate_hz, t_bin_s)?;
    let p = rate_hz * t_bin_s;
    Ok((0..n_ticks).filter(|_| rng.random::<f64>() < p).collect())
}

/// Distance and efficiency of a link as functions of true time.
pub trait LinkTrajectory: Sync {
    fn link_distance_m(&self, t_s: f64) -> f64;
    fn efficiency(&self, t_s: f64, direction: Direction) -> f64;
    /// Upper bound on the link distance, used to size tick windows.
    fn max_distance_m(&self) -> f64;
}

/// A propagated satellite and ground station.
#[derive(Debug, Clone)]
pub struct OrbitalLink {
    pub orbit: OrbitConfig,
    pub station: GroundStationConfig,
    pub hardware: HardwareParams,
}

impl LinkTrajectory for OrbitalLink {
    fn link_distance_m(&self, t_s: f64) -> f64 {
        (self.orbit.state_at(t_s).position_m - self.station.state_at(t_s).position_m).norm()
    }

    fn efficiency(&self, t_s: f64, direction: Direction) -> f64 {
        match link_geometry(&self.orbit.state_at(t_s), &self.station.state_at(t_s)) {
            Ok(g) => channel_efficiency(direction, &g, &self.hardware).eta_total,
            Err(_) => 0.0,
        }
    }

    fn max_distance_m(&self) -> f64 {
        2.0 * self.orbit.radius_m()
    }
}

/// Synthetic link with a constant range rate and constant efficiencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLink {
    pub distance0_m: f64,
    pub range_rate_mps: f64,
    pub eta_up: f64,
    pub eta_down: f64,
    /// Window length the distance bound must cover.
    pub horizon_s: f64,
}

impl LinkTrajectory for LinearLink {
    fn link_distance_m(&self, t_s: f64) -> f64 {
        (self.distance0_m + self.range_rate_mps * t_s).max(0.0)
    }

    fn efficiency(&self, _t_s: f64, direction: Direction) -> f64 {
        match direction {
            Direction::Uplink => self.eta_up,
            Direction::Downlink => self.eta_down,
        }
    }

    fn max_distance_m(&self) -> f64 {
        self.distance0_m + self.range_rate_mps.abs() * self.horizon_s.max(0.0)
    }
}

/// Everything `propagate_pair` needs besides the emission itself.
pub struct PairContext<'a, T: LinkTrajectory + ?Sized> {
    pub trajectory: &'a T,
    pub clock: ClockModel,
    pub jitter_sigma_s: f64,
    pub t_bin_s: f64,
    /// True time of the acquisition start.
    pub window_start_s: f64,
}

/// Outcome of one emitted pair, in signed ticks of each party's own clock
/// relative to the acquisition start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOutcome {
    pub local_tick: i64,
    pub remote_tick: Option<i64>,
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

fn jitter_ticks<R: Rng + ?Sized>(sigma_s: f64, t_bin_s: f64, rng: &mut R) -> f64 {
    if sigma_s > 0.0 {
        Normal::new(0.0, sigma_s).map(|n| n.sample(rng)).unwrap_or(0.0) / t_bin_s
    } else {
        0.0
    }
}

/// Propagates one pair emitted at `emission_tick` of the source clock.
///
/// The local photon is always stamped; the partner reaches the other party
/// with the probability given by the trajectory at the emission instant.
pub fn propagate_pair<T: LinkTrajectory + ?Sized, R: Rng + ?Sized>(
    emission_tick: i64,
    direction: Direction,
    ctx: &PairContext<'_, T>,
    rng: &mut R,
) -> PairOutcome {
    let source = Party::source_of(direction);
    let t_bin = ctx.t_bin_s;
    let true_t = ctx.window_start_s + emission_tick as f64 * t_bin - ctx.clock.reading_offset(source);
    let eta = ctx.trajectory.efficiency(true_t, direction);

    let local_tick = round_half_up(emission_tick as f64 + jitter_ticks(ctx.jitter_sigma_s, t_bin, rng));
    let detected = eta > 0.0 && rng.random::<f64>() < eta;
    let remote_tick = detected.then(|| {
        let travel = ctx.trajectory.link_distance_m(true_t) / SPEED_OF_LIGHT;
        let shift = match direction {
            Direction::Uplink => travel + ctx.clock.offset_s,
            Direction::Downlink => travel - ctx.clock.offset_s,
        };
        round_half_up(emission_tick as f64 + shift / t_bin + jitter_ticks(ctx.jitter_sigma_s, t_bin, rng))
    });
    PairOutcome { local_tick, remote_tick }
}

/// Background (or dark) stamps uniformly spread over `window`.
pub fn generate_background<R: Rng + ?Sized>(
    rate_hz: f64,
    window: TickWindow,
    t_bin_s: f64,
    jitter_sigma_s: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let span = window.len() as f64 * t_bin_s;
    let times = poisson_times(rate_hz, span, rng)?;
    Ok(times
        .into_iter()
        .filter_map(|t| {
            let x = window.start as f64 + t / t_bin_s + jitter_ticks(jitter_sigma_s, t_bin_s, rng);
            let tick = round_half_up(x);
            (tick >= 0 && window.contains(tick as u64)).then_some(tick as u64)
        })
        .collect())
}

/// One acquisition window of a link simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionWindow {
    /// Identifies the window's random streams.
    pub id: u64,
    /// True time of the window start, in the trajectory's time base.
    pub start_s: f64,
    pub duration_s: f64,
}

/// Static configuration of a two-way link simulation.
#[derive(Debug, Clone)]
pub struct LinkScenario<T: LinkTrajectory> {
    pub trajectory: T,
    pub source: SourceParams,
    pub clock: ClockModel,
    pub t_bin_s: f64,
}

/// The four stamp sets of one two-way exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayTimestamps {
    /// Ground-station stamps of uplink pairs (local side).
    pub a_up: TimestampSet,
    /// Satellite stamps of uplink pairs (remote side).
    pub b_up: TimestampSet,
    /// Satellite stamps of downlink pairs (local side).
    pub b_dwn: TimestampSet,
    /// Ground-station stamps of downlink pairs (remote side).
    pub a_dwn: TimestampSet,
    /// Tick of the acquisition start on both clocks.
    pub origin_ticks: u64,
    /// False when the satellite stayed below the horizon for the whole window.
    pub visible: bool,
}

impl TwoWayTimestamps {
    /// (local, remote) sets for a direction.
    pub fn pair(&self, direction: Direction) -> (&TimestampSet, &TimestampSet) {
        match direction {
            Direction::Uplink => (&self.a_up, &self.b_up),
            Direction::Downlink => (&self.b_dwn, &self.a_dwn),
        }
    }
}

/// Deterministic RNG for `(seed, window, stream)`.
pub fn stream_rng(seed: u64, window_id: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window_id.wrapping_mul(64).wrapping_add(stream));
    rng
}

type Labelled = Vec<(u64, EventLabel)>;

const VISIBILITY_SAMPLES: usize = 9;

/// Simulates both directions of the exchange for one acquisition window.
pub fn simulate_two_way_link<T: LinkTrajectory>(
    scenario: &LinkScenario<T>,
    window: &AcquisitionWindow,
) -> Result<TwoWayTimestamps> {
    let src = &scenario.source;
    src.validate()?;
    let t_bin = scenario.t_bin_s;
    if !(t_bin > 0.0) {
        return Err(invalid("t_bin_s", format!("must be > 0, got {t_bin}")));
    }
    check_occupancy(src.pair_rate_hz, t_bin)?;
    if !(window.duration_s > 0.0) {
        return Err(invalid("duration_s", format!("must be > 0, got {}", window.duration_s)));
    }

    let n_ticks = (window.duration_s / t_bin).round() as u64;
    let offset = scenario.clock.offset_s;
    let jitter_pad = (10.0 * src.jitter_sigma_s / t_bin).ceil() as u64 + 2;
    let max_travel_ticks = (scenario.trajectory.max_distance_m() / SPEED_OF_LIGHT / t_bin).ceil() as u64;
    let origin = max_travel_ticks + (offset.abs() / t_bin).ceil() as u64 + jitter_pad + 16;

    let local_window = TickWindow { start: origin - jitter_pad, end: origin + n_ticks + jitter_pad };
    let remote_window = |direction: Direction| {
        let sign = match direction {
            Direction::Uplink => 1.0,
            Direction::Downlink => -1.0,
        };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..VISIBILITY_SAMPLES {
            let t = window.start_s + window.duration_s * i as f64 / (VISIBILITY_SAMPLES - 1) as f64;
            let shift = (scenario.trajectory.link_distance_m(t) / SPEED_OF_LIGHT + sign * offset) / t_bin;
            lo = lo.min(shift);
            hi = hi.max(shift);
        }
        let start = (origin as f64 + lo).floor() as i64 - jitter_pad as i64 - 4;
        let end = (origin as f64 + n_ticks as f64 + hi).ceil() as i64 + jitter_pad as i64 + 4;
        TickWindow { start: start.max(0) as u64, end: end.max(0) as u64 }
    };
    let up_remote = remote_window(Direction::Uplink);
    let dwn_remote = remote_window(Direction::Downlink);

    let visible = (0..VISIBILITY_SAMPLES).any(|i| {
        let t = window.start_s + window.duration_s * i as f64 / (VISIBILITY_SAMPLES - 1) as f64;
        scenario.trajectory.efficiency(t, Direction::Uplink) > 0.0
            || scenario.trajectory.efficiency(t, Direction::Downlink) > 0.0
    });
    if !visible {
        return Ok(TwoWayTimestamps {
            a_up: TimestampSet::empty(Party::A, t_bin, local_window),
            b_up: TimestampSet::empty(Party::B, t_bin, up_remote),
            b_dwn: TimestampSet::empty(Party::B, t_bin, local_window),
            a_dwn: TimestampSet::empty(Party::A, t_bin, dwn_remote),
            origin_ticks: origin,
            visible: false,
        });
    }

    let ctx = PairContext {
        trajectory: &scenario.trajectory,
        clock: scenario.clock,
        jitter_sigma_s: src.jitter_sigma_s,
        t_bin_s: t_bin,
        window_start_s: window.start_s,
    };
    let to_tick = |t: i64| -> Option<u64> { u64::try_from(origin as i64 + t).ok() };

    let run_direction = |direction: Direction, stream: u64| -> Result<(Labelled, Labelled)> {
        let mut emit_rng = stream_rng(src.seed, window.id, stream);
        let mut prop_rng = stream_rng(src.seed, window.id, stream + 1);
        let times = generate_pair_stream(src.pair_rate_hz, n_ticks as f64 * t_bin, t_bin, &mut emit_rng)?;
        let mut local = Vec::with_capacity(times.len());
        let mut remote = Vec::new();
        for t in times {
            let k = (t / t_bin).floor() as i64;
            let out = propagate_pair(k, direction, &ctx, &mut prop_rng);
            if let Some(tick) = to_tick(out.local_tick) {
                local.push((tick, EventLabel::Pair));
            }
            if let Some(tick) = out.remote_tick.and_then(to_tick) {
                remote.push((tick, EventLabel::Pair));
            }
        }
        Ok((local, remote))
    };
    let (mut a_up, mut b_up) = run_direction(Direction::Uplink, 0)?;
    let (mut b_dwn, mut a_dwn) = run_direction(Direction::Downlink, 2)?;

    let noise = |events: &mut Vec<(u64, EventLabel)>, bkg_rate: f64, w: TickWindow, stream: u64| -> Result<()> {
        let mut rng = stream_rng(src.seed, window.id, stream);
        let bkg = generate_background(bkg_rate, w, t_bin, src.jitter_sigma_s, &mut rng)?;
        events.extend(bkg.into_iter().map(|t| (t, EventLabel::Background)));
        let dark = generate_background(src.dark_rate_hz, w, t_bin, 0.0, &mut rng)?;
        events.extend(dark.into_iter().map(|t| (t, EventLabel::Dark)));
        Ok(())
    };
    noise(&mut a_up, src.bkg_rate_gs_hz, local_window, 10)?;
    noise(&mut b_up, src.bkg_rate_sat_hz, up_remote, 11)?;
    noise(&mut b_dwn, src.bkg_rate_sat_hz, local_window, 12)?;
    noise(&mut a_dwn, src.bkg_rate_gs_hz, dwn_remote, 13)?;

    Ok(TwoWayTimestamps {
        a_up: TimestampSet::with_labels(Party::A, t_bin, local_window, a_up),
        b_up: TimestampSet::with_labels(Party::B, t_bin, up_remote, b_up),
        b_dwn: TimestampSet::with_labels(Party::B, t_bin, local_window, b_dwn),
        a_dwn: TimestampSet::with_labels(Party::A, t_bin, dwn_remote, a_dwn),
        origin_ticks: origin,
        visible: true,
    })
}

/// Magic bytes at the start of a timestamp dump.
pub const DUMP_MAGIC: &[u8; 8] = b"QCSTS\x00\x00\x01";

/// Writes a set in the flat little-endian dump format:
///
/// ```text
/// header (40 bytes)
///   magic      [u8; 8]  "QCSTS\0\0\x01"
///   t_bin_s    f64
///   win_start  u64      first tick of the window
///   win_end    u64      one past the last tick
///   party      u8       0 = A (ground), 1 = B (satellite)
///   direction  u8       0 = uplink, 1 = downlink
///   reserved   [u8; 2]
///   count      u32      number of records
/// records (10 bytes each)
///   tick       u64
///   party      u8
///   label      u8       0 pair, 1 background, 2 dark, 255 unlabelled
/// ```
pub fn write_dump<W: Write>(set: &TimestampSet, direction: Direction, mut w: W) -> Result<()> {
    let count = u32::try_from(set.len()).map_err(|_| invalid("ticks", "too many records for one dump"))?;
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&set.t_bin_s.to_le_bytes())?;
    w.write_all(&set.window.start.to_le_bytes())?;
    w.write_all(&set.window.end.to_le_bytes())?;
    let dir = match direction {
        Direction::Uplink => 0u8,
        Direction::Downlink => 1u8,
    };
    w.write_all(&[set.party.code(), dir, 0, 0])?;
    w.write_all(&count.to_le_bytes())?;
    let mut buf = Vec::with_capacity(set.len() * 10);
    for (i, t) in set.ticks.iter().enumerate() {
        buf.extend_from_slice(&t.to_le_bytes());
        buf.push(set.party.code());
        buf.push(set.labels.as_ref().map_or(NO_LABEL, |l| l[i] as u8));
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a dump written by [`write_dump`].
pub fn read_dump<R: Read>(mut r: R) -> Result<(TimestampSet, Direction)> {
    let mut header = [0u8; 40];
    r.read_exact(&mut header).map_err(|e| QcsError::MalformedDump(format!("short header: {e}")))?;
    if &header[..8] != DUMP_MAGIC {
        return Err(QcsError::MalformedDump("bad magic".into()));
    }
    let f64_at = |i: usize| f64::from_le_bytes(header[i..i + 8].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
    let t_bin_s = f64_at(8);
    let window = TickWindow { start: u64_at(16), end: u64_at(24) };
    let party = Party::from_code(header[32])?;
    let direction = match header[33] {
        0 => Direction::Uplink,
        1 => Direction::Downlink,
        d => return Err(QcsError::MalformedDump(format!("unknown direction code {d}"))),
    };
    let count = u32::from_le_bytes(header[36..40].try_into().unwrap()) as usize;
    let mut body = vec![0u8; count * 10];
    r.read_exact(&mut body).map_err(|e| QcsError::MalformedDump(format!("truncated records: {e}")))?;

    let mut ticks = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for rec in body.chunks_exact(10) {
        let tick = u64::from_le_bytes(rec[..8].try_into().unwrap());
        if Party::from_code(rec[8])? != party {
            return Err(QcsError::MalformedDump("record party differs from header".into()));
        }
        if !window.contains(tick) {
            return Err(QcsError::MalformedDump(format!("tick {tick} outside window")));
        }
        ticks.push(tick);
        labels.push(EventLabel::from_code(rec[9])?);
    }
    if ticks.windows(2).any(|w| w[1] < w[0]) {
        return Err(QcsError::MalformedDump("ticks not sorted".into()));
    }
    let labels = if labels.iter().all(Option::is_some) && !labels.is_empty() {
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else {
        None
    };
    Ok((TimestampSet { ticks, labels, t_bin_s, window, party }, direction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::inplane_configuration;

    fn static_link(distance_m: f64, eta: f64) -> LinearLink {
        LinearLink { distance0_m: distance_m, range_rate_mps: 0.0, eta_up: eta, eta_down: eta, horizon_s: 1.0 }
    }

    #[test]
    fn pair_stream_mean_count() {
        // Poisson(500): sample mean of 1000 runs has std sqrt(500/1000) = 0.707
        let mut rng = stream_rng(7, 0, 0);
        let total: usize = (0..1000).map(|_| generate_pair_stream(1e7, 5e-5, 0.5e-9, &mut rng).unwrap().len()).sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - 500.0).abs() < 3.0 * (500.0f64 / 1000.0).sqrt(), "mean = {mean}");
    }

    #[test]
    fn zero_rate_is_empty_and_dense_rate_is_rejected() {
        let mut rng = stream_rng(1, 0, 0);
        assert!(generate_pair_stream(0.0, 1.0, 0.5e-9, &mut rng).unwrap().is_empty());
        assert!(matches!(generate_pair_stream(1e9, 1e-6, 0.5e-9, &mut rng), Err(QcsError::DenseRegime { .. })));
    }

    #[test]
    fn static_lossless_link_has_constant_delay() {
        let link = static_link(550e3, 1.0);
        let ctx = PairContext {
            trajectory: &link,
            clock: ClockModel { offset_s: 6e-6 },
            jitter_sigma_s: 0.0,
            t_bin_s: 0.5e-9,
            window_start_s: 0.0,
        };
        let expected = ((550e3 / SPEED_OF_LIGHT + 6e-6) / 0.5e-9 + 0.5).floor() as i64;
        let mut rng = stream_rng(3, 0, 0);
        for k in [0i64, 17, 5000, 99_999] {
            let out = propagate_pair(k, Direction::Uplink, &ctx, &mut rng);
            assert_eq!(out.local_tick, k);
            assert_eq!(out.remote_tick.unwrap() - out.local_tick, expected);
        }
    }

    #[test]
    fn dead_link_never_delivers() {
        let link = static_link(550e3, 0.0);
        let ctx = PairContext {
            trajectory: &link,
            clock: ClockModel::default(),
            jitter_sigma_s: 0.0,
            t_bin_s: 0.5e-9,
            window_start_s: 0.0,
        };
        let mut rng = stream_rng(3, 0, 0);
        assert!((0..1000).all(|k| propagate_pair(k, Direction::Downlink, &ctx, &mut rng).remote_tick.is_none()));
    }

    #[test]
    fn moving_link_drifts_by_one_bin_over_optimal_window() {
        // v = 3 km/s over 50 us: drift = v t / c = 0.50 ns = one 0.5 ns tick
        let link = LinearLink { distance0_m: 550e3, range_rate_mps: 3e3, eta_up: 1.0, eta_down: 1.0, horizon_s: 1.0 };
        let t_bin = 0.5e-9;
        let ctx = PairContext {
            trajectory: &link,
            clock: ClockModel::default(),
            jitter_sigma_s: 0.0,
            t_bin_s: t_bin,
            window_start_s: 0.0,
        };
        let mut rng = stream_rng(3, 0, 0);
        let first = propagate_pair(0, Direction::Uplink, &ctx, &mut rng);
        let last = propagate_pair((50e-6 / t_bin) as i64, Direction::Uplink, &ctx, &mut rng);
        let d0 = first.remote_tick.unwrap() - first.local_tick;
        let d1 = last.remote_tick.unwrap() - last.local_tick;
        let drift_s = 3e3 * 50e-6 / SPEED_OF_LIGHT;
        assert!(((d1 - d0) as f64 * t_bin - drift_s).abs() <= t_bin);
        assert!((d1 - d0).abs() <= 2 && d1 >= d0);
    }

    #[test]
    fn background_counts_and_seed_independence() {
        let w = TickWindow { start: 100, end: 100 + 100_000 };
        let mut rng = stream_rng(11, 0, 0);
        assert!(generate_background(0.0, w, 0.5e-9, 0.0, &mut rng).unwrap().is_empty());
        let total: usize = (0..400).map(|_| generate_background(1e6, w, 0.5e-9, 0.0, &mut rng).unwrap().len()).sum();
        let mean = total as f64 / 400.0;
        assert!((mean - 50.0).abs() < 3.0 * (50.0f64 / 400.0).sqrt());

        let a = generate_background(1e6, w, 0.5e-9, 0.0, &mut stream_rng(1, 0, 0)).unwrap();
        let b = generate_background(1e6, w, 0.5e-9, 0.0, &mut stream_rng(2, 0, 0)).unwrap();
        let common = a.iter().filter(|t| b.binary_search(t).is_ok()).count();
        assert!((common as f64) < 1e-3 * a.len().max(1) as f64 + 1.0);
    }

    fn fig4_scenario(offset_s: f64, bkg: f64) -> LinkScenario<OrbitalLink> {
        let (orbit, station) = inplane_configuration(2f64.to_radians(), 500e3);
        LinkScenario {
            trajectory: OrbitalLink { orbit, station, hardware: HardwareParams::default() },
            source: SourceParams { bkg_rate_gs_hz: bkg, bkg_rate_sat_hz: bkg, seed: 99, ..Default::default() },
            clock: ClockModel { offset_s },
            t_bin_s: 0.5e-9,
        }
    }

    #[test]
    fn zero_rates_give_empty_sets() {
        let mut s = fig4_scenario(6e-6, 0.0);
        s.source.pair_rate_hz = 0.0;
        let out = simulate_two_way_link(&s, &AcquisitionWindow { id: 0, start_s: 0.0, duration_s: 5e-5 }).unwrap();
        assert!(out.a_up.is_empty() && out.b_up.is_empty() && out.a_dwn.is_empty() && out.b_dwn.is_empty());
        assert!(out.visible);
    }

    #[test]
    fn invisible_window_is_flagged() {
        let mut s = fig4_scenario(0.0, 1e6);
        s.trajectory.orbit.initial_phase_rad = 1.0;
        let out = simulate_two_way_link(&s, &AcquisitionWindow { id: 0, start_s: 0.0, duration_s: 5e-5 }).unwrap();
        assert!(!out.visible);
        assert!(out.a_up.is_empty() && out.b_up.is_empty());
    }

    #[test]
    fn simulation_is_deterministic_and_labels_partition() {
        let s = fig4_scenario(6e-6, 1e6);
        let w = AcquisitionWindow { id: 4, start_s: 0.0, duration_s: 5e-5 };
        let a = simulate_two_way_link(&s, &w).unwrap();
        let b = simulate_two_way_link(&s, &w).unwrap();
        assert_eq!(a, b);
        for set in [&a.a_up, &a.b_up, &a.a_dwn, &a.b_dwn] {
            let n = set.count_label(EventLabel::Pair)
                + set.count_label(EventLabel::Background)
                + set.count_label(EventLabel::Dark);
            assert_eq!(n, set.len());
            assert!(set.ticks().windows(2).all(|w| w[0] <= w[1]));
            assert!(set.ticks().iter().all(|&t| set.window.contains(t)));
        }
        let other = simulate_two_way_link(&s, &AcquisitionWindow { id: 5, ..w }).unwrap();
        assert_ne!(a.a_up, other.a_up);
    }

    #[test]
    fn dump_round_trip_and_corruption() {
        let s = fig4_scenario(6e-6, 1e6);
        let out = simulate_two_way_link(&s, &AcquisitionWindow { id: 0, start_s: 0.0, duration_s: 2e-5 }).unwrap();
        let mut buf = Vec::new();
        write_dump(&out.b_up, Direction::Uplink, &mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 10 * out.b_up.len());
        let (back, dir) = read_dump(buf.as_slice()).unwrap();
        assert_eq!(dir, Direction::Uplink);
        assert_eq!(back, out.b_up);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_dump(bad.as_slice()), Err(QcsError::MalformedDump(_))));
        assert!(read_dump(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn restrict_keeps_labels_aligned() {
        let set = TimestampSet::with_labels(
            Party::A,
            1e-9,
            TickWindow { start: 0, end: 100 },
            vec![(5, EventLabel::Pair), (50, EventLabel::Dark), (10, EventLabel::Background), (99, EventLabel::Pair)],
        );
        let sub = set.restrict(8, 60);
        assert_eq!(sub.ticks(), &[10, 50]);
        assert_eq!(sub.labels().unwrap(), &[EventLabel::Background, EventLabel::Dark]);
        assert_eq!(sub.window, TickWindow { start: 8, end: 60 });
    }
}
