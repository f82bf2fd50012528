//! Simulation and analysis of satellite-mediated clock synchronization with
//! time-correlated photon pairs.
//!
//! Modules are layered bottom-up: [`geometry`] and [`link_budget`] describe the
//! channel, [`photon_mc`] produces detection stamps, [`correlation`] recovers
//! offsets from them, [`snr_model`] predicts what is achievable, and
//! [`shadow`] / [`network`] map those predictions over the globe and over time.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod geometry;
pub mod link_budget;
pub mod network;
pub mod photon_mc;
pub mod shadow;
pub mod snr_model;

pub use correlation::{CorrelationHistogram, OffsetEstimate, PeakReport, TauWindow};
pub use error::{QcsError, Result};
pub use geometry::{BodyState, GeometryState, GroundStationConfig, OrbitConfig, OrbitDirection, Propagate};
pub use link_budget::{ChannelEfficiency, Direction, HardwareParams};
pub use network::{DailySummary, LinkModel, LinkSeries, PairTimeline};
pub use photon_mc::{ClockModel, EventLabel, Party, SourceParams, TickWindow, TimestampSet};
pub use shadow::{GridSpec, ShadowCell, ShadowGrid, ShadowParams};
pub use snr_model::{Binding, PrecisionResult, ProtocolParams, RateParams};
