//! Bid-ask spread dynamics toolkit.
//!
//! The pipeline turns tick quotes into a per-minute rescaled spread
//! ([`ingest`]), derives log spread returns and their magnitudes, removes
//! the intraday pattern and measures autocorrelation ([`series`]), and
//! characterizes memory and multifractality with DFA, MF-DFA and the
//! singularity spectrum ([`fluctuation`], [`multifractal`]). [`synth`]
//! provides series with known exponents for validation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

// `!(x > 0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fluctuation;
pub mod ingest;
pub mod multifractal;
pub mod scalar;
pub mod series;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use fluctuation::{
    build_profile, detect_crossover, dfa, fit_power_law, mfdfa, window_fluctuations, DfaResult, FluctuationCurve,
    FluctuationOptions, FluctuationTable, MemoryClass, PowerLawFit, Profile, WindowGrid,
};
pub use ingest::{parse_ticks, rescale_to_minutes, SessionCalendar, SpreadSeries, TickFormat, TickRecord};
pub use multifractal::{default_q_grid, legendre_spectrum, multifractal_width, scaling_exponents, MultifractalSummary};
pub use scalar::Scalar;
pub use series::{
    autocorrelation, intraday_pattern, remove_intraday_pattern, spread_return, spread_volatility, AutocorrelationCurve,
    IntradayPattern, SignalKind, SignalSeries,
};
pub use synth::{generate, shuffle_surrogate, GeneratorKind, GeneratorSpec};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type TickRecord64 = TickRecord<f64>;
pub type SpreadSeries64 = SpreadSeries<f64>;
pub type SignalSeries64 = SignalSeries<f64>;
pub type IntradayPattern64 = IntradayPattern<f64>;
pub type AutocorrelationCurve64 = AutocorrelationCurve<f64>;
pub type Profile64 = Profile<f64>;
pub type FluctuationCurve64 = FluctuationCurve<f64>;
pub type PowerLawFit64 = PowerLawFit<f64>;
pub type DfaResult64 = DfaResult<f64>;
pub type MultifractalSummary64 = MultifractalSummary<f64>;

pub type SignalSeries32 = SignalSeries<f32>;
pub type FluctuationCurve32 = FluctuationCurve<f32>;
pub type PowerLawFit32 = PowerLawFit<f32>;
