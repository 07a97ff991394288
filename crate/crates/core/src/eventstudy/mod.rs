//! Event study: market-model abnormal returns, factor neutralization and
//! cumulative abnormal return (CAR) per event.
//!
//! Timeline, in trading days relative to the event's signal day `s`:
//!
//! ```text
//! [ estimation (len) ][ lag ][ s+start ... s+end ]
//! ```
//!
//! The market model `r = a + b·r_m` is fitted by OLS on the estimation
//! window. Market-adjusted abnormal returns on the event window are then
//! neutralized with daily cross-sectional factor premia estimated from the
//! market-adjusted returns of the whole universe (fitted on the same
//! estimation window), and summed into the CAR.

mod car;

pub use car::{
    analyze_event, compute_all_cars, compute_event_car, read_car_rows, write_car_results, write_car_rows, CarConfig, CarRow,
    EventAnalysis, FactorContext, CAR_HEADER,
};

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::{DataError, RawEvent, TradingCalendar};
use crate::riskfactors::{DailyPremia, FactorError};

#[derive(Debug, Error)]
pub enum EventStudyError {
    #[error("insufficient history: estimation window needs {needed} days before day {day}")]
    InsufficientHistory { day: usize, needed: usize },
    #[error("event window ends on day {end}, beyond the calendar ({n_days} days)")]
    BeyondCalendar { end: i64, n_days: usize },
    #[error("{n} paired observations, at least {min} required")]
    TooFewObservations { n: usize, min: usize },
    #[error("benchmark returns have zero variance over the estimation window")]
    ZeroBenchmarkVariance,
    #[error("no returns available in the event window")]
    NoEventReturns,
    #[error("{missing} of {days} event-window days missing")]
    ExcessiveMissing { missing: usize, days: usize },
    #[error("no factor premia for {0}")]
    MissingPremia(NaiveDate),
    #[error("abnormal-return series is empty")]
    EmptySeries,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid window spec: {0}")]
    InvalidSpec(String),
    #[error("unknown ticker {0}")]
    UnknownTicker(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("event {event_id}: {source}")]
    Event { event_id: String, source: Box<EventStudyError> },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
}

impl EventStudyError {
    fn for_event(self, event_id: &str) -> Self {
        match self {
            e @ EventStudyError::Event { .. } => e,
            e => EventStudyError::Event { event_id: event_id.to_string(), source: Box::new(e) },
        }
    }
}

/// Estimation and event-window layout in trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    pub estimation_len: usize,
    pub lag: usize,
    /// Event-window offsets relative to the signal day, inclusive.
    pub start: i64,
    pub end: i64,
    /// Fewer paired estimation observations than this skip the event.
    pub min_obs: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { estimation_len: 120, lag: 5, start: -1, end: 2, min_obs: 60 }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<(), EventStudyError> {
        if self.min_obs < 3 {
            return Err(EventStudyError::InvalidSpec("min_obs must be at least 3".into()));
        }
        if self.estimation_len < self.min_obs {
            return Err(EventStudyError::InvalidSpec("estimation_len must be >= min_obs".into()));
        }
        if self.start > self.end {
            return Err(EventStudyError::InvalidSpec("window start must not exceed end".into()));
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }
}

/// Calendar index ranges for one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventWindows {
    pub signal_day: usize,
    pub estimation: Range<usize>,
    pub event: Range<usize>,
}

/// Window layout around calendar index `signal_day`.
pub fn windows_at(signal_day: usize, n_days: usize, spec: &WindowSpec) -> Result<EventWindows, EventStudyError> {
    spec.validate()?;
    let start = signal_day as i64 + spec.start;
    let end = signal_day as i64 + spec.end;
    let needed = spec.estimation_len + spec.lag;
    if start < needed as i64 {
        return Err(EventStudyError::InsufficientHistory { day: signal_day, needed });
    }
    if end >= n_days as i64 {
        return Err(EventStudyError::BeyondCalendar { end, n_days });
    }
    let (start, end) = (start as usize, end as usize);
    let est_end = start - spec.lag;
    Ok(EventWindows { signal_day, estimation: est_end - spec.estimation_len..est_end, event: start..end + 1 })
}

/// Resolves the estimation and event windows of `event`.
pub fn resolve_event_windows(
    event: &RawEvent,
    calendar: &TradingCalendar,
    spec: &WindowSpec,
) -> Result<EventWindows, EventStudyError> {
    let day = calendar.assign_signal_day(event.timestamp)?;
    windows_at(day, calendar.len(), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketModelFit {
    pub alpha: f64,
    pub beta: f64,
    /// Residual standard deviation with `n - 2` degrees of freedom.
    pub residual_std: f64,
    pub n_obs: usize,
}

impl MarketModelFit {
    pub fn expected(&self, market_return: f64) -> f64 {
        self.alpha + self.beta * market_return
    }
}

/// OLS of stock on benchmark returns over `days`, using days where both
/// returns exist.
pub fn fit_market_model(
    stock: &[Option<f64>],
    benchmark: &[Option<f64>],
    days: Range<usize>,
    min_obs: usize,
) -> Result<MarketModelFit, EventStudyError> {
    let pairs: Vec<(f64, f64)> = days.filter_map(|t| Some((benchmark.get(t).copied()??, stock.get(t).copied()??))).collect();
    let n = pairs.len();
    if n < min_obs.max(3) {
        return Err(EventStudyError::TooFewObservations { n, min: min_obs.max(3) });
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let sum_sq: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    if !(sxx > 1e-20 * sum_sq) {
        return Err(EventStudyError::ZeroBenchmarkVariance);
    }
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let rss: f64 = pairs.iter().map(|&(x, y)| (y - alpha - beta * x).powi(2)).sum();
    Ok(MarketModelFit { alpha, beta, residual_std: (rss / (nf - 2.0)).sqrt(), n_obs: n })
}

/// `r - (alpha + beta·r_m)` on each of `days`; `None` where either return is
/// missing.
pub fn market_abnormal_returns(
    fit: &MarketModelFit,
    stock: &[Option<f64>],
    benchmark: &[Option<f64>],
    days: Range<usize>,
) -> Result<Vec<Option<f64>>, EventStudyError> {
    let out: Vec<Option<f64>> =
        days.map(|t| Some(stock.get(t).copied()?? - fit.expected(benchmark.get(t).copied()??))).collect();
    if out.iter().all(Option::is_none) {
        return Err(EventStudyError::NoEventReturns);
    }
    Ok(out)
}

/// `AR = AR_market - x·premia` per day.
///
/// `exposures[k]` is the stock's design row on day `k`; a day without
/// exposures stays missing. A present return without premia is an error.
pub fn neutralize_abnormal_returns(
    ar_market: &[Option<f64>],
    exposures: &[Option<Vec<f64>>],
    premia: &[Option<&DailyPremia>],
    dates: &[NaiveDate],
) -> Result<Vec<Option<f64>>, EventStudyError> {
    let n = ar_market.len();
    if exposures.len() != n || premia.len() != n || dates.len() != n {
        return Err(EventStudyError::LengthMismatch(n, exposures.len().min(premia.len()).min(dates.len())));
    }
    (0..n)
        .map(|k| {
            let Some(ar) = ar_market[k] else { return Ok(None) };
            let p = premia[k].ok_or(EventStudyError::MissingPremia(dates[k]))?;
            Ok(exposures[k].as_ref().map(|x| ar - p.explained(x)))
        })
        .collect()
}

/// Sum of abnormal returns.
pub fn cumulative_abnormal_return(ar: &[f64]) -> Result<f64, EventStudyError> {
    if ar.is_empty() {
        return Err(EventStudyError::EmptySeries);
    }
    Ok(ar.iter().sum())
}

/// Market-adjusted and factor-neutral abnormal returns on the event window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbnormalReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub market_adjusted: Vec<Option<f64>>,
    pub neutral: Vec<Option<f64>>,
}

/// Per-event outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCarResult {
    pub event_id: String,
    pub ticker: String,
    /// Date of the signal day.
    pub t0: NaiveDate,
    /// Factor-neutral CAR.
    pub car: f64,
    /// Market-adjusted CAR over the same days.
    pub car_market: f64,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub window_days: usize,
    pub missing_days: usize,
    pub alpha: f64,
    pub beta: f64,
    pub residual_std: f64,
    pub estimation_obs: usize,
}
