//! Market substrate: prices, benchmark indices, events, stock metadata and
//! the trading calendar, plus a seeded synthetic universe for testing.
//!
//! Returns are simple close-to-close returns, `close_t / close_{t-1} - 1`,
//! defined only when the stock has bars on both adjacent calendar days.

mod calendar;
mod io;
mod panel;
pub mod synth;

pub use calendar::TradingCalendar;
pub use io::{
    load_events, load_index_table, load_metadata, load_price_table, load_stock_prices, parse_timestamp,
    write_events, write_index_table, write_metadata, write_price_table, write_stock_prices, DataFiles,
};
pub use panel::{MarketPanel, StockSeries};
pub use synth::{synth_universe, SynthLedger, SynthSpec, SynthUniverse};

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::EventType;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header { path: PathBuf, expected: String, found: String },
    #[error("{path}: line {line}: {msg}")]
    Row { path: PathBuf, line: u64, msg: String },
    #[error("{path}: line {line}: duplicate entry for ({key}, {date})")]
    Duplicate { path: PathBuf, line: u64, key: String, date: NaiveDate },
    #[error("calendar is empty")]
    EmptyCalendar,
    #[error("calendar dates must be strictly increasing ({0} follows {1})")]
    CalendarOrder(NaiveDate, NaiveDate),
    #[error("timestamp {0} is outside the calendar range")]
    OutOfRange(NaiveDateTime),
    #[error("{ticker}: bar on {date} is not a trading day of the calendar")]
    OffCalendar { ticker: String, date: NaiveDate },
    #[error("event {event_id}: {msg}")]
    InvalidEvent { event_id: String, msg: String },
    #[error("no benchmark index for {ticker} (segment `{segment}`)")]
    NoBenchmark { ticker: String, segment: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// One daily bar of a stock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
    pub volume: f64,
    pub shares_outstanding: Option<f64>,
}

impl PriceBar {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.open > 0.0 && self.open.is_finite()) {
            return Err(format!("open must be > 0, got {}", self.open));
        }
        if !(self.close > 0.0 && self.close.is_finite()) {
            return Err(format!("close must be > 0, got {}", self.close));
        }
        if !(self.volume >= 0.0 && self.volume.is_finite()) {
            return Err(format!("volume must be >= 0, got {}", self.volume));
        }
        if let Some(s) = self.shares_outstanding {
            if !(s > 0.0 && s.is_finite()) {
                return Err(format!("shares_outstanding must be > 0, got {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexBar {
    pub date: NaiveDate,
    pub close: f64,
}

/// Per-ticker and per-index date-ordered series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceTable {
    pub stocks: BTreeMap<String, Vec<PriceBar>>,
    pub indices: BTreeMap<String, Vec<IndexBar>>,
}

impl PriceTable {
    pub fn bar_count(&self) -> usize {
        self.stocks.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StockMeta {
    pub industry: String,
    /// Market-cap segment; names the benchmark index used for the stock.
    pub cap_segment: String,
}

pub type Metadata = BTreeMap<String, StockMeta>;

/// A news event as ingested, before labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub event_id: String,
    pub ticker: String,
    pub timestamp: NaiveDateTime,
    pub event_type: Option<EventType>,
    pub text_ref: Option<String>,
}

/// Checks that every event refers to a known ticker and falls inside the
/// calendar's range, and that event ids are unique.
pub fn validate_events(events: &[RawEvent], table: &PriceTable, calendar: &TradingCalendar) -> Result<(), DataError> {
    let mut seen = std::collections::HashSet::new();
    for e in events {
        if !seen.insert(e.event_id.as_str()) {
            return Err(DataError::InvalidEvent { event_id: e.event_id.clone(), msg: "duplicate event_id".into() });
        }
        if !table.stocks.contains_key(&e.ticker) {
            return Err(DataError::InvalidEvent {
                event_id: e.event_id.clone(),
                msg: format!("unknown ticker {}", e.ticker),
            });
        }
        calendar.assign_signal_day(e.timestamp).map_err(|_| DataError::InvalidEvent {
            event_id: e.event_id.clone(),
            msg: format!("timestamp {} outside data range", e.timestamp),
        })?;
    }
    Ok(())
}
