//! Long-short event backtester.
//!
//! Signals released between the open of day `t` and the open of day `t+1`
//! are planned after the close of `t` and entered at the open of `t+1`.
//! Each position is closed at the close of the `H`-th trading day counted from
//! entry. The daily budget is split across event types by their weights and
//! evenly across that day's actionable signals within a type.
//!
//! Accounting: entering commits the notional plus the entry cost from cash.
//! A position's marked value is `notional * (1 + side * (price / entry - 1))`,
//! so NAV is always cash plus marked positions.

mod engine;
mod io;
mod metrics;
mod weights;

pub use engine::{
    aggregate_daily_signals, oracle_feed, run_backtest, sensitivity_sweep, step_day, BacktestRun, PlannedTrade,
    PortfolioState, Position, SensitivityRow, SweepParam, TradeRecord,
};
pub use io::{
    read_signals, read_signals_file, write_metrics, write_nav, write_sensitivity, write_signals, write_trades,
    NAV_HEADER, SENSITIVITY_HEADER, SIGNAL_HEADER, TRADE_HEADER,
};
pub use metrics::{compute_metrics, max_drawdown, prediction_metrics, sharpe_ratio, MetricsReport, PredictionPair};
pub use weights::{estimate_type_weights, KnownCar, TypeWeights};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{Direction, EventType, Strength};
use crate::marketdata::DataError;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("invalid backtest config: {0}")]
    InvalidConfig(String),
    #[error("signal {event_id}: {msg}")]
    Signal { event_id: String, msg: String },
    #[error("{day}: {msg}")]
    Day { day: NaiveDate, msg: String },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Long,
    Short,
    Hold,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Long => 1.0,
            Side::Short => -1.0,
            Side::Hold => 0.0,
        }
    }

    pub fn from_direction(d: Direction) -> Side {
        match d {
            Direction::Positive => Side::Long,
            Direction::Negative => Side::Short,
            Direction::Neutral => Side::Hold,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Side::Long => Direction::Positive,
            Side::Short => Direction::Negative,
            Side::Hold => Direction::Neutral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Long => "long",
            Side::Short => "short",
            Side::Hold => "hold",
        }
    }
}

/// A trading signal derived from one event prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub event_id: String,
    pub ticker: String,
    /// Release time; decides the signal day.
    pub timestamp: NaiveDateTime,
    pub side: Side,
    pub strength: Strength,
    /// Predicted event type; selects the type budget.
    pub event_type: EventType,
    /// Predicted car, used only for prediction metrics.
    pub car_hat: Option<f64>,
}

impl Signal {
    /// Long or short with strong conviction.
    pub fn is_actionable(&self) -> bool {
        self.side != Side::Hold && self.strength == Strength::Strong
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Weights proportional to historical mean |car| per type.
    Type,
    /// Equal weight for every type seen in the estimation window.
    Equal,
}

impl std::str::FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "type" => Ok(WeightMode::Type),
            "equal" => Ok(WeightMode::Equal),
            _ => Err(format!("unknown weight mode `{s}` (expected type or equal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    /// Holding period H in trading days, counting the entry day.
    pub holding: usize,
    /// Cap on total open notional as a multiple of NAV; `None` is unbounded.
    pub max_position_ratio: Option<f64>,
    /// Cost per side as a fraction of notional.
    pub cost: f64,
    /// Daily budget as a fraction of the NAV at the planning close.
    pub budget_fraction: f64,
    pub weight_mode: WeightMode,
    /// Re-estimate type weights every this many trading days.
    pub reestimate_every: usize,
    /// Rolling window, in trading days, of known cars used for weights.
    pub weight_window: usize,
    /// Trading days after the signal day until an event's car is known
    /// (the event window end).
    pub car_horizon: usize,
    pub initial_capital: f64,
    /// Skip trades that would take cash below zero.
    pub no_leverage: bool,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    /// Dead band for the realised direction in prediction metrics.
    pub neutral_band: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            holding: 2,
            max_position_ratio: None,
            cost: 0.0005,
            budget_fraction: 0.1,
            weight_mode: WeightMode::Type,
            reestimate_every: 20,
            weight_window: 250,
            car_horizon: 2,
            initial_capital: 1_000_000.0,
            no_leverage: false,
            start: None,
            end: None,
            neutral_band: 0.0,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<(), BacktestError> {
        let bad = |m: String| Err(BacktestError::InvalidConfig(m));
        if self.holding == 0 {
            return bad("holding must be >= 1".into());
        }
        if let Some(k) = self.max_position_ratio {
            if !(k > 0.0) {
                return bad(format!("max_position_ratio must be > 0, got {k}"));
            }
        }
        if !(self.cost >= 0.0 && self.cost.is_finite()) {
            return bad(format!("cost must be >= 0, got {}", self.cost));
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction.is_finite()) {
            return bad(format!("budget_fraction must be > 0, got {}", self.budget_fraction));
        }
        if self.reestimate_every == 0 || self.weight_window == 0 {
            return bad("reestimate_every and weight_window must be >= 1".into());
        }
        if !(self.initial_capital > 0.0 && self.initial_capital.is_finite()) {
            return bad(format!("initial_capital must be > 0, got {}", self.initial_capital));
        }
        if !(self.neutral_band >= 0.0) {
            return bad("neutral_band must be >= 0".into());
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if s > e {
                return bad(format!("start {s} is after end {e}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
