use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport, PredictionPair};
use super::weights::{estimate_type_weights, KnownCar, TypeWeights};
use super::{BacktestConfig, BacktestError, Side, Signal};
use crate::labeling::{Direction, EventType, LabeledEvent, Strength};
use crate::marketdata::{MarketPanel, SynthLedger};
use crate::Exec;

/// A trade decided after a close, to be entered at the next open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrade {
    pub event_id: String,
    pub ticker: String,
    pub event_type: EventType,
    pub side: Side,
    pub notional: f64,
    pub plan_day: usize,
    pub type_weight: f64,
    pub timestamp: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub trade: usize,
    pub stock: usize,
    pub side: Side,
    pub notional: f64,
    pub entry_price: f64,
    pub scheduled_exit: usize,
    /// Latest close seen, used for marking.
    pub mark_price: f64,
}

impl Position {
    pub fn value_at(&self, price: f64) -> f64 {
        self.notional * (1.0 + self.side.sign() * (price / self.entry_price - 1.0))
    }

    pub fn value(&self) -> f64 {
        self.value_at(self.mark_price)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub event_id: String,
    pub ticker: String,
    pub event_type: EventType,
    pub side: Side,
    pub entry_date: NaiveDate,
    pub entry_price: f64,
    pub notional: f64,
    pub scheduled_exit: NaiveDate,
    pub exit_date: Option<NaiveDate>,
    pub exit_price: Option<f64>,
    /// Realised profit after both costs.
    pub pnl: Option<f64>,
    pub costs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    pub cash: f64,
    pub positions: Vec<Position>,
    /// NAV at each processed close.
    pub nav: Vec<(NaiveDate, f64)>,
    pub trades: Vec<TradeRecord>,
    pub diagnostics: Vec<String>,
}

impl PortfolioState {
    pub fn new(capital: f64) -> Self {
        Self { cash: capital, positions: Vec::new(), nav: Vec::new(), trades: Vec::new(), diagnostics: Vec::new() }
    }

    /// Entry notional of all open positions.
    pub fn open_notional(&self) -> f64 {
        self.positions.iter().map(|p| p.notional).sum()
    }

    pub fn marked_value(&self) -> f64 {
        self.positions.iter().map(Position::value).sum()
    }

    pub fn nav_value(&self) -> f64 {
        self.cash + self.marked_value()
    }
}

/// Splits `budget` across types by weight and evenly within a type over the
/// actionable signals. With a cap, trades are kept in priority order (type
/// weight, then release time) while open notional stays within
/// `k_max * nav`.
pub fn aggregate_daily_signals(
    signals: &[&Signal],
    weights: &TypeWeights,
    budget: f64,
    open_notional: f64,
    nav: f64,
    k_max: Option<f64>,
    plan_day: usize,
) -> (Vec<PlannedTrade>, Vec<String>) {
    let mut diagnostics = Vec::new();
    let actionable: Vec<&Signal> = signals.iter().copied().filter(|s| s.is_actionable()).collect();
    let mut per_type = [0usize; EventType::COUNT];
    for s in &actionable {
        per_type[s.event_type.index()] += 1;
    }
    let mut plan: Vec<PlannedTrade> = actionable
        .iter()
        .filter_map(|s| {
            let w = weights.get(s.event_type);
            let notional = w * budget / per_type[s.event_type.index()] as f64;
            (notional > 0.0).then(|| PlannedTrade {
                event_id: s.event_id.clone(),
                ticker: s.ticker.clone(),
                event_type: s.event_type,
                side: s.side,
                notional,
                plan_day,
                type_weight: w,
                timestamp: s.timestamp,
            })
        })
        .collect();
    plan.sort_by(|a, b| {
        b.type_weight
            .total_cmp(&a.type_weight)
            .then(a.timestamp.cmp(&b.timestamp))
            .then(a.event_id.cmp(&b.event_id))
    });
    if let Some(k) = k_max {
        let mut room = k * nav - open_notional;
        let before = plan.len();
        plan.retain(|t| {
            let fits = t.notional <= room * (1.0 + 1e-12);
            if fits {
                room -= t.notional;
            }
            fits
        });
        if plan.len() < before {
            diagnostics.push(format!(
                "day {plan_day}: position cap {k}x NAV dropped {} of {before} planned trades",
                before - plan.len()
            ));
        }
    }
    (plan, diagnostics)
}

/// Processes one trading day: entries at the open, scheduled exits at the
/// close, then marks NAV.
pub fn step_day(
    state: &mut PortfolioState,
    day: usize,
    panel: &MarketPanel,
    planned: &[PlannedTrade],
    cfg: &BacktestConfig,
) {
    let cal = panel.calendar();
    let date = cal.date(day);
    for t in planned {
        let Some(stock) = panel.stock_index(&t.ticker) else {
            state.diagnostics.push(format!("{date}: {} skipped, unknown ticker {}", t.event_id, t.ticker));
            continue;
        };
        let Some(open) = panel.stock(stock).open[day] else {
            state.diagnostics.push(format!("{date}: {} skipped, no bar for {}", t.event_id, t.ticker));
            continue;
        };
        let entry_cost = cfg.cost * t.notional;
        if cfg.no_leverage && state.cash - t.notional - entry_cost < 0.0 {
            state.diagnostics.push(format!("{date}: {} skipped, insufficient cash", t.event_id));
            continue;
        }
        state.cash -= t.notional + entry_cost;
        let scheduled_exit = (day + cfg.holding - 1).min(cal.len() - 1);
        state.positions.push(Position {
            trade: state.trades.len(),
            stock,
            side: t.side,
            notional: t.notional,
            entry_price: open,
            scheduled_exit,
            mark_price: open,
        });
        state.trades.push(TradeRecord {
            event_id: t.event_id.clone(),
            ticker: t.ticker.clone(),
            event_type: t.event_type,
            side: t.side,
            entry_date: date,
            entry_price: open,
            notional: t.notional,
            scheduled_exit: cal.date(scheduled_exit),
            exit_date: None,
            exit_price: None,
            pnl: None,
            costs: entry_cost,
        });
    }

    let mut still_open = Vec::with_capacity(state.positions.len());
    for mut p in std::mem::take(&mut state.positions) {
        let close = panel.stock(p.stock).close[day];
        if let Some(c) = close {
            p.mark_price = c;
        }
        match close {
            Some(c) if p.scheduled_exit <= day => {
                let exit_cost = cfg.cost * p.notional;
                let value = p.value_at(c);
                state.cash += value - exit_cost;
                let rec = &mut state.trades[p.trade];
                rec.exit_date = Some(date);
                rec.exit_price = Some(c);
                rec.costs += exit_cost;
                rec.pnl = Some(value - p.notional - rec.costs);
            }
            None if p.scheduled_exit <= day => {
                let rec = &state.trades[p.trade];
                state.diagnostics.push(format!("{date}: exit of {} postponed, no bar for {}", rec.event_id, rec.ticker));
                still_open.push(p);
            }
            _ => still_open.push(p),
        }
    }
    state.positions = still_open;
    let nav = state.nav_value();
    state.nav.push((date, nav));
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRun {
    pub state: PortfolioState,
    pub plans: Vec<PlannedTrade>,
    pub weights: Vec<TypeWeights>,
    pub metrics: MetricsReport,
}

impl BacktestRun {
    pub fn nav_values(&self) -> Vec<f64> {
        self.state.nav.iter().map(|(_, v)| *v).collect()
    }
}

fn day_range(panel: &MarketPanel, cfg: &BacktestConfig) -> Result<(usize, usize), BacktestError> {
    let days = panel.calendar().days();
    let lo = cfg.start.map_or(0, |s| days.partition_point(|d| *d < s));
    let hi = cfg.end.map_or(days.len(), |e| days.partition_point(|d| *d <= e));
    if lo >= hi {
        return Err(BacktestError::InvalidConfig("no trading days between start and end".into()));
    }
    Ok((lo, hi - 1))
}

/// Runs the full protocol over the configured date range.
///
/// `history` supplies realised cars: they drive the type weights (each only
/// once its car is known) and pair with signals by event id for the
/// prediction metrics.
pub fn run_backtest(
    signals: &[Signal],
    history: &[LabeledEvent],
    panel: &MarketPanel,
    cfg: &BacktestConfig,
) -> Result<BacktestRun, BacktestError> {
    cfg.validate()?;
    let cal = panel.calendar();
    let (first, last) = day_range(panel, cfg)?;
    let mut by_day: Vec<Vec<&Signal>> = vec![Vec::new(); cal.len()];
    let mut outside = 0usize;
    for s in signals {
        let day = cal
            .assign_signal_day(s.timestamp)
            .map_err(|e| BacktestError::Signal { event_id: s.event_id.clone(), msg: e.to_string() })?;
        if day < first || day > last {
            outside += 1;
        } else {
            by_day[day].push(s);
        }
    }
    let known = KnownCar::from_records(history, cal, cfg.car_horizon);

    let mut state = PortfolioState::new(cfg.initial_capital);
    if outside > 0 {
        state.diagnostics.push(format!("{outside} signals outside the backtest range ignored"));
    }
    let mut plans_log = Vec::new();
    let mut weights_log: Vec<TypeWeights> = Vec::new();
    let mut pending: Vec<PlannedTrade> = Vec::new();
    for day in first..=last {
        step_day(&mut state, day, panel, &pending, cfg);
        if (day - first) % cfg.reestimate_every == 0 {
            let w = estimate_type_weights(&known, day, cfg.weight_window, cfg.weight_mode);
            if let Some(d) = &w.diagnostic {
                log::debug!("{}: {d}", cal.date(day));
            }
            weights_log.push(w);
        }
        let weights = weights_log.last().expect("estimated on the first day");
        let nav = state.nav_value();
        let (plan, diags) = aggregate_daily_signals(
            &by_day[day],
            weights,
            cfg.budget_fraction * nav,
            state.open_notional(),
            nav,
            cfg.max_position_ratio,
            day,
        );
        state.diagnostics.extend(diags);
        if day == last && !plan.is_empty() {
            state.diagnostics.push(format!("{} trades planned on the final day were not entered", plan.len()));
        }
        plans_log.extend(plan.iter().cloned());
        pending = plan;
    }
    if !state.positions.is_empty() {
        state.diagnostics.push(format!("{} positions still open at the end, marked at last close", state.positions.len()));
    }

    let truth: std::collections::HashMap<&str, &LabeledEvent> =
        history.iter().map(|r| (r.event_id.as_str(), r)).collect();
    let pairs: Vec<PredictionPair> = signals
        .iter()
        .filter_map(|s| {
            let r = truth.get(s.event_id.as_str())?;
            Some(PredictionPair {
                car_hat: s.car_hat,
                car: r.car,
                direction_hat: s.side.direction(),
                direction: Direction::from_value(r.car, cfg.neutral_band),
                event_type_hat: Some(s.event_type),
                event_type: r.event_type,
            })
        })
        .collect();
    let nav: Vec<f64> = state.nav.iter().map(|(_, v)| *v).collect();
    let mut metrics = compute_metrics(&pairs, &nav, cfg.initial_capital, state.trades.len());
    if pairs.len() < signals.len() {
        metrics.diagnostics.push(format!("{} signals have no realised car", signals.len() - pairs.len()));
    }
    Ok(BacktestRun { state, plans: plans_log, weights: weights_log, metrics })
}

/// Perfect-foresight signals from a synthetic ledger: the planted direction,
/// type and total effect of every event.
pub fn oracle_feed(ledger: &SynthLedger, tau: f64) -> Vec<Signal> {
    ledger
        .events
        .iter()
        .map(|e| Signal {
            event_id: e.event_id.clone(),
            ticker: e.ticker.clone(),
            timestamp: e.timestamp,
            side: Side::from_direction(e.direction),
            strength: Strength::from_magnitude(e.total_effect, tau),
            event_type: e.event_type,
            car_hat: Some(e.total_effect),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepParam {
    Holding(Vec<usize>),
    /// `None` is the unbounded setting.
    MaxPositionRatio(Vec<Option<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub parameter: String,
    pub total_return: f64,
    /// Annualised; `None` when undefined.
    pub sharpe: Option<f64>,
    pub mdd: f64,
}

/// One backtest per parameter value; runs are independent and go through
/// `exec`.
pub fn sensitivity_sweep(
    signals: &[Signal],
    history: &[LabeledEvent],
    panel: &MarketPanel,
    base: &BacktestConfig,
    param: &SweepParam,
    exec: Exec,
) -> Result<Vec<SensitivityRow>, BacktestError> {
    let configs: Vec<(String, BacktestConfig)> = match param {
        SweepParam::Holding(hs) => hs
            .iter()
            .map(|&h| (format!("holding={h}"), BacktestConfig { holding: h, ..base.clone() }))
            .collect(),
        SweepParam::MaxPositionRatio(ks) => ks
            .iter()
            .map(|&k| {
                let label = k.map_or("max_position_ratio=inf".to_string(), |k| format!("max_position_ratio={k}"));
                (label, BacktestConfig { max_position_ratio: k, ..base.clone() })
            })
            .collect(),
    };
    exec.map(&configs, |(label, cfg)| {
        run_backtest(signals, history, panel, cfg).map(|run| SensitivityRow {
            parameter: label.clone(),
            total_return: run.metrics.total_return,
            sharpe: run.metrics.sharpe_annualized,
            mdd: run.metrics.mdd,
        })
    })
    .into_iter()
    .collect()
}
