//! Per-event orchestration and the shared factor context.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{
    cumulative_abnormal_return, fit_market_model, market_abnormal_returns, neutralize_abnormal_returns,
    resolve_event_windows, AbnormalReturnSeries, EventCarResult, EventStudyError, EventWindows, MarketModelFit,
    WindowSpec,
};
use crate::exec::Exec;
use crate::marketdata::{MarketPanel, RawEvent};
use crate::riskfactors::{compute_style_exposures, fit_daily_premia, DailyPremia, ExposureRow, StyleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarConfig {
    pub window: WindowSpec,
    pub style: StyleConfig,
    /// Subtract factor premia; when false the CAR is market-adjusted only.
    pub neutralize: bool,
}

impl Default for CarConfig {
    fn default() -> Self {
        Self { window: WindowSpec::default(), style: StyleConfig::default(), neutralize: true }
    }
}

#[derive(Debug, Clone)]
struct DayFactors {
    premia: DailyPremia,
}

/// Premia for the event-window days of one window layout, fitted on
/// market-adjusted returns whose market models share that layout's
/// estimation window.
#[derive(Debug, Clone)]
struct WindowFactors {
    days: Vec<Option<DayFactors>>,
}

/// Daily exposures plus factor premia keyed by event-window start day.
#[derive(Debug, Clone, Default)]
pub struct FactorContext {
    exposures: BTreeMap<usize, Option<Vec<ExposureRow>>>,
    windows: BTreeMap<usize, WindowFactors>,
}

impl FactorContext {
    /// Fits premia for every distinct window layout among `events`
    /// (pairs of panel stock index and windows).
    ///
    /// A stock is left out of a layout's cross-sections when one of its own
    /// event windows overlaps the layout's estimation or event window, so
    /// neither the responses nor the market-model fits behind them carry
    /// event effects. When that would remove more than half of the eligible
    /// stocks on a day, only stocks inside an event window on that day are
    /// left out, and when even that removes more than half, none are.
    pub fn build(panel: &MarketPanel, cfg: &CarConfig, events: &[(usize, EventWindows)], exec: Exec) -> Self {
        let layouts: BTreeMap<usize, EventWindows> = events.iter().map(|(_, w)| (w.event.start, w.clone())).collect();
        let days: Vec<usize> = layouts.values().flat_map(|w| w.event.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let exposures: BTreeMap<usize, Option<Vec<ExposureRow>>> = days
            .iter()
            .copied()
            .zip(exec.map(&days, |&t| compute_style_exposures(panel, t, &cfg.style).ok()))
            .collect();
        let layouts: Vec<EventWindows> = layouts.into_values().collect();
        let fitted = exec.map(&layouts, |w| window_factors(panel, cfg, w, &exposures, events));
        Self { windows: layouts.iter().map(|w| w.event.start).zip(fitted).collect(), exposures }
    }

    /// Design row of panel stock `stock` on day `t`.
    pub fn design_row(&self, panel: &MarketPanel, stock: usize, t: usize) -> Option<Vec<f64>> {
        let rows = self.exposures.get(&t)?.as_ref()?;
        let k = rows.binary_search_by_key(&stock, |r| r.stock).ok()?;
        Some(rows[k].design_row(panel.industries().len()))
    }

    fn day(&self, windows: &EventWindows, t: usize) -> Option<&DayFactors> {
        self.windows.get(&windows.event.start)?.days.get(t - windows.event.start)?.as_ref()
    }

    /// Premia fitted for day `t` of the layout starting at `windows`.
    pub fn premia(&self, windows: &EventWindows, t: usize) -> Option<&DailyPremia> {
        self.day(windows, t).map(|d| &d.premia)
    }
}

fn window_factors(
    panel: &MarketPanel,
    cfg: &CarConfig,
    w: &EventWindows,
    exposures: &BTreeMap<usize, Option<Vec<ExposureRow>>>,
    events: &[(usize, EventWindows)],
) -> WindowFactors {
    let fits: Vec<Option<MarketModelFit>> = (0..panel.stocks().len())
        .map(|i| {
            let bench = panel.benchmark_returns(i).ok()?;
            fit_market_model(&panel.stock(i).returns, bench, w.estimation.clone(), cfg.window.min_obs).ok()
        })
        .collect();
    let span = w.estimation.start..w.event.end;
    let contaminated: BTreeSet<usize> = events
        .iter()
        .filter(|(_, e)| e.event.start < span.end && span.start < e.event.end)
        .map(|(i, _)| *i)
        .collect();
    let cross_section = |t: usize, skip: &dyn Fn(usize) -> bool| {
        let rows = exposures.get(&t)?.as_ref()?;
        let mut kept = Vec::with_capacity(rows.len());
        let mut responses = Vec::with_capacity(rows.len());
        for row in rows.iter().filter(|r| !skip(r.stock)) {
            let i = row.stock;
            let (Some(fit), Some(r)) = (fits[i], panel.stock(i).returns[t]) else { continue };
            let Some(rm) = panel.benchmark_returns(i).ok().and_then(|b| b[t]) else { continue };
            kept.push(row.clone());
            responses.push(r - fit.expected(rm));
        }
        Some((kept, responses, rows.len()))
    };
    let days = w
        .event
        .clone()
        .map(|t| {
            let in_window = |i: usize| events.iter().any(|(j, e)| *j == i && e.event.contains(&t));
            let (mut kept, mut responses, eligible) = cross_section(t, &|i| contaminated.contains(&i))?;
            if 2 * kept.len() < eligible {
                (kept, responses, _) = cross_section(t, &in_window)?;
            }
            if 2 * kept.len() < eligible {
                (kept, responses, _) = cross_section(t, &|_| false)?;
            }
            let premia = fit_daily_premia(&kept, &responses, panel.industries()).ok()?;
            Some(DayFactors { premia })
        })
        .collect();
    WindowFactors { days }
}

/// CAR result together with the daily series it was summed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAnalysis {
    pub result: EventCarResult,
    pub series: AbnormalReturnSeries,
}

/// Runs one event through fit, abnormal returns, neutralization and CAR.
///
/// Window days without a return (or without exposures) are missing; more
/// than half missing skips the event.
pub fn analyze_event(
    event: &RawEvent,
    panel: &MarketPanel,
    cfg: &CarConfig,
    factors: Option<&FactorContext>,
) -> Result<EventAnalysis, EventStudyError> {
    analyze(event, panel, cfg, factors).map_err(|e| e.for_event(&event.event_id))
}

fn analyze(
    event: &RawEvent,
    panel: &MarketPanel,
    cfg: &CarConfig,
    factors: Option<&FactorContext>,
) -> Result<EventAnalysis, EventStudyError> {
    let i = panel.stock_index(&event.ticker).ok_or_else(|| EventStudyError::UnknownTicker(event.ticker.clone()))?;
    let w = resolve_event_windows(event, panel.calendar(), &cfg.window)?;
    let returns = &panel.stock(i).returns;
    let bench = panel.benchmark_returns(i)?;
    let fit = fit_market_model(returns, bench, w.estimation.clone(), cfg.window.min_obs)?;
    let dates: Vec<_> = w.event.clone().map(|t| panel.calendar().date(t)).collect();
    let market = market_abnormal_returns(&fit, returns, bench, w.event.clone())?;
    let neutral = if cfg.neutralize {
        let local;
        let ctx = match factors {
            Some(ctx) => ctx,
            None => {
                local = FactorContext::build(panel, cfg, &[(i, w.clone())], Exec::Sequential);
                &local
            }
        };
        let exposures: Vec<Option<Vec<f64>>> = w.event.clone().map(|t| ctx.design_row(panel, i, t)).collect();
        let premia: Vec<Option<&DailyPremia>> = w.event.clone().map(|t| ctx.premia(&w, t)).collect();
        neutralize_abnormal_returns(&market, &exposures, &premia, &dates)?
    } else {
        market.clone()
    };

    let window_days = w.event.len();
    let missing = neutral.iter().filter(|v| v.is_none()).count();
    if 2 * missing > window_days {
        return Err(EventStudyError::ExcessiveMissing { missing, days: window_days });
    }
    let present: Vec<f64> = neutral.iter().flatten().copied().collect();
    let market_present: Vec<f64> =
        market.iter().zip(&neutral).filter_map(|(m, n)| n.and(*m)).collect();
    let car = cumulative_abnormal_return(&present)?;
    let car_market = cumulative_abnormal_return(&market_present)?;
    Ok(EventAnalysis {
        result: EventCarResult {
            event_id: event.event_id.clone(),
            ticker: event.ticker.clone(),
            t0: panel.calendar().date(w.signal_day),
            car,
            car_market,
            window_start: dates[0],
            window_end: dates[window_days - 1],
            window_days,
            missing_days: missing,
            alpha: fit.alpha,
            beta: fit.beta,
            residual_std: fit.residual_std,
            estimation_obs: fit.n_obs,
        },
        series: AbnormalReturnSeries { dates, market_adjusted: market, neutral },
    })
}

/// Single-event CAR. Only the event's own stock is left out of the premia
/// cross-sections; use [`compute_all_cars`] to exclude every event stock.
pub fn compute_event_car(event: &RawEvent, panel: &MarketPanel, cfg: &CarConfig) -> Result<EventCarResult, EventStudyError> {
    analyze_event(event, panel, cfg, None).map(|a| a.result)
}

/// CARs for all events, in input order. Premia are fitted once per distinct
/// window layout and shared between events.
pub fn compute_all_cars(
    events: &[RawEvent],
    panel: &MarketPanel,
    cfg: &CarConfig,
    exec: Exec,
) -> Vec<Result<EventAnalysis, EventStudyError>> {
    let ctx = if cfg.neutralize {
        let windows: Vec<(usize, EventWindows)> = events
            .iter()
            .filter_map(|e| {
                let i = panel.stock_index(&e.ticker)?;
                Some((i, resolve_event_windows(e, panel.calendar(), &cfg.window).ok()?))
            })
            .collect();
        Some(FactorContext::build(panel, cfg, &windows, exec))
    } else {
        None
    };
    exec.map(events, |e| analyze_event(e, panel, cfg, ctx.as_ref()))
}

pub const CAR_HEADER: [&str; 9] =
    ["event_id", "ticker", "t0", "car", "window_start", "window_end", "missing_days", "alpha", "beta"];

/// The persisted subset of an [`EventCarResult`]; one line of the CAR file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarRow {
    pub event_id: String,
    pub ticker: String,
    pub t0: NaiveDate,
    pub car: f64,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub missing_days: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl From<&EventCarResult> for CarRow {
    fn from(r: &EventCarResult) -> Self {
        Self {
            event_id: r.event_id.clone(),
            ticker: r.ticker.clone(),
            t0: r.t0,
            car: r.car,
            window_start: r.window_start,
            window_end: r.window_end,
            missing_days: r.missing_days,
            alpha: r.alpha,
            beta: r.beta,
        }
    }
}

pub fn write_car_results(results: &[EventCarResult], out: impl Write) -> Result<(), EventStudyError> {
    let rows: Vec<CarRow> = results.iter().map(CarRow::from).collect();
    write_car_rows(&rows, out)
}

pub fn write_car_rows<W: Write>(rows: &[CarRow], out: W) -> Result<(), EventStudyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CAR_HEADER)?;
    for r in rows {
        w.write_record([
            r.event_id.clone(),
            r.ticker.clone(),
            r.t0.to_string(),
            r.car.to_string(),
            r.window_start.to_string(),
            r.window_end.to_string(),
            r.missing_days.to_string(),
            r.alpha.to_string(),
            r.beta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CAR file; the header must match [`CAR_HEADER`].
pub fn read_car_rows<R: Read>(input: R) -> Result<Vec<CarRow>, EventStudyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CAR_HEADER {
        return Err(EventStudyError::Parse { line: 1, msg: format!("unexpected header `{}`", header.join(",")) });
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<CarRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            EventStudyError::Parse { line, msg: e.to_string() }
        })?;
        if !row.car.is_finite() {
            return Err(EventStudyError::Parse { line: 0, msg: format!("event {}: car is not finite", row.event_id) });
        }
        out.push(row);
    }
    Ok(out)
}
