//! Signal, NAV, trade-log, metrics and sensitivity files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::engine::{SensitivityRow, TradeRecord};
use super::metrics::MetricsReport;
use super::{BacktestError, Side, Signal};
use crate::labeling::{EventType, Strength};
use crate::marketdata::parse_timestamp;

pub const SIGNAL_HEADER: [&str; 7] = ["event_id", "ticker", "timestamp", "side", "strength", "event_type", "car_hat"];
pub const NAV_HEADER: [&str; 2] = ["date", "nav"];
pub const TRADE_HEADER: [&str; 12] = [
    "event_id",
    "ticker",
    "event_type",
    "side",
    "entry_date",
    "entry_price",
    "notional",
    "scheduled_exit",
    "exit_date",
    "exit_price",
    "pnl",
    "costs",
];
pub const SENSITIVITY_HEADER: [&str; 4] = ["parameter", "total_return", "sharpe", "mdd"];

fn parse_err(path: &str, line: u64, msg: impl ToString) -> BacktestError {
    BacktestError::Parse { path: path.to_string(), line, msg: msg.to_string() }
}

/// Reads a signal CSV; `car_hat` may be empty.
pub fn read_signals<R: Read>(input: R, name: &str) -> Result<Vec<Signal>, BacktestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SIGNAL_HEADER {
        return Err(parse_err(name, 1, format!("expected header `{}`, found `{}`", SIGNAL_HEADER.join(","), header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| rec.get(i).unwrap_or("");
        let side = match f(3) {
            "long" => Side::Long,
            "short" => Side::Short,
            "hold" => Side::Hold,
            other => return Err(parse_err(name, line, format!("unknown side `{other}`"))),
        };
        let strength: Strength = f(4).parse().map_err(|e| parse_err(name, line, e))?;
        let event_type: EventType = f(5).parse().map_err(|e| parse_err(name, line, e))?;
        let car_hat = match f(6) {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| parse_err(name, line, format!("car_hat: {e}")))?),
        };
        if car_hat.is_some_and(|c| !c.is_finite()) {
            return Err(parse_err(name, line, "car_hat is not finite"));
        }
        out.push(Signal {
            event_id: f(0).to_string(),
            ticker: f(1).to_string(),
            timestamp: parse_timestamp(f(2)).map_err(|e| parse_err(name, line, e))?,
            side,
            strength,
            event_type,
            car_hat,
        });
    }
    Ok(out)
}

pub fn read_signals_file(path: &Path) -> Result<Vec<Signal>, BacktestError> {
    read_signals(File::open(path)?, &path.display().to_string())
}

pub fn write_signals<W: Write>(signals: &[Signal], out: W) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIGNAL_HEADER)?;
    for s in signals {
        w.write_record([
            s.event_id.as_str(),
            s.ticker.as_str(),
            &s.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            s.side.as_str(),
            s.strength.as_str(),
            s.event_type.as_str(),
            &s.car_hat.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nav<W: Write>(nav: &[(chrono::NaiveDate, f64)], out: W) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(NAV_HEADER)?;
    for (d, v) in nav {
        w.write_record([d.to_string(), format!("{v:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trades<W: Write>(trades: &[TradeRecord], out: W) -> Result<(), BacktestError> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADE_HEADER)?;
    for t in trades {
        w.write_record([
            t.event_id.clone(),
            t.ticker.clone(),
            t.event_type.to_string(),
            t.side.as_str().to_string(),
            t.entry_date.to_string(),
            format!("{:.6}", t.entry_price),
            format!("{:.6}", t.notional),
            t.scheduled_exit.to_string(),
            opt(t.exit_date.map(|d| d.to_string())),
            opt(t.exit_price.map(|p| format!("{p:.6}"))),
            opt(t.pnl.map(|p| format!("{p:.6}"))),
            format!("{:.6}", t.costs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics<W: Write>(metrics: &MetricsReport, out: W) -> Result<(), BacktestError> {
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, metrics)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// An undefined Sharpe ratio is written as `undefined`.
pub fn write_sensitivity<W: Write>(rows: &[SensitivityRow], out: W) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SENSITIVITY_HEADER)?;
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            format!("{:.8}", r.total_return),
            r.sharpe.map_or("undefined".to_string(), |s| format!("{s:.6}")),
            format!("{:.8}", r.mdd),
        ])?;
    }
    w.flush()?;
    Ok(())
}
