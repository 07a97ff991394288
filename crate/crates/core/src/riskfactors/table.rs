//! Delimited output of exposures and premia for inspection and replay.
//!
//! ```text
//! exposures: date,ticker,size,liquidity,volatility,momentum,reversal,industry
//! premia:    date,factor,premium,dropped,r_squared,n_obs
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use chrono::NaiveDate;

use super::{DailyPremia, ExposureRow, FactorError};

pub const PREMIA_HEADER: &str = "date,factor,premium,dropped,r_squared,n_obs";

pub fn write_exposures<W: Write>(rows: &[ExposureRow], industries: &[String], mut out: W) -> Result<(), FactorError> {
    writeln!(out, "date,ticker,size,liquidity,volatility,momentum,reversal,industry")?;
    for r in rows {
        let s = r.styles;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.date, r.ticker, s[0], s[1], s[2], s[3], s[4], industries[r.industry]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row per (day, factor).
pub fn write_premia<W: Write>(premia: &[DailyPremia], mut out: W) -> Result<(), FactorError> {
    writeln!(out, "{PREMIA_HEADER}")?;
    for p in premia {
        for (name, value) in p.factor_names.iter().zip(&p.premia) {
            let dropped = p.dropped.contains(name) as u8;
            writeln!(out, "{},{},{},{},{},{}", p.date, name, value, dropped, p.r_squared, p.n_obs)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_premia<R: Read>(input: R) -> Result<Vec<DailyPremia>, FactorError> {
    let mut by_day: BTreeMap<NaiveDate, DailyPremia> = BTreeMap::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if i == 0 {
            if line.trim() != PREMIA_HEADER {
                return Err(FactorError::Parse { line: 1, msg: format!("expected header `{PREMIA_HEADER}`") });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |msg: &str| FactorError::Parse { line: line_no, msg: msg.to_string() };
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let date = NaiveDate::parse_from_str(f[0], "%Y-%m-%d").map_err(|_| bad("bad date"))?;
        let value: f64 = f[2].parse().map_err(|_| bad("bad premium"))?;
        let r2: f64 = f[4].parse().map_err(|_| bad("bad r_squared"))?;
        let n_obs: usize = f[5].parse().map_err(|_| bad("bad n_obs"))?;
        let p = by_day.entry(date).or_insert_with(|| DailyPremia {
            date,
            factor_names: Vec::new(),
            premia: Vec::new(),
            dropped: Vec::new(),
            r_squared: r2,
            n_obs,
        });
        p.factor_names.push(f[1].to_string());
        p.premia.push(value);
        if f[3] == "1" {
            p.dropped.push(f[1].to_string());
        }
    }
    Ok(by_day.into_values().collect())
}
