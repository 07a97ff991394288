//! Style exposures (Size, Liquidity, Volatility, Momentum, Reversal) plus
//! industry dummies, and daily cross-sectional factor premia.
//!
//! Exposures for day `t` use only bars strictly before `t`. Each style is
//! winsorized at `winsor_sigma` cross-sectional standard deviations and then
//! z-scored. Industry dummies enter without a global intercept.

mod ols;
mod table;

pub use ols::{least_squares, LeastSquares};
pub use table::{read_premia, write_exposures, write_premia};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::MarketPanel;

pub const STYLE_NAMES: [&str; 5] = ["size", "liquidity", "volatility", "momentum", "reversal"];
pub const N_STYLES: usize = STYLE_NAMES.len();

/// Minimum cross-section for standardization.
pub const MIN_CROSS_SECTION: usize = 3;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("cross-section too thin on {date}: {n} eligible stocks (need {MIN_CROSS_SECTION})")]
    ThinCrossSection { date: NaiveDate, n: usize },
    #[error("{0} exposure rows but {1} responses")]
    LengthMismatch(usize, usize),
    #[error("too few observations: {n} for {dims} identified factors")]
    TooFewObservations { n: usize, dims: usize },
    #[error("non-finite response for {0}")]
    NonFinite(String),
    #[error("invalid style config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StyleConfig {
    pub momentum_window: usize,
    /// Most recent days excluded from momentum.
    pub momentum_skip: usize,
    pub volatility_window: usize,
    pub liquidity_window: usize,
    pub reversal_window: usize,
    pub winsor_sigma: f64,
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self {
            momentum_window: 120,
            momentum_skip: 5,
            volatility_window: 20,
            liquidity_window: 20,
            reversal_window: 5,
            winsor_sigma: 3.0,
        }
    }
}

impl StyleConfig {
    pub fn validate(&self) -> Result<(), FactorError> {
        if self.momentum_skip >= self.momentum_window {
            return Err(FactorError::InvalidConfig("momentum_skip must be < momentum_window".into()));
        }
        if self.volatility_window < 2 || self.liquidity_window == 0 || self.reversal_window == 0 {
            return Err(FactorError::InvalidConfig("windows must be positive (volatility >= 2)".into()));
        }
        if !(self.winsor_sigma > 0.0) {
            return Err(FactorError::InvalidConfig("winsor_sigma must be > 0".into()));
        }
        Ok(())
    }

    /// Number of consecutive trailing bars a stock needs to be eligible.
    pub fn required_bars(&self) -> usize {
        (self.momentum_window.max(self.volatility_window).max(self.reversal_window) + 1).max(self.liquidity_window)
    }
}

/// Raw (unstandardized) styles from trailing bars, oldest first.
///
/// All slices have length [`StyleConfig::required_bars`]; the last element
/// is the most recent bar.
pub fn raw_styles(close: &[f64], volume: &[f64], shares: &[f64], cfg: &StyleConfig) -> [f64; N_STYLES] {
    let n = close.len();
    debug_assert_eq!(n, cfg.required_bars());
    let last = n - 1;
    let size = (close[last] * shares[last]).ln();
    let liquidity = (n - cfg.liquidity_window..n).map(|i| volume[i] / shares[i]).sum::<f64>()
        / cfg.liquidity_window as f64;
    let rets: Vec<f64> = (n - cfg.volatility_window..n).map(|i| close[i] / close[i - 1] - 1.0).collect();
    let mean = rets.iter().sum::<f64>() / rets.len() as f64;
    let volatility = (rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rets.len() - 1) as f64).sqrt();
    let momentum = close[last - cfg.momentum_skip] / close[last - cfg.momentum_window] - 1.0;
    let reversal = close[last] / close[last - cfg.reversal_window] - 1.0;
    [size, liquidity, volatility, momentum, reversal]
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Winsorizes at `mean ± k·std` and z-scores in place (population std).
/// A constant cross-section maps to all zeros.
pub fn standardize(values: &mut [f64], k: f64) {
    if values.is_empty() {
        return;
    }
    let (mean, std) = mean_std(values);
    if !(std > f64::EPSILON * mean.abs().max(1.0)) {
        values.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let (lo, hi) = (mean - k * std, mean + k * std);
    values.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    let (mean, std) = mean_std(values);
    values.iter_mut().for_each(|v| *v = (*v - mean) / std);
}

/// Standardizes each style column across the cross-section.
pub fn standardize_styles(raw: &mut [[f64; N_STYLES]], k: f64) {
    let mut col = vec![0.0; raw.len()];
    for s in 0..N_STYLES {
        for (c, r) in col.iter_mut().zip(raw.iter()) {
            *c = r[s];
        }
        standardize(&mut col, k);
        for (c, r) in col.iter().zip(raw.iter_mut()) {
            r[s] = *c;
        }
    }
}

/// A stock's standardized exposures on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRow {
    pub ticker: String,
    pub date: NaiveDate,
    /// Position of the stock in its [`MarketPanel`].
    pub stock: usize,
    pub styles: [f64; N_STYLES],
    pub industry: usize,
}

impl ExposureRow {
    /// Styles followed by the industry one-hot block.
    pub fn design_row(&self, n_industries: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(N_STYLES + n_industries);
        row.extend_from_slice(&self.styles);
        row.extend((0..n_industries).map(|k| if k == self.industry { 1.0 } else { 0.0 }));
        row
    }
}

/// Column names of the design matrix: styles, then `ind:<name>`.
pub fn factor_names(industries: &[String]) -> Vec<String> {
    STYLE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(industries.iter().map(|i| format!("ind:{i}")))
        .collect()
}

/// Exposures for every eligible stock on calendar day `day`.
///
/// Eligible stocks have an industry and `required_bars` consecutive bars
/// (with shares outstanding) ending the day before `day`.
pub fn compute_style_exposures(
    panel: &MarketPanel,
    day: usize,
    cfg: &StyleConfig,
) -> Result<Vec<ExposureRow>, FactorError> {
    cfg.validate()?;
    let need = cfg.required_bars();
    let date = panel.calendar().date(day);
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    if day >= need {
        let (lo, hi) = (day - need, day);
        for (i, s) in panel.stocks().iter().enumerate() {
            let Some(industry) = s.industry else { continue };
            let close: Option<Vec<f64>> = s.close[lo..hi].iter().copied().collect();
            let volume: Option<Vec<f64>> = s.volume[lo..hi].iter().copied().collect();
            let shares: Option<Vec<f64>> = s.shares[lo..hi].iter().copied().collect();
            let (Some(close), Some(volume), Some(shares)) = (close, volume, shares) else { continue };
            raw.push(raw_styles(&close, &volume, &shares, cfg));
            rows.push(ExposureRow { ticker: s.ticker.clone(), date, stock: i, styles: [0.0; N_STYLES], industry });
        }
    }
    if rows.len() < MIN_CROSS_SECTION {
        return Err(FactorError::ThinCrossSection { date, n: rows.len() });
    }
    standardize_styles(&mut raw, cfg.winsor_sigma);
    for (row, z) in rows.iter_mut().zip(raw) {
        row.styles = z;
    }
    Ok(rows)
}

/// Fitted factor premia for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyPremia {
    pub date: NaiveDate,
    pub factor_names: Vec<String>,
    /// One value per factor; dropped factors carry 0.
    pub premia: Vec<f64>,
    pub dropped: Vec<String>,
    pub r_squared: f64,
    pub n_obs: usize,
}

impl DailyPremia {
    /// `xᵀλ` for a design row.
    pub fn explained(&self, design_row: &[f64]) -> f64 {
        design_row.iter().zip(&self.premia).map(|(x, l)| x * l).sum()
    }
}

/// Unweighted cross-sectional OLS of `responses` on the exposure design.
///
/// All-zero and collinear columns are dropped and reported in
/// [`DailyPremia::dropped`].
pub fn fit_daily_premia(
    exposures: &[ExposureRow],
    responses: &[f64],
    industries: &[String],
) -> Result<DailyPremia, FactorError> {
    if exposures.len() != responses.len() {
        return Err(FactorError::LengthMismatch(exposures.len(), responses.len()));
    }
    if let Some(i) = responses.iter().position(|r| !r.is_finite()) {
        return Err(FactorError::NonFinite(exposures[i].ticker.clone()));
    }
    let date = exposures.first().map(|r| r.date).unwrap_or_default();
    let rows: Vec<Vec<f64>> = exposures.iter().map(|r| r.design_row(industries.len())).collect();
    let names = factor_names(industries);
    let fit = least_squares(&rows, responses, names.len());
    let dims = names.len() - fit.dropped.len();
    if exposures.len() < dims + 1 {
        return Err(FactorError::TooFewObservations { n: exposures.len(), dims });
    }
    let r_squared = fit.r_squared();
    Ok(DailyPremia {
        date,
        dropped: fit.dropped.iter().map(|&j| names[j].clone()).collect(),
        factor_names: names,
        premia: fit.coef,
        r_squared,
        n_obs: exposures.len(),
    })
}

#[cfg(test)]
mod tests;
