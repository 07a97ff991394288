use serde::{Deserialize, Serialize};

use crate::labeling::{Direction, EventType};

/// One prediction paired with its realised outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPair {
    pub car_hat: Option<f64>,
    pub car: f64,
    pub direction_hat: Direction,
    pub direction: Direction,
    pub event_type_hat: Option<EventType>,
    pub event_type: EventType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` when no prediction carries a car estimate.
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    /// `None` when there are no paired predictions.
    pub da: Option<f64>,
    pub eta: Option<f64>,
    pub n_predictions: usize,
    /// Mean over sample std of daily NAV returns; `None` when undefined.
    pub sharpe_daily: Option<f64>,
    /// `sharpe_daily * sqrt(252)`.
    pub sharpe_annualized: Option<f64>,
    pub mdd: f64,
    pub total_return: f64,
    pub n_trades: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictionScores {
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub da: Option<f64>,
    pub eta: Option<f64>,
}

pub fn prediction_metrics(pairs: &[PredictionPair]) -> PredictionScores {
    let errs: Vec<f64> = pairs.iter().filter_map(|p| p.car_hat.map(|c| c - p.car)).collect();
    let (mae, rmse) = if errs.is_empty() {
        (None, None)
    } else {
        let n = errs.len() as f64;
        (
            Some(errs.iter().map(|e| e.abs()).sum::<f64>() / n),
            Some((errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt()),
        )
    };
    if pairs.is_empty() {
        return PredictionScores { mae, rmse, da: None, eta: None };
    }
    let n = pairs.len() as f64;
    let da = pairs.iter().filter(|p| p.direction_hat == p.direction).count() as f64 / n;
    let eta = pairs.iter().filter(|p| p.event_type_hat == Some(p.event_type)).count() as f64 / n;
    PredictionScores { mae, rmse, da: Some(da), eta: Some(eta) }
}

/// Mean over sample (n-1) std of `returns`; `None` with fewer than two
/// returns or zero dispersion.
pub fn sharpe_ratio(returns: &[f64]) -> Option<f64> {
    if returns.len() < 2 {
        return None;
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return None;
    }
    Some(mean / sd)
}

/// Largest peak-to-trough decline relative to the peak.
pub fn max_drawdown(nav: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut mdd: f64 = 0.0;
    for &v in nav {
        peak = peak.max(v);
        if peak > 0.0 {
            mdd = mdd.max(1.0 - v / peak);
        }
    }
    mdd.clamp(0.0, 1.0)
}

pub fn compute_metrics(pairs: &[PredictionPair], nav: &[f64], initial: f64, n_trades: usize) -> MetricsReport {
    let scores = prediction_metrics(pairs);
    let mut diagnostics = Vec::new();
    let returns: Vec<f64> = nav.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let sharpe_daily = sharpe_ratio(&returns);
    if sharpe_daily.is_none() {
        diagnostics.push("sharpe undefined: fewer than two returns or zero return variance".into());
    }
    if scores.da.is_none() {
        diagnostics.push("no predictions paired with realised outcomes".into());
    }
    let total_return = nav.last().map_or(0.0, |v| v / initial - 1.0);
    MetricsReport {
        mae: scores.mae,
        rmse: scores.rmse,
        da: scores.da,
        eta: scores.eta,
        n_predictions: pairs.len(),
        sharpe_daily,
        sharpe_annualized: sharpe_daily.map(|s| s * 252f64.sqrt()),
        mdd: max_drawdown(nav),
        total_return,
        n_trades,
        diagnostics,
    }
}
