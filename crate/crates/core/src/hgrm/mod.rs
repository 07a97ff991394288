//! Hierarchical gated reward: scores a structured prediction against the
//! realised `(car, event_type)` of an event.
//!
//! Direction is a hard gate. When the predicted direction is strictly
//! opposite to the realised one, only the (negative) direction term survives.
//! Event type acts as a soft gate: a wrong or missing type discounts the
//! trading payoff by `alpha_discount`.

mod io;

pub use io::{read_pairs, score_pairs, write_breakdowns, RewardPair, ScoredPair};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{Direction, EventType, Strength};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("prediction has neither a direction nor a car estimate")]
    NoDirection,
    #[error("predicted car is not finite: {0}")]
    NonFinitePrediction(f64),
    #[error("realised car is not finite: {0}")]
    NonFiniteTruth(f64),
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One named section of a response document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub name: String,
    pub chars: usize,
}

/// Structural summary of a model response, used by the process term.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseDoc {
    pub sections: Vec<Section>,
    pub question_count: usize,
}

impl ResponseDoc {
    pub fn total_chars(&self) -> usize {
        self.sections.iter().map(|s| s.chars).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prediction {
    pub car_hat: Option<f64>,
    pub direction_hat: Option<Direction>,
    pub strength_hat: Option<Strength>,
    pub event_type_hat: Option<EventType>,
    pub response_doc: Option<ResponseDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub car: f64,
    pub event_type: EventType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessConfig {
    pub required_sections: Vec<String>,
    /// Total characters allowed before the length penalty starts.
    pub length_cap: usize,
    pub length_penalty: f64,
    pub question_penalty: f64,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            required_sections: vec!["event".into(), "impact".into(), "decision".into()],
            length_cap: 2000,
            length_penalty: 0.1,
            question_penalty: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Penalty for a strictly opposite direction (> 1).
    pub lambda_dir: f64,
    /// Penalty for a wrong event type.
    pub lambda_evt: f64,
    /// Penalty for a missing event type.
    pub lambda_miss: f64,
    /// Payoff discount when the event type is wrong or missing, in (0, 1).
    pub alpha_discount: f64,
    /// Round-trip transaction cost in return units.
    pub kappa: f64,
    /// Symmetric clip bound on the payoff reward.
    pub rho: f64,
    /// Tolerance scale of the magnitude term.
    pub sigma: f64,
    /// Strength threshold: strong iff |car| > tau.
    pub tau: f64,
    /// Dead band around zero for the realised direction.
    pub neutral_band: f64,
    pub w_dir: f64,
    pub w_evt: f64,
    pub w_pnl: f64,
    pub w_mag: f64,
    pub w_proc: f64,
    pub w_str: f64,
    /// Penalty for predicting strong when the truth is weak.
    pub p_fs: f64,
    /// Penalty for predicting weak when the truth is strong.
    pub p_fw: f64,
    pub process: ProcessConfig,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda_dir: 2.0,
            lambda_evt: 0.5,
            lambda_miss: 1.0,
            alpha_discount: 0.5,
            kappa: 0.003,
            rho: 0.05,
            sigma: 0.02,
            tau: 0.01,
            neutral_band: 0.0,
            w_dir: 1.0,
            w_evt: 0.3,
            w_pnl: 2.0,
            w_mag: 0.5,
            w_proc: 0.1,
            w_str: 0.3,
            p_fs: 0.5,
            p_fw: 0.2,
            process: ProcessConfig::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |msg: String| Err(RewardError::InvalidConfig(msg));
        let finite = [
            self.lambda_dir,
            self.lambda_evt,
            self.lambda_miss,
            self.alpha_discount,
            self.kappa,
            self.rho,
            self.sigma,
            self.tau,
            self.neutral_band,
            self.p_fs,
            self.p_fw,
            self.process.length_penalty,
            self.process.question_penalty,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if self.lambda_dir <= 1.0 {
            return bad(format!("lambda_dir must be > 1, got {}", self.lambda_dir));
        }
        if self.lambda_evt <= 0.0 || self.lambda_miss <= 0.0 {
            return bad("lambda_evt and lambda_miss must be > 0".into());
        }
        if !(self.alpha_discount > 0.0 && self.alpha_discount < 1.0) {
            return bad(format!("alpha_discount must lie in (0, 1), got {}", self.alpha_discount));
        }
        if self.kappa < 0.0 {
            return bad(format!("kappa must be >= 0, got {}", self.kappa));
        }
        if self.rho <= 0.0 || self.sigma <= 0.0 || self.tau <= 0.0 {
            return bad("rho, sigma and tau must be > 0".into());
        }
        if self.neutral_band < 0.0 {
            return bad(format!("neutral_band must be >= 0, got {}", self.neutral_band));
        }
        let weights = [self.w_dir, self.w_evt, self.w_pnl, self.w_mag, self.w_proc, self.w_str];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("weights must be finite and >= 0".into());
        }
        if self.p_fs < 0.0 || self.p_fw < 0.0 {
            return bad("strength penalties must be >= 0".into());
        }
        if self.process.length_cap == 0 {
            return bad("process.length_cap must be > 0".into());
        }
        if self.process.length_penalty < 0.0 || self.process.question_penalty < 0.0 {
            return bad("process penalties must be >= 0".into());
        }
        Ok(())
    }
}

/// The prediction after filling absent labels from the car estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPrediction {
    pub car_hat: Option<f64>,
    pub direction: Direction,
    pub strength: Strength,
    pub event_type: Option<EventType>,
}

/// Fills a missing direction with the sign of `car_hat` and a missing
/// strength with `|car_hat| > tau`. Explicit labels are kept as given. With
/// no car estimate and no explicit strength the prediction counts as weak.
pub fn normalize_prediction(pred: &Prediction, cfg: &RewardConfig) -> Result<NormalizedPrediction, RewardError> {
    if let Some(c) = pred.car_hat {
        if !c.is_finite() {
            return Err(RewardError::NonFinitePrediction(c));
        }
    }
    let direction = match (pred.direction_hat, pred.car_hat) {
        (Some(d), _) => d,
        (None, Some(c)) => Direction::from_value(c, cfg.neutral_band),
        (None, None) => return Err(RewardError::NoDirection),
    };
    let strength = match (pred.strength_hat, pred.car_hat) {
        (Some(s), _) => s,
        (None, Some(c)) => Strength::from_magnitude(c, cfg.tau),
        (None, None) => Strength::Weak,
    };
    Ok(NormalizedPrediction { car_hat: pred.car_hat, direction, strength, event_type: pred.event_type_hat })
}

/// 1 on a match, `-lambda_dir` for strictly opposite signs, 0 otherwise.
pub fn direction_score(predicted: Direction, actual: Direction, lambda_dir: f64) -> f64 {
    use Direction::*;
    match (predicted, actual) {
        _ if predicted == actual => 1.0,
        (Positive, Negative) | (Negative, Positive) => -lambda_dir,
        _ => 0.0,
    }
}

/// Returns `(score, payoff discount)` for the event-type soft gate.
pub fn event_type_score(predicted: Option<EventType>, actual: EventType, cfg: &RewardConfig) -> (f64, f64) {
    match predicted {
        Some(e) if e == actual => (1.0, 1.0),
        Some(_) => (-cfg.lambda_evt, cfg.alpha_discount),
        None => (-cfg.lambda_miss, cfg.alpha_discount),
    }
}

/// Cost-aware payoff of trading one event in the predicted direction.
pub fn trade_payoff(direction: Direction, car: f64, kappa: f64) -> f64 {
    match direction {
        Direction::Positive => car - kappa,
        Direction::Negative => -car - kappa,
        Direction::Neutral => 0.0,
    }
}

/// Discounted, clipped payoff. Zero unless the gate is open and the
/// prediction asks for a (strong) trade.
pub fn clipped_pnl_reward(payoff: f64, discount: f64, strength: Strength, gate_open: bool, rho: f64) -> f64 {
    if !gate_open || strength == Strength::Weak {
        return 0.0;
    }
    (discount * payoff).clamp(-rho, rho)
}

pub fn strength_regularizer(predicted: Strength, actual: Strength, p_fs: f64, p_fw: f64) -> f64 {
    match (predicted, actual) {
        (Strength::Strong, Strength::Weak) => -p_fs,
        (Strength::Weak, Strength::Strong) => -p_fw,
        _ => 0.0,
    }
}

/// `exp(-|car_hat - car| / sigma)` when the gate is open; `None` when there
/// is no car estimate to shape.
pub fn magnitude_reward(car_hat: Option<f64>, car: f64, sigma: f64, gate_open: bool) -> Option<f64> {
    if !gate_open {
        return Some(0.0);
    }
    car_hat.map(|c| (-(c - car).abs() / sigma).exp())
}

/// Section coverage minus length and self-questioning penalties, in [0, 1].
pub fn process_reward(doc: Option<&ResponseDoc>, gate_open: bool, cfg: &ProcessConfig) -> f64 {
    let Some(doc) = doc else { return 0.0 };
    if !gate_open {
        return 0.0;
    }
    let coverage = if cfg.required_sections.is_empty() {
        1.0
    } else {
        let present = cfg
            .required_sections
            .iter()
            .filter(|req| doc.sections.iter().any(|s| &s.name == *req))
            .count();
        present as f64 / cfg.required_sections.len() as f64
    };
    let overflow = (doc.total_chars() as f64 / cfg.length_cap as f64 - 1.0).max(0.0);
    let score = coverage - cfg.length_penalty * overflow - cfg.question_penalty * doc.question_count as f64;
    score.clamp(0.0, 1.0)
}

/// Every component of one scored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub direction_score: f64,
    /// 1 when the direction gate is open, 0 when closed.
    pub gate: u8,
    pub event_score: f64,
    pub event_discount: f64,
    pub payoff: f64,
    pub pnl_reward: f64,
    pub magnitude_reward: f64,
    pub process_reward: f64,
    pub strength_reward: f64,
    pub total: f64,
    pub actual_direction: Direction,
    pub actual_strength: Strength,
    pub prediction: NormalizedPrediction,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl RewardBreakdown {
    pub fn gate_open(&self) -> bool {
        self.gate == 1
    }
}

/// Scores `pred` against `truth`. Pure in its inputs.
pub fn compose_reward(pred: &Prediction, truth: &Truth, cfg: &RewardConfig) -> Result<RewardBreakdown, RewardError> {
    if !truth.car.is_finite() {
        return Err(RewardError::NonFiniteTruth(truth.car));
    }
    let p = normalize_prediction(pred, cfg)?;
    let actual_direction = Direction::from_value(truth.car, cfg.neutral_band);
    let actual_strength = Strength::from_magnitude(truth.car, cfg.tau);

    let direction_score = direction_score(p.direction, actual_direction, cfg.lambda_dir);
    let gate_open = direction_score >= 0.0;
    let (event_score, event_discount) = event_type_score(p.event_type, truth.event_type, cfg);
    let payoff = trade_payoff(p.direction, truth.car, cfg.kappa);
    let pnl_reward = clipped_pnl_reward(payoff, event_discount, p.strength, gate_open, cfg.rho);
    let mut diagnostics = Vec::new();
    let magnitude_reward = magnitude_reward(p.car_hat, truth.car, cfg.sigma, gate_open).unwrap_or_else(|| {
        diagnostics.push("no car estimate: magnitude term set to 0".to_string());
        0.0
    });
    let process_reward = process_reward(pred.response_doc.as_ref(), gate_open, &cfg.process);
    let strength_reward = strength_regularizer(p.strength, actual_strength, cfg.p_fs, cfg.p_fw);

    let mut total = cfg.w_dir * direction_score;
    if gate_open {
        total += cfg.w_evt * event_score
            + cfg.w_pnl * pnl_reward
            + cfg.w_mag * magnitude_reward
            + cfg.w_proc * process_reward
            + cfg.w_str * strength_reward;
    }
    Ok(RewardBreakdown {
        direction_score,
        gate: gate_open as u8,
        event_score,
        event_discount,
        payoff,
        pnl_reward,
        magnitude_reward,
        process_reward,
        strength_reward,
        total,
        actual_direction,
        actual_strength,
        prediction: p,
        diagnostics,
    })
}
