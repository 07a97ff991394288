//! Event labels, the event dataset format and per-type CAR statistics.

mod dataset;
mod stats;
mod taxonomy;

pub use dataset::{read_dataset, read_dataset_file, write_dataset, write_dataset_file};
pub use stats::{event_type_stats, quantile, TypeStat, TypeStats, STAT_QUANTILES};
pub use taxonomy::{Direction, EventType, Strength};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventstudy::CarRow;
use crate::marketdata::RawEvent;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("car is not finite: {0}")]
    NonFiniteCar(f64),
    #[error("invalid label config: {0}")]
    InvalidConfig(String),
    #[error("event {0} has no event_type and no annotation was provided")]
    MissingEventType(String),
    #[error("car result for {found} does not belong to event {expected}")]
    Mismatch { expected: String, found: String },
    #[error("unknown event type label `{0}`")]
    UnknownEventType(String),
    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Threshold settings shared by labeling and reward scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelConfig {
    /// Strength threshold: strong iff |car| > tau.
    pub tau: f64,
    /// Cars with |car| <= neutral_band are labelled neutral.
    pub neutral_band: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { tau: 0.01, neutral_band: 0.0 }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(LabelError::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.neutral_band >= 0.0 && self.neutral_band.is_finite()) {
            return Err(LabelError::InvalidConfig(format!(
                "neutral_band must be >= 0, got {}",
                self.neutral_band
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub direction: Direction,
    pub strength: Strength,
}

/// Direction from the sign of `car` outside the neutral band; strength by the
/// strict threshold `|car| > tau`.
pub fn derive_label(car: f64, tau: f64, neutral_band: f64) -> Result<Label, LabelError> {
    if !car.is_finite() {
        return Err(LabelError::NonFiniteCar(car));
    }
    LabelConfig { tau, neutral_band }.validate()?;
    Ok(Label {
        direction: Direction::from_value(car, neutral_band),
        strength: Strength::from_magnitude(car, tau),
    })
}

/// One record of the event dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledEvent {
    pub event_id: String,
    pub news_ref: String,
    pub t0: NaiveDateTime,
    pub ticker: String,
    pub event_type: EventType,
    pub direction: Direction,
    pub strength: Strength,
    pub car: f64,
}

impl LabeledEvent {
    pub fn label(&self) -> Label {
        Label { direction: self.direction, strength: self.strength }
    }

    /// True when the stored labels agree with `car` under `cfg`.
    pub fn is_consistent(&self, cfg: &LabelConfig) -> bool {
        derive_label(self.car, cfg.tau, cfg.neutral_band)
            .map(|l| l == self.label())
            .unwrap_or(false)
    }
}

/// Assembles a dataset record from an event and its CAR row.
///
/// `annotation` supplies the event type when the raw event carries none.
pub fn build_labeled_record(
    event: &RawEvent,
    car_result: &CarRow,
    cfg: &LabelConfig,
    annotation: Option<EventType>,
) -> Result<LabeledEvent, LabelError> {
    if car_result.event_id != event.event_id {
        return Err(LabelError::Mismatch {
            expected: event.event_id.clone(),
            found: car_result.event_id.clone(),
        });
    }
    let event_type = event
        .event_type
        .or(annotation)
        .ok_or_else(|| LabelError::MissingEventType(event.event_id.clone()))?;
    let label = derive_label(car_result.car, cfg.tau, cfg.neutral_band)?;
    Ok(LabeledEvent {
        event_id: event.event_id.clone(),
        news_ref: event.text_ref.clone().unwrap_or_else(|| event.event_id.clone()),
        t0: event.timestamp,
        ticker: event.ticker.clone(),
        event_type,
        direction: label.direction,
        strength: label.strength,
        car: car_result.car,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn raw(event_type: Option<EventType>) -> RawEvent {
        RawEvent {
            event_id: "e1".into(),
            ticker: "AAA".into(),
            timestamp: NaiveDate::from_ymd_opt(2024, 3, 4).unwrap().and_hms_opt(10, 0, 0).unwrap(),
            event_type,
            text_ref: Some("news-1".into()),
        }
    }

    fn car(car: f64) -> CarRow {
        CarRow {
            event_id: "e1".into(),
            ticker: "AAA".into(),
            t0: NaiveDate::from_ymd_opt(2024, 3, 4).unwrap(),
            car,
            window_start: NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(),
            window_end: NaiveDate::from_ymd_opt(2024, 3, 6).unwrap(),
            missing_days: 0,
            alpha: 0.0,
            beta: 1.0,
        }
    }

    #[test]
    fn label_examples() {
        assert_eq!(
            derive_label(0.05, 0.01, 0.0).unwrap(),
            Label { direction: Direction::Positive, strength: Strength::Strong }
        );
        assert_eq!(
            derive_label(0.0, 0.3, 0.0).unwrap(),
            Label { direction: Direction::Neutral, strength: Strength::Weak }
        );
        assert_eq!(
            derive_label(-0.008, 0.01, 0.0).unwrap(),
            Label { direction: Direction::Negative, strength: Strength::Weak }
        );
        assert_eq!(derive_label(0.004, 0.01, 0.005).unwrap().direction, Direction::Neutral);
    }

    #[test]
    fn label_rejects_bad_inputs() {
        assert!(matches!(derive_label(f64::NAN, 0.01, 0.0), Err(LabelError::NonFiniteCar(_))));
        assert!(matches!(derive_label(0.01, 0.0, 0.0), Err(LabelError::InvalidConfig(_))));
        assert!(matches!(derive_label(0.01, 0.01, -1.0), Err(LabelError::InvalidConfig(_))));
    }

    #[test]
    fn record_assembly() {
        let cfg = LabelConfig::default();
        let rec = build_labeled_record(&raw(Some(EventType::RiskWarning)), &car(-0.04), &cfg, None).unwrap();
        assert_eq!(rec.event_type, EventType::RiskWarning);
        assert_eq!(rec.direction, Direction::Negative);
        assert_eq!(rec.strength, Strength::Strong);
        assert_eq!(rec.car, -0.04);
        assert_eq!(rec.news_ref, "news-1");
        assert!(rec.is_consistent(&cfg));
    }

    #[test]
    fn car_exactly_tau_is_weak() {
        let rec = build_labeled_record(&raw(Some(EventType::Dividend)), &car(0.01), &LabelConfig::default(), None)
            .unwrap();
        assert_eq!(rec.strength, Strength::Weak);
    }

    #[test]
    fn missing_type_uses_annotation_or_fails() {
        let cfg = LabelConfig::default();
        assert!(matches!(
            build_labeled_record(&raw(None), &car(0.02), &cfg, None),
            Err(LabelError::MissingEventType(_))
        ));
        let rec = build_labeled_record(&raw(None), &car(0.02), &cfg, Some(EventType::Financing)).unwrap();
        assert_eq!(rec.event_type, EventType::Financing);
        // explicit type on the event wins over the annotation
        let rec = build_labeled_record(&raw(Some(EventType::Industry)), &car(0.02), &cfg, Some(EventType::Financing))
            .unwrap();
        assert_eq!(rec.event_type, EventType::Industry);
    }

    #[test]
    fn mismatched_result_rejected() {
        let mut c = car(0.02);
        c.event_id = "other".into();
        assert!(matches!(
            build_labeled_record(&raw(Some(EventType::Dividend)), &c, &LabelConfig::default(), None),
            Err(LabelError::Mismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn strength_monotone_in_magnitude(a in 0.0f64..0.2, b in 0.0f64..0.2, tau in 0.001f64..0.1, neg in any::<bool>()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = if neg { -1.0 } else { 1.0 };
            let l_lo = derive_label(s * lo, tau, 0.0).unwrap();
            let l_hi = derive_label(s * hi, tau, 0.0).unwrap();
            prop_assert!(!(l_lo.strength == Strength::Strong && l_hi.strength == Strength::Weak));
            prop_assert_eq!(l_lo, derive_label(s * lo, tau, 0.0).unwrap());
        }
    }
}
