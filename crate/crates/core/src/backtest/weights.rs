use serde::{Deserialize, Serialize};

use super::WeightMode;
use crate::labeling::{EventType, LabeledEvent};
use crate::marketdata::TradingCalendar;

/// A historical car together with the first trading day whose close makes
/// it known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownCar {
    pub event_type: EventType,
    pub car: f64,
    pub known_day: usize,
}

impl KnownCar {
    /// Records outside the calendar are dropped.
    pub fn from_records(records: &[LabeledEvent], calendar: &TradingCalendar, horizon: usize) -> Vec<KnownCar> {
        records
            .iter()
            .filter_map(|r| {
                let day = calendar.assign_signal_day(r.t0).ok()?;
                Some(KnownCar { event_type: r.event_type, car: r.car, known_day: day + horizon })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeWeights {
    /// Indexed by taxonomy order.
    pub weights: [f64; EventType::COUNT],
    pub as_of: usize,
    pub window: usize,
    pub n_records: usize,
    pub diagnostic: Option<String>,
}

impl TypeWeights {
    pub fn uniform(as_of: usize, window: usize, diagnostic: Option<String>) -> Self {
        Self { weights: [1.0 / EventType::COUNT as f64; EventType::COUNT], as_of, window, n_records: 0, diagnostic }
    }

    pub fn get(&self, t: EventType) -> f64 {
        self.weights[t.index()]
    }
}

/// Weights from cars known by the close of `as_of`, over the trailing
/// `window` trading days `(as_of - window, as_of]`.
///
/// `Type` mode uses mean |car| per type, normalised to sum 1; `Equal` gives
/// every observed type the same weight. With no usable history the weights
/// are uniform over the taxonomy.
pub fn estimate_type_weights(history: &[KnownCar], as_of: usize, window: usize, mode: WeightMode) -> TypeWeights {
    let lo = (as_of + 1).saturating_sub(window);
    let mut sum = [0.0; EventType::COUNT];
    let mut count = [0usize; EventType::COUNT];
    for h in history {
        if h.known_day >= lo && h.known_day <= as_of {
            sum[h.event_type.index()] += h.car.abs();
            count[h.event_type.index()] += 1;
        }
    }
    let n_records: usize = count.iter().sum();
    if n_records == 0 {
        return TypeWeights::uniform(as_of, window, Some("no known cars in window; uniform weights".into()));
    }
    let raw: [f64; EventType::COUNT] = std::array::from_fn(|k| match (count[k], mode) {
        (0, _) => 0.0,
        (n, WeightMode::Type) => sum[k] / n as f64,
        (_, WeightMode::Equal) => 1.0,
    });
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return TypeWeights {
            n_records,
            ..TypeWeights::uniform(as_of, window, Some("all known cars are zero; uniform weights".into()))
        };
    }
    TypeWeights { weights: raw.map(|w| w / total), as_of, window, n_records, diagnostic: None }
}
