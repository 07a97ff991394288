use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{EventType, LabeledEvent};

/// Quantile levels reported per event type.
pub const STAT_QUANTILES: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStat {
    pub event_type: EventType,
    pub count: usize,
    pub mean_abs_car: f64,
    /// Quantiles of the signed CAR at [`STAT_QUANTILES`]; `None` when the
    /// type has no records in the window.
    pub quantiles: Option<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Always one entry per taxonomy label, in taxonomy order.
    pub per_type: Vec<TypeStat>,
}

impl TypeStats {
    pub fn get(&self, t: EventType) -> &TypeStat {
        &self.per_type[t.index()]
    }

    pub fn total(&self) -> usize {
        self.per_type.iter().map(|s| s.count).sum()
    }
}

/// Linear-interpolation quantile of an ascending-sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Per-type statistics over records whose event date falls in
/// `[start, end]` (inclusive).
pub fn event_type_stats(records: &[LabeledEvent], start: NaiveDate, end: NaiveDate) -> TypeStats {
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); EventType::COUNT];
    for r in records {
        let d = r.t0.date();
        if d >= start && d <= end {
            buckets[r.event_type.index()].push(r.car);
        }
    }
    let per_type = EventType::ALL
        .iter()
        .zip(buckets)
        .map(|(&event_type, mut cars)| {
            let count = cars.len();
            if count == 0 {
                return TypeStat { event_type, count, mean_abs_car: 0.0, quantiles: None };
            }
            let mean_abs_car = cars.iter().map(|c| c.abs()).sum::<f64>() / count as f64;
            cars.sort_by(f64::total_cmp);
            let quantiles = STAT_QUANTILES.map(|q| quantile(&cars, q));
            TypeStat { event_type, count, mean_abs_car, quantiles: Some(quantiles) }
        })
        .collect();
    TypeStats { window_start: start, window_end: end, per_type }
}
