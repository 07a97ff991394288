//! Seeded synthetic universe with planted ground truth.
//!
//! Daily stock returns are generated as
//!
//! ```text
//! r[i,t] = alpha[i] + beta[i]·r_m[seg(i),t] + x[i,t]·lambda[t] + event[i,t] + noise·z
//! ```
//!
//! where `x[i,t]` are the standardized style exposures computed from bars
//! strictly before `t` (exactly as the risk-factor module computes them)
//! followed by the industry one-hot block. Opens equal the previous close, so
//! each day's return is realised between the open and the close.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, IndexBar, Metadata, PriceBar, PriceTable, RawEvent, StockMeta};
use crate::labeling::{Direction, EventType};
use crate::riskfactors::{self, StyleConfig, N_STYLES};

/// A per-stock coefficient: fixed, or drawn uniformly per stock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamDraw {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
}

impl ParamDraw {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ParamDraw::Fixed(v) => v,
            ParamDraw::Uniform { lo, hi } if hi > lo => rng.random_range(lo..hi),
            ParamDraw::Uniform { lo, .. } => lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedDirection {
    Positive,
    Negative,
    Random,
}

/// Events of one type with a common effect size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedEventSpec {
    pub event_type: EventType,
    pub count: usize,
    /// Total abnormal return planted per event (absolute value).
    pub magnitude: f64,
    /// Relative uniform jitter of the magnitude, e.g. 0.2 for ±20%.
    #[serde(default)]
    pub magnitude_jitter: f64,
    #[serde(default = "default_direction")]
    pub direction: PlantedDirection,
    /// Share of the effect realised on signal day +1, +2, ...; sums to 1.
    #[serde(default = "default_profile")]
    pub profile: Vec<f64>,
}

fn default_direction() -> PlantedDirection {
    PlantedDirection::Random
}

fn default_profile() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_stocks: usize,
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub skip_weekends: bool,
    pub n_industries: usize,
    /// Benchmark index ids; stocks are assigned to segments round-robin.
    pub segments: Vec<String>,
    pub alpha: ParamDraw,
    pub beta: ParamDraw,
    pub market_mean: f64,
    pub market_vol: f64,
    pub noise_std: f64,
    /// When false, stocks that carry events get no idiosyncratic noise, so
    /// their only idiosyncratic return is the planted effect.
    pub noise_on_event_stocks: bool,
    pub style_premia_std: f64,
    pub industry_premia_std: f64,
    pub style: StyleConfig,
    pub events: Vec<PlantedEventSpec>,
    /// Earliest calendar index an event may be placed on.
    pub first_event_day: usize,
    /// Days kept free of events at the end of the calendar.
    pub end_margin: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_stocks: 100,
            n_days: 320,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date"),
            skip_weekends: true,
            n_industries: 5,
            segments: vec!["LARGE".into(), "MID".into(), "SMALL".into()],
            alpha: ParamDraw::Uniform { lo: -0.0005, hi: 0.0005 },
            beta: ParamDraw::Uniform { lo: 0.6, hi: 1.4 },
            market_mean: 0.0003,
            market_vol: 0.01,
            noise_std: 0.01,
            noise_on_event_stocks: true,
            style_premia_std: 0.001,
            industry_premia_std: 0.001,
            style: StyleConfig::default(),
            events: vec![
                PlantedEventSpec {
                    event_type: EventType::RiskWarning,
                    count: 60,
                    magnitude: 0.05,
                    magnitude_jitter: 0.0,
                    direction: PlantedDirection::Negative,
                    profile: vec![0.6, 0.4],
                },
                PlantedEventSpec {
                    event_type: EventType::Industry,
                    count: 60,
                    magnitude: 0.02,
                    magnitude_jitter: 0.0,
                    direction: PlantedDirection::Random,
                    profile: vec![0.6, 0.4],
                },
            ],
            first_event_day: 130,
            end_margin: 12,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_string()));
        if self.n_stocks == 0 || self.n_days < 2 || self.n_industries == 0 || self.segments.is_empty() {
            return bad("n_stocks, n_industries and segments must be positive and n_days >= 2");
        }
        if !(self.noise_std >= 0.0 && self.market_vol >= 0.0) {
            return bad("noise_std and market_vol must be >= 0");
        }
        if !(self.style_premia_std >= 0.0 && self.industry_premia_std >= 0.0) {
            return bad("premia std must be >= 0");
        }
        self.style.validate().map_err(|e| DataError::InvalidSpec(e.to_string()))?;
        let has_events = self.events.iter().any(|e| e.count > 0);
        if has_events && self.first_event_day + self.end_margin >= self.n_days {
            return bad("no room for events: first_event_day + end_margin >= n_days");
        }
        for e in &self.events {
            if !(e.magnitude >= 0.0 && e.magnitude < 0.5) || !(0.0..1.0).contains(&e.magnitude_jitter) {
                return bad("event magnitude must be in [0, 0.5) and jitter in [0, 1)");
            }
            if e.profile.is_empty() || e.profile.len() > self.end_margin {
                return bad("event profile must be non-empty and fit inside end_margin");
            }
            if (e.profile.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad("event profile must sum to 1");
            }
        }
        Ok(())
    }

    pub fn calendar_days(&self) -> Vec<NaiveDate> {
        let mut out = Vec::with_capacity(self.n_days);
        let mut d = self.start_date;
        while out.len() < self.n_days {
            if !(self.skip_weekends && matches!(d.weekday(), Weekday::Sat | Weekday::Sun)) {
                out.push(d);
            }
            d = d + Days::new(1);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockTruth {
    pub ticker: String,
    pub alpha: f64,
    pub beta: f64,
    pub industry: String,
    pub segment: String,
    pub shares_outstanding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub event_id: String,
    pub ticker: String,
    pub event_type: EventType,
    pub timestamp: NaiveDateTime,
    pub signal_day: usize,
    pub signal_date: NaiveDate,
    pub direction: Direction,
    /// Signed sum of the daily effects.
    pub total_effect: f64,
    /// Signed effect on signal day +1, +2, ...
    pub daily_effects: Vec<f64>,
}

/// Everything planted into a synthetic universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLedger {
    pub spec: SynthSpec,
    pub factor_names: Vec<String>,
    pub stocks: Vec<StockTruth>,
    /// Per-day premia; `None` before exposures are computable.
    pub premia: Vec<Option<Vec<f64>>>,
    /// Per-segment market returns (day 0 carries 0).
    pub market_returns: BTreeMap<String, Vec<f64>>,
    pub events: Vec<PlantedEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUniverse {
    pub table: PriceTable,
    pub events: Vec<RawEvent>,
    pub metadata: Metadata,
    pub ledger: SynthLedger,
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Generates prices, events and the ground-truth ledger for `spec`.
pub fn synth_universe(spec: &SynthSpec) -> Result<SynthUniverse, DataError> {
    spec.validate()?;
    let days = spec.calendar_days();
    let n_days = days.len();
    let n = spec.n_stocks;
    let mut param_rng = rng_stream(spec.seed, 0);
    let mut market_rng = rng_stream(spec.seed, 1);
    let mut noise_rng = rng_stream(spec.seed, 2);
    let mut premia_rng = rng_stream(spec.seed, 3);
    let mut event_rng = rng_stream(spec.seed, 4);
    let mut volume_rng = rng_stream(spec.seed, 5);

    let industries: Vec<String> = (0..spec.n_industries).map(|k| format!("IND{k:02}")).collect();
    let width = (n.max(2) - 1).to_string().len();
    let stocks: Vec<StockTruth> = (0..n)
        .map(|i| StockTruth {
            ticker: format!("S{i:0width$}"),
            alpha: spec.alpha.draw(&mut param_rng),
            beta: spec.beta.draw(&mut param_rng),
            industry: industries[i % spec.n_industries].clone(),
            segment: spec.segments[i % spec.segments.len()].clone(),
            shares_outstanding: (param_rng.random_range(18.0f64..22.5)).exp().round(),
        })
        .collect();
    let initial: Vec<f64> = (0..n).map(|_| param_rng.random_range(5.0..50.0)).collect();
    let segment_of: Vec<usize> = (0..n).map(|i| i % spec.segments.len()).collect();

    // events: (stock, signal day) -> daily effects
    let mut planted = Vec::new();
    let mut effects: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut stock_order: Vec<usize> = (0..n).collect();
    stock_order.shuffle(&mut event_rng);
    let mut next_stock = 0usize;
    let last_event_day = n_days.saturating_sub(1 + spec.end_margin);
    let session = NaiveTime::from_hms_opt(9, 30, 0).expect("valid time");
    for es in &spec.events {
        for _ in 0..es.count {
            let stock = stock_order[next_stock % n];
            next_stock += 1;
            let day = event_rng.random_range(spec.first_event_day..=last_event_day);
            let sign = match es.direction {
                PlantedDirection::Positive => 1.0,
                PlantedDirection::Negative => -1.0,
                PlantedDirection::Random => {
                    if event_rng.random_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            let jitter = if es.magnitude_jitter > 0.0 {
                1.0 + event_rng.random_range(-es.magnitude_jitter..es.magnitude_jitter)
            } else {
                1.0
            };
            let total = sign * es.magnitude * jitter;
            let daily: Vec<f64> = es.profile.iter().map(|w| w * total).collect();
            for (k, e) in daily.iter().enumerate() {
                *effects[stock].entry(day + 1 + k).or_insert(0.0) += e;
            }
            // between the session open and 23:59 of the signal day
            let minutes = event_rng.random_range(0..(14 * 60 + 29));
            let timestamp = days[day].and_time(session) + chrono::Duration::minutes(minutes);
            planted.push(PlantedEvent {
                event_id: format!("EV{:05}", planted.len()),
                ticker: stocks[stock].ticker.clone(),
                event_type: es.event_type,
                timestamp,
                signal_day: day,
                signal_date: days[day],
                direction: Direction::from_value(total, 0.0),
                total_effect: daily.iter().sum(),
                daily_effects: daily,
            });
        }
    }

    let need = spec.style.required_bars();
    let n_factors = N_STYLES + spec.n_industries;
    let mut closes: Vec<Vec<f64>> = vec![Vec::with_capacity(n_days); n];
    let mut opens: Vec<Vec<f64>> = vec![Vec::with_capacity(n_days); n];
    let mut volumes: Vec<Vec<f64>> = vec![Vec::with_capacity(n_days); n];
    let mut market_returns: BTreeMap<String, Vec<f64>> =
        spec.segments.iter().map(|s| (s.clone(), Vec::with_capacity(n_days))).collect();
    let mut index_levels: Vec<Vec<f64>> = vec![Vec::with_capacity(n_days); spec.segments.len()];
    let mut premia_ledger = Vec::with_capacity(n_days);

    for t in 0..n_days {
        let rm: Vec<f64> = (0..spec.segments.len())
            .map(|_| if t == 0 { 0.0 } else { spec.market_mean + spec.market_vol * normal(&mut market_rng) })
            .collect();
        for (k, seg) in spec.segments.iter().enumerate() {
            market_returns.get_mut(seg).expect("segment").push(rm[k]);
            let level = index_levels[k].last().map(|l| l * (1.0 + rm[k])).unwrap_or(1000.0);
            index_levels[k].push(level);
        }

        let factor_part: Vec<f64> = if t >= need && (spec.style_premia_std > 0.0 || spec.industry_premia_std > 0.0) {
            let mut raw: Vec<[f64; N_STYLES]> = (0..n)
                .map(|i| {
                    let shares = vec![stocks[i].shares_outstanding; need];
                    riskfactors::raw_styles(&closes[i][t - need..t], &volumes[i][t - need..t], &shares, &spec.style)
                })
                .collect();
            riskfactors::standardize_styles(&mut raw, spec.style.winsor_sigma);
            let lambda: Vec<f64> = (0..n_factors)
                .map(|j| {
                    let sd = if j < N_STYLES { spec.style_premia_std } else { spec.industry_premia_std };
                    sd * normal(&mut premia_rng)
                })
                .collect();
            let part = (0..n)
                .map(|i| {
                    let styles: f64 = raw[i].iter().zip(&lambda).map(|(x, l)| x * l).sum();
                    styles + lambda[N_STYLES + i % spec.n_industries]
                })
                .collect();
            premia_ledger.push(Some(lambda));
            part
        } else {
            premia_ledger.push(None);
            vec![0.0; n]
        };

        for i in 0..n {
            let turnover = volume_rng.random_range(0.002..0.02);
            volumes[i].push((stocks[i].shares_outstanding * turnover).round());
            if t == 0 {
                closes[i].push(initial[i]);
                opens[i].push(initial[i]);
                continue;
            }
            let noisy = spec.noise_on_event_stocks || effects[i].is_empty();
            let noise = if noisy && spec.noise_std > 0.0 { spec.noise_std * normal(&mut noise_rng) } else { 0.0 };
            let event = effects[i].get(&t).copied().unwrap_or(0.0);
            let r = stocks[i].alpha + stocks[i].beta * rm[segment_of[i]] + factor_part[i] + event + noise;
            if r <= -0.95 {
                return Err(DataError::InvalidSpec(format!("generated return {r} on day {t} is too negative")));
            }
            let prev = closes[i][t - 1];
            opens[i].push(prev);
            closes[i].push(prev * (1.0 + r));
        }
    }

    let mut table = PriceTable::default();
    let mut metadata = Metadata::new();
    for (i, s) in stocks.iter().enumerate() {
        let bars = (0..n_days)
            .map(|t| PriceBar {
                date: days[t],
                open: opens[i][t],
                close: closes[i][t],
                volume: volumes[i][t],
                shares_outstanding: Some(s.shares_outstanding),
            })
            .collect();
        table.stocks.insert(s.ticker.clone(), bars);
        metadata.insert(s.ticker.clone(), StockMeta { industry: s.industry.clone(), cap_segment: s.segment.clone() });
    }
    for (k, seg) in spec.segments.iter().enumerate() {
        table.indices.insert(
            seg.clone(),
            (0..n_days).map(|t| IndexBar { date: days[t], close: index_levels[k][t] }).collect(),
        );
    }

    planted.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.event_id.cmp(&b.event_id)));
    let events = planted
        .iter()
        .map(|p| RawEvent {
            event_id: p.event_id.clone(),
            ticker: p.ticker.clone(),
            timestamp: p.timestamp,
            event_type: Some(p.event_type),
            text_ref: Some(format!("synthetic/{}", p.event_id)),
        })
        .collect();

    Ok(SynthUniverse {
        table,
        events,
        metadata,
        ledger: SynthLedger {
            spec: spec.clone(),
            factor_names: riskfactors::factor_names(&industries),
            stocks,
            premia: premia_ledger,
            market_returns,
            events: planted,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::MarketPanel;

    fn quiet(n_stocks: usize, n_days: usize) -> SynthSpec {
        SynthSpec {
            n_stocks,
            n_days,
            noise_std: 0.0,
            style_premia_std: 0.0,
            industry_premia_std: 0.0,
            events: vec![],
            alpha: ParamDraw::Fixed(0.001),
            beta: ParamDraw::Fixed(1.2),
            ..SynthSpec::default()
        }
    }

    #[test]
    fn noiseless_returns_follow_market_model() {
        let u = synth_universe(&quiet(3, 60)).unwrap();
        let panel = MarketPanel::from_table(&u.table, &u.metadata).unwrap();
        for (i, s) in panel.stocks().iter().enumerate() {
            let rm = panel.benchmark_returns(i).unwrap();
            for t in 1..60 {
                let r = s.returns[t].unwrap();
                assert!((r - (0.001 + 1.2 * rm[t].unwrap())).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let spec = SynthSpec { n_stocks: 20, n_days: 200, first_event_day: 130, ..SynthSpec::default() };
        let a = synth_universe(&spec).unwrap();
        let b = synth_universe(&spec).unwrap();
        assert_eq!(a, b);
        let c = synth_universe(&SynthSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.table, c.table);
    }

    #[test]
    fn events_land_on_signal_days_with_planted_effects() {
        let spec = SynthSpec {
            n_stocks: 10,
            n_days: 200,
            events: vec![PlantedEventSpec {
                event_type: EventType::Dividend,
                count: 5,
                magnitude: 0.03,
                magnitude_jitter: 0.0,
                direction: PlantedDirection::Positive,
                profile: vec![1.0],
            }],
            ..quiet(10, 200)
        };
        let u = synth_universe(&spec).unwrap();
        let panel = MarketPanel::from_table(&u.table, &u.metadata).unwrap();
        assert_eq!(u.events.len(), 5);
        for p in &u.ledger.events {
            assert_eq!(panel.calendar().assign_signal_day(p.timestamp).unwrap(), p.signal_day);
            assert_eq!(p.total_effect, 0.03);
            let i = panel.stock_index(&p.ticker).unwrap();
            let t = p.signal_day + 1;
            let rm = panel.benchmark_returns(i).unwrap()[t].unwrap();
            let ar = panel.stock(i).returns[t].unwrap() - (0.001 + 1.2 * rm);
            assert!((ar - 0.03).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(synth_universe(&SynthSpec { n_stocks: 0, ..SynthSpec::default() }).is_err());
        assert!(synth_universe(&SynthSpec { noise_std: -1.0, ..SynthSpec::default() }).is_err());
        assert!(synth_universe(&SynthSpec { n_days: 100, ..SynthSpec::default() }).is_err());
    }
}
