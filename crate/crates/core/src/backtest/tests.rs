use super::*;
use crate::labeling::LabeledEvent;
use crate::marketdata::{IndexBar, MarketPanel, Metadata, PriceBar, PriceTable};
use chrono::NaiveDate;
use proptest::prelude::*;

fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    (0..n as u64).map(|i| start + chrono::Days::new(i)).collect()
}

/// Panel with one index and the given (open, close) bars per stock.
fn panel(stocks: &[(&str, Vec<(f64, f64)>)]) -> MarketPanel {
    let n = stocks.iter().map(|(_, b)| b.len()).max().unwrap();
    let ds = dates(n);
    let mut table = PriceTable::default();
    table.indices.insert("IDX".into(), ds.iter().map(|&date| IndexBar { date, close: 100.0 }).collect());
    for (t, bars) in stocks {
        table.stocks.insert(
            t.to_string(),
            bars.iter()
                .zip(&ds)
                .map(|(&(open, close), &date)| PriceBar { date, open, close, volume: 1e6, shares_outstanding: None })
                .collect(),
        );
    }
    MarketPanel::from_table(&table, &Metadata::new()).unwrap()
}

fn ts(day: usize, hour: u32) -> chrono::NaiveDateTime {
    dates(day + 1)[day].and_hms_opt(hour, 0, 0).unwrap()
}

fn signal(id: &str, ticker: &str, day: usize, side: Side, t: EventType) -> Signal {
    Signal {
        event_id: id.into(),
        ticker: ticker.into(),
        timestamp: ts(day, 10),
        side,
        strength: Strength::Strong,
        event_type: t,
        car_hat: None,
    }
}

fn known(t: EventType, car: f64, day: usize) -> KnownCar {
    KnownCar { event_type: t, car, known_day: day }
}

fn cfg0() -> BacktestConfig {
    BacktestConfig { cost: 0.0, initial_capital: 1000.0, ..BacktestConfig::default() }
}

#[test]
fn weight_examples() {
    use EventType::*;
    let h = [known(RiskWarning, -0.05, 1), known(Violation, 0.03, 2), known(Dividend, 0.02, 3)];
    let w = estimate_type_weights(&h, 10, 250, WeightMode::Type);
    assert!((w.get(RiskWarning) - 0.5).abs() < 1e-12);
    assert!((w.get(Violation) - 0.3).abs() < 1e-12);
    assert!((w.get(Dividend) - 0.2).abs() < 1e-12);
    assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let single = estimate_type_weights(&h[..1], 10, 250, WeightMode::Type);
    assert_eq!(single.get(RiskWarning), 1.0);

    let equal = estimate_type_weights(&h, 10, 250, WeightMode::Equal);
    assert!((equal.get(Dividend) - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(equal.get(Industry), 0.0);

    let none = estimate_type_weights(&[], 10, 250, WeightMode::Type);
    assert!(none.diagnostic.is_some());
    assert!(none.weights.iter().all(|w| (*w - 0.1).abs() < 1e-15));
}

#[test]
fn weights_only_see_known_cars_in_window() {
    use EventType::*;
    let h = [known(RiskWarning, 0.05, 11), known(Dividend, 0.02, 10), known(Violation, 0.03, 2)];
    // the risk warning car is known only after day 10's close
    let w = estimate_type_weights(&h, 10, 5, WeightMode::Type);
    assert_eq!(w.get(Dividend), 1.0);
    assert_eq!(w.n_records, 1);
}

#[test]
fn aggregation_examples() {
    use EventType::*;
    let h = [known(RiskWarning, 0.05, 0), known(Industry, 0.05, 0)];
    let w = estimate_type_weights(&h, 0, 10, WeightMode::Type);
    let a = signal("a", "X", 0, Side::Long, RiskWarning);
    let b = signal("b", "Y", 0, Side::Long, RiskWarning);
    let (plan, diags) = aggregate_daily_signals(&[&a, &b], &w, 100.0, 0.0, 1000.0, None, 0);
    assert_eq!(plan.len(), 2);
    assert!(plan.iter().all(|t| (t.notional - 25.0).abs() < 1e-12));
    assert!(diags.is_empty());

    let mut hold = a.clone();
    hold.side = Side::Hold;
    let mut weak = b.clone();
    weak.strength = Strength::Weak;
    assert!(aggregate_daily_signals(&[&hold, &weak], &w, 100.0, 0.0, 1000.0, None, 0).0.is_empty());

    let (plan, diags) = aggregate_daily_signals(&[&a, &b], &w, 100.0, 1000.0, 1000.0, Some(1.0), 0);
    assert!(plan.is_empty());
    assert_eq!(diags.len(), 1);
}

#[test]
fn cap_keeps_higher_weight_types_first() {
    use EventType::*;
    let h = [known(RiskWarning, 0.05, 0), known(Industry, 0.02, 0)];
    let w = estimate_type_weights(&h, 0, 10, WeightMode::Type);
    let mut late = signal("rw", "X", 0, Side::Short, RiskWarning);
    late.timestamp = ts(0, 15);
    let early = signal("ind", "Y", 0, Side::Long, Industry);
    // room for the risk-warning trade only
    let (plan, _) = aggregate_daily_signals(&[&early, &late], &w, 100.0, 0.0, 75.0, Some(1.0), 0);
    assert_eq!(plan.iter().map(|t| t.event_id.as_str()).collect::<Vec<_>>(), ["rw"]);
}

fn one_trade(side: Side, cost: f64, prices: Vec<(f64, f64)>) -> PortfolioState {
    let p = panel(&[("X", prices)]);
    let cfg = BacktestConfig { cost, holding: 1, ..cfg0() };
    let mut st = PortfolioState::new(1000.0);
    let t = PlannedTrade {
        event_id: "e".into(),
        ticker: "X".into(),
        event_type: EventType::Dividend,
        side,
        notional: 100.0,
        plan_day: 0,
        type_weight: 1.0,
        timestamp: ts(0, 10),
    };
    step_day(&mut st, 0, &p, &[], &cfg);
    step_day(&mut st, 1, &p, &[t], &cfg);
    st
}

#[test]
fn round_trip_arithmetic() {
    let long = one_trade(Side::Long, 0.0, vec![(10.0, 10.0), (10.0, 10.5)]);
    assert!((long.trades[0].pnl.unwrap() - 5.0).abs() < 1e-12);
    assert!((long.nav[1].1 - 1005.0).abs() < 1e-9);
    let short = one_trade(Side::Short, 0.0, vec![(10.0, 10.0), (10.0, 10.5)]);
    assert!((short.trades[0].pnl.unwrap() + 5.0).abs() < 1e-12);

    for side in [Side::Long, Side::Short] {
        let flat = one_trade(side, 0.0, vec![(10.0, 10.0), (10.0, 10.0)]);
        assert_eq!(flat.trades[0].pnl, Some(0.0));
        let costly = one_trade(side, 0.002, vec![(10.0, 10.0), (10.0, 10.0)]);
        assert!((costly.trades[0].pnl.unwrap() + 2.0 * 0.002 * 100.0).abs() < 1e-12);
        assert!((costly.nav[1].1 - (1000.0 - 0.4)).abs() < 1e-9);
    }
}

#[test]
fn idle_day_keeps_nav() {
    let p = panel(&[("X", vec![(10.0, 11.0), (11.0, 12.0)])]);
    let mut st = PortfolioState::new(1000.0);
    step_day(&mut st, 0, &p, &[], &cfg0());
    step_day(&mut st, 1, &p, &[], &cfg0());
    assert_eq!(st.nav.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1000.0, 1000.0]);
}

#[test]
fn missing_exit_bar_postpones_exit() {
    // no bar on day 2: a suspension over the scheduled exit
    let ds = dates(4);
    let mut table = PriceTable::default();
    table.indices.insert("IDX".into(), ds.iter().map(|&date| IndexBar { date, close: 100.0 }).collect());
    let bars = [(0, 10.0, 10.0), (1, 10.0, 10.0), (3, 10.0, 11.0)]
        .iter()
        .map(|&(i, open, close)| PriceBar { date: ds[i], open, close, volume: 1.0, shares_outstanding: None })
        .collect();
    table.stocks.insert("X".into(), bars);
    let p = MarketPanel::from_table(&table, &Metadata::new()).unwrap();
    let cfg = BacktestConfig { holding: 2, ..cfg0() };
    let signals = [signal("e", "X", 0, Side::Long, EventType::Dividend)];
    let run = run_backtest(&signals, &[], &p, &cfg).unwrap();
    let t = &run.state.trades[0];
    assert_eq!(t.scheduled_exit, dates(4)[2]);
    assert_eq!(t.exit_date, Some(dates(4)[3]));
    assert_eq!(t.exit_price, Some(11.0));
    assert!(run.state.diagnostics.iter().any(|d| d.contains("postponed")));
}

#[test]
fn empty_feed_is_flat() {
    let p = panel(&[("X", vec![(10.0, 10.5); 30])]);
    let run = run_backtest(&[], &[], &p, &cfg0()).unwrap();
    assert_eq!(run.nav_values(), vec![1000.0; 30]);
    assert_eq!(run.metrics.total_return, 0.0);
    assert_eq!(run.metrics.mdd, 0.0);
    assert_eq!(run.metrics.sharpe_daily, None);
    assert!(!run.metrics.diagnostics.is_empty());
}

#[test]
fn planned_trade_enters_next_open() {
    let bars = vec![(10.0, 10.0), (10.0, 11.0), (11.0, 12.1), (12.1, 12.1)];
    let p = panel(&[("X", bars)]);
    let signals = [signal("e", "X", 0, Side::Long, EventType::Dividend)];
    let run = run_backtest(&signals, &[], &p, &cfg0()).unwrap();
    let t = &run.state.trades[0];
    assert_eq!(t.entry_date, dates(4)[1]);
    assert_eq!(t.exit_date, Some(dates(4)[2]));
    // uniform weights without history: 0.1 * 10% of 1000
    assert!((t.notional - 10.0).abs() < 1e-12);
    assert!((t.pnl.unwrap() - 10.0 * 0.21).abs() < 1e-9);
}

#[test]
fn signal_before_open_belongs_to_previous_day() {
    let p = panel(&[("X", vec![(10.0, 10.0); 5])]);
    let mut s = signal("e", "X", 2, Side::Long, EventType::Dividend);
    s.timestamp = ts(2, 8);
    let run = run_backtest(&[s], &[], &p, &cfg0()).unwrap();
    assert_eq!(run.plans[0].plan_day, 1);
    assert_eq!(run.state.trades[0].entry_date, dates(5)[2]);
}

#[test]
fn metric_examples() {
    assert!((max_drawdown(&[1.0, 1.2, 0.9, 1.1]) - 0.25).abs() < 1e-12);
    assert_eq!(max_drawdown(&[1.0, 1.1, 1.2]), 0.0);
    let sr = sharpe_ratio(&[0.01, -0.01, 0.02]).unwrap();
    assert!((sr - 0.4364).abs() < 1e-4, "{sr}");
    assert_eq!(sharpe_ratio(&[0.01, 0.01]), None);
    assert_eq!(sharpe_ratio(&[0.01]), None);

    let pair = |c_hat: f64, c: f64| PredictionPair {
        car_hat: Some(c_hat),
        car: c,
        direction_hat: Direction::from_value(c_hat, 0.0),
        direction: Direction::from_value(c, 0.0),
        event_type_hat: Some(EventType::Dividend),
        event_type: EventType::Dividend,
    };
    let s = prediction_metrics(&[pair(0.02, 0.01), pair(-0.01, 0.0)]);
    assert!((s.mae.unwrap() - 0.01).abs() < 1e-15);
    assert!((s.rmse.unwrap() - 0.01).abs() < 1e-15);
    assert_eq!(s.da, Some(0.5));
    assert_eq!(s.eta, Some(1.0));
}

#[test]
fn signals_csv_round_trip() {
    let mut s = signal("e1", "X", 3, Side::Short, EventType::RiskWarning);
    s.car_hat = Some(-0.04);
    let t = signal("e2", "Y", 4, Side::Hold, EventType::Industry);
    let mut buf = Vec::new();
    write_signals(&[s.clone(), t.clone()], &mut buf).unwrap();
    let back = read_signals(buf.as_slice(), "mem").unwrap();
    assert_eq!(back, vec![s, t]);
    let bad = "event_id,ticker,timestamp,side,strength,event_type,car_hat\ne,X,2024-01-01T10:00:00,up,strong,dividend,\n";
    assert!(matches!(read_signals(bad.as_bytes(), "mem"), Err(BacktestError::Parse { line: 2, .. })));
}

#[test]
fn config_validation() {
    assert!(BacktestConfig::default().validate().is_ok());
    assert!(BacktestConfig { holding: 0, ..BacktestConfig::default() }.validate().is_err());
    assert!(BacktestConfig { max_position_ratio: Some(0.0), ..BacktestConfig::default() }.validate().is_err());
    assert!(BacktestConfig { cost: -0.1, ..BacktestConfig::default() }.validate().is_err());
    assert_eq!("equal".parse::<WeightMode>(), Ok(WeightMode::Equal));
}

/// Random walk prices for a few tickers and random signals over them.
fn random_setup(seed: u64, n_days: usize) -> (MarketPanel, Vec<Signal>, Vec<LabeledEvent>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tickers = ["A", "B", "C", "D"];
    let stocks: Vec<(&str, Vec<(f64, f64)>)> = tickers
        .iter()
        .map(|t| {
            let mut px = 20.0;
            let bars = (0..n_days)
                .map(|_| {
                    let open = px * (1.0 + rng.random_range(-0.01..0.01));
                    px = open * (1.0 + rng.random_range(-0.03..0.03));
                    (open, px)
                })
                .collect();
            (*t, bars)
        })
        .collect();
    let p = panel(&stocks);
    let mut signals = Vec::new();
    let mut history = Vec::new();
    for i in 0..n_days * 2 {
        let day = rng.random_range(0..n_days);
        let t = EventType::ALL[rng.random_range(0..4)];
        let side = [Side::Long, Side::Short, Side::Hold][rng.random_range(0..3)];
        let s = Signal {
            event_id: format!("E{i}"),
            ticker: tickers[rng.random_range(0..4)].into(),
            timestamp: ts(day, rng.random_range(10..15)),
            side,
            strength: if rng.random_bool(0.8) { Strength::Strong } else { Strength::Weak },
            event_type: t,
            car_hat: Some(rng.random_range(-0.05..0.05)),
        };
        let car: f64 = rng.random_range(-0.06..0.06);
        history.push(LabeledEvent {
            event_id: s.event_id.clone(),
            news_ref: s.event_id.clone(),
            t0: s.timestamp,
            ticker: s.ticker.clone(),
            event_type: t,
            direction: Direction::from_value(car, 0.0),
            strength: Strength::from_magnitude(car, 0.01),
            car,
        });
        signals.push(s);
    }
    (p, signals, history)
}

#[test]
fn nav_identity_and_determinism() {
    let (p, signals, history) = random_setup(3, 60);
    let cfg = BacktestConfig { cost: 0.001, holding: 3, ..cfg0() };
    let run = run_backtest(&signals, &history, &p, &cfg).unwrap();
    assert!(run.state.trades.len() > 20);
    let realised: f64 = run.state.trades.iter().filter_map(|t| t.pnl).sum();
    let open_entry_costs: f64 = run.state.trades.iter().filter(|t| t.pnl.is_none()).map(|t| t.costs).sum();
    let unrealised: f64 = run.state.positions.iter().map(|p| p.value() - p.notional).sum();
    let nav = run.nav_values();
    let rebuilt = cfg.initial_capital + realised - open_entry_costs + unrealised;
    assert!((nav.last().unwrap() - rebuilt).abs() < 1e-9 * rebuilt);
    assert_eq!(run, run_backtest(&signals, &history, &p, &cfg).unwrap());
    assert!(run.metrics.da.is_some());
}

#[test]
fn sweep_gives_one_row_per_value() {
    let (p, signals, history) = random_setup(4, 40);
    let rows = sensitivity_sweep(
        &signals,
        &history,
        &p,
        &cfg0(),
        &SweepParam::Holding((1..=10).collect()),
        crate::Exec::Parallel,
    )
    .unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[2].parameter, "holding=3");
    let caps =
        sensitivity_sweep(&signals, &history, &p, &cfg0(), &SweepParam::MaxPositionRatio(vec![Some(0.5), None]), crate::Exec::Sequential)
            .unwrap();
    assert_eq!(caps[1].parameter, "max_position_ratio=inf");
    let mut buf = Vec::new();
    write_sensitivity(&rows, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fees_never_help(seed in 0u64..1000, k1 in 0.0f64..0.01, dk in 0.0f64..0.01) {
        let (p, signals, history) = random_setup(seed, 30);
        let lo = run_backtest(&signals, &history, &p, &BacktestConfig { cost: k1, ..cfg0() }).unwrap();
        let hi = run_backtest(&signals, &history, &p, &BacktestConfig { cost: k1 + dk, ..cfg0() }).unwrap();
        prop_assert!(hi.metrics.total_return <= lo.metrics.total_return + 1e-12);
    }

    #[test]
    fn cap_is_respected(seed in 0u64..1000, k in 0.05f64..0.5) {
        let (p, signals, history) = random_setup(seed, 30);
        let cfg = BacktestConfig { max_position_ratio: Some(k), budget_fraction: 0.3, holding: 4, ..cfg0() };
        let run = run_backtest(&signals, &history, &p, &cfg).unwrap();
        // replay: on every entry day, open notional after entries vs the
        // NAV at the planning close
        let nav = run.nav_values();
        for day in 1..nav.len() {
            let d = p.calendar().date(day);
            if !run.state.trades.iter().any(|t| t.entry_date == d) {
                continue;
            }
            let open: f64 = run.state.trades.iter()
                .filter(|t| t.entry_date <= d && t.exit_date.is_none_or(|x| x >= d))
                .map(|t| t.notional)
                .sum();
            prop_assert!(open <= k * nav[day - 1] * (1.0 + 1e-9));
        }
    }
}

