use super::*;
use crate::marketdata::{IndexBar, Metadata, PriceBar, PriceTable, StockMeta};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn date(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 1, 1).unwrap() + chrono::Days::new(i as u64)
}

/// Panel from per-stock close paths, constant shares and volume.
fn panel_from_closes(closes: &[Vec<f64>], industries: &[&str]) -> MarketPanel {
    let n = closes[0].len();
    let mut t = PriceTable::default();
    t.indices.insert("IDX".into(), (0..n).map(|i| IndexBar { date: date(i), close: 100.0 }).collect());
    let mut meta = Metadata::new();
    for (k, path) in closes.iter().enumerate() {
        let ticker = format!("S{k}");
        t.stocks.insert(
            ticker.clone(),
            path.iter()
                .enumerate()
                .map(|(i, &c)| PriceBar {
                    date: date(i),
                    open: c,
                    close: c,
                    volume: 1000.0 * (k + 1) as f64,
                    shares_outstanding: Some(1e6),
                })
                .collect(),
        );
        meta.insert(
            ticker,
            StockMeta { industry: industries[k % industries.len()].into(), cap_segment: "IDX".into() },
        );
    }
    MarketPanel::from_table(&t, &meta).unwrap()
}

fn short_cfg() -> StyleConfig {
    StyleConfig { momentum_window: 20, momentum_skip: 0, ..StyleConfig::default() }
}

#[test]
fn identical_histories_standardize_to_zero() {
    let path: Vec<f64> = (0..30).map(|i| 10.0 + (i as f64 * 0.7).sin()).collect();
    let mut closes = vec![path.clone(); 3];
    // identical volumes too
    let panel = {
        closes.truncate(3);
        let mut t = PriceTable::default();
        t.indices.insert("IDX".into(), (0..30).map(|i| IndexBar { date: date(i), close: 1.0 }).collect());
        let mut meta = Metadata::new();
        for k in 0..3 {
            t.stocks.insert(
                format!("S{k}"),
                path.iter()
                    .enumerate()
                    .map(|(i, &c)| PriceBar { date: date(i), open: c, close: c, volume: 5.0, shares_outstanding: Some(1e3) })
                    .collect(),
            );
            meta.insert(format!("S{k}"), StockMeta { industry: "a".into(), cap_segment: "IDX".into() });
        }
        MarketPanel::from_table(&t, &meta).unwrap()
    };
    let rows = compute_style_exposures(&panel, 25, &short_cfg()).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.styles, [0.0; N_STYLES]);
    }
}

#[test]
fn two_identical_stocks_get_identical_scores() {
    let a: Vec<f64> = (0..30).map(|i| 10.0 * 1.01f64.powi(i)).collect();
    let b: Vec<f64> = (0..30).map(|i| 20.0 * 0.99f64.powi(i)).collect();
    let panel = {
        let mut t = PriceTable::default();
        t.indices.insert("IDX".into(), (0..30).map(|i| IndexBar { date: date(i), close: 1.0 }).collect());
        let mut meta = Metadata::new();
        for (k, p) in [&a, &a, &b].iter().enumerate() {
            t.stocks.insert(
                format!("S{k}"),
                p.iter()
                    .enumerate()
                    .map(|(i, &c)| PriceBar { date: date(i), open: c, close: c, volume: 5.0, shares_outstanding: Some(1e3) })
                    .collect(),
            );
            meta.insert(format!("S{k}"), StockMeta { industry: "a".into(), cap_segment: "IDX".into() });
        }
        MarketPanel::from_table(&t, &meta).unwrap()
    };
    let rows = compute_style_exposures(&panel, 25, &short_cfg()).unwrap();
    assert_eq!(rows[0].styles, rows[1].styles);
}

#[test]
fn constant_price_degenerate_styles() {
    let cfg = short_cfg();
    let n = cfg.required_bars();
    let close = vec![12.5; n];
    let raw = raw_styles(&close, &vec![100.0; n], &vec![1e4; n], &cfg);
    assert_eq!(raw[2], 0.0, "volatility");
    assert_eq!(raw[3], 0.0, "momentum");
    assert_eq!(raw[4], 0.0, "reversal");
    assert!((raw[0] - (12.5f64 * 1e4).ln()).abs() < 1e-12);
    assert!((raw[1] - 0.01).abs() < 1e-15);
}

#[test]
fn momentum_ordering_matches_trailing_return_ranks() {
    let cfg = short_cfg();
    let growth = [0.004, -0.002, 0.010, 0.001, -0.007];
    let closes: Vec<Vec<f64>> = growth.iter().map(|g| (0..40).map(|i| 10.0 * (1.0f64 + g).powi(i)).collect()).collect();
    let panel = panel_from_closes(&closes, &["a", "b"]);
    let day = 35;
    let rows = compute_style_exposures(&panel, day, &cfg).unwrap();
    // brute force: trailing 20-day return from the raw closes
    let trailing: Vec<f64> = closes.iter().map(|c| c[day - 1] / c[day - 1 - 20] - 1.0).collect();
    for i in 0..5 {
        for j in 0..5 {
            if trailing[i] < trailing[j] {
                assert!(rows[i].styles[3] < rows[j].styles[3]);
            }
        }
    }
}

#[test]
fn thin_cross_section_rejected() {
    let closes = vec![vec![10.0; 30]; 2];
    let panel = panel_from_closes(&closes, &["a"]);
    assert!(matches!(
        compute_style_exposures(&panel, 25, &short_cfg()),
        Err(FactorError::ThinCrossSection { n: 2, .. })
    ));
    // not enough history
    let closes = vec![vec![10.0; 30]; 4];
    let panel = panel_from_closes(&closes, &["a"]);
    assert!(compute_style_exposures(&panel, 10, &short_cfg()).is_err());
}

#[test]
fn standardized_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut v: Vec<f64> = (0..200).map(|_| rng.random_range(-5.0..5.0)).collect();
    standardize(&mut v, 3.0);
    let (m, s) = mean_std(&v);
    assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
    // an outlier is clipped before scoring
    let mut w: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
    w.push(1e6);
    standardize(&mut w, 3.0);
    assert!(w.iter().all(|x| x.is_finite()));
}

fn random_exposures(rng: &mut ChaCha8Rng, n: usize, industries: usize) -> Vec<ExposureRow> {
    let mut raw: Vec<[f64; N_STYLES]> =
        (0..n).map(|_| std::array::from_fn(|_| StandardNormal.sample(&mut *rng))).collect();
    standardize_styles(&mut raw, 3.0);
    raw.into_iter()
        .enumerate()
        .map(|(i, styles)| ExposureRow {
            ticker: format!("S{i}"),
            date: date(0),
            stock: i,
            styles,
            industry: i % industries,
        })
        .collect()
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("I{i}")).collect()
}

#[test]
fn exact_recovery_and_zero_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ind = names(4);
    let exp = random_exposures(&mut rng, 60, 4);
    let truth = [0.001, -0.002, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let y: Vec<f64> = exp.iter().map(|r| r.design_row(4).iter().zip(&truth).map(|(a, b)| a * b).sum()).collect();
    let p = fit_daily_premia(&exp, &y, &ind).unwrap();
    for (a, b) in p.premia.iter().zip(truth) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert!(p.dropped.is_empty());
    let z = fit_daily_premia(&exp, &vec![0.0; 60], &ind).unwrap();
    assert!(z.premia.iter().all(|&v| v == 0.0));
}

/// Solves the normal equations XᵀX b = Xᵀy by Gaussian elimination with
/// partial pivoting; returns (b, (XᵀX)⁻¹ diagonal).
fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; 2 * p + 1]; p];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][2 * p] += row[i] * yi;
        }
    }
    for i in 0..p {
        a[i][p + i] = 1.0;
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c];
                let src = a[c].clone();
                for (v, s) in a[r].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    let b = (0..p).map(|i| a[i][2 * p]).collect();
    let diag = (0..p).map(|i| a[i][p + i]).collect();
    (b, diag)
}

#[test]
fn noisy_premia_within_three_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let k = 5;
    let ind = names(k);
    let exp = random_exposures(&mut rng, 500, k);
    let truth = [0.002, -0.001, 0.0015, 0.0, -0.0025, 0.001, -0.001, 0.0005, 0.0, 0.002];
    let sigma = 0.01;
    let rows: Vec<Vec<f64>> = exp.iter().map(|r| r.design_row(k)).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| {
            let e: f64 = StandardNormal.sample(&mut rng);
            r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + sigma * e
        })
        .collect();
    let fit = fit_daily_premia(&exp, &y, &ind).unwrap();
    let (oracle, inv_diag) = normal_equations(&rows, &y);
    for j in 0..truth.len() {
        assert!((fit.premia[j] - oracle[j]).abs() < 1e-10, "route mismatch on {j}");
        let se = sigma * inv_diag[j].sqrt();
        assert!((fit.premia[j] - truth[j]).abs() < 3.0 * se, "factor {j}: {} vs {}", fit.premia[j], truth[j]);
    }
    // residual orthogonal to the design
    let resid: Vec<f64> = rows.iter().zip(&y).map(|(r, yi)| yi - fit.explained(r)).collect();
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max) * rows.len() as f64;
    for j in 0..truth.len() {
        let g: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
        assert!(g.abs() < 1e-8 * scale);
    }
}

#[test]
fn empty_industry_is_dropped_and_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ind = names(3);
    ind.push("ghost".into());
    let exp = random_exposures(&mut rng, 40, 3);
    let y: Vec<f64> = (0..40).map(|i| i as f64 * 1e-4).collect();
    let p = fit_daily_premia(&exp, &y, &ind).unwrap();
    assert_eq!(p.dropped, vec!["ind:ghost".to_string()]);
    assert_eq!(p.premia[N_STYLES + 3], 0.0);
}

#[test]
fn too_few_observations() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let exp = random_exposures(&mut rng, 6, 2);
    assert!(matches!(
        fit_daily_premia(&exp, &[0.0; 6], &names(2)),
        Err(FactorError::TooFewObservations { .. })
    ));
    assert!(matches!(fit_daily_premia(&exp, &[0.0; 5], &names(2)), Err(FactorError::LengthMismatch(6, 5))));
}

#[test]
fn premia_table_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let exp = random_exposures(&mut rng, 50, 3);
    let y: Vec<f64> = (0..50).map(|_| rng.random_range(-0.02..0.02)).collect();
    let p = fit_daily_premia(&exp, &y, &names(3)).unwrap();
    let mut buf = Vec::new();
    write_premia(std::slice::from_ref(&p), &mut buf).unwrap();
    let back = read_premia(&buf[..]).unwrap();
    assert_eq!(back, vec![p]);
    let mut out = Vec::new();
    write_exposures(&exp, &names(3), &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 51);
}

proptest! {
    #[test]
    fn standardization_is_idempotent(v in proptest::collection::vec(-100.0f64..100.0, 3..60)) {
        let mut once = v.clone();
        standardize(&mut once, 3.0);
        // uniform-ish inputs never exceed the clip after the first pass
        prop_assume!(once.iter().all(|x| x.abs() < 3.0));
        let mut twice = once.clone();
        standardize(&mut twice, 3.0);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_never_increases_variance_and_nested_rss(seed in 0u64..500, n in 20usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 3;
        let exp = random_exposures(&mut rng, n, k);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-0.05..0.05)).collect();
        let full = least_squares(&exp.iter().map(|r| r.design_row(k)).collect::<Vec<_>>(), &y, N_STYLES + k);
        let var = |v: &[f64]| { let m = v.iter().sum::<f64>() / v.len() as f64; v.iter().map(|x| (x - m).powi(2)).sum::<f64>() };
        prop_assert!(var(&full.residuals) <= var(&y) * (1.0 + 1e-12));
        // drop one style column
        let drop = (seed as usize) % N_STYLES;
        let reduced_rows: Vec<Vec<f64>> = exp.iter().map(|r| {
            let mut row = r.design_row(k);
            row.remove(drop);
            row
        }).collect();
        let reduced = least_squares(&reduced_rows, &y, N_STYLES + k - 1);
        prop_assert!(reduced.rss >= full.rss * (1.0 - 1e-12));
    }
}
