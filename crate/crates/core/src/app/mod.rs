//! Command-line entry point.
//!
//! Each subcommand runs one pipeline stage. Tunables come from an optional
//! `--config` TOML file ([`RunConfig`]); stage flags override it, and the
//! effective configuration is written next to the stage's outputs.

mod config;

pub use config::{PolicyConfig, RunConfig, SensitivityConfig, SweepKind};

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Days, NaiveDate};
use clap::{Args, Parser, Subcommand};

use crate::backtest::{
    self, oracle_feed, read_signals_file, run_backtest, sensitivity_sweep, write_metrics, write_nav,
    write_sensitivity, write_signals, write_trades, TypeWeights, WeightMode,
};
use crate::eventstudy::{compute_all_cars, read_car_rows, write_car_rows, CarRow};
use crate::hgrm::{read_pairs, score_pairs, write_breakdowns};
use crate::labeling::{
    build_labeled_record, event_type_stats, read_dataset_file, write_dataset_file, EventType, LabeledEvent,
    TypeStats,
};
use crate::marketdata::{
    load_events, load_metadata, load_price_table, synth_universe, write_events, write_metadata, write_price_table,
    DataFiles, MarketPanel, SynthSpec,
};
use crate::policylab::{train, write_trace, ToyEnvironment, ToyPolicy};
use crate::Exec;

#[derive(Debug, Parser)]
#[command(name = "evtrade", version, about = "Event-study, reward-model and backtest pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Disable data-parallel evaluation.
    #[arg(long, global = true)]
    sequential: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic universe with its ground-truth ledger.
    Synth {
        /// TOML synth spec; replaces the config's [synth] section.
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Compute per-event CARs for a data directory.
    ComputeCar {
        /// Directory holding prices.csv, index.csv, events.csv, metadata.csv.
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Skip factor neutralization (market-adjusted CAR only).
        #[arg(long)]
        market_only: bool,
    },
    /// Join events with their CARs into the labelled dataset.
    Label {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "FILE")]
        cars: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        neutral_band: Option<f64>,
    },
    /// Per-type CAR statistics over a trailing window.
    Stats {
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Window length in calendar days, ending at --end.
        #[arg(long, value_name = "N")]
        window: u64,
        /// Last day of the window; defaults to the latest event date.
        #[arg(long, value_name = "DATE")]
        end: Option<NaiveDate>,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Score prediction/truth pairs.
    Reward {
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train the toy policy and write its learning trace.
    TrainToy {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the long-short protocol on a signal feed.
    Backtest {
        #[command(flatten)]
        data: BacktestData,
        #[command(flatten)]
        knobs: BacktestKnobs,
    },
    /// Backtest once per value of a swept parameter.
    Sensitivity {
        #[command(flatten)]
        data: BacktestData,
        #[command(flatten)]
        knobs: BacktestKnobs,
        #[arg(long, value_enum, value_name = "NAME")]
        param: Option<SweepArg>,
        /// Comma-separated values; `inf` means uncapped for the position ratio.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        values: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SweepArg {
    Holding,
    MaxPositionRatio,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum WeightArg {
    Type,
    Equal,
}

#[derive(Debug, Args)]
struct BacktestData {
    #[arg(long, value_name = "FILE")]
    signals: PathBuf,
    #[arg(long, value_name = "FILE")]
    prices: PathBuf,
    /// Labelled event dataset (JSONL) with realised cars.
    #[arg(long, value_name = "FILE")]
    events: PathBuf,
    /// Defaults to index.csv beside the prices file.
    #[arg(long, value_name = "FILE")]
    index: Option<PathBuf>,
    /// Defaults to metadata.csv beside the prices file.
    #[arg(long, value_name = "FILE")]
    metadata: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BacktestKnobs {
    #[arg(long, value_name = "N")]
    holding: Option<usize>,
    /// Cap on open notional as a multiple of NAV; `inf` removes it.
    #[arg(long, value_name = "K")]
    max_position_ratio: Option<f64>,
    /// Per-side transaction cost.
    #[arg(long, value_name = "KAPPA")]
    cost: Option<f64>,
    #[arg(long, value_enum)]
    weight_mode: Option<WeightArg>,
}

impl BacktestKnobs {
    fn apply(&self, cfg: &mut backtest::BacktestConfig) {
        if let Some(h) = self.holding {
            cfg.holding = h;
        }
        if let Some(k) = self.max_position_ratio {
            cfg.max_position_ratio = (k != f64::INFINITY).then_some(k);
        }
        if let Some(c) = self.cost {
            cfg.cost = c;
        }
        if let Some(m) = self.weight_mode {
            cfg.weight_mode = match m {
                WeightArg::Type => WeightMode::Type,
                WeightArg::Equal => WeightMode::Equal,
            };
        }
    }
}

/// Parses `args` (program name first) and runs the selected stage.
///
/// Returns the process exit status: 0 on success, 2 on a usage error and 1
/// on any other failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Synth { spec, seed, out } => {
            if let Some(p) = spec {
                let text = fs::read_to_string(&p).with_context(|| format!("reading spec {}", p.display()))?;
                cfg.synth = toml::from_str::<SynthSpec>(&text).with_context(|| format!("invalid spec {}", p.display()))?;
            }
            if let Some(s) = seed {
                cfg.synth.seed = s;
            }
            cfg.validate()?;
            cmd_synth(&cfg, &out)
        }
        Command::ComputeCar { data, out, market_only } => {
            if market_only {
                cfg.car.neutralize = false;
            }
            cfg.validate()?;
            cmd_compute_car(&cfg, &data, &out, exec)
        }
        Command::Label { data, cars, out, tau, neutral_band } => {
            if let Some(t) = tau {
                cfg.label.tau = t;
            }
            if let Some(b) = neutral_band {
                cfg.label.neutral_band = b;
            }
            cfg.validate()?;
            cmd_label(&cfg, &data, &cars, &out)
        }
        Command::Stats { dataset, window, end, out } => cmd_stats(&cfg, &dataset, window, end, &out),
        Command::Reward { pairs, out } => cmd_reward(&cfg, &pairs, &out, exec),
        Command::TrainToy { out, iterations, seed } => {
            if let Some(n) = iterations {
                cfg.policy.train.iterations = n;
            }
            if let Some(s) = seed {
                cfg.policy.train.seed = s;
            }
            cfg.validate()?;
            cmd_train_toy(&cfg, &out, exec)
        }
        Command::Backtest { data, knobs } => {
            knobs.apply(&mut cfg.backtest);
            cfg.validate()?;
            cmd_backtest(&cfg, &data)
        }
        Command::Sensitivity { data, knobs, param, values } => {
            knobs.apply(&mut cfg.backtest);
            if let Some(p) = param {
                cfg.sensitivity.parameter = match p {
                    SweepArg::Holding => SweepKind::Holding,
                    SweepArg::MaxPositionRatio => SweepKind::MaxPositionRatio,
                };
            }
            if let Some(v) = values {
                cfg.sensitivity.values = v;
            }
            cfg.validate()?;
            cmd_sensitivity(&cfg, &data, exec)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Writes the effective configuration to `path`.
fn echo_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(cfg.to_toml()?.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// `cars.csv` → `cars.config.toml`, for stages whose output is a single file.
fn sidecar(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.config.toml"))
}

fn load_panel(prices: &Path, index: &Path, metadata: &Path) -> Result<MarketPanel> {
    let table = load_price_table(prices, Some(index))?;
    let meta = load_metadata(metadata)?;
    Ok(MarketPanel::from_table(&table, &meta)?)
}

fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let u = synth_universe(&cfg.synth)?;
    let files = DataFiles::in_dir(out);
    write_price_table(&u.table, &files.prices, &files.index)?;
    write_events(&u.events, &files.events)?;
    write_metadata(&u.metadata, &files.metadata)?;
    let mut w = create(&out.join("ledger.json"))?;
    serde_json::to_writer_pretty(&mut w, &u.ledger)?;
    w.write_all(b"\n")?;
    w.flush()?;
    let mut w = create(&out.join("oracle_signals.csv"))?;
    write_signals(&oracle_feed(&u.ledger, cfg.label.tau), &mut w)?;
    w.flush()?;
    echo_config(cfg, &out.join("effective_config.toml"))?;
    log::info!("synth: {} stocks, {} events -> {}", u.metadata.len(), u.events.len(), out.display());
    Ok(())
}

fn cmd_compute_car(cfg: &RunConfig, data: &Path, out: &Path, exec: Exec) -> Result<()> {
    let files = DataFiles::in_dir(data);
    let panel = load_panel(&files.prices, &files.index, &files.metadata)?;
    let events = load_events(&files.events)?;
    let results = compute_all_cars(&events, &panel, &cfg.car, exec);
    let mut rows = Vec::with_capacity(results.len());
    for (event, r) in events.iter().zip(results) {
        match r {
            Ok(a) => rows.push(CarRow::from(&a.result)),
            Err(e) => log::warn!("event {} skipped: {e}", event.event_id),
        }
    }
    if rows.len() < events.len() {
        log::warn!("{} of {} events have no CAR", events.len() - rows.len(), events.len());
    }
    let mut w = create(out)?;
    write_car_rows(&rows, &mut w)?;
    w.flush()?;
    echo_config(cfg, &sidecar(out))
}

fn cmd_label(cfg: &RunConfig, data: &Path, cars: &Path, out: &Path) -> Result<()> {
    let events = load_events(&DataFiles::in_dir(data).events)?;
    let rows = read_car_rows(open(cars)?).with_context(|| format!("reading {}", cars.display()))?;
    let by_id: std::collections::HashMap<&str, &CarRow> = rows.iter().map(|r| (r.event_id.as_str(), r)).collect();
    let mut records = Vec::with_capacity(rows.len());
    for e in &events {
        match by_id.get(e.event_id.as_str()) {
            Some(row) => records.push(build_labeled_record(e, row, &cfg.label, None)?),
            None => log::warn!("event {} has no CAR row; not labelled", e.event_id),
        }
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_dataset_file(&records, out)?;
    echo_config(cfg, &sidecar(out))
}

const STATS_HEADER: [&str; 8] = ["event_type", "count", "mean_abs_car", "q05", "q25", "q50", "q75", "q95"];

fn write_type_stats<W: Write>(stats: &TypeStats, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATS_HEADER)?;
    for s in &stats.per_type {
        let mut row = vec![s.event_type.to_string(), s.count.to_string(), s.mean_abs_car.to_string()];
        match s.quantiles {
            Some(q) => row.extend(q.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_stats(cfg: &RunConfig, dataset: &Path, window: u64, end: Option<NaiveDate>, out: &Path) -> Result<()> {
    if window == 0 {
        bail!("--window must be >= 1");
    }
    let records = read_dataset_file(dataset)?;
    let end = match end.or_else(|| records.iter().map(|r| r.t0.date()).max()) {
        Some(d) => d,
        None => bail!("dataset {} is empty and no --end was given", dataset.display()),
    };
    let start = end.checked_sub_days(Days::new(window - 1)).context("window reaches before the calendar start")?;
    let stats = event_type_stats(&records, start, end);
    fs::create_dir_all(out)?;
    write_type_stats(&stats, create(&out.join("type_stats.csv"))?)?;
    echo_config(cfg, &out.join("stats.config.toml"))
}

fn cmd_reward(cfg: &RunConfig, pairs: &Path, out: &Path, exec: Exec) -> Result<()> {
    let pairs = read_pairs(open(pairs)?).with_context(|| format!("reading {}", pairs.display()))?;
    let scored = score_pairs(&pairs, &cfg.reward, exec)?;
    let mut w = create(out)?;
    write_breakdowns(&scored, &mut w)?;
    w.flush()?;
    echo_config(cfg, &sidecar(out))
}

fn cmd_train_toy(cfg: &RunConfig, out: &Path, exec: Exec) -> Result<()> {
    let env = ToyEnvironment::generate(&cfg.policy.env);
    let sched = &cfg.policy.train;
    let mut policy = ToyPolicy::random(ToyEnvironment::FEATURE_DIM, sched.init_scale, sched.seed);
    let trace = train(&env, &mut policy, sched, &cfg.reward, exec)?;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("trace.csv"))?;
    write_trace(&trace, &mut w)?;
    w.flush()?;
    if let Some(last) = trace.last() {
        log::info!("train-toy: iteration {} held-out da {:.4} eta {:.4}", last.iteration, last.da, last.eta);
    }
    echo_config(cfg, &out.join("effective_config.toml"))
}

struct BacktestInputs {
    signals: Vec<backtest::Signal>,
    history: Vec<LabeledEvent>,
    panel: MarketPanel,
}

fn load_backtest_inputs(data: &BacktestData) -> Result<BacktestInputs> {
    let dir = data.prices.parent().unwrap_or(Path::new("."));
    let index = data.index.clone().unwrap_or_else(|| dir.join("index.csv"));
    let metadata = data.metadata.clone().unwrap_or_else(|| dir.join("metadata.csv"));
    Ok(BacktestInputs {
        signals: read_signals_file(&data.signals)?,
        history: read_dataset_file(&data.events).with_context(|| format!("reading {}", data.events.display()))?,
        panel: load_panel(&data.prices, &index, &metadata)?,
    })
}

const WEIGHTS_HEADER_PREFIX: [&str; 3] = ["as_of", "n_records", "uniform_fallback"];

fn write_weight_table<W: Write>(weights: &[TypeWeights], panel: &MarketPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> =
        WEIGHTS_HEADER_PREFIX.iter().copied().chain(EventType::ALL.iter().map(|t| t.as_str())).collect();
    w.write_record(&header)?;
    for tw in weights {
        let mut row = vec![
            panel.calendar().date(tw.as_of).to_string(),
            tw.n_records.to_string(),
            tw.diagnostic.is_some().to_string(),
        ];
        row.extend(tw.weights.iter().map(|x| format!("{x:.10}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_backtest(cfg: &RunConfig, data: &BacktestData) -> Result<()> {
    let inputs = load_backtest_inputs(data)?;
    let run = run_backtest(&inputs.signals, &inputs.history, &inputs.panel, &cfg.backtest)?;
    let out = &data.out;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("nav.csv"))?;
    write_nav(&run.state.nav, &mut w)?;
    w.flush()?;
    let mut w = create(&out.join("trades.csv"))?;
    write_trades(&run.state.trades, &mut w)?;
    w.flush()?;
    let mut w = create(&out.join("metrics.json"))?;
    write_metrics(&run.metrics, &mut w)?;
    write_weight_table(&run.weights, &inputs.panel, create(&out.join("weights.csv"))?)?;
    for d in &run.state.diagnostics {
        log::info!("backtest: {d}");
    }
    echo_config(cfg, &out.join("effective_config.toml"))
}

fn cmd_sensitivity(cfg: &RunConfig, data: &BacktestData, exec: Exec) -> Result<()> {
    let inputs = load_backtest_inputs(data)?;
    let sweep = cfg.sensitivity.sweep()?;
    let rows = sensitivity_sweep(&inputs.signals, &inputs.history, &inputs.panel, &cfg.backtest, &sweep, exec)?;
    fs::create_dir_all(&data.out)?;
    let mut w = create(&data.out.join("sensitivity.csv"))?;
    write_sensitivity(&rows, &mut w)?;
    w.flush()?;
    echo_config(cfg, &data.out.join("effective_config.toml"))
}
