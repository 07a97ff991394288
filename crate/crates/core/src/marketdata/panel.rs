use std::collections::{BTreeSet, HashMap};

use super::{DataError, Metadata, PriceTable, TradingCalendar};

/// One stock's bars aligned to the calendar; `None` marks a day without a
/// bar (suspension).
#[derive(Debug, Clone, PartialEq)]
pub struct StockSeries {
    pub ticker: String,
    pub open: Vec<Option<f64>>,
    pub close: Vec<Option<f64>>,
    pub volume: Vec<Option<f64>>,
    pub shares: Vec<Option<f64>>,
    /// Close-to-close simple returns; `None` unless both adjacent days trade.
    pub returns: Vec<Option<f64>>,
    /// Index into [`MarketPanel::industries`].
    pub industry: Option<usize>,
    /// Index into [`MarketPanel::benchmark_ids`].
    pub benchmark: Option<usize>,
    pub cap_segment: Option<String>,
}

/// Calendar-aligned, read-only view over the price table and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPanel {
    calendar: TradingCalendar,
    stocks: Vec<StockSeries>,
    ticker_index: HashMap<String, usize>,
    industries: Vec<String>,
    benchmark_ids: Vec<String>,
    benchmark_returns: Vec<Vec<Option<f64>>>,
}

fn simple_returns(close: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = vec![None; close.len()];
    for t in 1..close.len() {
        if let (Some(prev), Some(cur)) = (close[t - 1], close[t]) {
            out[t] = Some(cur / prev - 1.0);
        }
    }
    out
}

impl MarketPanel {
    /// Aligns every series to `calendar`. Stock bars off the calendar are an
    /// error; the benchmark for a stock is the index named by its cap
    /// segment, or the only index when exactly one exists.
    pub fn build(table: &PriceTable, metadata: &Metadata, calendar: TradingCalendar) -> Result<Self, DataError> {
        let n = calendar.len();
        let industries: Vec<String> =
            metadata.values().map(|m| m.industry.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let benchmark_ids: Vec<String> = table.indices.keys().cloned().collect();
        let mut benchmark_returns = Vec::with_capacity(benchmark_ids.len());
        for id in &benchmark_ids {
            let mut close = vec![None; n];
            for b in &table.indices[id] {
                let i = calendar.index_of(b.date).ok_or_else(|| DataError::OffCalendar {
                    ticker: id.clone(),
                    date: b.date,
                })?;
                close[i] = Some(b.close);
            }
            benchmark_returns.push(simple_returns(&close));
        }

        let mut stocks = Vec::with_capacity(table.stocks.len());
        let mut ticker_index = HashMap::new();
        for (ticker, bars) in &table.stocks {
            let mut s = StockSeries {
                ticker: ticker.clone(),
                open: vec![None; n],
                close: vec![None; n],
                volume: vec![None; n],
                shares: vec![None; n],
                returns: Vec::new(),
                industry: None,
                benchmark: None,
                cap_segment: None,
            };
            for b in bars {
                let i = calendar
                    .index_of(b.date)
                    .ok_or_else(|| DataError::OffCalendar { ticker: ticker.clone(), date: b.date })?;
                s.open[i] = Some(b.open);
                s.close[i] = Some(b.close);
                s.volume[i] = Some(b.volume);
                s.shares[i] = b.shares_outstanding;
            }
            s.returns = simple_returns(&s.close);
            if let Some(meta) = metadata.get(ticker) {
                s.industry = industries.iter().position(|x| *x == meta.industry);
                s.benchmark = benchmark_ids.iter().position(|x| *x == meta.cap_segment);
                s.cap_segment = Some(meta.cap_segment.clone());
            }
            if s.benchmark.is_none() && benchmark_ids.len() == 1 {
                s.benchmark = Some(0);
            }
            ticker_index.insert(ticker.clone(), stocks.len());
            stocks.push(s);
        }
        Ok(Self { calendar, stocks, ticker_index, industries, benchmark_ids, benchmark_returns })
    }

    /// Convenience: calendar from the table's benchmark dates.
    pub fn from_table(table: &PriceTable, metadata: &Metadata) -> Result<Self, DataError> {
        Self::build(table, metadata, TradingCalendar::from_table(table)?)
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn stocks(&self) -> &[StockSeries] {
        &self.stocks
    }

    pub fn stock(&self, i: usize) -> &StockSeries {
        &self.stocks[i]
    }

    pub fn stock_index(&self, ticker: &str) -> Option<usize> {
        self.ticker_index.get(ticker).copied()
    }

    pub fn industries(&self) -> &[String] {
        &self.industries
    }

    pub fn benchmark_ids(&self) -> &[String] {
        &self.benchmark_ids
    }

    /// Benchmark return series for stock `i`.
    pub fn benchmark_returns(&self, i: usize) -> Result<&[Option<f64>], DataError> {
        let s = &self.stocks[i];
        s.benchmark.map(|b| self.benchmark_returns[b].as_slice()).ok_or_else(|| DataError::NoBenchmark {
            ticker: s.ticker.clone(),
            segment: s.cap_segment.clone().unwrap_or_default(),
        })
    }
}
