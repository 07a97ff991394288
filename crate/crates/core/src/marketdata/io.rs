//! Delimited-text ingestion and output for the four input files.
//!
//! ```text
//! prices:   ticker,date,open,close,volume,shares_outstanding
//! index:    index_id,date,close
//! events:   event_id,ticker,timestamp,event_type,text_ref
//! metadata: ticker,industry,cap_segment
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};

use super::{DataError, IndexBar, Metadata, PriceBar, PriceTable, RawEvent, StockMeta};
use crate::labeling::EventType;

pub const PRICES_HEADER: &str = "ticker,date,open,close,volume,shares_outstanding";
pub const INDEX_HEADER: &str = "index_id,date,close";
pub const EVENTS_HEADER: &str = "event_id,ticker,timestamp,event_type,text_ref";
pub const METADATA_HEADER: &str = "ticker,industry,cap_segment";

/// Paths of the standard input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataFiles {
    pub prices: PathBuf,
    pub index: PathBuf,
    pub events: PathBuf,
    pub metadata: PathBuf,
}

impl DataFiles {
    /// `prices.csv`, `index.csv`, `events.csv` and `metadata.csv` under `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            prices: dir.join("prices.csv"),
            index: dir.join("index.csv"),
            events: dir.join("events.csv"),
            metadata: dir.join("metadata.csv"),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

fn row_err(path: &Path, line: u64, msg: impl Into<String>) -> DataError {
    DataError::Row { path: path.to_path_buf(), line, msg: msg.into() }
}

fn open_checked(path: &Path, header: &str) -> Result<csv::Reader<File>, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| row_err(path, 1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(DataError::Header { path: path.to_path_buf(), expected: header.into(), found });
    }
    Ok(rdr)
}

fn records<'a>(
    path: &Path,
    rdr: &'a mut csv::Reader<File>,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord), DataError>> + 'a {
    let path = path.to_path_buf();
    rdr.records().map(move |r| {
        let rec = r.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            row_err(&path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        Ok((line, rec))
    })
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

fn parse_num(field: &str, s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("bad {field} `{s}`"))
}

/// Accepts `YYYY-MM-DDTHH:MM[:SS]` or a space instead of `T`.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime, String> {
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| format!("bad timestamp `{s}`"))
}

fn empty_to_none(s: &str) -> Option<&str> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

/// Reads the stock price file. Rows may appear in any order; each ticker's
/// bars are returned sorted by date.
pub fn load_stock_prices(path: &Path) -> Result<BTreeMap<String, Vec<PriceBar>>, DataError> {
    let mut rdr = open_checked(path, PRICES_HEADER)?;
    let mut by_ticker: BTreeMap<String, BTreeMap<NaiveDate, PriceBar>> = BTreeMap::new();
    for item in records(path, &mut rdr) {
        let (line, rec) = item?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let ticker = get(0);
        if ticker.is_empty() {
            return Err(row_err(path, line, "empty ticker"));
        }
        let bar = (|| -> Result<PriceBar, String> {
            Ok(PriceBar {
                date: parse_date(get(1))?,
                open: parse_num("open", get(2))?,
                close: parse_num("close", get(3))?,
                volume: parse_num("volume", get(4))?,
                shares_outstanding: empty_to_none(get(5)).map(|s| parse_num("shares_outstanding", s)).transpose()?,
            })
        })()
        .map_err(|m| row_err(path, line, m))?;
        bar.validate().map_err(|m| row_err(path, line, m))?;
        let series = by_ticker.entry(ticker.to_string()).or_default();
        if series.insert(bar.date, bar).is_some() {
            return Err(DataError::Duplicate { path: path.to_path_buf(), line, key: ticker.into(), date: bar.date });
        }
    }
    Ok(by_ticker.into_iter().map(|(t, s)| (t, s.into_values().collect())).collect())
}

pub fn load_index_table(path: &Path) -> Result<BTreeMap<String, Vec<IndexBar>>, DataError> {
    let mut rdr = open_checked(path, INDEX_HEADER)?;
    let mut by_id: BTreeMap<String, BTreeMap<NaiveDate, IndexBar>> = BTreeMap::new();
    for item in records(path, &mut rdr) {
        let (line, rec) = item?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let id = get(0);
        if id.is_empty() {
            return Err(row_err(path, line, "empty index_id"));
        }
        let date = parse_date(get(1)).map_err(|m| row_err(path, line, m))?;
        let close = parse_num("close", get(2)).map_err(|m| row_err(path, line, m))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(row_err(path, line, format!("close must be > 0, got {close}")));
        }
        if by_id.entry(id.to_string()).or_default().insert(date, IndexBar { date, close }).is_some() {
            return Err(DataError::Duplicate { path: path.to_path_buf(), line, key: id.into(), date });
        }
    }
    Ok(by_id.into_iter().map(|(t, s)| (t, s.into_values().collect())).collect())
}

/// Loads prices and, when `index` is given, benchmark series.
pub fn load_price_table(prices: &Path, index: Option<&Path>) -> Result<PriceTable, DataError> {
    Ok(PriceTable {
        stocks: load_stock_prices(prices)?,
        indices: index.map(load_index_table).transpose()?.unwrap_or_default(),
    })
}

pub fn load_events(path: &Path) -> Result<Vec<RawEvent>, DataError> {
    let mut rdr = open_checked(path, EVENTS_HEADER)?;
    let mut out = Vec::new();
    for item in records(path, &mut rdr) {
        let (line, rec) = item?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        if get(0).is_empty() || get(1).is_empty() {
            return Err(row_err(path, line, "event_id and ticker are required"));
        }
        let timestamp = parse_timestamp(get(2)).map_err(|m| row_err(path, line, m))?;
        let event_type = EventType::parse_optional(get(3)).map_err(|e| row_err(path, line, e.to_string()))?;
        out.push(RawEvent {
            event_id: get(0).to_string(),
            ticker: get(1).to_string(),
            timestamp,
            event_type,
            text_ref: empty_to_none(get(4)).map(str::to_string),
        });
    }
    Ok(out)
}

pub fn load_metadata(path: &Path) -> Result<Metadata, DataError> {
    let mut rdr = open_checked(path, METADATA_HEADER)?;
    let mut out = Metadata::new();
    for item in records(path, &mut rdr) {
        let (line, rec) = item?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        if get(0).is_empty() {
            return Err(row_err(path, line, "empty ticker"));
        }
        let meta = StockMeta { industry: get(1).to_string(), cap_segment: get(2).to_string() };
        if out.insert(get(0).to_string(), meta).is_some() {
            return Err(row_err(path, line, format!("duplicate ticker {}", get(0))));
        }
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>, DataError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub fn write_stock_prices(stocks: &BTreeMap<String, Vec<PriceBar>>, path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{PRICES_HEADER}")?;
        for (ticker, bars) in stocks {
            for b in bars {
                let shares = b.shares_outstanding.map(|s| s.to_string()).unwrap_or_default();
                writeln!(w, "{ticker},{},{},{},{},{shares}", b.date, b.open, b.close, b.volume)?;
            }
        }
        w.flush()
    })();
    res.map_err(io_err(path))
}

pub fn write_index_table(indices: &BTreeMap<String, Vec<IndexBar>>, path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{INDEX_HEADER}")?;
        for (id, bars) in indices {
            for b in bars {
                writeln!(w, "{id},{},{}", b.date, b.close)?;
            }
        }
        w.flush()
    })();
    res.map_err(io_err(path))
}

/// Writes the stock file and the index file.
pub fn write_price_table(table: &PriceTable, prices: &Path, index: &Path) -> Result<(), DataError> {
    write_stock_prices(&table.stocks, prices)?;
    write_index_table(&table.indices, index)
}

pub fn write_events(events: &[RawEvent], path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{EVENTS_HEADER}")?;
        for e in events {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.event_id,
                e.ticker,
                e.timestamp.format("%Y-%m-%dT%H:%M:%S"),
                e.event_type.map(|t| t.as_str()).unwrap_or(""),
                e.text_ref.as_deref().unwrap_or("")
            )?;
        }
        w.flush()
    })();
    res.map_err(io_err(path))
}

pub fn write_metadata(meta: &Metadata, path: &Path) -> Result<(), DataError> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{METADATA_HEADER}")?;
        for (t, m) in meta {
            writeln!(w, "{t},{},{}", m.industry, m.cap_segment)?;
        }
        w.flush()
    })();
    res.map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn three_row_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.csv",
            "ticker,date,open,close,volume,shares_outstanding\n\
             AAA,2024-01-03,10,10.5,1000,1e6\n\
             AAA,2024-01-02,9.5,10,900,\n\
             AAA,2024-01-04,10.5,10.2,1100,1e6\n",
        );
        let t = load_price_table(&p, None).unwrap();
        assert_eq!(t.stocks.len(), 1);
        let bars = &t.stocks["AAA"];
        assert_eq!(bars.len(), 3);
        assert!(bars.windows(2).all(|w| w[0].date < w[1].date));
        assert_eq!(bars[0].shares_outstanding, None);
        assert_eq!(bars[1].shares_outstanding, Some(1e6));
    }

    #[test]
    fn negative_open_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.csv",
            "ticker,date,open,close,volume,shares_outstanding\nAAA,2024-01-02,-1,10,900,\n",
        );
        match load_stock_prices(&p).unwrap_err() {
            DataError::Row { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("open"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn duplicate_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.csv",
            "ticker,date,open,close,volume,shares_outstanding\n\
             AAA,2024-01-02,10,10,1,\n\
             AAA,2024-01-02,11,11,1,\n",
        );
        assert!(matches!(load_stock_prices(&p).unwrap_err(), DataError::Duplicate { line: 3, .. }));
    }

    #[test]
    fn header_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "ticker,day,open,close,volume,shares_outstanding\n");
        assert!(matches!(load_stock_prices(&p).unwrap_err(), DataError::Header { .. }));
        assert!(matches!(load_stock_prices(&dir.path().join("nope.csv")).unwrap_err(), DataError::Io { .. }));
    }

    #[test]
    fn events_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "e.csv",
            "event_id,ticker,timestamp,event_type,text_ref\n\
             e1,AAA,2024-01-02T10:00:00,risk_warning,n1\n\
             e2,AAA,2024-01-03 16:30,,\n",
        );
        let ev = load_events(&p).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].event_type, Some(EventType::RiskWarning));
        assert_eq!(ev[1].event_type, None);
        assert_eq!(ev[1].text_ref, None);
        let bad = write(
            dir.path(),
            "bad.csv",
            "event_id,ticker,timestamp,event_type,text_ref\ne1,AAA,2024-01-02T10:00:00,merger,\n",
        );
        let err = load_events(&bad).unwrap_err().to_string();
        assert!(err.contains("merger") && err.contains("line 2"), "{err}");

        let m = write(dir.path(), "m.csv", "ticker,industry,cap_segment\nAAA,tech,large\n");
        assert_eq!(load_metadata(&m).unwrap()["AAA"].industry, "tech");
    }

    fn bar_strategy() -> impl Strategy<Value = (f64, f64, f64, Option<f64>)> {
        (0.01f64..1e4, 0.01f64..1e4, 0.0f64..1e9, proptest::option::of(1.0f64..1e11))
    }

    proptest! {
        #[test]
        fn write_then_load_is_identity(rows in proptest::collection::vec(bar_strategy(), 1..20), idx in proptest::collection::vec(1.0f64..1e5, 1..20)) {
            let start = NaiveDate::from_ymd_opt(2023, 5, 1).unwrap();
            let mut table = PriceTable::default();
            table.stocks.insert(
                "S1".into(),
                rows.iter().enumerate().map(|(i, &(o, c, v, s))| PriceBar {
                    date: start + chrono::Days::new(i as u64), open: o, close: c, volume: v, shares_outstanding: s,
                }).collect(),
            );
            table.indices.insert(
                "IDX".into(),
                idx.iter().enumerate().map(|(i, &c)| IndexBar { date: start + chrono::Days::new(i as u64), close: c }).collect(),
            );
            let dir = tempfile::tempdir().unwrap();
            let (p, i) = (dir.path().join("p.csv"), dir.path().join("i.csv"));
            write_price_table(&table, &p, &i).unwrap();
            prop_assert_eq!(load_price_table(&p, Some(&i)).unwrap(), table);
        }
    }
}
