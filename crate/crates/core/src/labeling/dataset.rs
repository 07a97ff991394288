use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{LabelError, LabeledEvent};

/// Writes one JSON record per line.
pub fn write_dataset<W: Write>(records: &[LabeledEvent], mut out: W) -> Result<(), LabelError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| LabelError::Parse { line: 0, msg: e.to_string() })?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads line-delimited records; blank lines are skipped, malformed lines
/// report their 1-based line number.
pub fn read_dataset<R: Read>(input: R) -> Result<Vec<LabeledEvent>, LabelError> {
    let reader = BufReader::new(input);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledEvent =
            serde_json::from_str(&line).map_err(|e| LabelError::Parse { line: i + 1, msg: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_dataset_file(records: &[LabeledEvent], path: &Path) -> Result<(), LabelError> {
    write_dataset(records, BufWriter::new(File::create(path)?))
}

pub fn read_dataset_file(path: &Path) -> Result<Vec<LabeledEvent>, LabelError> {
    read_dataset(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{Direction, EventType, Strength};
    use chrono::NaiveDate;

    fn rec(i: usize, car: f64, t: EventType) -> LabeledEvent {
        LabeledEvent {
            event_id: format!("e{i}"),
            news_ref: format!("n{i}"),
            t0: NaiveDate::from_ymd_opt(2024, 1, 2 + i as u32).unwrap().and_hms_opt(9, 45, 0).unwrap(),
            ticker: "AAA".into(),
            event_type: t,
            direction: Direction::from_value(car, 0.0),
            strength: Strength::from_magnitude(car, 0.01),
            car,
        }
    }

    #[test]
    fn empty_round_trip() {
        let mut buf = Vec::new();
        write_dataset(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
        assert!(read_dataset(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn three_records_round_trip() {
        let recs = vec![
            rec(0, 0.031, EventType::Dividend),
            rec(1, -0.0123456789, EventType::Violation),
            rec(2, 0.0, EventType::Industry),
        ];
        let mut buf = Vec::new();
        write_dataset(&recs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 3);
        assert_eq!(read_dataset(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn unknown_event_type_names_label_and_line() {
        let mut buf = Vec::new();
        write_dataset(&[rec(0, 0.02, EventType::Dividend)], &mut buf).unwrap();
        let good = String::from_utf8(buf).unwrap();
        let bad = good.replace("dividend", "earnings_beat");
        let text = format!("{good}{bad}");
        let err = read_dataset(text.as_bytes()).unwrap_err();
        match err {
            LabelError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("earnings_beat"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
