use chrono::{Days, NaiveDate, NaiveDateTime, NaiveTime};

use super::{DataError, PriceTable};

/// Ordered trading days plus the session open used to bucket news.
///
/// News stamped in `[open(t), open(t+1))` belongs to signal day `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
    open_time: NaiveTime,
}

impl TradingCalendar {
    pub fn new(days: Vec<NaiveDate>) -> Result<Self, DataError> {
        Self::with_open_time(days, NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"))
    }

    pub fn with_open_time(days: Vec<NaiveDate>, open_time: NaiveTime) -> Result<Self, DataError> {
        if days.is_empty() {
            return Err(DataError::EmptyCalendar);
        }
        for w in days.windows(2) {
            if w[1] <= w[0] {
                return Err(DataError::CalendarOrder(w[1], w[0]));
            }
        }
        Ok(Self { days, open_time })
    }

    /// Union of benchmark dates; falls back to stock dates when the table
    /// carries no index series.
    pub fn from_table(table: &PriceTable) -> Result<Self, DataError> {
        let mut days: Vec<NaiveDate> = if table.indices.is_empty() {
            table.stocks.values().flat_map(|s| s.iter().map(|b| b.date)).collect()
        } else {
            table.indices.values().flat_map(|s| s.iter().map(|b| b.date)).collect()
        };
        days.sort_unstable();
        days.dedup();
        Self::new(days)
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.days[index]
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.days.binary_search(&date).ok()
    }

    pub fn open_of(&self, index: usize) -> NaiveDateTime {
        self.days[index].and_time(self.open_time)
    }

    /// Maps a timestamp to the index of its signal day: the last trading day
    /// whose open is at or before the timestamp.
    ///
    /// The final day's bucket ends one calendar day after its open.
    pub fn assign_signal_day(&self, ts: NaiveDateTime) -> Result<usize, DataError> {
        let first_open = self.open_of(0);
        let last = self.days.len() - 1;
        let end = self.open_of(last) + Days::new(1);
        if ts < first_open || ts >= end {
            return Err(DataError::OutOfRange(ts));
        }
        // number of opens <= ts, minus one
        let n = self.days.partition_point(|d| d.and_time(self.open_time) <= ts);
        Ok(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Datelike, Weekday};
    use proptest::prelude::*;

    fn weekday_calendar(start: NaiveDate, n: usize) -> TradingCalendar {
        let mut days = Vec::new();
        let mut d = start;
        while days.len() < n {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                days.push(d);
            }
            d = d.succ_opt().unwrap();
        }
        TradingCalendar::new(days).unwrap()
    }

    fn at(d: NaiveDate, h: u32, m: u32) -> NaiveDateTime {
        d.and_hms_opt(h, m, 0).unwrap()
    }

    #[test]
    fn assignment_examples() {
        // 2024-01-05 is a Friday
        let cal = weekday_calendar(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 10);
        let fri = NaiveDate::from_ymd_opt(2024, 1, 5).unwrap();
        let fri_idx = cal.index_of(fri).unwrap();
        assert_eq!(cal.assign_signal_day(at(fri, 10, 0)).unwrap(), fri_idx);
        assert_eq!(cal.assign_signal_day(at(fri, 9, 30)).unwrap(), fri_idx);
        assert_eq!(cal.assign_signal_day(at(fri, 9, 29)).unwrap(), fri_idx - 1);
        let sat = NaiveDate::from_ymd_opt(2024, 1, 6).unwrap();
        assert_eq!(cal.assign_signal_day(at(sat, 12, 0)).unwrap(), fri_idx);
        let mon = NaiveDate::from_ymd_opt(2024, 1, 8).unwrap();
        assert_eq!(cal.assign_signal_day(at(mon, 9, 0)).unwrap(), fri_idx);
        assert_eq!(cal.assign_signal_day(at(mon, 9, 30)).unwrap(), fri_idx + 1);
    }

    #[test]
    fn weekend_gap_matches_brute_force_walk() {
        let cal = weekday_calendar(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 15);
        // every half hour over the covered span: brute force the last open at or before ts
        let mut ts = cal.open_of(0);
        let end = cal.open_of(cal.len() - 1) + Days::new(1);
        while ts < end {
            let expected = (0..cal.len()).filter(|&i| cal.open_of(i) <= ts).max().unwrap();
            assert_eq!(cal.assign_signal_day(ts).unwrap(), expected, "{ts}");
            ts += chrono::Duration::minutes(30);
        }
    }

    #[test]
    fn out_of_range() {
        let cal = weekday_calendar(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 5);
        assert!(cal.assign_signal_day(at(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 9, 0)).is_err());
        assert!(cal.assign_signal_day(at(NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(), 9, 0)).is_err());
    }

    #[test]
    fn rejects_unordered_days() {
        let d = NaiveDate::from_ymd_opt(2024, 1, 2).unwrap();
        assert!(TradingCalendar::new(vec![d, d]).is_err());
        assert!(TradingCalendar::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn assignment_is_monotone(a in 0i64..(14 * 24 * 60), b in 0i64..(14 * 24 * 60)) {
            let cal = weekday_calendar(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 12);
            let base = cal.open_of(0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let t1 = base + chrono::Duration::minutes(lo);
            let t2 = base + chrono::Duration::minutes(hi);
            if let (Ok(x), Ok(y)) = (cal.assign_signal_day(t1), cal.assign_signal_day(t2)) {
                prop_assert!(x <= y);
            }
        }
    }
}
