//! Raw tick ingestion and cleaning.
//!
//! Input is a CSV `timestamp,price[,cond,corr]`. Cleaning drops entries
//! with nonpositive prices, a negative correlation indicator, a condition
//! code other than `E`/`F`, or a timestamp outside 9:30-16:00, then
//! replaces multiple entries at one timestamp by their median price.
//! Values become log prices and times map to year fractions under the
//! 252-day, 6.5-hour convention.

use chrono::{NaiveDateTime, NaiveTime, Timelike};
use hfnoise::grid::{DAYS_PER_YEAR, SECONDS_PER_DAY};
use hfnoise::{Error, Result, TickSeries, TimeGrid};

const SESSION_OPEN_S: f64 = 9.5 * 3600.0; // 09:30
const SESSION_CLOSE_S: f64 = 16.0 * 3600.0; // 16:00

/// One raw record before cleaning.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTickRecord {
    /// Calendar day, when the timestamp carried one.
    pub day: Option<i64>,
    /// Wall-clock seconds since midnight.
    pub seconds_of_day: f64,
    pub price: f64,
    pub condition_code: Option<String>,
    pub correlation_indicator: Option<i64>,
}

fn parse_timestamp(raw: &str) -> Result<(Option<i64>, f64)> {
    let raw = raw.trim();
    if let Ok(num) = raw.parse::<f64>() {
        if !num.is_finite() || num < 0.0 {
            return Err(Error::Io(format!("invalid timestamp `{raw}`")));
        }
        if num < 86_400.0 {
            return Ok((None, num));
        }
        // epoch seconds, UTC calendar
        let days = (num / 86_400.0).floor();
        return Ok((Some(days as i64), num - days * 86_400.0));
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f") {
        return Ok((
            Some(dt.date().and_time(NaiveTime::MIN).and_utc().timestamp() / 86_400),
            dt.time().num_seconds_from_midnight() as f64 + dt.time().nanosecond() as f64 * 1e-9,
        ));
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S%.f") {
        return Ok((
            Some(dt.date().and_time(NaiveTime::MIN).and_utc().timestamp() / 86_400),
            dt.time().num_seconds_from_midnight() as f64 + dt.time().nanosecond() as f64 * 1e-9,
        ));
    }
    if let Ok(t) = NaiveTime::parse_from_str(raw, "%H:%M:%S%.f") {
        return Ok((
            None,
            t.num_seconds_from_midnight() as f64 + t.nanosecond() as f64 * 1e-9,
        ));
    }
    Err(Error::Io(format!("unparseable timestamp `{raw}`")))
}

/// Reads raw records from CSV. A header row is detected and skipped;
/// columns beyond the fourth are ignored.
pub fn read_raw_csv<R: std::io::Read>(reader: R) -> Result<Vec<RawTickRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Io(e.to_string()))?;
        if row.is_empty() || row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let first = row.get(0).unwrap_or("");
        if i == 0 && first.eq_ignore_ascii_case("timestamp") {
            continue;
        }
        if row.len() < 2 {
            return Err(Error::Io(format!("row {}: need timestamp,price", i + 1)));
        }
        let (day, seconds_of_day) = parse_timestamp(first)?;
        let price: f64 = row
            .get(1)
            .unwrap()
            .parse()
            .map_err(|_| Error::Io(format!("row {}: bad price `{}`", i + 1, row.get(1).unwrap())))?;
        let condition_code = row.get(2).map(str::trim).filter(|s| !s.is_empty()).map(String::from);
        let correlation_indicator = match row.get(3).map(str::trim).filter(|s| !s.is_empty()) {
            Some(s) => Some(
                s.parse::<i64>()
                    .map_err(|_| Error::Io(format!("row {}: bad correlation indicator `{s}`", i + 1)))?,
            ),
            None => None,
        };
        out.push(RawTickRecord {
            day,
            seconds_of_day,
            price,
            condition_code,
            correlation_indicator,
        });
    }
    Ok(out)
}

fn median_inplace(prices: &mut [f64]) -> f64 {
    prices.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = prices.len();
    if n % 2 == 1 {
        prices[n / 2]
    } else {
        0.5 * (prices[n / 2 - 1] + prices[n / 2])
    }
}

/// Cleans raw records into a log-price series on the year-fraction clock.
pub fn preprocess_ticks(records: &[RawTickRecord]) -> Result<TickSeries> {
    let mut days = records.iter().filter_map(|r| r.day).collect::<Vec<_>>();
    days.sort_unstable();
    days.dedup();
    if days.len() > 1 {
        return Err(Error::InvalidParameter(format!(
            "input spans {} calendar days; ingest one trading day at a time",
            days.len()
        )));
    }

    let mut kept: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.price.is_finite() && r.price > 0.0)
        .filter(|r| r.correlation_indicator.map_or(true, |c| c >= 0))
        .filter(|r| {
            r.condition_code
                .as_deref()
                .map_or(true, |c| matches!(c.trim().to_ascii_uppercase().as_str(), "" | "E" | "F"))
        })
        .filter(|r| (SESSION_OPEN_S..=SESSION_CLOSE_S).contains(&r.seconds_of_day))
        .map(|r| (r.seconds_of_day, r.price))
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidParameter(
            "no records survive the cleaning rules".into(),
        ));
    }
    kept.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < kept.len() {
        let t = kept[i].0;
        let mut bucket = vec![kept[i].1];
        let mut j = i + 1;
        while j < kept.len() && kept[j].0 == t {
            bucket.push(kept[j].1);
            j += 1;
        }
        let price = median_inplace(&mut bucket);
        times.push((t - SESSION_OPEN_S) / (SECONDS_PER_DAY * DAYS_PER_YEAR));
        values.push(price.ln());
        i = j;
    }
    if times.len() < 2 {
        return Err(Error::InvalidParameter(
            "fewer than two distinct timestamps survive cleaning".into(),
        ));
    }
    TickSeries::new(TimeGrid::new(times)?, values)
}

/// Reconstitutes raw records from a cleaned series (used to check that
/// preprocessing is idempotent).
pub fn series_to_records(series: &TickSeries) -> Vec<RawTickRecord> {
    series
        .grid()
        .points()
        .iter()
        .zip(series.values())
        .map(|(&t, &y)| RawTickRecord {
            day: None,
            seconds_of_day: t * SECONDS_PER_DAY * DAYS_PER_YEAR + SESSION_OPEN_S,
            price: y.exp(),
            condition_code: None,
            correlation_indicator: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(sod: f64, price: f64) -> RawTickRecord {
        RawTickRecord {
            day: None,
            seconds_of_day: sod,
            price,
            condition_code: None,
            correlation_indicator: None,
        }
    }

    #[test]
    fn median_rule_collapses_duplicate_timestamps() {
        let records = vec![
            rec(34_200.0, 10.0),
            rec(34_200.0, 12.0),
            rec(34_200.0, 11.0),
            rec(34_260.0, 10.5),
        ];
        let s = preprocess_ticks(&records).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.values()[0], 11.0f64.ln());
        assert_eq!(s.grid().points()[0], 0.0);
    }

    #[test]
    fn drop_rules() {
        let mut bad_price = rec(35_000.0, -1.0);
        bad_price.price = -1.0;
        let mut bad_corr = rec(35_100.0, 10.0);
        bad_corr.correlation_indicator = Some(-1);
        let mut bad_cond = rec(35_200.0, 10.0);
        bad_cond.condition_code = Some("Z".into());
        let mut ok_cond = rec(35_300.0, 10.0);
        ok_cond.condition_code = Some("E".into());
        let early = rec(1_000.0, 10.0);
        let late = rec(60_000.0, 10.0);
        let ok = rec(35_400.0, 20.0);

        let records = vec![bad_price, bad_corr, bad_cond, ok_cond, early, late, ok];
        let s = preprocess_ticks(&records).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.values(), &[10.0f64.ln(), 20.0f64.ln()]);

        assert!(preprocess_ticks(&[]).is_err());
    }

    #[test]
    fn preprocessing_is_idempotent() {
        let records: Vec<RawTickRecord> = (0..50)
            .map(|i| rec(34_200.0 + 30.0 * i as f64, 100.0 + (i as f64 * 0.7).sin()))
            .collect();
        let s1 = preprocess_ticks(&records).unwrap();
        let s2 = preprocess_ticks(&series_to_records(&s1)).unwrap();
        assert_eq!(s1.len(), s2.len());
        for (a, b) in s1.values().iter().zip(s2.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in s1.grid().points().iter().zip(s2.grid().points()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("35000.5").unwrap(), (None, 35_000.5));
        let (d, s) = parse_timestamp("2013-03-20T10:15:30").unwrap();
        assert!(d.is_some());
        assert_eq!(s, 10.0 * 3600.0 + 15.0 * 60.0 + 30.0);
        let (d2, s2) = parse_timestamp("10:15:30.25").unwrap();
        assert_eq!(d2, None);
        assert!((s2 - (36_930.25)).abs() < 1e-9);
        // epoch seconds: 2013-03-20 14:30:00 UTC
        let (d3, s3) = parse_timestamp("1363789800").unwrap();
        assert!(d3.is_some());
        assert!((s3 - 14.5 * 3600.0).abs() < 1e-9);
        assert!(parse_timestamp("garbage").is_err());
    }

    #[test]
    fn csv_reader_handles_optional_columns() {
        let data = "timestamp,price,cond,corr\n09:45:00,10.0,E,0\n09:46:00,10.5,,\n09:47:00,11.0\n";
        let recs = read_raw_csv(data.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].condition_code.as_deref(), Some("E"));
        assert_eq!(recs[0].correlation_indicator, Some(0));
        assert_eq!(recs[1].condition_code, None);
        assert_eq!(recs[2].correlation_indicator, None);

        let multi_day = "2013-03-20T10:00:00,10\n2013-03-21T10:00:00,11\n";
        let recs = read_raw_csv(multi_day.as_bytes()).unwrap();
        assert!(preprocess_ticks(&recs).is_err());
    }
}
