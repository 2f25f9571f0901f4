use std::collections::HashMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use faer::Mat;
use serde::Deserialize;

use super::AdjacencySequence;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripRecord {
    /// Start of the hour in which the trips began.
    pub start: NaiveDateTime,
    pub station_a: String,
    pub station_b: String,
    pub count: u32,
}

#[derive(Clone, Debug, Default)]
pub struct StationRegistry {
    ids: Vec<String>,
    names: Vec<String>,
    coords: Vec<[f64; 2]>,
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct StationRow {
    id: String,
    name: String,
    lat: f64,
    lon: f64,
}

impl StationRegistry {
    /// Registry with ids only; names default to the id and coordinates to zero.
    pub fn from_ids<I: IntoIterator<Item = String>>(ids: I) -> Result<Self> {
        let mut reg = Self::default();
        for id in ids {
            reg.push(id.clone(), id, [0.0, 0.0])?;
        }
        Ok(reg)
    }

    fn push(&mut self, id: String, name: String, latlon: [f64; 2]) -> Result<()> {
        if self.index.insert(id.clone(), self.ids.len()).is_some() {
            return Err(Error::arg(format!("duplicate station id `{id}`")));
        }
        self.ids.push(id);
        self.names.push(name);
        self.coords.push(latlon);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `[lat, lon]` per station.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

/// Reads a station registry CSV with header `id,name,lat,lon`.
pub fn load_stations(path: impl AsRef<Path>) -> Result<StationRegistry> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut reg = StationRegistry::default();
    for row in rdr.deserialize::<StationRow>() {
        let row = row?;
        reg.push(row.id, row.name, [row.lat, row.lon])?;
    }
    Ok(reg)
}

/// Parses an ISO 8601 timestamp and truncates it to the hour.
pub fn parse_hour(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim().trim_end_matches('Z');
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"];
    let dt = FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| NaiveDateTime::parse_from_str(&format!("{s}:00"), "%Y-%m-%dT%H:%M").ok())?;
    dt.date().and_hms_opt(dt.hour(), 0, 0)
}

/// Reads a trip CSV with header `start_hour_iso8601,station_a,station_b,count`,
/// checking station ids against `stations`.
pub fn load_trips(path: impl AsRef<Path>, stations: &StationRegistry) -> Result<Vec<TripRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 4 {
            return Err(Error::Parse { line, msg: format!("expected 4 fields, got {}", row.len()) });
        }
        let start = parse_hour(&row[0])
            .ok_or_else(|| Error::Parse { line, msg: format!("bad timestamp `{}`", &row[0]) })?;
        let count: u32 = row[3]
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("bad count `{}`", &row[3]) })?;
        for id in [&row[1], &row[2]] {
            if stations.position(id.trim()).is_none() {
                return Err(Error::UnknownStation { station: id.trim().to_string(), line });
            }
        }
        out.push(TripRecord {
            start,
            station_a: row[1].trim().to_string(),
            station_b: row[2].trim().to_string(),
            count,
        });
    }
    Ok(out)
}

/// First day of an aggregation window within one month.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonthWindow {
    pub start: NaiveDate,
}

impl MonthWindow {
    pub fn new(year: i32, month: u32, start_day: u32) -> Result<Self> {
        NaiveDate::from_ymd_opt(year, month, start_day)
            .map(|start| Self { start })
            .ok_or_else(|| Error::arg(format!("invalid date {year}-{month:02}-{start_day:02}")))
    }

    /// Window starting on the `nth` Sunday of the month.
    pub fn nth_sunday(year: i32, month: u32, nth: u8) -> Result<Self> {
        let start = NaiveDate::from_weekday_of_month_opt(year, month, chrono::Weekday::Sun, nth)
            .ok_or_else(|| Error::arg(format!("no Sunday #{nth} in {year}-{month:02}")))?;
        Ok(Self { start })
    }

    pub fn year(&self) -> i32 {
        self.start.year()
    }
}

/// Hourly undirected trip counts summed over the month windows, before smoothing.
pub fn aggregate_trips_raw(
    records: &[TripRecord],
    stations: &StationRegistry,
    window_days: usize,
    months: &[MonthWindow],
) -> Result<AdjacencySequence> {
    if window_days == 0 {
        return Err(Error::arg("window_days must be at least 1"));
    }
    if months.is_empty() {
        return Err(Error::EmptySelection("no month windows selected".into()));
    }
    if stations.is_empty() {
        return Err(Error::arg("empty station registry"));
    }
    let m = stations.len();
    let hours = window_days * 24;
    let mut mats = vec![Mat::<f64>::zeros(m, m); hours];
    let starts: Vec<NaiveDateTime> =
        months.iter().map(|w| w.start.and_hms_opt(0, 0, 0).expect("midnight exists")).collect();
    for (k, rec) in records.iter().enumerate() {
        let lookup = |id: &str| {
            stations
                .position(id)
                .ok_or_else(|| Error::UnknownStation { station: id.to_string(), line: k + 1 })
        };
        let a = lookup(&rec.station_a)?;
        let b = lookup(&rec.station_b)?;
        if a == b || rec.count == 0 {
            continue;
        }
        for s in &starts {
            let h = (rec.start - *s).num_hours();
            if (0..hours as i64).contains(&h) && rec.start >= *s {
                let mat = &mut mats[h as usize];
                mat[(a, b)] += rec.count as f64;
                mat[(b, a)] += rec.count as f64;
            }
        }
    }
    let labels = stations.ids().to_vec();
    AdjacencySequence::new(mats, 1.0)?.with_labels(labels)
}

/// Centered moving average along time with truncated windows at both ends.
///
/// Hour `h` averages hours `lo..=hi` with `lo = h − (w−1)/2` and
/// `hi = lo + w − 1`, both clipped to the sequence.
pub fn moving_average(adj: &AdjacencySequence, window: usize) -> Result<AdjacencySequence> {
    if window == 0 {
        return Err(Error::arg("smoothing window must be at least 1"));
    }
    let n = adj.len();
    let m = adj.m();
    let back = (window - 1) / 2;
    let mut out = Vec::with_capacity(n);
    for h in 0..n {
        let lo = h.saturating_sub(back);
        let hi = (h + window - 1 - back).min(n - 1);
        let mut acc = Mat::<f64>::zeros(m, m);
        for a in &adj.matrices()[lo..=hi] {
            acc += a;
        }
        out.push(acc * faer::Scale(1.0 / (hi - lo + 1) as f64));
    }
    let seq = AdjacencySequence::new(out, adj.dt())?;
    match adj.labels() {
        Some(l) => seq.with_labels(l.to_vec()),
        None => Ok(seq),
    }
}

/// Raw aggregation followed by the centered moving average.
pub fn aggregate_trips(
    records: &[TripRecord],
    stations: &StationRegistry,
    window_days: usize,
    months: &[MonthWindow],
    smoothing_window: usize,
) -> Result<AdjacencySequence> {
    if smoothing_window == 0 {
        return Err(Error::arg("smoothing window must be at least 1"));
    }
    let raw = aggregate_trips_raw(records, stations, window_days, months)?;
    moving_average(&raw, smoothing_window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn reg(n: usize) -> StationRegistry {
        StationRegistry::from_ids((0..n).map(|i| format!("s{i}"))).unwrap()
    }

    fn rec(day: u32, hour: u32, a: &str, b: &str, count: u32) -> TripRecord {
        TripRecord {
            start: NaiveDate::from_ymd_opt(2014, 1, day).unwrap().and_hms_opt(hour, 0, 0).unwrap(),
            station_a: a.into(),
            station_b: b.into(),
            count,
        }
    }

    #[test]
    fn single_record() {
        let months = [MonthWindow::new(2014, 1, 12).unwrap()];
        let adj = aggregate_trips_raw(&[rec(12, 5, "s0", "s2", 3)], &reg(3), 1, &months).unwrap();
        assert_eq!(adj.len(), 24);
        for t in 0..24 {
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if t == 5 && ((i, j) == (0, 2) || (i, j) == (2, 0)) { 3.0 } else { 0.0 };
                    assert_eq!(adj.matrix(t)[(i, j)], expect);
                }
            }
        }
    }

    #[test]
    fn self_loops_and_out_of_window_dropped_and_mass_conserved() {
        let months = [MonthWindow::new(2014, 1, 12).unwrap()];
        let recs = [
            rec(12, 1, "s1", "s1", 9),
            rec(11, 23, "s0", "s1", 4),
            rec(13, 0, "s0", "s1", 2),
            rec(13, 23, "s1", "s2", 5),
            rec(14, 0, "s1", "s2", 5),
        ];
        let adj = aggregate_trips_raw(&recs, &reg(3), 2, &months).unwrap();
        let total: f64 = adj.matrices().iter().map(|a| a.as_ref().sum()).sum();
        assert_eq!(total, 2.0 * (2.0 + 5.0));
        assert_eq!(adj.matrix(24)[(1, 0)], 2.0);
        assert_eq!(adj.matrix(47)[(2, 1)], 5.0);
    }

    #[test]
    fn months_are_summed() {
        let months = [MonthWindow::new(2014, 1, 12).unwrap(), MonthWindow::new(2014, 2, 9).unwrap()];
        let mut r2 = rec(12, 3, "s0", "s1", 1);
        r2.start = NaiveDate::from_ymd_opt(2014, 2, 9).unwrap().and_hms_opt(3, 0, 0).unwrap();
        let adj = aggregate_trips_raw(&[rec(12, 3, "s0", "s1", 2), r2], &reg(2), 1, &months).unwrap();
        assert_eq!(adj.matrix(3)[(0, 1)], 3.0);
    }

    #[test]
    fn errors() {
        let months = [MonthWindow::new(2014, 1, 12).unwrap()];
        let err = aggregate_trips_raw(&[rec(12, 0, "s0", "zz", 1)], &reg(2), 1, &months).unwrap_err();
        assert!(matches!(err, Error::UnknownStation { ref station, line: 1 } if station == "zz"));
        assert!(matches!(aggregate_trips_raw(&[], &reg(2), 1, &[]), Err(Error::EmptySelection(_))));
        assert!(aggregate_trips(&[], &reg(2), 1, &months, 0).is_err());
        assert!(MonthWindow::new(2014, 2, 30).is_err());
    }

    #[test]
    fn second_sundays_of_2014() {
        assert_eq!(MonthWindow::nth_sunday(2014, 1, 2).unwrap().start, NaiveDate::from_ymd_opt(2014, 1, 12).unwrap());
        assert_eq!(MonthWindow::nth_sunday(2014, 6, 2).unwrap().start, NaiveDate::from_ymd_opt(2014, 6, 8).unwrap());
    }

    #[test]
    fn moving_average_constant_and_edges() {
        let months = [MonthWindow::new(2014, 1, 12).unwrap()];
        let recs: Vec<_> = (0..24).map(|h| rec(12, h, "s0", "s1", 4)).collect();
        let smooth = aggregate_trips(&recs, &reg(2), 1, &months, 12).unwrap();
        for t in 0..24 {
            assert!((smooth.matrix(t)[(0, 1)] - 4.0).abs() < 1e-12);
        }
        // impulse at hour 0 with window 3: hours 0 and 1 see it, averaged over 2 and 3 samples
        let imp = aggregate_trips(&[rec(12, 0, "s0", "s1", 6)], &reg(2), 1, &months, 3).unwrap();
        assert_eq!(imp.matrix(0)[(0, 1)], 3.0);
        assert_eq!(imp.matrix(1)[(0, 1)], 2.0);
        assert_eq!(imp.matrix(2)[(0, 1)], 0.0);
        assert_eq!(imp.len(), 24);
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let sp = dir.path().join("stations.csv");
        let tp = dir.path().join("trips.csv");
        std::fs::write(&sp, "id,name,lat,lon\n31000,A St,38.9,-77.0\n31001,B St,38.8,-77.1\n").unwrap();
        let mut f = std::fs::File::create(&tp).unwrap();
        writeln!(f, "start_hour_iso8601,station_a,station_b,count").unwrap();
        writeln!(f, "2014-01-12T08:00:00,31000,31001,2").unwrap();
        writeln!(f, "2014-01-12T09:30:00Z,31001,31000,1").unwrap();
        drop(f);
        let reg = load_stations(&sp).unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.names()[1], "B St");
        let trips = load_trips(&tp, &reg).unwrap();
        assert_eq!(trips.len(), 2);
        assert_eq!(trips[1].start.hour(), 9);
        assert_eq!(trips[1].start.minute(), 0);

        std::fs::write(&tp, "start_hour_iso8601,station_a,station_b,count\n2014-01-12T08:00:00,31000,99,2\n").unwrap();
        assert!(matches!(load_trips(&tp, &reg), Err(Error::UnknownStation { line: 2, .. })));
        std::fs::write(&tp, "start_hour_iso8601,station_a,station_b,count\nnot-a-time,31000,31001,2\n").unwrap();
        assert!(matches!(load_trips(&tp, &reg), Err(Error::Parse { line: 2, .. })));
    }
}
