use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};

use super::{Timetable, TimetableBuilder, TimetableError, DAY};
use crate::{StopId, Time};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GtfsReport {
    pub dropped_trips: usize,
    pub instantiated_trips: usize,
    pub footpaths: usize,
}

/// Loads a GTFS directory, instantiating all trips active on `day_count`
/// consecutive days starting at `service_day`. Times are seconds since
/// `service_day` 00:00.
pub fn load_gtfs(dir: &Path, service_day: NaiveDate, day_count: u32) -> Result<Timetable, TimetableError> {
    let (tt, report) = load_gtfs_with_report(dir, service_day, day_count)?;
    if report.dropped_trips > 0 {
        log::warn!("{} trips with fewer than 2 events dropped", report.dropped_trips);
    }
    Ok(tt)
}

pub fn load_gtfs_with_report(
    dir: &Path,
    service_day: NaiveDate,
    day_count: u32,
) -> Result<(Timetable, GtfsReport), TimetableError> {
    if day_count == 0 || day_count as u64 * DAY as u64 > super::MAX_PERIOD as u64 {
        return Err(TimetableError::PeriodTooLong(day_count as u64 * DAY as u64));
    }
    for name in ["stops.txt", "routes.txt", "trips.txt", "stop_times.txt"] {
        if !dir.join(name).is_file() {
            return Err(TimetableError::MissingFile(name.into()));
        }
    }
    if dir.join("frequencies.txt").is_file() {
        return Err(TimetableError::Unsupported("frequencies.txt (expand frequency-based trips first)".into()));
    }

    let mut builder = TimetableBuilder::new(day_count * DAY);
    let mut stop_ids: HashMap<String, StopId> = HashMap::new();
    for rec in Table::open(dir, "stops.txt")? {
        let rec = rec?;
        let id = rec.required("stop_id")?.to_string();
        let coord = |field: &str| rec.get(field).and_then(|v| v.parse::<f64>().ok());
        let name = rec.get("stop_name").unwrap_or(&id).to_string();
        let sid = builder.add_stop(name, coord("stop_lat"), coord("stop_lon"));
        if stop_ids.insert(id.clone(), sid).is_some() {
            return Err(rec.error(format!("duplicate stop_id {id}")));
        }
    }
    for rec in Table::open(dir, "routes.txt")? {
        rec?.required("route_id")?;
    }

    let days: Vec<NaiveDate> = (0..day_count).map(|d| service_day + chrono::Days::new(d as u64)).collect();
    let active = service_days(dir, &days)?;

    let mut trip_service: BTreeMap<String, String> = BTreeMap::new();
    for rec in Table::open(dir, "trips.txt")? {
        let rec = rec?;
        rec.required("route_id")?;
        let id = rec.required("trip_id")?.to_string();
        let service = rec.required("service_id")?.to_string();
        trip_service.insert(id, service);
    }

    let mut events: BTreeMap<String, Vec<(u32, StopId, Time, Time)>> = BTreeMap::new();
    for rec in Table::open(dir, "stop_times.txt")? {
        let rec = rec?;
        let trip = rec.required("trip_id")?;
        if !trip_service.contains_key(trip) {
            return Err(rec.error(format!("unknown trip_id {trip}")));
        }
        let stop = rec.required("stop_id")?;
        let &sid = stop_ids.get(stop).ok_or_else(|| rec.error(format!("unknown stop_id {stop}")))?;
        let seq: u32 = rec
            .required("stop_sequence")?
            .parse()
            .map_err(|_| rec.error("stop_sequence is not an integer".into()))?;
        let arr = rec.get("arrival_time").filter(|s| !s.is_empty());
        let dep = rec.get("departure_time").filter(|s| !s.is_empty());
        let (arr, dep) = match (arr, dep) {
            (Some(a), Some(d)) => (rec.time(a)?, rec.time(d)?),
            (Some(a), None) => (rec.time(a)?, rec.time(a)?),
            (None, Some(d)) => (rec.time(d)?, rec.time(d)?),
            (None, None) => return Err(rec.time_error("")),
        };
        events.entry(trip.to_string()).or_default().push((seq, sid, arr, dep));
    }

    let mut report = GtfsReport::default();
    for (trip, mut list) in events {
        list.sort_by_key(|e| e.0);
        let service = &trip_service[&trip];
        for (d, on) in active.get(service).map(|v| v.as_slice()).unwrap_or(&[]).iter().enumerate() {
            if !on {
                continue;
            }
            if list.len() < 2 {
                report.dropped_trips += 1;
                continue;
            }
            let offset = d as Time * DAY;
            let name = if day_count > 1 { format!("{trip}#{d}") } else { trip.clone() };
            let evs: Vec<_> = list.iter().map(|&(_, p, a, b)| (p, a + offset, b + offset)).collect();
            builder.add_trip(name, &evs);
            report.instantiated_trips += 1;
        }
    }
    let transfers = dir.join("transfers.txt");
    if transfers.is_file() {
        for rec in Table::open(dir, "transfers.txt")? {
            let rec = rec?;
            if rec.get("transfer_type").map(str::trim) != Some("2") {
                continue;
            }
            let from = rec.required("from_stop_id")?;
            let to = rec.required("to_stop_id")?;
            let (Some(&p), Some(&q)) = (stop_ids.get(from), stop_ids.get(to)) else {
                return Err(rec.error(format!("unknown stop in transfer {from}->{to}")));
            };
            let secs: Time = rec
                .required("min_transfer_time")?
                .parse()
                .map_err(|_| rec.error("min_transfer_time is not an integer".into()))?;
            if p != q {
                builder.add_footpath(p, q, secs);
                report.footpaths += 1;
            }
        }
    }
    let tt = builder.build()?;
    Ok((tt, report))
}

/// Per service id, whether it runs on each requested day. Without any calendar
/// file every service runs every day.
fn service_days(dir: &Path, days: &[NaiveDate]) -> Result<HashMap<String, Vec<bool>>, TimetableError> {
    let has_calendar = dir.join("calendar.txt").is_file();
    let has_dates = dir.join("calendar_dates.txt").is_file();
    let mut active: HashMap<String, Vec<bool>> = HashMap::new();
    if !has_calendar && !has_dates {
        for rec in Table::open(dir, "trips.txt")? {
            active.insert(rec?.required("service_id")?.to_string(), vec![true; days.len()]);
        }
        return Ok(active);
    }
    if has_calendar {
        for rec in Table::open(dir, "calendar.txt")? {
            let rec = rec?;
            let id = rec.required("service_id")?.to_string();
            let start = rec.date(rec.required("start_date")?)?;
            let end = rec.date(rec.required("end_date")?)?;
            let mut flags = Vec::with_capacity(days.len());
            for day in days {
                let field = match day.weekday() {
                    Weekday::Mon => "monday",
                    Weekday::Tue => "tuesday",
                    Weekday::Wed => "wednesday",
                    Weekday::Thu => "thursday",
                    Weekday::Fri => "friday",
                    Weekday::Sat => "saturday",
                    Weekday::Sun => "sunday",
                };
                let runs = rec.required(field)?.trim() == "1";
                flags.push(runs && start <= *day && *day <= end);
            }
            active.insert(id, flags);
        }
    }
    if has_dates {
        for rec in Table::open(dir, "calendar_dates.txt")? {
            let rec = rec?;
            let id = rec.required("service_id")?.to_string();
            let date = rec.date(rec.required("date")?)?;
            let added = match rec.required("exception_type")?.trim() {
                "1" => true,
                "2" => false,
                other => return Err(rec.error(format!("exception_type {other}"))),
            };
            if let Some(d) = days.iter().position(|&x| x == date) {
                active.entry(id).or_insert_with(|| vec![false; days.len()])[d] = added;
            }
        }
    }
    Ok(active)
}

/// Parses `H:MM:SS`, where hours may exceed 23.
fn parse_time(s: &str) -> Option<Time> {
    let mut parts = s.trim().split(':');
    let h: Time = parts.next()?.parse().ok()?;
    let m: Time = parts.next()?.parse().ok()?;
    let sec: Time = parts.next()?.parse().ok()?;
    if parts.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    h.checked_mul(3600)?.checked_add(m * 60 + sec)
}

struct Table {
    file: String,
    headers: HashMap<String, usize>,
    reader: csv::StringRecordsIntoIter<std::fs::File>,
}

impl Table {
    fn open(dir: &Path, name: &str) -> Result<Table, TimetableError> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_path(dir.join(name))?;
        let headers = reader
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        Ok(Table { file: name.into(), headers, reader: reader.into_records() })
    }
}

impl Iterator for Table {
    type Item = Result<Record, TimetableError>;
    fn next(&mut self) -> Option<Self::Item> {
        let rec = self.reader.next()?;
        Some(rec.map_err(TimetableError::from).map(|r| Record {
            line: r.position().map_or(0, |p| p.line()),
            file: self.file.clone(),
            headers: self.headers.clone(),
            rec: r,
        }))
    }
}

struct Record {
    file: String,
    line: u64,
    headers: HashMap<String, usize>,
    rec: csv::StringRecord,
}

impl Record {
    fn get(&self, field: &str) -> Option<&str> {
        self.headers.get(field).and_then(|&i| self.rec.get(i))
    }
    fn required(&self, field: &str) -> Result<&str, TimetableError> {
        self.get(field).filter(|v| !v.is_empty()).ok_or_else(|| self.error(format!("missing field {field}")))
    }
    fn error(&self, reason: String) -> TimetableError {
        TimetableError::BadRecord { file: self.file.clone(), line: self.line, reason }
    }
    fn time_error(&self, value: &str) -> TimetableError {
        TimetableError::BadTime { file: self.file.clone(), line: self.line, value: value.into() }
    }
    fn time(&self, value: &str) -> Result<Time, TimetableError> {
        parse_time(value).ok_or_else(|| self.time_error(value))
    }
    fn date(&self, value: &str) -> Result<NaiveDate, TimetableError> {
        NaiveDate::parse_from_str(value.trim(), "%Y%m%d").map_err(|_| self.error(format!("bad date {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_over_midnight_times() {
        assert_eq!(parse_time("25:30:00"), Some(91_800));
        assert_eq!(parse_time("7:05:09"), Some(25_509));
        assert_eq!(parse_time("07:60:00"), None);
        assert_eq!(parse_time("abc"), None);
    }
}
