//! Canonical timetable model: stops, closed footpaths, trips as contiguous
//! stop-event ranges, and lines of totally ordered trips.

mod footpaths;
mod gtfs;
mod lines;

use std::ops::Range;

use thiserror::Error;

use crate::{EventId, LineId, StopId, Time, TripId};

pub use footpaths::{close_footpaths, Footpaths, DEFAULT_CLOSURE_CAP};
pub use gtfs::{load_gtfs, load_gtfs_with_report, GtfsReport};
pub use lines::{group_lines, precedes};

pub const DAY: Time = 86_400;
/// Longest supported service period.
pub const MAX_PERIOD: Time = 2 * DAY;

#[derive(Debug, Error)]
pub enum TimetableError {
    #[error("stop id {0} out of range")]
    UnknownStop(u64),
    #[error("trip {trip}: {reason}")]
    InvalidTrip { trip: String, reason: String },
    #[error("footpath component containing stop {stop} has {size} stops (cap {cap})")]
    ClosureBlowup { stop: StopId, size: usize, cap: usize },
    #[error("service period of {0} s exceeds two days")]
    PeriodTooLong(u64),
    #[error("missing mandatory GTFS file {0}")]
    MissingFile(String),
    #[error("unsupported GTFS feature: {0}")]
    Unsupported(String),
    #[error("{file}:{line}: cannot parse time {value:?}")]
    BadTime { file: String, line: u64, value: String },
    #[error("{file}:{line}: {reason}")]
    BadRecord { file: String, line: u64, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("event {event}: {reason}")]
    InvalidChange { event: EventId, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stop {
    pub name: String,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub stops: Vec<StopId>,
    pub first_trip: TripId,
    pub trip_count: u32,
}

impl Line {
    pub fn trips(&self) -> Range<TripId> {
        self.first_trip..self.first_trip + self.trip_count
    }
}

/// A trip before line grouping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTrip {
    pub name: String,
    pub stops: Vec<StopId>,
    pub arr: Vec<Time>,
    pub dep: Vec<Time>,
}

/// Replacement times for one stop event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventChange {
    pub event: EventId,
    pub arrival: Time,
    pub departure: Time,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timetable {
    pub(crate) stops: Vec<Stop>,
    pub(crate) footpaths: Footpaths,
    pub(crate) lines: Vec<Line>,
    pub(crate) trip_names: Vec<String>,
    pub(crate) trip_offsets: Vec<EventId>,
    pub(crate) event_stop: Vec<StopId>,
    pub(crate) arr: Vec<Time>,
    pub(crate) dep: Vec<Time>,
    pub(crate) period: Time,
    // derived
    pub(crate) trip_line: Vec<LineId>,
    pub(crate) event_trip: Vec<TripId>,
    pub(crate) occ_offsets: Vec<u32>,
    pub(crate) occurrences: Vec<(LineId, u32)>,
}

impl Timetable {
    /// Assembles a timetable from its stored parts and rebuilds the derived indices.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        stops: Vec<Stop>,
        footpaths: Footpaths,
        lines: Vec<Line>,
        trip_names: Vec<String>,
        trip_offsets: Vec<EventId>,
        event_stop: Vec<StopId>,
        arr: Vec<Time>,
        dep: Vec<Time>,
        period: Time,
    ) -> Self {
        let mut trip_line = vec![0; trip_names.len()];
        for (l, line) in lines.iter().enumerate() {
            for t in line.trips() {
                trip_line[t as usize] = l as LineId;
            }
        }
        let mut event_trip = vec![0; event_stop.len()];
        for t in 0..trip_names.len() {
            for e in trip_offsets[t]..trip_offsets[t + 1] {
                event_trip[e as usize] = t as TripId;
            }
        }
        let mut occ: Vec<Vec<(LineId, u32)>> = vec![Vec::new(); stops.len()];
        for (l, line) in lines.iter().enumerate() {
            for (i, &p) in line.stops.iter().enumerate() {
                occ[p as usize].push((l as LineId, i as u32));
            }
        }
        let mut occ_offsets = Vec::with_capacity(stops.len() + 1);
        let mut occurrences = Vec::new();
        occ_offsets.push(0);
        for list in occ {
            occurrences.extend(list);
            occ_offsets.push(occurrences.len() as u32);
        }
        Timetable {
            stops,
            footpaths,
            lines,
            trip_names,
            trip_offsets,
            event_stop,
            arr,
            dep,
            period,
            trip_line,
            event_trip,
            occ_offsets,
            occurrences,
        }
    }

    pub fn stop_count(&self) -> usize {
        self.stops.len()
    }
    pub fn trip_count(&self) -> usize {
        self.trip_names.len()
    }
    pub fn event_count(&self) -> usize {
        self.event_stop.len()
    }
    pub fn line_count(&self) -> usize {
        self.lines.len()
    }
    pub fn period(&self) -> Time {
        self.period
    }
    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }
    pub fn stop(&self, p: StopId) -> &Stop {
        &self.stops[p as usize]
    }
    pub fn footpaths(&self) -> &Footpaths {
        &self.footpaths
    }
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }
    pub fn line(&self, l: LineId) -> &Line {
        &self.lines[l as usize]
    }
    pub fn trip_name(&self, t: TripId) -> &str {
        &self.trip_names[t as usize]
    }
    pub fn trip_line(&self, t: TripId) -> LineId {
        self.trip_line[t as usize]
    }
    pub fn trip_events(&self, t: TripId) -> Range<EventId> {
        self.trip_offsets[t as usize]..self.trip_offsets[t as usize + 1]
    }
    pub fn trip_len(&self, t: TripId) -> usize {
        (self.trip_offsets[t as usize + 1] - self.trip_offsets[t as usize]) as usize
    }
    /// Event id of `T[i]` (0-based index).
    pub fn event(&self, t: TripId, i: usize) -> EventId {
        self.trip_offsets[t as usize] + i as EventId
    }
    pub fn event_trip(&self, e: EventId) -> TripId {
        self.event_trip[e as usize]
    }
    /// 0-based index of `e` within its trip.
    pub fn event_index(&self, e: EventId) -> usize {
        (e - self.trip_offsets[self.event_trip[e as usize] as usize]) as usize
    }
    pub fn event_stop(&self, e: EventId) -> StopId {
        self.event_stop[e as usize]
    }
    pub fn arr(&self, e: EventId) -> Time {
        self.arr[e as usize]
    }
    pub fn dep(&self, e: EventId) -> Time {
        self.dep[e as usize]
    }
    /// Last trip of the line of `t`, exclusive.
    pub fn line_end(&self, t: TripId) -> TripId {
        let line = &self.lines[self.trip_line[t as usize] as usize];
        line.first_trip + line.trip_count
    }
    /// `(line, index)` pairs at which lines visit `p`, sorted by line then index.
    pub fn stop_occurrences(&self, p: StopId) -> &[(LineId, u32)] {
        &self.occurrences[self.occ_offsets[p as usize] as usize..self.occ_offsets[p as usize + 1] as usize]
    }
    pub fn max_trip_len(&self) -> usize {
        (0..self.trip_count() as TripId).map(|t| self.trip_len(t)).max().unwrap_or(0)
    }

    /// Earliest trip of line `l` whose departure at index `i` is at least `time`.
    pub fn earliest_trip(&self, l: LineId, i: usize, time: Time) -> Option<TripId> {
        let line = &self.lines[l as usize];
        let (mut lo, mut hi) = (0u32, line.trip_count);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let e = self.event(line.first_trip + mid, i);
            if self.dep[e as usize] >= time {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (lo < line.trip_count).then_some(line.first_trip + lo)
    }

    /// Checks every structural invariant. Used by tests and after deserialization.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.stops.len();
        if self.period > MAX_PERIOD {
            return Err(format!("period {} too long", self.period));
        }
        self.footpaths.validate(n)?;
        if self.trip_offsets.len() != self.trip_names.len() + 1 || self.trip_offsets[0] != 0 {
            return Err("trip offsets malformed".into());
        }
        if *self.trip_offsets.last().unwrap() as usize != self.event_stop.len()
            || self.arr.len() != self.event_stop.len()
            || self.dep.len() != self.event_stop.len()
        {
            return Err("event arrays malformed".into());
        }
        let mut next_trip = 0;
        for (l, line) in self.lines.iter().enumerate() {
            if line.first_trip != next_trip || line.trip_count == 0 {
                return Err(format!("line {l} trips not contiguous"));
            }
            next_trip += line.trip_count;
            for t in line.trips() {
                if self.trip_len(t) != line.stops.len() || line.stops.len() < 2 {
                    return Err(format!("trip {t} length differs from line {l}"));
                }
                for (i, &p) in line.stops.iter().enumerate() {
                    let e = self.event(t, i) as usize;
                    if p as usize >= n || self.event_stop[e] != p {
                        return Err(format!("trip {t} stop sequence differs from line {l}"));
                    }
                    if self.arr[e] > self.dep[e] {
                        return Err(format!("event {e} departs before arriving"));
                    }
                    if i + 1 < line.stops.len() && self.dep[e] > self.arr[e + 1] {
                        return Err(format!("event {e} departs after next arrival"));
                    }
                }
                if t > line.first_trip {
                    let (a, b) = (self.trip_events(t - 1), self.trip_events(t));
                    let ok = precedes(
                        (&self.arr[a.start as usize..a.end as usize], &self.dep[a.start as usize..a.end as usize]),
                        (&self.arr[b.start as usize..b.end as usize], &self.dep[b.start as usize..b.end as usize]),
                    );
                    if !ok {
                        return Err(format!("trips {} and {t} violate line order", t - 1));
                    }
                }
            }
        }
        if next_trip as usize != self.trip_names.len() {
            return Err("trips not covered by lines".into());
        }
        Ok(())
    }

    /// Reduces every departure by `buffer`, never below the arrival.
    pub fn apply_buffer_time(&self, buffer: Time) -> Timetable {
        let mut tt = self.clone();
        for (d, &a) in tt.dep.iter_mut().zip(&self.arr) {
            *d = d.saturating_sub(buffer).max(a);
        }
        tt
    }

    /// Copy with edited event times. Stop sequences and line order must survive the edit.
    pub fn with_event_changes(&self, changes: &[EventChange]) -> Result<Timetable, TimetableError> {
        let mut tt = self.clone();
        for c in changes {
            if c.event as usize >= tt.event_count() {
                return Err(TimetableError::InvalidChange { event: c.event, reason: "unknown event".into() });
            }
            tt.arr[c.event as usize] = c.arrival;
            tt.dep[c.event as usize] = c.departure;
        }
        tt.validate().map_err(|reason| TimetableError::InvalidChange {
            event: changes.first().map_or(0, |c| c.event),
            reason,
        })?;
        Ok(tt)
    }

    /// Earliest arrival at `q` when walking from `p`, if a footpath exists.
    pub fn walk(&self, p: StopId, q: StopId) -> Option<Time> {
        self.footpaths.duration(p, q)
    }
}

/// Collects stops, raw footpaths and trips, then builds a validated [`Timetable`].
#[derive(Clone, Debug)]
pub struct TimetableBuilder {
    stops: Vec<Stop>,
    footpaths: Vec<(StopId, StopId, Time)>,
    trips: Vec<RawTrip>,
    period: Time,
    closure_cap: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub dropped_trips: usize,
}

impl TimetableBuilder {
    pub fn new(period: Time) -> Self {
        TimetableBuilder {
            stops: Vec::new(),
            footpaths: Vec::new(),
            trips: Vec::new(),
            period,
            closure_cap: DEFAULT_CLOSURE_CAP,
        }
    }

    pub fn closure_cap(mut self, cap: usize) -> Self {
        self.closure_cap = cap;
        self
    }

    pub fn add_stop(&mut self, name: impl Into<String>, lat: Option<f64>, lon: Option<f64>) -> StopId {
        self.stops.push(Stop { name: name.into(), lat, lon });
        (self.stops.len() - 1) as StopId
    }

    pub fn add_footpath(&mut self, p: StopId, q: StopId, duration: Time) {
        self.footpaths.push((p, q, duration));
    }

    /// Adds a trip from `(stop, arrival, departure)` triples.
    pub fn add_trip(&mut self, name: impl Into<String>, events: &[(StopId, Time, Time)]) {
        self.trips.push(RawTrip {
            name: name.into(),
            stops: events.iter().map(|e| e.0).collect(),
            arr: events.iter().map(|e| e.1).collect(),
            dep: events.iter().map(|e| e.2).collect(),
        });
    }

    pub fn add_raw_trip(&mut self, trip: RawTrip) {
        self.trips.push(trip);
    }

    pub fn build(self) -> Result<Timetable, TimetableError> {
        self.build_with_report().map(|(tt, _)| tt)
    }

    pub fn build_with_report(self) -> Result<(Timetable, BuildReport), TimetableError> {
        if self.period > MAX_PERIOD {
            return Err(TimetableError::PeriodTooLong(self.period as u64));
        }
        let n = self.stops.len();
        let mut report = BuildReport::default();
        let mut trips = Vec::with_capacity(self.trips.len());
        for trip in self.trips {
            if trip.stops.len() != trip.arr.len() || trip.stops.len() != trip.dep.len() {
                return Err(TimetableError::InvalidTrip { trip: trip.name, reason: "ragged event arrays".into() });
            }
            if trip.stops.len() < 2 {
                report.dropped_trips += 1;
                continue;
            }
            if let Some(&p) = trip.stops.iter().find(|&&p| p as usize >= n) {
                return Err(TimetableError::UnknownStop(p as u64));
            }
            for i in 0..trip.stops.len() {
                if trip.arr[i] > trip.dep[i] {
                    return Err(TimetableError::InvalidTrip {
                        trip: trip.name,
                        reason: format!("event {i} departs before it arrives"),
                    });
                }
                if i + 1 < trip.stops.len() && trip.dep[i] > trip.arr[i + 1] {
                    return Err(TimetableError::InvalidTrip {
                        trip: trip.name,
                        reason: format!("event {i} departs after the next arrival"),
                    });
                }
            }
            trips.push(trip);
        }
        if report.dropped_trips > 0 {
            log::warn!("dropped {} trips with fewer than 2 events", report.dropped_trips);
        }
        let footpaths = close_footpaths(n, &self.footpaths, self.closure_cap)?;
        let grouped = group_lines(&trips);
        let mut lines = Vec::with_capacity(grouped.len());
        let mut trip_names = Vec::with_capacity(trips.len());
        let mut trip_offsets = vec![0];
        let (mut event_stop, mut arr, mut dep) = (Vec::new(), Vec::new(), Vec::new());
        for members in grouped {
            let first = &trips[members[0]];
            lines.push(Line {
                stops: first.stops.clone(),
                first_trip: trip_names.len() as TripId,
                trip_count: members.len() as u32,
            });
            for m in members {
                let t = &trips[m];
                trip_names.push(t.name.clone());
                event_stop.extend_from_slice(&t.stops);
                arr.extend_from_slice(&t.arr);
                dep.extend_from_slice(&t.dep);
                trip_offsets.push(event_stop.len() as EventId);
            }
        }
        let tt = Timetable::from_parts(
            self.stops,
            footpaths,
            lines,
            trip_names,
            trip_offsets,
            event_stop,
            arr,
            dep,
            self.period,
        );
        debug_assert_eq!(tt.validate(), Ok(()));
        Ok((tt, report))
    }
}
