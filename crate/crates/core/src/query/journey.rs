use serde::Serialize;

use super::Query;
use crate::timetable::Timetable;
use crate::transfers::TransferSet;
use crate::{StopId, Time, TripId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Walk {
    pub from: StopId,
    pub to: StopId,
    pub duration: Time,
}

/// Ride on `trip` from event index `enter` to `exit`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Leg {
    pub trip: TripId,
    pub trip_name: String,
    pub enter: u32,
    pub exit: u32,
    pub from: StopId,
    pub to: StopId,
    pub departure: Time,
    pub arrival: Time,
}

impl Leg {
    pub(crate) fn new(tt: &Timetable, trip: TripId, enter: u32, exit: u32) -> Leg {
        let (a, b) = (tt.event(trip, enter as usize), tt.event(trip, exit as usize));
        Leg {
            trip,
            trip_name: tt.trip_name(trip).to_string(),
            enter,
            exit,
            from: tt.event_stop(a),
            to: tt.event_stop(b),
            departure: tt.dep(a),
            arrival: tt.arr(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Journey {
    pub departure: Time,
    pub arrival: Time,
    pub initial_walk: Option<Walk>,
    pub legs: Vec<Leg>,
    pub final_walk: Option<Walk>,
}

impl Journey {
    pub fn trips(&self) -> usize {
        self.legs.len()
    }
}

/// Replays `j` against the timetable: footpaths exist, every change is a
/// transfer of `ts`, times are consistent and the departure is not before the query.
pub fn validate_journey(tt: &Timetable, ts: &TransferSet, q: &Query, j: &Journey) -> Result<(), String> {
    if j.legs.is_empty() {
        if q.source == q.target {
            return if j.arrival == q.departure { Ok(()) } else { Err("trivial journey with wrong arrival".into()) };
        }
        let d = tt.walk(q.source, q.target).ok_or("walking journey without footpath")?;
        return if j.arrival == q.departure + d { Ok(()) } else { Err("walking journey with wrong arrival".into()) };
    }
    for (k, leg) in j.legs.iter().enumerate() {
        if leg.enter >= leg.exit || leg.exit as usize >= tt.trip_len(leg.trip) {
            return Err(format!("leg {k} has bad indices {}..{}", leg.enter, leg.exit));
        }
        if *leg != Leg::new(tt, leg.trip, leg.enter, leg.exit) {
            return Err(format!("leg {k} disagrees with the timetable"));
        }
        if k > 0 {
            let prev = &j.legs[k - 1];
            let src = tt.event(prev.trip, prev.exit as usize);
            let dst = tt.event(leg.trip, leg.enter as usize);
            if !ts.contains(src, dst) {
                return Err(format!("change before leg {k} is not a transfer"));
            }
        }
    }
    let first = &j.legs[0];
    let last = j.legs.last().unwrap();
    let w0 = tt.walk(q.source, first.from).ok_or("no initial footpath")?;
    let w1 = tt.walk(last.to, q.target).ok_or("no final footpath")?;
    if q.departure + w0 > first.departure {
        return Err("first trip departs before the traveller can reach it".into());
    }
    if j.departure != first.departure - w0 || j.departure < q.departure {
        return Err("journey departure inconsistent".into());
    }
    if j.arrival != last.arrival + w1 {
        return Err("journey arrival inconsistent".into());
    }
    Ok(())
}
