//! Small hand-built timetables with known answers.

use crate::partition::NestedPartition;
use crate::query::{FrontEntry, Query};
use crate::timetable::{Timetable, TimetableBuilder, DAY};
use crate::{StopId, TripId};

fn trip_by_name(tt: &Timetable, name: &str) -> TripId {
    (0..tt.trip_count() as TripId).find(|&t| tt.trip_name(t) == name).expect("fixture trip")
}

/// Two trips of one line feeding two other trips, where the later trip of the
/// line makes one transfer of the earlier trip superfluous.
pub struct ConflictExample {
    pub tt: Timetable,
    pub ta: TripId,
    pub ta_prime: TripId,
    pub tb: TripId,
    pub tc: TripId,
}

/// Stops `s, p1, p2, p3, p4, t`; footpaths `p1→p3` (5 s) and, optionally, `p2→p4` (1 s).
pub fn conflict_example(with_p2p4_footpath: bool) -> ConflictExample {
    let mut b = TimetableBuilder::new(DAY);
    let [s, p1, p2, p3, p4, t] = ["s", "p1", "p2", "p3", "p4", "t"].map(|n| b.add_stop(n, None, None));
    b.add_footpath(p1, p3, 5);
    if with_p2p4_footpath {
        b.add_footpath(p2, p4, 1);
    }
    b.add_trip("Ta", &[(s, 5, 5), (p1, 10, 10), (p2, 15, 15)]);
    b.add_trip("Ta'", &[(s, 0, 0), (p1, 5, 5), (p2, 10, 10)]);
    b.add_trip("Tb", &[(p3, 15, 15), (t, 20, 20)]);
    b.add_trip("Tc", &[(p4, 11, 11), (t, 20, 20)]);
    let tt = b.build().expect("fixture");
    ConflictExample {
        ta: trip_by_name(&tt, "Ta"),
        ta_prime: trip_by_name(&tt, "Ta'"),
        tb: trip_by_name(&tt, "Tb"),
        tc: trip_by_name(&tt, "Tc"),
        tt,
    }
}

pub struct KnownFront {
    pub tt: Timetable,
    pub query: Query,
    pub front: Vec<FrontEntry>,
}

/// Four stops where the fastest journey needs two trips: a direct trip
/// `A→D` arrives at 100, changing at `B` arrives at 60.
pub fn forced_two_trip() -> KnownFront {
    let mut b = TimetableBuilder::new(DAY);
    let [a, bb, c, d] = ["A", "B", "C", "D"].map(|n| b.add_stop(n, None, None));
    b.add_trip("direct", &[(a, 10, 10), (c, 50, 50), (d, 100, 100)]);
    b.add_trip("first", &[(a, 20, 20), (bb, 30, 30)]);
    b.add_trip("second", &[(bb, 40, 40), (d, 60, 60)]);
    KnownFront {
        tt: b.build().expect("fixture"),
        query: Query { source: a, target: d, departure: 0 },
        front: vec![FrontEntry { arrival: 100, trips: 1 }, FrontEntry { arrival: 60, trips: 2 }],
    }
}

/// Two cells `A = {a0, a1, a2}` and `B = {b0, b1, b2}` on one level.
pub struct TwoCells {
    pub tt: Timetable,
    pub part: NestedPartition,
    pub stops: [StopId; 6],
    /// `a1 → b1` at 100 and at 400.
    pub intercity: [TripId; 2],
    /// `b1 → b2 → a2`.
    pub back: TripId,
    /// `a2 → a1`.
    pub feeder: TripId,
    /// `a1 → a0` and `a0 → a1`, a loop that never leaves `A`.
    pub local: [TripId; 2],
}

pub fn two_cells() -> TwoCells {
    let mut b = TimetableBuilder::new(DAY);
    let stops = ["a0", "a1", "a2", "b0", "b1", "b2"].map(|n| b.add_stop(n, None, None));
    let [a0, a1, a2, _b0, b1, b2] = stops;
    b.add_trip("ic1", &[(a1, 100, 100), (b1, 200, 200)]);
    b.add_trip("ic2", &[(a1, 400, 400), (b1, 500, 500)]);
    b.add_trip("back", &[(b1, 210, 210), (b2, 220, 220), (a2, 300, 300)]);
    b.add_trip("feeder", &[(a2, 310, 310), (a1, 320, 320)]);
    b.add_trip("out", &[(a1, 330, 330), (a0, 340, 340)]);
    b.add_trip("in", &[(a0, 350, 350), (a1, 360, 360)]);
    let tt = b.build().expect("fixture");
    let part = NestedPartition::from_stop_cells(&tt, 1, vec![0, 0, 0, 1, 1, 1]).expect("fixture partition");
    TwoCells {
        intercity: [trip_by_name(&tt, "ic1"), trip_by_name(&tt, "ic2")],
        back: trip_by_name(&tt, "back"),
        feeder: trip_by_name(&tt, "feeder"),
        local: [trip_by_name(&tt, "out"), trip_by_name(&tt, "in")],
        stops,
        tt,
        part,
    }
}
