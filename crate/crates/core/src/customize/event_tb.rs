use std::collections::HashMap;

use super::border::BorderEvents;
use super::reached::ReachedIndexStore;
use crate::timetable::Timetable;
use crate::transfers::TransferSet;
use crate::{EventId, LineId, TripId, MAX_ROUNDS};

/// Trip segment `T[from..=to]` boarded at `T[entry]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub trip: TripId,
    pub entry: u32,
    pub from: u32,
    pub to: u32,
    /// Index into the previous round's queue, `NO_PARENT` in round 1.
    pub parent: u32,
}

pub const NO_PARENT: u32 = u32::MAX;

/// An outgoing border event reached by the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObeHit {
    pub event: EventId,
    /// Number of trips used, counting the source trip.
    pub trips: u8,
    /// Segment index in queue `trips` (scanned), or in queue `trips - 1` when `via` is set.
    pub segment: u32,
    /// Transfer that boards directly at the OBE.
    pub via: Option<u32>,
}

/// Reusable state for Event-TB searches.
pub struct EventSearch {
    reached: ReachedIndexStore,
    queues: Vec<Vec<Segment>>,
    hits: Vec<ObeHit>,
    /// Earliest trip boarded directly at an OBE, per (line, index).
    boarded_obes: HashMap<(LineId, u32), TripId>,
    marks: Vec<u16>,
    mark_stamp: u16,
}

impl EventSearch {
    pub fn new(tt: &Timetable, ts: &TransferSet) -> Self {
        EventSearch {
            reached: ReachedIndexStore::new(tt.trip_count()),
            queues: vec![Vec::new(); MAX_ROUNDS],
            hits: Vec::new(),
            boarded_obes: HashMap::new(),
            marks: vec![0; ts.len()],
            mark_stamp: 0,
        }
    }

    pub fn hits(&self) -> &[ObeHit] {
        &self.hits
    }

    /// Queue of round `n` (1-based).
    pub fn queue(&self, n: usize) -> &[Segment] {
        &self.queues[n - 1]
    }

    /// Runs a search from `source` as if it were boarded there. With `bound =
    /// Some((borders, ℓ))` segments stop at the first level-ℓ OBE; otherwise the
    /// search is unrestricted and records no hits.
    pub fn run<F>(&mut self, tt: &Timetable, ts: &TransferSet, source: EventId, bound: Option<(&BorderEvents, u8)>, allowed: F)
    where
        F: Fn(usize) -> bool,
    {
        self.reached.reset();
        for q in &mut self.queues {
            q.clear();
        }
        self.hits.clear();
        self.boarded_obes.clear();
        self.mark_stamp = self.mark_stamp.wrapping_add(1);
        if self.mark_stamp == 0 {
            self.marks.fill(0);
            self.mark_stamp = 1;
        }

        let trip = tt.event_trip(source);
        let entry = tt.event_index(source) as u32;
        let len = tt.trip_len(trip) as u32;
        if entry + 1 >= len {
            return;
        }
        let to = truncate(tt, trip, entry + 1, len - 1, bound);
        self.queues[0].push(Segment { trip, entry, from: entry + 1, to, parent: NO_PARENT });
        self.reached.mark(tt, trip, entry + 1);

        for n in 1..=MAX_ROUNDS {
            if self.queues[n - 1].is_empty() {
                break;
            }
            if let Some((borders, level)) = bound {
                for (k, seg) in self.queues[n - 1].iter().enumerate() {
                    let last = tt.event(seg.trip, seg.to as usize);
                    if borders.is_obe(last, level) {
                        self.hits.push(ObeHit { event: last, trips: n as u8, segment: k as u32, via: None });
                    }
                }
            }
            if n == MAX_ROUNDS {
                break;
            }
            let (done, rest) = self.queues.split_at_mut(n);
            let current = &done[n - 1];
            let next = &mut rest[0];
            for (k, seg) in current.iter().enumerate() {
                for i in seg.from..=seg.to {
                    let e = tt.event(seg.trip, i as usize);
                    for id in ts.range(e) {
                        if !allowed(id) {
                            continue;
                        }
                        let target = ts.target(id);
                        let tb = tt.event_trip(target);
                        let j = tt.event_index(target) as u32;
                        let r = self.reached.get(tt, tb);
                        if r <= j + 1 && !leaves_before(tt, tb, r, j, bound) {
                            continue;
                        }
                        if let Some((borders, level)) = bound {
                            if borders.is_obe(target, level) {
                                let earliest = self.boarded_obes.entry((tt.trip_line(tb), j)).or_insert(TripId::MAX);
                                if *earliest <= tb {
                                    continue;
                                }
                                *earliest = tb;
                                self.hits.push(ObeHit { event: target, trips: n as u8 + 1, segment: k as u32, via: Some(id as u32) });
                                continue;
                            }
                        }
                        let end = if r > j + 1 { r - 1 } else { tt.trip_len(tb) as u32 - 1 };
                        let to = truncate(tt, tb, j + 1, end, bound);
                        next.push(Segment { trip: tb, entry: j, from: j + 1, to, parent: k as u32 });
                        self.reached.mark(tt, tb, j + 1);
                    }
                }
            }
        }
    }

    /// Transfer that created segment `idx` of round `n > 1`, found by rescanning its parent.
    pub fn entering_transfer<F>(&self, tt: &Timetable, ts: &TransferSet, n: usize, idx: usize, allowed: F) -> usize
    where
        F: Fn(usize) -> bool,
    {
        let child = self.queues[n - 1][idx];
        let parent = self.queues[n - 2][child.parent as usize];
        let want = tt.event(child.trip, child.entry as usize);
        find_transfer(tt, ts, &parent, want, allowed).expect("parent segment holds the entering transfer")
    }

    /// Transfers of the journey ending in segment `idx` of round `n`, in travel order.
    pub fn transfer_path<F>(&self, tt: &Timetable, ts: &TransferSet, mut n: usize, mut idx: usize, allowed: F) -> Vec<usize>
    where
        F: Fn(usize) -> bool,
    {
        let mut path = Vec::new();
        while n > 1 {
            path.push(self.entering_transfer(tt, ts, n, idx, &allowed));
            idx = self.queues[n - 1][idx].parent as usize;
            n -= 1;
        }
        path.reverse();
        path
    }

    /// Round and segment index that scanned `e`, if any.
    pub fn scanned(&self, tt: &Timetable, e: EventId) -> Option<(usize, usize)> {
        let t = tt.event_trip(e);
        let i = tt.event_index(e) as u32;
        for (n, q) in self.queues.iter().enumerate() {
            if let Some(k) = q.iter().position(|s| s.trip == t && s.from <= i && i <= s.to) {
                return Some((n + 1, k));
            }
        }
        None
    }

    /// Calls `on` for every transfer of the journey behind `hit` that this
    /// search has not unpacked yet; stops at the first already-marked one.
    pub fn unpack<F, G>(&mut self, tt: &Timetable, ts: &TransferSet, hit: ObeHit, allowed: F, mut on: G)
    where
        F: Fn(usize) -> bool,
        G: FnMut(usize),
    {
        let mut n = hit.trips as usize;
        let mut idx = hit.segment as usize;
        if let Some(via) = hit.via {
            if !self.mark(via as usize) {
                return;
            }
            on(via as usize);
            n -= 1;
        }
        while n > 1 {
            let id = self.entering_transfer(tt, ts, n, idx, &allowed);
            if !self.mark(id) {
                return;
            }
            on(id);
            idx = self.queues[n - 1][idx].parent as usize;
            n -= 1;
        }
    }

    fn mark(&mut self, id: usize) -> bool {
        if self.marks[id] == self.mark_stamp {
            return false;
        }
        self.marks[id] = self.mark_stamp;
        true
    }
}

fn find_transfer<F>(tt: &Timetable, ts: &TransferSet, parent: &Segment, want: EventId, allowed: F) -> Option<usize>
where
    F: Fn(usize) -> bool,
{
    (parent.from..=parent.to)
        .flat_map(|i| ts.range(tt.event(parent.trip, i as usize)))
        .find(|&id| ts.target(id) == want && allowed(id))
}

/// Whether a segment entering `trip` at index `r` leaves the cell before index `j`.
/// Such a segment does not cover a boarding at `j` although its reached index does.
fn leaves_before(tt: &Timetable, trip: TripId, r: u32, j: u32, bound: Option<(&BorderEvents, u8)>) -> bool {
    match bound {
        None => false,
        Some((borders, level)) => (r..j).any(|k| borders.is_obe(tt.event(trip, k as usize), level)),
    }
}

fn truncate(tt: &Timetable, trip: TripId, from: u32, to: u32, bound: Option<(&BorderEvents, u8)>) -> u32 {
    match bound {
        None => to,
        Some((borders, level)) => (from..=to).find(|&k| borders.is_obe(tt.event(trip, k as usize), level)).unwrap_or(to),
    }
}
