use std::time::Instant;

use super::journey::{Journey, Leg, Walk};
use super::{Algorithm, FrontEntry, Metrics, ProfileEntry, ProfileQuery, ProfileResult, Query, QueryError, QueryResult};
use crate::customize::{Customization, ReachedIndexStore};
use crate::partition::{lcl_test, CellId, NestedPartition};
use crate::refkit::profile_departures;
use crate::timetable::Timetable;
use crate::transfers::TransferSet;
use crate::{EventId, StopId, Time, TripId, MAX_ROUNDS};

const INF: Time = Time::MAX;
const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Seg {
    trip: TripId,
    entry: u32,
    from: u32,
    to: u32,
    level: u8,
    parent: u32,
}

#[derive(Clone, Copy, Debug)]
struct Hit {
    round: u8,
    seg: u32,
    exit: u32,
}

/// Query state for one engine; reusable across sequential queries.
pub struct QueryEngine<'a> {
    tt: &'a Timetable,
    ts: &'a TransferSet,
    algorithm: Algorithm,
    part: Option<&'a NestedPartition>,
    cust: Option<&'a Customization>,
    reached: ReachedIndexStore,
    per_round: Vec<Vec<u32>>,
    profile_mode: bool,
    queues: Vec<Vec<Seg>>,
    pending: Vec<Vec<Seg>>,
    target_queue: Vec<Vec<u32>>,
    to_target: Vec<Time>,
    last_target: Option<StopId>,
    best: [Time; MAX_ROUNDS + 1],
    source_cell: CellId,
    target_cell: CellId,
    query: Option<Query>,
    front: Vec<(FrontEntry, Option<Hit>)>,
    metrics: Metrics,
}

impl<'a> QueryEngine<'a> {
    pub fn tb(tt: &'a Timetable, ts: &'a TransferSet) -> Self {
        Self::build(Algorithm::Tb, tt, ts, None, None)
    }

    pub fn trex_basic(tt: &'a Timetable, ts: &'a TransferSet, part: &'a NestedPartition) -> Self {
        Self::build(Algorithm::TrexBasic, tt, ts, Some(part), None)
    }

    pub fn trex_overlay(tt: &'a Timetable, ts: &'a TransferSet, part: &'a NestedPartition, cust: &'a Customization) -> Self {
        Self::build(Algorithm::TrexOverlay, tt, ts, Some(part), Some(cust))
    }

    pub fn new(
        algorithm: Algorithm,
        tt: &'a Timetable,
        ts: &'a TransferSet,
        part: Option<&'a NestedPartition>,
        cust: Option<&'a Customization>,
    ) -> Result<Self, QueryError> {
        let ok = match algorithm {
            Algorithm::Tb => true,
            Algorithm::TrexBasic => part.is_some(),
            Algorithm::TrexOverlay => part.is_some() && cust.is_some(),
        };
        if !ok {
            return Err(QueryError::MissingCustomization(algorithm));
        }
        Ok(Self::build(algorithm, tt, ts, part, cust))
    }

    fn build(
        algorithm: Algorithm,
        tt: &'a Timetable,
        ts: &'a TransferSet,
        part: Option<&'a NestedPartition>,
        cust: Option<&'a Customization>,
    ) -> Self {
        QueryEngine {
            tt,
            ts,
            algorithm,
            part,
            cust,
            reached: ReachedIndexStore::new(tt.trip_count()),
            per_round: Vec::new(),
            profile_mode: false,
            queues: vec![Vec::new(); MAX_ROUNDS],
            pending: vec![Vec::new(); MAX_ROUNDS],
            target_queue: vec![Vec::new(); MAX_ROUNDS],
            to_target: vec![INF; tt.stop_count()],
            last_target: None,
            best: [INF; MAX_ROUNDS + 1],
            source_cell: 0,
            target_cell: 0,
            query: None,
            front: Vec::new(),
            metrics: Metrics::default(),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    fn check_stop(&self, p: StopId) -> Result<(), QueryError> {
        if (p as usize) < self.tt.stop_count() {
            Ok(())
        } else {
            Err(QueryError::UnknownStop(p))
        }
    }

    fn prepare(&mut self, source: StopId, target: StopId) {
        if let Some(old) = self.last_target.replace(target) {
            for &p in self.tt.footpaths().targets(old) {
                self.to_target[p as usize] = INF;
            }
        }
        let fp = self.tt.footpaths();
        for (&p, &d) in fp.targets(target).iter().zip(fp.durations(target)) {
            self.to_target[p as usize] = d;
        }
        if let Some(part) = self.part {
            self.source_cell = part.cell(source);
            self.target_cell = part.cell(target);
        }
        self.best = [INF; MAX_ROUNDS + 1];
        self.front.clear();
        self.metrics = Metrics::default();
    }

    /// Pareto front for a fixed departure. Journeys of the last query are
    /// available through [`journey`](Self::journey) until the next query.
    pub fn query(&mut self, q: &Query) -> Result<QueryResult, QueryError> {
        self.check_stop(q.source)?;
        self.check_stop(q.target)?;
        let start = Instant::now();
        self.prepare(q.source, q.target);
        self.query = Some(*q);
        self.profile_mode = false;
        if q.source == q.target {
            self.front.push((FrontEntry { arrival: q.departure, trips: 0 }, None));
        } else {
            self.reached.reset();
            self.run(q.source, q.target, q.departure);
        }
        self.metrics.elapsed_us = start.elapsed().as_micros() as u64;
        Ok(QueryResult { front: self.front.iter().map(|f| f.0).collect(), metrics: self.metrics })
    }

    /// Profile query over `[start, end]`: one run per candidate departure in
    /// descending order, sharing reached indices and per-round bounds.
    pub fn profile(&mut self, pq: &ProfileQuery) -> Result<ProfileResult, QueryError> {
        self.check_stop(pq.source)?;
        self.check_stop(pq.target)?;
        if pq.start > pq.end {
            return Err(QueryError::EmptyInterval { start: pq.start, end: pq.end });
        }
        let start = Instant::now();
        self.prepare(pq.source, pq.target);
        self.query = None;
        let departures = profile_departures(self.tt, pq);
        let mut entries = Vec::new();
        if pq.source != pq.target {
            self.profile_mode = true;
            if self.per_round.is_empty() {
                self.per_round = vec![vec![0; self.tt.trip_count()]; MAX_ROUNDS];
            }
            for r in &mut self.per_round {
                for (t, v) in r.iter_mut().enumerate() {
                    *v = self.tt.trip_len(t as TripId) as u32;
                }
            }
            for &d in &departures {
                self.front.clear();
                self.run(pq.source, pq.target, d);
                entries.extend(
                    self.front
                        .iter()
                        .filter(|f| f.0.trips > 0)
                        .map(|f| ProfileEntry { departure: d, arrival: f.0.arrival, trips: f.0.trips }),
                );
            }
            self.front.clear();
            self.profile_mode = false;
        }
        entries.sort_by_key(|e| (e.departure, e.trips));
        self.metrics.elapsed_us = start.elapsed().as_micros() as u64;
        Ok(ProfileResult { entries, departures: departures.len(), metrics: self.metrics })
    }

    fn run(&mut self, source: StopId, target: StopId, departure: Time) {
        let tt = self.tt;
        for n in 0..MAX_ROUNDS {
            self.queues[n].clear();
            self.pending[n].clear();
            self.target_queue[n].clear();
        }
        if let Some(d) = tt.walk(source, target) {
            self.improve(0, departure + d, None);
        }
        let fp = tt.footpaths();
        for (&p, &d) in fp.targets(source).iter().zip(fp.durations(source)) {
            let level = self.level_of(p);
            for &(l, i) in tt.stop_occurrences(p) {
                if i as usize + 1 >= tt.line(l).stops.len() {
                    continue;
                }
                if let Some(t) = tt.earliest_trip(l, i as usize, departure + d) {
                    self.enqueue(tt.event(t, i as usize), 1, level, NO_PARENT);
                }
            }
        }
        for n in 1..=MAX_ROUNDS {
            if self.algorithm == Algorithm::TrexOverlay {
                self.split(n);
            }
            if self.queues[n - 1].is_empty() {
                break;
            }
            self.metrics.rounds = self.metrics.rounds.max(n as u32);
            self.metrics.scanned_trips += self.queues[n - 1].len() as u64;
            self.scan_target(n);
            if n == MAX_ROUNDS {
                break;
            }
            let limit = self.best[n + 1];
            match self.algorithm {
                Algorithm::Tb | Algorithm::TrexBasic => {
                    for k in 0..self.queues[n - 1].len() {
                        let seg = self.queues[n - 1][k];
                        let mut to = seg.from;
                        while to <= seg.to && tt.arr(tt.event(seg.trip, to as usize)) < limit {
                            to += 1;
                        }
                        self.queues[n - 1][k].to = to - 1;
                    }
                    for k in 0..self.queues[n - 1].len() {
                        let seg = self.queues[n - 1][k];
                        for i in seg.from..=seg.to {
                            let e = tt.event(seg.trip, i as usize);
                            for id in self.ts.range(e) {
                                if self.algorithm == Algorithm::TrexBasic && !self.lcl_ok(e, id) {
                                    self.metrics.skipped_transfers += 1;
                                    continue;
                                }
                                self.metrics.relaxed_transfers += 1;
                                self.enqueue(self.ts.target(id), n + 1, 0, k as u32);
                            }
                        }
                    }
                }
                Algorithm::TrexOverlay => {
                    let overlays = &self.cust.expect("overlay engine has a customization").overlays;
                    for k in 0..self.queues[n - 1].len() {
                        let seg = self.queues[n - 1][k];
                        let overlay = overlays.level(seg.level);
                        // Target pruning per event, which also skips segments that start too late.
                        for i in seg.from..=seg.to {
                            let e = tt.event(seg.trip, i as usize);
                            if tt.arr(e) >= limit {
                                break;
                            }
                            for &target in overlay.targets_of(e) {
                                self.metrics.relaxed_transfers += 1;
                                self.enqueue(target, n + 1, seg.level, k as u32);
                            }
                        }
                    }
                }
            }
        }
    }

    fn scan_target(&mut self, n: usize) {
        let tt = self.tt;
        let count = if self.algorithm == Algorithm::TrexOverlay { self.target_queue[n - 1].len() } else { self.queues[n - 1].len() };
        for x in 0..count {
            let k = if self.algorithm == Algorithm::TrexOverlay { self.target_queue[n - 1][x] as usize } else { x };
            let seg = self.queues[n - 1][k];
            for i in seg.from..=seg.to {
                let e = tt.event(seg.trip, i as usize);
                let a = tt.arr(e);
                if a >= self.best[n] {
                    break;
                }
                let d = self.to_target[tt.event_stop(e) as usize];
                if d != INF && a + d < self.best[n] {
                    self.improve(n, a + d, Some(Hit { round: n as u8, seg: k as u32, exit: i }));
                }
            }
        }
    }

    fn improve(&mut self, n: usize, arrival: Time, hit: Option<Hit>) {
        for b in &mut self.best[n..] {
            *b = (*b).min(arrival);
        }
        let entry = FrontEntry { arrival, trips: n as u8 };
        match self.front.last_mut() {
            Some(last) if last.0.trips as usize == n => *last = (entry, hit),
            _ => self.front.push((entry, hit)),
        }
    }

    fn lcl_ok(&self, source_event: EventId, id: usize) -> bool {
        let part = self.part.expect("basic engine has a partition");
        lcl_test(self.ts.rank(id), part.cell(self.tt.event_stop(source_event)), self.source_cell, self.target_cell)
    }

    fn level_of(&self, p: StopId) -> u8 {
        match (self.algorithm, self.part) {
            (Algorithm::TrexOverlay, Some(part)) => {
                let c = part.cell(p);
                crate::partition::lcl(c, self.source_cell).min(crate::partition::lcl(c, self.target_cell))
            }
            _ => 0,
        }
    }

    fn reached(&self, t: TripId, round: usize) -> u32 {
        if self.profile_mode {
            self.per_round[round - 1][t as usize]
        } else {
            self.reached.get(self.tt, t)
        }
    }

    fn enqueue(&mut self, target: EventId, round: usize, level: u8, parent: u32) {
        let tt = self.tt;
        let trip = tt.event_trip(target);
        let j = tt.event_index(target) as u32;
        let r = self.reached(trip, round);
        if r <= j + 1 {
            return;
        }
        let seg = Seg { trip, entry: j, from: j + 1, to: r - 1, level, parent };
        if self.algorithm == Algorithm::TrexOverlay {
            self.pending[round - 1].push(seg);
        } else {
            self.queues[round - 1].push(seg);
        }
        if self.profile_mode {
            for m in round..=MAX_ROUNDS {
                let store = &mut self.per_round[m - 1];
                for u in trip..tt.line_end(trip) {
                    if store[u as usize] <= j + 1 {
                        break;
                    }
                    store[u as usize] = j + 1;
                }
            }
        } else {
            self.reached.mark(tt, trip, j + 1);
        }
    }

    fn split(&mut self, n: usize) {
        let tt = self.tt;
        let part = self.part.expect("overlay engine has a partition");
        let succ = &self.cust.expect("overlay engine has a customization").successors;
        let pending = std::mem::take(&mut self.pending[n - 1]);
        for seg in &pending {
            let mut start = seg.from;
            let mut reference = seg.entry;
            let mut level = seg.level;
            loop {
                let i = succ.get(tt, tt.event(seg.trip, reference as usize), level.saturating_sub(1)) as u32;
                let end = (i - 1).min(seg.to);
                if end >= start {
                    let first = tt.event_stop(tt.event(seg.trip, start as usize));
                    let k = self.queues[n - 1].len() as u32;
                    self.queues[n - 1].push(Seg { from: start, to: end, level, ..*seg });
                    if part.cell(first) == self.target_cell {
                        debug_assert_eq!(level, 0);
                        self.target_queue[n - 1].push(k);
                    }
                }
                if i > seg.to {
                    break;
                }
                start = i;
                reference = i;
                level = self.level_of(tt.event_stop(tt.event(seg.trip, i as usize)));
            }
        }
        self.pending[n - 1] = pending;
        self.pending[n - 1].clear();
    }

    /// Number of entries in the front of the last fixed-departure query.
    pub fn front_len(&self) -> usize {
        self.front.len()
    }

    /// Reconstructs the journey behind front entry `k` of the last query.
    pub fn journey(&self, k: usize) -> Result<Journey, QueryError> {
        let q = self.query.ok_or(QueryError::NoSuchEntry(k))?;
        let &(entry, hit) = self.front.get(k).ok_or(QueryError::NoSuchEntry(k))?;
        let tt = self.tt;
        let Some(hit) = hit else {
            let walk = (q.source != q.target).then(|| Walk { from: q.source, to: q.target, duration: entry.arrival - q.departure });
            return Ok(Journey { departure: q.departure, arrival: entry.arrival, initial_walk: walk, legs: Vec::new(), final_walk: None });
        };
        let mut legs = Vec::new();
        let (mut n, mut idx, mut exit) = (hit.round as usize, hit.seg as usize, hit.exit);
        loop {
            let seg = self.queues[n - 1][idx];
            legs.push(Leg::new(tt, seg.trip, seg.entry, exit));
            if n == 1 {
                break;
            }
            let parent = self.queues[n - 2][seg.parent as usize];
            let want = tt.event(seg.trip, seg.entry as usize);
            exit = self.exit_towards(&parent, want).expect("parent segment reaches its child");
            idx = seg.parent as usize;
            n -= 1;
        }
        legs.reverse();
        let first = &legs[0];
        let last = legs.last().unwrap();
        let w0 = tt.walk(q.source, first.from).expect("initial footpath");
        let w1 = tt.walk(last.to, q.target).expect("final footpath");
        Ok(Journey {
            departure: first.departure - w0,
            arrival: last.arrival + w1,
            initial_walk: (q.source != first.from).then_some(Walk { from: q.source, to: first.from, duration: w0 }),
            final_walk: (last.to != q.target).then_some(Walk { from: last.to, to: q.target, duration: w1 }),
            legs,
        })
    }

    pub fn journeys(&self) -> Vec<Journey> {
        (0..self.front.len()).filter_map(|k| self.journey(k).ok()).collect()
    }

    /// Index in `parent` of the first event, in scan order, with a relaxed transfer to `want`.
    fn exit_towards(&self, parent: &Seg, want: EventId) -> Option<u32> {
        let tt = self.tt;
        for i in parent.from..=parent.to {
            let e = tt.event(parent.trip, i as usize);
            let found = match self.algorithm {
                Algorithm::Tb => self.ts.targets_of(e).contains(&want),
                Algorithm::TrexBasic => self.ts.range(e).any(|id| self.ts.target(id) == want && self.lcl_ok(e, id)),
                Algorithm::TrexOverlay => self.cust.unwrap().overlays.level(parent.level).targets_of(e).contains(&want),
            };
            if found {
                return Some(i);
            }
        }
        None
    }
}
