//! Transfer precomputation: generation with same-line and earlier-trip
//! suppression, then U-turn and latest-exit pruning.

use std::ops::Range;

use crate::par::Execution;
use crate::timetable::Timetable;
use crate::{EventId, Time, TripId};

/// Event-to-event transfers grouped into one run per source event.
/// Runs are sorted by target event id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransferSet {
    pub(crate) offsets: Vec<u32>,
    pub(crate) targets: Vec<EventId>,
    pub(crate) ranks: Vec<u8>,
}

impl TransferSet {
    /// Builds a set from per-event target lists (one list per event, in event order).
    pub fn from_runs(runs: Vec<Vec<EventId>>) -> Self {
        let mut ts = TransferSet { offsets: Vec::with_capacity(runs.len() + 1), targets: Vec::new(), ranks: Vec::new() };
        ts.offsets.push(0);
        for mut run in runs {
            run.sort_unstable();
            run.dedup();
            ts.targets.extend(run);
            ts.offsets.push(ts.targets.len() as u32);
        }
        ts.ranks = vec![0; ts.targets.len()];
        ts
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
    pub fn event_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
    /// Transfer ids leaving event `e`.
    pub fn range(&self, e: EventId) -> Range<usize> {
        self.offsets[e as usize] as usize..self.offsets[e as usize + 1] as usize
    }
    pub fn targets_of(&self, e: EventId) -> &[EventId] {
        &self.targets[self.range(e)]
    }
    pub fn target(&self, id: usize) -> EventId {
        self.targets[id]
    }
    pub fn rank(&self, id: usize) -> u8 {
        self.ranks[id]
    }
    pub fn ranks(&self) -> &[u8] {
        &self.ranks
    }
    pub fn set_ranks(&mut self, ranks: Vec<u8>) {
        assert_eq!(ranks.len(), self.targets.len());
        self.ranks = ranks;
    }
    /// Id of the transfer `source → target`, if present.
    pub fn find(&self, source: EventId, target: EventId) -> Option<usize> {
        let r = self.range(source);
        self.targets[r.clone()].binary_search(&target).ok().map(|i| r.start + i)
    }
    pub fn contains(&self, source: EventId, target: EventId) -> bool {
        self.find(source, target).is_some()
    }
    /// `(source, target, rank)` for every transfer in id order.
    pub fn iter(&self) -> impl Iterator<Item = (EventId, EventId, u8)> + '_ {
        (0..self.event_count() as EventId)
            .flat_map(move |e| self.range(e).map(move |id| (e, self.targets[id], self.ranks[id])))
    }
    /// Source event of every transfer, indexed by transfer id.
    pub fn sources(&self) -> Vec<EventId> {
        let mut out = Vec::with_capacity(self.len());
        for e in 0..self.event_count() {
            out.extend(std::iter::repeat(e as EventId).take(self.range(e as EventId).len()));
        }
        out
    }
    /// Keeps transfers whose id satisfies `keep`; ranks are carried along.
    pub fn filtered(&self, keep: &[bool]) -> TransferSet {
        let mut ts = TransferSet { offsets: vec![0], targets: Vec::new(), ranks: Vec::new() };
        for e in 0..self.event_count() as EventId {
            for id in self.range(e) {
                if keep[id] {
                    ts.targets.push(self.targets[id]);
                    ts.ranks.push(self.ranks[id]);
                }
            }
            ts.offsets.push(ts.targets.len() as u32);
        }
        ts
    }
}

/// Generation followed by U-turn and latest-exit pruning.
pub fn build_transfers(tt: &Timetable, exec: Execution) -> TransferSet {
    let ts = generate_transfers_with(tt, exec);
    let ts = prune_uturn_with(tt, &ts, exec);
    prune_latest_exit_with(tt, &ts, exec)
}

pub fn generate_transfers(tt: &Timetable) -> TransferSet {
    generate_transfers_with(tt, Execution::default())
}

pub fn generate_transfers_with(tt: &Timetable, exec: Execution) -> TransferSet {
    let per_trip = exec.map_init(tt.trip_count(), || GenScratch::new(tt), |s, t| s.trip(tt, t as TripId));
    TransferSet::from_runs(per_trip.into_iter().flatten().collect())
}

struct GenScratch {
    line_offset: Vec<usize>,
    bound: Vec<u32>,
    line_stamp: Vec<u32>,
    stamp: u32,
    candidates: Vec<(u32, u32, TripId)>,
}

impl GenScratch {
    fn new(tt: &Timetable) -> Self {
        let mut line_offset = Vec::with_capacity(tt.line_count() + 1);
        line_offset.push(0);
        for line in tt.lines() {
            line_offset.push(line_offset.last().unwrap() + line.stops.len());
        }
        GenScratch {
            bound: vec![u32::MAX; *line_offset.last().unwrap()],
            line_stamp: vec![0; tt.line_count()],
            line_offset,
            stamp: 0,
            candidates: Vec::new(),
        }
    }

    /// Target runs for every event of `ta`, in event order.
    fn trip(&mut self, tt: &Timetable, ta: TripId) -> Vec<Vec<EventId>> {
        self.stamp += 1;
        let len = tt.trip_len(ta);
        let own_line = tt.trip_line(ta);
        let mut runs = vec![Vec::new(); len];
        for j in (1..len).rev() {
            let e = tt.event(ta, j);
            let arr = tt.arr(e);
            self.candidates.clear();
            for (q, fp) in tt.footpaths().from(tt.event_stop(e)) {
                for &(l, i) in tt.stop_occurrences(q) {
                    if i as usize + 1 >= tt.line(l).stops.len() {
                        continue;
                    }
                    let Some(tb) = tt.earliest_trip(l, i as usize, arr + fp) else { continue };
                    if l == own_line && tb >= ta && j <= i as usize {
                        continue;
                    }
                    self.candidates.push((l, i, tb));
                }
            }
            self.candidates.sort_unstable();
            for &(l, i, tb) in &self.candidates {
                let line = tt.line(l);
                let pos = tb - line.first_trip;
                let base = self.line_offset[l as usize];
                if self.line_stamp[l as usize] != self.stamp {
                    self.line_stamp[l as usize] = self.stamp;
                    self.bound[base..base + line.stops.len()].fill(u32::MAX);
                }
                let bound = &mut self.bound[base..base + line.stops.len()];
                if pos >= bound[i as usize] {
                    continue;
                }
                runs[j].push(tt.event(tb, i as usize));
                for b in &mut bound[i as usize..] {
                    if *b <= pos {
                        break;
                    }
                    *b = pos;
                }
            }
        }
        runs
    }
}

pub fn prune_uturn(tt: &Timetable, ts: &TransferSet) -> TransferSet {
    prune_uturn_with(tt, ts, Execution::default())
}

/// Drops `⟨T_a[j],T_b[i]⟩` when `p(T_a[j-1]) = p(T_b[i+1])` and
/// `⟨T_a[j-1],T_b[i+1]⟩` is in the input set.
pub fn prune_uturn_with(tt: &Timetable, ts: &TransferSet, exec: Execution) -> TransferSet {
    let per_trip = exec.map(tt.trip_count(), |t| {
        let events = tt.trip_events(t as TripId);
        let ids = ts.offsets[events.start as usize] as usize..ts.offsets[events.end as usize] as usize;
        let mut keep = vec![true; ids.len()];
        for e in events.clone() {
            if e == events.start {
                continue;
            }
            for id in ts.range(e) {
                let target = ts.target(id);
                let tb = tt.event_trip(target);
                if target + 1 >= tt.trip_events(tb).end {
                    continue;
                }
                let (prev, next) = (e - 1, target + 1);
                if tt.event_stop(prev) == tt.event_stop(next) && ts.contains(prev, next) {
                    keep[id - ids.start] = false;
                }
            }
        }
        keep
    });
    ts.filtered(&per_trip.concat())
}

pub fn prune_latest_exit(tt: &Timetable, ts: &TransferSet) -> TransferSet {
    prune_latest_exit_with(tt, ts, Execution::default())
}

/// Backward sweep per trip keeping the best arrival at every stop reachable
/// from later exits (staying seated or via an already kept transfer). A transfer
/// survives only if it strictly improves the arrival at some stop of its target
/// trip after the entered event.
pub fn prune_latest_exit_with(tt: &Timetable, ts: &TransferSet, exec: Execution) -> TransferSet {
    let per_trip = exec.map_init(
        tt.trip_count(),
        || (vec![Time::MAX; tt.stop_count()], Vec::new()),
        |(best, touched): &mut (Vec<Time>, Vec<u32>), t| {
            let events = tt.trip_events(t as TripId);
            let ids = ts.offsets[events.start as usize] as usize..ts.offsets[events.end as usize] as usize;
            let mut keep = vec![false; ids.len()];
            let relax = |best: &mut Vec<Time>, touched: &mut Vec<u32>, e: EventId| {
                let a = tt.arr(e);
                for (q, fp) in tt.footpaths().from(tt.event_stop(e)) {
                    let slot = &mut best[q as usize];
                    if a + fp < *slot {
                        if *slot == Time::MAX {
                            touched.push(q);
                        }
                        *slot = a + fp;
                    }
                }
            };
            for e in events.clone().rev() {
                if e == events.start {
                    break;
                }
                relax(best, touched, e);
                for id in ts.range(e) {
                    let target = ts.target(id);
                    let end = tt.trip_events(tt.event_trip(target)).end;
                    keep[id - ids.start] = (target + 1..end).any(|x| tt.arr(x) < best[tt.event_stop(x) as usize]);
                }
                for id in ts.range(e) {
                    if keep[id - ids.start] {
                        let target = ts.target(id);
                        for x in target + 1..tt.trip_events(tt.event_trip(target)).end {
                            relax(best, touched, x);
                        }
                    }
                }
            }
            for q in touched.drain(..) {
                best[q as usize] = Time::MAX;
            }
            keep
        },
    );
    ts.filtered(&per_trip.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refkit::fixtures;
    use crate::refkit::{gen_synthetic, SyntheticSpec};
    use crate::timetable::{TimetableBuilder, DAY};

    #[test]
    fn single_line_has_no_transfers() {
        let mut b = TimetableBuilder::new(DAY);
        let s: Vec<_> = (0..3).map(|i| b.add_stop(format!("{i}"), None, None)).collect();
        for k in 0..4 {
            let t = k * 100;
            b.add_trip(format!("{k}"), &[(s[0], t, t), (s[1], t + 10, t + 10), (s[2], t + 20, t + 20)]);
        }
        let tt = b.build().unwrap();
        assert!(generate_transfers(&tt).is_empty());
    }

    #[test]
    fn conflict_fixture_generation_and_pruning() {
        let f = fixtures::conflict_example(true);
        let tt = &f.tt;
        let ts = generate_transfers(tt);
        let pairs: Vec<_> = ts.iter().map(|(a, b, _)| (a, b)).collect();
        let ta1 = tt.event(f.ta, 1);
        let ta_prime1 = tt.event(f.ta_prime, 1);
        let ta_prime2 = tt.event(f.ta_prime, 2);
        let tb0 = tt.event(f.tb, 0);
        let tc0 = tt.event(f.tc, 0);
        assert_eq!(pairs, vec![(ta_prime1, tb0), (ta_prime2, tc0), (ta1, tb0)]);
        let pruned = prune_latest_exit(tt, &prune_uturn(tt, &ts));
        let pairs: Vec<_> = pruned.iter().map(|(a, b, _)| (a, b)).collect();
        assert_eq!(pairs, vec![(ta_prime2, tc0), (ta1, tb0)]);
    }

    #[test]
    fn conflict_fixture_without_footpath_has_no_transfer_to_tc() {
        let f = fixtures::conflict_example(false);
        let ts = generate_transfers(&f.tt);
        assert!(ts.targets_of(f.tt.event(f.ta_prime, 2)).is_empty());
    }

    #[test]
    fn uturn_instance_is_removed() {
        // X: D -> A -> B -> C, Y: E -> B -> A -> F. Riding X to B and Y back to A
        // is dominated by leaving X at A, provided that transfer is present.
        let mut b = TimetableBuilder::new(DAY);
        let [a, bb, c, d, e, f] = ["A", "B", "C", "D", "E", "F"].map(|n| b.add_stop(n, None, None));
        b.add_trip("X", &[(d, 0, 0), (a, 10, 10), (bb, 20, 20), (c, 30, 30)]);
        b.add_trip("Y", &[(e, 0, 0), (bb, 25, 25), (a, 35, 35), (f, 45, 45)]);
        let tt = b.build().unwrap();
        let x = (0..2).find(|&t| tt.trip_name(t) == "X").unwrap();
        let y = 1 - x;
        let generated = generate_transfers(&tt);
        assert!(generated.contains(tt.event(x, 2), tt.event(y, 1)));
        // Generation suppresses the direct transfer at A, so the U-turn stays.
        assert!(!generated.contains(tt.event(x, 1), tt.event(y, 2)));
        assert_eq!(prune_uturn(&tt, &generated), generated);

        let mut runs = vec![Vec::new(); tt.event_count()];
        runs[tt.event(x, 2) as usize].push(tt.event(y, 1));
        runs[tt.event(x, 1) as usize].push(tt.event(y, 2));
        let raw = TransferSet::from_runs(runs);
        let pruned = prune_uturn(&tt, &raw);
        assert!(!pruned.contains(tt.event(x, 2), tt.event(y, 1)));
        assert!(pruned.contains(tt.event(x, 1), tt.event(y, 2)));
        assert_eq!(pruned.len(), 1);
    }

    #[test]
    fn uturn_without_shared_stop_changes_nothing() {
        let f = fixtures::conflict_example(true);
        let ts = generate_transfers(&f.tt);
        assert_eq!(prune_uturn(&f.tt, &ts), ts);
    }

    #[test]
    fn lone_transfer_survives_latest_exit() {
        let mut b = TimetableBuilder::new(DAY);
        let [a, m, c] = ["a", "m", "c"].map(|n| b.add_stop(n, None, None));
        b.add_trip("in", &[(a, 0, 0), (m, 10, 10)]);
        b.add_trip("out", &[(m, 20, 20), (c, 30, 30)]);
        let tt = b.build().unwrap();
        let ts = build_transfers(&tt, Execution::Sequential);
        assert_eq!(ts.len(), 1);
    }

    fn small_instances() -> impl Iterator<Item = Timetable> {
        (0..12).map(|seed| {
            gen_synthetic(&SyntheticSpec { stops: 40, lines: 10, trips_per_line: 6, clusters: 3, seed, ..SyntheticSpec::default() })
                .unwrap()
        })
    }

    #[test]
    fn generated_transfers_are_feasible_and_respect_same_line_rule() {
        for tt in small_instances() {
            let ts = generate_transfers(&tt);
            for (src, dst, _) in ts.iter() {
                let (ta, tb) = (tt.event_trip(src), tt.event_trip(dst));
                let (j, i) = (tt.event_index(src), tt.event_index(dst));
                let fp = tt.walk(tt.event_stop(src), tt.event_stop(dst)).expect("footpath");
                assert!(tt.arr(src) + fp <= tt.dep(dst));
                assert!(j >= 1 && i + 1 < tt.trip_len(tb));
                assert!(!(tt.trip_line(ta) == tt.trip_line(tb) && ta <= tb && j <= i));
            }
        }
    }

    #[test]
    fn pruning_is_contracting_and_idempotent() {
        for tt in small_instances() {
            let ts = generate_transfers(&tt);
            let u = prune_uturn(&tt, &ts);
            assert!(u.iter().all(|(a, b, _)| ts.contains(a, b)));
            assert_eq!(prune_uturn(&tt, &u), u);
            let l = prune_latest_exit(&tt, &u);
            assert!(l.iter().all(|(a, b, _)| u.contains(a, b)));
            assert_eq!(prune_latest_exit(&tt, &l), l);
        }
    }

    #[test]
    fn execution_policies_agree() {
        for tt in small_instances() {
            assert_eq!(build_transfers(&tt, Execution::Sequential), build_transfers(&tt, Execution::Parallel));
        }
    }
}
