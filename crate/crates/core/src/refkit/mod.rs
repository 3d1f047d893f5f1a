//! Synthetic instances and brute-force oracles.

pub mod fixtures;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::customize::{build_customization, customize_with, Customization};
use crate::par::Execution;
use crate::partition::{build_layout_graph, lcl, nested_bipartition_with, NestedPartition};
use crate::query::{FrontEntry, ProfileEntry, ProfileQuery, Query};
use crate::timetable::{Timetable, TimetableBuilder, TimetableError, DAY, MAX_PERIOD};
use crate::transfers::{build_transfers, TransferSet};
use crate::{EventId, StopId, Time, TripId, MAX_ROUNDS};

/// Parameters of a clustered random network.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub stops: usize,
    pub lines: usize,
    pub trips_per_line: usize,
    pub clusters: usize,
    /// Share of lines that connect two clusters.
    pub inter_cluster_fraction: f64,
    /// Raw footpaths per stop, before closure.
    pub footpath_density: f64,
    /// Span of first departures, in seconds.
    pub horizon: Time,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            stops: 120,
            lines: 30,
            trips_per_line: 8,
            clusters: 4,
            inter_cluster_fraction: 0.15,
            footpath_density: 0.4,
            horizon: 4 * 3600,
            seed: 1,
        }
    }
}

const SERVICE_START: Time = 6 * 3600;

/// Clustered random network: dense local lines inside clusters and a few
/// lines between clusters. Odd lines run the previous line in reverse.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Timetable, TimetableError> {
    if spec.stops == 0 {
        return Err(TimetableError::Unsupported("synthetic spec without stops".into()));
    }
    if spec.horizon > MAX_PERIOD - SERVICE_START - DAY / 2 {
        return Err(TimetableError::PeriodTooLong(spec.horizon as u64));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.stops;
    let k = spec.clusters.clamp(1, n);
    let cluster_of = |p: usize| p * k / n;
    let members: Vec<Vec<StopId>> =
        (0..k).map(|c| (0..n).filter(|&p| cluster_of(p) == c).map(|p| p as StopId).collect()).collect();

    let period = if SERVICE_START + spec.horizon + DAY / 2 <= DAY { DAY } else { MAX_PERIOD };
    let mut b = TimetableBuilder::new(period);
    let centers: Vec<(f64, f64)> = (0..k).map(|_| (48.0 + rng.gen::<f64>(), 2.0 + rng.gen::<f64>() * 1.5)).collect();
    for p in 0..n {
        let (lat, lon) = centers[cluster_of(p)];
        let lat = lat + rng.gen_range(-0.02..0.02);
        let lon = lon + rng.gen_range(-0.03..0.03);
        b.add_stop(format!("S{p}"), Some(lat), Some(lon));
    }

    let footpaths = (spec.footpath_density * n as f64).round() as usize;
    for _ in 0..footpaths {
        let c = &members[rng.gen_range(0..k)];
        if c.len() < 2 {
            continue;
        }
        let p = *c.choose(&mut rng).unwrap();
        let q = *c.choose(&mut rng).unwrap();
        if p != q {
            b.add_footpath(p, q, rng.gen_range(60..=300));
        }
    }

    // Local lines first walk a shuffled tour of their cluster, consecutive
    // lines sharing a stop, so every stop is served once there are enough lines.
    let mut tours: Vec<Vec<StopId>> = members
        .iter()
        .map(|c| {
            let mut t = c.clone();
            t.shuffle(&mut rng);
            t
        })
        .collect();
    let mut previous: Option<Vec<StopId>> = None;
    for l in 0..spec.lines {
        if n < 2 {
            break;
        }
        let stops = match previous.take() {
            Some(mut prev) if l % 2 == 1 => {
                prev.reverse();
                prev
            }
            _ => {
                let len = rng.gen_range(3..=8usize);
                // The first k-1 independent lines chain the clusters together.
                let chain = l / 2 + 1 < k;
                let a = if chain { l / 2 } else { rng.gen_range(0..k) };
                let inter = k > 1 && (chain || rng.gen_bool(spec.inter_cluster_fraction.clamp(0.0, 1.0)));
                let mut stops: Vec<StopId> = if inter {
                    let mut b_cluster = if chain { a } else { rng.gen_range(0..k - 1) };
                    if b_cluster >= a {
                        b_cluster += 1;
                    }
                    let half = len.div_ceil(2);
                    let mut s: Vec<StopId> = members[a].choose_multiple(&mut rng, half).copied().collect();
                    s.extend(members[b_cluster].choose_multiple(&mut rng, len - half));
                    s
                } else {
                    let a = (0..k).map(|d| (a + d) % k).find(|&c| tours[c].len() >= 2).unwrap_or(a);
                    let tour = &mut tours[a];
                    if tour.len() >= 2 {
                        let take = len.min(tour.len());
                        let s: Vec<StopId> = tour[..take].to_vec();
                        tour.drain(..take - 1);
                        if tour.len() < 2 {
                            tour.clear();
                        }
                        s
                    } else {
                        members[a].choose_multiple(&mut rng, len).copied().collect()
                    }
                };
                if stops.len() < 2 {
                    let all: Vec<StopId> = (0..n as StopId).collect();
                    stops = all.choose_multiple(&mut rng, len.min(n)).copied().collect();
                }
                stops
            }
        };
        previous = Some(stops.clone());

        let mut offsets = Vec::with_capacity(stops.len());
        let mut t = 0;
        for (i, &p) in stops.iter().enumerate() {
            if i > 0 {
                let cross = cluster_of(stops[i - 1] as usize) != cluster_of(p as usize);
                t += if cross { rng.gen_range(600..=1800) } else { rng.gen_range(120..=600) };
            }
            let dwell = if i == 0 || i + 1 == stops.len() { 0 } else { rng.gen_range(0..=30) };
            offsets.push((t, t + dwell));
            t += dwell;
        }
        let trips = spec.trips_per_line.max(1);
        let headway = (spec.horizon / trips as Time).max(60);
        let first = SERVICE_START + rng.gen_range(0..headway);
        for j in 0..trips {
            let start = first + j as Time * headway;
            let events: Vec<_> = stops.iter().zip(&offsets).map(|(&p, &(a, d))| (p, start + a, start + d)).collect();
            b.add_trip(format!("L{l}.{j}"), &events);
        }
    }
    b.build()
}

/// A fully preprocessed instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub tt: Timetable,
    pub ts: TransferSet,
    pub part: NestedPartition,
    pub cust: Customization,
}

/// Runs transfer generation, partitioning and customization on `tt`.
pub fn build_instance(tt: Timetable, levels: u8, epsilon: f64, seed: u64, exec: Execution) -> Instance {
    let mut ts = build_transfers(&tt, exec);
    let part = nested_bipartition_with(&build_layout_graph(&tt), levels, epsilon, seed, exec).expect("levels within range");
    customize_with(&tt, &mut ts, &part, exec);
    let cust = build_customization(&tt, &ts, &part).expect("synthetic trips are short");
    Instance { tt, ts, part, cust }
}

const INF: Time = Time::MAX;

fn add(a: Time, b: Time) -> Time {
    a.saturating_add(b)
}

/// Best arrival per stop after `n` trips, for `n = 0..=max_rounds`.
fn round_labels(tt: &Timetable, source: StopId, departure: Time, max_rounds: usize) -> Vec<Vec<Time>> {
    let n = tt.stop_count();
    let mut walk0 = vec![INF; n];
    for (&q, &d) in tt.footpaths().targets(source).iter().zip(tt.footpaths().durations(source)) {
        walk0[q as usize] = add(departure, d);
    }
    // exits[n][q]: best arrival at q by alighting, using at most n trips.
    let mut exits = vec![vec![INF; n]];
    let mut ready = walk0.clone();
    for _ in 1..=max_rounds {
        let mut exit = exits.last().unwrap().clone();
        for (l, line) in tt.lines().iter().enumerate() {
            let mut current: Option<TripId> = None;
            for (i, &p) in line.stops.iter().enumerate() {
                if let Some(t) = current {
                    let a = tt.arr(tt.event(t, i));
                    if a < exit[p as usize] {
                        exit[p as usize] = a;
                    }
                }
                if i + 1 < line.stops.len() && ready[p as usize] != INF {
                    if let Some(t) = tt.earliest_trip(l as u32, i, ready[p as usize]) {
                        current = Some(current.map_or(t, |c| c.min(t)));
                    }
                }
            }
        }
        let mut next_ready = walk0.clone();
        for q in 0..n {
            if exit[q] == INF {
                continue;
            }
            let fp = tt.footpaths();
            for (&r, &d) in fp.targets(q as StopId).iter().zip(fp.durations(q as StopId)) {
                let v = add(exit[q], d);
                if v < next_ready[r as usize] {
                    next_ready[r as usize] = v;
                }
            }
        }
        ready = next_ready;
        exits.push(exit);
    }
    let mut labels = vec![walk0];
    labels.extend(exits.into_iter().skip(1));
    labels
}

/// Exact Pareto front of `(arrival, trips)` over all feasible journeys with at
/// most `max_rounds` trips, by a round-based dynamic program that ignores the
/// transfer set entirely.
pub fn oracle_front(tt: &Timetable, q: &Query, max_rounds: usize) -> Vec<FrontEntry> {
    if q.source == q.target {
        return vec![FrontEntry { arrival: q.departure, trips: 0 }];
    }
    let labels = round_labels(tt, q.source, q.departure, max_rounds);
    let mut front = Vec::new();
    let mut best = INF;
    for (n, label) in labels.iter().enumerate() {
        let a = if n == 0 {
            label[q.target as usize]
        } else {
            (0..tt.stop_count())
                .filter(|&p| label[p] != INF)
                .filter_map(|p| tt.walk(p as StopId, q.target).map(|d| add(label[p], d)))
                .min()
                .unwrap_or(INF)
        };
        if a < best {
            best = a;
            front.push(FrontEntry { arrival: a, trips: n as u8 });
        }
    }
    front
}

/// Candidate departure times at the source within `[start, end]`, descending.
pub fn profile_departures(tt: &Timetable, pq: &ProfileQuery) -> Vec<Time> {
    let mut out = BTreeSet::new();
    let fp = tt.footpaths();
    for (&p, &d) in fp.targets(pq.source).iter().zip(fp.durations(pq.source)) {
        for &(l, i) in tt.stop_occurrences(p) {
            let line = tt.line(l);
            if i as usize + 1 >= line.stops.len() {
                continue;
            }
            for t in line.trips() {
                let dep = tt.dep(tt.event(t, i as usize));
                if dep >= d && (pq.start..=pq.end).contains(&(dep - d)) {
                    out.insert(dep - d);
                }
            }
        }
    }
    out.into_iter().rev().collect()
}

/// Union of the fixed-departure oracle fronts over all candidate departures,
/// minus entries dominated by a later departure. Walking-only entries take
/// part in domination but are not reported.
pub fn oracle_profile(tt: &Timetable, pq: &ProfileQuery) -> Vec<ProfileEntry> {
    let mut kept: Vec<ProfileEntry> = Vec::new();
    let mut best = [INF; MAX_ROUNDS + 1];
    for departure in profile_departures(tt, pq) {
        let front = oracle_front(tt, &Query { source: pq.source, target: pq.target, departure }, MAX_ROUNDS);
        let mut improved = Vec::new();
        for e in &front {
            if e.arrival < best[e.trips as usize] {
                improved.push(*e);
            }
        }
        for e in &improved {
            for b in &mut best[e.trips as usize..] {
                *b = (*b).min(e.arrival);
            }
            if e.trips > 0 {
                kept.push(ProfileEntry { departure, arrival: e.arrival, trips: e.trips });
            }
        }
    }
    kept.sort_by_key(|e| (e.departure, e.trips));
    kept
}

/// Minimal trip count for every OBE reachable from `source` inside its level-`level`
/// cell using transfers of rank at least `min_rank`, by breadth-first search
/// over boardings without reached-index pruning.
pub fn oracle_cell_traversal(
    tt: &Timetable,
    ts: &TransferSet,
    part: &NestedPartition,
    level: u8,
    source: EventId,
    min_rank: u8,
) -> BTreeMap<EventId, u8> {
    let leaves = |e: EventId| {
        let t = tt.event_trip(e);
        tt.event_index(e) + 1 < tt.trip_len(t) && lcl(part.cell(tt.event_stop(e)), part.cell(tt.event_stop(e + 1))) > level
    };
    let mut found: BTreeMap<EventId, u8> = BTreeMap::new();
    let mut boarded: BTreeSet<EventId> = BTreeSet::new();
    let mut queue: VecDeque<(EventId, u8)> = VecDeque::new();
    boarded.insert(source);
    queue.push_back((source, 1));
    while let Some((entry, trips)) = queue.pop_front() {
        let t = tt.event_trip(entry);
        let end = tt.trip_events(t).end;
        for e in entry + 1..end {
            if leaves(e) {
                keep_min(&mut found, e, trips);
                if (trips as usize) < MAX_ROUNDS {
                    relax(ts, e, trips, min_rank, &leaves, &mut boarded, &mut found, &mut queue);
                }
                break;
            }
            if (trips as usize) < MAX_ROUNDS {
                relax(ts, e, trips, min_rank, &leaves, &mut boarded, &mut found, &mut queue);
            }
        }
    }
    found
}

fn keep_min(found: &mut BTreeMap<EventId, u8>, e: EventId, trips: u8) {
    let v = found.entry(e).or_insert(trips);
    *v = (*v).min(trips);
}

fn relax(
    ts: &TransferSet,
    e: EventId,
    trips: u8,
    min_rank: u8,
    leaves: &dyn Fn(EventId) -> bool,
    boarded: &mut BTreeSet<EventId>,
    found: &mut BTreeMap<EventId, u8>,
    queue: &mut VecDeque<(EventId, u8)>,
) {
    for id in ts.range(e) {
        if ts.rank(id) < min_rank {
            continue;
        }
        let target = ts.target(id);
        if !boarded.insert(target) {
            continue;
        }
        if leaves(target) {
            keep_min(found, target, trips + 1);
        } else {
            queue.push_back((target, trips + 1));
        }
    }
}

#[cfg(test)]
mod tests;
