use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU8, Ordering};

use super::border::collect_border_events;
use super::event_tb::EventSearch;
use super::search_and_raise;
use crate::par::Execution;
use crate::partition::{CellId, NestedPartition};
use crate::timetable::{EventChange, Timetable};
use crate::transfers::TransferSet;
use crate::{EventId, Time, TripId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    /// Recomputes every affected cell exactly.
    Thorough,
    /// Only searches IBEs inside the time window of the affected events; ranks never decrease.
    Windowed,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateReport {
    /// Cells recomputed per level.
    pub cells: Vec<usize>,
    pub searches: usize,
}

/// Updates the ranks of `new` (transfers of `tt`, the timetable after
/// `changes`) from the ranks of `old` (transfers before the change).
pub fn update_ranks(
    tt: &Timetable,
    old: &TransferSet,
    new: &mut TransferSet,
    part: &NestedPartition,
    changes: &[EventChange],
    mode: UpdateMode,
    exec: Execution,
) -> UpdateReport {
    let borders = collect_border_events(tt, part);
    let old_rank: Vec<Option<u8>> = (0..new.event_count() as EventId)
        .flat_map(|e| new.range(e).map(move |id| (e, id)))
        .map(|(e, id)| old.find(e, new.target(id)).map(|o| old.rank(o)))
        .collect();
    let ranks: Vec<AtomicU8> = old_rank.iter().map(|r| AtomicU8::new(r.unwrap_or(0))).collect();
    let sources = new.sources();

    let changed: BTreeSet<EventId> = changes.iter().map(|c| c.event).collect();
    let changed_trips: BTreeSet<TripId> = changed.iter().map(|&e| tt.event_trip(e)).collect();

    let mut report = UpdateReport::default();
    for level in 0..part.levels() {
        let mut direct = changed.clone();
        for (s, t, r) in old.iter() {
            if r >= level {
                let still = new.find(s, t).is_some_and(|id| ranks[id].load(Ordering::Relaxed) >= level);
                if !still {
                    direct.insert(s);
                    direct.insert(t);
                }
            }
        }
        for id in 0..new.len() {
            if ranks[id].load(Ordering::Relaxed) >= level && old_rank[id].is_none_or(|r| r < level) {
                direct.insert(sources[id]);
                direct.insert(new.target(id));
            }
        }
        let mut affected = direct.clone();
        for l in tt.lines() {
            for t in l.trips().skip(1) {
                let pred_changed = changed_trips.contains(&(t - 1));
                for i in 0..tt.trip_len(t) {
                    if pred_changed || direct.contains(&tt.event(t - 1, i)) {
                        affected.insert(tt.event(t, i));
                    }
                }
            }
        }
        if affected.is_empty() {
            break;
        }

        let mut windows: BTreeMap<CellId, (Time, Time)> = BTreeMap::new();
        for &e in &affected {
            let c = part.cell_at(tt.event_stop(e), level);
            let w = windows.entry(c).or_insert((Time::MAX, 0));
            w.0 = w.0.min(tt.arr(e).min(tt.dep(e)));
            w.1 = w.1.max(tt.arr(e).max(tt.dep(e)));
        }
        report.cells.push(windows.len());

        let mut in_cell: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
        if mode == UpdateMode::Thorough {
            for id in 0..new.len() {
                let c = part.cell_at(tt.event_stop(sources[id]), level);
                if windows.contains_key(&c) {
                    in_cell.entry(c).or_default().push(id);
                }
            }
        }

        for (cell, chunk) in borders.cells(level) {
            let Some(&(lo, hi)) = windows.get(&cell) else { continue };
            let ibes: Vec<EventId> = chunk.iter().map(|&(_, e)| e).collect();
            match mode {
                UpdateMode::Thorough => {
                    let ids = in_cell.get(&cell).map(Vec::as_slice).unwrap_or(&[]);
                    for &id in ids {
                        let r = ranks[id].load(Ordering::Relaxed);
                        ranks[id].store(r.min(level), Ordering::Relaxed);
                    }
                    exec.for_each_init(
                        ibes.len(),
                        || EventSearch::new(tt, new),
                        |search, k| {
                            search_and_raise(search, tt, new, &borders, level, &ranks, ibes[k]);
                        },
                    );
                    report.searches += ibes.len();
                    for &id in ids {
                        let r = ranks[id].load(Ordering::Relaxed);
                        if r > level {
                            ranks[id].store(r.max(old_rank[id].unwrap_or(0)), Ordering::Relaxed);
                        }
                    }
                }
                UpdateMode::Windowed => {
                    let mut groups: BTreeMap<(u32, usize), Vec<EventId>> = BTreeMap::new();
                    for e in ibes {
                        groups.entry((tt.trip_line(tt.event_trip(e)), tt.event_index(e))).or_default().push(e);
                    }
                    let groups: Vec<Vec<EventId>> = groups.into_values().collect();
                    let searches: Vec<usize> = exec.map_init(
                        groups.len(),
                        || EventSearch::new(tt, new),
                        |search, g| {
                            let mut count = 0;
                            for &e in groups[g].iter().rev() {
                                if tt.dep(e) > hi {
                                    continue;
                                }
                                count += 1;
                                let arrivals = search_and_raise(search, tt, new, &borders, level, &ranks, e);
                                if arrivals.iter().all(|&a| a < lo) {
                                    break;
                                }
                            }
                            count
                        },
                    );
                    report.searches += searches.iter().sum::<usize>();
                }
            }
        }
    }
    new.set_ranks(ranks.into_iter().map(AtomicU8::into_inner).collect());
    report
}
