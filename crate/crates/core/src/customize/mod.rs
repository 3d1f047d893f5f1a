//! Customization: transfer ranks, overlays and successor tables.

mod border;
mod event_tb;
mod overlay;
mod reached;
mod successor;
mod update;

pub use border::{collect_border_events, BorderEvents};
pub use event_tb::{EventSearch, ObeHit, Segment, NO_PARENT};
pub use overlay::{build_overlays, Overlay, TransferOverlays};
pub use reached::ReachedIndexStore;
pub use successor::{build_successor_table, SuccessorTable, MAX_TRIP_LEN};
pub use update::{update_ranks, UpdateMode, UpdateReport};


use std::sync::atomic::{AtomicU8, Ordering};

use crate::par::Execution;
use crate::partition::NestedPartition;
use crate::timetable::Timetable;
use crate::transfers::TransferSet;
use crate::{EventId, TripId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CustomizeError {
    #[error("trip {trip} has {len} events, at most {} are supported by the successor table", MAX_TRIP_LEN)]
    TripTooLong { trip: TripId, len: usize },
    #[error("partition has {partition} levels but ranks were computed for {ranks}")]
    LevelMismatch { partition: u8, ranks: u8 },
}

/// Everything the overlay engine needs besides the timetable and ranked transfers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Customization {
    pub overlays: TransferOverlays,
    pub successors: SuccessorTable,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CustomizeReport {
    /// Event-TB searches per level.
    pub searches: Vec<usize>,
    /// Transfers with rank at least `ℓ` for `ℓ = 0..=K`.
    pub overlay_sizes: Vec<usize>,
}

/// Computes transfer ranks from scratch and stores them in `ts`.
pub fn customize(tt: &Timetable, ts: &mut TransferSet, part: &NestedPartition) -> CustomizeReport {
    customize_with(tt, ts, part, Execution::default())
}

pub fn customize_with(tt: &Timetable, ts: &mut TransferSet, part: &NestedPartition, exec: Execution) -> CustomizeReport {
    let borders = collect_border_events(tt, part);
    let ranks: Vec<AtomicU8> = (0..ts.len()).map(|_| AtomicU8::new(0)).collect();
    let mut report = CustomizeReport::default();
    for level in 0..part.levels() {
        let ibes: Vec<EventId> = borders.ibes(level).iter().map(|&(_, e)| e).collect();
        run_searches(tt, ts, &borders, level, &ranks, &ibes, exec);
        report.searches.push(ibes.len());
    }
    ts.set_ranks(ranks.into_iter().map(AtomicU8::into_inner).collect());
    report.overlay_sizes = (0..=part.levels()).map(|l| ts.ranks().iter().filter(|&&r| r >= l).count()).collect();
    report
}

pub fn build_customization(tt: &Timetable, ts: &TransferSet, part: &NestedPartition) -> Result<Customization, CustomizeError> {
    if let Some(&max) = ts.ranks().iter().max() {
        if max > part.levels() {
            return Err(CustomizeError::LevelMismatch { partition: part.levels(), ranks: max });
        }
    }
    Ok(Customization { overlays: build_overlays(ts, part.levels()), successors: build_successor_table(tt, part)? })
}

fn run_searches(
    tt: &Timetable,
    ts: &TransferSet,
    borders: &BorderEvents,
    level: u8,
    ranks: &[AtomicU8],
    ibes: &[EventId],
    exec: Execution,
) {
    exec.for_each_init(
        ibes.len(),
        || EventSearch::new(tt, ts),
        |search, k| {
            search_and_raise(search, tt, ts, borders, level, ranks, ibes[k]);
        },
    );
}

/// One Event-TB search plus rank raising; returns the arrival times of all hits.
pub(crate) fn search_and_raise(
    search: &mut EventSearch,
    tt: &Timetable,
    ts: &TransferSet,
    borders: &BorderEvents,
    level: u8,
    ranks: &[AtomicU8],
    ibe: EventId,
) -> Vec<crate::Time> {
    let allowed = |id: usize| ranks[id].load(Ordering::Relaxed) >= level;
    search.run(tt, ts, ibe, Some((borders, level)), allowed);
    let mut arrivals = Vec::with_capacity(search.hits().len());
    for k in 0..search.hits().len() {
        let hit = search.hits()[k];
        arrivals.push(tt.arr(hit.event));
        search.unpack(tt, ts, hit, allowed, |id| {
            ranks[id].fetch_max(level + 1, Ordering::Relaxed);
        });
    }
    arrivals
}
