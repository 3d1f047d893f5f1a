use crate::partition::{lcl, CellId, NestedPartition};
use crate::timetable::Timetable;
use crate::{EventId, TripId};

/// Incoming border events per level and cell, plus the crossing level of
/// every consecutive event pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorderEvents {
    crossing: Vec<u8>,
    ibes: Vec<Vec<(CellId, EventId)>>,
}

impl BorderEvents {
    /// `lcl(p(T[i]), p(T[i+1]))`, or 0 for the last event of a trip.
    pub fn crossing(&self, e: EventId) -> u8 {
        self.crossing[e as usize]
    }

    /// `T[i]` lies in some level-`level` cell that `T[i+1]` does not.
    pub fn is_obe(&self, e: EventId, level: u8) -> bool {
        self.crossing[e as usize] > level
    }

    /// `(cell of T[i+1], T[i])` for every IBE on `level`, sorted by cell then event.
    pub fn ibes(&self, level: u8) -> &[(CellId, EventId)] {
        &self.ibes[level as usize]
    }

    pub fn levels(&self) -> u8 {
        self.ibes.len() as u8
    }

    /// IBEs of `level` grouped by cell.
    pub fn cells(&self, level: u8) -> impl Iterator<Item = (CellId, &[(CellId, EventId)])> + '_ {
        self.ibes(level).chunk_by(|a, b| a.0 == b.0).map(|chunk| (chunk[0].0, chunk))
    }
}

pub fn collect_border_events(tt: &Timetable, part: &NestedPartition) -> BorderEvents {
    let mut crossing = vec![0u8; tt.event_count()];
    let mut level0 = Vec::new();
    for t in 0..tt.trip_count() as TripId {
        let events = tt.trip_events(t);
        for e in events.start..events.end - 1 {
            let c = lcl(part.cell(tt.event_stop(e)), part.cell(tt.event_stop(e + 1)));
            crossing[e as usize] = c;
            if c > 0 {
                level0.push((part.cell(tt.event_stop(e + 1)), e));
            }
        }
    }
    let mut ibes = Vec::with_capacity(part.levels() as usize);
    let mut current = level0;
    for level in 0..part.levels() {
        if level > 0 {
            current = current
                .iter()
                .filter(|&&(_, e)| crossing[e as usize] > level)
                .map(|&(_, e)| (part.cell_at(tt.event_stop(e + 1), level), e))
                .collect();
        }
        let mut sorted = current.clone();
        sorted.sort_unstable();
        ibes.push(sorted);
    }
    BorderEvents { crossing, ibes }
}
