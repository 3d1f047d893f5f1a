use super::CustomizeError;
use crate::partition::NestedPartition;
use crate::timetable::Timetable;
use crate::{EventId, TripId};

pub const MAX_TRIP_LEN: usize = 254;

/// `succ(T[i], ℓ)`: first index `j ≥ i` whose level-ℓ cell differs from that of
/// `T[i]`, or `|T|` if none (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessorTable {
    pub(crate) levels: u8,
    pub(crate) succ: Vec<u8>,
}

impl SuccessorTable {
    pub fn levels(&self) -> u8 {
        self.levels
    }

    pub fn get(&self, tt: &Timetable, e: EventId, level: u8) -> usize {
        if level >= self.levels {
            return tt.trip_len(tt.event_trip(e));
        }
        self.succ[e as usize * self.levels as usize + level as usize] as usize
    }
}

pub fn build_successor_table(tt: &Timetable, part: &NestedPartition) -> Result<SuccessorTable, CustomizeError> {
    let levels = part.levels();
    let mut succ = vec![0u8; tt.event_count() * levels as usize];
    for t in 0..tt.trip_count() as TripId {
        let len = tt.trip_len(t);
        if len > MAX_TRIP_LEN {
            return Err(CustomizeError::TripTooLong { trip: t, len });
        }
        for level in 0..levels {
            let mut next = len;
            for i in (0..len).rev() {
                let e = tt.event(t, i);
                if i + 1 < len && part.cell_at(tt.event_stop(e), level) != part.cell_at(tt.event_stop(e + 1), level) {
                    next = i + 1;
                }
                succ[e as usize * levels as usize + level as usize] = next as u8;
            }
        }
    }
    Ok(SuccessorTable { levels, succ })
}
