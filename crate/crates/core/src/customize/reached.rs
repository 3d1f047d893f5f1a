use crate::timetable::Timetable;
use crate::TripId;

/// Reached index per trip with 16-bit timestamps for lazy reset.
#[derive(Clone, Debug)]
pub struct ReachedIndexStore {
    reached: Vec<u32>,
    stamp: Vec<u16>,
    current: u16,
}

impl ReachedIndexStore {
    pub fn new(trips: usize) -> Self {
        ReachedIndexStore { reached: vec![0; trips], stamp: vec![0; trips], current: 1 }
    }

    /// Starts a new search; every trip reads as unreached afterwards.
    pub fn reset(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamp.fill(0);
            self.current = 1;
        }
    }

    /// `R(T)`: first index already covered, `|T|` when untouched.
    pub fn get(&self, tt: &Timetable, t: TripId) -> u32 {
        if self.stamp[t as usize] == self.current {
            self.reached[t as usize]
        } else {
            tt.trip_len(t) as u32
        }
    }

    /// Sets `R(T') = index` for `T' ⪰ t` until an equal or smaller value is met.
    pub fn mark(&mut self, tt: &Timetable, t: TripId, index: u32) {
        for u in t..tt.line_end(t) {
            if self.get(tt, u) <= index {
                break;
            }
            self.reached[u as usize] = index;
            self.stamp[u as usize] = self.current;
        }
    }

    #[cfg(test)]
    pub(crate) fn force_stamp(&mut self, value: u16) {
        self.current = value;
    }
}
