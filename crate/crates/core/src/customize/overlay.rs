use crate::transfers::TransferSet;
use crate::EventId;

/// Transfers of rank at least `ℓ` in per-event runs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overlay {
    pub(crate) offsets: Vec<u32>,
    pub(crate) targets: Vec<EventId>,
}

impl Overlay {
    pub fn targets_of(&self, e: EventId) -> &[EventId] {
        &self.targets[self.offsets[e as usize] as usize..self.offsets[e as usize + 1] as usize]
    }
    pub fn len(&self) -> usize {
        self.targets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// One overlay per level `0..=K`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransferOverlays {
    pub(crate) levels: Vec<Overlay>,
}

impl TransferOverlays {
    pub fn level(&self, level: u8) -> &Overlay {
        &self.levels[level as usize]
    }
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Overlay::len).collect()
    }
}

pub fn build_overlays(ts: &TransferSet, levels: u8) -> TransferOverlays {
    let overlays = (0..=levels)
        .map(|level| {
            let mut o = Overlay { offsets: vec![0], targets: Vec::new() };
            for e in 0..ts.event_count() as EventId {
                for id in ts.range(e) {
                    if ts.rank(id) >= level {
                        o.targets.push(ts.target(id));
                    }
                }
                o.offsets.push(o.targets.len() as u32);
            }
            o
        })
        .collect();
    TransferOverlays { levels: overlays }
}
