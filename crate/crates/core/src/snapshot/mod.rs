//! Sectioned binary snapshot of the engine state.
//!
//! Layout (little endian): magic `TRXS`, `u32` version, `u32` section count,
//! then per section `u32` kind, `u64` offset, `u64` length, `u32` CRC-32,
//! followed by the section payloads. See `docs/snapshot-format.md`.

mod codec;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use codec::{Reader, Writer};

use crate::customize::{Customization, Overlay, SuccessorTable, TransferOverlays};
use crate::partition::NestedPartition;
use crate::timetable::{Footpaths, Line, Stop, Timetable};
use crate::transfers::TransferSet;

pub const MAGIC: &[u8; 4] = b"TRXS";
pub const VERSION: u32 = 1;

const TIMETABLE: u32 = 1;
const TRANSFERS: u32 = 2;
const PARTITION: u32 = 3;
const RANKS: u32 = 4;
const OVERLAYS: u32 = 5;
const SUCCESSOR: u32 = 6;

/// Pipeline stages in the order they have to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Transfers,
    Partition,
    Customize,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Transfers => "transfers",
            Stage::Partition => "partition",
            Stage::Customize => "customize",
        }
    }

    /// This stage and all stages before it.
    pub fn up_to(self) -> Vec<Stage> {
        [Stage::Ingest, Stage::Transfers, Stage::Partition, Stage::Customize].into_iter().filter(|&s| s <= self).collect()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("snapshot version {found} is not supported (expected {VERSION})")]
    Version { found: u32 },
    #[error("checksum mismatch in section {section}")]
    Checksum { section: String },
    #[error("snapshot lacks the `{0}` stage")]
    MissingStage(Stage),
    #[error("corrupt section {section}: {reason}")]
    Corrupt { section: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything the pipeline produces. Later stages are only present if the earlier ones are.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EngineState {
    pub timetable: Option<Timetable>,
    /// Carries the ranks once customized.
    pub transfers: Option<TransferSet>,
    pub partition: Option<NestedPartition>,
    pub customization: Option<Customization>,
}

impl EngineState {
    pub fn has(&self, stage: Stage) -> bool {
        match stage {
            Stage::Ingest => self.timetable.is_some(),
            Stage::Transfers => self.transfers.is_some(),
            Stage::Partition => self.partition.is_some(),
            Stage::Customize => self.customization.is_some(),
        }
    }

    pub fn require(&self, stages: &[Stage]) -> Result<(), SnapshotError> {
        match stages.iter().find(|&&s| !self.has(s)) {
            Some(&s) => Err(SnapshotError::MissingStage(s)),
            None => Ok(()),
        }
    }

    pub fn timetable(&self) -> Result<&Timetable, SnapshotError> {
        self.timetable.as_ref().ok_or(SnapshotError::MissingStage(Stage::Ingest))
    }
    pub fn transfers(&self) -> Result<&TransferSet, SnapshotError> {
        self.transfers.as_ref().ok_or(SnapshotError::MissingStage(Stage::Transfers))
    }
    pub fn partition(&self) -> Result<&NestedPartition, SnapshotError> {
        self.partition.as_ref().ok_or(SnapshotError::MissingStage(Stage::Partition))
    }
    pub fn customization(&self) -> Result<&Customization, SnapshotError> {
        self.customization.as_ref().ok_or(SnapshotError::MissingStage(Stage::Customize))
    }
}

fn section_name(kind: u32) -> String {
    match kind {
        TIMETABLE => "timetable".into(),
        TRANSFERS => "transfers".into(),
        PARTITION => "partition".into(),
        RANKS => "ranks".into(),
        OVERLAYS => "overlays".into(),
        SUCCESSOR => "successor".into(),
        k => format!("#{k}"),
    }
}

pub fn to_bytes(state: &EngineState) -> Vec<u8> {
    let mut sections: Vec<(u32, Vec<u8>)> = Vec::new();
    if let Some(tt) = &state.timetable {
        sections.push((TIMETABLE, encode_timetable(tt)));
    }
    if let Some(ts) = &state.transfers {
        let mut w = Writer::default();
        w.u32s(&ts.offsets);
        w.u32s(&ts.targets);
        sections.push((TRANSFERS, w.into_inner()));
        if state.customization.is_some() {
            let mut w = Writer::default();
            w.bytes(&ts.ranks);
            sections.push((RANKS, w.into_inner()));
        }
    }
    if let Some(p) = &state.partition {
        let mut w = Writer::default();
        w.u8(p.levels);
        w.u64(p.level_imbalance.len() as u64);
        for x in &p.level_imbalance {
            match x {
                Some(v) => {
                    w.u8(1);
                    w.f64(*v);
                }
                None => w.u8(0),
            }
        }
        w.u16s(&p.vertex_cell);
        w.u16s(&p.stop_cell);
        sections.push((PARTITION, w.into_inner()));
    }
    if let Some(c) = &state.customization {
        let mut w = Writer::default();
        w.u64(c.overlays.levels.len() as u64);
        for o in &c.overlays.levels {
            w.u32s(&o.offsets);
            w.u32s(&o.targets);
        }
        sections.push((OVERLAYS, w.into_inner()));
        let mut w = Writer::default();
        w.u8(c.successors.levels);
        w.bytes(&c.successors.succ);
        sections.push((SUCCESSOR, w.into_inner()));
    }

    let mut out = Writer::default();
    out.raw(MAGIC);
    out.u32(VERSION);
    out.u32(sections.len() as u32);
    let mut offset = (12 + sections.len() * 24) as u64;
    for (kind, data) in &sections {
        out.u32(*kind);
        out.u64(offset);
        out.u64(data.len() as u64);
        out.u32(crc32fast::hash(data));
        offset += data.len() as u64;
    }
    for (_, data) in &sections {
        out.raw(data);
    }
    out.into_inner()
}

pub fn from_bytes(bytes: &[u8]) -> Result<EngineState, SnapshotError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let header = "header".to_string();
    let truncated = || SnapshotError::Checksum { section: "header".into() };
    let mut r = Reader::new(&bytes[4..], header.clone());
    let version = r.u32().map_err(|_| truncated())?;
    if version != VERSION {
        return Err(SnapshotError::Version { found: version });
    }
    let count = r.u32().map_err(|_| truncated())?;
    let mut payloads: Vec<(u32, &[u8])> = Vec::new();
    for _ in 0..count {
        let kind = r.u32().map_err(|_| truncated())?;
        let offset = r.u64().map_err(|_| truncated())? as usize;
        let len = r.u64().map_err(|_| truncated())? as usize;
        let crc = r.u32().map_err(|_| truncated())?;
        let data = offset
            .checked_add(len)
            .and_then(|end| bytes.get(offset..end))
            .ok_or_else(|| SnapshotError::Checksum { section: section_name(kind) })?;
        if crc32fast::hash(data) != crc {
            return Err(SnapshotError::Checksum { section: section_name(kind) });
        }
        payloads.push((kind, data));
    }
    let find = |kind: u32| payloads.iter().find(|p| p.0 == kind).map(|p| Reader::new(p.1, section_name(kind)));

    let mut state = EngineState::default();
    if let Some(mut r) = find(TIMETABLE) {
        let tt = decode_timetable(&mut r)?;
        r.finish()?;
        tt.validate().map_err(|reason| SnapshotError::Corrupt { section: "timetable".into(), reason })?;
        state.timetable = Some(tt);
    }
    if let Some(mut r) = find(TRANSFERS) {
        let offsets = r.u32s()?;
        let targets = r.u32s()?;
        r.finish()?;
        let ranks = match find(RANKS) {
            Some(mut rr) => {
                let ranks = rr.bytes()?;
                rr.finish()?;
                ranks
            }
            None => vec![0; targets.len()],
        };
        let ok = offsets.first() == Some(&0)
            && offsets.windows(2).all(|w| w[0] <= w[1])
            && *offsets.last().unwrap() as usize == targets.len()
            && ranks.len() == targets.len()
            && state.timetable.as_ref().is_none_or(|tt| offsets.len() == tt.event_count() + 1 && targets.iter().all(|&t| (t as usize) < tt.event_count()));
        if !ok {
            return Err(r.corrupt("inconsistent transfer arrays"));
        }
        state.transfers = Some(TransferSet { offsets, targets, ranks });
    }
    if let Some(mut r) = find(PARTITION) {
        let levels = r.u8()?;
        let n = r.u64()? as usize;
        let mut level_imbalance = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            level_imbalance.push(if r.u8()? == 1 { Some(r.f64()?) } else { None });
        }
        let vertex_cell = r.u16s()?;
        let stop_cell = r.u16s()?;
        r.finish()?;
        if state.timetable.as_ref().is_some_and(|tt| stop_cell.len() != tt.stop_count()) {
            return Err(r.corrupt("stop count differs from timetable"));
        }
        state.partition = Some(NestedPartition { levels, level_imbalance, vertex_cell, stop_cell });
    }
    if let (Some(mut ro), Some(mut rs)) = (find(OVERLAYS), find(SUCCESSOR)) {
        let n = ro.u64()? as usize;
        let mut levels = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let offsets = ro.u32s()?;
            let targets = ro.u32s()?;
            if offsets.last().copied().unwrap_or(0) as usize != targets.len() {
                return Err(ro.corrupt("overlay offsets"));
            }
            levels.push(Overlay { offsets, targets });
        }
        ro.finish()?;
        let succ_levels = rs.u8()?;
        let succ = rs.bytes()?;
        rs.finish()?;
        if find(RANKS).is_some() {
            state.customization = Some(Customization {
                overlays: TransferOverlays { levels },
                successors: SuccessorTable { levels: succ_levels, succ },
            });
        }
    }
    Ok(state)
}

/// Writes `state` to `path` through a temporary file and an atomic rename.
pub fn save(path: &Path, state: &EngineState) -> Result<(), SnapshotError> {
    let bytes = to_bytes(state);
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a snapshot and checks that every stage in `required` is present.
pub fn load(path: &Path, required: &[Stage]) -> Result<EngineState, SnapshotError> {
    let bytes = fs::read(path)?;
    let state = from_bytes(&bytes)?;
    state.require(required)?;
    Ok(state)
}

fn encode_timetable(tt: &Timetable) -> Vec<u8> {
    let mut w = Writer::default();
    w.u32(tt.period);
    w.u64(tt.stops.len() as u64);
    for s in &tt.stops {
        w.str(&s.name);
        w.opt_f64(s.lat);
        w.opt_f64(s.lon);
    }
    w.u32s(&tt.footpaths.offsets);
    w.u32s(&tt.footpaths.targets);
    w.u32s(&tt.footpaths.durations);
    w.u64(tt.lines.len() as u64);
    for l in &tt.lines {
        w.u32s(&l.stops);
        w.u32(l.first_trip);
        w.u32(l.trip_count);
    }
    w.u64(tt.trip_names.len() as u64);
    for n in &tt.trip_names {
        w.str(n);
    }
    w.u32s(&tt.trip_offsets);
    w.u32s(&tt.event_stop);
    w.u32s(&tt.arr);
    w.u32s(&tt.dep);
    w.into_inner()
}

fn decode_timetable(r: &mut Reader) -> Result<Timetable, SnapshotError> {
    let period = r.u32()?;
    let n = r.len()?;
    let mut stops = Vec::with_capacity(n);
    for _ in 0..n {
        stops.push(Stop { name: r.str()?, lat: r.opt_f64()?, lon: r.opt_f64()? });
    }
    let footpaths = Footpaths { offsets: r.u32s()?, targets: r.u32s()?, durations: r.u32s()? };
    let n = r.len()?;
    let mut lines = Vec::with_capacity(n);
    for _ in 0..n {
        lines.push(Line { stops: r.u32s()?, first_trip: r.u32()?, trip_count: r.u32()? });
    }
    let n = r.len()?;
    let mut trip_names = Vec::with_capacity(n);
    for _ in 0..n {
        trip_names.push(r.str()?);
    }
    let trip_offsets = r.u32s()?;
    let event_stop = r.u32s()?;
    let arr = r.u32s()?;
    let dep = r.u32s()?;
    let stop_count = stops.len();
    let sane = trip_offsets.len() == trip_names.len() + 1
        && trip_offsets.windows(2).all(|w| w[0] <= w[1])
        && trip_offsets.last().is_some_and(|&e| e as usize == event_stop.len())
        && arr.len() == event_stop.len()
        && dep.len() == event_stop.len()
        && event_stop.iter().all(|&p| (p as usize) < stop_count)
        && footpaths.offsets.len() == stop_count + 1
        && lines.iter().all(|l| l.stops.iter().all(|&p| (p as usize) < stop_count) && (l.first_trip + l.trip_count) as usize <= trip_names.len());
    if !sane {
        return Err(r.corrupt("inconsistent timetable arrays"));
    }
    Ok(Timetable::from_parts(stops, footpaths, lines, trip_names, trip_offsets, event_stop, arr, dep, period))
}

#[cfg(test)]
mod tests;
