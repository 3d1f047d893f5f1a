//! Fixed-departure and profile queries for TB, T-REX basic and T-REX overlay.

mod engine;
mod journey;

pub use engine::QueryEngine;
pub use journey::{validate_journey, Journey, Leg, Walk};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::{StopId, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub source: StopId,
    pub target: StopId,
    pub departure: Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProfileQuery {
    pub source: StopId,
    pub target: StopId,
    pub start: Time,
    pub end: Time,
}

/// One Pareto-optimal cost vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FrontEntry {
    pub arrival: Time,
    pub trips: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ProfileEntry {
    pub departure: Time,
    pub arrival: Time,
    pub trips: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Tb,
    TrexBasic,
    TrexOverlay,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Tb, Algorithm::TrexBasic, Algorithm::TrexOverlay];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tb => "tb",
            Algorithm::TrexBasic => "trex",
            Algorithm::TrexOverlay => "trex-overlay",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tb" => Ok(Algorithm::Tb),
            "trex" | "trex-basic" => Ok(Algorithm::TrexBasic),
            "trex-overlay" | "overlay" => Ok(Algorithm::TrexOverlay),
            other => Err(format!("unknown algorithm `{other}` (expected tb, trex or trex-overlay)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    /// Trip segments scanned; post-split subsegments for the overlay engine.
    pub scanned_trips: u64,
    pub relaxed_transfers: u64,
    /// Transfers rejected by the LCL test (basic engine only).
    pub skipped_transfers: u64,
    pub rounds: u32,
    pub elapsed_us: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResult {
    /// Sorted by increasing trip count and strictly decreasing arrival.
    pub front: Vec<FrontEntry>,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileResult {
    /// Sorted by departure, then trips.
    pub entries: Vec<ProfileEntry>,
    pub departures: usize,
    pub metrics: Metrics,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown stop {0}")]
    UnknownStop(StopId),
    #[error("empty departure interval [{start}, {end}]")]
    EmptyInterval { start: Time, end: Time },
    #[error("{0} needs a partition and customization")]
    MissingCustomization(Algorithm),
    #[error("front entry {0} does not exist")]
    NoSuchEntry(usize),
}

#[cfg(test)]
mod tests;
