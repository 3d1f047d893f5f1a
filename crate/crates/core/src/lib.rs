//! Trip-Based public transit routing with multi-level transfer overlays.
//!
//! The pipeline mirrors the command-line stages:
//!
//! 1. [`timetable`]: ingest or build a [`Timetable`](timetable::Timetable).
//! 2. [`transfers`]: generate and prune the transfer set.
//! 3. [`partition`]: nested bipartition of the footpath-contracted layout graph.
//! 4. [`customize`]: transfer ranks, per-level overlays, successor table.
//! 5. [`query`]: fixed-departure and profile queries with three engines.
//!
//! [`refkit`] holds the synthetic generator and brute-force oracles, and
//! [`snapshot`] persists engine state between stages.

pub mod customize;
pub mod par;
pub mod partition;
pub mod query;
pub mod refkit;
pub mod snapshot;
pub mod timetable;
pub mod transfers;

/// Seconds since the start of the service period.
pub type Time = u32;
pub type StopId = u32;
pub type TripId = u32;
pub type LineId = u32;
pub type EventId = u32;

/// Round cap shared by every round-based search.
pub const MAX_ROUNDS: usize = 16;
