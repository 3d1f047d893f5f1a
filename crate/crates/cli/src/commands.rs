use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use trex::customize::{build_customization, customize_with};
use trex::par::{with_threads, Execution};
use trex::partition::{build_layout_graph, nested_bipartition, NestedPartition};
use trex::query::{Algorithm, FrontEntry, Journey, Metrics, ProfileEntry, ProfileQuery, Query, QueryEngine};
use trex::refkit::{gen_synthetic, SyntheticSpec};
use trex::snapshot::{self, EngineState, Stage};
use trex::timetable::{load_gtfs_with_report, Timetable};
use trex::transfers::build_transfers;
use trex::StopId;

use crate::format::show_time;
use crate::{bench, Command, GenArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { gtfs, day, days, buffer, out } => {
            let (tt, report) = load_gtfs_with_report(&gtfs, day, days).with_context(|| format!("reading {}", gtfs.display()))?;
            if report.dropped_trips > 0 {
                log::warn!("dropped {} trips with fewer than 2 events", report.dropped_trips);
            }
            let tt = if buffer > 0 { tt.apply_buffer_time(buffer) } else { tt };
            println!(
                "ingested {} stops, {} trips, {} events, {} lines",
                tt.stop_count(),
                tt.trip_count(),
                tt.event_count(),
                tt.line_count()
            );
            save(&out, &EngineState { timetable: Some(tt), ..EngineState::default() })
        }
        Command::Transfers(io) => {
            let mut state = load(&io.input, Stage::Ingest)?;
            let ts = build_transfers(state.timetable()?, Execution::default());
            println!("{} transfers", ts.len());
            state.transfers = Some(ts);
            state.customization = None;
            save(io.output(), &state)
        }
        Command::Partition { io, levels, imbalance, seed, import } => {
            let mut state = load(&io.input, Stage::Ingest)?;
            let tt = state.timetable()?;
            let part = match import {
                Some(path) => {
                    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    NestedPartition::import(tt, levels, BufReader::new(file))?
                }
                None => nested_bipartition(&build_layout_graph(tt), levels, imbalance, seed)?,
            };
            let cells = part.stop_cells().iter().collect::<std::collections::BTreeSet<_>>().len();
            println!("{} levels, {} non-empty level-0 cells", part.levels(), cells);
            state.partition = Some(part);
            if state.customization.take().is_some() {
                if let Some(ts) = state.transfers.as_mut() {
                    ts.set_ranks(vec![0; ts.len()]);
                }
            }
            save(io.output(), &state)
        }
        Command::Customize { io, threads } => {
            let mut state = load(&io.input, Stage::Partition)?;
            let tt = state.timetable.take().expect("loaded");
            let part = state.partition.take().expect("loaded");
            let mut ts = state.transfers.take().expect("loaded");
            let report = match threads {
                Some(t) => with_threads(t, || customize_with(&tt, &mut ts, &part, Execution::Parallel)),
                None => customize_with(&tt, &mut ts, &part, Execution::default()),
            };
            let cust = build_customization(&tt, &ts, &part)?;
            println!("searches per level: {:?}", report.searches);
            println!("overlay sizes: {:?}", report.overlay_sizes);
            save(io.output(), &EngineState { timetable: Some(tt), transfers: Some(ts), partition: Some(part), customization: Some(cust) })
        }
        Command::Query { input, from, to, dep, algo, json } => {
            let state = load(&input, required_stage(algo))?;
            let tt = state.timetable()?;
            let q = Query { source: resolve_stop(tt, &from)?, target: resolve_stop(tt, &to)?, departure: dep };
            let mut engine = engine(&state, algo)?;
            let result = engine.query(&q)?;
            let journeys = engine.journeys();
            if json {
                let out = QueryOutput { front: &result.front, journeys: &journeys, metrics: &result.metrics };
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                print_journeys(tt, &q, &journeys, &result.metrics);
            }
            Ok(())
        }
        Command::Profile { input, from, to, start, end, algo, json } => {
            let state = load(&input, required_stage(algo))?;
            let tt = state.timetable()?;
            let pq = ProfileQuery { source: resolve_stop(tt, &from)?, target: resolve_stop(tt, &to)?, start, end };
            let result = engine(&state, algo)?.profile(&pq)?;
            if json {
                let out = ProfileOutput { entries: &result.entries, departures: result.departures, metrics: &result.metrics };
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                println!("{} candidate departures, {} Pareto entries", result.departures, result.entries.len());
                for e in &result.entries {
                    println!("  dep {}  arr {}  {} trip(s)", show_time(e.departure), show_time(e.arrival), e.trips);
                }
            }
            Ok(())
        }
        Command::Bench(args) => {
            let needed = args.algos.iter().map(|&a| required_stage(a)).max().unwrap_or(Stage::Transfers);
            let state = load(&args.input, needed)?;
            bench::run(&state, &args)
        }
        Command::Gen(args) => generate(args),
        Command::Stats { input, json } => stats(&input, json),
    }
}

fn load(path: &Path, stage: Stage) -> Result<EngineState> {
    snapshot::load(path, &stage.up_to())
        .with_context(|| format!("loading {} (this command needs the stages up to `{}`)", path.display(), stage.name()))
}

fn save(path: &Path, state: &EngineState) -> Result<()> {
    snapshot::save(path, state).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Last pipeline stage an algorithm needs.
pub fn required_stage(algo: Algorithm) -> Stage {
    match algo {
        Algorithm::Tb => Stage::Transfers,
        Algorithm::TrexBasic | Algorithm::TrexOverlay => Stage::Customize,
    }
}

pub fn engine(state: &EngineState, algo: Algorithm) -> Result<QueryEngine<'_>> {
    Ok(QueryEngine::new(algo, state.timetable()?, state.transfers()?, state.partition.as_ref(), state.customization.as_ref())?)
}

fn resolve_stop(tt: &Timetable, s: &str) -> Result<StopId> {
    if let Ok(id) = s.parse::<StopId>() {
        if (id as usize) < tt.stop_count() {
            return Ok(id);
        }
        bail!("stop {id} out of range (the timetable has {} stops)", tt.stop_count());
    }
    let mut matches = tt.stops().iter().enumerate().filter(|(_, stop)| stop.name == s);
    match (matches.next(), matches.next()) {
        (Some((id, _)), None) => Ok(id as StopId),
        (Some(_), Some(_)) => bail!("stop name {s:?} is ambiguous, use the stop index"),
        (None, _) => bail!("no stop named {s:?}"),
    }
}

#[derive(Serialize)]
struct QueryOutput<'a> {
    front: &'a [FrontEntry],
    journeys: &'a [Journey],
    metrics: &'a Metrics,
}

#[derive(Serialize)]
struct ProfileOutput<'a> {
    entries: &'a [ProfileEntry],
    departures: usize,
    metrics: &'a Metrics,
}

fn print_journeys(tt: &Timetable, q: &Query, journeys: &[Journey], m: &Metrics) {
    let name = |p: StopId| &tt.stop(p).name;
    if journeys.is_empty() {
        println!("no journey from {} to {} after {}", name(q.source), name(q.target), show_time(q.departure));
    }
    for j in journeys {
        println!("arrive {} with {} trip(s)", show_time(j.arrival), j.trips());
        if let Some(w) = &j.initial_walk {
            println!("  walk {} -> {} ({} s)", name(w.from), name(w.to), w.duration);
        }
        for leg in &j.legs {
            println!(
                "  {} {} {} -> {} {}",
                leg.trip_name,
                show_time(leg.departure),
                name(leg.from),
                name(leg.to),
                show_time(leg.arrival)
            );
        }
        if let Some(w) = &j.final_walk {
            println!("  walk {} -> {} ({} s)", name(w.from), name(w.to), w.duration);
        }
    }
    println!(
        "scanned {} trip segments, relaxed {} transfers, {} rounds, {} us",
        m.scanned_trips, m.relaxed_transfers, m.rounds, m.elapsed_us
    );
}

fn generate(args: GenArgs) -> Result<()> {
    let spec = SyntheticSpec {
        stops: args.stops,
        lines: args.lines,
        trips_per_line: args.trips_per_line,
        clusters: args.clusters,
        inter_cluster_fraction: args.inter_cluster,
        footpath_density: args.footpath_density,
        horizon: args.horizon,
        seed: args.seed,
    };
    let tt = gen_synthetic(&spec)?;
    println!("generated {} stops, {} trips, {} events, {} lines", tt.stop_count(), tt.trip_count(), tt.event_count(), tt.line_count());
    save(&args.out, &EngineState { timetable: Some(tt), ..EngineState::default() })
}

#[derive(Serialize)]
struct Stats {
    stages: Vec<&'static str>,
    stops: usize,
    stop_events: usize,
    trips: usize,
    lines: usize,
    footpaths: usize,
    transfers: Option<usize>,
    layout_vertices: usize,
    layout_edges: usize,
    levels: Option<u8>,
    rank_histogram: Option<Vec<usize>>,
    overlay_sizes: Option<Vec<usize>>,
}

fn stats(path: &Path, json: bool) -> Result<()> {
    let state = load(path, Stage::Ingest)?;
    let tt = state.timetable()?;
    let graph = build_layout_graph(tt);
    let levels = state.partition.as_ref().map(|p| p.levels());
    let histogram = match (&state.transfers, &state.customization, levels) {
        (Some(ts), Some(_), Some(k)) => {
            let mut h = vec![0; k as usize + 1];
            for &r in ts.ranks() {
                h[r as usize] += 1;
            }
            Some(h)
        }
        _ => None,
    };
    let s = Stats {
        stages: [Stage::Ingest, Stage::Transfers, Stage::Partition, Stage::Customize]
            .into_iter()
            .filter(|&st| state.has(st))
            .map(Stage::name)
            .collect(),
        stops: tt.stop_count(),
        stop_events: tt.event_count(),
        trips: tt.trip_count(),
        lines: tt.line_count(),
        footpaths: tt.footpaths().len() - tt.stop_count(),
        transfers: state.transfers.as_ref().map(|ts| ts.len()),
        layout_vertices: graph.vertex_count(),
        layout_edges: graph.edge_count(),
        levels,
        rank_histogram: histogram,
        overlay_sizes: state.customization.as_ref().map(|c| c.overlays.sizes()),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&s)?);
        return Ok(());
    }
    println!("stages:          {}", s.stages.join(", "));
    println!("stops:           {}", s.stops);
    println!("stop events:     {}", s.stop_events);
    println!("trips:           {}", s.trips);
    println!("lines:           {}", s.lines);
    println!("footpaths:       {}", s.footpaths);
    println!("layout graph:    {} vertices, {} edges", s.layout_vertices, s.layout_edges);
    if let Some(n) = s.transfers {
        println!("transfers:       {n}");
    }
    if let Some(k) = s.levels {
        println!("levels:          {k}");
    }
    if let Some(h) = &s.rank_histogram {
        println!("rank histogram:");
        let total: usize = h.iter().sum();
        for (r, n) in h.iter().enumerate() {
            println!("  {r:>2}  {n:>9}  {:5.1} %", 100.0 * *n as f64 / total.max(1) as f64);
        }
    }
    if let Some(sizes) = &s.overlay_sizes {
        println!("overlay sizes:   {sizes:?}");
    }
    Ok(())
}
