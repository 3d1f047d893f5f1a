use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use trex::query::{Algorithm, Query};
use trex::snapshot::EngineState;
use trex::timetable::Timetable;
use trex::{StopId, Time};

use crate::commands::engine;

const DAY: Time = 24 * 3600;

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Random queries, or sources for --georank.
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "tb,trex,trex-overlay")]
    pub algos: Vec<Algorithm>,
    /// Targets are the 2^r-th closest stops of each source.
    #[arg(long)]
    pub georank: bool,
    #[arg(long)]
    pub csv: PathBuf,
    /// Skip the cross-algorithm front comparison.
    #[arg(long)]
    pub no_verify: bool,
}

#[derive(Serialize)]
struct Row {
    query_id: usize,
    source: StopId,
    target: StopId,
    departure: Time,
    algorithm: &'static str,
    pareto_size: usize,
    scanned_trips: u64,
    relaxed_transfers: u64,
    rounds: u32,
    elapsed_us: u64,
    unpack_us: u64,
}

pub fn run(state: &EngineState, args: &BenchArgs) -> Result<()> {
    let tt = state.timetable()?;
    if tt.stop_count() == 0 {
        bail!("timetable has no stops");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let workload = if args.georank { georank_workload(tt, args.queries, &mut rng)? } else { random_workload(tt, args.queries, &mut rng) };
    let mut engines = args.algos.iter().map(|&a| engine(state, a)).collect::<Result<Vec<_>>>()?;
    let verify = !args.no_verify && engines.len() > 1;

    let mut out = csv::Writer::from_path(&args.csv).with_context(|| format!("creating {}", args.csv.display()))?;
    let mut totals = vec![(0u64, 0u64, 0u64); engines.len()];
    for (id, q) in workload.iter().enumerate() {
        let mut reference = None;
        for (k, e) in engines.iter_mut().enumerate() {
            let r = e.query(q)?;
            let start = Instant::now();
            let journeys = e.journeys();
            let unpack_us = start.elapsed().as_micros() as u64;
            debug_assert_eq!(journeys.len(), r.front.len());
            if verify {
                match &reference {
                    None => reference = Some(r.front.clone()),
                    Some(front) if *front != r.front => {
                        bail!("query {id} {q:?}: {} front {:?} differs from {} front {:?}", e.algorithm(), r.front, args.algos[0], front)
                    }
                    Some(_) => {}
                }
            }
            let m = r.metrics;
            totals[k].0 += m.scanned_trips;
            totals[k].1 += m.relaxed_transfers;
            totals[k].2 += m.elapsed_us;
            out.serialize(Row {
                query_id: id,
                source: q.source,
                target: q.target,
                departure: q.departure,
                algorithm: e.algorithm().name(),
                pareto_size: r.front.len(),
                scanned_trips: m.scanned_trips,
                relaxed_transfers: m.relaxed_transfers,
                rounds: m.rounds,
                elapsed_us: m.elapsed_us,
                unpack_us,
            })?;
        }
    }
    out.flush()?;

    let n = workload.len().max(1) as f64;
    println!("{} queries{}", workload.len(), if verify { ", fronts verified across algorithms" } else { "" });
    println!("{:<14}{:>16}{:>20}{:>14}", "algorithm", "scanned trips", "relaxed transfers", "time [us]");
    for (a, (s, r, t)) in args.algos.iter().zip(&totals) {
        println!("{:<14}{:>16.1}{:>20.1}{:>14.1}", a.name(), *s as f64 / n, *r as f64 / n, *t as f64 / n);
    }
    Ok(())
}

/// Uniform source and target stops, departure uniform in the first day.
fn random_workload(tt: &Timetable, n: usize, rng: &mut ChaCha8Rng) -> Vec<Query> {
    let stops = tt.stop_count() as StopId;
    (0..n).map(|_| Query { source: rng.gen_range(0..stops), target: rng.gen_range(0..stops), departure: rng.gen_range(0..DAY) }).collect()
}

/// For each sampled source, one query per rank `r` to its `2^r`-th closest stop.
fn georank_workload(tt: &Timetable, sources: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Query>> {
    let coords: Vec<(f64, f64)> = tt
        .stops()
        .iter()
        .enumerate()
        .map(|(p, s)| match (s.lat, s.lon) {
            (Some(lat), Some(lon)) => Ok((lat, lon)),
            _ => bail!("stop {p} has no coordinates, --georank needs them for every stop"),
        })
        .collect::<Result<_>>()?;
    let n = coords.len();
    let mut queries = Vec::new();
    for _ in 0..sources {
        let source = rng.gen_range(0..n);
        let departure = rng.gen_range(0..DAY);
        let mut others: Vec<(f64, usize)> = (0..n).filter(|&q| q != source).map(|q| (distance(coords[source], coords[q]), q)).collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut rank = 1;
        while rank <= others.len() {
            queries.push(Query { source: source as StopId, target: others[rank - 1].1 as StopId, departure });
            rank *= 2;
        }
    }
    Ok(queries)
}

/// Great-circle distance in metres.
fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (la1, lo1, la2, lo2) = (a.0.to_radians(), a.1.to_radians(), b.0.to_radians(), b.1.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * 6_371_000.0 * h.sqrt().asin()
}
