//! Sequential vs rayon paths of the preprocessing steps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trex::customize::customize_with;
use trex::par::Execution;
use trex::partition::{build_layout_graph, nested_bipartition_with};
use trex::refkit::{gen_synthetic, SyntheticSpec};
use trex::transfers::build_transfers;

const PATHS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spec(stops: usize) -> SyntheticSpec {
    SyntheticSpec { stops, lines: stops / 2, trips_per_line: 24, clusters: 8, horizon: 12 * 3600, seed: 7, ..SyntheticSpec::default() }
}

fn preprocessing(c: &mut Criterion) {
    for stops in [400, 1600] {
        let tt = gen_synthetic(&spec(stops)).unwrap();
        let graph = build_layout_graph(&tt);
        let part = nested_bipartition_with(&graph, 6, 0.25, 7, Execution::Sequential).unwrap();
        let ts = build_transfers(&tt, Execution::Sequential);

        let mut group = c.benchmark_group("transfers");
        group.sample_size(10);
        for (name, exec) in PATHS {
            group.bench_with_input(BenchmarkId::new(name, tt.event_count()), &tt, |b, tt| b.iter(|| build_transfers(tt, exec)));
        }
        group.finish();

        let mut group = c.benchmark_group("partition");
        group.sample_size(10);
        for (name, exec) in PATHS {
            group.bench_with_input(BenchmarkId::new(name, graph.vertex_count()), &graph, |b, g| {
                b.iter(|| nested_bipartition_with(g, 6, 0.25, 7, exec).unwrap())
            });
        }
        group.finish();

        let mut group = c.benchmark_group("customize");
        group.sample_size(10);
        for (name, exec) in PATHS {
            group.bench_with_input(BenchmarkId::new(name, ts.len()), &ts, |b, ts| {
                b.iter_batched_ref(|| ts.clone(), |ts| customize_with(&tt, ts, &part, exec), criterion::BatchSize::LargeInput)
            });
        }
        group.finish();
    }
}

criterion_group!(benches, preprocessing);
criterion_main!(benches);
