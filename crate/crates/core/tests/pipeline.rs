use proptest::prelude::*;

use trex::customize::{build_customization, customize_with};
use trex::par::Execution;
use trex::partition::{build_layout_graph, nested_bipartition};
use trex::query::{validate_journey, Algorithm, ProfileQuery, Query, QueryEngine};
use trex::refkit::{gen_synthetic, oracle_front, oracle_profile, SyntheticSpec};
use trex::snapshot::{from_bytes, to_bytes, EngineState};
use trex::transfers::{build_transfers, generate_transfers, prune_latest_exit, prune_uturn};
use trex::MAX_ROUNDS;

fn small_spec() -> impl Strategy<Value = SyntheticSpec> {
    (20usize..70, 6usize..20, 2usize..6, 1usize..4, 0.0f64..0.5, 0.0f64..0.8, any::<u64>()).prop_map(
        |(stops, lines, trips_per_line, clusters, inter, density, seed)| SyntheticSpec {
            stops,
            lines,
            trips_per_line,
            clusters,
            inter_cluster_fraction: inter,
            footpath_density: density,
            horizon: 3 * 3600,
            seed,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pruning_is_a_feasible_idempotent_contraction(spec in small_spec()) {
        let tt = gen_synthetic(&spec).unwrap();
        let raw = generate_transfers(&tt);
        for (a, b, _) in raw.iter() {
            let walk = tt.walk(tt.event_stop(a), tt.event_stop(b)).expect("transfer needs a footpath");
            prop_assert!(tt.arr(a) + walk <= tt.dep(b));
        }
        let u = prune_uturn(&tt, &raw);
        let l = prune_latest_exit(&tt, &u);
        prop_assert!(u.iter().all(|(a, b, _)| raw.contains(a, b)));
        prop_assert!(l.iter().all(|(a, b, _)| u.contains(a, b)));
        prop_assert_eq!(prune_latest_exit(&tt, &l), l.clone());
        prop_assert_eq!(build_transfers(&tt, Execution::Sequential), l);
    }

    #[test]
    fn every_engine_matches_the_oracle(spec in small_spec(), levels in 0u8..5, seed in any::<u64>()) {
        let tt = gen_synthetic(&spec).unwrap();
        let mut ts = build_transfers(&tt, Execution::default());
        let part = nested_bipartition(&build_layout_graph(&tt), levels, 0.3, seed).unwrap();
        customize_with(&tt, &mut ts, &part, Execution::default());
        let cust = build_customization(&tt, &ts, &part).unwrap();
        let n = tt.stop_count() as u32;
        for alg in Algorithm::ALL {
            let mut e = QueryEngine::new(alg, &tt, &ts, Some(&part), Some(&cust)).unwrap();
            for k in 0..12u32 {
                let q = Query { source: (seed as u32).wrapping_add(k * 7) % n, target: (k * 11 + 3) % n, departure: 6 * 3600 + k * 900 };
                let r = e.query(&q).unwrap();
                prop_assert_eq!(&r.front, &oracle_front(&tt, &q, MAX_ROUNDS), "{} {:?}", alg, q);
                for j in e.journeys() {
                    prop_assert!(validate_journey(&tt, &ts, &q, &j).is_ok());
                }
            }
            let pq = ProfileQuery { source: 0, target: n - 1, start: 6 * 3600, end: 8 * 3600 };
            prop_assert_eq!(e.profile(&pq).unwrap().entries, oracle_profile(&tt, &pq));
        }
    }

    #[test]
    fn snapshot_bytes_round_trip(spec in small_spec(), levels in 0u8..4) {
        let tt = gen_synthetic(&spec).unwrap();
        let mut ts = build_transfers(&tt, Execution::Sequential);
        let part = nested_bipartition(&build_layout_graph(&tt), levels, 0.25, 1).unwrap();
        customize_with(&tt, &mut ts, &part, Execution::Sequential);
        let cust = build_customization(&tt, &ts, &part).unwrap();
        let state = EngineState { timetable: Some(tt), transfers: Some(ts), partition: Some(part), customization: Some(cust) };
        let bytes = to_bytes(&state);
        prop_assert_eq!(from_bytes(&bytes).unwrap(), state);
    }
}
