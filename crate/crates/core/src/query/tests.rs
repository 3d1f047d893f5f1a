use super::*;
use crate::customize::{build_customization, customize};
use crate::par::Execution;
use crate::partition::{build_layout_graph, nested_bipartition};
use crate::refkit::{build_instance, fixtures, gen_synthetic, oracle_front, oracle_profile, SyntheticSpec};
use crate::timetable::{TimetableBuilder, DAY};
use crate::transfers::build_transfers;
use crate::MAX_ROUNDS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn engines<'a>(inst: &'a crate::refkit::Instance) -> Vec<QueryEngine<'a>> {
    vec![
        QueryEngine::tb(&inst.tt, &inst.ts),
        QueryEngine::trex_basic(&inst.tt, &inst.ts, &inst.part),
        QueryEngine::trex_overlay(&inst.tt, &inst.ts, &inst.part, &inst.cust),
    ]
}

#[test]
fn same_source_and_target_is_trivial() {
    let f = fixtures::forced_two_trip();
    let ts = build_transfers(&f.tt, Execution::Sequential);
    let mut e = QueryEngine::tb(&f.tt, &ts);
    let r = e.query(&Query { source: 0, target: 0, departure: 42 }).unwrap();
    assert_eq!(r.front, vec![FrontEntry { arrival: 42, trips: 0 }]);
}

#[test]
fn unknown_stop_is_an_error() {
    let f = fixtures::forced_two_trip();
    let ts = build_transfers(&f.tt, Execution::Sequential);
    let mut e = QueryEngine::tb(&f.tt, &ts);
    assert_eq!(e.query(&Query { source: 0, target: 99, departure: 0 }), Err(QueryError::UnknownStop(99)));
}

#[test]
fn engines_need_their_inputs() {
    let f = fixtures::forced_two_trip();
    let ts = build_transfers(&f.tt, Execution::Sequential);
    assert!(QueryEngine::new(Algorithm::TrexOverlay, &f.tt, &ts, None, None).is_err());
    assert!(QueryEngine::new(Algorithm::Tb, &f.tt, &ts, None, None).is_ok());
}

#[test]
fn algorithm_names_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
    }
    assert!("raptor".parse::<Algorithm>().is_err());
}

#[test]
fn stop_without_departures_gives_empty_front() {
    let mut b = TimetableBuilder::new(DAY);
    let [a, c, d] = ["a", "c", "d"].map(|n| b.add_stop(n, None, None));
    b.add_trip("x", &[(c, 10, 10), (d, 20, 20)]);
    let tt = b.build().unwrap();
    let ts = build_transfers(&tt, Execution::Sequential);
    let r = QueryEngine::tb(&tt, &ts).query(&Query { source: a, target: d, departure: 0 }).unwrap();
    assert!(r.front.is_empty());
}

#[test]
fn boarding_at_exact_departure_time() {
    let mut b = TimetableBuilder::new(DAY);
    let [a, c] = ["a", "c"].map(|n| b.add_stop(n, None, None));
    b.add_trip("x", &[(a, 100, 100), (c, 200, 200)]);
    let tt = b.build().unwrap();
    let ts = build_transfers(&tt, Execution::Sequential);
    let mut e = QueryEngine::tb(&tt, &ts);
    assert_eq!(e.query(&Query { source: a, target: c, departure: 100 }).unwrap().front, vec![FrontEntry { arrival: 200, trips: 1 }]);
    assert!(e.query(&Query { source: a, target: c, departure: 101 }).unwrap().front.is_empty());
}

#[test]
fn walking_only_entry_is_reported() {
    let mut b = TimetableBuilder::new(DAY);
    let [a, c, d] = ["a", "c", "d"].map(|n| b.add_stop(n, None, None));
    b.add_footpath(a, c, 600);
    b.add_trip("x", &[(a, 100, 100), (d, 150, 150), (c, 200, 200)]);
    let tt = b.build().unwrap();
    let ts = build_transfers(&tt, Execution::Sequential);
    let mut e = QueryEngine::tb(&tt, &ts);
    let q = Query { source: a, target: c, departure: 0 };
    let r = e.query(&q).unwrap();
    assert_eq!(r.front, vec![FrontEntry { arrival: 600, trips: 0 }, FrontEntry { arrival: 200, trips: 1 }]);
    let walk = e.journey(0).unwrap();
    assert!(walk.legs.is_empty());
    validate_journey(&tt, &ts, &q, &walk).unwrap();
}

#[test]
fn forced_two_trip_fixture_on_every_engine() {
    let f = fixtures::forced_two_trip();
    let inst = build_instance(f.tt.clone(), 1, 0.5, 1, Execution::Sequential);
    for mut e in engines(&inst) {
        let r = e.query(&f.query).unwrap();
        assert_eq!(r.front, f.front, "{}", e.algorithm());
        let two = e.journey(1).unwrap();
        let names: Vec<_> = two.legs.iter().map(|l| l.trip_name.as_str()).collect();
        assert_eq!(names, ["first", "second"]);
        assert_eq!((two.legs[0].enter, two.legs[0].exit, two.legs[1].enter, two.legs[1].exit), (0, 1, 0, 1));
        assert_eq!((two.departure, two.arrival), (20, 60));
        let one = e.journey(0).unwrap();
        assert_eq!((one.legs.len(), one.legs[0].trip_name.as_str(), one.legs[0].exit), (1, "direct", 2));
        for j in e.journeys() {
            validate_journey(&inst.tt, &inst.ts, &f.query, &j).unwrap();
        }
    }
}

fn random_query(tt: &crate::timetable::Timetable, rng: &mut ChaCha8Rng) -> Query {
    Query {
        source: rng.gen_range(0..tt.stop_count() as u32),
        target: rng.gen_range(0..tt.stop_count() as u32),
        departure: rng.gen_range(5 * 3600..11 * 3600),
    }
}

#[test]
fn engines_match_oracle_on_random_instances() {
    for (seed, levels) in [(1, 0), (2, 2), (3, 3), (4, 4)] {
        let tt = gen_synthetic(&SyntheticSpec { seed, ..SyntheticSpec::default() }).unwrap();
        let inst = build_instance(tt, levels, 0.25, seed, Execution::default());
        let mut es = engines(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..150 {
            let q = random_query(&inst.tt, &mut rng);
            let oracle = oracle_front(&inst.tt, &q, MAX_ROUNDS);
            let mut relaxed = Vec::new();
            for e in &mut es {
                let r = e.query(&q).unwrap();
                assert_eq!(r.front, oracle, "{} seed {seed} {q:?}", e.algorithm());
                for (k, j) in e.journeys().iter().enumerate() {
                    validate_journey(&inst.tt, &inst.ts, &q, j).unwrap();
                    assert_eq!((j.arrival, j.trips() as u8), (r.front[k].arrival, r.front[k].trips));
                }
                relaxed.push(r.metrics.relaxed_transfers);
            }
            assert!(relaxed[2] <= relaxed[1] && relaxed[1] <= relaxed[0], "relaxed transfers not ordered: {relaxed:?}");
        }
    }
}

#[test]
fn k0_basic_trace_equals_tb() {
    let tt = gen_synthetic(&SyntheticSpec { seed: 5, ..SyntheticSpec::default() }).unwrap();
    let inst = build_instance(tt, 0, 0.25, 5, Execution::Sequential);
    let mut tb = QueryEngine::tb(&inst.tt, &inst.ts);
    let mut basic = QueryEngine::trex_basic(&inst.tt, &inst.ts, &inst.part);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let q = random_query(&inst.tt, &mut rng);
        let (a, b) = (tb.query(&q).unwrap(), basic.query(&q).unwrap());
        assert_eq!(a.front, b.front);
        assert_eq!((a.metrics.scanned_trips, a.metrics.relaxed_transfers), (b.metrics.scanned_trips, b.metrics.relaxed_transfers));
        assert_eq!(tb.journeys(), basic.journeys());
    }
}

#[test]
fn queries_are_deterministic() {
    let tt = gen_synthetic(&SyntheticSpec { seed: 6, ..SyntheticSpec::default() }).unwrap();
    let inst = build_instance(tt, 3, 0.25, 6, Execution::default());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let queries: Vec<Query> = (0..50).map(|_| random_query(&inst.tt, &mut rng)).collect();
    for a in Algorithm::ALL {
        let run = || {
            let mut e = QueryEngine::new(a, &inst.tt, &inst.ts, Some(&inst.part), Some(&inst.cust)).unwrap();
            queries.iter().map(|q| (e.query(q).unwrap().front, e.journeys())).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn profile_matches_oracle() {
    let tt = gen_synthetic(&SyntheticSpec { seed: 9, ..SyntheticSpec::default() }).unwrap();
    let inst = build_instance(tt, 3, 0.5, 9, Execution::default());
    let mut es = engines(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let start = rng.gen_range(5 * 3600..9 * 3600);
        let pq = ProfileQuery {
            source: rng.gen_range(0..inst.tt.stop_count() as u32),
            target: rng.gen_range(0..inst.tt.stop_count() as u32),
            start,
            end: start + 2 * 3600,
        };
        let oracle = oracle_profile(&inst.tt, &pq);
        for e in &mut es {
            assert_eq!(e.profile(&pq).unwrap().entries, oracle, "{} {pq:?}", e.algorithm());
        }
    }
}

#[test]
fn profile_with_single_departure_equals_fixed_query() {
    let f = fixtures::forced_two_trip();
    let ts = build_transfers(&f.tt, Execution::Sequential);
    let mut e = QueryEngine::tb(&f.tt, &ts);
    let p = e.profile(&ProfileQuery { source: f.query.source, target: f.query.target, start: 20, end: 20 }).unwrap();
    let fixed = e.query(&Query { departure: 20, ..f.query }).unwrap();
    assert_eq!(p.departures, 1);
    assert_eq!(p.entries.iter().map(|x| FrontEntry { arrival: x.arrival, trips: x.trips }).collect::<Vec<_>>(), fixed.front);
}

#[test]
fn profile_rejects_inverted_interval() {
    let f = fixtures::forced_two_trip();
    let ts = build_transfers(&f.tt, Execution::Sequential);
    let mut e = QueryEngine::tb(&f.tt, &ts);
    let pq = ProfileQuery { source: 0, target: 3, start: 10, end: 5 };
    assert_eq!(e.profile(&pq), Err(QueryError::EmptyInterval { start: 10, end: 5 }));
    let none = e.profile(&ProfileQuery { start: 5000, end: 6000, ..pq }).unwrap();
    assert!(none.entries.is_empty());
}

#[test]
fn split_keeps_target_cell_segments_in_both_queues() {
    // Two cells; the target cell is entered mid-trip, so the overlay engine must
    // still see the arrival there.
    let f = fixtures::two_cells();
    let mut ts = build_transfers(&f.tt, Execution::Sequential);
    customize(&f.tt, &mut ts, &f.part);
    let cust = build_customization(&f.tt, &ts, &f.part).unwrap();
    let [a0, a1, _a2, _b0, b1, b2] = f.stops;
    let mut e = QueryEngine::trex_overlay(&f.tt, &ts, &f.part, &cust);
    for (s, t) in [(a1, b2), (b1, a1), (a0, b1), (b1, a0)] {
        let q = Query { source: s, target: t, departure: 0 };
        assert_eq!(e.query(&q).unwrap().front, oracle_front(&f.tt, &q, MAX_ROUNDS), "{s}->{t}");
    }
}

#[test]
fn nested_partition_from_generator_feeds_engines() {
    let tt = gen_synthetic(&SyntheticSpec { seed: 11, stops: 60, lines: 16, ..SyntheticSpec::default() }).unwrap();
    let part = nested_bipartition(&build_layout_graph(&tt), 2, 0.5, 11).unwrap();
    let mut ts = build_transfers(&tt, Execution::Sequential);
    customize(&tt, &mut ts, &part);
    let cust = build_customization(&tt, &ts, &part).unwrap();
    let mut e = QueryEngine::trex_overlay(&tt, &ts, &part, &cust);
    let q = Query { source: 0, target: 59, departure: 6 * 3600 };
    assert_eq!(e.query(&q).unwrap().front, oracle_front(&tt, &q, MAX_ROUNDS));
}

#[test]
fn interleaved_profile_and_fixed_queries_do_not_share_targets() {
    let tt = gen_synthetic(&SyntheticSpec { seed: 12, ..SyntheticSpec::default() }).unwrap();
    let inst = build_instance(tt, 2, 0.5, 12, Execution::default());
    let mut e = QueryEngine::tb(&inst.tt, &inst.ts);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let q = random_query(&inst.tt, &mut rng);
        let pq = ProfileQuery { source: q.target, target: q.source, start: q.departure, end: q.departure + 3600 };
        assert_eq!(e.profile(&pq).unwrap().entries, oracle_profile(&inst.tt, &pq));
        assert_eq!(e.query(&q).unwrap().front, oracle_front(&inst.tt, &q, MAX_ROUNDS));
    }
}
