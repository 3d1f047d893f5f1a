use super::*;
use crate::timetable::TimetableBuilder;

#[test]
fn tiny_spec_gives_one_trip_with_three_events() {
    let tt = gen_synthetic(&SyntheticSpec { stops: 3, lines: 1, trips_per_line: 1, clusters: 1, ..SyntheticSpec::default() }).unwrap();
    assert_eq!(tt.trip_count(), 1);
    assert_eq!(tt.event_count(), 3);
}

#[test]
fn generator_is_deterministic_per_seed() {
    let spec = SyntheticSpec { seed: 7, ..SyntheticSpec::default() };
    assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
    assert_ne!(gen_synthetic(&spec).unwrap(), gen_synthetic(&SyntheticSpec { seed: 8, ..spec }).unwrap());
}

#[test]
fn generator_rejects_empty_spec() {
    assert!(gen_synthetic(&SyntheticSpec { stops: 0, ..SyntheticSpec::default() }).is_err());
}

#[test]
fn default_spec_is_valid_and_moderate() {
    let tt = gen_synthetic(&SyntheticSpec::default()).unwrap();
    tt.validate().unwrap();
    assert!((300..=2_000).contains(&tt.event_count()), "{} events", tt.event_count());
}

#[test]
fn oracle_unreachable_and_walking() {
    let mut b = TimetableBuilder::new(DAY);
    let [a, c, d] = ["a", "c", "d"].map(|n| b.add_stop(n, None, None));
    b.add_footpath(a, c, 90);
    let tt = b.build().unwrap();
    assert!(oracle_front(&tt, &Query { source: a, target: d, departure: 100 }, MAX_ROUNDS).is_empty());
    assert_eq!(
        oracle_front(&tt, &Query { source: a, target: c, departure: 100 }, MAX_ROUNDS),
        vec![FrontEntry { arrival: 190, trips: 0 }]
    );
    assert_eq!(
        oracle_front(&tt, &Query { source: a, target: a, departure: 100 }, MAX_ROUNDS),
        vec![FrontEntry { arrival: 100, trips: 0 }]
    );
}

#[test]
fn oracle_finds_forced_two_trip_optimum() {
    let f = fixtures::forced_two_trip();
    assert_eq!(oracle_front(&f.tt, &f.query, MAX_ROUNDS), f.front);
    // With one round only the direct trip remains.
    assert_eq!(oracle_front(&f.tt, &f.query, 1), vec![f.front[0]]);
}

#[test]
fn oracle_fronts_are_antichains() {
    let tt = gen_synthetic(&SyntheticSpec { seed: 3, ..SyntheticSpec::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let q = Query {
            source: rng.gen_range(0..tt.stop_count() as StopId),
            target: rng.gen_range(0..tt.stop_count() as StopId),
            departure: rng.gen_range(SERVICE_START..SERVICE_START + 4 * 3600),
        };
        let f = oracle_front(&tt, &q, MAX_ROUNDS);
        for w in f.windows(2) {
            assert!(w[0].trips < w[1].trips && w[0].arrival > w[1].arrival);
        }
    }
}

#[test]
fn oracle_profile_with_single_departure_equals_fixed_front() {
    let f = fixtures::forced_two_trip();
    let pq = ProfileQuery { source: f.query.source, target: f.query.target, start: 15, end: 20 };
    assert_eq!(profile_departures(&f.tt, &pq), vec![20]);
    let fixed = oracle_front(&f.tt, &Query { departure: 20, ..f.query }, MAX_ROUNDS);
    let expected: Vec<ProfileEntry> =
        fixed.iter().map(|e| ProfileEntry { departure: 20, arrival: e.arrival, trips: e.trips }).collect();
    assert_eq!(oracle_profile(&f.tt, &pq), expected);
}

#[test]
fn oracle_profile_drops_entries_dominated_by_later_departures() {
    let f = fixtures::forced_two_trip();
    // Departing at 10 takes the direct trip (100, 1 trip) or changes (60, 2 trips);
    // departing at 20 still reaches 60 with 2 trips, so (10, 60, 2) is dominated.
    let pq = ProfileQuery { source: f.query.source, target: f.query.target, start: 0, end: 100 };
    assert_eq!(
        oracle_profile(&f.tt, &pq),
        vec![ProfileEntry { departure: 10, arrival: 100, trips: 1 }, ProfileEntry { departure: 20, arrival: 60, trips: 2 }]
    );
}

#[test]
fn empty_interval_has_no_departures() {
    let f = fixtures::forced_two_trip();
    let pq = ProfileQuery { source: f.query.source, target: f.query.target, start: 500, end: 600 };
    assert!(oracle_profile(&f.tt, &pq).is_empty());
}

#[test]
fn cell_traversal_on_two_cell_fixture() {
    let f = fixtures::two_cells();
    let ts = crate::transfers::build_transfers(&f.tt, Execution::Sequential);
    // Entering A from B on `back` reaches `ic2` at a1 after two changes.
    let ibe = f.tt.event(f.back, 1);
    let found = oracle_cell_traversal(&f.tt, &ts, &f.part, 0, ibe, 0);
    assert_eq!(found.get(&f.tt.event(f.intercity[1], 0)), Some(&3));
    // Entering B on `ic1` leaves again on `back` at b2.
    let found = oracle_cell_traversal(&f.tt, &ts, &f.part, 0, f.tt.event(f.intercity[0], 0), 0);
    assert_eq!(found.get(&f.tt.event(f.back, 1)), Some(&2));
    // Raising the rank floor removes every transfer.
    assert!(oracle_cell_traversal(&f.tt, &ts, &f.part, 0, ibe, 1).is_empty());
}
