use super::*;
use crate::par::Execution;
use crate::query::{Algorithm, Query, QueryEngine};
use crate::refkit::{build_instance, gen_synthetic, Instance, SyntheticSpec};

fn instance() -> Instance {
    let tt = gen_synthetic(&SyntheticSpec { stops: 60, lines: 14, trips_per_line: 5, clusters: 3, seed: 7, ..SyntheticSpec::default() })
        .unwrap();
    build_instance(tt, 3, 0.25, 7, Execution::Sequential)
}

fn full_state(inst: &Instance) -> EngineState {
    EngineState {
        timetable: Some(inst.tt.clone()),
        transfers: Some(inst.ts.clone()),
        partition: Some(inst.part.clone()),
        customization: Some(inst.cust.clone()),
    }
}

#[test]
fn round_trip_preserves_every_stage() {
    let inst = instance();
    let state = full_state(&inst);
    let back = from_bytes(&to_bytes(&state)).unwrap();
    assert_eq!(back, state);
}

#[test]
fn partial_states_round_trip() {
    let inst = instance();
    let ingest = EngineState { timetable: Some(inst.tt.clone()), ..EngineState::default() };
    assert_eq!(from_bytes(&to_bytes(&ingest)).unwrap(), ingest);

    let mut uncustomized = inst.ts.clone();
    uncustomized.set_ranks(vec![0; uncustomized.len()]);
    let partitioned = EngineState {
        timetable: Some(inst.tt.clone()),
        transfers: Some(uncustomized),
        partition: Some(inst.part.clone()),
        customization: None,
    };
    let back = from_bytes(&to_bytes(&partitioned)).unwrap();
    assert_eq!(back, partitioned);
    assert!(matches!(back.require(&Stage::Customize.up_to()), Err(SnapshotError::MissingStage(Stage::Customize))));
}

#[test]
fn truncated_file_is_a_checksum_error() {
    let bytes = to_bytes(&full_state(&instance()));
    for cut in [bytes.len() - 1, bytes.len() / 2, 20] {
        assert!(matches!(from_bytes(&bytes[..cut]), Err(SnapshotError::Checksum { .. })), "cut at {cut}");
    }
}

#[test]
fn flipped_payload_byte_is_a_checksum_error() {
    let mut bytes = to_bytes(&full_state(&instance()));
    let last = bytes.len() - 1;
    bytes[last] ^= 0x5a;
    assert!(matches!(from_bytes(&bytes), Err(SnapshotError::Checksum { .. })));
}

#[test]
fn bad_magic_and_version_are_rejected() {
    let mut bytes = to_bytes(&EngineState::default());
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(matches!(from_bytes(&wrong), Err(SnapshotError::BadMagic)));
    bytes[4..8].copy_from_slice(&(VERSION + 1).to_le_bytes());
    assert!(matches!(from_bytes(&bytes), Err(SnapshotError::Version { found }) if found == VERSION + 1));
}

#[test]
fn load_reports_missing_stage() {
    let inst = instance();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tt.snap");
    save(&path, &EngineState { timetable: Some(inst.tt.clone()), ..EngineState::default() }).unwrap();
    assert!(load(&path, &[Stage::Ingest]).is_ok());
    let err = load(&path, &Stage::Customize.up_to()).unwrap_err();
    assert!(matches!(err, SnapshotError::MissingStage(Stage::Transfers)));
}

#[test]
fn loaded_state_answers_queries_identically() {
    let inst = instance();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("full.snap");
    save(&path, &full_state(&inst)).unwrap();
    let state = load(&path, &Stage::Customize.up_to()).unwrap();
    let n = inst.tt.stop_count() as u32;
    for alg in Algorithm::ALL {
        let mut before = QueryEngine::new(alg, &inst.tt, &inst.ts, Some(&inst.part), Some(&inst.cust)).unwrap();
        let mut after = QueryEngine::new(
            alg,
            state.timetable().unwrap(),
            state.transfers().unwrap(),
            Some(state.partition().unwrap()),
            Some(state.customization().unwrap()),
        )
        .unwrap();
        for i in 0..20u32 {
            let q = Query { source: (i * 7) % n, target: (i * 13 + 5) % n, departure: 6 * 3600 + i * 600 };
            assert_eq!(before.query(&q).unwrap().front, after.query(&q).unwrap().front);
        }
    }
}
