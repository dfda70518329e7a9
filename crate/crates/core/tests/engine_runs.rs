mod common;

use cellgrid::semi::TripLabel;
use cellgrid::{synth, Engine, EngineConfig, ModelSnapshot, SynthConfig, SynthDataset};
use common::*;

fn small() -> SynthDataset {
    synth::gen_dataset(&SynthConfig {
        n_ports: 8,
        n_train_trips: 80,
        n_eval_trips: 20,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn config(semi: bool) -> EngineConfig {
    EngineConfig {
        eta_granularity: 0.05,
        semi_supervised: semi,
        ..EngineConfig::default()
    }
}

fn trained(ds: &SynthDataset, semi: bool) -> Engine {
    let mut e = Engine::new(config(semi), ds.ports.clone()).unwrap();
    e.train_all(&ds.train_records()).unwrap();
    e
}

#[test]
fn prediction_leaves_models_alone_when_relabelling_is_off() {
    let ds = small();
    let mut e = trained(&ds, false);
    let before = e.model_bytes().unwrap();
    for r in ds.eval_records() {
        e.predict(&r).unwrap();
    }
    e.finish().unwrap();
    assert_eq!(e.model_bytes().unwrap(), before);
    assert!(e.committed_trips().is_empty());
}

#[test]
fn relabelling_is_deterministic_and_conserves_counts() {
    let ds = small();
    let run = || {
        let mut e = trained(&ds, true);
        let start = e.dest_model().trained;
        let preds: Vec<_> = ds
            .eval_records()
            .iter()
            .map(|r| e.predict(r).unwrap())
            .collect();
        e.finish().unwrap();
        (e, start, preds)
    };
    let (a, start, preds_a) = run();
    let (b, _, preds_b) = run();
    assert_eq!(a.committed_trips(), b.committed_trips());
    assert_eq!(preds_a, preds_b);
    assert_eq!(a.model_bytes().unwrap(), b.model_bytes().unwrap());

    let trips = a.committed_trips();
    assert_eq!(
        trips.len(),
        ds.eval.len(),
        "every eval trip ends inside a port"
    );
    let accepted: usize = trips.iter().map(|t| t.accepted).sum();
    assert_eq!(a.dest_model().trained, start + accepted as u64);
    assert_eq!(a.eta_model().trained, a.dest_model().trained);
    for t in trips {
        let truth = ds.eval.iter().find(|x| x.ship_id == t.ship_id).unwrap();
        assert_eq!(t.accepted + t.rejected, truth.records.len());
    }
}

#[test]
fn late_records_are_rejected_on_commit() {
    let reg = ports(&[("CEUTA", 35.89, -5.31)]);
    let mut e = Engine::new(config(true), reg).unwrap();
    e.train(&labeled(record(35.5, -5.5, 40.0), "CEUTA", 9_000))
        .unwrap();
    let mut at_sea = record(35.5, -5.5, 40.0);
    at_sea.timestamp = 1_000;
    let mut inside = record(35.89, -5.31, 40.0);
    inside.timestamp = 2_000;
    let mut drift = record(35.891, -5.311, 40.0);
    drift.timestamp = 2_600;
    for r in [&at_sea, &inside, &drift] {
        e.predict(r).unwrap();
    }
    let before = e.dest_model().trained;
    e.commit_trip(
        "S1",
        &TripLabel {
            destination: "CEUTA".into(),
            arrival: 2_000,
        },
    )
    .unwrap();
    let t = &e.committed_trips()[0];
    assert_eq!((t.accepted, t.rejected), (2, 1));
    assert_eq!(e.dest_model().trained, before + 2);
    // nothing left to commit
    e.commit_trip(
        "S1",
        &TripLabel {
            destination: "CEUTA".into(),
            arrival: 2_000,
        },
    )
    .unwrap();
    assert_eq!(e.committed_trips().len(), 1);
}

#[test]
fn snapshot_round_trip() {
    let ds = small();
    let e = trained(&ds, false);
    let bytes = e.snapshot().to_bytes().unwrap();
    let back = ModelSnapshot::from_bytes(&bytes).unwrap();
    assert_eq!(back, e.snapshot());
    let mut restored = Engine::from_snapshot(back, None).unwrap();
    let mut original = trained(&ds, false);
    for r in ds.eval_records() {
        assert_eq!(restored.predict(&r).unwrap(), original.predict(&r).unwrap());
    }
    assert!(ModelSnapshot::from_bytes(b"not a snapshot").is_err());
    let mut wrong_version = bytes.clone();
    wrong_version[8] = 9;
    assert!(ModelSnapshot::from_bytes(&wrong_version).is_err());
}

#[test]
fn untrained_engine_refuses_to_predict() {
    let mut e = Engine::new(config(false), ports(&[("CEUTA", 35.89, -5.31)])).unwrap();
    assert!(matches!(
        e.predict(&record(35.5, -5.5, 40.0)),
        Err(cellgrid::Error::NoModel)
    ));
    let mut empty = Engine::new(config(false), Default::default()).unwrap();
    assert!(matches!(
        empty.predict(&record(35.5, -5.5, 40.0)),
        Err(cellgrid::Error::EmptyRegistry)
    ));
}

#[test]
fn single_precision_engine_runs() {
    let ds = synth::gen_dataset(&cellgrid::single::SynthConfig {
        n_ports: 6,
        n_train_trips: 30,
        n_eval_trips: 5,
        ..Default::default()
    })
    .unwrap();
    let mut e = cellgrid::single::Engine::new(
        cellgrid::single::EngineConfig {
            eta_granularity: 0.05,
            ..Default::default()
        },
        ds.ports.clone(),
    )
    .unwrap();
    e.train_all(&ds.train_records()).unwrap();
    for r in ds.eval_records() {
        let p = e.predict(&r).unwrap();
        assert!(ds.ports.get(&p.port).is_some());
    }
}
