use std::fs;
use std::path::Path;
use std::process::Command;

use obsrl::harness::{
    parse_records, quantile, run_preset, seed_file, summarize, summarize_records, write_records, ExperimentConfig, Preset,
    Record, RECORDS_HEADER, SUMMARY_HEADER,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use tempfile::tempdir;

fn small_lock(seeds: Vec<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Preset::LockAdmissible);
    c.seeds = seeds;
    c.scale = 0.1;
    c.lock.transitions = 3;
    c.lock.evaluation_episodes = 100;
    c.forward.iterations = 100;
    c
}

fn bytes(dir: &Path, seed: u64) -> Vec<u8> {
    fs::read(seed_file(dir, seed)).unwrap()
}

#[test]
fn a_seed_reproduces_byte_identical_records() {
    for config in [small_lock(vec![7]), {
        let mut c = ExperimentConfig::new(Preset::HardnessOnestep);
        c.seeds = vec![7];
        c
    }] {
        let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
        let ra = run_preset(&config, a.path()).unwrap();
        let rb = run_preset(&config, b.path()).unwrap();
        assert!(ra.failures.is_empty(), "{:?}", ra.failures);
        assert_eq!(bytes(&ra.dir, 7), bytes(&rb.dir, 7));
        let text = String::from_utf8(bytes(&ra.dir, 7)).unwrap();
        assert!(text.starts_with(RECORDS_HEADER));
    }
}

#[test]
fn the_echoed_config_reruns_identically() {
    let first = tempdir().unwrap();
    let report = run_preset(&small_lock(vec![1, 2]), first.path()).unwrap();
    let echoed = ExperimentConfig::from_toml(&fs::read_to_string(report.dir.join("config.toml")).unwrap()).unwrap();
    assert_eq!(echoed.scale, 1.0);
    assert_eq!(echoed.resolve().unwrap(), echoed);
    let second = tempdir().unwrap();
    let again = run_preset(&echoed, second.path()).unwrap();
    for seed in [1, 2] {
        assert_eq!(bytes(&report.dir, seed), bytes(&again.dir, seed));
    }
    assert_eq!(
        fs::read(report.dir.join("summary.csv")).unwrap(),
        fs::read(again.dir.join("summary.csv")).unwrap()
    );
    assert!(fs::read_to_string(report.dir.join("summary.csv")).unwrap().starts_with(SUMMARY_HEADER));
}

fn record(seed: u64, metric: &str, value: f64) -> Record {
    Record { seed, phase: "foobar".into(), step: 0, samples: seed * 10, metric: metric.into(), value }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn summary_ignores_record_order(values in prop::collection::vec(-10.0f64..10.0, 1..30), seed in 0u64..1000) {
        let mut records: Vec<Record> = values
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| [record(i as u64, "a", v), record(i as u64, "b", -v)])
            .collect();
        let before = summarize_records(&records).unwrap();
        records.shuffle(&mut obsrl::rng::stream(seed, "shuffle", 0));
        prop_assert_eq!(before, summarize_records(&records).unwrap());
    }

    #[test]
    fn records_round_trip_through_text(values in prop::collection::vec(-1e6f64..1e6, 0..20)) {
        let records: Vec<Record> = values.iter().enumerate().map(|(i, &v)| record(i as u64, "m", v)).collect();
        prop_assert_eq!(parse_records(&write_records(&records).unwrap()).unwrap(), records);
    }
}

#[test]
fn quartiles_interpolate_between_order_statistics() {
    let values: Vec<f64> = (0..10).map(f64::from).collect();
    assert_eq!(quantile(&values, 0.5).unwrap(), 4.5);
    assert_eq!(quantile(&values, 0.25).unwrap(), 2.25);
    assert_eq!(quantile(&values, 0.75).unwrap(), 6.75);
    let rows = summarize_records(&values.iter().map(|&v| record(v as u64, "m", v)).collect::<Vec<_>>()).unwrap();
    assert_eq!((rows[0].median, rows[0].q25, rows[0].q75, rows[0].n), (4.5, 2.25, 6.75, 10));
}

#[test]
fn a_single_seed_gives_degenerate_quartiles() {
    let rows = summarize_records(&[record(3, "m", 0.25)]).unwrap();
    assert_eq!((rows[0].median, rows[0].q25, rows[0].q75, rows[0].n), (0.25, 0.25, 0.25, 1));
}

#[test]
fn empty_inputs_are_errors() {
    assert!(quantile(&[], 0.5).is_err());
    assert!(summarize_records(&[]).is_err());
    assert!(summarize::<&Path>(&[]).is_err());
}

fn cli() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_obsrl"));
    c.env_remove("OBSRL_OUTPUT_DIR");
    c
}

#[test]
fn cli_exit_codes() {
    let dir = tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = cli().args(["hardness", "--construction", "onestep", "--seeds", "1", "--out", out]).output().unwrap().status;
    assert_eq!(ok.code(), Some(0));
    assert!(dir.path().join("hardness-onestep").join("seed-1.csv").exists());

    let failed = cli()
        .args(["hardness", "--depth", "30", "--runs", "1", "--seeds", "1", "--out", out])
        .output()
        .unwrap();
    assert_eq!(failed.status.code(), Some(1));
    assert!(dir.path().join("hardness-tree").join("seed-1.error.txt").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "garbage").unwrap();
    let config = cli().args(["run-psdp", "--config", bad.to_str().unwrap(), "--out", out]).output().unwrap().status;
    assert_eq!(config.code(), Some(2));
    let scale = cli().args(["run-foobar", "--scale=0", "--seeds", "1", "--out", out]).output().unwrap().status;
    assert_eq!(scale.code(), Some(2));
    let usage = cli().args(["run-foobar", "--preset", "no-such-preset"]).output().unwrap().status;
    assert_eq!(usage.code(), Some(2));
}

#[test]
fn cli_writes_under_the_output_environment_variable() {
    let dir = tempdir().unwrap();
    let status = cli()
        .env("OBSRL_OUTPUT_DIR", dir.path())
        .args(["hardness", "--construction", "onestep", "--seeds", "2"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(dir.path().join("hardness-onestep").join("seed-2.csv").exists());
}

#[test]
fn cli_summarizes_record_files() {
    let dir = tempdir().unwrap();
    let paths: Vec<_> = (0..3u64)
        .map(|s| {
            let p = dir.path().join(format!("seed-{s}.csv"));
            fs::write(&p, write_records(&[record(s, "m", s as f64)]).unwrap()).unwrap();
            p
        })
        .collect();
    let out = cli().arg("summarize").args(&paths).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(SUMMARY_HEADER));
    assert!(text.contains("foobar,0,m,3,10,1,0.5,1.5"), "{text}");
}
