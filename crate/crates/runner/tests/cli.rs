use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bnp(config: &Path, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bnp"));
    cmd.env_remove("BNP_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let sub = extra[0];
    cmd.arg(sub).arg("--config").arg(config).args(&extra[1..]);
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every output file keyed by name, with the wall time stripped from the manifest.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let mut bytes = fs::read(&p).unwrap();
            if name == "manifest.json" {
                let mut v: Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("wall_time_seconds");
                bytes = v.to_string().into_bytes();
            }
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "prior.json",
        json!({
            "seed": 17,
            "replicates": 64,
            "distribution": {"kind": "bondesson", "K": 20, "params": {"gamma": 2, "alpha": 1}},
        }),
    );
    let mut snaps = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = bnp(&cfg, &["sample-prior", "--out", out.to_str().unwrap(), "--threads", threads], &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        snaps.push(snapshot(&out));
    }
    assert_eq!(snaps[0], snaps[1]);
    assert_eq!(snaps[1], snaps[2]);
    assert!(snaps[0].iter().all(|(n, _)| !n.ends_with(".tmp")));
}

#[test]
fn seed_override_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        json!({"seed": 1, "out": "o", "distribution": {"kind": "fsd", "K": 3, "params": {"gamma": 1}}}),
    );
    let seed_of = |extra: &[&str], envs: &[(&str, &str)]| {
        let mut args = vec!["sample-prior"];
        args.extend_from_slice(extra);
        let o = bnp(&cfg, &args, envs);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        read_json(&dir.path().join("o/manifest.json"))["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], &[]), 1);
    assert_eq!(seed_of(&[], &[("BNP_SEED", "5")]), 5);
    assert_eq!(seed_of(&["--seed", "9"], &[("BNP_SEED", "5")]), 9);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", json!({"seed": 1, "out": "o", "alpha": 1, "N": 3, "K": [2], "extra": 0}));
    let o = bnp(&unknown, &["eppf-convergence"], &[]);
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("extra"));

    let no_seed = write_config(dir.path(), "s.json", json!({"out": "o", "alpha": 1, "N": 3, "K": [2]}));
    assert_eq!(code(&bnp(&no_seed, &["eppf-convergence"], &[])), 2);

    let missing = dir.path().join("absent.json");
    assert_eq!(code(&bnp(&missing, &["eppf-convergence"], &[])), 2);
}

#[test]
fn failed_checks_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.json", json!({"seed": 1, "out": "o", "gamma": 1, "k_min": 1, "k_max": 3}));
    let o = bnp(&cfg, &["bounds-table"], &[]);
    assert_eq!(code(&o), 1);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["failures"][0].as_str().unwrap().starts_with("K=1"));
    let csv = fs::read_to_string(dir.path().join("o/bounds.csv")).unwrap();
    assert!(csv.starts_with("name,N,K,gamma,alpha,value\n"));

    let ok = write_config(dir.path(), "b2.json", json!({"seed": 1, "out": "o2", "gamma": 1, "k_min": 2, "k_max": 30}));
    assert_eq!(code(&bnp(&ok, &["bounds-table"], &[])), 0);
}

#[test]
fn gamma_poisson_preset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        json!({"seed": 1, "out": "o", "model": {"family": "gamma_poisson", "gamma": 1, "rate": 1}, "n_max": 300, "K": [10, 100]}),
    );
    let o = bnp(&cfg, &["check-conditions"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("o/condition_report.json"));
    assert_eq!(report["report"]["pass"], json!(true));
    assert_eq!(report["report"]["inequalities"].as_array().unwrap().len(), 4);
}

#[test]
fn eppf_gaps_decay_like_one_over_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", json!({"seed": 1, "out": "o", "alpha": 1, "N": 4, "K": [4, 16, 64, 256]}));
    let o = bnp(&cfg, &["eppf-convergence"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&dir.path().join("o/summary.json"));
    let slopes = summary["slopes"].as_object().unwrap();
    assert_eq!(slopes.len(), 5);
    assert!(slopes.values().all(|s| (s.as_f64().unwrap() + 1.0).abs() <= 0.3));
    let rows = fs::read_to_string(dir.path().join("o/eppf_convergence.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 5 * 4);
}

#[test]
fn two_atom_dirichlet_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "f.json",
        json!({"seed": 8, "replicates": 4000, "out": "o", "csv_replicates": 2,
               "distribution": {"kind": "fsd", "K": 2, "params": {"gamma": 1}}}),
    );
    assert_eq!(code(&bnp(&cfg, &["sample-prior"], &[])), 0);
    let s = read_json(&dir.path().join("o/summary.json"));
    let first = &s["first_weight"];
    let (m, se) = (first["mean"].as_f64().unwrap(), first["standard_error"].as_f64().unwrap());
    assert!((m - 0.5).abs() < 4.0 * se, "{m} ± {se}");
    assert!((s["total_mass"]["mean"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let csv = fs::read_to_string(dir.path().join("o/weights.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}

#[test]
fn synthetic_data_feeds_gibbs_run() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_config(
        dir.path(),
        "s.json",
        json!({"seed": 2, "out": "data", "N": 40, "D": 3, "features": 2, "feature_probability": 0.5,
               "noise_sd": 0.1, "heldout": 8}),
    );
    assert_eq!(code(&bnp(&synth, &["synth-data"], &[])), 0);
    // data paths resolve against the config directory
    let gibbs = write_config(
        dir.path(),
        "g.json",
        json!({"seed": 3, "replicates": 2, "out": "chains",
               "model": {"D": 3, "gamma": 1, "alpha": 1, "K": 4}, "prior_kind": "bondesson_tfa",
               "sweeps": 20, "burnin": 5, "thin": 5,
               "data_path": "data/data.csv", "heldout_path": "data/heldout.csv"}),
    );
    let o = bnp(&gibbs, &["gibbs-run"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(dir.path().join("chains/chain_1_trace.csv")).unwrap();
    assert!(trace.starts_with("sweep,stat_name,value\n"));
    assert_eq!(trace.lines().count(), 1 + 20 * 7);
    let summary = read_json(&dir.path().join("chains/summary.json"));
    assert!(summary["chains"][0]["heldout_log_likelihood"].as_f64().unwrap().is_finite());
    let checkpoint = read_json(&dir.path().join("chains/chain_0_checkpoint.json"));
    assert!(checkpoint.is_object());
}

#[test]
fn ragged_data_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "row,dim,value\n0,0,1.0\n0,1,2.0\n1,0,3.0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        json!({"seed": 3, "out": "o", "model": {"D": 2, "gamma": 1, "alpha": 1, "K": 2},
               "prior_kind": "aifa", "sweeps": 2, "burnin": 1, "data_path": "d.csv"}),
    );
    let o = bnp(&cfg, &["gibbs-run"], &[]);
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["kind"], json!("data"));
}
