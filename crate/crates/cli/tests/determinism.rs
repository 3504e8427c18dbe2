//! End-to-end runs of the binary: manifest contents, config hashing,
//! seed overrides, validation exit codes, and the external simulator
//! protocol. The byte-replay gate lives in the acceptance target.

mod common;

use common::{binary, config_for, dataset_and_model, file_names, run};
use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

#[test]
fn manifest_matches_directory_contents() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    std::fs::write(&config_path, config_for("lsnr-monitor")).unwrap();
    let out = dir.path().join("out");
    run(&config_path, &out);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let listed: BTreeSet<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(listed, file_names(&out));
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    // expected artifact set for the monitor with bootstrap enabled
    for name in ["lsnr_trace.csv", "cdf_trace.csv", "lsnr_plot.csv", "bootstrap.csv", "histogram.csv", "density.csv", "metrics.json"] {
        assert!(listed.contains(name), "missing {name}");
    }
}

#[test]
fn config_hash_stable_under_key_reordering() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    std::fs::write(&a, "kind = \"sgld\"\nseed = 5\n".to_string() + dataset_and_model() + "\n[sgld]\na = 0.001\nbatch_size = 10\niterations = 20\n").unwrap();
    // same config, sections and keys permuted
    std::fs::write(
        &b,
        "seed = 5\nkind = \"sgld\"\n\n[sgld]\niterations = 20\na = 0.001\nbatch_size = 10\n".to_string()
            + "\n[model]\nprior_var = 10.0\nkind = \"gaussian-mean\"\nsigma2 = 1.0\nprior_mean = 0.0\n"
            + "\n[dataset]\nsigma2 = 1.0\nsource = \"gaussian\"\nmean = 1.0\nn = 200\n",
    )
    .unwrap();
    let out_a = dir.path().join("out-a");
    let out_b = dir.path().join("out-b");
    run(&a, &out_a);
    run(&b, &out_b);
    let hash = |p: &Path| {
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        m["config_hash"].as_str().unwrap().to_string()
    };
    assert_eq!(hash(&out_a), hash(&out_b));
}

#[test]
fn seed_override_changes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    std::fs::write(&config_path, config_for("sgld")).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run(&config_path, &out_a);
    let status = Command::new(binary())
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out_b)
        .args(["--seed", "78"])
        .status()
        .unwrap();
    assert!(status.success());
    let a = std::fs::read(out_a.join("chain.csv")).unwrap();
    let b = std::fs::read(out_b.join("chain.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn exit_codes_for_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    // missing dataset path names the key
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "kind = \"sgld\"\nseed = 1\n\n[dataset]\nsource = \"csv\"\npath = \"/nonexistent/data.csv\"\n\n\
         [model]\nkind = \"logistic\"\n\n[sgld]\na = 0.01\nbatch_size = 10\niterations = 10\n",
    )
    .unwrap();
    let out = Command::new(binary()).args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dataset.path"), "stderr: {stderr}");

    // unreadable config file
    let out = Command::new(binary()).args(["validate", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // all violations listed at once
    let multi = dir.path().join("multi.toml");
    std::fs::write(
        &multi,
        "kind = \"sgld\"\nseed = 1\n\n[dataset]\nsource = \"gaussian\"\nn = 0\nmean = 1.0\nsigma2 = -1.0\n\n\
         [model]\nkind = \"gaussian-mean\"\nsigma2 = 1.0\nprior_mean = 0.0\nprior_var = 1.0\n\n\
         [sgld]\na = 0.0\nbatch_size = 0\niterations = 0\n",
    )
    .unwrap();
    let out = Command::new(binary()).args(["validate", "--config"]).arg(&multi).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for key in ["dataset.n", "dataset.sigma2", "sgld.a", "sgld.batch_size", "sgld.iterations"] {
        assert!(stderr.contains(key), "missing {key} in: {stderr}");
    }
}

#[test]
fn external_simulator_round_trips_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    std::fs::write(
        &config_path,
        "kind = \"sl-abc\"\nseed = 3\n\n[abc]\nsimulator = \"external\"\nprogram = \"/bin/cat\"\nstat_dim = 1\n\
         observed = [0.5]\nprior_mean = [0.0]\nprior_std = [1.0]\ns_count = 5\niterations = 10\nproposal_std = 0.3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    run(&config_path, &out);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["total_sim_calls"].as_u64(), Some(50));
}
