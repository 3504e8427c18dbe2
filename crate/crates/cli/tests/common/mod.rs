//! Helpers shared by the end-to-end test targets: minimal configs for every
//! experiment kind and wrappers around the compiled binary.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

pub const KINDS: [&str; 7] =
    ["lsnr-monitor", "adaptive-sgd", "sgld", "austerity-mh", "sl-abc", "gps-abc", "dsgld"];

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_statlearn")
}

pub fn run(config: &Path, out: &Path) {
    let status = Command::new(binary())
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    assert!(status.success(), "run failed for {}", config.display());
}

pub fn dataset_and_model() -> &'static str {
    r#"
[dataset]
source = "gaussian"
n = 200
mean = 1.0
sigma2 = 1.0

[model]
kind = "gaussian-mean"
sigma2 = 1.0
prior_mean = 0.0
prior_var = 10.0
"#
}

pub fn config_for(kind: &str) -> String {
    let mut text = format!("kind = \"{kind}\"\nseed = 77\n");
    match kind {
        "lsnr-monitor" => {
            text.push_str(dataset_and_model());
            text.push_str("\n[lsnr]\niterations = 5\nstepsize = 0.002\nbootstrap = 50\nbins = 10\n");
        }
        "adaptive-sgd" => {
            text.push_str(dataset_and_model());
            text.push_str("\n[adaptive]\ninitial_batch = 20\nstepsize = 0.002\nmax_iterations = 40\n");
        }
        "sgld" => {
            text.push_str(dataset_and_model());
            text.push_str("\n[sgld]\na = 0.001\nbatch_size = 10\niterations = 200\n");
        }
        "austerity-mh" => {
            text.push_str(dataset_and_model());
            text.push_str("\n[austerity]\nproposal_std = 0.2\niterations = 100\n");
        }
        "sl-abc" => {
            text.push_str(
                "\n[abc]\nsimulator = \"gaussian-location\"\nnoise_std = 0.5\nobserved = [1.0]\n\
                 prior_mean = [0.0]\nprior_std = [2.0]\ns_count = 10\niterations = 50\n",
            );
        }
        "gps-abc" => {
            text.push_str(
                "\n[abc]\nsimulator = \"gaussian-location\"\nnoise_std = 0.5\nobserved = [1.0]\n\
                 prior_mean = [0.0]\nprior_std = [2.0]\niterations = 50\nmc_rounds = 100\n\
                 init_points = 5\ninit_sims = 3\n",
            );
        }
        "dsgld" => {
            text.push_str(dataset_and_model());
            text.push_str("\n[sgld]\na = 0.001\nbatch_size = 10\niterations = 200\n");
            text.push_str(
                "\n[dsgld]\nround_length = 5.0\nrounds = 10\nworkers = [\n\
                 { start = 0, end = 100, speed = 1.0 },\n\
                 { start = 100, end = 200, speed = 1.0 },\n]\n",
            );
        }
        other => panic!("unknown kind {other}"),
    }
    text
}

pub fn file_names(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect()
}
