//! Experiment dispatch: build dataset and model from the config, run the
//! selected module, and write trace, metrics, plot, and manifest files.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use statlearn::adaptive_sgd::{train, TrainConfig};
use statlearn::austerity::{approx_mh_chain, exact_mh_chain, AusterityConfig, TestSchedule};
use statlearn::dsgld::{run_dsgld, DsgldConfig, SimSchedule, WorkerSpec};
use statlearn::gps_abc::{
    gps_abc_chain, sl_mh_chain, ExponentialRateSimulator, ExternalSimulator, GaussianLocationSimulator,
    GaussianPrior, GpsAbcConfig, Simulator, SlMhConfig,
};
use statlearn::lsnr::{bootstrap_lsnr, gradient_moments, lsnr_report, CovarianceMode, LsnrConfig, LsnrReport};
use statlearn::models::{ingest_csv, synthetic, CsvSchema, Dataset, GaussianMeanModel, LogisticModel, Minibatch, ObjectiveModel};
use statlearn::numerics::{NoncentralChi2, RngStream};
use statlearn::sgld::{run_sgld, SgldConfig};
use statlearn::trace::ChainTrace;

use crate::config::{DatasetSection, ExperimentConfig, ExperimentKind, ModelSection};
use crate::manifest::ManifestBuilder;
use crate::plot;

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Exit 2: the config cannot be run; lists every violation.
    Config(Vec<String>),
    /// Exit 3: dataset or simulator I/O trouble.
    Data(String),
    /// Exit 4: numeric failure inside a module.
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Numeric(_) => 4,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(v) => {
                writeln!(f, "invalid config ({} problem{}):", v.len(), if v.len() == 1 { "" } else { "s" })?;
                for item in v {
                    writeln!(f, "  - {item}")?;
                }
                Ok(())
            }
            RunError::Data(m) => write!(f, "data error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

fn classify(e: statlearn::Error) -> RunError {
    use statlearn::Error as E;
    match e {
        E::Io(inner) => RunError::Data(inner.to_string()),
        E::MalformedRow { .. } | E::MissingColumn { .. } | E::SimulatorFailed(_) => RunError::Data(e.to_string()),
        E::InvalidConfig(m) => RunError::Config(vec![m]),
        other => RunError::Numeric(other.to_string()),
    }
}

fn io_err(e: std::io::Error) -> RunError {
    RunError::Data(format!("cannot write output: {e}"))
}

type RunResult<T> = Result<T, RunError>;

pub fn validate_only(config: &ExperimentConfig) -> RunResult<()> {
    let v = config.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(RunError::Config(v))
    }
}

/// Run one experiment, writing all artifacts into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> RunResult<()> {
    validate_only(config)?;
    std::fs::create_dir_all(out_dir).map_err(io_err)?;
    let mut manifest = ManifestBuilder::new(config);
    let rng = RngStream::new(config.seed, 0);
    let metrics = match config.kind {
        ExperimentKind::LsnrMonitor => run_lsnr_monitor(config, out_dir, &mut manifest, &rng)?,
        ExperimentKind::AdaptiveSgd => run_adaptive(config, out_dir, &mut manifest, &rng)?,
        ExperimentKind::Sgld => run_sgld_experiment(config, out_dir, &mut manifest, &rng)?,
        ExperimentKind::AusterityMh => run_austerity(config, out_dir, &mut manifest, &rng)?,
        ExperimentKind::SlAbc => run_sl_abc(config, out_dir, &mut manifest, &rng)?,
        ExperimentKind::GpsAbc => run_gps_abc(config, out_dir, &mut manifest, &rng)?,
        ExperimentKind::Dsgld => run_dsgld_experiment(config, out_dir, &mut manifest, &rng)?,
    };
    let text = serde_json::to_string_pretty(&Value::Object(metrics)).expect("metrics serialize");
    std::fs::write(out_dir.join("metrics.json"), text + "\n").map_err(io_err)?;
    manifest.record("metrics.json");
    manifest.write(out_dir).map_err(io_err)?;
    Ok(())
}

fn build_dataset(section: &DatasetSection, seed: u64) -> RunResult<Dataset> {
    match section.source.as_str() {
        "spam-fixture" => Ok(synthetic::spam_fixture(seed)),
        "csv" => {
            let path = section.path.as_ref().expect("validated");
            let data = if section.reduce {
                let full = ingest_csv(path, &synthetic::spambase_schema()).map_err(classify)?;
                synthetic::reduce_spambase(&full, seed).map_err(classify)?
            } else {
                let schema = CsvSchema {
                    has_header: section.has_header,
                    label_column: section.label_column.unwrap_or(0),
                    feature_columns: Vec::new(),
                    standardize: section.standardize,
                };
                ingest_csv(path, &schema).map_err(classify)?
            };
            Ok(data)
        }
        "gaussian" => {
            let mut rng = RngStream::new(seed, 0xDA);
            Ok(synthetic::gaussian_dataset(
                section.n.expect("validated"),
                section.mean.expect("validated"),
                section.sigma2.expect("validated"),
                &mut rng,
            ))
        }
        _ => unreachable!("validated"),
    }
}

fn build_model(section: &ModelSection) -> RunResult<Box<dyn ObjectiveModel>> {
    match section.kind.as_str() {
        "logistic" => Ok(Box::new(LogisticModel)),
        "gaussian-mean" => {
            let m = GaussianMeanModel::new(
                section.sigma2.expect("validated"),
                section.prior_mean.expect("validated"),
                section.prior_var.expect("validated"),
            )
            .map_err(classify)?;
            Ok(Box::new(m))
        }
        _ => unreachable!("validated"),
    }
}

fn data_and_model(config: &ExperimentConfig) -> RunResult<(Dataset, Box<dyn ObjectiveModel>)> {
    let data = build_dataset(config.dataset.as_ref().expect("validated"), config.seed)?;
    let model = build_model(config.model.as_ref().expect("validated"))?;
    Ok((data, model))
}

fn covariance_mode(name: &str) -> CovarianceMode {
    if name == "diagonal" {
        CovarianceMode::Diagonal
    } else {
        CovarianceMode::Full
    }
}

fn json_vec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

fn run_lsnr_monitor(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let section = config.lsnr.as_ref().expect("validated");
    let (data, model) = data_and_model(config)?;
    let lsnr_cfg = LsnrConfig { ridge_tau: section.ridge_tau, mode: covariance_mode(&section.mode), delta: section.delta };
    let batch = Minibatch::from_indices((0..data.len()).collect());
    let mut theta = vec![0.0; model.param_dim(data.dim())];
    let mut reports: Vec<(usize, LsnrReport)> = Vec::new();
    for t in 0..section.iterations {
        let moments = gradient_moments(model.as_ref(), &data, &batch, &theta).map_err(classify)?;
        let report = lsnr_report(&moments, &lsnr_cfg).map_err(classify)?;
        reports.push((t, report));
        for (ti, gi) in theta.iter_mut().zip(moments.mean.iter()) {
            *ti += section.stepsize * gi;
        }
    }

    let mut f = std::fs::File::create(out.join("lsnr_trace.csv")).map_err(io_err)?;
    writeln!(f, "iteration,lsnr,lambda_hat,cdf_at_one,stop").map_err(io_err)?;
    for (t, r) in &reports {
        writeln!(f, "{t},{},{},{},{}", r.lsnr, r.lambda_hat, r.cdf_at_one, r.stop).map_err(io_err)?;
    }
    manifest.record("lsnr_trace.csv");

    let mut f = std::fs::File::create(out.join("cdf_trace.csv")).map_err(io_err)?;
    writeln!(f, "iteration,cdf_at_one").map_err(io_err)?;
    for (t, r) in &reports {
        writeln!(f, "{t},{}", r.cdf_at_one).map_err(io_err)?;
    }
    manifest.record("cdf_trace.csv");

    plot::write_trajectory(&out.join("lsnr_plot.csv"), &reports).map_err(io_err)?;
    manifest.record("lsnr_plot.csv");

    let mut metrics = Map::new();
    metrics.insert("initial_lsnr".into(), json!(reports[0].1.lsnr));
    metrics.insert("final_lsnr".into(), json!(reports.last().expect("nonempty").1.lsnr));
    let stop_iter = reports.iter().find(|(_, r)| r.stop).map(|(t, _)| *t);
    let below_one = reports.iter().find(|(_, r)| r.lsnr < 1.0).map(|(t, _)| *t);
    metrics.insert("stop_iteration".into(), stop_iter.map_or(Value::Null, |t| json!(t)));
    metrics.insert("first_lsnr_below_one".into(), below_one.map_or(Value::Null, |t| json!(t)));

    if section.bootstrap > 0 {
        let mut boot_rng = rng.substream(2);
        let values =
            bootstrap_lsnr(model.as_ref(), &data, &theta, section.bootstrap, &lsnr_cfg, &mut boot_rng).map_err(classify)?;
        let mut f = std::fs::File::create(out.join("bootstrap.csv")).map_err(io_err)?;
        writeln!(f, "value").map_err(io_err)?;
        for v in &values {
            writeln!(f, "{v}").map_err(io_err)?;
        }
        manifest.record("bootstrap.csv");
        let bins = plot::histogram(&values, section.bins);
        plot::write_histogram(&out.join("histogram.csv"), &bins).map_err(io_err)?;
        manifest.record("histogram.csv");
        let last = reports.last().expect("nonempty").1;
        let dist = NoncentralChi2::new(last.dof, last.lambda_hat).map_err(classify)?;
        plot::write_density_grid(&out.join("density.csv"), &dist, &bins, values.len(), 200).map_err(io_err)?;
        manifest.record("density.csv");
        metrics.insert("bootstrap_count".into(), json!(values.len()));
    }
    Ok(metrics)
}

fn run_adaptive(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let section = config.adaptive.as_ref().expect("validated");
    let (data, model) = data_and_model(config)?;
    let cfg = TrainConfig {
        initial_batch: section.initial_batch,
        growth_factor: section.growth_factor,
        stepsize: section.stepsize,
        max_iterations: section.max_iterations,
        check_period: section.check_period,
        lsnr: LsnrConfig { ridge_tau: section.ridge_tau, mode: covariance_mode(&section.mode), delta: section.delta },
    };
    let init = vec![0.0; model.param_dim(data.dim())];
    let mut train_rng = rng.substream(1);
    let trace = train(model.as_ref(), &data, &cfg, &init, &mut train_rng).map_err(classify)?;

    let mut f = std::fs::File::create(out.join("train_trace.csv")).map_err(io_err)?;
    writeln!(f, "iteration,batch_size,objective,lsnr,cdf_at_one,stop").map_err(io_err)?;
    for r in &trace.records {
        match &r.report {
            Some(rep) => writeln!(
                f,
                "{},{},{},{},{},{}",
                r.iteration, r.batch_size, r.objective, rep.lsnr, rep.cdf_at_one, rep.stop
            )
            .map_err(io_err)?,
            None => writeln!(f, "{},{},{},,,", r.iteration, r.batch_size, r.objective).map_err(io_err)?,
        }
    }
    manifest.record("train_trace.csv");

    let mut metrics = Map::new();
    metrics.insert("stop_reason".into(), json!(trace.reason.as_str()));
    metrics.insert("iterations".into(), json!(trace.records.len()));
    metrics.insert("final_objective".into(), json!(trace.records.last().expect("nonempty").objective));
    metrics.insert("final_batch_size".into(), json!(trace.records.last().expect("nonempty").batch_size));
    metrics.insert("final_theta".into(), json_vec(&trace.final_theta));
    Ok(metrics)
}

fn write_chain_csv(path: &Path, trace: &ChainTrace, columns: &[&str]) -> std::io::Result<()> {
    let dim = trace.dim();
    let mut f = std::fs::File::create(path)?;
    let theta_cols: Vec<String> = (0..dim).map(|i| format!("theta_{i}")).collect();
    writeln!(f, "iteration,{}{}{}", theta_cols.join(","), if columns.is_empty() { "" } else { "," }, columns.join(","))?;
    for (t, step) in trace.steps.iter().enumerate() {
        let theta: Vec<String> = step.theta.iter().map(|v| v.to_string()).collect();
        let mut row = format!("{t},{}", theta.join(","));
        for &c in columns {
            row.push(',');
            match c {
                "stepsize" => row.push_str(&step.stepsize.map_or(String::new(), |v| v.to_string())),
                "verdict" => row.push_str(step.accepted.map_or("", |a| if a { "accept" } else { "reject" })),
                "accepted" => row.push_str(step.accepted.map_or("", |a| if a { "true" } else { "false" })),
                "n_used" => row.push_str(&step.n_used.map_or(String::new(), |v| v.to_string())),
                "error_estimate" => row.push_str(&step.error_estimate.map_or(String::new(), |v| v.to_string())),
                "sim_calls" => row.push_str(&step.sim_calls.map_or(String::new(), |v| v.to_string())),
                "forced" => row.push_str(if step.forced { "true" } else { "false" }),
                other => unreachable!("unknown column {other}"),
            }
        }
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn chain_metrics(trace: &ChainTrace) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("samples".into(), json!(trace.len()));
    m.insert("posterior_mean".into(), json_vec(&trace.sample_mean()));
    m.insert("posterior_variance".into(), json_vec(&trace.sample_variance()));
    let decisions: Vec<bool> = trace.steps.iter().filter_map(|s| s.accepted).collect();
    if !decisions.is_empty() {
        let acc = decisions.iter().filter(|&&a| a).count() as f64 / decisions.len() as f64;
        m.insert("acceptance_rate".into(), json!(acc));
    }
    m
}

fn run_sgld_experiment(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let section = config.sgld.as_ref().expect("validated");
    let (data, model) = data_and_model(config)?;
    let cfg = sgld_config(section);
    let init = section.init_theta.clone().unwrap_or_else(|| vec![0.0; model.param_dim(data.dim())]);
    let trace = run_sgld(model.as_ref(), &data, &cfg, &init, rng).map_err(classify)?;
    write_chain_csv(&out.join("chain.csv"), &trace, &["stepsize"]).map_err(io_err)?;
    manifest.record("chain.csv");
    Ok(chain_metrics(&trace))
}

fn sgld_config(section: &crate::config::SgldSection) -> SgldConfig {
    SgldConfig {
        a: section.a,
        b: section.b,
        gamma: section.gamma,
        eps_min: section.eps_min,
        batch_size: section.batch_size,
        iterations: section.iterations,
        burn_in: section.burn_in,
        precondition: section.precondition,
        precond_window: section.precond_window,
        ridge_tau: 1e-8,
    }
}

fn run_austerity(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let section = config.austerity.as_ref().expect("validated");
    let (data, model) = data_and_model(config)?;
    let cfg = AusterityConfig {
        eps_conf: section.eps_conf,
        schedule: TestSchedule { init_frac: section.init_frac, growth: section.growth },
        proposal_std: section.proposal_std,
        iterations: section.iterations,
        burn_in: section.burn_in,
    };
    let init = section.init_theta.clone().unwrap_or_else(|| vec![0.0; model.param_dim(data.dim())]);
    let trace = if section.exact {
        exact_mh_chain(model.as_ref(), &data, &cfg, &init, rng).map_err(classify)?
    } else {
        approx_mh_chain(model.as_ref(), &data, &cfg, &init, rng).map_err(classify)?
    };
    write_chain_csv(&out.join("chain.csv"), &trace, &["verdict", "n_used", "error_estimate"]).map_err(io_err)?;
    manifest.record("chain.csv");
    let mut metrics = chain_metrics(&trace);
    let used: Vec<usize> = trace.steps.iter().filter_map(|s| s.n_used).collect();
    if !used.is_empty() {
        let frac = used.iter().sum::<usize>() as f64 / (used.len() * data.len()) as f64;
        metrics.insert("mean_batch_fraction".into(), json!(frac));
    }
    Ok(metrics)
}

fn build_simulator(section: &crate::config::AbcSection) -> Box<dyn Simulator> {
    match section.simulator.as_str() {
        "gaussian-location" => Box::new(GaussianLocationSimulator { noise_std: section.noise_std.expect("validated") }),
        "exponential-rate" => Box::new(ExponentialRateSimulator { inner_draws: section.inner_draws.expect("validated") }),
        "external" => Box::new(ExternalSimulator {
            program: section.program.clone().expect("validated"),
            args: section.args.clone(),
            stat_dim: section.stat_dim.expect("validated"),
        }),
        _ => unreachable!("validated"),
    }
}

fn abc_setup(section: &crate::config::AbcSection) -> (Box<dyn Simulator>, GaussianPrior, Vec<f64>) {
    let prior = GaussianPrior { mean: section.prior_mean.clone(), std: section.prior_std.clone() };
    let init = section.init_theta.clone().unwrap_or_else(|| section.prior_mean.clone());
    (build_simulator(section), prior, init)
}

fn run_sl_abc(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let section = config.abc.as_ref().expect("validated");
    let (simulator, prior, init) = abc_setup(section);
    let cfg = SlMhConfig {
        s_count: section.s_count,
        iterations: section.iterations,
        burn_in: section.burn_in,
        proposal_std: section.proposal_std,
        refresh_current: section.refresh_current,
        ridge_tau: 1e-10,
    };
    let trace = sl_mh_chain(simulator.as_ref(), &prior, &section.observed, &cfg, &init, rng).map_err(classify)?;
    write_chain_csv(&out.join("chain.csv"), &trace, &["accepted", "sim_calls"]).map_err(io_err)?;
    manifest.record("chain.csv");
    let mut metrics = chain_metrics(&trace);
    metrics.insert("total_sim_calls".into(), json!(trace.total_sim_calls()));
    Ok(metrics)
}

fn run_gps_abc(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let section = config.abc.as_ref().expect("validated");
    let (simulator, prior, init) = abc_setup(section);
    let cfg = GpsAbcConfig {
        xi: section.xi,
        mc_rounds: section.mc_rounds,
        iterations: section.iterations,
        burn_in: section.burn_in,
        proposal_std: section.proposal_std,
        init_points: section.init_points,
        init_sims: section.init_sims,
        acquire_batch: section.acquire_batch,
        max_acquisitions: section.max_acquisitions,
    };
    let (trace, store) =
        gps_abc_chain(simulator.as_ref(), &prior, &section.observed, &cfg, &init, rng).map_err(classify)?;
    write_chain_csv(&out.join("chain.csv"), &trace, &["accepted", "error_estimate", "sim_calls", "forced"])
        .map_err(io_err)?;
    manifest.record("chain.csv");
    let mut metrics = chain_metrics(&trace);
    metrics.insert("total_sim_calls".into(), json!(trace.total_sim_calls()));
    metrics.insert("stored_simulations".into(), json!(store.len()));
    metrics.insert("forced_decisions".into(), json!(trace.steps.iter().filter(|s| s.forced).count()));
    Ok(metrics)
}

fn run_dsgld_experiment(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut ManifestBuilder,
    rng: &RngStream,
) -> RunResult<Map<String, Value>> {
    let sgld_section = config.sgld.as_ref().expect("validated");
    let section = config.dsgld.as_ref().expect("validated");
    let (data, model) = data_and_model(config)?;
    let workers: Vec<WorkerSpec> = section
        .workers
        .iter()
        .map(|w| WorkerSpec { shard_start: w.start, shard_end: w.end, speed: w.speed })
        .collect();
    let cfg = DsgldConfig {
        sgld: sgld_config(sgld_section),
        schedule: SimSchedule { round_length: section.round_length, rounds: section.rounds },
        compensate: section.compensate,
        chains: section.chains,
    };
    let init = sgld_section.init_theta.clone().unwrap_or_else(|| vec![0.0; model.param_dim(data.dim())]);
    let result = run_dsgld(model.as_ref(), &data, &workers, &cfg, &init, rng).map_err(classify)?;

    for (c, trace) in result.traces.iter().enumerate() {
        let name = format!("chain_{c}.csv");
        write_chain_csv(&out.join(&name), trace, &["stepsize"]).map_err(io_err)?;
        manifest.record(&name);
    }
    let mut f = std::fs::File::create(out.join("events.jsonl")).map_err(io_err)?;
    for e in &result.events {
        let line = serde_json::to_string(&json!({
            "round": e.round,
            "chain": e.chain,
            "worker": e.worker,
            "steps": e.steps,
            "scale": e.stepsize_scale,
        }))
        .expect("event serializes");
        writeln!(f, "{line}").map_err(io_err)?;
    }
    manifest.record("events.jsonl");

    // pooled posterior moments across chains
    let mut metrics = Map::new();
    let dim = result.traces[0].dim();
    let mut acc = vec![0.0; dim];
    let mut acc2 = vec![0.0; dim];
    let mut n = 0.0;
    for trace in &result.traces {
        for step in &trace.steps {
            for (i, &v) in step.theta.iter().enumerate() {
                acc[i] += v;
                acc2[i] += v * v;
            }
            n += 1.0;
        }
    }
    let mean: Vec<f64> = acc.iter().map(|a| a / n).collect();
    let var: Vec<f64> = acc2.iter().zip(&mean).map(|(a, m)| a / n - m * m).collect();
    metrics.insert("chains".into(), json!(result.traces.len()));
    metrics.insert("samples_per_chain".into(), json!(result.traces[0].len()));
    metrics.insert("posterior_mean".into(), json_vec(&mean));
    metrics.insert("posterior_variance".into(), json_vec(&var));
    Ok(metrics)
}

/// Output directory resolution: CLI flag, then config, then `./out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}
