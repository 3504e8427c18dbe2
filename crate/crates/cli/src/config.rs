//! Experiment configuration: a flat-sectioned TOML file with one section
//! per concern. Validation collects every violation instead of stopping at
//! the first.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LsnrMonitor,
    AdaptiveSgd,
    Sgld,
    AusterityMh,
    SlAbc,
    GpsAbc,
    Dsgld,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LsnrMonitor => "lsnr-monitor",
            Self::AdaptiveSgd => "adaptive-sgd",
            Self::Sgld => "sgld",
            Self::AusterityMh => "austerity-mh",
            Self::SlAbc => "sl-abc",
            Self::GpsAbc => "gps-abc",
            Self::Dsgld => "dsgld",
        }
    }

}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// "spam-fixture", "csv", or "gaussian".
    pub source: String,
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub has_header: bool,
    pub label_column: Option<usize>,
    #[serde(default)]
    pub standardize: bool,
    /// Apply the spam reduction (first ten columns, standardize, 80% split)
    /// to an ingested CSV.
    #[serde(default)]
    pub reduce: bool,
    pub n: Option<usize>,
    pub mean: Option<f64>,
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "logistic" or "gaussian-mean".
    pub kind: String,
    pub sigma2: Option<f64>,
    pub prior_mean: Option<f64>,
    pub prior_var: Option<f64>,
}

fn default_delta() -> f64 {
    0.5
}

fn default_ridge_tau() -> f64 {
    1e-10
}

fn default_mode() -> String {
    "full".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsnrSection {
    pub iterations: usize,
    #[serde(default = "LsnrSection::default_stepsize")]
    pub stepsize: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_ridge_tau")]
    pub ridge_tau: f64,
    /// Bootstrap replicates at the final parameters; zero disables.
    #[serde(default)]
    pub bootstrap: usize,
    #[serde(default = "LsnrSection::default_bins")]
    pub bins: usize,
}

impl LsnrSection {
    fn default_stepsize() -> f64 {
        0.5
    }

    fn default_bins() -> usize {
        30
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    pub initial_batch: usize,
    #[serde(default = "AdaptiveSection::default_growth")]
    pub growth_factor: f64,
    pub stepsize: f64,
    pub max_iterations: usize,
    #[serde(default = "AdaptiveSection::default_check_period")]
    pub check_period: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_ridge_tau")]
    pub ridge_tau: f64,
}

impl AdaptiveSection {
    fn default_growth() -> f64 {
        2.0
    }

    fn default_check_period() -> usize {
        1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgldSection {
    pub a: f64,
    #[serde(default = "SgldSection::default_b")]
    pub b: f64,
    #[serde(default = "SgldSection::default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub eps_min: f64,
    pub batch_size: usize,
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub precondition: bool,
    #[serde(default = "SgldSection::default_precond_window")]
    pub precond_window: usize,
    pub init_theta: Option<Vec<f64>>,
}

impl SgldSection {
    fn default_b() -> f64 {
        1.0
    }

    fn default_gamma() -> f64 {
        0.55
    }

    fn default_precond_window() -> usize {
        100
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AusteritySection {
    #[serde(default = "AusteritySection::default_eps_conf")]
    pub eps_conf: f64,
    pub proposal_std: f64,
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "AusteritySection::default_init_frac")]
    pub init_frac: f64,
    #[serde(default = "AusteritySection::default_growth")]
    pub growth: f64,
    /// Run the textbook full-data chain instead of the sequential test.
    #[serde(default)]
    pub exact: bool,
    pub init_theta: Option<Vec<f64>>,
}

impl AusteritySection {
    fn default_eps_conf() -> f64 {
        0.05
    }

    fn default_init_frac() -> f64 {
        0.01
    }

    fn default_growth() -> f64 {
        2.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcSection {
    /// "gaussian-location", "exponential-rate", or "external".
    pub simulator: String,
    pub noise_std: Option<f64>,
    pub inner_draws: Option<usize>,
    pub program: Option<String>,
    #[serde(default)]
    pub args: Vec<String>,
    pub stat_dim: Option<usize>,
    /// Observed summary statistics.
    pub observed: Vec<f64>,
    pub prior_mean: Vec<f64>,
    pub prior_std: Vec<f64>,
    pub init_theta: Option<Vec<f64>>,
    #[serde(default = "AbcSection::default_proposal_std")]
    pub proposal_std: f64,
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    // sl-abc
    #[serde(default = "AbcSection::default_s_count")]
    pub s_count: usize,
    #[serde(default)]
    pub refresh_current: bool,
    // gps-abc
    #[serde(default = "AbcSection::default_xi")]
    pub xi: f64,
    #[serde(default = "AbcSection::default_mc_rounds")]
    pub mc_rounds: usize,
    #[serde(default = "AbcSection::default_init_points")]
    pub init_points: usize,
    #[serde(default = "AbcSection::default_init_sims")]
    pub init_sims: usize,
    #[serde(default = "AbcSection::default_acquire_batch")]
    pub acquire_batch: usize,
    #[serde(default = "AbcSection::default_max_acquisitions")]
    pub max_acquisitions: usize,
}

impl AbcSection {
    fn default_proposal_std() -> f64 {
        0.3
    }

    fn default_s_count() -> usize {
        20
    }

    fn default_xi() -> f64 {
        0.3
    }

    fn default_mc_rounds() -> usize {
        200
    }

    fn default_init_points() -> usize {
        10
    }

    fn default_init_sims() -> usize {
        5
    }

    fn default_acquire_batch() -> usize {
        5
    }

    fn default_max_acquisitions() -> usize {
        20
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSection {
    pub start: usize,
    pub end: usize,
    pub speed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsgldSection {
    pub round_length: f64,
    pub rounds: usize,
    #[serde(default = "DsgldSection::default_compensate")]
    pub compensate: bool,
    /// Zero means one chain per worker.
    #[serde(default)]
    pub chains: usize,
    pub workers: Vec<WorkerSection>,
}

impl DsgldSection {
    fn default_compensate() -> bool {
        true
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub dataset: Option<DatasetSection>,
    pub model: Option<ModelSection>,
    pub lsnr: Option<LsnrSection>,
    pub adaptive: Option<AdaptiveSection>,
    pub sgld: Option<SgldSection>,
    pub austerity: Option<AusteritySection>,
    pub abc: Option<AbcSection>,
    pub dsgld: Option<DsgldSection>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
    }

    /// Every violation found, or empty when the config is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let needs_data = !matches!(self.kind, ExperimentKind::SlAbc | ExperimentKind::GpsAbc);
        if needs_data {
            match &self.dataset {
                None => v.push("[dataset] section is required for this kind".into()),
                Some(d) => self.check_dataset(d, &mut v),
            }
            match &self.model {
                None => v.push("[model] section is required for this kind".into()),
                Some(m) => check_model(m, &mut v),
            }
        }
        match self.kind {
            ExperimentKind::LsnrMonitor => {
                match &self.lsnr {
                    None => v.push("[lsnr] section is required for kind = lsnr-monitor".into()),
                    Some(s) => {
                        if s.iterations == 0 {
                            v.push("lsnr.iterations must be >= 1".into());
                        }
                        if !(s.delta > 0.0 && s.delta < 1.0) {
                            v.push("lsnr.delta must lie in (0, 1)".into());
                        }
                        if s.mode != "full" && s.mode != "diagonal" {
                            v.push(format!("lsnr.mode must be 'full' or 'diagonal', got {:?}", s.mode));
                        }
                        if s.bootstrap > 0 && s.bins < 2 {
                            v.push("lsnr.bins must be >= 2 when bootstrapping".into());
                        }
                    }
                }
            }
            ExperimentKind::AdaptiveSgd => {
                match &self.adaptive {
                    None => v.push("[adaptive] section is required for kind = adaptive-sgd".into()),
                    Some(s) => {
                        if s.initial_batch < 2 {
                            v.push("adaptive.initial_batch must be >= 2".into());
                        }
                        if s.growth_factor <= 1.0 {
                            v.push("adaptive.growth_factor must exceed 1".into());
                        }
                        if !(s.delta > 0.0 && s.delta < 1.0) {
                            v.push("adaptive.delta must lie in (0, 1)".into());
                        }
                        if s.mode != "full" && s.mode != "diagonal" {
                            v.push(format!("adaptive.mode must be 'full' or 'diagonal', got {:?}", s.mode));
                        }
                    }
                }
            }
            ExperimentKind::Sgld => {
                match &self.sgld {
                    None => v.push("[sgld] section is required for kind = sgld".into()),
                    Some(s) => check_sgld(s, &mut v),
                }
            }
            ExperimentKind::AusterityMh => {
                match &self.austerity {
                    None => v.push("[austerity] section is required for kind = austerity-mh".into()),
                    Some(s) => {
                        if !(s.eps_conf > 0.0 && s.eps_conf < 1.0) {
                            v.push("austerity.eps_conf must lie in (0, 1)".into());
                        }
                        if s.proposal_std <= 0.0 {
                            v.push("austerity.proposal_std must be positive".into());
                        }
                        if s.iterations == 0 {
                            v.push("austerity.iterations must be >= 1".into());
                        }
                        if !(s.init_frac > 0.0 && s.init_frac <= 1.0) {
                            v.push("austerity.init_frac must lie in (0, 1]".into());
                        }
                        if s.growth <= 1.0 {
                            v.push("austerity.growth must exceed 1".into());
                        }
                    }
                }
            }
            ExperimentKind::SlAbc | ExperimentKind::GpsAbc => {
                match &self.abc {
                    None => v.push("[abc] section is required for ABC kinds".into()),
                    Some(s) => check_abc(s, self.kind, &mut v),
                }
            }
            ExperimentKind::Dsgld => {
                match &self.sgld {
                    None => v.push("[sgld] section is required for kind = dsgld".into()),
                    Some(s) => check_sgld(s, &mut v),
                }
                match &self.dsgld {
                    None => v.push("[dsgld] section is required for kind = dsgld".into()),
                    Some(s) => {
                        if s.rounds == 0 {
                            v.push("dsgld.rounds must be >= 1".into());
                        }
                        if s.round_length <= 0.0 {
                            v.push("dsgld.round_length must be positive".into());
                        }
                        if s.workers.is_empty() {
                            v.push("dsgld.workers must list at least one worker".into());
                        }
                        for (i, w) in s.workers.iter().enumerate() {
                            if w.start >= w.end {
                                v.push(format!("dsgld.workers[{i}] has an empty shard"));
                            }
                            if w.speed <= 0.0 {
                                v.push(format!("dsgld.workers[{i}].speed must be positive"));
                            }
                        }
                    }
                }
            }
        }
        v
    }

    fn check_dataset(&self, d: &DatasetSection, v: &mut Vec<String>) {
        match d.source.as_str() {
            "spam-fixture" => {}
            "csv" => match &d.path {
                None => v.push("dataset.path is required when dataset.source = 'csv'".into()),
                Some(p) => {
                    if !p.exists() {
                        v.push(format!("dataset.path does not exist: {}", p.display()));
                    }
                }
            },
            "gaussian" => {
                if d.n.unwrap_or(0) == 0 {
                    v.push("dataset.n must be >= 1 when dataset.source = 'gaussian'".into());
                }
                if d.sigma2.map_or(true, |s| s <= 0.0) {
                    v.push("dataset.sigma2 must be positive when dataset.source = 'gaussian'".into());
                }
                if d.mean.is_none() {
                    v.push("dataset.mean is required when dataset.source = 'gaussian'".into());
                }
            }
            other => v.push(format!("dataset.source must be 'spam-fixture', 'csv', or 'gaussian', got {other:?}")),
        }
    }
}

fn check_model(m: &ModelSection, v: &mut Vec<String>) {
    match m.kind.as_str() {
        "logistic" => {}
        "gaussian-mean" => {
            if m.sigma2.map_or(true, |s| s <= 0.0) {
                v.push("model.sigma2 must be positive for gaussian-mean".into());
            }
            if m.prior_var.map_or(true, |s| s <= 0.0) {
                v.push("model.prior_var must be positive for gaussian-mean".into());
            }
            if m.prior_mean.is_none() {
                v.push("model.prior_mean is required for gaussian-mean".into());
            }
        }
        other => v.push(format!("model.kind must be 'logistic' or 'gaussian-mean', got {other:?}")),
    }
}

fn check_sgld(s: &SgldSection, v: &mut Vec<String>) {
    if s.a <= 0.0 {
        v.push("sgld.a must be positive".into());
    }
    if s.b < 0.0 {
        v.push("sgld.b must be >= 0".into());
    }
    if !(s.gamma > 0.5 && s.gamma <= 1.0) {
        v.push("sgld.gamma must lie in (0.5, 1]".into());
    }
    if s.eps_min < 0.0 {
        v.push("sgld.eps_min must be >= 0".into());
    }
    if s.batch_size == 0 {
        v.push("sgld.batch_size must be >= 1".into());
    }
    if s.iterations == 0 {
        v.push("sgld.iterations must be >= 1".into());
    }
}

fn check_abc(s: &AbcSection, kind: ExperimentKind, v: &mut Vec<String>) {
    match s.simulator.as_str() {
        "gaussian-location" => {
            if s.noise_std.map_or(true, |x| x <= 0.0) {
                v.push("abc.noise_std must be positive for gaussian-location".into());
            }
        }
        "exponential-rate" => {
            if s.inner_draws.unwrap_or(0) == 0 {
                v.push("abc.inner_draws must be >= 1 for exponential-rate".into());
            }
        }
        "external" => {
            if s.program.is_none() {
                v.push("abc.program is required for the external simulator".into());
            }
            if s.stat_dim.unwrap_or(0) == 0 {
                v.push("abc.stat_dim must be >= 1 for the external simulator".into());
            }
        }
        other => {
            v.push(format!("abc.simulator must be 'gaussian-location', 'exponential-rate', or 'external', got {other:?}"))
        }
    }
    if s.observed.is_empty() {
        v.push("abc.observed must not be empty".into());
    }
    if s.prior_mean.len() != s.prior_std.len() || s.prior_mean.is_empty() {
        v.push("abc.prior_mean and abc.prior_std must be nonempty and equal length".into());
    }
    if s.prior_std.iter().any(|&x| x <= 0.0) {
        v.push("abc.prior_std entries must be positive".into());
    }
    if s.iterations == 0 {
        v.push("abc.iterations must be >= 1".into());
    }
    if s.proposal_std <= 0.0 {
        v.push("abc.proposal_std must be positive".into());
    }
    match kind {
        ExperimentKind::SlAbc => {
            if s.s_count < 3 {
                v.push("abc.s_count must be >= 3".into());
            }
        }
        ExperimentKind::GpsAbc => {
            if !(s.xi > 0.0 && s.xi < 0.5) {
                v.push("abc.xi must lie in (0, 0.5)".into());
            }
            if s.mc_rounds < 100 {
                v.push("abc.mc_rounds must be >= 100".into());
            }
            if s.init_points < 2 {
                v.push("abc.init_points must be >= 2".into());
            }
            if s.init_sims == 0 || s.acquire_batch == 0 {
                v.push("abc.init_sims and abc.acquire_batch must be >= 1".into());
            }
        }
        _ => {}
    }
}
