//! Monte Carlo experiment runner: sample block-matrix trials from a seeded
//! config, pool the spectra, and compare against a configured limit law by
//! moments and Kolmogorov–Smirnov distance. Reports are byte-identical for
//! identical configs regardless of thread count.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blockops::{assemble, complete_graph_w, BlockMatrixSpec, BlockOpsError};
use crate::ensembles::{
    sample_wigner, sample_wishart, EnsembleError, EntryLaw, HermitianMatrix, RngSeed,
};
use crate::limits::{
    finite_k_limit, ss_law, wigner_gaussian_law, wigner_wishart_law, LimitsError, PsiFamily,
    DEFAULT_WISHART_OMEGA_ORDER,
};
use crate::measures::{
    ks_distance, AnalyticDensity, MarchenkoPasturLaw, MeasureError, SemicircleLaw,
};
use crate::spectra::{SpectraError, SpectralMeasure, MAX_EIGEN_ORDER};

/// Number of moment orders compared (m₁..m₆).
pub const MOMENT_ORDERS: u32 = 6;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("assembled order {0} exceeds the eigensolve guard {MAX_EIGEN_ORDER}")]
    OrderGuard(usize),
    #[error("failed to build thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    BlockOps(#[from] BlockOpsError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Where one of the three matrices comes from: a sampled ensemble or a fixed
/// deterministic pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixSource {
    WignerRademacher,
    #[serde(alias = "gue")]
    WignerGaussian,
    Wishart {
        ratio: f64,
    },
    Diagonal(Vec<f64>),
    CompleteGraph,
    Zero,
    Identity,
}

impl FromStr for MatrixSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim();
        match lower {
            "wigner-rademacher" | "rademacher" => Ok(MatrixSource::WignerRademacher),
            "wigner-gaussian" | "gue" | "gaussian" => Ok(MatrixSource::WignerGaussian),
            "wishart" => Ok(MatrixSource::Wishart { ratio: 1.0 }),
            "complete-graph" => Ok(MatrixSource::CompleteGraph),
            "zero" => Ok(MatrixSource::Zero),
            "identity" => Ok(MatrixSource::Identity),
            _ => {
                if let Some(ratio) = lower.strip_prefix("wishart:") {
                    let ratio: f64 = ratio
                        .parse()
                        .map_err(|e| format!("bad wishart ratio {ratio:?}: {e}"))?;
                    return Ok(MatrixSource::Wishart { ratio });
                }
                if let Some(diag) = lower.strip_prefix("diag:").or_else(|| lower.strip_prefix("diagonal:")) {
                    let entries: Result<Vec<f64>, _> =
                        diag.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    return entries
                        .map(MatrixSource::Diagonal)
                        .map_err(|e| format!("bad diagonal {diag:?}: {e}"));
                }
                Err(format!(
                    "unknown matrix source {s:?}; expected one of wigner-rademacher, \
                     wigner-gaussian (gue), wishart[:ratio], diag:v1,v2,..., \
                     complete-graph, zero, identity"
                ))
            }
        }
    }
}

impl MatrixSource {
    /// Sample (or construct) the matrix of the given order.
    pub fn realize(&self, order: usize, seed: RngSeed) -> Result<HermitianMatrix, HarnessError> {
        Ok(match self {
            MatrixSource::WignerRademacher => sample_wigner(order, EntryLaw::Rademacher, seed)?,
            MatrixSource::WignerGaussian => sample_wigner(order, EntryLaw::Gaussian, seed)?,
            MatrixSource::Wishart { ratio } => {
                let p = ((ratio * order as f64).round() as usize).max(1);
                sample_wishart(order, p, seed)?
            }
            MatrixSource::Diagonal(diag) => {
                if diag.len() != order {
                    return Err(HarnessError::Config(format!(
                        "diagonal source has {} entries but order {} is required",
                        diag.len(),
                        order
                    )));
                }
                HermitianMatrix::from_real_diagonal(diag)?
            }
            MatrixSource::CompleteGraph => complete_graph_w(order)?.0,
            MatrixSource::Zero => HermitianMatrix::zeros(order)?,
            MatrixSource::Identity => HermitianMatrix::identity(order)?,
        })
    }

    /// The diagonal this source fixes, when it is deterministic diagonal.
    fn fixed_diagonal(&self, order: usize) -> Option<Vec<f64>> {
        match self {
            MatrixSource::Diagonal(d) => Some(d.clone()),
            MatrixSource::Zero => Some(vec![0.0; order]),
            MatrixSource::Identity => Some(vec![1.0; order]),
            _ => None,
        }
    }
}

/// Which analytic law the pooled spectrum is compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoryModel {
    None,
    Semicircle {
        #[serde(default)]
        center: f64,
        #[serde(default = "default_one")]
        variance: f64,
    },
    MarchenkoPastur {
        #[serde(default = "default_one")]
        mean: f64,
    },
    WignerGaussian,
    WignerWishart {
        #[serde(default = "default_wishart_order")]
        order: usize,
    },
    /// SS-Law derived from the diagonals of the `a` and `b` sources.
    SsLaw,
    /// ((k-1)/k)·γ_{0,2} + (1/k)·γ_{0,1+(k-1)²} for the complete-graph W.
    FiniteK,
}

fn default_one() -> f64 {
    1.0
}

fn default_wishart_order() -> usize {
    DEFAULT_WISHART_OMEGA_ORDER
}

impl FromStr for TheoryModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(TheoryModel::None),
            "semicircle" => Ok(TheoryModel::Semicircle { center: 0.0, variance: 1.0 }),
            "marchenko-pastur" | "mp" => Ok(TheoryModel::MarchenkoPastur { mean: 1.0 }),
            "wigner-gaussian" => Ok(TheoryModel::WignerGaussian),
            "wigner-wishart" => Ok(TheoryModel::WignerWishart { order: default_wishart_order() }),
            "ss-law" => Ok(TheoryModel::SsLaw),
            "finite-k" => Ok(TheoryModel::FiniteK),
            other => Err(format!(
                "unknown theory {other:?}; expected none, semicircle, marchenko-pastur, \
                 wigner-gaussian, wigner-wishart, ss-law or finite-k"
            )),
        }
    }
}

/// Full description of one Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Block order (A, B are n × n).
    pub n: usize,
    /// Outer order (W is k × k).
    pub k: usize,
    pub a: MatrixSource,
    pub b: MatrixSource,
    pub w: MatrixSource,
    pub trials: usize,
    /// Master seed; trial i draws streams 3i, 3i+1, 3i+2 for A, B, W.
    pub seed: u64,
    #[serde(default = "default_theory")]
    pub theory: TheoryModel,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_ks_max")]
    pub ks_max: f64,
    #[serde(default = "default_moment_rel")]
    pub moment_rel: f64,
    /// Worker threads for the trial pool; `null` uses the global default.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_theory() -> TheoryModel {
    TheoryModel::None
}

fn default_bins() -> usize {
    60
}

fn default_ks_max() -> f64 {
    0.05
}

fn default_moment_rel() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n == 0 || self.k == 0 {
            return Err(HarnessError::Config("n and k must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be >= 1".into()));
        }
        if self.bins < 10 {
            return Err(HarnessError::Config("bins must be >= 10".into()));
        }
        if !(self.ks_max > 0.0) || !(self.moment_rel > 0.0) {
            return Err(HarnessError::Config("tolerances must be positive".into()));
        }
        if self.n.saturating_mul(self.k) > MAX_EIGEN_ORDER {
            return Err(HarnessError::OrderGuard(self.n * self.k));
        }
        Ok(())
    }

    /// Construct the comparison law declared by `theory`.
    pub fn theory_law(&self) -> Result<Option<AnalyticDensity>, HarnessError> {
        Ok(match &self.theory {
            TheoryModel::None => None,
            TheoryModel::Semicircle { center, variance } => {
                Some(SemicircleLaw::new(*center, *variance)?.to_density())
            }
            TheoryModel::MarchenkoPastur { mean } => {
                Some(MarchenkoPasturLaw::new(*mean)?.to_density())
            }
            TheoryModel::WignerGaussian => Some(wigner_gaussian_law()?),
            TheoryModel::WignerWishart { order } => Some(wigner_wishart_law(*order)?),
            TheoryModel::SsLaw => {
                let alphas = self.a.fixed_diagonal(self.n).ok_or_else(|| {
                    HarnessError::Config(
                        "ss-law theory requires a deterministic diagonal `a` source".into(),
                    )
                })?;
                let betas = self.b.fixed_diagonal(self.n).ok_or_else(|| {
                    HarnessError::Config(
                        "ss-law theory requires a deterministic diagonal `b` source".into(),
                    )
                })?;
                if alphas.len() != self.n || betas.len() != self.n {
                    return Err(HarnessError::Config(
                        "diagonal length does not match n".into(),
                    ));
                }
                Some(ss_law(&alphas, &betas)?)
            }
            TheoryModel::FiniteK => {
                Some(finite_k_limit(&PsiFamily::SemicircleOnePlusT2, self.k)?)
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Result of one experiment. Serializes deterministically; `runtime_seconds`
/// is informational only and deliberately kept out of the JSON so reports
/// stay byte-identical across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub pooled_count: usize,
    pub trials_failed: Vec<usize>,
    /// Empirical moments m₁..m₆ of the pooled spectrum.
    pub empirical_moments: Vec<f64>,
    /// Matching theory moments, when a theory law is configured.
    pub theory_moments: Option<Vec<f64>>,
    pub ks_distance: Option<f64>,
    pub ks_pass: Option<bool>,
    pub moments_pass: Option<bool>,
    /// True when every configured tolerance holds and no trial failed.
    pub pass: bool,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl ComparisonReport {
    /// Canonical JSON form (pretty-printed, trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Report plus the artifacts needed to write histogram / density files.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: ComparisonReport,
    pub pooled: SpectralMeasure,
    pub theory: Option<AnalyticDensity>,
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<f64>, HarnessError> {
    let base = trial as u64 * 3;
    let a = config.a.realize(config.n, RngSeed::new(config.seed, base))?;
    let b = config.b.realize(config.n, RngSeed::new(config.seed, base + 1))?;
    let w = config.w.realize(config.k, RngSeed::new(config.seed, base + 2))?;
    let spec = BlockMatrixSpec::new(w, a, b)?;
    let assembled = assemble(&spec)?;
    Ok(crate::spectra::hermitian_eigenvalues(&assembled)?)
}

fn in_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Run all trials, pool the spectra and compare against the configured
/// theory. Trials are independent; a failed eigensolve marks its trial in
/// `trials_failed` instead of aborting the experiment.
pub fn run_experiment_full(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let start = Instant::now();

    let results: Vec<Result<Vec<f64>, HarnessError>> = in_pool(config.threads, || {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(config, trial))
            .collect()
    })?;

    let mut trials_failed = Vec::new();
    let mut pooled_values = Vec::with_capacity(config.trials * config.n * config.k);
    for (trial, outcome) in results.into_iter().enumerate() {
        match outcome {
            Ok(values) => pooled_values.extend(values),
            Err(HarnessError::Spectra(SpectraError::Convergence(_))) => trials_failed.push(trial),
            Err(other) => return Err(other),
        }
    }
    if pooled_values.is_empty() {
        return Err(HarnessError::Config("every trial failed to eigensolve".into()));
    }
    let pooled = SpectralMeasure::new(pooled_values)?;

    let empirical_moments: Vec<f64> = (1..=MOMENT_ORDERS).map(|m| pooled.moment(m)).collect();

    let theory = config.theory_law()?;
    let (theory_moments, ks, ks_pass, moments_pass) = match &theory {
        None => (None, None, None, None),
        Some(law) => {
            let tm: Vec<f64> = (1..=MOMENT_ORDERS)
                .map(|m| law.moment(m))
                .collect::<Result<_, _>>()?;
            let ks = ks_distance(&pooled, law)?;
            let ks_ok = ks <= config.ks_max;
            let moments_ok = empirical_moments
                .iter()
                .zip(&tm)
                .all(|(e, t)| (e - t).abs() <= config.moment_rel * t.abs().max(1.0));
            (Some(tm), Some(ks), Some(ks_ok), Some(moments_ok))
        }
    };

    let pass = trials_failed.is_empty()
        && ks_pass.unwrap_or(true)
        && moments_pass.unwrap_or(true);

    let report = ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        pooled_count: pooled.order(),
        trials_failed,
        empirical_moments,
        theory_moments,
        ks_distance: ks,
        ks_pass,
        moments_pass,
        pass,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };

    Ok(ExperimentOutput { report, pooled, theory })
}

/// [`run_experiment_full`] without the file-writing artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ComparisonReport, HarnessError> {
    Ok(run_experiment_full(config)?.report)
}

/// Parse an [`ExperimentConfig`] from a JSON file.
pub fn read_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Evaluation grid used for theory-density exports: the support hull widened
/// by 5% on each side, 1001 points.
pub fn export_grid(law: &AnalyticDensity) -> Vec<f64> {
    let (lo, hi) = law.support_hull();
    let pad = 0.05 * (hi - lo).max(f64::MIN_POSITIVE);
    let (lo, hi) = (lo - pad, hi + pad);
    (0..=1000).map(|i| lo + (hi - lo) * i as f64 / 1000.0).collect()
}

/// Write report JSON, pooled histogram CSV and (when configured) the theory
/// density CSV side by side in `dir`.
pub fn write_artifacts(output: &ExperimentOutput, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), output.report.to_json())?;
    let mut hist = Vec::new();
    output
        .pooled
        .write_histogram_csv(output.report.config.bins, &mut hist)?;
    std::fs::write(dir.join("histogram.csv"), hist)?;
    if let Some(law) = &output.theory {
        let mut csv = Vec::new();
        law.write_density_csv(&export_grid(law), &mut csv)?;
        std::fs::write(dir.join("theory_density.csv"), csv)?;
        let sidecar = serde_json::to_string_pretty(&law.describe())?;
        let mut sidecar = sidecar;
        sidecar.push('\n');
        std::fs::write(dir.join("theory_density.json"), sidecar)?;
    }
    Ok(())
}

/// Write the pooled eigenvalues and histogram of a sampling run (no theory).
pub fn write_sample_artifacts(
    pooled: &SpectralMeasure,
    bins: usize,
    dir: &Path,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut eig = Vec::new();
    pooled.write_csv(&mut eig)?;
    std::fs::write(dir.join("eigenvalues.csv"), eig)?;
    let mut hist = Vec::new();
    pooled.write_histogram_csv(bins, &mut hist)?;
    std::fs::write(dir.join("histogram.csv"), hist)?;
    Ok(())
}

/// Echo the fully resolved config as one JSON line (used by the CLI on
/// stderr so every run records its defaults).
pub fn echo_config<W: Write>(config: &ExperimentConfig, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "resolved config: {}",
        serde_json::to_string(config).expect("config serializes")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 2,
            k: 2,
            a: MatrixSource::WignerGaussian,
            b: MatrixSource::WignerGaussian,
            w: MatrixSource::WignerRademacher,
            trials: 3,
            seed: 99,
            theory: TheoryModel::None,
            bins: 10,
            ks_max: 0.05,
            moment_rel: 0.05,
            threads: None,
        }
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut c = tiny_config();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.bins = 5;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.ks_max = 0.0;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.n = 200;
        c.k = 60;
        assert!(matches!(c.validate(), Err(HarnessError::OrderGuard(12000))));
    }

    #[test]
    fn zero_coupling_pools_k_copies_of_a_spectrum() {
        let mut c = tiny_config();
        c.n = 3;
        c.k = 2;
        c.b = MatrixSource::Zero;
        c.w = MatrixSource::Zero;
        c.trials = 1;
        let out = run_experiment_full(&c).unwrap();
        let a = MatrixSource::WignerGaussian
            .realize(3, RngSeed::new(c.seed, 0))
            .unwrap();
        let expect = crate::spectra::hermitian_eigenvalues(&a).unwrap();
        let pooled = out.pooled.eigenvalues();
        assert_eq!(pooled.len(), 6);
        // Each eigenvalue of A appears twice (multiplicity k).
        for (i, &x) in expect.iter().enumerate() {
            assert!((pooled[2 * i] - x).abs() <= 1e-10);
            assert!((pooled[2 * i + 1] - x).abs() <= 1e-10);
        }
    }

    #[test]
    fn report_json_round_trips() {
        let mut c = tiny_config();
        c.theory = TheoryModel::Semicircle { center: 0.0, variance: 1.0 };
        c.ks_max = 1.0;
        c.moment_rel = 10.0;
        let report = run_experiment(&c).unwrap();
        let json = report.to_json();
        let back = ComparisonReport::from_json(&json).unwrap();
        assert_eq!(report, back);
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn reports_are_deterministic_across_thread_counts() {
        let mut c = tiny_config();
        c.trials = 5;
        let r1 = run_experiment(&c).unwrap().to_json();
        c.threads = Some(1);
        let r2 = run_experiment(&c).unwrap();
        c.threads = Some(4);
        let r3 = run_experiment(&c).unwrap();
        // The threads field is config echo; compare everything else.
        let mut r2c = r2.clone();
        r2c.config.threads = None;
        let mut r3c = r3.clone();
        r3c.config.threads = None;
        assert_eq!(r1, r2c.to_json());
        assert_eq!(r1, r3c.to_json());
    }

    #[test]
    fn matrix_source_parses_cli_forms() {
        assert_eq!("gue".parse::<MatrixSource>().unwrap(), MatrixSource::WignerGaussian);
        assert_eq!(
            "wishart:0.5".parse::<MatrixSource>().unwrap(),
            MatrixSource::Wishart { ratio: 0.5 }
        );
        assert_eq!(
            "diag:1,2,-3".parse::<MatrixSource>().unwrap(),
            MatrixSource::Diagonal(vec![1.0, 2.0, -3.0])
        );
        assert!("nope".parse::<MatrixSource>().is_err());
    }

    #[test]
    fn config_json_rejects_unknown_fields() {
        let bad = r#"{"n":2,"k":2,"a":"zero","b":"zero","w":"zero","trials":1,"seed":1,"bogus":3}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn ss_law_theory_requires_diagonal_sources() {
        let mut c = tiny_config();
        c.theory = TheoryModel::SsLaw;
        assert!(matches!(c.theory_law(), Err(HarnessError::Config(_))));
        c.a = MatrixSource::Diagonal(vec![0.0, 1.0]);
        c.b = MatrixSource::Identity;
        let law = c.theory_law().unwrap().unwrap();
        assert!((law.ac_mass() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn wrong_diagonal_length_is_a_config_error() {
        let mut c = tiny_config();
        c.a = MatrixSource::Diagonal(vec![1.0, 2.0, 3.0]);
        assert!(run_experiment(&c).is_err());
    }
}
