//! Command-line front end: `sample`, `predict`, `compare`, `moments` and
//! `support` subcommands emitting plot-ready CSV/JSON.
//!
//! Exit codes: 0 success / tolerances pass, 1 tolerance failure, 2 usage or
//! config error, 3 numerical failure. Every run echoes its fully resolved
//! configuration (defaults included) to stderr.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ensembles::EnsembleError;
use crate::freeconv::{self, ConvolutionModel, FreeConvError};
use crate::harness::{
    self, read_config, run_experiment_full, write_artifacts, write_sample_artifacts,
    ExperimentConfig, HarnessError, MatrixSource, TheoryModel,
};
use crate::limits::{finite_k_limit, ss_law, wigner_gaussian_law, wigner_wishart_law, PsiFamily};
use crate::measures::{AnalyticDensity, MarchenkoPasturLaw, MeasureError, SemicircleLaw};

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_)
            | HarnessError::Json(_)
            | HarnessError::Io(_)
            | HarnessError::OrderGuard(_) => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<FreeConvError> for CliError {
    fn from(e: FreeConvError) -> Self {
        match e {
            FreeConvError::NonPositiveT(_) | FreeConvError::TZero => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::InvalidParameter(_) | MeasureError::MomentOrder(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<crate::limits::LimitsError> for CliError {
    fn from(e: crate::limits::LimitsError) -> Self {
        match e {
            crate::limits::LimitsError::LengthMismatch(..)
            | crate::limits::LimitsError::KGuard(_) => CliError::Usage(e.to_string()),
            crate::limits::LimitsError::Measure(m) => m.into(),
            crate::limits::LimitsError::FreeConv(f) => f.into(),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "blockspectra",
    version,
    about = "Random block-matrix spectra: simulation, analytic limit laws, and comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample block matrices and write pooled eigenvalues + histogram CSV.
    Sample(SampleArgs),
    /// Evaluate an analytic limit density over a grid.
    Predict(PredictArgs),
    /// Run a config-file experiment and compare simulation against theory.
    Compare(CompareArgs),
    /// Print moments of an analytic model.
    Moments(MomentsArgs),
    /// Print the support endpoints s1(t), s2(t) of the free convolution law.
    Support(SupportArgs),
}

fn parse_source(s: &str) -> Result<MatrixSource, String> {
    MatrixSource::from_str(s)
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    /// Block order (A, B are n x n).
    #[arg(long)]
    n: usize,
    /// Outer order (W is k x k).
    #[arg(long)]
    k: usize,
    /// Source of A: wigner-rademacher | gue | wishart[:ratio] | diag:v,... | zero | identity.
    #[arg(long, value_parser = parse_source)]
    a: MatrixSource,
    /// Source of B (same forms as --a).
    #[arg(long, value_parser = parse_source)]
    b: MatrixSource,
    /// Source of W (same forms, plus complete-graph).
    #[arg(long, value_parser = parse_source)]
    w: MatrixSource,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    bins: usize,
    /// Output directory for eigenvalues.csv and histogram.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    /// wigner-gaussian | wigner-wishart | freeconv-f | ss-law | finite-k |
    /// semicircle | marchenko-pastur.
    #[arg(long)]
    model: String,
    /// Dilation parameter for freeconv-f (t = 0 yields the semicircle).
    #[arg(long)]
    t: Option<f64>,
    /// Mean of the marchenko-pastur model.
    #[arg(long)]
    mean: Option<f64>,
    /// Center of the semicircle model.
    #[arg(long)]
    center: Option<f64>,
    /// Variance of the semicircle model.
    #[arg(long)]
    variance: Option<f64>,
    /// Comma-separated component centers for ss-law.
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated component scales for ss-law.
    #[arg(long)]
    betas: Option<String>,
    /// Outer order for finite-k.
    #[arg(long)]
    k_outer: Option<usize>,
    /// Quadrature order for the wigner-wishart mixture.
    #[arg(long, default_value_t = crate::limits::DEFAULT_WISHART_OMEGA_ORDER)]
    order: usize,
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad list entry {v:?}: {e}")))
        })
        .collect()
}

impl ModelArgs {
    fn build_law(&self) -> Result<AnalyticDensity, CliError> {
        match self.model.as_str() {
            "wigner-gaussian" => Ok(wigner_gaussian_law()?),
            "wigner-wishart" => Ok(wigner_wishart_law(self.order)?),
            "freeconv-f" => {
                let t = self
                    .t
                    .ok_or_else(|| CliError::Usage("freeconv-f requires --t".into()))?;
                Ok(ConvolutionModel::new(t)?.to_density()?)
            }
            "ss-law" => {
                let alphas = parse_list(self.alphas.as_deref().ok_or_else(|| {
                    CliError::Usage("ss-law requires --alphas".into())
                })?)?;
                let betas = parse_list(self.betas.as_deref().ok_or_else(|| {
                    CliError::Usage("ss-law requires --betas".into())
                })?)?;
                Ok(ss_law(&alphas, &betas)?)
            }
            "finite-k" => {
                let k = self
                    .k_outer
                    .ok_or_else(|| CliError::Usage("finite-k requires --k-outer".into()))?;
                Ok(finite_k_limit(&PsiFamily::SemicircleOnePlusT2, k)?)
            }
            "semicircle" => Ok(SemicircleLaw::new(
                self.center.unwrap_or(0.0),
                self.variance.unwrap_or(1.0),
            )?
            .to_density()),
            "marchenko-pastur" | "mp" => {
                Ok(MarchenkoPasturLaw::new(self.mean.unwrap_or(1.0))?.to_density())
            }
            other => Err(CliError::Usage(format!(
                "unknown model {other:?}; expected wigner-gaussian, wigner-wishart, \
                 freeconv-f, ss-law, finite-k, semicircle or marchenko-pastur"
            ))),
        }
    }
}

/// Inclusive-of-start, exclusive-of-stop grid `start:stop:step`; the point
/// count is round((stop-start)/step), so a stop within half a step of the
/// lattice lands predictably.
#[derive(Clone, Debug, Serialize)]
struct GridSpec {
    start: f64,
    stop: f64,
    step: f64,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid {s:?} must be start:stop:step"));
        }
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad grid value {v:?}: {e}"))
        };
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) {
            return Err("grid step must be positive".into());
        }
        if stop <= start {
            return Err("grid stop must exceed start".into());
        }
        Ok(GridSpec { start, stop, step })
    }
}

impl GridSpec {
    fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 0.5).floor() as usize;
        (0..count.max(1))
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Evaluation grid start:stop:step.
    #[arg(long)]
    grid: GridSpec,
    /// Output directory for density.csv and density.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    /// Experiment config JSON (see README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, histogram.csv, theory_density.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Override the worker thread count from the config file.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct MomentsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Highest moment order printed.
    #[arg(long, default_value_t = 6)]
    max_order: u32,
}

#[derive(Args, Debug, Serialize)]
struct SupportArgs {
    /// Dilation parameter; t = 0 is rejected (semicircle support is [-2, 2]).
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
}

fn echo_resolved<T: Serialize>(name: &str, args: &T) {
    eprintln!(
        "resolved config: {{\"subcommand\":\"{name}\",\"args\":{}}}",
        serde_json::to_string(args).expect("args serialize")
    );
}

fn cmd_sample(args: &SampleArgs) -> Result<u8, CliError> {
    echo_resolved("sample", args);
    let config = ExperimentConfig {
        n: args.n,
        k: args.k,
        a: args.a.clone(),
        b: args.b.clone(),
        w: args.w.clone(),
        trials: args.trials,
        seed: args.seed,
        theory: TheoryModel::None,
        bins: args.bins.max(10),
        ks_max: 1.0,
        moment_rel: 1.0,
        threads: None,
    };
    let output = run_experiment_full(&config)?;
    write_sample_artifacts(&output.pooled, config.bins, &args.out_dir)?;
    println!(
        "wrote {} eigenvalues to {}",
        output.pooled.order(),
        args.out_dir.display()
    );
    Ok(0)
}

fn cmd_predict(args: &PredictArgs) -> Result<u8, CliError> {
    echo_resolved("predict", args);
    let law = args.model.build_law()?;
    let grid = args.grid.points();
    std::fs::create_dir_all(&args.out_dir)?;
    let mut csv = Vec::new();
    law.write_density_csv(&grid, &mut csv)
        .map_err(|e| CliError::Usage(format!("i/o error: {e}")))?;
    std::fs::write(args.out_dir.join("density.csv"), csv)?;

    #[derive(Serialize)]
    struct Sidecar<'a> {
        model: &'a str,
        grid: &'a GridSpec,
        density: crate::measures::DensityDescription,
    }
    let mut sidecar = serde_json::to_string_pretty(&Sidecar {
        model: &args.model.model,
        grid: &args.grid,
        density: law.describe(),
    })
    .expect("sidecar serializes");
    sidecar.push('\n');
    std::fs::write(args.out_dir.join("density.json"), sidecar)?;
    println!("wrote {} grid points to {}", grid.len(), args.out_dir.display());
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<u8, CliError> {
    if !args.config.exists() {
        return Err(CliError::Usage(format!(
            "config file not found: {}",
            args.config.display()
        )));
    }
    let mut config = read_config(&args.config).map_err(|e| {
        CliError::Usage(format!("{}: {e}", args.config.display()))
    })?;
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    harness::echo_config(&config, &mut std::io::stderr())?;
    let output = run_experiment_full(&config)?;
    write_artifacts(&output, &args.out_dir)?;
    let report = &output.report;
    println!(
        "pooled {} eigenvalues over {} trials; ks = {}; pass = {}",
        report.pooled_count,
        config.trials,
        report
            .ks_distance
            .map_or("n/a".to_string(), |d| format!("{d:.6}")),
        report.pass
    );
    eprintln!("runtime: {:.3}s", report.runtime_seconds);
    Ok(if report.pass { 0 } else { EXIT_TOLERANCE })
}

fn cmd_moments(args: &MomentsArgs) -> Result<u8, CliError> {
    echo_resolved("moments", args);
    let law = args.model.build_law()?;
    println!("k,moment");
    for k in 0..=args.max_order {
        let m = law.moment(k)?;
        println!("{},{}", k, m);
    }
    Ok(0)
}

fn cmd_support(args: &SupportArgs) -> Result<u8, CliError> {
    echo_resolved("support", args);
    let t = args.t;
    if t == 0.0 {
        return Err(CliError::Usage(
            "t = 0 is the plain semicircle with support [-2, 2]; the quartic applies to t != 0"
                .into(),
        ));
    }
    let (s1, s2) = if t > 0.0 {
        freeconv::support_endpoints(t)?
    } else {
        let (m1, m2) = freeconv::support_endpoints(-t)?;
        (-m2, -m1)
    };
    let tp = t.abs();
    let (r1, r2) = if t > 0.0 {
        (freeconv::support_quartic(s1, tp), freeconv::support_quartic(s2, tp))
    } else {
        (freeconv::support_quartic(-s1, tp), freeconv::support_quartic(-s2, tp))
    };
    println!("s1 = {} (quartic residual {:e})", s1, r1);
    println!("s2 = {} (quartic residual {:e})", s2, r2);
    Ok(0)
}

/// Parse and dispatch; returns the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are successful exits; anything else is usage.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Support(a) => cmd_support(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_counts_rows_predictably() {
        let g: GridSpec = "-1:4:0.01".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 500);
        assert_eq!(pts[0], -1.0);
        assert!((pts[499] - 3.99).abs() < 1e-12);

        let g: GridSpec = "0:1:0.25".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn grid_spec_rejects_malformed_input() {
        assert!("1:2".parse::<GridSpec>().is_err());
        assert!("2:1:0.1".parse::<GridSpec>().is_err());
        assert!("0:1:-0.1".parse::<GridSpec>().is_err());
        assert!("a:b:c".parse::<GridSpec>().is_err());
    }

    #[test]
    fn model_args_require_their_parameters() {
        let base = ModelArgs {
            model: "freeconv-f".into(),
            t: None,
            mean: None,
            center: None,
            variance: None,
            alphas: None,
            betas: None,
            k_outer: None,
            order: 64,
        };
        assert!(matches!(base.build_law(), Err(CliError::Usage(_))));
    }
}
