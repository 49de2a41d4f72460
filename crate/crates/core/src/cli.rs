//! Command-line front end for the `bml` binary.
//!
//! Exit codes: 0 on success, 1 for numerical/domain failures, 2 for bad
//! arguments, configuration or I/O. Every JSON output carries the resolved
//! configuration under `"config"`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::{run_sweep, write_outputs, SweepConfig};
use crate::model::{EntryDist, MeanDoc, MixtureModel, ModelDoc, RotationDoc, SpectrumDoc};
use crate::risk::{
    check_assumptions, concentration_bound_checks, lower_risk_bound_from_summary, risk_report,
    upper_risk_bound_from_summary, AssumptionMode, CheckConstants, Constants, ReportOptions,
};
use crate::rng::trial_seed;
use crate::sampling::{sample_dataset, Dataset};
use crate::solvers::{
    hard_margin_svm, logistic_gd_with_reference, min_norm_interpolator, sv_proliferation_predicate,
    LinearClassifier, DEFAULT_SVM_MAX_ITER, DEFAULT_SVM_TOL,
};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20240601;
pub const THREADS_ENV: &str = "BML_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bml", version, about = "Maximum-margin classification on sub-Gaussian mixtures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset and print it as CSV or JSON.
    Sample(SampleArgs),
    /// Fit the interpolator, SVM and/or logistic GD and report margins.
    Solve(SolveArgs),
    /// Risk report of a fitted classifier.
    Risk(RiskArgs),
    /// Upper/lower risk bounds and assumption checks for a model.
    Bound(BoundArgs),
    /// Pass rates of the concentration bound checks over repeated draws.
    Verify(VerifyArgs),
    /// Run a parameter sweep from a config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Model spec file (TOML, or JSON by extension).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Identity covariance.
    #[arg(long, conflicts_with = "alpha")]
    pub isotropic: bool,
    /// Polynomial spectrum λ_k = k^(−alpha).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Mean norm; the direction is uniform on the sphere unless `--mean-k`.
    #[arg(long)]
    pub mu_norm: Option<f64>,
    /// Align the mean with the k-th eigenvector (1-based).
    #[arg(long, requires = "mu_norm")]
    pub mean_k: Option<usize>,
    #[arg(long, value_parser = parse_entry_dist)]
    pub entry_dist: Option<EntryDist>,
    /// Seed for the random mean direction and rotation.
    #[arg(long)]
    pub model_seed: Option<u64>,
    /// Random orthogonal eigenbasis.
    #[arg(long)]
    pub rotate: bool,
}

fn parse_entry_dist(s: &str) -> std::result::Result<EntryDist, String> {
    s.parse::<EntryDist>().map_err(|e| e.to_string())
}

impl ModelArgs {
    /// File values first, inline flags on top.
    pub fn resolve(&self) -> Result<ModelDoc> {
        let mut doc = match &self.model {
            Some(p) => Some(ModelDoc::load(p)?),
            None => None,
        };
        let d = match (self.d, &doc) {
            (Some(d), _) => d,
            (None, Some(doc)) => doc.d,
            (None, None) => return Err(Error::Config("need --model or --d".into())),
        };
        let mut out = doc.take().unwrap_or(ModelDoc {
            d,
            spectrum: SpectrumDoc::Isotropic,
            mean: MeanDoc::UniformSphere { r: 0.0 },
            entry_dist: EntryDist::Gaussian,
            seed: 0,
            rotation: RotationDoc::Identity,
        });
        out.d = d;
        if self.isotropic {
            out.spectrum = SpectrumDoc::Isotropic;
        }
        if let Some(alpha) = self.alpha {
            out.spectrum = SpectrumDoc::Polynomial { alpha };
        }
        if let Some(r) = self.mu_norm {
            out.mean = match self.mean_k {
                Some(k) => MeanDoc::EigvecAligned { k, norm: r },
                None => MeanDoc::UniformSphere { r },
            };
        }
        if let Some(e) = self.entry_dist {
            out.entry_dist = e;
        }
        if let Some(s) = self.model_seed {
            out.seed = s;
        }
        if self.rotate {
            out.rotation = RotationDoc::Random;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Ls,
    Svm,
    Logistic,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_SVM_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SVM_MAX_ITER)]
    pub max_iter: usize,
    /// Logistic GD learning rate.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Logistic GD iterations.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SolverChoice::All)]
    pub solver: SolverChoice,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantArgs {
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cprime: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cdprime: f64,
    /// Add the extra trace conditions to the assumption check.
    #[arg(long)]
    pub strict: bool,
    /// Use the eigenvector-aligned mean conditions.
    #[arg(long)]
    pub alignment: bool,
}

impl ConstantArgs {
    fn constants(&self) -> Constants {
        Constants {
            c: self.c,
            c_prime: self.cprime,
            c_dprime: self.cdprime,
        }
    }

    fn mode(&self) -> AssumptionMode {
        AssumptionMode {
            alignment: self.alignment,
            strict: self.strict,
        }
    }
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Classifier to evaluate (`ls`, `svm` or `logistic`).
    #[arg(long, value_enum, default_value_t = SolverChoice::Svm)]
    pub solver: SolverChoice,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    #[command(flatten)]
    pub constants: ConstantArgs,
    /// Monte-Carlo samples (always used for non-Gaussian entries).
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub mc_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub constants: ConstantArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Constant of the stated bounds and the theoretical ε_λ.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Constant of the leverage bound.
    #[arg(long, default_value_t = 5.0)]
    pub c_leverage: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep config (TOML, or JSON by extension).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for the CSV, JSON and plot-script outputs.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// File-name stem; defaults to the config file stem.
    #[arg(long)]
    pub stem: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub timing: bool,
}

/// Parse `argv`, run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        2
    } else {
        1
    }
}

/// Size the global rayon pool from `BML_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool that already exists (e.g. a second call in one process) is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Sample(a) => cmd_sample(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Risk(a) => cmd_risk(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(format!("serialization: {e}")))
}

fn build(model: &ModelArgs) -> Result<(ModelDoc, MixtureModel)> {
    let doc = model.resolve()?;
    let m = doc.build()?;
    Ok((doc, m))
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let (doc, model) = build(&a.model)?;
    let data = sample_dataset(&model, a.n, a.seed)?;
    let config = json!({"model": doc, "n": a.n, "seed": a.seed});
    let text = match a.format {
        Format::Csv => {
            let mut buf = format!("# config {}\n", config).into_bytes();
            data.write_csv(&mut buf)?;
            String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))?
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| data.x.row(i).iter().cloned().collect()).collect();
            let y: Vec<f64> = data.y.iter().cloned().collect();
            json!({"config": config, "y": y, "x": rows}).to_string()
        }
    };
    emit(&a.out, &text)
}

fn classifier_line(kind: &str, c: &LinearClassifier, data: &Dataset, config: &Value) -> Value {
    let margins = c.margins(data);
    json!({
        "config": config,
        "solver": kind,
        "norm": c.norm(),
        "min_margin": margins.min(),
        "max_margin": margins.max(),
        "stats": c.stats,
    })
}

fn fit(choice: SolverChoice, data: &Dataset, s: &SolverArgs) -> Result<LinearClassifier> {
    match choice {
        SolverChoice::Ls => min_norm_interpolator(data),
        SolverChoice::Svm | SolverChoice::All => hard_margin_svm(data, s.tol, s.max_iter),
        SolverChoice::Logistic => {
            let svm = hard_margin_svm(data, s.tol, s.max_iter).ok();
            Ok(logistic_gd_with_reference(data, s.eta, s.iters, svm.as_ref())?.classifier)
        }
    }
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let (doc, model) = build(&a.model)?;
    let data = sample_dataset(&model, a.n, a.seed)?;
    let config = json!({"model": doc, "n": a.n, "seed": a.seed, "solver": a.solver, "solver_args": a.solver_args});
    let mut lines = Vec::new();
    let verdict = sv_proliferation_predicate(&data, None);
    match &verdict {
        Ok(v) => lines.push(json!({
            "config": config,
            "predicate": v.verdict.name(),
            "criterion_min": v.min,
            "tau": v.tau,
        })),
        Err(e) => lines.push(json!({"config": config, "predicate": "error", "message": e.to_string()})),
    }
    let want = |c: SolverChoice| a.solver == c || a.solver == SolverChoice::All;
    let s = &a.solver_args;
    let mut svm = None;
    if want(SolverChoice::Ls) {
        let ls = min_norm_interpolator(&data)?;
        lines.push(classifier_line("interpolator", &ls, &data, &config));
    }
    if want(SolverChoice::Svm) || want(SolverChoice::Logistic) {
        let fitted = hard_margin_svm(&data, s.tol, s.max_iter);
        if want(SolverChoice::Svm) {
            let fitted = fitted?;
            lines.push(classifier_line("svm", &fitted, &data, &config));
            svm = Some(fitted);
        } else {
            svm = fitted.ok();
        }
    }
    if want(SolverChoice::Logistic) {
        let trace = logistic_gd_with_reference(&data, s.eta, s.iters, svm.as_ref())?;
        let mut line = classifier_line("logistic_gd", &trace.classifier, &data, &config);
        line["checkpoints"] = to_json(&trace.checkpoints)?;
        lines.push(line);
    }
    let text: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    emit(&a.out, &text.join("\n"))
}

fn cmd_risk(a: RiskArgs) -> Result<()> {
    let (doc, model) = build(&a.model)?;
    let data = sample_dataset(&model, a.n, a.seed)?;
    let clf = fit(a.solver, &data, &a.solver_args)?;
    let opts = ReportOptions {
        constants: a.constants.constants(),
        mode: a.constants.mode(),
        mc_samples: a.mc_samples,
        mc_seed: a.mc_seed,
    };
    let report = risk_report(a.n, &clf, &model, opts)?;
    let config = json!({
        "model": doc, "n": a.n, "seed": a.seed, "solver": a.solver,
        "solver_args": a.solver_args, "constants": a.constants,
        "mc_samples": a.mc_samples, "mc_seed": a.mc_seed,
    });
    let mut v = to_json(&report)?;
    v["config"] = config;
    emit(&a.out, &v.to_string())
}

fn cmd_bound(a: BoundArgs) -> Result<()> {
    let (doc, model) = build(&a.model)?;
    let s = model.summaries();
    let k = a.constants.constants();
    let upper = upper_risk_bound_from_summary(a.n, &s, k.c_prime)?;
    let lower = lower_risk_bound_from_summary(a.n, &s, k)?;
    let assumptions = check_assumptions(a.n, &model, k.c, a.constants.mode())?;
    let v = json!({
        "config": {"model": doc, "n": a.n, "constants": a.constants},
        "summaries": s,
        "upper": upper,
        "lower": lower,
        "assumptions": assumptions,
    });
    emit(&a.out, &v.to_string())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let (doc, model) = build(&a.model)?;
    let k = CheckConstants {
        c: a.c,
        c_leverage: a.c_leverage,
    };
    let mut names: Vec<&'static str> = Vec::new();
    let mut passes: Vec<usize> = Vec::new();
    let mut errors = 0;
    for t in 0..a.trials {
        let data = sample_dataset(&model, a.n, trial_seed(a.seed, 0, t as u64))?;
        let report = match concentration_bound_checks(&data, k) {
            Ok(r) => r,
            Err(Error::DegenerateGram { .. }) => {
                errors += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if names.is_empty() {
            names = report.checks.iter().map(|c| c.name).collect();
            passes = vec![0; names.len()];
        }
        for (i, c) in report.checks.iter().enumerate() {
            passes[i] += c.holds as usize;
        }
    }
    let config = json!({"model": doc, "n": a.n, "trials": a.trials, "seed": a.seed, "constants": k});
    let text = match a.format {
        Format::Json => {
            let rows: Vec<Value> = names
                .iter()
                .zip(&passes)
                .map(|(n, p)| json!({"check": n, "passed": p, "trials": a.trials, "rate": *p as f64 / a.trials as f64}))
                .collect();
            json!({"config": config, "degenerate": errors, "checks": rows}).to_string()
        }
        Format::Csv => {
            let mut s = format!("# config {config}\ncheck,passed,trials,rate\n");
            for (n, p) in names.iter().zip(&passes) {
                s.push_str(&format!("{n},{p},{},{}\n", a.trials, *p as f64 / a.trials as f64));
            }
            if errors > 0 {
                s.push_str(&format!("degenerate_gram,{errors},{},\n", a.trials));
            }
            s
        }
    };
    emit(&a.out, &text)
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = SweepConfig::load(&a.config)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.timing {
        cfg.timing = true;
    }
    cfg.validate()?;
    let stem = a.stem.clone().unwrap_or_else(|| stem_of(&a.config));
    let out = run_sweep(&cfg)?;
    let mut written = write_outputs(&out, &a.out_dir, &stem)?;
    let cfg_path = a.out_dir.join(format!("{stem}_config.json"));
    std::fs::write(&cfg_path, format!("{}\n", to_json(&cfg)?))?;
    written.push(cfg_path);
    let failed: Vec<Value> = out
        .cells
        .iter()
        .filter(|c| c.failed)
        .map(|c| to_json(&c.cell))
        .collect::<Result<_>>()?;
    let v = json!({
        "config": cfg,
        "cells": out.cells.len(),
        "records": out.records.len(),
        "failed_cells": failed,
        "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    emit(&None, &v.to_string())
}

fn stem_of(p: &Path) -> String {
    p.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or("sweep")
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        std::fs::write(
            &p,
            "d = 50\nentry_dist = \"uniform\"\nseed = 3\n[spectrum]\nkind = \"polynomial\"\nalpha = 0.5\n[mean]\nkind = \"uniform_sphere\"\nr = 1.0\n",
        )
        .unwrap();
        let args = ModelArgs {
            model: Some(p),
            d: None,
            isotropic: true,
            alpha: None,
            mu_norm: Some(2.0),
            mean_k: None,
            entry_dist: None,
            model_seed: None,
            rotate: false,
        };
        let doc = args.resolve().unwrap();
        assert_eq!(doc.d, 50);
        assert_eq!(doc.spectrum, SpectrumDoc::Isotropic);
        assert_eq!(doc.mean, MeanDoc::UniformSphere { r: 2.0 });
        assert_eq!(doc.entry_dist, EntryDist::Uniform);
        assert_eq!(doc.seed, 3);
    }

    #[test]
    fn missing_dimension_is_a_config_error() {
        let args = ModelArgs {
            model: None,
            d: None,
            isotropic: true,
            alpha: None,
            mu_norm: None,
            mean_k: None,
            entry_dist: None,
            model_seed: None,
            rotate: false,
        };
        assert!(args.resolve().unwrap_err().is_config());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["bml", "--nope"]), 2);
        assert_eq!(run(["bml", "bound", "--n", "10"]), 2);
        assert_eq!(run(["bml", "bound", "--isotropic", "--d", "5", "--n", "0"]), 1);
        assert_eq!(run(["bml", "bound", "--alpha", "1.5", "--d", "5", "--n", "2"]), 1);
    }
}
