//! Seeded parameter sweeps over (α, d, n, r) and the statistics read off
//! them: per-cell mean risk, log-risk regressions, dimension spreads and the
//! calibration of the upper-bound exponent.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CovarianceSpec, EntryDist, MeanSpec, MixtureModel, SpectralSummary};
use crate::normal::log_sum_exp;
use crate::risk::{exact_gaussian_log_risk, monte_carlo_risk, upper_exponent};
use crate::rng::{mix64, trial_seed};
use crate::sampling::sample_dataset_slim;
use crate::solvers::{hard_margin_svm_default, min_norm_interpolator, sv_proliferation_predicate, Verdict};

/// Share of failed trials above which a whole cell is marked failed.
pub const CELL_FAILURE_FRACTION: f64 = 0.1;

fn default_radii() -> Vec<f64> {
    (1..=8).map(|k| 2.0 * k as f64).collect()
}
fn default_trials() -> usize {
    100
}
fn default_entry() -> EntryDist {
    EntryDist::Gaussian
}
fn default_mc_samples() -> usize {
    100_000
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "yes")]
    pub records: bool,
    #[serde(default = "yes")]
    pub aggregate: bool,
    #[serde(default = "yes")]
    pub regression: bool,
    #[serde(default = "yes")]
    pub plot_script: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            records: true,
            aggregate: true,
            regression: true,
            plot_script: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: Vec<f64>,
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    #[serde(default = "default_radii")]
    pub r: Vec<f64>,
    #[serde(default = "default_entry")]
    pub entry_dist: EntryDist,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Monte-Carlo samples per trial for non-Gaussian entries.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Record wall time per trial. Off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub outputs: Outputs,
}

impl SweepConfig {
    pub fn new(alpha: Vec<f64>, d: Vec<usize>, n: Vec<usize>, r: Vec<f64>, trials: usize, seed: u64) -> Self {
        SweepConfig {
            alpha,
            d,
            n,
            r,
            entry_dist: EntryDist::Gaussian,
            trials,
            seed,
            mc_samples: default_mc_samples(),
            timing: false,
            outputs: Outputs::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(s).map_err(|e| Error::Config(format!("sweep TOML: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(s).map_err(|e| Error::Config(format!("sweep JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.alpha.is_empty() || self.d.is_empty() || self.n.is_empty() || self.r.is_empty() {
            return bad("every grid dimension (alpha, d, n, r) needs at least one value");
        }
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if self.alpha.iter().any(|a| !(0.0..1.0).contains(a)) {
            return bad("alpha values must lie in [0, 1)");
        }
        if self.d.iter().chain(self.n.iter()).any(|v| *v == 0) {
            return bad("d and n values must be >= 1");
        }
        if self.r.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("radii must be finite and >= 0");
        }
        if self.entry_dist != EntryDist::Gaussian && self.mc_samples < crate::risk::MC_MIN_SAMPLES {
            return bad("mc_samples must be >= 1000");
        }
        Ok(())
    }

    /// Grid cells in (alpha, d, n, r) order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &alpha in &self.alpha {
            for &d in &self.d {
                for &n in &self.n {
                    for &r in &self.r {
                        out.push(Cell { alpha, d, n, r });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub alpha: f64,
    pub d: usize,
    pub n: usize,
    pub r: f64,
}

impl Cell {
    /// Seed key derived from the cell parameters, so a cell draws the same
    /// data whatever grid it appears in.
    pub fn key(&self) -> u64 {
        let mut h = mix64(self.alpha.to_bits());
        h = mix64(h ^ self.d as u64);
        h = mix64(h ^ self.n as u64);
        mix64(h ^ self.r.to_bits())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub mu_norm: f64,
    pub mu_sigma_sq: f64,
    /// NaN for failed trials.
    pub risk: f64,
    pub log_risk: f64,
    /// `equal`, `not_equal`, `marginal` or `error`.
    pub predicate: String,
    /// `interpolator`, `svm` or `failed`.
    pub solver: String,
    pub iterations: usize,
    pub error: Option<String>,
    pub ms: f64,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: usize,
    pub failures: usize,
    pub failed: bool,
    pub mean_risk: f64,
    pub se_risk: f64,
    /// `ln(mean risk)` through log-sum-exp of per-trial log-risks.
    pub log_mean_risk: f64,
    pub equal_rate: f64,
    pub mean_mu_sigma_sq: f64,
    pub upper_exponent: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    pub cells: Vec<CellSummary>,
}

struct Outcome {
    risk: f64,
    log_risk: f64,
    predicate: &'static str,
    solver: &'static str,
    iterations: usize,
}

fn run_trial(cov: &Arc<CovarianceSpec>, cfg: &SweepConfig, cell: &Cell, seed: u64) -> (f64, f64, Result<Outcome>) {
    let model = match MixtureModel::new(cov.clone(), MeanSpec::UniformSphere { r: cell.r, seed }, cfg.entry_dist) {
        Ok(m) => m,
        Err(e) => return (cell.r, f64::NAN, Err(e)),
    };
    let mu_norm = model.mu.norm();
    let mu_sigma_sq = model.cov.sigma_norm_sq(&model.mu);
    let out = (|| {
        let data = sample_dataset_slim(&model, cell.n, seed)?;
        let verdict = sv_proliferation_predicate(&data, None).map(|v| v.verdict);
        let predicate = match &verdict {
            Ok(v) => v.name(),
            Err(_) => "error",
        };
        let (clf, solver) = match verdict {
            Ok(Verdict::Equal) => (min_norm_interpolator(&data)?, "interpolator"),
            _ => (hard_margin_svm_default(&data)?, "svm"),
        };
        let log_risk = if cfg.entry_dist == EntryDist::Gaussian {
            exact_gaussian_log_risk(&clf.theta, &model)?
        } else {
            monte_carlo_risk(&clf.theta, &model, cfg.mc_samples, seed)?.estimate.ln()
        };
        Ok(Outcome {
            risk: log_risk.exp(),
            log_risk,
            predicate,
            solver,
            iterations: clf.stats.iterations,
        })
    })();
    (mu_norm, mu_sigma_sq, out)
}

/// Run every (cell, trial) pair in parallel. Records come back ordered by
/// cell then trial; trial failures are recorded, never raised.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let cells = cfg.cells();
    let mut covs: BTreeMap<(u64, usize), Arc<CovarianceSpec>> = BTreeMap::new();
    for c in &cells {
        let key = (c.alpha.to_bits(), c.d);
        if let std::collections::btree_map::Entry::Vacant(e) = covs.entry(key) {
            e.insert(Arc::new(CovarianceSpec::polynomial_spectrum(c.d, c.alpha)?));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let records: Vec<SweepRecord> = jobs
        .par_iter()
        .map(|&(ci, t)| {
            let cell = cells[ci];
            let seed = trial_seed(cfg.seed, cell.key(), t as u64);
            let cov = &covs[&(cell.alpha.to_bits(), cell.d)];
            let start = Instant::now();
            let (mu_norm, mu_sigma_sq, out) = run_trial(cov, cfg, &cell, seed);
            let ms = if cfg.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            match out {
                Ok(o) => SweepRecord {
                    cell,
                    trial: t,
                    seed,
                    mu_norm,
                    mu_sigma_sq,
                    risk: o.risk,
                    log_risk: o.log_risk,
                    predicate: o.predicate.into(),
                    solver: o.solver.into(),
                    iterations: o.iterations,
                    error: None,
                    ms,
                },
                Err(e) => SweepRecord {
                    cell,
                    trial: t,
                    seed,
                    mu_norm,
                    mu_sigma_sq,
                    risk: f64::NAN,
                    log_risk: f64::NAN,
                    predicate: "error".into(),
                    solver: "failed".into(),
                    iterations: 0,
                    error: Some(e.to_string()),
                    ms,
                },
            }
        })
        .collect();
    let summaries = aggregate(&records, &cells, &covs);
    Ok(SweepOutput {
        config: cfg.clone(),
        records,
        cells: summaries,
    })
}

fn aggregate(
    records: &[SweepRecord],
    cells: &[Cell],
    covs: &BTreeMap<(u64, usize), Arc<CovarianceSpec>>,
) -> Vec<CellSummary> {
    cells
        .iter()
        .map(|cell| {
            let rs: Vec<&SweepRecord> = records.iter().filter(|r| r.cell == *cell).collect();
            let cov = &covs[&(cell.alpha.to_bits(), cell.d)];
            summarize(*cell, &rs, cov)
        })
        .collect()
}

/// Per-cell statistics over the successful trials of one cell.
pub fn summarize(cell: Cell, records: &[&SweepRecord], cov: &CovarianceSpec) -> CellSummary {
    let ok: Vec<&SweepRecord> = records.iter().copied().filter(|r| !r.failed()).collect();
    let failures = records.len() - ok.len();
    let k = ok.len() as f64;
    let mean_risk = ok.iter().map(|r| r.risk).sum::<f64>() / k;
    let se_risk = if ok.len() > 1 {
        let var = ok.iter().map(|r| (r.risk - mean_risk).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    let logs: Vec<f64> = ok.iter().map(|r| r.log_risk).collect();
    let log_mean_risk = log_sum_exp(&logs) - k.ln();
    let equal_rate = ok.iter().filter(|r| r.predicate == "equal").count() as f64 / k;
    let mean_mu_sigma_sq = ok.iter().map(|r| r.mu_sigma_sq).sum::<f64>() / k;
    let summary = SpectralSummary {
        trace: cov.trace(),
        frobenius: cov.frobenius(),
        spectral: cov.spectral_norm(),
        mu_norm: cell.r,
        mu_sigma_norm: mean_mu_sigma_sq.sqrt(),
    };
    CellSummary {
        cell,
        trials: records.len(),
        failures,
        failed: failures as f64 > CELL_FAILURE_FRACTION * records.len() as f64,
        mean_risk,
        se_risk,
        log_mean_risk,
        equal_rate,
        mean_mu_sigma_sq,
        upper_exponent: upper_exponent(cell.n, &summary),
    }
}

pub const RECORD_HEADER: &str = "alpha,d,n,r,trial,risk,log_risk,predicate,solver,seed,ms";
pub const CELL_HEADER: &str =
    "alpha,d,n,r,trials,failures,failed,mean_risk,se_risk,log_mean_risk,equal_rate,mean_mu_sigma_sq,upper_exponent";

fn opt_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn write_records_csv<W: Write>(mut w: W, records: &[SweepRecord]) -> Result<()> {
    writeln!(w, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.cell.alpha,
            r.cell.d,
            r.cell.n,
            r.cell.r,
            r.trial,
            opt_float(r.risk),
            opt_float(r.log_risk),
            r.predicate,
            r.solver,
            r.seed,
            r.ms
        )?;
    }
    Ok(())
}

pub fn write_cells_csv<W: Write>(mut w: W, cells: &[CellSummary]) -> Result<()> {
    writeln!(w, "{CELL_HEADER}")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.cell.alpha,
            c.cell.d,
            c.cell.n,
            c.cell.r,
            c.trials,
            c.failures,
            c.failed,
            opt_float(c.mean_risk),
            opt_float(c.se_risk),
            opt_float(c.log_mean_risk),
            opt_float(c.equal_rate),
            opt_float(c.mean_mu_sigma_sq),
            opt_float(c.upper_exponent)
        )?;
    }
    Ok(())
}

/// Gnuplot script plotting mean risk against r and −log(mean risk) against
/// r², one curve per (α, d, n). Written as text only.
pub fn plot_script(cells_csv: &str, cells: &[CellSummary]) -> String {
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for c in cells {
        let g = (c.cell.alpha, c.cell.d, c.cell.n);
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let curves = |ycol: &str, xcol: &str| {
        groups
            .iter()
            .map(|(a, d, n)| {
                format!(
                    "'{cells_csv}' using (($1=={a} && $2=={d} && $3=={n}) ? {xcol} : 1/0):({ycol}) with linespoints title 'alpha={a} d={d} n={n}'"
                )
            })
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,600\n\
         set output 'risk_vs_r.png'\n\
         set xlabel 'r'\n\
         set ylabel 'mean risk'\n\
         plot {}\n\
         set output 'neg_log_risk_vs_r2.png'\n\
         set xlabel 'r^2'\n\
         set ylabel '-log(mean risk)'\n\
         plot {}\n",
        curves("$8", "$4"),
        curves("-$10", "($4*$4)")
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    /// Regress on ‖μ‖².
    RadiusSquared,
    /// Regress on ‖μ‖⁴.
    RadiusFourth,
}

impl Feature {
    fn of(self, r: f64) -> f64 {
        match self {
            Feature::RadiusSquared => r * r,
            Feature::RadiusFourth => r.powi(4),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Shape("x and y lengths differ".into()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Fit `−ln(mean risk)` against a power of r over the cells matching
/// (alpha, d, n). Cells that failed or have no finite log-risk are skipped.
pub fn log_risk_regression(cells: &[CellSummary], alpha: f64, d: usize, n: usize, feature: Feature) -> Result<LineFit> {
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.cell.alpha == alpha && c.cell.d == d && c.cell.n == n)
        .filter(|c| !c.failed && c.log_mean_risk.is_finite())
        .map(|c| (feature.of(c.cell.r), -c.log_mean_risk))
        .collect();
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need 3 distinct radii with finite log-risk for alpha={alpha} d={d} n={n}, found {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    fit_line(&xs, &ys)
}

fn curves_by_d<'a>(
    cells: &'a [CellSummary],
    alpha: f64,
    n: usize,
    d_list: &[usize],
) -> Result<Vec<Vec<&'a CellSummary>>> {
    let mut out = Vec::new();
    for &d in d_list {
        let mut curve: Vec<&CellSummary> = cells
            .iter()
            .filter(|c| c.cell.alpha == alpha && c.cell.n == n && c.cell.d == d)
            .collect();
        curve.sort_by(|a, b| a.cell.r.total_cmp(&b.cell.r));
        out.push(curve);
    }
    let grid: Vec<f64> = out.first().map(|c| c.iter().map(|s| s.cell.r).collect()).unwrap_or_default();
    if grid.is_empty() {
        return Err(Error::Shape(format!("no cells for alpha={alpha} n={n}")));
    }
    for (curve, d) in out.iter().zip(d_list) {
        let g: Vec<f64> = curve.iter().map(|s| s.cell.r).collect();
        if g != grid {
            return Err(Error::Shape(format!("radius grid for d={d} differs from d={}", d_list[0])));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionSpread {
    /// (r, max − min of mean risk across d).
    pub spreads: Vec<(f64, f64)>,
    pub max_spread: f64,
}

/// Spread of the mean-risk curves across dimensions at each radius.
pub fn dimension_free_check(cells: &[CellSummary], alpha: f64, n: usize, d_list: &[usize]) -> Result<DimensionSpread> {
    let curves = curves_by_d(cells, alpha, n, d_list)?;
    let spreads: Vec<(f64, f64)> = (0..curves[0].len())
        .map(|i| {
            let vals = curves.iter().map(|c| c[i].mean_risk);
            let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.fold(f64::INFINITY, f64::min);
            (curves[0][i].cell.r, hi - lo)
        })
        .collect();
    let max_spread = spreads.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(DimensionSpread { spreads, max_spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneCheck {
    pub holds: bool,
    /// (r, smaller d, larger d, drop in mean risk, allowed slack).
    pub violations: Vec<(f64, usize, usize, f64, f64)>,
}

/// Mean risk nondecreasing in d at each r, up to `k_se` combined standard
/// errors between consecutive dimensions.
pub fn monotone_in_dimension(
    cells: &[CellSummary],
    alpha: f64,
    n: usize,
    d_list: &[usize],
    k_se: f64,
) -> Result<MonotoneCheck> {
    let mut ds = d_list.to_vec();
    ds.sort_unstable();
    let curves = curves_by_d(cells, alpha, n, &ds)?;
    let mut violations = Vec::new();
    for i in 0..curves[0].len() {
        for j in 1..curves.len() {
            let a = curves[j - 1][i];
            let b = curves[j][i];
            let slack = k_se * (a.se_risk.powi(2) + b.se_risk.powi(2)).sqrt();
            let drop = a.mean_risk - b.mean_risk;
            if drop > slack {
                violations.push((a.cell.r, ds[j - 1], ds[j], drop, slack));
            }
        }
    }
    Ok(MonotoneCheck {
        holds: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentCalibration {
    /// `√(min · max)` of the per-cell ratios.
    pub c: f64,
    /// (cell, −ln(mean risk) / E_up).
    pub ratios: Vec<(Cell, f64)>,
    /// Largest factor by which a ratio departs from `c`.
    pub max_factor: f64,
}

/// Calibrate `−ln(mean risk) ≈ c · E_up` over all usable cells (r > 0,
/// finite log-risk, not failed). The geometric midpoint of the extreme
/// ratios minimizes the worst multiplicative deviation.
pub fn calibrate_upper_exponent(cells: &[CellSummary]) -> Result<ExponentCalibration> {
    let ratios: Vec<(Cell, f64)> = cells
        .iter()
        .filter(|c| !c.failed && c.cell.r > 0.0 && c.upper_exponent > 0.0 && c.log_mean_risk.is_finite())
        .map(|c| (c.cell, -c.log_mean_risk / c.upper_exponent))
        .collect();
    if ratios.is_empty() {
        return Err(Error::InsufficientData("no usable cells for calibration".into()));
    }
    let lo = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return Err(Error::Domain(format!("non-positive log-risk ratio {lo}")));
    }
    let c = (lo * hi).sqrt();
    Ok(ExponentCalibration {
        c,
        max_factor: hi / c,
        ratios,
    })
}

/// Write the configured outputs into `dir` as `<stem>_records.csv`,
/// `<stem>_cells.csv`, `<stem>_regression.json` and `<stem>.gp`. Returns the
/// paths written.
pub fn write_outputs(out: &SweepOutput, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let o = &out.config.outputs;
    if o.records {
        let p = dir.join(format!("{stem}_records.csv"));
        write_records_csv(std::io::BufWriter::new(std::fs::File::create(&p)?), &out.records)?;
        written.push(p);
    }
    let cells_name = format!("{stem}_cells.csv");
    if o.aggregate {
        let p = dir.join(&cells_name);
        write_cells_csv(std::io::BufWriter::new(std::fs::File::create(&p)?), &out.cells)?;
        written.push(p);
    }
    if o.regression {
        let p = dir.join(format!("{stem}_regression.json"));
        let fits = regression_table(out);
        let mut f = std::fs::File::create(&p)?;
        writeln!(f, "{}", serde_json::to_string_pretty(&fits).map_err(|e| Error::Config(e.to_string()))?)?;
        written.push(p);
    }
    if o.plot_script {
        let p = dir.join(format!("{stem}.gp"));
        std::fs::write(&p, plot_script(&cells_name, &out.cells))?;
        written.push(p);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionRow {
    pub alpha: f64,
    pub d: usize,
    pub n: usize,
    pub on_r2: Option<LineFit>,
    pub on_r4: Option<LineFit>,
}

/// Both regressions for every (α, d, n) group that has enough points.
pub fn regression_table(out: &SweepOutput) -> Vec<RegressionRow> {
    let mut rows = Vec::new();
    for &alpha in &out.config.alpha {
        for &d in &out.config.d {
            for &n in &out.config.n {
                rows.push(RegressionRow {
                    alpha,
                    d,
                    n,
                    on_r2: log_risk_regression(&out.cells, alpha, d, n, Feature::RadiusSquared).ok(),
                    on_r4: log_risk_regression(&out.cells, alpha, d, n, Feature::RadiusFourth).ok(),
                });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SweepConfig {
        SweepConfig::new(vec![0.0, 0.5], vec![60], vec![6], vec![0.0, 2.0, 3.0], 12, seed)
    }

    #[test]
    fn zero_radius_cells_are_coin_flips() {
        let out = run_sweep(&small(1)).unwrap();
        for c in out.cells.iter().filter(|c| c.cell.r == 0.0) {
            assert_eq!(c.mean_risk, 0.5);
            assert_eq!(c.se_risk, 0.0);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let a = run_sweep(&small(7)).unwrap();
        let b = run_sweep(&small(7)).unwrap();
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_records_csv(&mut ca, &a.records).unwrap();
        write_records_csv(&mut cb, &b.records).unwrap();
        assert_eq!(ca, cb);
        let c = run_sweep(&small(8)).unwrap();
        let mut cc = Vec::new();
        write_records_csv(&mut cc, &c.records).unwrap();
        assert_ne!(ca, cc);
    }

    #[test]
    fn records_are_complete_and_ordered() {
        let cfg = small(2);
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), cfg.cells().len() * cfg.trials);
        for (i, r) in out.records.iter().enumerate() {
            assert_eq!(r.trial, i % cfg.trials);
            assert!(!r.failed());
            assert!((0.0..=1.0).contains(&r.risk));
        }
    }

    #[test]
    fn aggregate_mean_is_plain_mean() {
        let out = run_sweep(&small(3)).unwrap();
        for c in &out.cells {
            let rs: Vec<f64> = out.records.iter().filter(|r| r.cell == c.cell).map(|r| r.risk).collect();
            let mean = rs.iter().sum::<f64>() / rs.len() as f64;
            assert!((c.mean_risk - mean).abs() <= 1e-15);
            assert!((c.log_mean_risk - mean.ln()).abs() <= 1e-12);
        }
    }

    #[test]
    fn synthetic_exponential_regression() {
        let cells: Vec<CellSummary> = (1..=6)
            .map(|k| {
                let r = k as f64;
                CellSummary {
                    cell: Cell { alpha: 0.0, d: 10, n: 2, r },
                    trials: 1,
                    failures: 0,
                    failed: false,
                    mean_risk: (-2.0 * r * r).exp(),
                    se_risk: 0.0,
                    log_mean_risk: -2.0 * r * r,
                    equal_rate: 1.0,
                    mean_mu_sigma_sq: r * r,
                    upper_exponent: r * r,
                }
            })
            .collect();
        let fit = log_risk_regression(&cells, 0.0, 10, 2, Feature::RadiusSquared).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let quartic = log_risk_regression(&cells, 0.0, 10, 2, Feature::RadiusFourth).unwrap();
        assert!(quartic.r_squared < fit.r_squared);
        assert!(matches!(
            log_risk_regression(&cells[..2], 0.0, 10, 2, Feature::RadiusSquared),
            Err(Error::InsufficientData(_))
        ));
        let cal = calibrate_upper_exponent(&cells).unwrap();
        assert!((cal.c - 2.0).abs() < 1e-12 && (cal.max_factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_dimension_has_zero_spread() {
        let out = run_sweep(&small(4)).unwrap();
        let s = dimension_free_check(&out.cells, 0.0, 6, &[60]).unwrap();
        assert_eq!(s.max_spread, 0.0);
        assert!(dimension_free_check(&out.cells, 0.0, 6, &[60, 61]).is_err());
        assert!(monotone_in_dimension(&out.cells, 0.0, 6, &[60], 2.0).unwrap().holds);
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = SweepConfig::from_toml_str("alpha = [0.8]\nd = [500, 1000]\nn = [10]\ntrials = 5\nseed = 9\n").unwrap();
        assert_eq!(cfg.r, vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
        assert_eq!(cfg.trials, 5);
        assert!(cfg.outputs.records && !cfg.timing);
        assert!(SweepConfig::from_toml_str("alpha = []\nd = [5]\nn = [2]\n").is_err());
        assert!(SweepConfig::from_toml_str("alpha = [1.0]\nd = [5]\nn = [2]\n").is_err());
        assert!(SweepConfig::from_toml_str("alpha = [0.1]\nd = [5]\nn = [2]\ntrials = 0\n").is_err());
        assert!(SweepConfig::from_toml_str("alpha = [0.1]\nd = [5]\nn = [2]\nbogus = 1\n").is_err());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SweepConfig::from_json_str(&json).unwrap(), cfg);
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        // n > d = 1 makes the Gram singular and, with r = 0, twelve random
        // labels on a line are almost never separable through the origin.
        let cfg = SweepConfig::new(vec![0.0], vec![1], vec![12], vec![0.0], 5, 1);
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 5);
        assert!(out.records.iter().all(|r| r.failed()));
        assert!(out.cells[0].failed);
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &out.records).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().contains(",,,error,failed,"));
    }

    #[test]
    fn csv_headers_and_plot_script() {
        let out = run_sweep(&small(5)).unwrap();
        let mut buf = Vec::new();
        write_cells_csv(&mut buf, &out.cells).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CELL_HEADER);
        assert_eq!(text.lines().count(), out.cells.len() + 1);
        let gp = plot_script("x_cells.csv", &out.cells);
        assert!(gp.contains("'x_cells.csv'") && gp.contains("alpha=0.5"));
    }
}
