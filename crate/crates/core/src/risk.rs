//! Population risk, risk bounds, their hypotheses, and the concentration
//! diagnostics behind them.
//!
//! For a Gaussian mixture the risk of θ has the closed form
//! `Φ(−⟨θ, μ⟩ / ‖θ‖_Σ)`; other entry distributions go through Monte Carlo.
//! The bound evaluators take their absolute constants as parameters since
//! only their scaling is meaningful.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gram, shifted_spectral_norm, Cholesky};
use crate::model::{EntryDist, MixtureModel, SpectralSummary};
use crate::normal;
use crate::rng::{self, mix64, streams};
use crate::sampling::Dataset;
use crate::solvers::{sherman_morrison_row, LinearClassifier, Provenance};

/// `⟨θ, μ⟩ / ‖θ‖_Σ`.
pub fn margin_statistic(theta: &DVector<f64>, model: &MixtureModel) -> Result<f64> {
    if theta.len() != model.dim() {
        return Err(Error::Shape(format!(
            "theta has length {}, model has d = {}",
            theta.len(),
            model.dim()
        )));
    }
    let sn = model.cov.sigma_norm(theta);
    if !(sn > 0.0) {
        return Err(Error::Domain("risk is undefined for theta = 0".into()));
    }
    Ok(theta.dot(&model.mu) / sn)
}

fn require_gaussian(model: &MixtureModel) -> Result<()> {
    match model.entry_dist {
        EntryDist::Gaussian => Ok(()),
        other => Err(Error::NotExact(other.name().into())),
    }
}

/// `Φ(−⟨θ, μ⟩ / ‖θ‖_Σ)`; Gaussian entries only.
pub fn exact_gaussian_risk(theta: &DVector<f64>, model: &MixtureModel) -> Result<f64> {
    require_gaussian(model)?;
    Ok(normal::cdf(-margin_statistic(theta, model)?))
}

/// Natural log of [`exact_gaussian_risk`], finite far past underflow.
pub fn exact_gaussian_log_risk(theta: &DVector<f64>, model: &MixtureModel) -> Result<f64> {
    require_gaussian(model)?;
    Ok(normal::log_cdf(-margin_statistic(theta, model)?))
}

pub const MC_MIN_SAMPLES: usize = 1000;
const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// `√(p̂(1 − p̂)/N)`.
    pub stderr: f64,
    pub n_samples: usize,
}

/// Fraction of fresh draws with `y⟨θ, x⟩ < 0`.
///
/// Uses `y⟨θ, x⟩ = ⟨θ, μ⟩ + y⟨Λ^{1/2}Vᵀθ, u⟩`, so each draw costs d entries.
/// Work is split into fixed-size chunks with their own streams, so the
/// estimate does not depend on the thread count.
pub fn monte_carlo_risk(theta: &DVector<f64>, model: &MixtureModel, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if theta.len() != model.dim() {
        return Err(Error::Shape(format!(
            "theta has length {}, model has d = {}",
            theta.len(),
            model.dim()
        )));
    }
    let w: Vec<f64> = model.cov.whiten_direction(theta).iter().cloned().collect();
    let signal = theta.dot(&model.mu);
    let dist = model.entry_dist;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut rng = rng::stream(mix64(seed ^ mix64(c as u64)), streams::MONTE_CARLO);
            let mut count = 0u64;
            for _ in 0..len {
                let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let noise: f64 = w.iter().map(|wk| wk * dist.sample(&mut rng)).sum();
                if signal + y * noise < 0.0 {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let p = errors as f64 / n_samples as f64;
    Ok(McEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n_samples as f64).sqrt(),
        n_samples,
    })
}

/// `exp(−C (θᵀμ)² / ‖θ‖_Σ²)`.
pub fn sub_gaussian_risk_bound(theta: &DVector<f64>, model: &MixtureModel, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain("constant C must be positive".into()));
    }
    let m = margin_statistic(theta, model)?;
    Ok((-c * m * m).exp())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UpperBound {
    /// `n‖μ‖⁴ / (n‖μ‖_Σ² + ‖Σ‖_F² + n‖Σ‖₂²)`.
    pub exponent: f64,
    /// `exp(−C′ · exponent)`.
    pub bound: f64,
    /// For Σ = I only: `n‖μ‖⁴ / (n‖μ‖² + d)`.
    pub isotropic_exponent: Option<f64>,
    pub isotropic_bound: Option<f64>,
}

pub fn upper_exponent(n: usize, s: &SpectralSummary) -> f64 {
    let n = n as f64;
    let num = n * s.mu_norm.powi(4);
    if num == 0.0 {
        return 0.0;
    }
    num / (n * s.mu_sigma_norm.powi(2) + s.frobenius.powi(2) + n * s.spectral.powi(2))
}

/// Σ = I exactly when ‖Σ‖₂ = 1 and tr(Σ) = ‖Σ‖_F² (all λ ≤ 1 and Σλ = Σλ²).
fn is_identity(s: &SpectralSummary) -> bool {
    s.spectral == 1.0 && (s.trace - s.frobenius * s.frobenius).abs() <= 1e-12 * s.trace
}

/// Upper risk bound `exp(−C′·E_up)` for the maximum-margin classifier.
pub fn upper_risk_bound_from_summary(n: usize, s: &SpectralSummary, c_prime: f64) -> Result<UpperBound> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(c_prime > 0.0) {
        return Err(Error::Domain("constant C' must be positive".into()));
    }
    let exponent = upper_exponent(n, s);
    let isotropic_exponent = is_identity(s).then(|| {
        let nf = n as f64;
        let num = nf * s.mu_norm.powi(4);
        if num == 0.0 {
            0.0
        } else {
            num / (nf * s.mu_norm.powi(2) + s.trace)
        }
    });
    Ok(UpperBound {
        exponent,
        bound: (-c_prime * exponent).exp(),
        isotropic_exponent,
        isotropic_bound: isotropic_exponent.map(|e| (-c_prime * e).exp()),
    })
}

pub fn upper_risk_bound(n: usize, model: &MixtureModel, c_prime: f64) -> Result<UpperBound> {
    upper_risk_bound_from_summary(n, &model.summaries(), c_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerCase {
    /// Mean-dominated: `n‖μ‖_Σ² ≥ C(‖Σ‖_F² + n‖Σ‖₂²)`.
    MeanDominated,
    /// Noise-dominated: `‖Σ‖_F² ≥ C·n(‖μ‖_Σ² + ‖Σ‖₂²)`.
    NoiseDominated,
    Neither,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBound {
    pub case: LowerCase,
    /// `‖μ‖⁴ / ‖μ‖_Σ²`.
    pub mean_dominated_exponent: f64,
    /// `n‖μ‖⁴ / ‖Σ‖_F²`.
    pub noise_dominated_exponent: f64,
    /// `C″·exp(−C′·exponent)` of the applicable case.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    pub c: f64,
    pub c_prime: f64,
    pub c_dprime: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c: 1.0,
            c_prime: 1.0,
            c_dprime: 1.0,
        }
    }
}

impl Constants {
    fn validate(&self) -> Result<()> {
        if [self.c, self.c_prime, self.c_dprime].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain("constants C, C', C'' must be positive and finite".into()))
        }
    }
}

pub fn lower_risk_bound_from_summary(n: usize, s: &SpectralSummary, k: Constants) -> Result<LowerBound> {
    k.validate()?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let nf = n as f64;
    let mu4 = s.mu_norm.powi(4);
    let ms2 = s.mu_sigma_norm.powi(2);
    let f2 = s.frobenius.powi(2);
    let sp2 = s.spectral.powi(2);
    let mean_exp = if mu4 == 0.0 { 0.0 } else { mu4 / ms2 };
    let noise_exp = nf * mu4 / f2;
    let case = if nf * ms2 >= k.c * (f2 + nf * sp2) {
        LowerCase::MeanDominated
    } else if f2 >= k.c * nf * (ms2 + sp2) {
        LowerCase::NoiseDominated
    } else {
        LowerCase::Neither
    };
    let bound = match case {
        LowerCase::MeanDominated => Some(k.c_dprime * (-k.c_prime * mean_exp).exp()),
        LowerCase::NoiseDominated => Some(k.c_dprime * (-k.c_prime * noise_exp).exp()),
        LowerCase::Neither => None,
    };
    Ok(LowerBound {
        case,
        mean_dominated_exponent: mean_exp,
        noise_dominated_exponent: noise_exp,
        bound,
    })
}

/// Lower risk bound for the maximum-margin classifier; Gaussian entries only.
pub fn lower_risk_bound(n: usize, model: &MixtureModel, k: Constants) -> Result<LowerBound> {
    require_gaussian(model)?;
    lower_risk_bound_from_summary(n, &model.summaries(), k)
}

#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    /// Right-hand side without the constant C.
    pub rhs: f64,
    /// `lhs / (C·rhs)`; infinite when `rhs = 0`.
    pub ratio: f64,
    pub holds: bool,
}

impl Condition {
    fn new(name: &'static str, lhs: f64, rhs: f64, c: f64) -> Self {
        let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / (c * rhs) };
        Condition {
            name,
            lhs,
            rhs,
            ratio,
            holds: ratio >= 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssumptionMode {
    /// Use the eigenvector-aligned form of the mean conditions; requires
    /// `Σμ = λμ` for some eigenvalue λ.
    pub alignment: bool,
    /// Add `tr(Σ) ≥ C·n√log n` and `tr(Σ) ≥ C·n‖μ‖_Σ`.
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionVerdict {
    pub c: f64,
    pub conditions: Vec<Condition>,
    pub all_hold: bool,
    /// μ = 0: the mean conditions hold only trivially.
    pub degenerate: bool,
}

impl AssumptionVerdict {
    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

pub fn check_assumptions(n: usize, model: &MixtureModel, c: f64, mode: AssumptionMode) -> Result<AssumptionVerdict> {
    if !(c > 0.0) {
        return Err(Error::Domain("constant C must be positive".into()));
    }
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let s = model.summaries();
    let nf = n as f64;
    let sqrt_log_n = nf.ln().sqrt();
    let mut conditions = vec![
        Condition::new("trace_vs_spectral", s.trace, nf.powf(1.5) * s.spectral, c),
        Condition::new("trace_vs_frobenius", s.trace, nf * s.frobenius, c),
    ];
    if mode.alignment {
        let lambda = aligned_eigenvalue(model)?;
        conditions.push(Condition::new(
            "trace_vs_mean",
            s.trace,
            nf * (lambda * nf.ln()).sqrt() * s.mu_norm,
            c,
        ));
        conditions.push(Condition::new("mean_strength", s.mu_norm.powi(2), lambda, c));
    } else {
        conditions.push(Condition::new("trace_vs_mean", s.trace, nf * sqrt_log_n * s.mu_sigma_norm, c));
        conditions.push(Condition::new("mean_strength", s.mu_norm.powi(2), s.mu_sigma_norm, c));
    }
    if mode.strict {
        conditions.push(Condition::new("trace_vs_log_n", s.trace, nf * sqrt_log_n, c));
        conditions.push(Condition::new("trace_vs_mean_linear", s.trace, nf * s.mu_sigma_norm, c));
    }
    let all_hold = conditions.iter().all(|c| c.holds);
    Ok(AssumptionVerdict {
        c,
        conditions,
        all_hold,
        degenerate: s.mu_norm == 0.0,
    })
}

/// λ with `Σμ = λμ`, checked to relative 1e-10.
fn aligned_eigenvalue(model: &MixtureModel) -> Result<f64> {
    let mu = &model.mu;
    let mu2 = mu.norm_squared();
    if mu2 == 0.0 {
        return Err(Error::Domain("alignment mode needs a non-zero mean".into()));
    }
    let sigma_mu = model.cov.apply(mu);
    let lambda = mu.dot(&sigma_mu) / mu2;
    if (&sigma_mu - mu * lambda).norm() > 1e-10 * sigma_mu.norm() {
        return Err(Error::Domain("alignment mode needs mu to be an eigenvector of Sigma".into()));
    }
    Ok(lambda)
}

/// Empirical concentration and decomposition quantities of one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub trace: f64,
    /// `‖QQᵀ − tr(Σ)·I‖₂`.
    pub eps_lambda: f64,
    /// `‖ZΛ²Zᵀ − ‖Σ‖_F²·I‖₂`.
    pub eps_lambda_prime: f64,
    /// `(yᵀ(XXᵀ)⁻¹Xμ)²`.
    pub i1: f64,
    /// `(yᵀ(XXᵀ)⁻¹y)²·‖μ‖_Σ²`.
    pub i2: f64,
    /// `‖Qᵀ(XXᵀ)⁻¹y‖_Σ²`.
    pub i3: f64,
    /// `yᵀ(XXᵀ)⁻¹y·‖μ‖_Σ`.
    pub j1: f64,
    /// `‖Qᵀ(XXᵀ)⁻¹y‖_Σ`.
    pub j2: f64,
    pub s: f64,
    pub t: f64,
    pub h: f64,
    pub denom: f64,
    /// `(θ_LSᵀμ)² / ‖θ_LS‖_Σ²`, the squared risk argument of the interpolator.
    pub ls_margin_sq: f64,
}

pub fn concentration_diagnostics(data: &Dataset) -> Result<Diagnostics> {
    let (q, z) = data.latent()?;
    let cov = &data.model.cov;
    let mu = &data.model.mu;
    let trace = cov.trace();

    let a = gram(q);
    let eps_lambda = shifted_spectral_norm(&a, trace);
    let mut zl = z.clone();
    for (j, l) in cov.eigenvalues().iter().enumerate() {
        zl.column_mut(j).scale_mut(*l);
    }
    let eps_lambda_prime = shifted_spectral_norm(&gram(&zl), cov.frobenius_sq());

    let g = gram(&data.x);
    let w = Cholesky::factor(&g)?.solve_refined(&g, &data.y, 2);
    let yw = data.y.dot(&w);
    let mu_sigma_sq = cov.sigma_norm_sq(mu);
    let x_mu = &data.x * mu;
    let i1 = w.dot(&x_mu).powi(2);
    let i2 = yw * yw * mu_sigma_sq;
    let qtw = q.transpose() * &w;
    let i3 = cov.sigma_norm_sq(&qtw);
    let j1 = yw * mu_sigma_sq.sqrt();
    let j2 = i3.sqrt();

    let theta_ls = data.x.transpose() * &w;
    let ls_margin_sq = theta_ls.dot(mu).powi(2) / cov.sigma_norm_sq(&theta_ls);

    let sm = sherman_morrison_row(data)?;
    Ok(Diagnostics {
        trace,
        eps_lambda,
        eps_lambda_prime,
        i1,
        i2,
        i3,
        j1,
        j2,
        s: sm.s,
        t: sm.t,
        h: sm.h,
        denom: sm.denom,
        ls_margin_sq,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn le(name: &'static str, lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            name,
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }

    fn ge(name: &'static str, lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            name,
            lhs,
            rhs,
            holds: lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheckReport {
    pub trace: f64,
    pub eps_lambda: f64,
    /// `C·σ_u²(n‖Σ‖₂ + √n‖Σ‖_F)` with the supplied constant.
    pub eps_lambda_theory: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundCheckReport {
    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Constants for the stated (probabilistic) forms of the bounds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckConstants {
    /// Constant in the theoretical ε_λ and in the stated quadratic-form bounds.
    pub c: f64,
    /// Constant of the per-sample leverage bound on `μᵀQᵀA⁻¹e_i`.
    pub c_leverage: f64,
}

impl Default for CheckConstants {
    fn default() -> Self {
        CheckConstants {
            c: 1.0,
            c_leverage: 5.0,
        }
    }
}

/// Quadratic-form sandwiches for `A = QQᵀ` using the empirical ε_λ, the
/// leverage bound on `μᵀQᵀA⁻¹e_i` and the floor on `y_i(A⁻¹y)_i`.
///
/// The `*_algebraic` checks follow from `λ(A) ∈ [tr − ε_λ, tr + ε_λ]` alone
/// and must always hold; the `*_stated` ones replace `‖ν‖²` by
/// `(n ± C√(n log n))‖μ‖_Σ²` and hold only with high probability. When
/// `tr(Σ) ≤ ε_λ` every bound that divides by `tr − ε_λ` is vacuous.
pub fn concentration_bound_checks(data: &Dataset, k: CheckConstants) -> Result<BoundCheckReport> {
    let (q, _) = data.latent()?;
    let cov = &data.model.cov;
    let mu = &data.model.mu;
    let n = data.n() as f64;
    let tr = cov.trace();

    let a = gram(q);
    let eps = shifted_spectral_norm(&a, tr);
    let chol = Cholesky::factor(&a)?;
    let nu = q * mu;
    let a_y = chol.solve_refined(&a, &data.y, 2);
    let a_nu = chol.solve_refined(&a, &nu, 2);
    let s = data.y.dot(&a_y);
    let t = nu.dot(&a_nu);
    let h = data.y.dot(&a_nu);
    let nu2 = nu.norm_squared();
    let ms2 = cov.sigma_norm_sq(mu);
    let ms = ms2.sqrt();

    let below = if tr > eps { tr - eps } else { 0.0 };
    let div_below = |num: f64| if below > 0.0 { num / below } else { f64::INFINITY };
    let log_term = (n * n.ln()).sqrt();

    let leverage = a_nu.amax();
    let floor = (0..data.n()).map(|i| data.y[i] * a_y[i]).fold(f64::INFINITY, f64::min);
    let floor_rhs = if below > 0.0 {
        (tr - n.sqrt() * eps) / (tr * tr - eps * eps)
    } else {
        f64::NEG_INFINITY
    };

    let checks = vec![
        BoundCheck::ge("quad_y_lower", s, n / (tr + eps)),
        BoundCheck::le("quad_y_upper", s, div_below(n)),
        BoundCheck::ge("quad_nu_lower_algebraic", t, nu2 / (tr + eps)),
        BoundCheck::le("quad_nu_upper_algebraic", t, div_below(nu2)),
        BoundCheck::le("cross_y_nu_algebraic", h.abs(), div_below(n.sqrt() * nu2.sqrt())),
        BoundCheck::ge("quad_nu_lower_stated", t, (n - k.c * log_term) * ms2 / (tr + eps)),
        BoundCheck::le("quad_nu_upper_stated", t, div_below((n + k.c * log_term) * ms2)),
        BoundCheck::le("cross_y_nu_stated", h.abs(), div_below(k.c * n * ms)),
        BoundCheck::le("leverage_mu", leverage, k.c_leverage * ms * n.ln().sqrt() / tr),
        BoundCheck::ge("criterion_floor", floor, floor_rhs),
    ];
    let theory = k.c * data.model.sigma_u.powi(2) * (n * cov.spectral_norm() + n.sqrt() * cov.frobenius());
    Ok(BoundCheckReport {
        trace: tr,
        eps_lambda: eps,
        eps_lambda_theory: theory,
        checks,
    })
}

/// Names of the checks that hold deterministically.
pub const ALGEBRAIC_CHECKS: [&str; 5] = [
    "quad_y_lower",
    "quad_y_upper",
    "quad_nu_lower_algebraic",
    "quad_nu_upper_algebraic",
    "cross_y_nu_algebraic",
];

#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub provenance: Provenance,
    pub exact_risk: Option<f64>,
    pub log_exact_risk: Option<f64>,
    pub monte_carlo: Option<McEstimate>,
    pub upper: UpperBound,
    pub lower: Option<LowerBound>,
    pub assumptions: AssumptionVerdict,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    pub constants: Constants,
    pub mode: AssumptionMode,
    /// Monte-Carlo sample count; `None` skips Monte Carlo for Gaussian
    /// models. Non-Gaussian models always get an estimate.
    pub mc_samples: Option<usize>,
    pub mc_seed: u64,
}

pub fn risk_report(n: usize, clf: &LinearClassifier, model: &MixtureModel, opts: ReportOptions) -> Result<RiskReport> {
    let gaussian = model.entry_dist == EntryDist::Gaussian;
    let (exact_risk, log_exact_risk) = if gaussian {
        (
            Some(exact_gaussian_risk(&clf.theta, model)?),
            Some(exact_gaussian_log_risk(&clf.theta, model)?),
        )
    } else {
        (None, None)
    };
    let mc_n = match (opts.mc_samples, gaussian) {
        (Some(m), _) => Some(m),
        (None, false) => Some(100_000),
        (None, true) => None,
    };
    let monte_carlo = mc_n
        .map(|m| monte_carlo_risk(&clf.theta, model, m, opts.mc_seed))
        .transpose()?;
    let k = opts.constants;
    let s = model.summaries();
    Ok(RiskReport {
        provenance: clf.provenance,
        exact_risk,
        log_exact_risk,
        monte_carlo,
        upper: upper_risk_bound_from_summary(n, &s, k.c_prime)?,
        lower: gaussian.then(|| lower_risk_bound_from_summary(n, &s, k)).transpose()?,
        assumptions: check_assumptions(n, model, k.c, opts.mode)?,
    })
}

/// Dense `ZΛ²Zᵀ` helper exposed for tests and tooling.
pub fn weighted_entry_gram(z: &DMatrix<f64>, eigenvalues: &[f64]) -> DMatrix<f64> {
    let mut zl = z.clone();
    for (j, l) in eigenvalues.iter().enumerate() {
        zl.column_mut(j).scale_mut(*l);
    }
    gram(&zl)
}
