//! Linear classifiers fitted in Gram space: the minimum-norm interpolator,
//! the intercept-free hard-margin SVM, logistic gradient descent, and the
//! support-vector proliferation test deciding when SVM and interpolator agree.
//!
//! Everything works with n×n matrices (`XXᵀ` and friends); d×d matrices are
//! never formed.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gram, Cholesky};
use crate::sampling::Dataset;

pub const DEFAULT_SVM_TOL: f64 = 1e-10;
pub const DEFAULT_SVM_MAX_ITER: usize = 200_000;
/// Relative width of the `marginal` band: τ = this · ‖(XXᵀ)⁻¹y‖∞.
pub const DEFAULT_TAU_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Svm,
    Interpolator,
    LogisticGd,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Svm => "svm",
            Provenance::Interpolator => "interpolator",
            Provenance::LogisticGd => "logistic_gd",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveStats {
    /// Coordinate sweeps (SVM), gradient steps (logistic), 0 for direct solves.
    pub iterations: usize,
    /// Max constraint residual (interpolator), relative duality gap (SVM),
    /// final training loss (logistic).
    pub residual: f64,
    /// `min_i y_i⟨θ, x_i⟩`.
    pub min_margin: f64,
    /// Number of strictly positive dual coefficients (SVM); n otherwise.
    pub support_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearClassifier {
    pub theta: DVector<f64>,
    pub provenance: Provenance,
    pub stats: SolveStats,
}

impl LinearClassifier {
    pub fn norm(&self) -> f64 {
        self.theta.norm()
    }

    /// `y_i⟨θ, x_i⟩` for every training point.
    pub fn margins(&self, data: &Dataset) -> DVector<f64> {
        (&data.x * &self.theta).component_mul(&data.y)
    }

    /// `‖θ − other‖ / ‖other‖`.
    pub fn relative_distance(&self, other: &LinearClassifier) -> f64 {
        (&self.theta - &other.theta).norm() / other.theta.norm()
    }
}

/// `K = diag(y) XXᵀ diag(y)`.
fn signed_gram(data: &Dataset) -> DMatrix<f64> {
    let mut k = gram(&data.x);
    let y = &data.y;
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            k[(i, j)] *= y[i] * y[j];
        }
    }
    k
}

/// `θ = Xᵀ (y ∘ coef)`.
fn primal_from_dual(data: &Dataset, coef: &DVector<f64>) -> DVector<f64> {
    data.x.transpose() * coef.component_mul(&data.y)
}

/// `(XXᵀ)⁻¹ y` via a Cholesky factorization with two refinement rounds.
fn gram_solve_labels(data: &Dataset) -> Result<DVector<f64>> {
    let g = gram(&data.x);
    let chol = Cholesky::factor(&g)?;
    Ok(chol.solve_refined(&g, &data.y, 2))
}

/// `θ = Xᵀ(XXᵀ)⁻¹y`.
pub fn min_norm_interpolator(data: &Dataset) -> Result<LinearClassifier> {
    if data.n() > data.d() {
        return Err(Error::Domain(format!(
            "interpolation needs n <= d, got n = {} and d = {}",
            data.n(),
            data.d()
        )));
    }
    let w = gram_solve_labels(data)?;
    let theta = data.x.transpose() * w;
    let margins = (&data.x * &theta).component_mul(&data.y);
    let residual = margins.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    Ok(LinearClassifier {
        theta,
        provenance: Provenance::Interpolator,
        stats: SolveStats {
            iterations: 0,
            residual,
            min_margin: margins.min(),
            support_size: data.n(),
        },
    })
}

struct DualState {
    alpha: DVector<f64>,
    /// `g = Kα`, the current margins.
    g: DVector<f64>,
}

impl DualState {
    fn refresh(&mut self, k: &DMatrix<f64>) {
        self.g = k * &self.alpha;
    }

    /// Relative gap between the feasible primal point θ/m_min and the dual
    /// objective; infinite while some margin is non-positive.
    fn gap(&self) -> f64 {
        let m_min = self.g.min();
        if !(m_min > 0.0) {
            return f64::INFINITY;
        }
        let quad = self.alpha.dot(&self.g);
        let dual = self.alpha.sum() - 0.5 * quad;
        let primal = 0.5 * quad / (m_min * m_min);
        ((primal - dual) / primal).max(0.0)
    }

    fn support(&self) -> Vec<bool> {
        self.alpha.iter().map(|a| *a > 0.0).collect()
    }
}

/// Solve `K_SS a = 1` on the current support. Returns the dual vector with
/// zeros off the support, or `None` if the subproblem is singular or the
/// solution leaves the positive orthant.
fn polish(k: &DMatrix<f64>, support: &[bool]) -> Option<DVector<f64>> {
    let idx: Vec<usize> = (0..support.len()).filter(|&i| support[i]).collect();
    if idx.is_empty() {
        return None;
    }
    let m = idx.len();
    let ks = DMatrix::from_fn(m, m, |a, b| k[(idx[a], idx[b])]);
    let chol = Cholesky::factor(&ks).ok()?;
    let a = chol.solve_refined(&ks, &DVector::from_element(m, 1.0), 2);
    if a.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let mut alpha = DVector::zeros(support.len());
    for (p, &i) in idx.iter().enumerate() {
        alpha[i] = a[p];
    }
    Some(alpha)
}

/// Hard-margin SVM without intercept.
///
/// Maximizes `Σα_i − ½ αᵀKα` over `α ≥ 0` by cyclic exact coordinate
/// updates `α_i ← max(0, α_i + (1 − (Kα)_i)/K_ii)`. Whenever the support set
/// changes, the equality system on the support is solved directly and kept
/// if it closes the gap; this turns the linear tail of coordinate ascent into
/// an exact finish.
pub fn hard_margin_svm(data: &Dataset, tol: f64, max_iter: usize) -> Result<LinearClassifier> {
    if !(tol > 0.0) {
        return Err(Error::Domain("duality-gap tolerance must be positive".into()));
    }
    let n = data.n();
    let k = signed_gram(data);
    // A zero feature row has margin 0 under every θ.
    if (0..n).any(|i| !(k[(i, i)] > 0.0)) {
        return Err(Error::NotSeparable { min_margin: 0.0 });
    }

    let mut st = DualState {
        alpha: DVector::zeros(n),
        g: DVector::zeros(n),
    };
    let mut last_polished: Option<Vec<bool>> = None;
    let mut gap = f64::INFINITY;
    let mut sweeps = 0;

    while sweeps < max_iter {
        sweeps += 1;
        for i in 0..n {
            let kii = k[(i, i)];
            let old = st.alpha[i];
            let new = (old + (1.0 - st.g[i]) / kii).max(0.0);
            let delta = new - old;
            if delta != 0.0 {
                st.alpha[i] = new;
                st.g.axpy(delta, &k.column(i), 1.0);
            }
        }
        if sweeps % 64 == 0 {
            st.refresh(&k);
        }
        gap = st.gap();
        if gap <= tol {
            break;
        }

        let support = st.support();
        if last_polished.as_ref() != Some(&support) {
            if let Some(alpha) = polish(&k, &support) {
                let mut cand = DualState {
                    alpha,
                    g: DVector::zeros(n),
                };
                cand.refresh(&k);
                let cand_gap = cand.gap();
                if cand_gap <= tol {
                    st = cand;
                    gap = cand_gap;
                    break;
                }
            }
            last_polished = Some(support);
        }

        if !st.alpha.sum().is_finite() || st.alpha.sum() > 1e300 {
            break;
        }
    }

    st.refresh(&k);
    gap = gap.min(st.gap());
    let min_margin = st.g.min();
    if gap > tol {
        if !(min_margin > 0.0) {
            return Err(Error::NotSeparable { min_margin });
        }
        return Err(Error::NotConverged {
            iterations: sweeps,
            gap,
        });
    }

    let theta = primal_from_dual(data, &st.alpha);
    Ok(LinearClassifier {
        theta,
        provenance: Provenance::Svm,
        stats: SolveStats {
            iterations: sweeps,
            residual: gap,
            min_margin,
            support_size: st.alpha.iter().filter(|a| **a > 0.0).count(),
        },
    })
}

pub fn hard_margin_svm_default(data: &Dataset) -> Result<LinearClassifier> {
    hard_margin_svm(data, DEFAULT_SVM_TOL, DEFAULT_SVM_MAX_ITER)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equal,
    NotEqual,
    Marginal,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Equal => "equal",
            Verdict::NotEqual => "not_equal",
            Verdict::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceVerdict {
    /// `c_i = y_i · ((XXᵀ)⁻¹y)_i`.
    pub criterion: Vec<f64>,
    pub min: f64,
    pub verdict: Verdict,
    pub tau: f64,
}

/// Every training point is a support vector (so SVM = interpolator) exactly
/// when all `c_i = y_i((XXᵀ)⁻¹y)_i` are positive. `tau` defaults to
/// `1e-10·‖(XXᵀ)⁻¹y‖∞`; values within `tau` of zero are `marginal`.
pub fn sv_proliferation_predicate(data: &Dataset, tau: Option<f64>) -> Result<EquivalenceVerdict> {
    let w = gram_solve_labels(data)?;
    let tau = tau.unwrap_or(DEFAULT_TAU_RTOL * w.amax());
    if !(tau >= 0.0) {
        return Err(Error::Domain("tau must be non-negative".into()));
    }
    let criterion: Vec<f64> = w.iter().zip(data.y.iter()).map(|(w, y)| w * y).collect();
    let min = criterion.iter().cloned().fold(f64::INFINITY, f64::min);
    let verdict = if min.abs() <= tau {
        Verdict::Marginal
    } else if min > tau {
        Verdict::Equal
    } else {
        Verdict::NotEqual
    };
    Ok(EquivalenceVerdict {
        criterion,
        min,
        verdict,
        tau,
    })
}

/// `yᵀ(XXᵀ)⁻¹` written through `A = QQᵀ` and `ν = Qμ`.
#[derive(Debug, Clone, Serialize)]
pub struct ShermanMorrisonRow {
    pub row: DVector<f64>,
    /// `D = s(‖μ‖² − t) + (1 + h)²`.
    pub denom: f64,
    /// `yᵀA⁻¹y`.
    pub s: f64,
    /// `νᵀA⁻¹ν`.
    pub t: f64,
    /// `yᵀA⁻¹ν`.
    pub h: f64,
}

/// Closed form of `yᵀ(XXᵀ)⁻¹` from the rank-two update `XXᵀ = A + yνᵀ + νyᵀ
/// + ‖μ‖²yyᵀ`. Needs the latent Q.
pub fn sherman_morrison_row(data: &Dataset) -> Result<ShermanMorrisonRow> {
    let (q, _) = data.latent()?;
    let mu = &data.model.mu;
    let a = gram(q);
    let chol = Cholesky::factor(&a)?;
    let nu = q * mu;
    let a_y = chol.solve_refined(&a, &data.y, 2);
    let a_nu = chol.solve_refined(&a, &nu, 2);
    let s = data.y.dot(&a_y);
    let t = nu.dot(&a_nu);
    let h = data.y.dot(&a_nu);
    let denom = s * (mu.norm_squared() - t) + (1.0 + h).powi(2);
    if !(denom > 0.0) {
        return Err(Error::InternalInvariantViolation(format!(
            "Sherman-Morrison denominator D = {denom:e} is not positive"
        )));
    }
    let row = (a_y * (1.0 + h) - a_nu * s) / denom;
    Ok(ShermanMorrisonRow {
        row,
        denom,
        s,
        t,
        h,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub loss: f64,
    /// Cosine between the iterate and the SVM direction; NaN when the SVM
    /// could not be computed.
    pub cosine: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogisticTrace {
    pub classifier: LinearClassifier,
    pub checkpoints: Vec<Checkpoint>,
}

impl LogisticTrace {
    pub fn final_cosine(&self) -> f64 {
        self.checkpoints.last().map_or(f64::NAN, |c| c.cosine)
    }
}

/// Iterations at which the trace is recorded: about ten per decade, plus the
/// last one.
pub fn log_checkpoints(iters: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = 10f64.powf(k as f64 / 10.0).round() as usize;
        if t > iters {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        k += 1;
    }
    if out.last() != Some(&iters) && iters > 0 {
        out.push(iters);
    }
    out
}

fn softplus_neg(m: f64) -> f64 {
    // ln(1 + e^{−m})
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// Full-batch gradient descent on the mean logistic loss from θ = 0,
/// `θ ← θ + (η/n) Σ σ(−y_i⟨θ,x_i⟩) y_i x_i`, tracked through dual weights
/// `θ = Xᵀ(y ∘ β)`. Records loss and cosine to the SVM solution at
/// log-spaced checkpoints.
pub fn logistic_gd_direction(data: &Dataset, eta: f64, iters: usize) -> Result<LogisticTrace> {
    let reference = hard_margin_svm_default(data).ok();
    logistic_gd_with_reference(data, eta, iters, reference.as_ref())
}

pub fn logistic_gd_with_reference(
    data: &Dataset,
    eta: f64,
    iters: usize,
    reference: Option<&LinearClassifier>,
) -> Result<LogisticTrace> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain("learning rate must be positive and finite".into()));
    }
    let n = data.n();
    let k = signed_gram(data);
    let step = eta / n as f64;
    let mut beta = DVector::<f64>::zeros(n);
    let mut m = DVector::<f64>::zeros(n);
    let mut delta = DVector::<f64>::zeros(n);
    let marks = log_checkpoints(iters);
    let mut next_mark = 0;
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut rises = 0;

    for it in 1..=iters {
        for j in 0..n {
            delta[j] = step / (1.0 + m[j].exp());
        }
        beta += &delta;
        m.gemv(1.0, &k, &delta, 1.0);

        if next_mark < marks.len() && marks[next_mark] == it {
            next_mark += 1;
            m = &k * &beta;
            let loss = m.iter().map(|v| softplus_neg(*v)).sum::<f64>() / n as f64;
            let cosine = match reference {
                Some(r) => {
                    let theta = primal_from_dual(data, &beta);
                    theta.dot(&r.theta) / (theta.norm() * r.theta.norm())
                }
                None => f64::NAN,
            };
            if let Some(prev) = checkpoints.last().map(|c: &Checkpoint| c.loss) {
                if loss > prev * (1.0 + 1e-12) {
                    rises += 1;
                    if rises >= 3 {
                        return Err(Error::StepTooLarge { iteration: it });
                    }
                } else {
                    rises = 0;
                }
            }
            checkpoints.push(Checkpoint {
                iteration: it,
                loss,
                cosine,
            });
        }
    }

    let theta = primal_from_dual(data, &beta);
    let margins = (&data.x * &theta).component_mul(&data.y);
    let loss = margins.iter().map(|v| softplus_neg(*v)).sum::<f64>() / n as f64;
    Ok(LogisticTrace {
        classifier: LinearClassifier {
            theta,
            provenance: Provenance::LogisticGd,
            stats: SolveStats {
                iterations: iters,
                residual: loss,
                min_margin: margins.min(),
                support_size: n,
            },
        },
        checkpoints,
    })
}
