//! The mixture law: covariance spectra, mean constructors, entry
//! distributions and the norms the risk bounds consume.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Distribution of the independent entries of `u`. All have mean 0 and
/// variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryDist {
    Gaussian,
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// Uniform on [−√3, √3].
    Uniform,
}

impl EntryDist {
    /// Recorded sub-Gaussian norm bound. Metadata only.
    pub fn sigma_u(self) -> f64 {
        match self {
            EntryDist::Gaussian | EntryDist::Rademacher => 1.0,
            EntryDist::Uniform => 3f64.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryDist::Gaussian => "gaussian",
            EntryDist::Rademacher => "rademacher",
            EntryDist::Uniform => "uniform",
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryDist::Gaussian => StandardNormal.sample(rng),
            EntryDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::Uniform => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
        }
    }
}

impl std::str::FromStr for EntryDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(EntryDist::Gaussian),
            "rademacher" => Ok(EntryDist::Rademacher),
            "uniform" => Ok(EntryDist::Uniform),
            other => Err(Error::Config(format!("unknown entry distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rotation {
    Identity,
    /// Q factor of a seeded Gaussian matrix, columns sign-fixed so that R has
    /// a positive diagonal.
    RandomOrthogonal { seed: u64 },
}

/// `Σ = V Λ Vᵀ` stored as its descending spectrum plus the rotation.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    eigenvalues: Vec<f64>,
    rotation: Rotation,
    v: Option<DMatrix<f64>>,
}

impl CovarianceSpec {
    pub fn new(eigenvalues: Vec<f64>, rotation: Rotation) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Domain("covariance needs d >= 1".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::Domain(format!("eigenvalue {bad} is not strictly positive")));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain("eigenvalues must be non-increasing".into()));
        }
        let v = match rotation {
            Rotation::Identity => None,
            Rotation::RandomOrthogonal { seed } => {
                Some(random_orthogonal(eigenvalues.len(), seed))
            }
        };
        Ok(Self {
            eigenvalues,
            rotation,
            v,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(vec![1.0; d], Rotation::Identity)
    }

    /// `λ_k = k^{−α}`, k = 1..d, identity rotation.
    pub fn polynomial_spectrum(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("polynomial spectrum needs d >= 1".into()));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "decay exponent alpha = {alpha} outside [0, 1)"
            )));
        }
        let eig = (1..=d).map(|k| (k as f64).powf(-alpha)).collect();
        Self::new(eig, Rotation::Identity)
    }

    pub fn with_rotation(self, rotation: Rotation) -> Result<Self> {
        Self::new(self.eigenvalues, rotation)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    /// The materialized V, or `None` for the identity rotation.
    pub fn rotation_matrix(&self) -> Option<&DMatrix<f64>> {
        self.v.as_ref()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * l).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// ‖Σ‖₂ = λ₁.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Vᵀv.
    pub fn to_eigenbasis(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.v {
            None => v.clone(),
            Some(m) => m.tr_mul(v),
        }
    }

    /// V w.
    pub fn from_eigenbasis(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.v {
            None => w.clone(),
            Some(m) => m * w,
        }
    }

    /// `vᵀ Σ v`.
    pub fn sigma_norm_sq(&self, v: &DVector<f64>) -> f64 {
        let w = self.to_eigenbasis(v);
        w.iter().zip(&self.eigenvalues).map(|(a, l)| l * a * a).sum()
    }

    pub fn sigma_norm(&self, v: &DVector<f64>) -> f64 {
        self.sigma_norm_sq(v).sqrt()
    }

    /// Σ v.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut w = self.to_eigenbasis(v);
        for (a, l) in w.iter_mut().zip(&self.eigenvalues) {
            *a *= l;
        }
        self.from_eigenbasis(&w)
    }

    /// `Λ^{1/2} Vᵀ θ`: the coefficients of ⟨θ, q⟩ against the raw entries u.
    pub fn whiten_direction(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut w = self.to_eigenbasis(theta);
        for (a, l) in w.iter_mut().zip(&self.eigenvalues) {
            *a *= l.sqrt();
        }
        w
    }

    /// Eigenvector for λ_k, `k` counted from 1.
    pub fn eigenvector(&self, k: usize) -> Result<DVector<f64>> {
        let d = self.dim();
        if k == 0 || k > d {
            return Err(Error::Domain(format!("eigen-index k = {k} outside 1..={d}")));
        }
        Ok(match &self.v {
            None => {
                let mut e = DVector::zeros(d);
                e[k - 1] = 1.0;
                e
            }
            Some(m) => m.column(k - 1).into_owned(),
        })
    }
}

fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, streams::ROTATION);
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Recipe for the class mean μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanSpec {
    Explicit { values: Vec<f64> },
    /// Uniform on the sphere of radius `r`.
    UniformSphere { r: f64, seed: u64 },
    /// `norm` times the eigenvector of λ_k (k counted from 1).
    EigvecAligned { k: usize, norm: f64 },
    /// First `s` coordinates equal to `gamma`, the rest zero.
    RareWeak { s: usize, gamma: f64 },
}

impl MeanSpec {
    pub fn realize(&self, cov: &CovarianceSpec) -> Result<DVector<f64>> {
        let d = cov.dim();
        match self {
            MeanSpec::Explicit { values } => {
                if values.len() != d {
                    return Err(Error::Shape(format!(
                        "explicit mean has length {}, covariance has d = {d}",
                        values.len()
                    )));
                }
                Ok(DVector::from_column_slice(values))
            }
            MeanSpec::UniformSphere { r, seed } => {
                if !(*r >= 0.0) || !r.is_finite() {
                    return Err(Error::Domain(format!("sphere radius {r} must be >= 0")));
                }
                Ok(uniform_sphere(d, *r, *seed))
            }
            MeanSpec::EigvecAligned { k, norm } => Ok(cov.eigenvector(*k)? * *norm),
            MeanSpec::RareWeak { s, gamma } => {
                if *s > d {
                    return Err(Error::Domain(format!("sparsity s = {s} exceeds d = {d}")));
                }
                let mut mu = DVector::zeros(d);
                mu.rows_mut(0, *s).fill(*gamma);
                Ok(mu)
            }
        }
    }
}

/// A point drawn uniformly from the radius-`r` sphere in ℝᵈ.
pub fn uniform_sphere(d: usize, r: f64, seed: u64) -> DVector<f64> {
    if r == 0.0 {
        return DVector::zeros(d);
    }
    let mut rng = rng::stream(seed, streams::MEAN);
    loop {
        let g = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let norm = g.norm();
        if norm > 0.0 {
            return g * (r / norm);
        }
    }
}

/// The full data-generating law. Immutable once built.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    pub cov: Arc<CovarianceSpec>,
    pub mean: MeanSpec,
    pub mu: DVector<f64>,
    pub entry_dist: EntryDist,
    pub sigma_u: f64,
}

impl MixtureModel {
    pub fn new(cov: Arc<CovarianceSpec>, mean: MeanSpec, entry_dist: EntryDist) -> Result<Self> {
        let mu = mean.realize(&cov)?;
        Ok(Self {
            cov,
            mean,
            mu,
            entry_dist,
            sigma_u: entry_dist.sigma_u(),
        })
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn summaries(&self) -> SpectralSummary {
        // Dimensions agree by construction.
        spectral_summaries(&self.cov, &self.mu).expect("model mean matches covariance")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub trace: f64,
    pub frobenius: f64,
    pub spectral: f64,
    pub mu_norm: f64,
    pub mu_sigma_norm: f64,
}

pub fn spectral_summaries(cov: &CovarianceSpec, mu: &DVector<f64>) -> Result<SpectralSummary> {
    if mu.len() != cov.dim() {
        return Err(Error::Shape(format!(
            "mean has length {}, covariance has d = {}",
            mu.len(),
            cov.dim()
        )));
    }
    Ok(SpectralSummary {
        trace: cov.trace(),
        frobenius: cov.frobenius(),
        spectral: cov.spectral_norm(),
        mu_norm: mu.norm(),
        mu_sigma_norm: cov.sigma_norm(mu),
    })
}

/// Serialized model description (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub d: usize,
    pub spectrum: SpectrumDoc,
    pub mean: MeanDoc,
    #[serde(default = "default_entry_dist")]
    pub entry_dist: EntryDist,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rotation: RotationDoc,
}

fn default_entry_dist() -> EntryDist {
    EntryDist::Gaussian
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumDoc {
    Isotropic,
    Polynomial { alpha: f64 },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanDoc {
    Explicit { values: Vec<f64> },
    UniformSphere { r: f64 },
    EigvecAligned { k: usize, norm: f64 },
    RareWeak { s: usize, gamma: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationDoc {
    #[default]
    Identity,
    Random,
}

impl ModelDoc {
    pub fn build(&self) -> Result<MixtureModel> {
        let rotation = match self.rotation {
            RotationDoc::Identity => Rotation::Identity,
            RotationDoc::Random => Rotation::RandomOrthogonal { seed: self.seed },
        };
        let cov = match &self.spectrum {
            SpectrumDoc::Isotropic => CovarianceSpec::identity(self.d)?,
            SpectrumDoc::Polynomial { alpha } => CovarianceSpec::polynomial_spectrum(self.d, *alpha)?,
            SpectrumDoc::Explicit { values } => {
                if values.len() != self.d {
                    return Err(Error::Shape(format!(
                        "spectrum has {} values, d = {}",
                        values.len(),
                        self.d
                    )));
                }
                CovarianceSpec::new(values.clone(), Rotation::Identity)?
            }
        }
        .with_rotation(rotation)?;
        let mean = match &self.mean {
            MeanDoc::Explicit { values } => MeanSpec::Explicit {
                values: values.clone(),
            },
            MeanDoc::UniformSphere { r } => MeanSpec::UniformSphere {
                r: *r,
                seed: self.seed,
            },
            MeanDoc::EigvecAligned { k, norm } => MeanSpec::EigvecAligned { k: *k, norm: *norm },
            MeanDoc::RareWeak { s, gamma } => MeanSpec::RareWeak { s: *s, gamma: *gamma },
        };
        MixtureModel::new(Arc::new(cov), mean, self.entry_dist)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("model TOML: {e}")))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("model JSON: {e}")))
    }

    /// Load from disk; `.json` files are parsed as JSON, everything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }
}
