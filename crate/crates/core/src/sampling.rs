//! Dataset generation: Rademacher labels, i.i.d. entries `Z`, latent noise
//! `Q = Z Λ^{1/2} Vᵀ` and features `X = y μᵀ + Q`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::MixtureModel;
use crate::rng::{self, streams};

#[derive(Debug, Clone)]
pub struct Dataset {
    /// n×d features, one sample per row.
    pub x: DMatrix<f64>,
    /// Labels in {−1, +1}.
    pub y: DVector<f64>,
    /// Latent noise `Q`; `None` in slim mode.
    pub q: Option<DMatrix<f64>>,
    /// Raw entries `Z`; `None` in slim mode.
    pub z: Option<DMatrix<f64>>,
    pub model: MixtureModel,
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_slim(&self) -> bool {
        self.q.is_none()
    }

    /// The latent matrices, or an error for slim datasets.
    pub fn latent(&self) -> Result<(&DMatrix<f64>, &DMatrix<f64>)> {
        match (&self.q, &self.z) {
            (Some(q), Some(z)) => Ok((q, z)),
            _ => Err(Error::Domain(
                "operation needs the latent Q and Z, dataset was sampled in slim mode".into(),
            )),
        }
    }

    /// Same labels and features with X scaled by `c`; latent parts dropped.
    pub fn scaled(&self, c: f64) -> Dataset {
        Dataset {
            x: &self.x * c,
            y: self.y.clone(),
            q: None,
            z: None,
            model: self.model.clone(),
            seed: self.seed,
        }
    }

    /// Build a dataset from explicit features and labels (no latent parts).
    pub fn from_parts(x: DMatrix<f64>, y: DVector<f64>, model: MixtureModel) -> Result<Dataset> {
        if x.nrows() != y.len() || x.ncols() != model.dim() {
            return Err(Error::Shape(format!(
                "X is {}x{}, y has {} labels, model has d = {}",
                x.nrows(),
                x.ncols(),
                y.len(),
                model.dim()
            )));
        }
        if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
            return Err(Error::Domain("labels must be +1 or -1".into()));
        }
        Ok(Dataset {
            x,
            y,
            q: None,
            z: None,
            model,
            seed: 0,
        })
    }

    /// CSV dump, one row per sample: `y,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("y".to_string())
            .chain((1..=self.d()).map(|j| format!("x{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n() {
            write!(w, "{}", self.y[i])?;
            for j in 0..self.d() {
                write!(w, ",{}", self.x[(i, j)])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Draw `n` samples, keeping `Q` and `Z`.
pub fn sample_dataset(model: &MixtureModel, n: usize, seed: u64) -> Result<Dataset> {
    sample(model, n, seed, true)
}

/// Draw `n` samples without retaining the latent matrices. Labels and
/// features are identical to [`sample_dataset`] with the same seed.
pub fn sample_dataset_slim(model: &MixtureModel, n: usize, seed: u64) -> Result<Dataset> {
    sample(model, n, seed, false)
}

fn sample(model: &MixtureModel, n: usize, seed: u64, keep_latent: bool) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Domain("sample count n must be >= 1".into()));
    }
    let d = model.dim();
    let cov = &model.cov;

    let mut label_rng = rng::stream(seed, streams::LABELS);
    let y = DVector::from_fn(n, |_, _| if label_rng.random::<bool>() { 1.0 } else { -1.0 });

    let mut entry_rng = rng::stream(seed, streams::ENTRIES);
    let dist = model.entry_dist;
    let z = DMatrix::from_fn(n, d, |_, _| dist.sample(&mut entry_rng));

    let sqrt_lambda: Vec<f64> = cov.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let mut q = z.clone();
    for (j, s) in sqrt_lambda.iter().enumerate() {
        q.column_mut(j).scale_mut(*s);
    }
    if let Some(v) = cov.rotation_matrix() {
        q = q * v.transpose();
    }

    let mu = &model.mu;
    let mut x = q.clone();
    for (j, &mj) in mu.iter().enumerate() {
        for i in 0..n {
            x[(i, j)] = y[i] * mj + q[(i, j)];
        }
    }

    Ok(Dataset {
        x,
        y,
        q: keep_latent.then_some(q),
        z: keep_latent.then_some(z),
        model: model.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CovarianceSpec, EntryDist, MeanSpec, Rotation};
    use std::sync::Arc;

    fn model(eig: Vec<f64>, mean: MeanSpec, dist: EntryDist, rot: Rotation) -> MixtureModel {
        let cov = CovarianceSpec::new(eig, rot).unwrap();
        MixtureModel::new(Arc::new(cov), mean, dist).unwrap()
    }

    #[test]
    fn construction_identities() {
        let m = model(
            vec![3.0, 2.0, 1.0, 0.5, 0.25],
            MeanSpec::UniformSphere { r: 2.0, seed: 1 },
            EntryDist::Uniform,
            Rotation::RandomOrthogonal { seed: 8 },
        );
        let ds = sample_dataset(&m, 30, 77).unwrap();
        let (q, z) = ds.latent().unwrap();
        // X = y μᵀ + Q, recomputed the same way, bit for bit.
        for i in 0..30 {
            assert!(ds.y[i] == 1.0 || ds.y[i] == -1.0);
            for j in 0..5 {
                assert_eq!(ds.x[(i, j)], ds.y[i] * m.mu[j] + q[(i, j)]);
            }
        }
        // Q = Z Λ^{1/2} Vᵀ via a dense product.
        let lam_half = DMatrix::from_diagonal(&DVector::from_iterator(
            5,
            m.cov.eigenvalues().iter().map(|l| l.sqrt()),
        ));
        let dense = z * lam_half * m.cov.rotation_matrix().unwrap().transpose();
        assert!((dense - q).amax() <= 1e-12 * q.amax());
    }

    #[test]
    fn deterministic_and_slim_consistent() {
        let m = model(vec![1.0; 8], MeanSpec::RareWeak { s: 2, gamma: 1.0 }, EntryDist::Gaussian, Rotation::Identity);
        let a = sample_dataset(&m, 12, 5).unwrap();
        let b = sample_dataset(&m, 12, 5).unwrap();
        let c = sample_dataset_slim(&m, 12, 5).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.q, b.q);
        assert_eq!(a.x, c.x);
        assert!(c.is_slim() && c.latent().is_err());
        let other = sample_dataset(&m, 12, 6).unwrap();
        assert_ne!(a.x, other.x);
        assert!(sample_dataset(&m, 0, 1).is_err());
    }

    #[test]
    fn centered_noise_column_means() {
        let d = 3;
        let m = model(vec![1.0; d], MeanSpec::Explicit { values: vec![0.0; d] }, EntryDist::Gaussian, Rotation::Identity);
        let n = 100_000;
        let ds = sample_dataset_slim(&m, n, 2024).unwrap();
        let se = (1.0 / n as f64).sqrt();
        for j in 0..d {
            let mean = ds.x.column(j).sum() / n as f64;
            assert!(mean.abs() < 4.0 * se, "column {j} mean {mean}");
        }
        let ybar = ds.y.sum() / n as f64;
        assert!(ybar.abs() < 4.0 * se);
    }

    /// Empirical covariance oracle: entrywise within 4 standard errors of Σ,
    /// with the SE of each entry estimated from the fourth-order products.
    fn check_cov(dist: EntryDist) {
        let n = 100_000;
        let m = model(vec![4.0, 1.0], MeanSpec::Explicit { values: vec![0.0, 0.0] }, dist, Rotation::Identity);
        let ds = sample_dataset(&m, n, 99).unwrap();
        let (q, _) = ds.latent().unwrap();
        let sigma = [[4.0, 0.0], [0.0, 1.0]];
        for a in 0..2 {
            for b in 0..2 {
                let prods: Vec<f64> = (0..n).map(|i| q[(i, a)] * q[(i, b)]).collect();
                let mean = prods.iter().sum::<f64>() / n as f64;
                let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let tol = if se == 0.0 { 1e-12 } else { 4.0 * se };
                assert!((mean - sigma[a][b]).abs() <= tol, "{dist:?} ({a},{b}): {mean}");
            }
        }
    }

    #[test]
    fn noise_covariance_matches_sigma_for_every_entry_dist() {
        check_cov(EntryDist::Gaussian);
        check_cov(EntryDist::Uniform);
        check_cov(EntryDist::Rademacher);
    }

    #[test]
    fn class_conditional_mean() {
        let mu = vec![1.5, -0.5, 0.0];
        let m = model(vec![2.0, 1.0, 1.0], MeanSpec::Explicit { values: mu.clone() }, EntryDist::Rademacher, Rotation::Identity);
        let n = 100_000;
        let ds = sample_dataset_slim(&m, n, 3).unwrap();
        let pos: Vec<usize> = (0..n).filter(|&i| ds.y[i] > 0.0).collect();
        let k = pos.len() as f64;
        for j in 0..3 {
            let mean = pos.iter().map(|&i| ds.x[(i, j)]).sum::<f64>() / k;
            let se = (m.cov.eigenvalues()[j] / k).sqrt();
            assert!((mean - mu[j]).abs() < 4.0 * se, "coord {j}: {mean}");
        }
    }

    #[test]
    fn csv_dump_shape() {
        let m = model(vec![1.0; 2], MeanSpec::Explicit { values: vec![1.0, 0.0] }, EntryDist::Gaussian, Rotation::Identity);
        let ds = sample_dataset(&m, 3, 1).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "y,x1,x2");
        assert_eq!(lines.len(), 4);
        let back: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, ds.x[(0, 0)]);
    }
}
