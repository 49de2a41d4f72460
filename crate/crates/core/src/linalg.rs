//! Small dense linear-algebra kernels on n×n Gram matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative pivot floor used for Gram factorizations: a pivot below
/// `GRAM_PIVOT_RTOL · tr(G)/n` is treated as rank deficiency.
pub const GRAM_PIVOT_RTOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor `G = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive-definite matrix, rejecting pivots below
    /// `GRAM_PIVOT_RTOL · tr(G)/n`.
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Shape(format!(
                "Cholesky needs a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let threshold = GRAM_PIVOT_RTOL * a.trace() / n as f64;
        Self::factor_with_threshold(a, threshold)
    }

    pub fn factor_with_threshold(a: &DMatrix<f64>, threshold: f64) -> Result<Self> {
        let n = a.nrows();
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > threshold) {
                return Err(Error::DegenerateGram {
                    row: j,
                    pivot,
                    threshold,
                });
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solve `G x = b` by forward and back substitution.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length");
        let l = &self.l;
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        z
    }

    /// Solve with a few rounds of iterative refinement against the original
    /// matrix `a`, which must be the matrix this factor came from.
    pub fn solve_refined(&self, a: &DMatrix<f64>, b: &DVector<f64>, rounds: usize) -> DVector<f64> {
        let mut x = self.solve(b);
        for _ in 0..rounds {
            let r = b - a * &x;
            if r.amax() == 0.0 {
                break;
            }
            x += self.solve(&r);
        }
        x
    }
}

/// `X Xᵀ` for a row-sample matrix X (n×d).
pub fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = x * x.transpose();
    symmetrize(&mut g);
    g
}

/// Overwrite the matrix with `(M + Mᵀ)/2` to remove round-off asymmetry.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Spectral norm of `M − shift·I` for symmetric M, i.e. the largest absolute
/// eigenvalue of the shifted matrix.
pub fn shifted_spectral_norm(m: &DMatrix<f64>, shift: f64) -> f64 {
    let mut a = m.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= shift;
    }
    symmetrize(&mut a);
    SymmetricEigen::new(a).eigenvalues.amax()
}

/// Extreme eigenvalues (min, max) of a symmetric matrix.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let mut a = m.clone();
    symmetrize(&mut a);
    let ev = SymmetricEigen::new(a).eigenvalues;
    (ev.min(), ev.max())
}
