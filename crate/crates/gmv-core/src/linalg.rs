//! Dense linear-algebra primitives for high-dimensional covariance work:
//! centered sample covariance, symmetric eigendecomposition, Moore-Penrose
//! pseudo-inverse, the oracle generalized inverse, Haar-distributed
//! orthogonal matrices and covariance construction from a prescribed
//! spectrum.
//!
//! NOTE: the sample covariance uses the 1/n normalization, not 1/(n-1).
//! Most statistics libraries default to the unbiased 1/(n-1) divisor; every
//! formula in this crate assumes 1/n.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// p x n panel of asset returns; columns are time observations.
#[derive(Debug, Clone)]
pub struct ReturnsMatrix {
    data: DMatrix<f64>,
}

impl ReturnsMatrix {
    /// Wraps a p x n matrix of returns. Requires n >= 2 and finite entries.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 1 || data.ncols() < 2 {
            return Err(Error::Dimension(format!(
                "returns matrix must be at least 1 x 2, got {} x {}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("returns matrix".into()));
        }
        Ok(Self { data })
    }

    /// Number of assets p.
    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    /// Number of observations n.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Sub-panel restricted to the given asset indices (all observations).
    pub fn select_assets(&self, indices: &[usize]) -> Result<Self> {
        for &i in indices {
            if i >= self.p() {
                return Err(Error::Dimension(format!(
                    "asset index {} out of range for universe of {}",
                    i,
                    self.p()
                )));
            }
        }
        Ok(Self {
            data: self.data.select_rows(indices.iter()),
        })
    }

    /// Sub-panel restricted to columns [start, end).
    pub fn select_window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n() {
            return Err(Error::Dimension(format!(
                "invalid column window [{start}, {end}) for n = {}",
                self.n()
            )));
        }
        Ok(Self {
            data: self.data.columns(start, end - start).into_owned(),
        })
    }
}

/// Carrier for p x p real symmetric matrices (sample covariances and their
/// inverses).
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Validates symmetry: |M_ij - M_ji| <= 1e-12 * max|M|.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {} x {}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix".into()));
        }
        let scale = data.amax().max(f64::MIN_POSITIVE);
        for i in 0..data.nrows() {
            for j in (i + 1)..data.ncols() {
                if (data[(i, j)] - data[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(Self { data })
    }

    /// Symmetrizes numerical noise as (M + M')/2 before wrapping.
    pub fn from_nearly_symmetric(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension("matrix must be square".into()));
        }
        let sym = (&data + data.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Quadratic form x' M x.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.data * x)[(0, 0)]
    }
}

/// Population covariance specified by its eigenvalue spectrum and an
/// orthogonal eigenvector matrix.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl CovarianceModel {
    /// Requires strictly positive eigenvalues and V'V = I within 1e-10.
    pub fn new(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let p = eigenvalues.len();
        if eigenvectors.nrows() != p || eigenvectors.ncols() != p {
            return Err(Error::Dimension(format!(
                "spectrum of length {p} needs a {p} x {p} eigenvector matrix, got {} x {}",
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Domain(
                "covariance spectrum must be strictly positive".into(),
            ));
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        let dev = (&gram - DMatrix::<f64>::identity(p, p)).amax();
        if dev > 1e-10 {
            return Err(Error::Domain(format!(
                "eigenvector matrix is not orthonormal: max |V'V - I| = {dev:.3e}"
            )));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    fn transform(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[j]);
        }
        &scaled * self.eigenvectors.transpose()
    }

    /// Dense Sigma = V diag(lambda) V'.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.transform(|l| l)
    }

    pub fn inverse_matrix(&self) -> DMatrix<f64> {
        self.transform(|l| 1.0 / l)
    }

    pub fn sqrt_matrix(&self) -> DMatrix<f64> {
        self.transform(f64::sqrt)
    }

    pub fn inv_sqrt_matrix(&self) -> DMatrix<f64> {
        self.transform(|l| 1.0 / l.sqrt())
    }

    /// Population GMV variance 1 / (1' Sigma^-1 1).
    pub fn gmv_variance(&self) -> f64 {
        let ones = DVector::repeat(self.p(), 1.0);
        let si = self.inverse_matrix();
        1.0 / (ones.transpose() * si * &ones)[(0, 0)]
    }

    /// Population GMV weights Sigma^-1 1 / (1' Sigma^-1 1).
    pub fn gmv_weights(&self) -> DVector<f64> {
        let ones = DVector::repeat(self.p(), 1.0);
        let s = self.inverse_matrix() * ones;
        let denom = s.sum();
        s / denom
    }

    /// Quadratic form w' Sigma w.
    pub fn quadratic_form(&self, w: &DVector<f64>) -> f64 {
        let proj = self.eigenvectors.transpose() * w;
        proj.iter()
            .zip(self.eigenvalues.iter())
            .map(|(x, l)| l * x * x)
            .sum()
    }
}

/// Centered sample covariance S = (1/n) Y (I - 11'/n) Y'.
///
/// Uses the 1/n divisor, not 1/(n-1). The result is PSD with rank at most
/// min(p, n-1).
pub fn sample_covariance(returns: &ReturnsMatrix) -> SymmetricMatrix {
    let y = returns.data();
    let n = returns.n();
    let mean = y.column_mean();
    let mut centered = y.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let s = (&centered * centered.transpose()) / n as f64;
    SymmetricMatrix::from_nearly_symmetric(s).expect("covariance of finite returns is symmetric")
}

/// Moore-Penrose pseudo-inverse via symmetric eigendecomposition.
///
/// Eigenvalues with |lambda| <= rel_tol * max|lambda| are zeroed; the rest
/// inverted. `rel_tol` defaults to machine epsilon times the dimension.
pub fn pseudo_inverse(m: &SymmetricMatrix, rel_tol: Option<f64>) -> Result<SymmetricMatrix> {
    let p = m.dim();
    let tol = rel_tol.unwrap_or(f64::EPSILON * p as f64);
    if tol < 0.0 {
        return Err(Error::Domain("rel_tol must be nonnegative".into()));
    }
    let eig = SymmetricEigen::new(m.matrix().clone());
    let max_abs = eig.eigenvalues.amax();
    let cutoff = tol * max_abs;
    let mut scaled = eig.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let l = eig.eigenvalues[j];
        let inv = if l.abs() > cutoff { 1.0 / l } else { 0.0 };
        col *= inv;
    }
    let pinv = &scaled * eig.eigenvectors.transpose();
    SymmetricMatrix::from_nearly_symmetric(pinv)
}

/// Oracle generalized inverse S* = Sigma^-1/2 ((1/n) X X')^+ Sigma^-1/2.
///
/// Satisfies the reflexive identities S* S_n S* = S* and S_n S* S_n = S_n
/// for S_n = (1/n) Sigma^1/2 X X' Sigma^1/2.
pub fn oracle_generalized_inverse(
    sigma: &CovarianceModel,
    x: &DMatrix<f64>,
) -> Result<SymmetricMatrix> {
    if x.nrows() != sigma.p() {
        return Err(Error::Dimension(format!(
            "innovation matrix has {} rows, covariance dimension is {}",
            x.nrows(),
            sigma.p()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("innovation matrix".into()));
    }
    let n = x.ncols();
    let gram = SymmetricMatrix::from_nearly_symmetric((x * x.transpose()) / n as f64)?;
    let gram_pinv = pseudo_inverse(&gram, None)?;
    let isq = sigma.inv_sqrt_matrix();
    let s_star = &isq * gram_pinv.matrix() * &isq;
    SymmetricMatrix::from_nearly_symmetric(s_star)
}

/// Haar-distributed random orthogonal matrix.
///
/// QR of a standard Gaussian matrix with the R-diagonal sign correction.
pub fn haar_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if p < 1 {
        return Err(Error::Dimension("p must be at least 1".into()));
    }
    let gauss = DMatrix::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col *= -1.0;
        }
    }
    Ok(q)
}

/// Covariance model Sigma = V diag(spectrum) V' for a prescribed spectrum.
pub fn build_covariance(spectrum: &[f64], eigenvectors: DMatrix<f64>) -> Result<CovarianceModel> {
    if spectrum.len() != eigenvectors.nrows() {
        return Err(Error::Dimension(format!(
            "spectrum of length {} does not match eigenvector dimension {}",
            spectrum.len(),
            eigenvectors.nrows()
        )));
    }
    CovarianceModel::new(DVector::from_row_slice(spectrum), eigenvectors)
}
