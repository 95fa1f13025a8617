//! GMV weight estimators: traditional, oracle shrinkage intensity, the bona
//! fide optimal shrinkage estimator for any concentration ratio p/n, and the
//! Frahm-Memmel dominating benchmark, together with the relative-loss
//! functional they are scored by.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    pseudo_inverse, sample_covariance, CovarianceModel, ReturnsMatrix, SymmetricMatrix,
};

const SUM_TOL: f64 = 1e-10;

/// Portfolio weights under the budget constraint w'1 = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: DVector<f64>,
}

impl WeightVector {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weight vector".into()));
        }
        let sum = weights.sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { weights })
    }

    /// Equally weighted portfolio 1/p.
    pub fn naive(p: usize) -> Self {
        Self {
            weights: DVector::repeat(p, 1.0 / p as f64),
        }
    }

    pub fn p(&self) -> usize {
        self.weights.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.sum()
    }

    /// Convex combination alpha * self + (1 - alpha) * other; stays cost-1
    /// for any alpha.
    pub fn combine(&self, alpha: f64, other: &WeightVector) -> WeightVector {
        WeightVector {
            weights: &self.weights * alpha + other.as_vector() * (1.0 - alpha),
        }
    }
}

/// Fixed, data-independent cost-1 portfolio toward which the estimator
/// shrinks.
#[derive(Debug, Clone)]
pub struct TargetPortfolio {
    weights: WeightVector,
    label: String,
}

impl TargetPortfolio {
    pub fn new(weights: WeightVector, label: impl Into<String>) -> Self {
        Self {
            weights,
            label: label.into(),
        }
    }

    pub fn naive(p: usize) -> Self {
        Self::new(WeightVector::naive(p), "naive")
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Concentration regime of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// c = p/n < 1: the sample covariance is almost surely nonsingular.
    SubCritical,
    /// c = p/n >= 1: singular sample covariance, Moore-Penrose route.
    SuperCritical,
}

impl Regime {
    pub fn from_ratio(p: usize, n: usize) -> Self {
        if p < n {
            Regime::SubCritical
        } else {
            Regime::SuperCritical
        }
    }
}

/// Output of the bona fide optimal shrinkage estimator.
#[derive(Debug, Clone)]
pub struct ShrinkageEstimate {
    pub weights: WeightVector,
    /// Estimated intensity after clamping to [0, 1].
    pub alpha_hat: f64,
    /// Intensity before clamping; negative loss estimates can push it
    /// outside [0, 1] in finite samples.
    pub alpha_raw: f64,
    /// Estimated relative loss of the target portfolio.
    pub r_hat_b: f64,
    /// Concentration ratio p/n.
    pub c_ratio: f64,
    pub regime: Regime,
}

/// Traditional GMV estimator w = S^-1 1 / (1' S^-1 1) for any generalized
/// inverse of the sample covariance.
pub fn traditional_gmv(s_inv: &SymmetricMatrix) -> Result<WeightVector> {
    let p = s_inv.dim();
    let ones = DVector::repeat(p, 1.0);
    let s = s_inv.matrix() * &ones;
    let denom = s.sum();
    if denom.abs() < 1e-12 * s_inv.matrix().norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(
            "1' S^-1 1 is numerically zero; traditional weights undefined".into(),
        ));
    }
    WeightVector::new(s / denom)
}

/// Relative loss (w' Sigma w - sigma2_GMV) / sigma2_GMV of a portfolio
/// against the population covariance.
pub fn out_of_sample_loss(w: &WeightVector, sigma: &CovarianceModel) -> Result<f64> {
    if w.p() != sigma.p() {
        return Err(Error::Dimension(format!(
            "weights of length {} against covariance of dimension {}",
            w.p(),
            sigma.p()
        )));
    }
    let s2 = sigma.gmv_variance();
    Ok((sigma.quadratic_form(w.as_vector()) - s2) / s2)
}

/// Oracle optimal shrinkage intensity
/// (b - w)' Sigma b / ((b - w)' Sigma (b - w)) where w are the traditional
/// weights computed from the supplied generalized inverse.
///
/// The returned value is the exact minimizer of the quadratic out-of-sample
/// risk and is not clamped.
pub fn oracle_alpha(
    s_generalized_inv: &SymmetricMatrix,
    sigma: &CovarianceModel,
    target: &TargetPortfolio,
) -> Result<f64> {
    let w = traditional_gmv(s_generalized_inv)?;
    let b = target.weights().as_vector();
    if b.len() != sigma.p() || w.p() != sigma.p() {
        return Err(Error::Dimension("target/covariance dimension mismatch".into()));
    }
    let d = b - w.as_vector();
    let sigma_d = sigma.matrix() * &d;
    let denom = d.dot(&sigma_d);
    if denom <= f64::MIN_POSITIVE {
        return Err(Error::Degenerate(
            "target equals the traditional weights; shrinkage intensity undefined".into(),
        ));
    }
    let num = sigma_d.dot(b);
    Ok(num / denom)
}

/// Consistent estimator of the target's relative loss R_b.
///
/// Sub-critical branch: (1 - p/n) b'Sb 1'S^-1 1 - 1; super-critical branch:
/// (p/n)(p/n - 1) b'Sb 1'S~1 - 1 where S~ is whichever generalized inverse
/// the caller supplies (Moore-Penrose for the bona fide estimator).
/// Negative values are legal finite-sample outcomes.
pub fn estimate_relative_loss(
    s: &SymmetricMatrix,
    s_pinv: &SymmetricMatrix,
    target: &TargetPortfolio,
    p: usize,
    n: usize,
) -> Result<f64> {
    if s.dim() != p || s_pinv.dim() != p || target.weights().p() != p {
        return Err(Error::Dimension(
            "covariance, inverse and target must share dimension p".into(),
        ));
    }
    if p < 2 || n < 2 {
        return Err(Error::Dimension("p and n must both be at least 2".into()));
    }
    let c = p as f64 / n as f64;
    let b = target.weights().as_vector();
    let ones = DVector::repeat(p, 1.0);
    let b_s_b = s.quadratic_form(b);
    let q = s_pinv.quadratic_form(&ones);
    if c < 1.0 {
        Ok((1.0 - c) * b_s_b * q - 1.0)
    } else {
        Ok(c * (c - 1.0) * b_s_b * q - 1.0)
    }
}

fn alpha_from_loss_estimate(c: f64, r_hat: f64) -> f64 {
    if c < 1.0 {
        (1.0 - c) * r_hat / (c + (1.0 - c) * r_hat)
    } else {
        (c - 1.0) * r_hat / ((c - 1.0).powi(2) + c + (c - 1.0) * r_hat)
    }
}

/// Bona fide optimal shrinkage estimator of the GMV portfolio.
///
/// Works for any p/n > 0: the sample covariance is inverted via the
/// Moore-Penrose pseudo-inverse, which coincides with the plain inverse in
/// the nonsingular case. The estimated intensity is clamped to [0, 1]; the
/// raw value is kept for diagnostics.
pub fn bona_fide_shrinkage(
    returns: &ReturnsMatrix,
    target: &TargetPortfolio,
) -> Result<ShrinkageEstimate> {
    let p = returns.p();
    let n = returns.n();
    if p < 2 {
        return Err(Error::Dimension("need at least 2 assets".into()));
    }
    if target.weights().p() != p {
        return Err(Error::Dimension(format!(
            "target has {} weights for {} assets",
            target.weights().p(),
            p
        )));
    }
    let s = sample_covariance(returns);
    let s_pinv = pseudo_inverse(&s, None)?;
    let ones = DVector::repeat(p, 1.0);
    let q = s_pinv.quadratic_form(&ones);
    if q.abs() < 1e-12 * s_pinv.matrix().norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(
            "1' S^+ 1 is numerically zero; shrinkage estimator undefined".into(),
        ));
    }
    let c = p as f64 / n as f64;
    let r_hat = estimate_relative_loss(&s, &s_pinv, target, p, n)?;
    let alpha_raw = alpha_from_loss_estimate(c, r_hat);
    let alpha_hat = alpha_raw.clamp(0.0, 1.0);
    let trad = traditional_gmv(&s_pinv)?;
    let weights = trad.combine(alpha_hat, target.weights());
    Ok(ShrinkageEstimate {
        weights,
        alpha_hat,
        alpha_raw,
        r_hat_b: r_hat,
        c_ratio: c,
        regime: Regime::from_ratio(p, n),
    })
}

/// Frahm-Memmel dominating estimator (1 - k) * traditional + k * naive with
/// k = (p - 3)/(n - p + 2) / R_hat_{1/p}, clamped to [0, 1].
///
/// Only defined in the sub-critical regime p/n < 1.
pub fn frahm_memmel(returns: &ReturnsMatrix) -> Result<WeightVector> {
    let p = returns.p();
    let n = returns.n();
    if p < 2 {
        return Err(Error::Dimension("need at least 2 assets".into()));
    }
    if p >= n {
        return Err(Error::Regime(format!(
            "Frahm-Memmel estimator requires p/n < 1, got p = {p}, n = {n}"
        )));
    }
    let s = sample_covariance(returns);
    let s_inv = pseudo_inverse(&s, None)?;
    let trad = traditional_gmv(&s_inv)?;
    let ones = DVector::repeat(p, 1.0);
    // sample GMV variance 1 / (1' S^-1 1)
    let sigma_hat2 = 1.0 / s_inv.quadratic_form(&ones);
    let naive_var = s.quadratic_form(&ones) / (p as f64 * p as f64);
    let r_naive = (naive_var - sigma_hat2) / sigma_hat2;
    let num = p as f64 - 3.0;
    let k = if num <= 0.0 {
        0.0
    } else {
        if r_naive <= 1e-12 {
            return Err(Error::Degenerate(
                "estimated relative loss of the naive portfolio is not positive".into(),
            ));
        }
        (num / (n as f64 - p as f64 + 2.0) / r_naive).clamp(0.0, 1.0)
    };
    Ok(trad.combine(1.0 - k, &WeightVector::naive(p)))
}
