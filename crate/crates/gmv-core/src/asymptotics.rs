//! Closed-form high-dimensional limits: shrinkage-intensity limits on both
//! sides of c = 1, relative-loss limits of the traditional and shrinkage
//! estimators, the out-of-sample variance ratio, and the resolvent function
//! x(z) with the derivative constants used as numeric validation oracles.
//!
//! All limit functions exclude c = 1, where the formulas are singular.

pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// Inputs to the limit formulas: concentration ratio c and the limiting
/// relative loss R_b of the target portfolio.
#[derive(Debug, Clone, Copy)]
pub struct LimitInputs {
    pub c: f64,
    pub r_b: f64,
}

impl LimitInputs {
    pub fn new(c: f64, r_b: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain("c must be a positive finite real".into()));
        }
        if !(r_b >= 0.0) || !r_b.is_finite() {
            return Err(Error::Domain("R_b must be a nonnegative finite real".into()));
        }
        Ok(Self { c, r_b })
    }
}

/// Limiting shrinkage intensity (1-c) R_b / (c + (1-c) R_b) for c < 1.
pub fn alpha_star_limit(inp: LimitInputs) -> Result<f64> {
    if inp.c >= 1.0 {
        return Err(Error::Domain("alpha* limit requires c < 1".into()));
    }
    Ok((1.0 - inp.c) * inp.r_b / (inp.c + (1.0 - inp.c) * inp.r_b))
}

/// Limiting shrinkage intensity (c-1) R_b / ((c-1)^2 + c + (c-1) R_b)
/// for c > 1.
pub fn alpha_plus_limit(inp: LimitInputs) -> Result<f64> {
    if inp.c <= 1.0 {
        return Err(Error::Domain("alpha+ limit requires c > 1".into()));
    }
    let cm1 = inp.c - 1.0;
    Ok(cm1 * inp.r_b / (cm1 * cm1 + inp.c + cm1 * inp.r_b))
}

/// Limiting relative loss c/(1-c) of the traditional estimator, c < 1.
pub fn rel_loss_traditional(c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain("traditional loss limit requires 0 < c < 1".into()));
    }
    Ok(c / (1.0 - c))
}

/// Limiting relative loss (c^2 - c + 1)/(c - 1) of the oracle traditional
/// estimator, c > 1. Minimized at c = 2 with value 3.
pub fn rel_loss_traditional_super(c: f64) -> Result<f64> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::Domain("super-critical loss limit requires c > 1".into()));
    }
    Ok((c * c - c + 1.0) / (c - 1.0))
}

/// Limiting relative loss of the optimal shrinkage estimator; branches on
/// the regime of c.
pub fn rel_loss_gse_limit(inp: LimitInputs) -> Result<f64> {
    if inp.c == 1.0 {
        return Err(Error::Domain("shrinkage loss limit is singular at c = 1".into()));
    }
    if inp.c < 1.0 {
        let a = alpha_star_limit(inp)?;
        Ok(a * a * rel_loss_traditional(inp.c)? + (1.0 - a) * (1.0 - a) * inp.r_b)
    } else {
        let a = alpha_plus_limit(inp)?;
        Ok(a * a * rel_loss_traditional_super(inp.c)? + (1.0 - a) * (1.0 - a) * inp.r_b)
    }
}

/// Limiting ratio of the traditional estimator's out-of-sample variance to
/// the population GMV variance: 1/(1-c) for c < 1, c^2/(c-1) for c > 1.
pub fn variance_ratio_traditional(c: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() || c == 1.0 {
        return Err(Error::Domain(
            "variance ratio requires c > 0, c != 1".into(),
        ));
    }
    if c < 1.0 {
        Ok(1.0 / (1.0 - c))
    } else {
        Ok(c * c / (c - 1.0))
    }
}

/// Resolvent limit x(z) = (1 - c + z + sqrt((1 - c + z)^2 - 4z)) / 2, taking
/// the branch with positive imaginary part on the upper half-plane; real z
/// uses the right-limit convention and errors on the branch cut.
pub fn stieltjes_x(z: Complex64, c: f64) -> Result<Complex64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain("c must be a positive finite real".into()));
    }
    let a = Complex64::new(1.0 - c, 0.0) + z;
    let disc = a * a - z * 4.0;
    if z.im > 0.0 {
        let w = disc.sqrt();
        let x1 = x_from_root(z, c, w);
        let x2 = x_from_root(z, c, -w);
        if x1.im > 0.0 {
            Ok(x1)
        } else if x2.im > 0.0 {
            Ok(x2)
        } else {
            Err(Error::Domain(
                "no feasible branch with positive imaginary part".into(),
            ))
        }
    } else if z.im == 0.0 {
        if disc.re < 0.0 {
            return Err(Error::Domain(
                "real z lies on the branch cut: discriminant is negative".into(),
            ));
        }
        Ok(x_from_root(z, c, disc.sqrt()))
    } else {
        Err(Error::Domain(
            "z must lie in the closed upper half-plane".into(),
        ))
    }
}

// x = z + (b + s)/2 with b = 1 - c - z and s the chosen square root. When
// b + s cancels (c > 1, z near 0) use the rationalized equivalent
// x = z - 2zc/(s - b), since (b + s)(s - b) = s^2 - b^2 = -4zc.
fn x_from_root(z: Complex64, c: f64, s: Complex64) -> Complex64 {
    let b = Complex64::new(1.0 - c, 0.0) - z;
    if (b + s).norm() >= (s - b).norm() {
        z + (b + s) * 0.5
    } else {
        z - z * 2.0 * c / (s - b)
    }
}

/// The constants (theta(0), theta'(0), theta''(0)) of
/// theta(z) = z / (x(z) - z) for c > 1:
/// (-(c-1)/c, 1/(c(c-1)), 2/(c-1)^3).
pub fn theta_derivatives(c: f64) -> Result<(f64, f64, f64)> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::Domain("theta derivatives require c > 1".into()));
    }
    Ok((
        -(c - 1.0) / c,
        1.0 / (c * (c - 1.0)),
        2.0 / (c - 1.0).powi(3),
    ))
}
