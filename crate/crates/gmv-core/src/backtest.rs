//! Rolling-window out-of-sample evaluation: random sub-portfolios, per-window
//! weight estimation and out-of-sample variance / Sharpe-ratio ECDFs.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bona_fide_shrinkage, frahm_memmel, traditional_gmv, TargetPortfolio, WeightVector,
};
use crate::linalg::{pseudo_inverse, sample_covariance, ReturnsMatrix};
use crate::simulation::{derive_rng, Ecdf, EstimatorKind};

const STREAM_PORTFOLIO: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Length of the estimation window in observations.
    pub window_n: usize,
    /// Number of assets drawn into each random sub-portfolio.
    pub portfolio_p: usize,
    /// Number of random sub-portfolio draws.
    pub num_portfolios: usize,
    pub estimators: Vec<EstimatorKind>,
    pub seed: u64,
}

impl BacktestConfig {
    /// Validate against a concrete data set of `universe_p` assets observed
    /// over `total_t` dates. Regime errors (e.g. Frahm-Memmel with
    /// p >= window) surface here, before any window is fitted.
    pub fn validate(&self, universe_p: usize, total_t: usize) -> Result<()> {
        if self.window_n < 2 {
            return Err(Error::Config("window_n must be at least 2".into()));
        }
        if self.portfolio_p < 2 {
            return Err(Error::Config("portfolio_p must be at least 2".into()));
        }
        if self.num_portfolios == 0 {
            return Err(Error::Config("num_portfolios must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("at least one estimator is required".into()));
        }
        if self.estimators.contains(&EstimatorKind::OracleShrinkage) {
            return Err(Error::Config(
                "oracle_shrinkage needs the true covariance and is only available in simulations"
                    .into(),
            ));
        }
        if self.estimators.contains(&EstimatorKind::FrahmMemmel)
            && self.portfolio_p >= self.window_n
        {
            return Err(Error::Config(format!(
                "frahm_memmel requires p < n, but portfolio_p = {} with window_n = {}",
                self.portfolio_p, self.window_n
            )));
        }
        if self.portfolio_p > universe_p {
            return Err(Error::Data(format!(
                "cannot draw {} assets from a universe of {universe_p}",
                self.portfolio_p
            )));
        }
        if total_t <= self.window_n {
            return Err(Error::Data(format!(
                "need more than window_n = {} observations, got {total_t}",
                self.window_n
            )));
        }
        Ok(())
    }
}

/// Out-of-sample summary of one realized return series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OosStatistics {
    pub variance: f64,
    pub sharpe: f64,
    /// True when the realized series had zero variance; `sharpe` is then a
    /// signed-infinity sentinel.
    pub degenerate: bool,
}

/// Mean over T-n terms, variance with divisor T-n-1, Sharpe = mean / sd.
pub fn oos_statistics(realized: &[f64]) -> Result<OosStatistics> {
    if realized.len() < 2 {
        return Err(Error::Data(
            "need at least two realized returns for out-of-sample statistics".into(),
        ));
    }
    if realized.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("realized returns must be finite".into()));
    }
    let m = realized.len() as f64;
    let mean = realized.iter().sum::<f64>() / m;
    let variance = realized.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0);
    if variance <= 0.0 {
        let sharpe = if mean < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        return Ok(OosStatistics {
            variance: 0.0,
            sharpe,
            degenerate: true,
        });
    }
    Ok(OosStatistics {
        variance,
        sharpe: mean / variance.sqrt(),
        degenerate: false,
    })
}

fn fit_weights(estimator: EstimatorKind, window: &ReturnsMatrix) -> Result<WeightVector> {
    let p = window.p();
    let s = sample_covariance(window);
    // a numerically zero covariance makes every portfolio equal-risk; fall
    // back to equal weights instead of failing the whole backtest
    if s.matrix().iter().all(|v| *v == 0.0) {
        return Ok(WeightVector::naive(p));
    }
    match estimator {
        EstimatorKind::Traditional => traditional_gmv(&pseudo_inverse(&s, None)?),
        EstimatorKind::BonaFide => {
            Ok(bona_fide_shrinkage(window, &TargetPortfolio::naive(p))?.weights)
        }
        EstimatorKind::FrahmMemmel => frahm_memmel(window),
        EstimatorKind::OracleShrinkage => Err(Error::Config(
            "oracle_shrinkage is not available on observed data".into(),
        )),
    }
}

/// Realized out-of-sample returns of a rolling strategy: for each date t from
/// `window_n` to T-1, fit on the `window_n` previous columns and apply the
/// weights to column t. Returns T - window_n values.
pub fn rolling_returns(
    returns: &ReturnsMatrix,
    estimator: EstimatorKind,
    window_n: usize,
) -> Result<Vec<f64>> {
    let t_total = returns.n();
    if window_n < 2 {
        return Err(Error::Config("window_n must be at least 2".into()));
    }
    if t_total <= window_n {
        return Err(Error::Data(format!(
            "need more than window_n = {window_n} observations, got {t_total}"
        )));
    }
    if estimator == EstimatorKind::FrahmMemmel && returns.p() >= window_n {
        return Err(Error::Config(format!(
            "frahm_memmel requires p < n, but p = {} with window_n = {window_n}",
            returns.p()
        )));
    }
    let mut realized = Vec::with_capacity(t_total - window_n);
    for t in window_n..t_total {
        let window = returns.select_window(t - window_n, t)?;
        let w = fit_weights(estimator, &window)?;
        realized.push(w.as_vector().dot(&returns.data().column(t)));
    }
    Ok(realized)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawStats {
    pub draw_index: usize,
    pub assets: Vec<usize>,
    pub variance: f64,
    pub sharpe: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorBacktest {
    pub estimator: EstimatorKind,
    pub draws: Vec<DrawStats>,
    pub variance_ecdf: Ecdf,
    /// ECDF over the finite Sharpe ratios; `None` when every draw was
    /// degenerate.
    pub sharpe_ecdf: Option<Ecdf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub window_n: usize,
    pub portfolio_p: usize,
    pub per_estimator: Vec<EstimatorBacktest>,
}

impl BacktestReport {
    pub fn result(&self, kind: EstimatorKind) -> Option<&EstimatorBacktest> {
        self.per_estimator.iter().find(|r| r.estimator == kind)
    }
}

/// Draw `num_portfolios` random asset subsets, run the rolling evaluation for
/// every requested estimator and pool the out-of-sample statistics into
/// ECDFs. Deterministic given the seed; draws are processed independently, so
/// the report does not depend on scheduling.
pub fn run_backtest(returns: &ReturnsMatrix, config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate(returns.p(), returns.n())?;
    let per_draw: Result<Vec<(Vec<usize>, Vec<OosStatistics>)>> = (0..config.num_portfolios)
        .into_par_iter()
        .map(|d| {
            let mut rng = derive_rng(config.seed, &[STREAM_PORTFOLIO, d as u64]);
            let mut assets =
                sample_indices(&mut rng, returns.p(), config.portfolio_p).into_vec();
            assets.sort_unstable();
            let sub = returns.select_assets(&assets)?;
            let stats = config
                .estimators
                .iter()
                .map(|&kind| {
                    let realized = rolling_returns(&sub, kind, config.window_n)?;
                    oos_statistics(&realized)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((assets, stats))
        })
        .collect();
    let per_draw = per_draw?;
    let per_estimator = config
        .estimators
        .iter()
        .enumerate()
        .map(|(j, &estimator)| {
            let draws: Vec<DrawStats> = per_draw
                .iter()
                .enumerate()
                .map(|(d, (assets, stats))| DrawStats {
                    draw_index: d,
                    assets: assets.clone(),
                    variance: stats[j].variance,
                    sharpe: stats[j].sharpe,
                    degenerate: stats[j].degenerate,
                })
                .collect();
            let variances: Vec<f64> = draws.iter().map(|d| d.variance).collect();
            let sharpes: Vec<f64> = draws
                .iter()
                .filter(|d| !d.degenerate)
                .map(|d| d.sharpe)
                .collect();
            Ok(EstimatorBacktest {
                estimator,
                variance_ecdf: Ecdf::new(&variances)?,
                sharpe_ecdf: if sharpes.is_empty() {
                    None
                } else {
                    Some(Ecdf::new(&sharpes)?)
                },
                draws,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BacktestReport {
        window_n: config.window_n,
        portfolio_p: config.portfolio_p,
        per_estimator,
    })
}
