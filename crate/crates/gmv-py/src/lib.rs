//! Python bindings for the GMV shrinkage library.
//!
//! Matrices cross the boundary as plain lists of lists (assets x
//! observations); results come back as small result classes with read-only
//! attributes. Built as a cdylib; see python/smoke_test.py for usage.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gmv_core::asymptotics::{
    alpha_plus_limit, alpha_star_limit, rel_loss_gse_limit, rel_loss_traditional,
    rel_loss_traditional_super, variance_ratio_traditional, LimitInputs,
};
use gmv_core::estimators::{
    bona_fide_shrinkage, frahm_memmel, traditional_gmv, TargetPortfolio, WeightVector,
};
use gmv_core::linalg::{pseudo_inverse, sample_covariance, ReturnsMatrix};
use gmv_core::simulation::{
    run_monte_carlo, Ecdf, EstimatorKind, ReturnDistribution, Scenario, SimulationConfig,
    TargetSpec,
};
use nalgebra::{DMatrix, DVector};

fn py_err(e: gmv_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_returns(rows: Vec<Vec<f64>>) -> PyResult<ReturnsMatrix> {
    let p = rows.len();
    if p == 0 {
        return Err(PyValueError::new_err("returns matrix is empty"));
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("ragged returns matrix"));
    }
    ReturnsMatrix::new(DMatrix::from_fn(p, n, |i, j| rows[i][j])).map_err(py_err)
}

/// Result of the bona fide shrinkage estimator.
#[pyclass(frozen)]
struct ShrinkageResult {
    #[pyo3(get)]
    weights: Vec<f64>,
    #[pyo3(get)]
    alpha_hat: f64,
    #[pyo3(get)]
    alpha_raw: f64,
    #[pyo3(get)]
    r_hat_b: f64,
    #[pyo3(get)]
    c_ratio: f64,
    #[pyo3(get)]
    regime: String,
}

/// Bona fide optimal shrinkage estimate from a p x n returns matrix.
/// `target` defaults to the naive equally weighted portfolio.
#[pyfunction]
#[pyo3(signature = (returns, target=None))]
fn estimate_shrinkage(
    returns: Vec<Vec<f64>>,
    target: Option<Vec<f64>>,
) -> PyResult<ShrinkageResult> {
    let matrix = to_returns(returns)?;
    let p = matrix.p();
    let target = match target {
        None => TargetPortfolio::naive(p),
        Some(w) => TargetPortfolio::new(
            WeightVector::new(DVector::from_column_slice(&w)).map_err(py_err)?,
            "custom",
        ),
    };
    let est = bona_fide_shrinkage(&matrix, &target).map_err(py_err)?;
    Ok(ShrinkageResult {
        weights: est.weights.as_vector().iter().cloned().collect(),
        alpha_hat: est.alpha_hat,
        alpha_raw: est.alpha_raw,
        r_hat_b: est.r_hat_b,
        c_ratio: est.c_ratio,
        regime: format!("{:?}", est.regime),
    })
}

/// Traditional (plug-in) GMV weights, using the Moore-Penrose inverse when
/// the sample covariance is singular.
#[pyfunction]
fn traditional_weights(returns: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let matrix = to_returns(returns)?;
    let s_inv = pseudo_inverse(&sample_covariance(&matrix), None).map_err(py_err)?;
    let w = traditional_gmv(&s_inv).map_err(py_err)?;
    Ok(w.as_vector().iter().cloned().collect())
}

/// Frahm-Memmel dominating estimator (requires p < n).
#[pyfunction]
fn frahm_memmel_weights(returns: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let matrix = to_returns(returns)?;
    let w = frahm_memmel(&matrix).map_err(py_err)?;
    Ok(w.as_vector().iter().cloned().collect())
}

/// One point of the asymptotic theory curves.
#[pyclass(frozen)]
struct LimitPoint {
    #[pyo3(get)]
    c: f64,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    rel_loss_traditional: f64,
    #[pyo3(get)]
    rel_loss_shrinkage: f64,
    #[pyo3(get)]
    variance_ratio: f64,
}

/// Asymptotic limits at concentration ratio c (c != 1) for a target with
/// limiting relative loss r_b.
#[pyfunction]
#[pyo3(signature = (c, r_b=1.0))]
fn limit_point(c: f64, r_b: f64) -> PyResult<LimitPoint> {
    let inputs = LimitInputs::new(c, r_b).map_err(py_err)?;
    let (alpha, trad) = if c < 1.0 {
        (
            alpha_star_limit(inputs).map_err(py_err)?,
            rel_loss_traditional(c).map_err(py_err)?,
        )
    } else {
        (
            alpha_plus_limit(inputs).map_err(py_err)?,
            rel_loss_traditional_super(c).map_err(py_err)?,
        )
    };
    Ok(LimitPoint {
        c,
        alpha,
        rel_loss_traditional: trad,
        rel_loss_shrinkage: rel_loss_gse_limit(inputs).map_err(py_err)?,
        variance_ratio: variance_ratio_traditional(c).map_err(py_err)?,
    })
}

/// Haar-distributed random orthogonal matrix, as a list of rows.
#[pyfunction]
fn haar_orthogonal(p: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let q = gmv_core::linalg::haar_orthogonal(p, &mut rng).map_err(py_err)?;
    Ok((0..p)
        .map(|i| q.row(i).iter().cloned().collect())
        .collect())
}

fn parse_scenario(name: &str) -> PyResult<Scenario> {
    match name {
        "bounded_spectrum" => Ok(Scenario::BoundedSpectrum),
        "unbounded_spectrum" => Ok(Scenario::UnboundedSpectrum),
        "dispersed_spectrum" => Ok(Scenario::DispersedSpectrum),
        other => Err(PyValueError::new_err(format!("unknown scenario '{other}'"))),
    }
}

/// Per-estimator losses from one Monte Carlo cell.
#[pyclass(frozen)]
struct CellResult {
    #[pyo3(get)]
    estimator: String,
    #[pyo3(get)]
    mean_loss: f64,
    #[pyo3(get)]
    losses: Vec<f64>,
}

/// Run one (p, n) Monte Carlo cell and return the per-estimator relative
/// losses. `student_t_df` of None means Gaussian innovations.
#[pyfunction]
#[pyo3(signature = (scenario, p, n, repetitions, estimators, seed, student_t_df=None))]
fn simulate_cell(
    scenario: &str,
    p: usize,
    n: usize,
    repetitions: usize,
    estimators: Vec<String>,
    seed: u64,
    student_t_df: Option<u32>,
) -> PyResult<Vec<CellResult>> {
    let estimators: Vec<EstimatorKind> = estimators
        .iter()
        .map(|s| s.parse().map_err(py_err))
        .collect::<PyResult<_>>()?;
    let config = SimulationConfig {
        scenario: parse_scenario(scenario)?,
        c_target: p as f64 / n as f64,
        p_schedule: vec![(p, n)],
        distribution: match student_t_df {
            None => ReturnDistribution::Gaussian,
            Some(df) => ReturnDistribution::StudentT { df },
        },
        repetitions,
        estimators,
        target: TargetSpec::Naive,
        seed,
    };
    let report = run_monte_carlo(&config).map_err(py_err)?;
    Ok(report.cells[0]
        .results
        .iter()
        .map(|r| CellResult {
            estimator: r.estimator.label().to_string(),
            mean_loss: r.mean_loss,
            losses: r.loss_samples.clone(),
        })
        .collect())
}

/// Empirical CDF of `samples` evaluated at each point in `at`.
#[pyfunction]
fn ecdf_eval(samples: Vec<f64>, at: Vec<f64>) -> PyResult<Vec<f64>> {
    let f = Ecdf::new(&samples).map_err(py_err)?;
    Ok(at.iter().map(|&x| f.eval(x)).collect())
}

#[pymodule]
fn gmv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ShrinkageResult>()?;
    m.add_class::<LimitPoint>()?;
    m.add_class::<CellResult>()?;
    m.add_function(wrap_pyfunction!(estimate_shrinkage, m)?)?;
    m.add_function(wrap_pyfunction!(traditional_weights, m)?)?;
    m.add_function(wrap_pyfunction!(frahm_memmel_weights, m)?)?;
    m.add_function(wrap_pyfunction!(limit_point, m)?)?;
    m.add_function(wrap_pyfunction!(haar_orthogonal, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_cell, m)?)?;
    m.add_function(wrap_pyfunction!(ecdf_eval, m)?)?;
    Ok(())
}
