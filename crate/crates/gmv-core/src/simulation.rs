//! Monte Carlo engine: scenario covariance matrices, return generation and
//! per-estimator relative-loss sampling over (p, n) schedules.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bona_fide_shrinkage, frahm_memmel, oracle_alpha, out_of_sample_loss, traditional_gmv,
    TargetPortfolio, WeightVector,
};
use crate::linalg::{
    build_covariance, haar_orthogonal, pseudo_inverse, sample_covariance, CovarianceModel,
    ReturnsMatrix,
};

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha stream from a master seed and a path of
/// counters (cell index, repetition index, ...). Counter-based splitting keeps
/// parallel execution order-independent.
pub(crate) fn derive_rng(seed: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = splitmix64(seed);
    for &word in path {
        state = splitmix64(state ^ word.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

const STREAM_SIGMA: u64 = 1;
const STREAM_REPETITION: u64 = 2;

/// Distribution of the i.i.d. innovations; entries always have zero mean and
/// unit variance, so the population covariance of the returns is exactly the
/// model covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnDistribution {
    Gaussian,
    StudentT { df: u32 },
}

impl ReturnDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            ReturnDistribution::Gaussian => Ok(()),
            ReturnDistribution::StudentT { df } if *df >= 3 => Ok(()),
            ReturnDistribution::StudentT { df } => Err(Error::Domain(format!(
                "Student-t innovations need df >= 3 for a finite variance, got df = {df}"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ReturnDistribution::Gaussian => "gaussian".into(),
            ReturnDistribution::StudentT { df } => format!("student_t({df})"),
        }
    }
}

/// p x n matrix of i.i.d. zero-mean unit-variance innovations.
pub fn standard_innovations<R: Rng + ?Sized>(
    p: usize,
    n: usize,
    distribution: &ReturnDistribution,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    distribution.validate()?;
    match distribution {
        ReturnDistribution::Gaussian => Ok(DMatrix::from_fn(p, n, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        })),
        ReturnDistribution::StudentT { df } => {
            let dff = *df as f64;
            let dist = StudentT::new(dff)
                .map_err(|e| Error::Domain(format!("invalid Student-t parameter: {e}")))?;
            // a t(df) variate has variance df/(df-2); rescale to unit variance
            let scale = ((dff - 2.0) / dff).sqrt();
            Ok(DMatrix::from_fn(p, n, |_, _| scale * rng.sample(dist)))
        }
    }
}

/// Generate n return observations Y = mu 1' + Sigma^{1/2} X with i.i.d.
/// columns of mean mu and covariance Sigma.
pub fn generate_returns<R: Rng + ?Sized>(
    sigma: &CovarianceModel,
    mu: &DVector<f64>,
    n: usize,
    distribution: &ReturnDistribution,
    rng: &mut R,
) -> Result<ReturnsMatrix> {
    let p = sigma.p();
    if mu.len() != p {
        return Err(Error::Dimension(format!(
            "mean vector of length {} for {} assets",
            mu.len(),
            p
        )));
    }
    if n < 2 {
        return Err(Error::Dimension("need at least n = 2 observations".into()));
    }
    let x = standard_innovations(p, n, distribution, rng)?;
    let mut y = sigma.sqrt_matrix() * x;
    for mut col in y.column_iter_mut() {
        col += mu;
    }
    ReturnsMatrix::new(y)
}

/// Population covariance scenarios used in the simulation studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Eigenvalues 2, 5, 10 in proportions 1/9, 4/9, 4/9; requires p % 9 == 0.
    BoundedSpectrum,
    /// As bounded, but one eigenvalue of 10 is replaced by an eigenvalue that
    /// grows with the dimension: spectrum {2 x p/9, 5 x 4p/9, 10 x (4p/9 - 1), p}.
    UnboundedSpectrum,
    /// Eigenvalues 3, 1, 0.5 in proportions 20%, 40%, 40%; requires p % 5 == 0.
    DispersedSpectrum,
    /// User-supplied spectrum; its length fixes the only admissible p.
    Custom { spectrum: Vec<f64> },
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::BoundedSpectrum => "bounded_spectrum",
            Scenario::UnboundedSpectrum => "unbounded_spectrum",
            Scenario::DispersedSpectrum => "dispersed_spectrum",
            Scenario::Custom { .. } => "custom",
        }
    }

    /// Eigenvalue multiset for dimension p, in descending order.
    pub fn spectrum(&self, p: usize) -> Result<Vec<f64>> {
        match self {
            Scenario::BoundedSpectrum => {
                let k = ninth(p, self.label())?;
                let mut s = vec![10.0; 4 * k];
                s.extend(std::iter::repeat(5.0).take(4 * k));
                s.extend(std::iter::repeat(2.0).take(k));
                Ok(s)
            }
            Scenario::UnboundedSpectrum => {
                let k = ninth(p, self.label())?;
                let mut s = vec![p as f64];
                s.extend(std::iter::repeat(10.0).take(4 * k - 1));
                s.extend(std::iter::repeat(5.0).take(4 * k));
                s.extend(std::iter::repeat(2.0).take(k));
                Ok(s)
            }
            Scenario::DispersedSpectrum => {
                if p == 0 || p % 5 != 0 {
                    return Err(Error::Config(format!(
                        "dispersed_spectrum needs p divisible by 5, got p = {p}"
                    )));
                }
                let k = p / 5;
                let mut s = vec![3.0; k];
                s.extend(std::iter::repeat(1.0).take(2 * k));
                s.extend(std::iter::repeat(0.5).take(2 * k));
                Ok(s)
            }
            Scenario::Custom { spectrum } => {
                if spectrum.len() != p {
                    return Err(Error::Config(format!(
                        "custom spectrum has {} eigenvalues but p = {p}",
                        spectrum.len()
                    )));
                }
                if spectrum.iter().any(|l| !l.is_finite() || *l <= 0.0) {
                    return Err(Error::Config(
                        "custom spectrum entries must be positive and finite".into(),
                    ));
                }
                Ok(spectrum.clone())
            }
        }
    }
}

fn ninth(p: usize, label: &str) -> Result<usize> {
    if p == 0 || p % 9 != 0 {
        return Err(Error::Config(format!(
            "{label} needs p divisible by 9, got p = {p}"
        )));
    }
    Ok(p / 9)
}

/// Assemble the scenario covariance: the prescribed spectrum rotated by a
/// Haar-distributed orthogonal eigenvector matrix.
pub fn build_scenario<R: Rng + ?Sized>(
    scenario: &Scenario,
    p: usize,
    rng: &mut R,
) -> Result<CovarianceModel> {
    let spectrum = scenario.spectrum(p)?;
    let v = haar_orthogonal(p, rng)?;
    build_covariance(&spectrum, v)
}

/// Portfolio weight estimators that can enter a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Traditional,
    BonaFide,
    FrahmMemmel,
    /// Shrinkage with the exact optimal intensity, computed against the true
    /// covariance. Only available in simulations where Sigma is known.
    OracleShrinkage,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Traditional => "traditional",
            EstimatorKind::BonaFide => "bona_fide",
            EstimatorKind::FrahmMemmel => "frahm_memmel",
            EstimatorKind::OracleShrinkage => "oracle_shrinkage",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traditional" => Ok(EstimatorKind::Traditional),
            "bona_fide" => Ok(EstimatorKind::BonaFide),
            "frahm_memmel" => Ok(EstimatorKind::FrahmMemmel),
            "oracle_shrinkage" => Ok(EstimatorKind::OracleShrinkage),
            other => Err(Error::Config(format!(
                "unknown estimator '{other}' (expected traditional, bona_fide, frahm_memmel or oracle_shrinkage)"
            ))),
        }
    }
}

/// Shrinkage target specification; resolved to concrete weights per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Naive,
    Custom { weights: Vec<f64> },
}

impl TargetSpec {
    pub fn build(&self, p: usize) -> Result<TargetPortfolio> {
        match self {
            TargetSpec::Naive => Ok(TargetPortfolio::naive(p)),
            TargetSpec::Custom { weights } => {
                if weights.len() != p {
                    return Err(Error::Config(format!(
                        "custom target has {} weights but p = {p}",
                        weights.len()
                    )));
                }
                let w = WeightVector::new(DVector::from_column_slice(weights))?;
                Ok(TargetPortfolio::new(w, "custom"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    /// Nominal concentration ratio p/n of the schedule.
    pub c_target: f64,
    pub p_schedule: Vec<(usize, usize)>,
    pub distribution: ReturnDistribution,
    pub repetitions: usize,
    pub estimators: Vec<EstimatorKind>,
    pub target: TargetSpec,
    pub seed: u64,
}

impl SimulationConfig {
    /// Geometric default schedule p = 9 * 2^j, j = 0..=5, with n chosen so
    /// that p/n matches c_target.
    pub fn geometric_schedule(c_target: f64) -> Result<Vec<(usize, usize)>> {
        if !(c_target > 0.0) || !c_target.is_finite() {
            return Err(Error::Config("c_target must be a positive real".into()));
        }
        (0..=5)
            .map(|j| {
                let p = 9usize << j;
                let n = (p as f64 / c_target).round() as usize;
                if n < 2 {
                    return Err(Error::Config(format!(
                        "c_target = {c_target} gives n < 2 at p = {p}"
                    )));
                }
                Ok((p, n))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_target > 0.0) || !self.c_target.is_finite() {
            return Err(Error::Config("c_target must be a positive real".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("at least one estimator is required".into()));
        }
        if self.p_schedule.is_empty() {
            return Err(Error::Config("p_schedule must not be empty".into()));
        }
        self.distribution.validate()?;
        let custom = matches!(self.scenario, Scenario::Custom { .. });
        let with_fm = self.estimators.contains(&EstimatorKind::FrahmMemmel);
        if with_fm && self.c_target >= 1.0 {
            return Err(Error::Config(format!(
                "frahm_memmel requires c < 1, but c_target = {}",
                self.c_target
            )));
        }
        for &(p, n) in &self.p_schedule {
            if p < 2 || n < 2 {
                return Err(Error::Config(format!(
                    "every cell needs p >= 2 and n >= 2, got ({p}, {n})"
                )));
            }
            let c = p as f64 / n as f64;
            if !custom && (c - self.c_target).abs() > 0.01 * self.c_target {
                return Err(Error::Config(format!(
                    "cell ({p}, {n}) has p/n = {c} more than 1% away from c_target = {}",
                    self.c_target
                )));
            }
            if with_fm && p >= n {
                return Err(Error::Config(format!(
                    "frahm_memmel requires p < n, but cell ({p}, {n}) is super-critical"
                )));
            }
            self.scenario.spectrum(p)?;
            self.target.build(p)?;
        }
        Ok(())
    }
}

/// Empirical cumulative distribution function F(x) = #{s_i <= x} / N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("cannot build an ECDF from no samples".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("ECDF samples must be finite".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Ecdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous evaluation at x.
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|v| *v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Empirical quantile: smallest sample s with F(s) >= q, for q in (0, 1].
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!(
                "quantile level must lie in (0, 1], got {q}"
            )));
        }
        let idx = ((q * self.sorted.len() as f64).ceil() as usize).max(1) - 1;
        Ok(self.sorted[idx])
    }

    /// Distinct (value, F(value)) pairs in ascending order; F jumps by the
    /// multiplicity of each tied value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCell {
    pub estimator: EstimatorKind,
    pub loss_samples: Vec<f64>,
    pub mean_loss: f64,
    pub ecdf: Ecdf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub p: usize,
    pub n: usize,
    pub results: Vec<EstimatorCell>,
}

impl CellReport {
    pub fn result(&self, kind: EstimatorKind) -> Option<&EstimatorCell> {
        self.results.iter().find(|r| r.estimator == kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub cells: Vec<CellReport>,
}

/// Shrinkage portfolio with the exact optimal intensity within the family
/// alpha * w_traditional + (1 - alpha) * b, computed against the true Sigma.
pub fn oracle_shrinkage_weights(
    s_pinv: &crate::linalg::SymmetricMatrix,
    sigma: &CovarianceModel,
    target: &TargetPortfolio,
) -> Result<WeightVector> {
    let alpha = oracle_alpha(s_pinv, sigma, target)?;
    let trad = traditional_gmv(s_pinv)?;
    Ok(trad.combine(alpha, target.weights()))
}

/// One repetition: draw returns, fit each requested estimator and report its
/// relative loss against the generating covariance, in `estimators` order.
pub fn simulate_once<R: Rng + ?Sized>(
    sigma: &CovarianceModel,
    n: usize,
    distribution: &ReturnDistribution,
    estimators: &[EstimatorKind],
    target: &TargetPortfolio,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let p = sigma.p();
    let mu = DVector::zeros(p);
    let returns = generate_returns(sigma, &mu, n, distribution, rng)?;
    let s = sample_covariance(&returns);
    let s_pinv = pseudo_inverse(&s, None)?;
    let mut losses = Vec::with_capacity(estimators.len());
    for kind in estimators {
        let weights = match kind {
            EstimatorKind::Traditional => traditional_gmv(&s_pinv)?,
            EstimatorKind::BonaFide => bona_fide_shrinkage(&returns, target)?.weights,
            EstimatorKind::FrahmMemmel => frahm_memmel(&returns)?,
            EstimatorKind::OracleShrinkage => oracle_shrinkage_weights(&s_pinv, sigma, target)?,
        };
        losses.push(out_of_sample_loss(&weights, sigma)?);
    }
    Ok(losses)
}

/// Run the full study. Deterministic for a fixed config: the covariance of
/// each (p, n) cell is drawn once from a cell-specific stream, and every
/// repetition gets its own counter-derived stream, so the result does not
/// depend on thread scheduling.
pub fn run_monte_carlo(config: &SimulationConfig) -> Result<MonteCarloReport> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.p_schedule.len());
    for (cell_idx, &(p, n)) in config.p_schedule.iter().enumerate() {
        let mut sigma_rng = derive_rng(config.seed, &[STREAM_SIGMA, cell_idx as u64]);
        let sigma = build_scenario(&config.scenario, p, &mut sigma_rng)?;
        let target = config.target.build(p)?;
        let per_rep: Result<Vec<Vec<f64>>> = (0..config.repetitions)
            .into_par_iter()
            .map(|rep| {
                let mut rng =
                    derive_rng(config.seed, &[STREAM_REPETITION, cell_idx as u64, rep as u64]);
                simulate_once(&sigma, n, &config.distribution, &config.estimators, &target, &mut rng)
            })
            .collect();
        let per_rep = per_rep?;
        let results = config
            .estimators
            .iter()
            .enumerate()
            .map(|(j, kind)| {
                let loss_samples: Vec<f64> = per_rep.iter().map(|reps| reps[j]).collect();
                let mean_loss = loss_samples.iter().sum::<f64>() / loss_samples.len() as f64;
                Ok(EstimatorCell {
                    estimator: *kind,
                    mean_loss,
                    ecdf: Ecdf::new(&loss_samples)?,
                    loss_samples,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(CellReport { p, n, results });
    }
    Ok(MonteCarloReport { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_model(p: usize) -> CovarianceModel {
        CovarianceModel::new(DVector::repeat(p, 1.0), DMatrix::identity(p, p)).unwrap()
    }

    #[test]
    fn gaussian_returns_match_population_covariance() {
        let sigma = identity_model(2);
        let mut rng = derive_rng(7, &[0]);
        let y = generate_returns(
            &sigma,
            &DVector::zeros(2),
            100_000,
            &ReturnDistribution::Gaussian,
            &mut rng,
        )
        .unwrap();
        let s = sample_covariance(&y);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s.matrix()[(i, j)], expect, epsilon = 0.02);
            }
        }
    }

    #[test]
    fn student_t_innovations_have_unit_variance() {
        let sigma = identity_model(1);
        let mut rng = derive_rng(11, &[0]);
        let y = generate_returns(
            &sigma,
            &DVector::zeros(1),
            100_000,
            &ReturnDistribution::StudentT { df: 5 },
            &mut rng,
        )
        .unwrap();
        let s = sample_covariance(&y);
        assert_abs_diff_eq!(s.matrix()[(0, 0)], 1.0, epsilon = 0.05);
    }

    #[test]
    fn mean_shift_passes_through_and_leaves_covariance_alone() {
        let sigma = identity_model(2);
        let mu = DVector::from_column_slice(&[1.0, 2.0]);
        let n = 20_000;
        let y_shift = generate_returns(
            &sigma,
            &mu,
            n,
            &ReturnDistribution::Gaussian,
            &mut derive_rng(3, &[5]),
        )
        .unwrap();
        let y_zero = generate_returns(
            &sigma,
            &DVector::zeros(2),
            n,
            &ReturnDistribution::Gaussian,
            &mut derive_rng(3, &[5]),
        )
        .unwrap();
        for (i, &m) in [1.0, 2.0].iter().enumerate() {
            let mean = y_shift.data().row(i).sum() / n as f64;
            assert_abs_diff_eq!(mean, m, epsilon = 0.05);
        }
        // the sample covariance centers, so the shift cancels exactly
        let diff = (sample_covariance(&y_shift).matrix() - sample_covariance(&y_zero).matrix())
            .abs()
            .max();
        assert!(diff < 1e-10, "mean shift leaked into the covariance: {diff}");
    }

    #[test]
    fn student_t_needs_three_degrees_of_freedom() {
        let err = standard_innovations(
            2,
            4,
            &ReturnDistribution::StudentT { df: 2 },
            &mut derive_rng(0, &[]),
        );
        assert!(err.is_err());
    }

    fn sorted_spectrum(scenario: &Scenario, p: usize) -> Vec<f64> {
        let mut s = scenario.spectrum(p).unwrap();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s
    }

    #[test]
    fn bounded_spectrum_p9() {
        let s = sorted_spectrum(&Scenario::BoundedSpectrum, 9);
        let mut expect = vec![2.0];
        expect.extend(vec![5.0; 4]);
        expect.extend(vec![10.0; 4]);
        assert_eq!(s, expect);
    }

    #[test]
    fn unbounded_spectrum_p9() {
        let s = sorted_spectrum(&Scenario::UnboundedSpectrum, 9);
        let mut expect = vec![2.0];
        expect.extend(vec![5.0; 4]);
        expect.extend(vec![10.0; 3]);
        expect.push(9.0);
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(s, expect);
    }

    #[test]
    fn unbounded_top_eigenvalue_grows_with_p() {
        let s = Scenario::UnboundedSpectrum.spectrum(72).unwrap();
        assert_eq!(s.iter().cloned().fold(f64::MIN, f64::max), 72.0);
        assert_eq!(s.len(), 72);
    }

    #[test]
    fn dispersed_spectrum_p200() {
        let s = Scenario::DispersedSpectrum.spectrum(200).unwrap();
        assert_eq!(s.iter().filter(|&&l| l == 3.0).count(), 40);
        assert_eq!(s.iter().filter(|&&l| l == 1.0).count(), 80);
        assert_eq!(s.iter().filter(|&&l| l == 0.5).count(), 80);
    }

    #[test]
    fn divisibility_errors_name_the_modulus() {
        let e = Scenario::BoundedSpectrum.spectrum(10).unwrap_err();
        assert!(e.to_string().contains('9'), "{e}");
        let e = Scenario::DispersedSpectrum.spectrum(7).unwrap_err();
        assert!(e.to_string().contains('5'), "{e}");
    }

    #[test]
    fn scenario_covariance_has_prescribed_trace() {
        let mut rng = derive_rng(5, &[1]);
        let sigma = build_scenario(&Scenario::BoundedSpectrum, 9, &mut rng).unwrap();
        assert_abs_diff_eq!(sigma.matrix().trace(), 62.0, epsilon = 1e-9);
    }

    #[test]
    fn ecdf_counting_definition() {
        let f = Ecdf::new(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(f.eval(2.0), 2.0 / 3.0);
        assert_abs_diff_eq!(f.eval(0.5), 0.0);
        assert_abs_diff_eq!(f.eval(1e300), 1.0);
        let ties = Ecdf::new(&[1.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(ties.eval(1.0), 2.0 / 3.0);
        assert_eq!(ties.points(), vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]);
        assert!(Ecdf::new(&[]).is_err());
    }

    #[test]
    fn ecdf_quantiles() {
        let f = Ecdf::new(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(f.quantile(0.25).unwrap(), 1.0);
        assert_abs_diff_eq!(f.quantile(0.5).unwrap(), 2.0);
        assert_abs_diff_eq!(f.quantile(1.0).unwrap(), 4.0);
        assert!(f.quantile(0.0).is_err());
    }

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            scenario: Scenario::BoundedSpectrum,
            c_target: 0.5,
            p_schedule: vec![(9, 18), (18, 36)],
            distribution: ReturnDistribution::Gaussian,
            repetitions: 5,
            estimators: vec![
                EstimatorKind::Traditional,
                EstimatorKind::BonaFide,
                EstimatorKind::FrahmMemmel,
                EstimatorKind::OracleShrinkage,
            ],
            target: TargetSpec::Naive,
            seed: 42,
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_scheduler_independent() {
        let config = small_config();
        let a = run_monte_carlo(&config).unwrap();
        let b = run_monte_carlo(&config).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| run_monte_carlo(&config)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn report_shape_and_mean_consistency() {
        let config = small_config();
        let report = run_monte_carlo(&config).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert_eq!(cell.results.len(), 4);
            for r in &cell.results {
                assert_eq!(r.loss_samples.len(), config.repetitions);
                let mean = r.loss_samples.iter().sum::<f64>() / r.loss_samples.len() as f64;
                assert_abs_diff_eq!(r.mean_loss, mean, epsilon = 1e-15);
                assert!(r.loss_samples.iter().all(|&l| l >= -1e-10));
            }
        }
    }

    #[test]
    fn oracle_never_loses_to_traditional_on_any_draw() {
        let mut config = small_config();
        config.repetitions = 40;
        config.p_schedule = vec![(9, 18)];
        config.estimators = vec![EstimatorKind::Traditional, EstimatorKind::OracleShrinkage];
        let report = run_monte_carlo(&config).unwrap();
        let cell = &report.cells[0];
        let trad = &cell.result(EstimatorKind::Traditional).unwrap().loss_samples;
        let oracle = &cell
            .result(EstimatorKind::OracleShrinkage)
            .unwrap()
            .loss_samples;
        for (t, o) in trad.iter().zip(oracle.iter()) {
            assert!(o <= &(t + 1e-10), "oracle {o} above traditional {t}");
        }
    }

    #[test]
    fn frahm_memmel_rejected_in_super_critical_configs() {
        let mut config = small_config();
        config.c_target = 1.5;
        config.p_schedule = vec![(9, 6)];
        let err = run_monte_carlo(&config).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn schedule_cells_must_match_c_target() {
        let mut config = small_config();
        config.p_schedule = vec![(9, 18), (18, 30)];
        assert!(run_monte_carlo(&config).is_err());
    }

    #[test]
    fn geometric_schedule_matches_doubling_design() {
        let s = SimulationConfig::geometric_schedule(0.5).unwrap();
        assert_eq!(s, vec![(9, 18), (18, 36), (36, 72), (72, 144), (144, 288), (288, 576)]);
        let s = SimulationConfig::geometric_schedule(1.8).unwrap();
        assert_eq!(s[0], (9, 5));
    }

    #[test]
    fn derived_streams_differ_across_paths() {
        use rand::RngCore;
        let mut a = derive_rng(1, &[2, 3]);
        let mut b = derive_rng(1, &[2, 4]);
        let mut c = derive_rng(1, &[2, 3]);
        let (xa, xb, xc) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_ne!(xa, xb);
        assert_eq!(xa, xc);
    }
}
