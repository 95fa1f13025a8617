//! Randomized structural properties of the core building blocks.

use gmv_core::estimators::{bona_fide_shrinkage, traditional_gmv, TargetPortfolio, WeightVector};
use gmv_core::linalg::{pseudo_inverse, sample_covariance, ReturnsMatrix, SymmetricMatrix};
use gmv_core::simulation::Ecdf;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

fn returns_strategy(p: usize, n: usize) -> impl Strategy<Value = ReturnsMatrix> {
    proptest::collection::vec(-1.0f64..1.0, p * n)
        .prop_map(move |v| ReturnsMatrix::new(DMatrix::from_vec(p, n, v)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sample_covariance_is_psd(returns in returns_strategy(5, 12)) {
        let s = sample_covariance(&returns);
        let eig = SymmetricEigen::new(s.matrix().clone());
        for l in eig.eigenvalues.iter() {
            prop_assert!(*l >= -1e-10, "negative eigenvalue {l}");
        }
    }

    #[test]
    fn pseudo_inverse_penrose_conditions(values in proptest::collection::vec(-2.0f64..2.0, 5 * 3)) {
        let b = DMatrix::from_vec(5, 3, values);
        let m = SymmetricMatrix::from_nearly_symmetric(&b * b.transpose()).unwrap();
        let g = pseudo_inverse(&m, None).unwrap();
        let (a, g) = (m.matrix(), g.matrix());
        let scale = a.norm().max(1.0) * g.norm().max(1.0);
        prop_assert!((a * g * a - a).norm() <= 1e-8 * scale);
        prop_assert!((g * a * g - g).norm() <= 1e-8 * scale);
        prop_assert!(((a * g).transpose() - a * g).norm() <= 1e-8 * scale);
        prop_assert!(((g * a).transpose() - g * a).norm() <= 1e-8 * scale);
    }

    #[test]
    fn estimated_weights_sum_to_one(returns in returns_strategy(4, 20)) {
        let s = sample_covariance(&returns);
        let s_inv = pseudo_inverse(&s, None).unwrap();
        if let Ok(w) = traditional_gmv(&s_inv) {
            prop_assert!((w.sum() - 1.0).abs() <= 1e-10);
        }
        if let Ok(est) = bona_fide_shrinkage(&returns, &TargetPortfolio::naive(4)) {
            prop_assert!((est.weights.sum() - 1.0).abs() <= 1e-10);
            prop_assert!((0.0..=1.0).contains(&est.alpha_hat));
        }
    }

    #[test]
    fn convex_combination_preserves_the_budget(
        weights in proptest::collection::vec(-1.0f64..2.0, 6),
        alpha in 0.0f64..=1.0,
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total.abs() > 0.1);
        let w = WeightVector::new(DVector::from_vec(weights.clone()).unscale(total)).unwrap();
        let combined = w.combine(alpha, &WeightVector::naive(6));
        prop_assert!((combined.sum() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn ecdf_is_a_distribution_function(
        samples in proptest::collection::vec(-10.0f64..10.0, 1..40),
        xs in proptest::collection::vec(-11.0f64..11.0, 2),
    ) {
        let f = Ecdf::new(&samples).unwrap();
        let (a, b) = (xs[0].min(xs[1]), xs[0].max(xs[1]));
        prop_assert!(f.eval(a) <= f.eval(b));
        prop_assert!((0.0..=1.0).contains(&f.eval(a)));
        prop_assert!(f.eval(-11.0) == 0.0 && f.eval(11.0) == 1.0);
    }
}
