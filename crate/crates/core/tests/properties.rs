use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use gsinkhorn::bounds::campaign::random_gaussian;
use gsinkhorn::bounds::{
    bounded_kernel_rates, general_kernel_rates, two_sample_rate, verify_all, w2_sample_rate, KernelClass,
};
use gsinkhorn::gaussian::{empirical_gaussian, entropic_ot, sample, sinkhorn_div, wasserstein2_sq};
use gsinkhorn::kernel_sinkhorn::{kernel_sinkhorn_div, kernel_wasserstein_sq, mmd_sq};
use gsinkhorn::linalg::{product_psd_spectrum, singular_values};
use gsinkhorn::seeding::derive_seed;
use gsinkhorn::{Epsilon, GaussianMeasure, KernelSpec, PsdMatrix, SampleSet};

fn pair(seed: u64, d: usize) -> (GaussianMeasure, GaussianMeasure) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (random_gaussian(&mut rng, d), random_gaussian(&mut rng, d))
}

fn samples(seed: u64, d: usize, m: usize) -> SampleSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample(&random_gaussian(&mut rng, d), m, seed ^ 0x5eed).unwrap()
}

fn eps_strategy() -> impl Strategy<Value = Epsilon> {
    prop_oneof![
        Just(Epsilon::Zero),
        Just(Epsilon::Infinity),
        (-2.0f64..2.0).prop_map(|e| Epsilon::Finite(10f64.powf(e))),
    ]
}

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::Linear),
        (0.5f64..3.0).prop_map(|sigma| KernelSpec::Gaussian { sigma }),
        (0.2f64..2.0).prop_map(|a| KernelSpec::Laplacian { a }),
        (1u32..=3, 0.0f64..2.0).prop_map(|(degree, offset)| KernelSpec::Polynomial { degree, offset }),
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sinkhorn_is_symmetric_nonnegative_and_vanishes_on_the_diagonal(seed in any::<u64>(), d in 1usize..6, eps in eps_strategy()) {
        let (g0, g1) = pair(seed, d);
        let s01 = sinkhorn_div(&g0, &g1, eps).unwrap();
        let s10 = sinkhorn_div(&g1, &g0, eps).unwrap();
        prop_assert!(s01 >= 0.0);
        prop_assert!(close(s01, s10, 1e-9));
        prop_assert!(sinkhorn_div(&g0, &g0, eps).unwrap().abs() <= 1e-9 * g0.cov.trace().max(1.0));
    }

    #[test]
    fn sinkhorn_limits_recover_w2_and_mean_distance(seed in any::<u64>(), d in 1usize..5) {
        let (g0, g1) = pair(seed, d);
        prop_assert!(close(sinkhorn_div(&g0, &g1, Epsilon::Zero).unwrap(), wasserstein2_sq(&g0, &g1).unwrap(), 1e-12));
        let mean_sq = (&g0.mean - &g1.mean).norm_squared();
        prop_assert!(close(sinkhorn_div(&g0, &g1, Epsilon::Infinity).unwrap(), mean_sq, 1e-12));
        let scale = g0.cov.trace() + g1.cov.trace() + mean_sq;
        let tiny = sinkhorn_div(&g0, &g1, Epsilon::Finite(1e-6)).unwrap();
        prop_assert!((tiny - wasserstein2_sq(&g0, &g1).unwrap()).abs() <= 1e-3 * scale);
        let huge = sinkhorn_div(&g0, &g1, Epsilon::Finite(1e7)).unwrap();
        prop_assert!((huge - mean_sq).abs() <= 1e-3 * scale);
    }

    #[test]
    fn sinkhorn_is_debiased_entropic_ot(seed in any::<u64>(), d in 1usize..5, e in -1.0f64..1.5) {
        let (g0, g1) = pair(seed, d);
        let eps = Epsilon::Finite(10f64.powf(e));
        let ot01 = entropic_ot(&g0, &g1, eps).unwrap();
        let ot00 = entropic_ot(&g0, &g0, eps).unwrap();
        let ot11 = entropic_ot(&g1, &g1, eps).unwrap();
        let s = sinkhorn_div(&g0, &g1, eps).unwrap();
        prop_assert!(close(s, ot01 - 0.5 * (ot00 + ot11), 1e-8));
    }

    #[test]
    fn commuting_w2_is_sum_of_root_gaps(l0 in prop::collection::vec(0.0f64..10.0, 1..6), shift in -2.0f64..2.0) {
        let l1: Vec<f64> = l0.iter().rev().copied().collect();
        let mean0 = DVector::from_element(l0.len(), shift);
        let g0 = GaussianMeasure::new(mean0, PsdMatrix::from_diagonal(&l0).unwrap()).unwrap();
        let g1 = GaussianMeasure::centered(PsdMatrix::from_diagonal(&l1).unwrap());
        let expected: f64 = l0.iter().zip(&l1).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum::<f64>()
            + shift * shift * l0.len() as f64;
        prop_assert!(close(wasserstein2_sq(&g0, &g1).unwrap(), expected, 1e-9));
    }

    #[test]
    fn linear_kernel_matches_empirical_gaussians(seed in any::<u64>(), d in 1usize..5, m in 2usize..30, n in 2usize..30, eps in eps_strategy()) {
        let x = samples(seed, d, m);
        let y = samples(seed.wrapping_add(1), d, n);
        let (gx, gy) = (empirical_gaussian(&x).unwrap(), empirical_gaussian(&y).unwrap());
        let kernel = kernel_sinkhorn_div(&KernelSpec::Linear, &x, &y, eps).unwrap().value;
        prop_assert!(close(kernel, sinkhorn_div(&gx, &gy, eps).unwrap(), 1e-8));
    }

    #[test]
    fn kernel_divergence_is_a_semimetric_on_samples(seed in any::<u64>(), k in kernel_strategy(), eps in eps_strategy(), m in 2usize..25) {
        let x = samples(seed, 3, m);
        let y = samples(seed.wrapping_add(7), 3, m + 3);
        let xy = kernel_sinkhorn_div(&k, &x, &y, eps).unwrap().value;
        let yx = kernel_sinkhorn_div(&k, &y, &x, eps).unwrap().value;
        prop_assert!(xy >= 0.0);
        prop_assert!(close(xy, yx, 1e-8));
        let xx = kernel_sinkhorn_div(&k, &x, &x, eps).unwrap().value;
        prop_assert!(xx.abs() <= 1e-8 * xy.max(1.0));
    }

    #[test]
    fn kernel_divergence_ignores_sample_order(seed in any::<u64>(), k in kernel_strategy(), eps in eps_strategy()) {
        let x = samples(seed, 2, 12);
        let y = samples(seed.wrapping_add(3), 2, 9);
        let reversed = SampleSet::new(DMatrix::from_fn(2, 12, |i, j| x.data()[(i, 11 - j)])).unwrap();
        let a = kernel_sinkhorn_div(&k, &x, &y, eps).unwrap().value;
        let b = kernel_sinkhorn_div(&k, &reversed, &y, eps).unwrap().value;
        prop_assert!(close(a, b, 1e-8));
    }

    #[test]
    fn kernel_limits(seed in any::<u64>(), k in kernel_strategy()) {
        let x = samples(seed, 2, 15);
        let y = samples(seed.wrapping_add(5), 2, 11);
        let at_inf = kernel_sinkhorn_div(&k, &x, &y, Epsilon::Infinity).unwrap().value;
        prop_assert!(close(at_inf, mmd_sq(&k, &x, &y).unwrap(), 1e-9));
        let at_zero = kernel_sinkhorn_div(&k, &x, &y, Epsilon::Zero).unwrap().value;
        prop_assert!(close(at_zero, kernel_wasserstein_sq(&k, &x, &y).unwrap(), 1e-12));
    }

    #[test]
    fn bounds_hold_on_random_pairs(seed in any::<u64>(), d in 1usize..7, e in -1.0f64..1.0) {
        let (g0, g1) = pair(seed, d);
        for r in verify_all(&g0, &g1, 10f64.powf(e)).unwrap() {
            prop_assert!(r.holds, "{:?}", r);
        }
    }

    #[test]
    fn psd_square_root_squares_back(seed in any::<u64>(), d in 1usize..8) {
        let (g, _) = pair(seed, d);
        let r = g.cov.sqrt().unwrap();
        let back = r.matrix() * r.matrix();
        prop_assert!((back - g.cov.matrix()).amax() <= 1e-9 * g.cov.trace().max(1.0));
    }

    #[test]
    fn product_spectrum_matches_outer_gram_eigenvalues(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(rows, cols, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let mut got: Vec<f64> = product_psd_spectrum(&b).unwrap().iter().copied().collect();
        let mut want: Vec<f64> = (&b * b.transpose()).symmetric_eigenvalues().iter().copied().collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(got.len(), rows);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10);
        }
        prop_assert!(singular_values(&b).unwrap().iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn rates_shrink_with_m_and_eps(kappa in 0.1f64..5.0, m in 1usize..10_000, delta in 0.01f64..0.99, e in -1.0f64..1.0) {
        let eps = 10f64.powf(e);
        for rates in [bounded_kernel_rates, general_kernel_rates] {
            let (now, later) = (rates(kappa, m, delta, eps).unwrap(), rates(kappa, m + 1, delta, eps).unwrap());
            prop_assert!(later.mean_rhs < now.mean_rhs && later.cov_rhs < now.cov_rhs && later.sinkhorn_rhs < now.sinkhorn_rhs);
            prop_assert!(rates(kappa, m, delta, 2.0 * eps).unwrap().sinkhorn_rhs < now.sinkhorn_rhs);
            prop_assert!(rates(kappa, m, delta / 2.0, eps).unwrap().sinkhorn_rhs > now.sinkhorn_rhs);
        }
        for class in [KernelClass::Bounded, KernelClass::General] {
            let t = two_sample_rate(kappa, m, m, delta, eps, class).unwrap();
            prop_assert!(two_sample_rate(kappa, m + 1, m + 1, delta, eps, class).unwrap() < t);
        }
        prop_assert!(w2_sample_rate(kappa, m + 1, delta, 3).unwrap() < w2_sample_rate(kappa, m, delta, 3).unwrap());
    }

    #[test]
    fn derived_seeds_separate_tasks(seed in any::<u64>(), trial in 0u64..1000, m in 1u64..1000) {
        let s = derive_seed(seed, "exp1", &[trial, m]);
        prop_assert_eq!(s, derive_seed(seed, "exp1", &[trial, m]));
        prop_assert_ne!(s, derive_seed(seed, "exp2", &[trial, m]));
        prop_assert_ne!(s, derive_seed(seed, "exp1", &[trial + 1, m]));
        prop_assert_ne!(derive_seed(seed, "ab", &[]), derive_seed(seed, "a", &[u64::from(b'b')]));
    }
}
