use fcpca_core::clustering::{objective, update_membership};
use fcpca_core::covariance::{augmented_matrix, block_covariance, center_series, lagged_cross_covariance, BlockCovariance, Series};
use fcpca_core::eval::rand_index_labels;
use fcpca_core::simgen::{eeg_scenario, varma_scenario, LengthMode, SimRng};
use fcpca_core::subspace::{eigen_sym, make_basis, reconstruction_error, weighted_common_covariance};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, rng: &mut SimRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// A centered random series with some cross-correlation and memory.
fn centered_series(t: usize, p: usize, seed: u64) -> Series {
    let mut rng = SimRng::seed_from_u64(seed);
    let mix = gaussian(p, p, &mut rng);
    let e = gaussian(t, p, &mut rng) * mix;
    let mut x = e;
    for r in 1..t {
        for c in 0..p {
            x[(r, c)] += 0.6 * x[(r - 1, c)];
        }
    }
    center_series(&Series::new("x", x).unwrap()).unwrap().0
}

fn random_psd(n: usize, rng: &mut SimRng) -> DMatrix<f64> {
    let a = gaussian(n + 3, n, rng);
    a.tr_mul(&a)
}

fn brute_force_rand(a: &[u8], b: &[u8]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// Minimizer of `Σₛ uₛᵐ eₛ` over the 3-simplex by exhaustive search on a
/// grid of the given step.
fn simplex_grid_minimizer(e: [f64; 3], m: f64, step: f64) -> [f64; 3] {
    let n = (1.0 / step).round() as usize;
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=n {
        let u0 = i as f64 * step;
        let a = u0.powf(m) * e[0];
        for j in 0..=(n - i) {
            let u1 = j as f64 * step;
            let u2 = (1.0 - u0 - u1).max(0.0);
            let v = a + u1.powf(m) * e[1] + u2.powf(m) * e[2];
            if v < best.0 {
                best = (v, [u0, u1, u2]);
            }
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn memberships_are_row_stochastic(
        errors in prop::collection::vec(0.0f64..50.0, 12..=40),
        m in 1.05f64..3.0,
    ) {
        let s = 4;
        let n = errors.len() / s;
        let e = DMatrix::from_row_slice(n, s, &errors[..n * s]);
        let u = update_membership(&e, m, 1e-12);
        for i in 0..n {
            let row = u.row(i);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn membership_update_lowers_the_objective(
        errors in prop::collection::vec(0.01f64..20.0, 15),
        other in prop::collection::vec(0.01f64..1.0, 15),
        m in 1.1f64..2.5,
    ) {
        let e = DMatrix::from_row_slice(5, 3, &errors);
        let best = update_membership(&e, m, 1e-12);
        let mut raw = DMatrix::from_row_slice(5, 3, &other);
        for mut row in raw.row_iter_mut() {
            let sum: f64 = row.iter().sum();
            row /= sum;
        }
        let any = fcpca_core::MembershipMatrix::new(raw).unwrap();
        prop_assert!(objective(&best, &e, m) <= objective(&any, &e, m) * (1.0 + 1e-12));
    }

    #[test]
    fn argmin_membership_sharpens_as_m_falls(errors in prop::collection::vec(0.1f64..10.0, 4)) {
        let e = DMatrix::from_row_slice(1, 4, &errors);
        let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assume!(errors.iter().filter(|&&v| (v - min).abs() < 1e-9).count() == 1);
        let arg = errors.iter().position(|&v| v == min).unwrap();
        let ms: Vec<f64> = (0..6).map(|i| 1.1 + 0.2 * i as f64).collect();
        let top: Vec<f64> = ms.iter().map(|&m| update_membership(&e, m, 1e-12).get(0, arg)).collect();
        for w in top.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn projector_algebra(seed in any::<u64>(), n in 2usize..9, k_frac in 0.0f64..1.0) {
        let mut rng = SimRng::seed_from_u64(seed);
        let eig = eigen_sym(&random_psd(n, &mut rng)).unwrap();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let b = make_basis(&eig, k).unwrap();
        let p = &b.projector;
        prop_assert!((p * p - p).amax() < 1e-10);
        prop_assert!((p.trace() - k as f64).abs() < 1e-10);
        let spectrum = SymmetricEigen::new(p.clone()).eigenvalues;
        prop_assert!(spectrum.iter().all(|&v| v.abs() < 1e-8 || (v - 1.0).abs() < 1e-8));
        prop_assert_eq!(spectrum.iter().filter(|&&v| v > 0.5).count(), k);
    }

    #[test]
    fn pythagorean_split(seed in any::<u64>(), n in 2usize..8, rows in 5usize..40) {
        let mut rng = SimRng::seed_from_u64(seed);
        let eig = eigen_sym(&random_psd(n, &mut rng)).unwrap();
        let x = gaussian(rows, n, &mut rng);
        let total = x.norm_squared();
        let mut previous = f64::INFINITY;
        for k in 1..=n {
            let b = make_basis(&eig, k).unwrap();
            let kept = (&x * &b.projector).norm_squared();
            let lost = reconstruction_error(&x, &b, true).unwrap();
            prop_assert!((kept + lost - total).abs() <= 1e-8 * total);
            prop_assert!(lost <= previous + 1e-10 * total);
            previous = lost;
        }
        prop_assert!(previous <= 1e-10 * total);
    }

    #[test]
    fn common_matrix_trace_is_the_weighted_average(seed in any::<u64>(), m in 1.1f64..2.5) {
        let mut rng = SimRng::seed_from_u64(seed);
        let blocks: Vec<BlockCovariance> = (0..5)
            .map(|_| BlockCovariance { lag: 1, matrix: random_psd(4, &mut rng) })
            .collect();
        let u: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let common = weighted_common_covariance(&blocks, &u, m).unwrap();
        let w: Vec<f64> = u.iter().map(|v| v.powf(m)).collect();
        let expected = blocks.iter().zip(&w).map(|(b, w)| w * b.matrix.trace()).sum::<f64>() / w.iter().sum::<f64>();
        let eig_sum: f64 = eigen_sym(&common).unwrap().eigenvalues.iter().sum();
        prop_assert!((eig_sum - expected).abs() <= 1e-8 * expected.abs().max(1.0));
    }

    #[test]
    fn rand_index_matches_pair_enumeration(
        pair in (2usize..=50).prop_flat_map(|n| (
            prop::collection::vec(0u8..4, n),
            prop::collection::vec(0u8..5, n),
        ))
    ) {
        let (a, b) = pair;
        let ri = rand_index_labels(&a, &b).unwrap();
        prop_assert_eq!(ri, brute_force_rand(&a, &b));
        prop_assert_eq!(ri, rand_index_labels(&b, &a).unwrap());
        let renamed: Vec<String> = a.iter().map(|l| format!("c{}", 7 - l)).collect();
        prop_assert_eq!(ri, rand_index_labels(&renamed, &b).unwrap());
    }

    #[test]
    fn block_structure(seed in any::<u64>(), p in 1usize..6, t in 8usize..60, lag in 1usize..3) {
        let x = centered_series(t, p, seed);
        let b = block_covariance(&x, lag).unwrap().matrix;
        prop_assert_eq!(&b, &b.transpose());
        let top = b.view((0, 0), (p, p)).clone_owned();
        let bottom = b.view((p, p), (p, p)).clone_owned();
        prop_assert!(top.iter().zip(bottom.iter()).all(|(a, c)| a.to_bits() == c.to_bits()));

        let g0 = lagged_cross_covariance(&x, 0).unwrap().matrix;
        let eigs = SymmetricEigen::new(g0.clone()).eigenvalues;
        prop_assert!(eigs.iter().all(|&v| v >= -1e-10 * g0.trace().max(1e-300)));
    }

    #[test]
    fn augmented_means_match_truncated_means(seed in any::<u64>(), p in 1usize..5, t in 10usize..80, lag in 1usize..3) {
        let x = centered_series(t, p, seed);
        let aug = augmented_matrix(&x, lag).unwrap().matrix;
        let rows = (t - lag) as f64;
        let scale = x.values.amax().max(1e-300);
        for c in 0..p {
            let early: f64 = (0..t - lag).map(|r| x.values[(r, c)]).sum::<f64>() / rows;
            let late: f64 = (lag..t).map(|r| x.values[(r, c)]).sum::<f64>() / rows;
            let mean_early = aug.column(c).sum() / rows;
            let mean_late = aug.column(p + c).sum() / rows;
            prop_assert!((mean_early - early).abs() <= 1e-8 * scale);
            prop_assert!((mean_late - late).abs() <= 1e-8 * scale);
            // Dropping `lag` rows of a centered column moves the mean by at most this.
            let bound = lag as f64 * scale / rows * (1.0 + 1e-12);
            prop_assert!(mean_early.abs() <= bound && mean_late.abs() <= bound);
        }
    }

    #[test]
    fn variable_permutation_conjugates_lag_covariances(seed in any::<u64>(), p in 2usize..6, lag in 0usize..3) {
        let x = centered_series(40, p, seed);
        let mut perm: Vec<usize> = (0..p).collect();
        perm.rotate_left(1);
        perm.swap(0, p - 1);
        let permuted = Series::new("y", DMatrix::from_fn(40, p, |r, c| x.values[(r, perm[c])])).unwrap();
        let g = lagged_cross_covariance(&x, lag).unwrap().matrix;
        let gp = lagged_cross_covariance(&permuted, lag).unwrap().matrix;
        for i in 0..p {
            for j in 0..p {
                prop_assert!((gp[(i, j)] - g[(perm[i], perm[j])]).abs() <= 1e-12 * g.amax().max(1.0));
            }
        }
    }
}

#[test]
fn membership_update_matches_simplex_grid_search() {
    let mut rng = SimRng::seed_from_u64(20);
    let m = 1.7;
    for _ in 0..2 {
        let e = DMatrix::from_fn(4, 3, |_, _| rng.random_range(0.2..5.0));
        let u = update_membership(&e, m, 1e-12);
        for i in 0..4 {
            let oracle = simplex_grid_minimizer([e[(i, 0)], e[(i, 1)], e[(i, 2)]], m, 0.001);
            for s in 0..3 {
                assert!(
                    (u.get(i, s) - oracle[s]).abs() < 0.002,
                    "row {i} cluster {s}: {} vs grid {}",
                    u.get(i, s),
                    oracle[s]
                );
            }
        }
    }
}

#[test]
fn generators_are_bit_deterministic() {
    let bits = |ds: &fcpca_core::MtsDataset| -> Vec<u64> {
        ds.series().iter().flat_map(|s| s.values.iter().map(|v| v.to_bits())).collect()
    };
    let (a, ta) = varma_scenario(6, LengthMode::RANGE_200_600, &mut SimRng::seed_from_u64(99)).unwrap();
    let (b, tb) = varma_scenario(6, LengthMode::RANGE_200_600, &mut SimRng::seed_from_u64(99)).unwrap();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(ta, tb);
    let (c, _) = varma_scenario(6, LengthMode::RANGE_200_600, &mut SimRng::seed_from_u64(100)).unwrap();
    assert_ne!(bits(&a), bits(&c));

    let (e1, _) = eeg_scenario(8, 128, &mut SimRng::seed_from_u64(5)).unwrap();
    let (e2, _) = eeg_scenario(8, 128, &mut SimRng::seed_from_u64(5)).unwrap();
    assert_eq!(bits(&e1), bits(&e2));
    assert_eq!(a.ids(), b.ids());
}
