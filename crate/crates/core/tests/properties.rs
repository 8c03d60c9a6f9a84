mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matrices_are_symmetric_with_zero_diagonal(pts in points(40), alpha in 1.0f64..6.0) {
        prop_assert_eq!(check_symmetric_zero_diagonal(&complete(&pts, alpha)), Ok(()));
    }

    #[test]
    fn triangle_inequality(pts in points(25), alpha in 1.0f64..6.0) {
        prop_assert_eq!(check_triangle(&complete(&pts, alpha)), Ok(()));
    }

    #[test]
    fn scaling_coordinates_scales_by_c_to_the_alpha(pts in points(25), alpha in 1.0f64..5.0, c in 0.05f64..20.0) {
        prop_assert_eq!(check_scale_equivariance(&pts, alpha, c), Ok(()));
    }

    #[test]
    fn alpha_one_is_euclidean(pts in points(30)) {
        prop_assert_eq!(check_alpha_one_euclidean(&pts), Ok(()));
    }

    #[test]
    fn kmedoids_objective_never_rises(pts in points(40), alpha in 1.0f64..4.0, m in 2usize..5, seed in any::<u64>()) {
        // duplicate points tie in the assignment step
        prop_assume!(m <= pts.len() && distinct(&pts));
        prop_assert_eq!(check_kmedoids_monotone(&pts, alpha, m, seed), Ok(()));
    }

    #[test]
    fn scores_ignore_label_names(
        (pred, truth) in label_pairs(),
        relabel in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        prop_assume!(truth.iter().any(|&t| t != truth[0]));
        prop_assert_eq!(check_score_permutation(&pred, &truth, &relabel), Ok(()));
    }

    #[test]
    fn bounds_fall_as_the_density_ratio_grows(
        d in 1usize..5,
        a0 in 1e-4f64..1.0,
        ratio in 1.01f64..1e4,
        factor in 1.0f64..100.0,
        lambda in 0.05f64..0.98,
    ) {
        prop_assert_eq!(check_bound_monotone(d, a0, ratio, factor, lambda), Ok(()));
    }
}
