mod common;

use std::collections::BTreeMap;

use boiler_fdd::ml::knn::Knn;
use boiler_fdd::ml::svm::{rbf, solve_binary, SvmParams};
use boiler_fdd::ml::tree::{Criterion, DecisionTree, Splitter, TreeParams};
use boiler_fdd::ml::Matrix;
use proptest::prelude::*;

use common::{brute_force_dual, knn_oracle};

/// (training rows, labels, class count, k, queries)
type TinyProblem = (Vec<Vec<f64>>, Vec<usize>, usize, usize, Vec<Vec<f64>>);

fn tiny_problem() -> impl Strategy<Value = TinyProblem> {
    (2usize..5, 2usize..4, 3usize..20).prop_flat_map(|(n_classes, dims, n)| {
        // Integer coordinates on a small lattice force distance and vote ties.
        let point = proptest::collection::vec((-3i32..4).prop_map(f64::from), dims);
        (
            proptest::collection::vec(point.clone(), n),
            proptest::collection::vec(0..n_classes, n),
            Just(n_classes),
            1..=n,
            proptest::collection::vec(point, 1..8),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn knn_matches_exhaustive_sort((train, labels, n_classes, k, queries) in tiny_problem()) {
        let model = Knn::fit(&Matrix::from_rows(&train).unwrap(), &labels, n_classes, k).unwrap();
        for q in &queries {
            prop_assert_eq!(model.predict_row(q), knn_oracle(&train, &labels, n_classes, k, q));
        }
    }
}

fn consistent_data() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (1usize..5, 2usize..6).prop_flat_map(|(dims, n_classes)| {
        proptest::collection::vec(
            (proptest::collection::vec((-20i32..20).prop_map(f64::from), dims), 0..n_classes),
            2..120,
        )
        .prop_map(|rows| {
            // Keep the first label seen for each distinct point.
            let mut seen = BTreeMap::new();
            for (x, y) in rows {
                let key: Vec<i64> = x.iter().map(|v| *v as i64).collect();
                seen.entry(key).or_insert((x, y));
            }
            seen.into_values().unzip()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unconstrained_tree_fits_training_set_exactly(
        (x, y) in consistent_data(),
        entropy in any::<bool>(),
        random in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let n_classes = y.iter().max().unwrap() + 1;
        let params = TreeParams {
            criterion: if entropy { Criterion::Entropy } else { Criterion::Gini },
            splitter: if random { Splitter::Random } else { Splitter::Best },
            ..TreeParams::default()
        };
        let m = Matrix::from_rows(&x).unwrap();
        let tree = DecisionTree::fit(&m, &y, n_classes, &params, seed).unwrap();
        prop_assert_eq!(tree.predict(&m), y);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn four_point_dual_matches_brute_force(
        pts in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 4),
        signs in proptest::collection::vec(any::<bool>(), 4),
        c in 0.1f64..20.0,
        gamma in 0.1f64..3.0,
    ) {
        // Both classes present, and points far enough apart that K is well
        // conditioned.
        prop_assume!(signs.iter().any(|&s| s) && signs.iter().any(|&s| !s));
        for i in 0..4 {
            for j in 0..i {
                let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                prop_assume!(d2 > 0.05);
            }
        }
        let y: Vec<f64> = signs.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
        let k: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| rbf(gamma, a, b)).collect()).collect();
        let (alpha_ref, obj_ref) = brute_force_dual(&k, &y, c);

        let x = Matrix::from_rows(&pts).unwrap();
        let params = SvmParams { tol: 1e-6, ..SvmParams::new(c, gamma) };
        let sol = solve_binary(&x, &[0, 1, 2, 3], &y, &params).unwrap();
        prop_assert!((sol.objective - obj_ref).abs() <= 1e-2 * obj_ref.abs().max(1.0),
            "objective {} vs {obj_ref}", sol.objective);
        for (a, b) in sol.alpha.iter().zip(&alpha_ref) {
            prop_assert!((a - b).abs() <= 1e-2 * c.max(1.0), "alpha {:?} vs {alpha_ref:?}", sol.alpha);
        }
    }
}
