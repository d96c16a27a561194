use proptest::prelude::*;

use loret::bench::{accuracy_at, auc_wilcoxon, make_folds, pairwise_ci, roc_full};
use loret::data::{ColumnKind, ColumnSpec, Dataset, Role, Schema, SetTag};
use loret::glm::{fit_logit, score, DesignMatrix, LogitOptions, Separation};
use loret::targeting::{targeting_list_from_scores, Filter, TargetingConfig};
use loret::tree::best_split_cart;

/// Scores on a coarse grid (so ties occur) with both classes present.
fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..12, n),
            prop::collection::vec(0u8..2, n),
        )
            .prop_map(|(s, mut y)| {
                y[0] = 0;
                y[1] = 1;
                (
                    s.into_iter().map(|v| f64::from(v) / 11.0).collect(),
                    y.into_iter().map(f64::from).collect(),
                )
            })
    })
}

fn numeric_dataset(x: &[f64], y: &[f64]) -> Dataset {
    let schema = Schema::new(
        vec![
            ColumnSpec::new("y", ColumnKind::Binary, Role::Response, SetTag::None),
            ColumnSpec::new("x", ColumnKind::Numeric, Role::Regressor, SetTag::Standard),
        ],
        vec![],
    )
    .unwrap();
    Dataset::from_columns(schema, vec![y.to_vec(), x.to_vec()], (0..y.len()).map(|i| i.to_string()).collect()).unwrap()
}

proptest! {
    #[test]
    fn auc_is_invariant_under_monotone_maps((s, y) in scored_labels()) {
        let base = auc_wilcoxon(&s, &y).unwrap();
        let mapped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        prop_assert_eq!(base, auc_wilcoxon(&mapped, &y).unwrap());
    }

    #[test]
    fn reversing_scores_complements_auc((s, y) in scored_labels()) {
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let sum = auc_wilcoxon(&s, &y).unwrap() + auc_wilcoxon(&neg, &y).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_roc_is_monotone_with_wilcoxon_area((s, y) in scored_labels()) {
        let roc = roc_full(&s, &y).unwrap();
        prop_assert_eq!((roc.fpr[0], roc.tpr[0]), (0.0, 0.0));
        prop_assert_eq!((*roc.fpr.last().unwrap(), *roc.tpr.last().unwrap()), (1.0, 1.0));
        for w in roc.fpr.windows(2).chain(roc.tpr.windows(2)) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!((roc.area() - auc_wilcoxon(&s, &y).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn zero_cutoff_accuracy_is_prevalence((s, y) in scored_labels()) {
        let prev = y.iter().sum::<f64>() / y.len() as f64;
        prop_assert!((accuracy_at(&s, &y, 0.0).unwrap() - prev).abs() < 1e-12);
    }

    #[test]
    fn folds_are_bootstrap_with_disjoint_oob(n in 20usize..300, seed in any::<u64>()) {
        let plan = make_folds(n, 3, seed).unwrap();
        prop_assert_eq!(&plan, &make_folds(n, 3, seed).unwrap());
        for f in &plan.folds {
            prop_assert_eq!(f.in_bag.len(), n);
            prop_assert!(!f.oob.is_empty());
            prop_assert!(f.oob.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(f.oob.iter().all(|r| !f.in_bag.contains(r)));
        }
    }

    #[test]
    fn cart_split_ignores_row_order(
        data in prop::collection::vec((0u8..8, 0u8..2), 6..60),
        rot in 0usize..60,
    ) {
        let x: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
        let y: Vec<f64> = data.iter().map(|d| f64::from(d.1)).collect();
        let ds = numeric_dataset(&x, &y);
        let mut rows: Vec<usize> = (0..x.len()).collect();
        let a = best_split_cart(&ds, &rows, &[1], 2);
        rows.rotate_left(rot % x.len());
        rows.reverse();
        let b = best_split_cart(&ds, &rows, &[1], 2);
        prop_assert_eq!(a.map(|c| c.kind), b.map(|c| c.kind));
    }

    #[test]
    fn ci_ignores_fold_shifts(
        base in prop::collection::vec(prop::collection::vec(0.7f64..0.9, 6), 3),
        shift in prop::collection::vec(-0.1f64..0.1, 6),
    ) {
        let shifted: Vec<Vec<f64>> = base.iter().map(|v| v.iter().zip(&shift).map(|(a, s)| a + s).collect()).collect();
        let a = pairwise_ci(&base, 0.95, 4000, 1).unwrap();
        let b = pairwise_ci(&shifted, 0.95, 4000, 1).unwrap();
        for (p, q) in a.intervals.iter().zip(&b.intervals) {
            prop_assert!((p.lower - q.lower).abs() < 1e-9 && (p.upper - q.upper).abs() < 1e-9);
        }
    }

    #[test]
    fn targeting_is_a_sorted_filtered_range(
        probs in prop::collection::vec(0.0f64..=1.0, 1..50),
        lo in 0.0f64..0.5,
        width in 0.0f64..0.5,
        age_cut in 20.0f64..80.0,
    ) {
        let n = probs.len();
        let ages: Vec<f64> = (0..n).map(|i| 18.0 + (i * 37 % 70) as f64).collect();
        let ds = numeric_dataset(&ages, &vec![0.0; n]);
        let filter: Filter = format!("x<{age_cut}").parse().unwrap();
        let cfg = TargetingConfig::new(lo, lo + width).unwrap().with_filter(filter);
        let list = targeting_list_from_scores(&ds, &probs, None, &cfg).unwrap();
        prop_assert_eq!(list.len(), n);
        prop_assert!(list.windows(2).all(|w| w[0].prob >= w[1].prob));
        for r in &list {
            let want = probs[r.row] >= lo && probs[r.row] <= lo + width && ages[r.row] < age_cut;
            prop_assert_eq!(r.targeted, want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn logit_rescaling_a_column_rescales_its_coefficient(
        seed in any::<u64>(),
        scale in 0.1f64..10.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = xs
            .iter()
            .map(|x| f64::from(u8::from(rng.random::<f64>() < loret::glm::logistic(0.4 + 0.8 * x))))
            .collect();
        let rows: Vec<usize> = (0..n).collect();
        let plain = DesignMatrix::from_rows(&xs.iter().map(|x| vec![1.0, *x]).collect::<Vec<_>>()).unwrap();
        let scaled = DesignMatrix::from_rows(&xs.iter().map(|x| vec![1.0, x * scale]).collect::<Vec<_>>()).unwrap();
        let a = fit_logit(&plain, &rows, &y, &LogitOptions::default(), None).unwrap();
        let b = fit_logit(&scaled, &rows, &y, &LogitOptions::default(), None).unwrap();
        prop_assume!(a.separation == Separation::None);
        prop_assert!((a.coefficients[0] - b.coefficients[0]).abs() < 1e-7);
        prop_assert!((a.coefficients[1] - b.coefficients[1] * scale).abs() < 1e-7);
        prop_assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-8);
        let s = score(&plain, &rows, &y, &a.coefficients).unwrap();
        prop_assert!(s.iter().all(|v| v.abs() <= 1e-8));
    }
}
