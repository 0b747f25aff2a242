mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::Rng;
use speechcost_core::evaluation::stats::WILCOXON_EXACT_MAX;
use speechcost_core::evaluation::timing::StageTimings;
use speechcost_core::evaluation::{
    bonferroni, ccc, evaluate_cv, fit_group, mae, make_folds, pearson, rmse, severity_bin, ttest_two_sample,
    wilcoxon_signed_rank, CvConfig, Dataset, FeatureSource, FoldSplit, Gender, SampleMeta,
};
use speechcost_core::{CoreError, FeatureMatrix, ModelFamily};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Subjects 0–49 score 0–4, 50–79 score 5–9, 80–94 score 10–14, 95–99 score 15–24.
fn hundred_subjects() -> Vec<SampleMeta> {
    common::metadata(100, 3, |s| match s {
        0..=49 => (s % 5) as u8,
        50..=79 => 5 + (s % 5) as u8,
        80..=94 => 10 + (s % 5) as u8,
        _ => 15 + (s % 10) as u8,
    })
}

#[test]
fn folds_keep_severity_proportions_on_the_hundred_subject_plan() {
    let meta = hundred_subjects();
    let global = [0.50, 0.30, 0.15, 0.05];
    for seed in 0..10 {
        let plan = make_folds(&meta, 5, seed).unwrap();
        assert_eq!(plan.subject_fold.len(), 100);
        for fold in 0..5 {
            let subjects = plan.subjects_in(fold);
            let mut counts = [0usize; 4];
            for s in &subjects {
                let score = meta.iter().find(|m| m.subject_id == *s).unwrap().phq8;
                counts[severity_bin(f64::from(score))] += 1;
            }
            for b in 0..4 {
                let share = counts[b] as f64 / subjects.len() as f64;
                assert!(
                    (share - global[b]).abs() <= 0.10 * global[b],
                    "seed {seed} fold {fold} bin {b}: {share}"
                );
            }
        }
    }
}

#[test]
fn folds_are_subject_disjoint_pair_by_pair() {
    let meta = hundred_subjects();
    let plan = make_folds(&meta, 5, 7).unwrap();
    let folds = plan.sample_folds(&meta).unwrap();
    let mut seen = vec![0usize; meta.len()];
    for fold in 0..5 {
        let split = FoldSplit::from_assignment(&folds, fold);
        for &i in &split.train {
            for &j in &split.test {
                assert_ne!(meta[i].subject_id, meta[j].subject_id);
            }
        }
        split.validate(&meta).unwrap();
        for &j in &split.test {
            seen[j] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1));
}

#[test]
fn fold_arithmetic_examples() {
    let meta = common::metadata(10, 2, |s| s as u8);
    let plan = make_folds(&meta, 5, 1).unwrap();
    let folds = plan.sample_folds(&meta).unwrap();
    for fold in 0..5 {
        assert_eq!(plan.subjects_in(fold).len(), 2);
        assert_eq!(folds.iter().filter(|&&f| f == fold).count(), 4);
    }

    let same_bin = common::metadata(13, 1, |_| 7);
    let plan = make_folds(&same_bin, 5, 1).unwrap();
    let sizes: Vec<usize> = (0..5).map(|f| plan.subjects_in(f).len()).collect();
    assert!(
        sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1,
        "{sizes:?}"
    );

    let few = common::metadata(4, 3, |_| 1);
    assert!(matches!(make_folds(&few, 5, 1), Err(CoreError::Fold(_))));
}

const VECTORS: [(&[f64], &[f64]); 4] = [
    (&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]),
    (&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 4.0, 4.0]),
    (&[0.5, -1.25, 3.0, 7.5, 2.0, -0.75], &[1.0, -2.0, 2.5, 6.0, 2.25, 0.0]),
    (
        &[10.0, 12.0, 9.0, 15.0, 11.0, 8.0, 14.0],
        &[11.5, 10.0, 9.5, 13.0, 12.5, 7.0, 16.0],
    ),
];

#[test]
fn metrics_match_their_definitions() {
    for (a, b) in VECTORS {
        assert!((rmse(a, b).unwrap() - common::rmse(a, b)).abs() < 1e-9);
        assert!((mae(a, b).unwrap() - common::mae(a, b)).abs() < 1e-9);
        assert!((ccc(a, b).unwrap() - common::ccc(a, b)).abs() < 1e-9);
        assert!((pearson(a, b).unwrap() - common::pearson(a, b)).abs() < 1e-9);
    }
    let (a, b) = VECTORS[0];
    assert!((rmse(a, b).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!((mae(a, b).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    // a=[1,2,3,4], b=[2,2,4,4]: cov 1, variances 1.25 and 1, means 2.5 and 3
    let (a, b) = VECTORS[1];
    assert!((ccc(a, b).unwrap() - 2.0 / (1.25 + 1.0 + 0.25)).abs() < 1e-12);
}

#[test]
fn ccc_identity_and_sign_flip() {
    let a = [1.0, -3.0, 2.5, 0.25, 4.0];
    assert!((ccc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    let m = common::mean(&a);
    let centered: Vec<f64> = a.iter().map(|v| v - m).collect();
    let flipped: Vec<f64> = centered.iter().map(|v| -v).collect();
    assert!((ccc(&centered, &flipped).unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(ccc(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 0.0);
    assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(CoreError::Shape { .. })));
}

/// Pooled two-sample t from the textbook formula, p from statrs.
fn reference_ttest(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (common::pop_var(a) * na, common::pop_var(b) * nb);
    let df = na + nb - 2.0;
    let sp = ((va + vb) / df).sqrt();
    let t = (common::mean(a) - common::mean(b)) / (sp * (1.0 / na + 1.0 / nb).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    (t, 2.0 * dist.cdf(-t.abs()))
}

#[test]
fn ttest_matches_an_independent_distribution_library() {
    for (a, b) in VECTORS {
        let got = ttest_two_sample(a, b).unwrap();
        let (t, p) = reference_ttest(a, b);
        assert!((got.t - t).abs() < 1e-9, "{} vs {t}", got.t);
        assert!((got.p - p).abs() < 1e-6, "{} vs {p}", got.p);
        assert_eq!(got.df, (a.len() + b.len() - 2) as f64);
    }
}

#[test]
fn ttest_examples() {
    let a = common::normal_vec(1000, 0.0, 1);
    let b = common::normal_vec(1000, 1.0, 2);
    let r = ttest_two_sample(&a, &b).unwrap();
    assert!(r.p < 1e-10);
    assert_eq!(r.df, 1998.0);
    let same = ttest_two_sample(&a[..50], &a[..50]).unwrap();
    assert_eq!(same.t, 0.0);
    assert!((same.p - 1.0).abs() < 1e-12);
    assert!(matches!(
        ttest_two_sample(&[1.0, 1.0], &[1.0, 1.0]),
        Err(CoreError::DegenerateTest(_))
    ));
}

#[test]
fn exact_wilcoxon_matches_sign_enumeration() {
    let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (
            (1..=20).map(f64::from).collect(),
            (1..=20).map(|v| f64::from(v) + 1.0).collect(),
        ),
        (
            vec![3.1, 2.0, 5.5, 4.0, 6.2, 1.0, 2.2, 7.0, 3.3],
            vec![2.0, 2.9, 6.0, 3.1, 7.9, 1.0, 2.0, 8.5, 3.0],
        ),
        (
            // tied magnitudes
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
            vec![2.0, 1.0, 4.0, 5.0, 4.0, 8.0, 6.0, 9.0, 10.0, 13.0, 12.0, 12.5],
        ),
        (common::normal_vec(18, 0.0, 3), common::normal_vec(18, 0.3, 4)),
    ];
    for (before, after) in &cases {
        let got = wilcoxon_signed_rank(before, after, 1).unwrap();
        let (w, p) = common::wilcoxon_brute(before, after);
        assert!(got.exact);
        assert!((got.w - w).abs() < 1e-12);
        assert!((got.p - p).abs() < 1e-6, "{} vs {p}", got.p);
    }
    assert!(wilcoxon_signed_rank(&cases[0].0, &cases[0].1, 1).unwrap().p < 0.01);
}

#[test]
fn large_sample_wilcoxon_uses_the_corrected_normal_approximation() {
    for seed in [5, 6, 7] {
        let len = WILCOXON_EXACT_MAX + 15;
        let before = common::normal_vec(len, 0.0, seed);
        let after = common::normal_vec(len, 0.2, seed + 50);
        let got = wilcoxon_signed_rank(&before, &after, 3).unwrap();
        assert!(!got.exact);
        // no ties among continuous draws: plain variance n(n+1)(2n+1)/24
        let n = len as f64;
        let mu = n * (n + 1.0) / 4.0;
        let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0f64).sqrt();
        let z = (got.w - mu + 0.5) / sd;
        let p = (2.0 * Normal::new(0.0, 1.0).unwrap().cdf(z)).min(1.0);
        assert!((got.p - p).abs() < 1e-6, "{} vs {p}", got.p);
        assert!((got.bonferroni_p - (3.0 * p).min(1.0)).abs() < 1e-6);
    }
}

#[test]
fn wilcoxon_edge_cases() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    assert!(matches!(
        wilcoxon_signed_rank(&x, &x, 1),
        Err(CoreError::DegenerateTest(_))
    ));
    let mut y = x.clone();
    for v in y.iter_mut().take(5) {
        *v += 1.0;
    }
    assert!(matches!(
        wilcoxon_signed_rank(&x, &y, 1),
        Err(CoreError::InsufficientData(_))
    ));
    assert!((bonferroni(0.0001, 220) - 0.022).abs() < 1e-15);
    assert_eq!(bonferroni(0.5, 220), 1.0);
}

#[test]
fn stage_totals_are_the_sum_of_stages() {
    let mut t = StageTimings {
        data_loading_s: 1.5,
        preprocessing_s: 2.25,
        ..Default::default()
    };
    t.add_training(ModelFamily::Svr, 3.0);
    t.add_prediction(ModelFamily::Svr, 0.125);
    assert!((t.total(ModelFamily::Svr) - (1.5 + 2.25 + 3.0 + 0.125)).abs() < 1e-12);
}

/// 60 subjects × 5 samples with labels exactly linear in three features
/// (or, when `shuffle` is set, labels permuted away from the features),
/// plus three pure-noise columns.
fn constructed_dataset(shuffle: bool) -> Dataset {
    let mut rng = common::rng(3);
    let scores: Vec<u8> = (0..60).map(|_| rng.gen_range(0..=24)).collect();
    let mut meta = common::metadata(60, 5, |s| scores[s]);
    let rows: Vec<Vec<f64>> = meta
        .iter()
        .map(|m| {
            let f1: f64 = rng.gen_range(-2.0..2.0);
            let f2: f64 = rng.gen_range(-2.0..2.0);
            let f3 = (f64::from(m.phq8) - 12.0 - 2.0 * f1 - 1.5 * f2) / 2.0;
            let noise: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            [vec![f1, f2, f3], noise].concat()
        })
        .collect();
    if shuffle {
        let mut labels: Vec<u8> = meta.iter().map(|m| m.phq8).collect();
        for i in (1..labels.len()).rev() {
            labels.swap(i, rng.gen_range(0..=i));
        }
        for (m, l) in meta.iter_mut().zip(labels) {
            m.phq8 = l;
        }
    }
    let ids = meta.iter().map(|m| m.sample_id.clone()).collect();
    let fm = FeatureMatrix::from_rows(ids, common::names(6), &rows).unwrap();
    Dataset::new(meta, &fm, FeatureSource::Conventional, "constructed").unwrap()
}

/// Keep every column: with six features the default tenth would keep one.
fn all_features() -> CvConfig {
    CvConfig {
        selection_fraction: 1.0,
        ..Default::default()
    }
}

#[test]
fn learnable_labels_are_recovered_and_every_sample_is_predicted_once() {
    let data = constructed_dataset(false);
    let out = evaluate_cv(&data, &all_features()).unwrap();
    let std = out.report.label_std;

    for (family, preds) in &out.predictions {
        assert_eq!(preds.len(), data.len(), "{family:?}");
        let ids: BTreeSet<&str> = preds.iter().map(|p| p.sample_id.as_str()).collect();
        assert_eq!(ids.len(), data.len());
        let fold_of: BTreeMap<&str, usize> = data
            .meta
            .iter()
            .map(|m| (m.sample_id.as_str(), out.plan.fold_of(&m.subject_id).unwrap()))
            .collect();
        assert!(preds.iter().all(|p| fold_of[p.sample_id.as_str()] == p.fold));
    }
    let m = |f| out.report.model(f).unwrap();
    for f in ModelFamily::ALL {
        assert!(m(f).gender(Gender::Male).is_some() && m(f).gender(Gender::Female).is_some());
    }

    // the kernel machine represents a linear map and gets it almost exactly
    assert!(
        m(ModelFamily::Svr).overall.rmse < 0.5,
        "{}",
        m(ModelFamily::Svr).overall.rmse
    );
    // Piecewise-constant trees and a dropout-regularized network cannot
    // reproduce a continuous linear target at 240 training rows (reference
    // implementations land in the same place), so they are held to beating
    // the mean predictor by a wide margin instead.
    for f in [ModelFamily::Forest, ModelFamily::Fnn] {
        assert!(
            m(f).overall.rmse < 0.5 * std,
            "{f:?}: {} vs std {std}",
            m(f).overall.rmse
        );
    }
}

#[test]
fn shuffled_labels_leave_every_family_at_the_label_spread() {
    let data = constructed_dataset(true);
    let out = evaluate_cv(&data, &all_features()).unwrap();
    let std = out.report.label_std;
    for m in &out.report.models {
        assert!(
            (m.overall.rmse - std).abs() <= 0.15 * std,
            "{}: {} vs std {std}",
            m.label,
            m.overall.rmse
        );
    }
}

#[test]
fn leakage_guard_trips_on_an_injected_test_id() {
    let data = constructed_dataset(false);
    let folds = make_folds(&data.meta, 5, 1).unwrap().sample_folds(&data.meta).unwrap();
    let split = FoldSplit::from_assignment(&folds, 0);
    let forbidden = split.test_ids(&data.meta);
    let cfg = CvConfig {
        families: vec![ModelFamily::Svr],
        ..all_features()
    };
    let mut timings = StageTimings::default();
    let mut rows = split.train.clone();
    rows.push(split.test[0]);
    let err = fit_group(&data, &rows, &forbidden, &cfg, 1, &mut timings).unwrap_err();
    assert!(matches!(err, CoreError::Leakage(id) if id == data.meta[split.test[0]].sample_id));

    let crossing = FoldSplit {
        fold: 0,
        train: rows,
        test: split.test.clone(),
    };
    assert!(matches!(crossing.validate(&data.meta), Err(CoreError::Leakage(_))));
}

fn vec_pair(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0f64..50.0, n),
            prop::collection::vec(-50.0f64..50.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rmse_dominates_mae((a, b) in vec_pair(1..40)) {
        let (r, m) = (rmse(&a, &b).unwrap(), mae(&a, &b).unwrap());
        prop_assert!(m >= 0.0);
        prop_assert!(r >= m - 1e-12);
    }

    #[test]
    fn ccc_is_symmetric_and_bounded_by_pearson((a, b) in vec_pair(2..40)) {
        let (c, d) = (ccc(&a, &b).unwrap(), ccc(&b, &a).unwrap());
        prop_assert!((c - d).abs() < 1e-12);
        prop_assert!(c.abs() <= pearson(&a, &b).unwrap().abs() + 1e-12);
    }

    #[test]
    fn metrics_ignore_joint_permutation((a, b) in vec_pair(2..40), seed in 0u64..1000) {
        let mut idx: Vec<usize> = (0..a.len()).collect();
        let mut rng = common::rng(seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.gen_range(0..=i));
        }
        let pa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
        prop_assert!((rmse(&a, &b).unwrap() - rmse(&pa, &pb).unwrap()).abs() < 1e-9);
        prop_assert!((mae(&a, &b).unwrap() - mae(&pa, &pb).unwrap()).abs() < 1e-9);
        prop_assert!((ccc(&a, &b).unwrap() - ccc(&pa, &pb).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ttest_swap_only_flips_the_sign(a in prop::collection::vec(-10.0f64..10.0, 2..30), b in prop::collection::vec(-10.0f64..10.0, 2..30)) {
        let (x, y) = (ttest_two_sample(&a, &b).unwrap(), ttest_two_sample(&b, &a).unwrap());
        prop_assert!(x.p > 0.0 && x.p <= 1.0);
        prop_assert!((x.t + y.t).abs() < 1e-12);
        prop_assert!((x.p - y.p).abs() < 1e-15);
    }
}
