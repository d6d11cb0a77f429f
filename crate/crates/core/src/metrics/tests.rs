use proptest::prelude::*;

use super::*;

fn worked_example() -> (DenseMatrix, DenseMatrix) {
    let y = DenseMatrix::from_rows(&[[1.0, 0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0]]).unwrap();
    let f = DenseMatrix::from_rows(&[[0.75, 0.6, 0.1, 0.8, 0.15], [0.25, 0.8, 0.1, 0.15, 0.3]]).unwrap();
    (y, f)
}

fn from_rows(rows: &[Vec<f64>]) -> DenseMatrix {
    DenseMatrix::from_rows(rows).unwrap()
}

/// Direct enumeration of the LRAP definition.
fn lrap_oracle(y: &DenseMatrix, f: &DenseMatrix) -> f64 {
    let (n, d) = y.shape();
    let mut total = 0.0;
    let mut used = 0;
    for i in 0..n {
        let truths: Vec<usize> = (0..d).filter(|&j| y.get(i, j) > 0.0).collect();
        if truths.is_empty() {
            continue;
        }
        used += 1;
        let mut s = 0.0;
        for &j in &truths {
            let l_y = truths.iter().filter(|&&k| f.get(i, k) >= f.get(i, j)).count();
            let l_all = (0..d).filter(|&k| f.get(i, k) >= f.get(i, j)).count();
            s += l_y as f64 / l_all as f64;
        }
        total += s / truths.len() as f64;
    }
    total / used as f64
}

/// Direct enumeration over all (true, false) label pairs.
fn ranking_loss_oracle(y: &DenseMatrix, f: &DenseMatrix) -> f64 {
    let (n, d) = y.shape();
    let mut total = 0.0;
    let mut used = 0;
    for i in 0..n {
        let (mut bad, mut pairs) = (0, 0);
        for k in 0..d {
            for l in 0..d {
                if y.get(i, k) > 0.0 && y.get(i, l) <= 0.0 {
                    pairs += 1;
                    if f.get(i, k) < f.get(i, l) {
                        bad += 1;
                    }
                }
            }
        }
        if pairs > 0 {
            used += 1;
            total += bad as f64 / pairs as f64;
        }
    }
    if used == 0 {
        0.0
    } else {
        total / used as f64
    }
}

fn auc_oracle(y: &[f64], s: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] > 0.0 && y[j] <= 0.0 {
                den += 1.0;
                num += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

#[test]
fn worked_example_values() {
    let (y, f) = worked_example();
    let y_hat = threshold(&f, 0.5);
    assert_eq!(
        y_hat,
        DenseMatrix::from_rows(&[[1.0, 1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0]]).unwrap()
    );
    assert_eq!(subset_accuracy(&y, &y_hat).unwrap(), 0.0);
    assert_eq!(hamming_loss(&y, &y_hat).unwrap(), 0.5);
    assert!((jaccard(&y, &y_hat).unwrap() - 0.125).abs() < 1e-15);
    assert_eq!(coverage_error(&y, &f).unwrap(), 4.0);
    assert!((ranking_loss(&y, &f).unwrap() - 7.0 / 12.0).abs() < 1e-12);
    let l = lrap(&y, &f).unwrap();
    assert!((l.value - 47.0 / 120.0).abs() < 1e-12);
    assert_eq!(l.n_excluded, 0);
    assert_eq!(one_error(&y, &f).unwrap(), 1.0);
}

#[test]
fn worked_example_matches_enumeration() {
    let (y, f) = worked_example();
    assert!((lrap(&y, &f).unwrap().value - lrap_oracle(&y, &f)).abs() < 1e-15);
    assert!((ranking_loss(&y, &f).unwrap() - ranking_loss_oracle(&y, &f)).abs() < 1e-15);
}

#[test]
fn exact_prediction() {
    let (y, _) = worked_example();
    assert_eq!(subset_accuracy(&y, &y).unwrap(), 1.0);
    assert_eq!(hamming_loss(&y, &y).unwrap(), 0.0);
    assert_eq!(jaccard(&y, &y).unwrap(), 1.0);
    // scores equal to the labels rank perfectly
    assert_eq!(lrap(&y, &y).unwrap().value, 1.0);
    assert_eq!(ranking_loss(&y, &y).unwrap(), 0.0);
}

#[test]
fn empty_label_sets() {
    let z = DenseMatrix::zeros(2, 3, Layout::RowMajor);
    assert_eq!(jaccard(&z, &z).unwrap(), 1.0);
    let f = from_rows(&[vec![0.1, 0.2, 0.3], vec![0.3, 0.2, 0.1]]);
    let l = lrap(&z, &f).unwrap();
    assert_eq!((l.value, l.n_excluded), (1.0, 2));
    assert_eq!(coverage_error(&z, &f).unwrap(), 0.0);
    assert_eq!(ranking_loss(&z, &f).unwrap(), 0.0);
    let y = from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]);
    let l = lrap(&y, &f).unwrap();
    assert_eq!((l.value, l.n_excluded), (1.0, 1));
}

#[test]
fn tied_scores_give_the_positive_fraction() {
    let y = from_rows(&[vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]]);
    let f = from_rows(&[vec![0.4; 7]]);
    assert!((lrap(&y, &f).unwrap().value - 3.0 / 7.0).abs() < 1e-15);
    assert!((lrap_oracle(&y, &f) - 3.0 / 7.0).abs() < 1e-15);
    assert_eq!(coverage_error(&y, &f).unwrap(), 7.0);
    // ties are not wrong comparisons
    assert_eq!(ranking_loss(&y, &f).unwrap(), 0.0);
    // argmax ties go to label 0, a true label
    assert_eq!(one_error(&y, &f).unwrap(), 0.0);
}

#[test]
fn shape_errors() {
    let (y, _) = worked_example();
    let bad = DenseMatrix::zeros(2, 4, Layout::RowMajor);
    assert!(matches!(hamming_loss(&y, &bad), Err(Error::Shape(_))));
    assert!(matches!(lrap(&y, &bad), Err(Error::Shape(_))));
    assert!(matches!(regression_metrics(&y, &bad), Err(Error::Shape(_))));
    assert!(matches!(roc_auc(&[1.0], &[0.1, 0.2]), Err(Error::Shape(_))));
}

#[test]
fn binary_metric_examples() {
    let perfect = binary_metrics(&Confusion { tp: 5, tn: 5, fp: 0, fn_: 0 });
    assert_eq!((perfect.accuracy, perfect.f1, perfect.error_rate), (1.0, 1.0, 0.0));
    assert!(!perfect.degenerate);

    let y = [1.0, 1.0, -1.0, -1.0];
    let c = Confusion::from_labels(&y, &[1.0; 4]).unwrap();
    assert_eq!(c, Confusion { tp: 2, tn: 0, fp: 2, fn_: 0 });
    let m = binary_metrics(&c);
    assert_eq!((m.recall, m.specificity, m.balanced_accuracy), (1.0, 0.0, 0.5));
    assert_eq!((m.fpr, m.fnr, m.precision), (1.0, 0.0, 0.5));

    let m = binary_metrics(&Confusion { tp: 1, tn: 1, fp: 1, fn_: 1 });
    assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
}

#[test]
fn degenerate_denominators_are_flagged() {
    let m = binary_metrics(&Confusion { tp: 0, tn: 4, fp: 0, fn_: 0 });
    assert!(m.degenerate);
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    assert_eq!(m.accuracy, 1.0);
}

#[test]
fn averaging_modes() {
    let (y, f) = worked_example();
    let y_hat = threshold(&f, 0.5);
    // per-label F1 by hand: label 0 (tp1 fn1) 2/3, label 1 (fp2) 0, label 2 (fn1) 0, label 3 (fp1) 0, label 4 none 0
    let per_label: Vec<f64> = (0..5)
        .map(|j| {
            let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
            for i in 0..2 {
                match (y.get(i, j) > 0.0, y_hat.get(i, j) > 0.0) {
                    (true, true) => tp += 1.0,
                    (false, true) => fp += 1.0,
                    (true, false) => fneg += 1.0,
                    _ => {}
                }
            }
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fneg)
            }
        })
        .collect();
    let expected = per_label.iter().sum::<f64>() / 5.0;
    assert!((expected - 2.0 / 15.0).abs() < 1e-15);
    let macro_f1 = averaged_metric(&y, &y_hat, BinaryMetric::F1, Averaging::Macro).unwrap();
    assert!((macro_f1 - expected).abs() < 1e-15);

    let micro_acc = averaged_metric(&y, &y_hat, BinaryMetric::Accuracy, Averaging::Micro).unwrap();
    assert!((micro_acc - (1.0 - hamming_loss(&y, &y_hat).unwrap())).abs() < 1e-15);

    // sample-averaged precision: row 0 has 1 of 3 right, row 1 has 0 of 1
    let samples_p = averaged_metric(&y, &y_hat, BinaryMetric::Precision, Averaging::Samples).unwrap();
    assert!((samples_p - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn single_label_modes_agree() {
    let y = DenseMatrix::from_column(vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    let p = DenseMatrix::from_column(vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    for metric in [BinaryMetric::F1, BinaryMetric::Accuracy, BinaryMetric::BalancedAccuracy] {
        let plain = metric.of(&Confusion::from_labels(&y.column_vec(0), &p.column_vec(0)).unwrap());
        assert_eq!(averaged_metric(&y, &p, metric, Averaging::Macro).unwrap(), plain);
        assert_eq!(averaged_metric(&y, &p, metric, Averaging::Micro).unwrap(), plain);
    }
    // with one label, a sample's accuracy is its 0/1 hit
    let acc = averaged_metric(&y, &p, BinaryMetric::Accuracy, Averaging::Samples).unwrap();
    assert!((acc - 4.0 / 6.0).abs() < 1e-15);
}

#[test]
fn roc_auc_examples() {
    let y = [0.0, 0.0, 1.0, 1.0];
    assert_eq!(roc_auc(&y, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 1.0);
    assert_eq!(roc_auc(&y, &[0.4, 0.3, 0.2, 0.1]).unwrap(), 0.0);
    assert_eq!(roc_auc(&y, &[0.5; 4]).unwrap(), 0.5);
    assert!(matches!(roc_auc(&[1.0, 1.0], &[0.1, 0.2]), Err(Error::InvalidTarget(_))));
}

#[test]
fn regression_examples() {
    let y = from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0], vec![2.0, 8.0]]);
    let m = regression_metrics(&y, &y).unwrap();
    assert_eq!((m.mse, m.mae, m.macro_r2, m.variance_r2), (0.0, 0.0, 1.0, 1.0));
    assert_eq!(m.r2, None);

    let mut means = DenseMatrix::zeros(3, 2, Layout::RowMajor);
    for i in 0..3 {
        means.set(i, 0, 2.0);
        means.set(i, 1, 5.0);
    }
    let m = regression_metrics(&y, &means).unwrap();
    assert!(m.macro_r2.abs() < 1e-15);
    assert!(m.variance_r2.abs() < 1e-15);
    assert!((m.mse - (1.0 + 1.0 + 9.0 + 9.0) / 6.0).abs() < 1e-15);
}

#[test]
fn constant_outputs_are_excluded() {
    let y = from_rows(&[vec![1.0, 4.0], vec![3.0, 4.0], vec![2.0, 4.0]]);
    let p = from_rows(&[vec![1.5, 4.5], vec![2.5, 4.0], vec![2.0, 3.0]]);
    let m = regression_metrics(&y, &p).unwrap();
    assert_eq!(m.n_constant_outputs, 1);
    assert_eq!(m.r2_per_output[1], None);
    // output 0: sse 0.5, sst 2
    assert!((m.macro_r2 - 0.75).abs() < 1e-15);
    assert!((m.variance_r2 - 0.75).abs() < 1e-15);

    let flat = DenseMatrix::from_column(vec![2.0; 4]);
    assert_eq!(regression_metrics(&flat, &flat).unwrap().r2, Some(1.0));
    let off = DenseMatrix::from_column(vec![2.0, 2.0, 2.0, 3.0]);
    assert_eq!(regression_metrics(&flat, &off).unwrap().r2, Some(0.0));
}

#[test]
fn variance_r2_is_the_variance_weighted_macro_average() {
    use rand::Rng as _;
    let mut rng = crate::rng::rng_from_seed(3);
    let (n, d) = (50, 3);
    let mut y = DenseMatrix::zeros(n, d, Layout::RowMajor);
    let mut p = DenseMatrix::zeros(n, d, Layout::RowMajor);
    for i in 0..n {
        for j in 0..d {
            let v = rng.random::<f64>() * (j + 1) as f64;
            y.set(i, j, v);
            p.set(i, j, v + rng.random::<f64>() - 0.5);
        }
    }
    let m = regression_metrics(&y, &p).unwrap();
    let var: Vec<f64> = (0..d)
        .map(|j| {
            let c = y.column_vec(j);
            let mu = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64
        })
        .collect();
    let total: f64 = var.iter().sum();
    let weighted: f64 = (0..d).map(|j| var[j] / total * m.r2_per_output[j].unwrap()).sum();
    assert!((m.variance_r2 - weighted).abs() < 1e-10);
}

fn label_and_score_matrices() -> impl Strategy<Value = (DenseMatrix, DenseMatrix)> {
    (1usize..8, 1usize..8).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::bool::ANY, n * d),
            // few distinct values so that ties occur
            prop::collection::vec(0u8..6, n * d),
        )
            .prop_map(move |(labels, scores)| {
                let y = DenseMatrix::new(n, d, Layout::RowMajor, labels.iter().map(|&b| f64::from(u8::from(b))).collect()).unwrap();
                let f = DenseMatrix::new(n, d, Layout::RowMajor, scores.iter().map(|&s| f64::from(s) / 5.0).collect()).unwrap();
                (y, f)
            })
    })
}

fn map_values(m: &DenseMatrix, g: impl Fn(f64) -> f64) -> DenseMatrix {
    DenseMatrix::new(m.n_rows(), m.n_cols(), m.layout(), m.values().iter().map(|&v| g(v)).collect()).unwrap()
}

proptest! {
    #[test]
    fn ranking_metrics_match_enumeration((y, f) in label_and_score_matrices()) {
        let l = lrap(&y, &f).unwrap();
        if l.n_excluded < y.n_rows() {
            prop_assert!((l.value - lrap_oracle(&y, &f)).abs() < 1e-12);
        }
        prop_assert!((ranking_loss(&y, &f).unwrap() - ranking_loss_oracle(&y, &f)).abs() < 1e-12);
    }

    #[test]
    fn ranking_metrics_ignore_monotone_transforms((y, f) in label_and_score_matrices()) {
        let g = map_values(&f, |v| (3.0 * v).exp() - 7.0);
        prop_assert_eq!(lrap(&y, &f).unwrap(), lrap(&y, &g).unwrap());
        prop_assert_eq!(ranking_loss(&y, &f).unwrap(), ranking_loss(&y, &g).unwrap());
        prop_assert_eq!(coverage_error(&y, &f).unwrap(), coverage_error(&y, &g).unwrap());
        prop_assert_eq!(one_error(&y, &f).unwrap(), one_error(&y, &g).unwrap());
    }

    #[test]
    fn metric_bounds((y, f) in label_and_score_matrices()) {
        let (n, d) = y.shape();
        let y_hat = threshold(&f, 0.5);
        for v in [
            hamming_loss(&y, &y_hat).unwrap(),
            jaccard(&y, &y_hat).unwrap(),
            subset_accuracy(&y, &y_hat).unwrap(),
            lrap(&y, &f).unwrap().value,
            ranking_loss(&y, &f).unwrap(),
            one_error(&y, &f).unwrap(),
        ] {
            prop_assert!((0.0..=1.0).contains(&v), "{}", v);
        }
        // each sample needs at least its own true labels and at most all d
        let cov = coverage_error(&y, &f).unwrap();
        let mean_pos = y.values().iter().sum::<f64>() / n as f64;
        prop_assert!(cov >= mean_pos - 1e-12 && cov <= d as f64);
        let micro = averaged_metric(&y, &y_hat, BinaryMetric::Accuracy, Averaging::Micro).unwrap();
        prop_assert!((micro - (1.0 - hamming_loss(&y, &y_hat).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn roc_auc_matches_pairs(
        labels in prop::collection::vec(prop::bool::ANY, 2..40),
        raw in prop::collection::vec(0u8..5, 40),
    ) {
        prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
        let y: Vec<f64> = labels.iter().map(|&b| f64::from(u8::from(b))).collect();
        let s: Vec<f64> = raw[..y.len()].iter().map(|&v| f64::from(v)).collect();
        let auc = roc_auc(&y, &s).unwrap();
        prop_assert!((auc - auc_oracle(&y, &s)).abs() < 1e-12);
        let t: Vec<f64> = s.iter().map(|v| v.powi(3) + 2.0).collect();
        prop_assert_eq!(auc, roc_auc(&y, &t).unwrap());
    }

    #[test]
    fn equal_variance_outputs_make_both_r2_agree(
        base in prop::collection::vec(-5.0f64..5.0, 6..20),
        noise in prop::collection::vec(-1.0f64..1.0, 60),
    ) {
        let n = base.len();
        let mean = base.iter().sum::<f64>() / n as f64;
        prop_assume!(base.iter().any(|v| (v - mean).abs() > 1e-3));
        // three outputs: shifted and mirrored copies of one column share its variance
        let mut y = DenseMatrix::zeros(n, 3, Layout::RowMajor);
        let mut p = DenseMatrix::zeros(n, 3, Layout::RowMajor);
        for i in 0..n {
            let cols = [base[i], base[i] + 3.0, -base[i]];
            for j in 0..3 {
                y.set(i, j, cols[j]);
                p.set(i, j, cols[j] + noise[3 * i + j]);
            }
        }
        let m = regression_metrics(&y, &p).unwrap();
        prop_assert!((m.macro_r2 - m.variance_r2).abs() < 1e-10);
    }
}
