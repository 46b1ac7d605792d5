//! Macro-averaged one-vs-rest classification metrics.
//!
//! Conventions:
//! - precision or recall with a zero denominator is 0, and so is F1 when both
//!   are 0;
//! - macro precision/recall/F1 average over classes that occur in the ground
//!   truth;
//! - ROC AUC uses midranks for ties and averages over classes with at least
//!   one positive and one negative;
//! - AUPR is average precision, `Σ (R_k − R_{k−1})·P_k` over descending
//!   distinct score thresholds, averaged over classes with a positive;
//! - accuracy is plain top-1 accuracy.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassConfusion {
    pub support: usize,
    pub predicted: usize,
    pub true_positive: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionSummary {
    pub accuracy: f64,
    pub per_class: Vec<ClassConfusion>,
}

impl ConfusionSummary {
    /// Macro (precision, recall, F1) over classes present in the ground truth
    /// and selected by `include`.
    pub fn macro_prf(&self, include: impl Fn(usize) -> bool) -> (f64, f64, f64) {
        let selected: Vec<&ClassConfusion> = self
            .per_class
            .iter()
            .enumerate()
            .filter(|(c, m)| m.support > 0 && include(*c))
            .map(|(_, m)| m)
            .collect();
        if selected.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let n = selected.len() as f64;
        (
            selected.iter().map(|m| m.precision).sum::<f64>() / n,
            selected.iter().map(|m| m.recall).sum::<f64>() / n,
            selected.iter().map(|m| m.f1).sum::<f64>() / n,
        )
    }
}

/// Per-class values of a ranking metric and their macro mean.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrScore {
    /// `None` where the one-vs-rest problem is undefined.
    pub per_class: Vec<Option<f64>>,
    pub macro_avg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub aupr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    pub macro_aupr: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
}

/// Macro precision/recall/F1 restricted to a class subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetMetrics {
    pub n_classes: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn check_labels(labels: &[usize], n_classes: usize, what: &str) -> Result<()> {
    if let Some(&y) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Input(format!(
            "{what} label {y} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

pub fn confusion_metrics(
    pred: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<ConfusionSummary> {
    if pred.len() != truth.len() {
        return Err(Error::Input(format!(
            "{} predictions, {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    check_labels(pred, n_classes, "predicted")?;
    check_labels(truth, n_classes, "true")?;

    let mut support = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut tp = vec![0usize; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        support[t] += 1;
        predicted[p] += 1;
        if p == t {
            tp[t] += 1;
        }
    }
    let correct: usize = tp.iter().sum();
    let per_class = (0..n_classes)
        .map(|c| {
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], support[c]);
            ClassConfusion {
                support: support[c],
                predicted: predicted[c],
                true_positive: tp[c],
                precision,
                recall,
                f1: f1_score(precision, recall),
            }
        })
        .collect();
    Ok(ConfusionSummary {
        accuracy: correct as f64 / truth.len() as f64,
        per_class,
    })
}

fn check_scores(scores: &[Vec<f64>], truth: &[usize]) -> Result<usize> {
    if scores.len() != truth.len() {
        return Err(Error::Input(format!(
            "{} score rows, {} labels",
            scores.len(),
            truth.len()
        )));
    }
    let Some(first) = scores.first() else {
        return Err(Error::Input("no samples".into()));
    };
    let n_classes = first.len();
    for (i, row) in scores.iter().enumerate() {
        if row.len() != n_classes {
            return Err(Error::Input(format!("score row {i} has width {}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input(format!("score row {i} is not a distribution")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Input(format!("score row {i} sums to {sum}")));
        }
    }
    check_labels(truth, n_classes, "true")?;
    Ok(n_classes)
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Sample indices ordered by `key` descending; ties keep index order.
fn descending_by(key: impl Fn(usize) -> f64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));
    order
}

fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks (1-based) of positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| positive[k]).count();
        rank_sum += midrank * pos_in_group as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

fn average_precision(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let order = descending_by(|i| scores[i], scores.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

fn ovr(
    scores: &[Vec<f64>],
    truth: &[usize],
    metric: fn(&[f64], &[bool]) -> Option<f64>,
) -> Result<OvrScore> {
    let n_classes = check_scores(scores, truth)?;
    let per_class: Vec<Option<f64>> = (0..n_classes)
        .map(|c| {
            let column: Vec<f64> = scores.iter().map(|row| row[c]).collect();
            let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            metric(&column, &positive)
        })
        .collect();
    Ok(OvrScore {
        macro_avg: mean_defined(&per_class),
        per_class,
    })
}

/// One-vs-rest ROC AUC via the Mann–Whitney rank statistic.
pub fn roc_auc_ovr(scores: &[Vec<f64>], truth: &[usize]) -> Result<OvrScore> {
    ovr(scores, truth, binary_auc)
}

/// One-vs-rest average precision.
pub fn pr_auc_ovr(scores: &[Vec<f64>], truth: &[usize]) -> Result<OvrScore> {
    ovr(scores, truth, average_precision)
}

/// Index of the largest score; ties go to the lowest class index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Full report from per-sample probability rows; predictions are the
/// row-wise argmax.
pub fn evaluate(scores: &[Vec<f64>], truth: &[usize]) -> Result<MetricsReport> {
    let n_classes = check_scores(scores, truth)?;
    let pred: Vec<usize> = scores.iter().map(|row| argmax(row)).collect();
    let confusion = confusion_metrics(&pred, truth, n_classes)?;
    let auc = roc_auc_ovr(scores, truth)?;
    let aupr = pr_auc_ovr(scores, truth)?;
    let (macro_precision, macro_recall, macro_f1) = confusion.macro_prf(|_| true);
    let per_class = confusion
        .per_class
        .iter()
        .enumerate()
        .map(|(c, m)| ClassMetrics {
            class: c,
            support: m.support,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc: auc.per_class[c],
            aupr: aupr.per_class[c],
        })
        .collect();
    Ok(MetricsReport {
        accuracy: confusion.accuracy,
        macro_precision,
        macro_recall,
        macro_f1,
        macro_auc: auc.macro_avg,
        macro_aupr: aupr.macro_avg,
        per_class,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

impl MetricsReport {
    /// Macro precision/recall/F1 over the classes in `mask` that occur in the
    /// evaluation ground truth.
    pub fn subset(&self, mask: &[bool]) -> SubsetMetrics {
        let selected: Vec<&ClassMetrics> = self
            .per_class
            .iter()
            .filter(|m| m.support > 0 && mask.get(m.class).copied().unwrap_or(false))
            .collect();
        let n = selected.len();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                selected.iter().map(|m| f(m)).sum::<f64>() / n as f64
            }
        };
        SubsetMetrics {
            n_classes: n,
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        }
    }

    /// Flat `key=value` record.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "accuracy={:.6}", self.accuracy);
        let _ = writeln!(out, "macro_precision={:.6}", self.macro_precision);
        let _ = writeln!(out, "macro_recall={:.6}", self.macro_recall);
        let _ = writeln!(out, "macro_f1={:.6}", self.macro_f1);
        let _ = writeln!(out, "macro_auc={}", fmt_opt(self.macro_auc));
        let _ = writeln!(out, "macro_aupr={}", fmt_opt(self.macro_aupr));
        out
    }

    /// Per-class table with columns `class,support,precision,recall,f1,auc,aupr`.
    pub fn per_class_table(&self) -> String {
        let mut out = String::from("class,support,precision,recall,f1,auc,aupr\n");
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{},{}",
                m.class,
                m.support,
                m.precision,
                m.recall,
                m.f1,
                fmt_opt(m.auc),
                fmt_opt(m.aupr)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let truth = [0, 1, 2, 2, 1];
        let summary = confusion_metrics(&truth, &truth, 3).unwrap();
        assert_eq!(summary.accuracy, 1.0);
        assert_eq!(summary.macro_prf(|_| true), (1.0, 1.0, 1.0));
    }

    #[test]
    fn two_by_two_tally() {
        let s = confusion_metrics(&[0, 0, 1, 1], &[0, 1, 0, 1], 2).unwrap();
        assert_eq!(s.accuracy, 0.5);
        for m in &s.per_class {
            assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        }
        assert_eq!(s.macro_prf(|_| true).2, 0.5);
    }

    #[test]
    fn absent_class_excluded_from_macro() {
        let s = confusion_metrics(&[0, 1], &[0, 1], 3).unwrap();
        assert_eq!(s.macro_prf(|_| true), (1.0, 1.0, 1.0));
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        let s = confusion_metrics(&[0, 0, 0], &[0, 0, 1], 2).unwrap();
        assert_eq!(s.per_class[1].precision, 0.0);
        assert_eq!(s.per_class[1].f1, 0.0);
    }

    #[test]
    fn confusion_input_errors() {
        assert!(confusion_metrics(&[0], &[0, 1], 2).is_err());
        assert!(confusion_metrics(&[0, 2], &[0, 1], 2).is_err());
        assert!(confusion_metrics(&[], &[], 2).is_err());
    }

    #[test]
    fn auc_conventions() {
        let scores = vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.3, 0.7]];
        let auc = roc_auc_ovr(&scores, &[0, 0, 1]).unwrap();
        assert_eq!(auc.per_class, vec![Some(1.0), Some(1.0)]);
        let flat = vec![vec![0.5, 0.5]; 4];
        let auc = roc_auc_ovr(&flat, &[0, 1, 0, 1]).unwrap();
        assert_eq!(auc.per_class, vec![Some(0.5), Some(0.5)]);
        let auc = roc_auc_ovr(&flat, &[0, 0, 0, 0]).unwrap();
        assert_eq!(auc.per_class, vec![None, None]);
        assert_eq!(auc.macro_avg, None);
    }

    #[test]
    fn aupr_conventions() {
        let scores = vec![vec![0.9, 0.1], vec![0.6, 0.4], vec![0.2, 0.8]];
        let ap = pr_auc_ovr(&scores, &[0, 0, 1]).unwrap();
        assert_eq!(ap.per_class[0], Some(1.0));
        // single positive ranked last among n samples
        let n = 5;
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let s = 0.9 - 0.1 * i as f64;
                vec![s, 1.0 - s]
            })
            .collect();
        let mut truth = vec![1; n];
        truth[n - 1] = 0;
        let ap = pr_auc_ovr(&scores, &truth).unwrap();
        assert!((ap.per_class[0].unwrap() - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn score_validation() {
        assert!(roc_auc_ovr(&[vec![0.5, 0.6]], &[0]).is_err());
        assert!(roc_auc_ovr(&[vec![1.0, 0.0], vec![1.0]], &[0, 0]).is_err());
        assert!(roc_auc_ovr(&[vec![f64::NAN, 1.0]], &[0]).is_err());
        assert!(roc_auc_ovr(&[vec![1.0, 0.0]], &[2]).is_err());
        assert!(pr_auc_ovr(&[], &[]).is_err());
    }

    #[test]
    fn binary_macro_auc_is_two_class_auc() {
        let scores = vec![
            vec![0.2, 0.8],
            vec![0.6, 0.4],
            vec![0.3, 0.7],
            vec![0.9, 0.1],
            vec![0.4, 0.6],
        ];
        let truth = [1, 0, 0, 0, 1];
        let auc = roc_auc_ovr(&scores, &truth).unwrap();
        let pos: Vec<f64> = scores.iter().map(|r| r[1]).collect();
        let labels: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
        let classical = binary_auc(&pos, &labels).unwrap();
        assert!((auc.macro_avg.unwrap() - classical).abs() < 1e-15);
    }

    #[test]
    fn report_serialization() {
        let scores = vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.8, 0.0]];
        let report = evaluate(&scores, &[0, 1]).unwrap();
        let kv = report.to_key_value();
        assert!(kv.starts_with("accuracy=1.000000\n"));
        assert!(kv.contains("macro_auc=1.000000"));
        let table = report.per_class_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "class,support,precision,recall,f1,auc,aupr");
        assert_eq!(lines[3], "2,0,0.000000,0.000000,0.000000,NA,NA");
    }

    #[test]
    fn subset_macro() {
        let scores = vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.7, 0.3]];
        let report = evaluate(&scores, &[0, 0, 1]).unwrap();
        let tail = report.subset(&[false, true]);
        assert_eq!(tail.n_classes, 1);
        assert_eq!((tail.precision, tail.recall, tail.f1), (0.0, 0.0, 0.0));
        let head = report.subset(&[true, false]);
        assert!((head.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(head.recall, 1.0);
    }
}
