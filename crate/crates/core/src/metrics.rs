//! Confusion matrix, accuracy, positive-class precision/recall/F1 and ROC-AUC.
//!
//! Every ratio with a zero denominator is defined as 0.0.

use std::cmp::Ordering;
use std::fmt;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::tensor::Element;

/// `m[i][j]` counts samples of true class `i` predicted as `j`.
pub fn confusion(labels_true: &[usize], labels_pred: &[usize], classes: usize) -> Result<Vec<Vec<u64>>> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            labels_true.len(),
            labels_pred.len()
        )));
    }
    let mut m = vec![vec![0u64; classes]; classes];
    for (i, (&t, &p)) in labels_true.iter().zip(labels_pred).enumerate() {
        if t >= classes || p >= classes {
            return Err(Error::Argument(format!(
                "sample {i}: label pair ({t}, {p}) outside [0, {classes})"
            )));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn accuracy(confusion: &[Vec<u64>]) -> f64 {
    let total: u64 = confusion.iter().flatten().sum();
    let hits: u64 = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    ratio(hits, total)
}

/// TP / (TP + FN) for class `k`.
pub fn recall(confusion: &[Vec<u64>], k: usize) -> f64 {
    ratio(confusion[k][k], confusion[k].iter().sum())
}

/// TP / (TP + FP) for class `k`.
pub fn precision(confusion: &[Vec<u64>], k: usize) -> f64 {
    ratio(confusion[k][k], confusion.iter().map(|row| row[k]).sum())
}

pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn f1(confusion: &[Vec<u64>], k: usize) -> f64 {
    f1_from(precision(confusion, k), recall(confusion, k))
}

/// Mann-Whitney AUC with midranks for tied scores. `O(N log N)`.
pub fn roc_auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Argument(format!("AUC labels must be 0 or 1, got {bad}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Argument("AUC scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes (got {n_pos} positive, {n_neg} negative)"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]].partial_cmp(&scores[order[i]]) == Some(Ordering::Equal) {
            j += 1;
        }
        // ranks i+1 ..= j share the midrank
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_run = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        pos_rank_sum += midrank * pos_in_run as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Metrics for one model on one labelled set.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub n_samples: usize,
    pub positive_class: usize,
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub f1: Vec<f64>,
    /// Binary problems only, and only when both classes occur.
    pub auc: Option<f64>,
}

impl EvalReport {
    /// Builds a report from class probabilities (`probs[i]` sums to 1) and true labels.
    /// Predictions are row argmaxes, ties going to the lower index.
    pub fn from_probabilities(
        model: impl Into<String>,
        probs: &[Vec<f64>],
        labels: &[usize],
        positive_class: usize,
    ) -> Result<Self> {
        let classes = probs.first().map_or(0, Vec::len);
        if probs.is_empty() {
            return Err(Error::Argument("cannot evaluate an empty set".into()));
        }
        if classes < 2 || probs.iter().any(|r| r.len() != classes) {
            return Err(Error::Shape("probability rows must share a width of at least 2".into()));
        }
        if positive_class >= classes {
            return Err(Error::Argument(format!(
                "positive class {positive_class} outside [0, {classes})"
            )));
        }
        let pred: Vec<usize> = probs
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        let confusion = confusion(labels, &pred, classes)?;
        let auc = if classes == 2 {
            let scores: Vec<f64> = probs.iter().map(|r| r[positive_class]).collect();
            let bin: Vec<usize> = labels.iter().map(|&l| usize::from(l == positive_class)).collect();
            match roc_auc(&scores, &bin) {
                Ok(a) => Some(a),
                Err(Error::UndefinedMetric(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(Self::from_parts(model.into(), confusion, positive_class, auc))
    }

    fn from_parts(model: String, confusion: Vec<Vec<u64>>, positive_class: usize, auc: Option<f64>) -> Self {
        let c = confusion.len();
        Self {
            model,
            n_samples: confusion.iter().flatten().sum::<u64>() as usize,
            positive_class,
            accuracy: accuracy(&confusion),
            recall: (0..c).map(|k| recall(&confusion, k)).collect(),
            precision: (0..c).map(|k| precision(&confusion, k)).collect(),
            f1: (0..c).map(|k| f1(&confusion, k)).collect(),
            confusion,
            auc,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.confusion.len()
    }

    pub fn positive_recall(&self) -> f64 {
        self.recall[self.positive_class]
    }

    pub fn positive_precision(&self) -> f64 {
        self.precision[self.positive_class]
    }

    pub fn positive_f1(&self) -> f64 {
        self.f1[self.positive_class]
    }

    /// Header of [`EvalReport::table_row`].
    pub fn table_header() -> String {
        format!("{:<12} {:>8} {:>8} {:>8} {:>8}", "Model", "ACC", "AUC", "F1", "Recall")
    }

    pub fn table_row(&self) -> String {
        let auc = self.auc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        format!(
            "{:<12} {:>8.4} {:>8} {:>8.4} {:>8.4}",
            self.model,
            self.accuracy,
            auc,
            self.positive_f1(),
            self.positive_recall()
        )
    }

    /// Flat `key=value` lines. Floats use the shortest exact representation,
    /// so [`EvalReport::from_kv`] recovers every value bitwise.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        put("model", self.model.clone());
        put("n_samples", self.n_samples.to_string());
        put("num_classes", self.num_classes().to_string());
        put("positive_class", self.positive_class.to_string());
        put("accuracy", format!("{:?}", self.accuracy));
        put("auc", self.auc.map_or_else(|| "none".into(), |a| format!("{a:?}")));
        put("f1", format!("{:?}", self.positive_f1()));
        put("recall", format!("{:?}", self.positive_recall()));
        put("precision", format!("{:?}", self.positive_precision()));
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            put(&format!("confusion.{i}"), cells.join(","));
        }
        out
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("report line {}: expected key=value", n + 1)))?;
            pairs.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        let get = |k: &str| -> Result<&str> {
            pairs
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Config(format!("report is missing `{k}`")))
        };
        let parse_usize = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Config(format!("bad integer for `{k}`")))
        };
        let c = parse_usize("num_classes")?;
        let mut confusion = Vec::with_capacity(c);
        for i in 0..c {
            let row: std::result::Result<Vec<u64>, _> =
                get(&format!("confusion.{i}"))?.split(',').map(str::parse).collect();
            let row = row.map_err(|_| Error::Config(format!("bad confusion row {i}")))?;
            if row.len() != c {
                return Err(Error::Config(format!(
                    "confusion row {i} has {} cells, expected {c}",
                    row.len()
                )));
            }
            confusion.push(row);
        }
        let auc = match get("auc")? {
            "none" => None,
            v => Some(v.parse().map_err(|_| Error::Config("bad value for `auc`".into()))?),
        };
        let report = Self::from_parts(get("model")?.to_owned(), confusion, parse_usize("positive_class")?, auc);
        if report.n_samples != parse_usize("n_samples")? || report.positive_class >= c.max(1) {
            return Err(Error::Config("report totals are inconsistent".into()));
        }
        Ok(report)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::table_header())?;
        write!(f, "{}", self.table_row())
    }
}

/// Runs `predict_proba` over `data` in batches of `batch_size` and scores it.
pub fn evaluate<T: Element>(model: &Model<T>, data: &Dataset<T>, batch_size: usize) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Argument("cannot evaluate an empty dataset".into()));
    }
    let mut probs = Vec::with_capacity(data.len());
    for batch in data.batches(batch_size, None)? {
        let p = model.predict_proba(&batch.x)?;
        let c = p.shape()[1];
        probs.extend(
            p.data()
                .chunks(c)
                .map(|r| r.iter().map(|v| v.as_f64()).collect::<Vec<_>>()),
        );
    }
    EvalReport::from_probabilities(
        model.config().name.clone(),
        &probs,
        data.labels(),
        data.positive_class(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counts() {
        // TP=3, FP=1, FN=2, TN=4
        let t = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let p = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0];
        let m = confusion(&t, &p, 2).unwrap();
        assert_eq!(m, vec![vec![4, 1], vec![2, 3]]);
        assert_eq!(precision(&m, 1), 0.75);
        assert_eq!(recall(&m, 1), 0.6);
        assert!((f1(&m, 1) - 2.0 * 0.45 / 1.35).abs() < 1e-15);
        assert_eq!(accuracy(&m), 0.7);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let m = confusion(&[0, 0, 0], &[0, 0, 0], 2).unwrap();
        assert_eq!((recall(&m, 1), precision(&m, 1), f1(&m, 1)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn out_of_range_label() {
        assert!(confusion(&[2], &[0], 2).is_err());
    }

    #[test]
    fn auc_edge_cases() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn perfect_report_and_kv_round_trip() {
        let probs = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.3, 0.7]];
        let r = EvalReport::from_probabilities("vgg-mini", &probs, &[0, 1, 1], 1).unwrap();
        assert_eq!(
            (r.accuracy, r.auc, r.positive_f1(), r.positive_recall()),
            (1.0, Some(1.0), 1.0, 1.0)
        );
        assert_eq!(EvalReport::from_kv(&r.to_kv()).unwrap(), r);
        assert!(r.table_row().contains("1.0000"));
    }

    #[test]
    fn degenerate_predictor() {
        let probs = vec![vec![0.5, 0.5]; 4];
        let r = EvalReport::from_probabilities("zero", &probs, &[0, 1, 0, 1], 1).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.auc, Some(0.5));
        assert_eq!(r.confusion, vec![vec![2, 0], vec![2, 0]]);
    }
}
