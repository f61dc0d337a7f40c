//! Binary classification metrics, ROC and precision-recall curves.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Counts predictions with `p >= threshold` as positive.
pub fn confusion(probabilities: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionCounts> {
    if probabilities.is_empty() {
        return Err(Error::Empty("probabilities"));
    }
    if probabilities.len() != labels.len() {
        return Err(Error::invalid("probability and label vectors differ in length"));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &y) in probabilities.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Names of the sixteen reported metrics, in serialization order.
pub const METRIC_NAMES: [&str; 16] = [
    "tp",
    "tn",
    "fp",
    "fn",
    "accuracy",
    "balanced_accuracy",
    "f1",
    "sensitivity",
    "specificity",
    "precision",
    "roc_auc",
    "prc_auc",
    "aps",
    "npv",
    "lr_plus",
    "lr_minus",
];

/// JSON has no infinity: non-finite values are written as `"inf"`,
/// `"-inf"` or `"nan"`.
pub mod nonfinite {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_str("nan")
        } else if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    struct F64Visitor;

    impl Visitor<'_> for F64Visitor {
        type Value = f64;

        fn expecting(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
            f.write_str("a number, \"inf\", \"-inf\" or \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(F64Visitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub roc_auc: f64,
    pub prc_auc: f64,
    pub aps: f64,
    pub npv: f64,
    #[serde(with = "nonfinite")]
    pub lr_plus: f64,
    #[serde(with = "nonfinite")]
    pub lr_minus: f64,
    /// Metrics whose defining ratio was 0/0; their value is 0.
    pub undefined: Vec<String>,
    /// Likelihood ratios with a zero denominator; their value is `+inf`.
    pub infinite: Vec<String>,
}

impl MetricSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "tp" => self.tp,
            "tn" => self.tn,
            "fp" => self.fp,
            "fn" => self.fn_,
            "accuracy" => self.accuracy,
            "balanced_accuracy" => self.balanced_accuracy,
            "f1" => self.f1,
            "sensitivity" => self.sensitivity,
            "specificity" => self.specificity,
            "precision" => self.precision,
            "roc_auc" => self.roc_auc,
            "prc_auc" => self.prc_auc,
            "aps" => self.aps,
            "npv" => self.npv,
            "lr_plus" => self.lr_plus,
            "lr_minus" => self.lr_minus,
            _ => return None,
        })
    }

    pub fn values(&self) -> [f64; 16] {
        METRIC_NAMES.map(|n| self.get(n).expect("known metric"))
    }
}

fn ratio(num: f64, den: f64, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        undefined.push(name.into());
        0.0
    } else {
        num / den
    }
}

/// Computes all sixteen metrics. Curve-based metrics are 0 and flagged
/// undefined when only one class is present.
pub fn metric_set(counts: &ConfusionCounts, probabilities: &[f64], labels: &[u8]) -> Result<MetricSet> {
    if counts.total() as usize != labels.len() || probabilities.len() != labels.len() {
        return Err(Error::invalid("confusion counts are inconsistent with the inputs"));
    }
    let (tp, tn, fp, fn_) = (counts.tp as f64, counts.tn as f64, counts.fp as f64, counts.fn_ as f64);
    let mut undefined = Vec::new();
    let mut infinite = Vec::new();
    let total = tp + tn + fp + fn_;
    let accuracy = ratio(tp + tn, total, "accuracy", &mut undefined);
    let sensitivity = ratio(tp, tp + fn_, "sensitivity", &mut undefined);
    let specificity = ratio(tn, tn + fp, "specificity", &mut undefined);
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let npv = ratio(tn, tn + fn_, "npv", &mut undefined);
    let f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn_, "f1", &mut undefined);
    let balanced_accuracy = (sensitivity + specificity) / 2.0;

    let lr_plus = if 1.0 - specificity == 0.0 {
        if sensitivity == 0.0 {
            undefined.push("lr_plus".into());
            0.0
        } else {
            infinite.push("lr_plus".into());
            f64::INFINITY
        }
    } else {
        sensitivity / (1.0 - specificity)
    };
    let lr_minus = if specificity == 0.0 {
        if 1.0 - sensitivity == 0.0 {
            undefined.push("lr_minus".into());
            0.0
        } else {
            infinite.push("lr_minus".into());
            f64::INFINITY
        }
    } else {
        (1.0 - sensitivity) / specificity
    };

    let (roc_auc, prc_auc, aps) = match (roc_curve(probabilities, labels), prc_curve(probabilities, labels)) {
        (Ok(roc), Ok(prc)) => (roc.auc, prc.auc, average_precision(&prc)),
        _ => {
            for n in ["roc_auc", "prc_auc", "aps"] {
                undefined.push(n.into());
            }
            (0.0, 0.0, 0.0)
        }
    };

    Ok(MetricSet {
        tp,
        tn,
        fp,
        fn_,
        accuracy,
        balanced_accuracy,
        f1,
        sensitivity,
        specificity,
        precision,
        roc_auc,
        prc_auc,
        aps,
        npv,
        lr_plus,
        lr_minus,
        undefined,
        infinite,
    })
}

/// Confusion counts at 0.5 followed by the full metric set.
pub fn evaluate(probabilities: &[f64], labels: &[u8]) -> Result<MetricSet> {
    let c = confusion(probabilities, labels, 0.5)?;
    metric_set(&c, probabilities, labels)
}

pub fn balanced_accuracy(probabilities: &[f64], labels: &[u8]) -> Result<f64> {
    let c = confusion(probabilities, labels, 0.5)?;
    let sens = if c.tp + c.fn_ == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
    let spec = if c.tn + c.fp == 0 { 0.0 } else { c.tn as f64 / (c.tn + c.fp) as f64 };
    Ok((sens + spec) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Roc,
    Prc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub kind: CurveKind,
    /// ROC: (false positive rate, true positive rate).
    /// PRC: (recall, precision).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    /// ROC: 0.5 (the diagonal). PRC: positive class fraction.
    pub no_skill: f64,
}

/// Cumulative (tp, fp) after each distinct threshold, thresholds descending.
fn threshold_steps(probabilities: &[f64], labels: &[u8]) -> Result<(Vec<(u64, u64)>, u64, u64)> {
    if probabilities.len() != labels.len() {
        return Err(Error::invalid("probability and label vectors differ in length"));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]));
    let mut steps = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let t = probabilities[order[i]];
        while i < order.len() && probabilities[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        steps.push((tp, fp));
    }
    Ok((steps, pos, neg))
}

/// ROC curve over unique thresholds; the area uses the trapezoid rule, which
/// gives tied scores half credit. The area is accumulated in integer counts so
/// it equals the pairwise (Mann-Whitney) definition exactly.
pub fn roc_curve(probabilities: &[f64], labels: &[u8]) -> Result<Curve> {
    let (steps, pos, neg) = threshold_steps(probabilities, labels)?;
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push((0.0, 0.0));
    let (mut prev_tp, mut prev_fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    for &(tp, fp) in &steps {
        twice_area += u128::from(fp - prev_fp) * u128::from(tp + prev_tp);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        prev_tp = tp;
        prev_fp = fp;
    }
    let auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(Curve { kind: CurveKind::Roc, points, auc, no_skill: 0.5 })
}

/// Precision-recall curve starting at (0, 1). The area is a right-endpoint
/// step integral over recall increments (no interpolation between points).
pub fn prc_curve(probabilities: &[f64], labels: &[u8]) -> Result<Curve> {
    let (steps, pos, _) = threshold_steps(probabilities, labels)?;
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push((0.0, 1.0));
    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    for &(tp, fp) in &steps {
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        auc += (recall - prev_recall) * precision;
        points.push((recall, precision));
        prev_recall = recall;
    }
    Ok(Curve {
        kind: CurveKind::Prc,
        points,
        auc,
        no_skill: pos as f64 / labels.len() as f64,
    })
}

/// `Σ (R_k - R_{k-1}) · P_k` over the curve's threshold points.
pub fn average_precision(prc: &Curve) -> f64 {
    prc.points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * w[1].1)
        .sum()
}
