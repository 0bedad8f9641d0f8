use serde::Serialize;

use super::{task_pairs, PredictionRecord, Task};
use crate::{Error, Result};

/// `counts[t][p]` = records with true class `t` predicted as `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    /// Builds a matrix from row-major counts.
    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != k * k {
            return Err(Error::contract(format!(
                "{k}x{k} confusion matrix needs {} counts, got {}",
                k * k,
                counts.len()
            )));
        }
        Ok(ConfusionMatrix { k, counts })
    }

    /// Binary matrix with class 1 as the positive class.
    pub fn binary(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix {
            k: 2,
            counts: vec![tn, fp, fn_, tp],
        }
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.k + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    /// Row sum: records whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        (0..self.k).map(|p| self.get(c, p)).sum()
    }

    /// Column sum: records predicted as `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, c)).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.k)
    }
}

pub fn confusion(records: &[PredictionRecord], task: Task) -> Result<ConfusionMatrix> {
    let (k, pairs) = task_pairs(records, task)?;
    let mut cm = ConfusionMatrix::new(k);
    for (t, p) in pairs {
        cm.add(t, p);
    }
    Ok(cm)
}

/// Trace over total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::contract(
            "accuracy of an empty confusion matrix".to_string(),
        ));
    }
    Ok(cm.trace() as f64 / total as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(Averaging::Macro),
            "micro" => Ok(Averaging::Micro),
            _ => Err(Error::Validation(format!(
                "averaging must be macro or micro, got '{s}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassScores {
    pub class: usize,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub scores: Scores,
    /// No predictions of this class: precision set to 0.
    pub precision_undefined: bool,
    /// No true members of this class: recall set to 0.
    pub recall_undefined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrfReport {
    pub per_class: Vec<ClassScores>,
    pub macro_avg: Scores,
    pub micro_avg: Scores,
}

impl PrfReport {
    pub fn averaged(&self, avg: Averaging) -> Scores {
        match avg {
            Averaging::Macro => self.macro_avg,
            Averaging::Micro => self.micro_avg,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn scores(tp: u64, fp: u64, fn_: u64) -> Scores {
    Scores {
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        f1: ratio(2 * tp, 2 * tp + fn_ + fp),
    }
}

/// One-vs-rest precision, recall and F1 per class plus macro and micro averages.
/// Zero denominators yield 0 and are flagged per class.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> PrfReport {
    let k = cm.classes();
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = cm.get(c, c);
            let fp = cm.predicted(c) - tp;
            let fn_ = cm.support(c) - tp;
            ClassScores {
                class: c,
                tp,
                fp,
                fn_,
                scores: scores(tp, fp, fn_),
                precision_undefined: tp + fp == 0,
                recall_undefined: tp + fn_ == 0,
            }
        })
        .collect();
    let mean = |f: fn(&Scores) -> f64| {
        if k == 0 {
            0.0
        } else {
            per_class.iter().map(|c| f(&c.scores)).sum::<f64>() / k as f64
        }
    };
    let macro_avg = Scores {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
    };
    let (tp, fp, fn_) = per_class
        .iter()
        .fold((0, 0, 0), |(a, b, c), s| (a + s.tp, b + s.fp, c + s.fn_));
    PrfReport {
        per_class,
        macro_avg,
        micro_avg: scores(tp, fp, fn_),
    }
}
