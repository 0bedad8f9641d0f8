//! Classification metrics for DR / DME grading.
//!
//! Predicted classes are the argmax of each probability vector, with ties
//! going to the lowest class index.

mod auc;
mod confusion;
mod io;
mod report;

pub use auc::{auc_ovr_macro, binary_auc, AucSummary};
pub use confusion::{
    accuracy, confusion, precision_recall_f1, Averaging, ClassScores, ConfusionMatrix, PrfReport,
    Scores,
};
pub use io::{load_predictions, parse_predictions};
pub use report::{report, report_with, MetricsReport, TaskMetrics};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Dr,
    Dme,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Dr => "DR",
            Task::Dme => "DME",
        })
    }
}

/// True labels and predicted class distributions for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub true_dr: usize,
    pub prob_dr: Vec<f64>,
    pub true_dme: Option<usize>,
    pub prob_dme: Option<Vec<f64>>,
}

fn check_distribution(id: &str, what: &str, label: usize, probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::Validation(format!(
            "{id}: {what} needs at least 2 class probabilities"
        )));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Validation(format!(
            "{id}: {what} probabilities must be finite and non-negative"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::Validation(format!(
            "{id}: {what} probabilities sum to {sum}, not 1"
        )));
    }
    if label >= probs.len() {
        return Err(Error::Validation(format!(
            "{id}: {what} label {label} outside 0..{}",
            probs.len()
        )));
    }
    Ok(())
}

impl PredictionRecord {
    pub fn new(
        id: impl Into<String>,
        true_dr: usize,
        prob_dr: Vec<f64>,
        dme: Option<(usize, Vec<f64>)>,
    ) -> Result<Self> {
        let id = id.into();
        check_distribution(&id, "DR", true_dr, &prob_dr)?;
        let (true_dme, prob_dme) = match dme {
            Some((label, probs)) => {
                check_distribution(&id, "DME", label, &probs)?;
                (Some(label), Some(probs))
            }
            None => (None, None),
        };
        Ok(PredictionRecord {
            id,
            true_dr,
            prob_dr,
            true_dme,
            prob_dme,
        })
    }

    /// `(true label, probabilities)` for a task, if present.
    pub fn task(&self, task: Task) -> Option<(usize, &[f64])> {
        match task {
            Task::Dr => Some((self.true_dr, &self.prob_dr)),
            Task::Dme => self.true_dme.zip(self.prob_dme.as_deref()),
        }
    }

    pub fn predicted(&self, task: Task) -> Option<usize> {
        self.task(task).map(|(_, p)| argmax(p))
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Class count and `(true, predicted)` pairs for a task.
pub(crate) fn task_pairs(
    records: &[PredictionRecord],
    task: Task,
) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut k = None;
    let mut pairs = Vec::with_capacity(records.len());
    for r in records {
        let (label, probs) = r.task(task).ok_or_else(|| {
            Error::contract(format!("record '{}' has no {task} prediction", r.id))
        })?;
        match k {
            None => k = Some(probs.len()),
            Some(k) if k != probs.len() => {
                return Err(Error::contract(format!(
                    "record '{}' has {} {task} classes, expected {k}",
                    r.id,
                    probs.len()
                )))
            }
            _ => {}
        }
        pairs.push((label, argmax(probs)));
    }
    let k = k.ok_or_else(|| Error::contract("no records".to_string()))?;
    Ok((k, pairs))
}

/// Share of records whose DR and DME predictions are both right.
pub fn joint_accuracy(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::contract(
            "joint accuracy of an empty set".to_string(),
        ));
    }
    let mut hits = 0usize;
    for r in records {
        let (dme_true, dme_prob) = r
            .task(Task::Dme)
            .ok_or_else(|| Error::contract(format!("record '{}' has no DME prediction", r.id)))?;
        if argmax(&r.prob_dr) == r.true_dr && argmax(dme_prob) == dme_true {
            hits += 1;
        }
    }
    Ok(hits as f64 / records.len() as f64)
}
