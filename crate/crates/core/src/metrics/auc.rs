use serde::Serialize;

use super::{PredictionRecord, Task};
use crate::{Error, Result};

/// Mann-Whitney AUC of `scores` for the `positive` flags, ties at midrank.
///
/// Returns `None` when either class is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of 1-based ranks of the positives, with tied runs sharing their mean rank.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_run = order[i..j].iter().filter(|&&o| positive[o]).count();
        rank_sum += midrank * pos_in_run as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AucSummary {
    pub macro_auc: f64,
    /// `None` for classes with no positive or no negative records.
    pub per_class: Vec<Option<f64>>,
    pub skipped: Vec<usize>,
}

/// One-vs-rest AUC per class, macro-averaged over classes with both
/// positives and negatives.
pub fn auc_ovr_macro(records: &[PredictionRecord], task: Task) -> Result<AucSummary> {
    let mut k = None;
    let mut labels = Vec::with_capacity(records.len());
    let mut probs = Vec::with_capacity(records.len());
    for r in records {
        let (t, p) = r.task(task).ok_or_else(|| {
            Error::contract(format!("record '{}' has no {task} prediction", r.id))
        })?;
        if *k.get_or_insert(p.len()) != p.len() {
            return Err(Error::contract(format!(
                "record '{}' has a mismatched class count",
                r.id
            )));
        }
        labels.push(t);
        probs.push(p);
    }
    let k = k.unwrap_or(0);
    let mut present = vec![false; k];
    for &t in &labels {
        present[t] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "{task} AUC needs at least two distinct true classes"
        )));
    }

    let mut per_class = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    for c in 0..k {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let positive: Vec<bool> = labels.iter().map(|&t| t == c).collect();
        let auc = binary_auc(&scores, &positive);
        if auc.is_none() {
            skipped.push(c);
        }
        per_class.push(auc);
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    Ok(AucSummary {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        per_class,
        skipped,
    })
}
