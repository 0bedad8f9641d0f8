/// Predicted class by scanning for a strictly larger value.
pub fn first_argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for i in 0..p.len() {
        if p[i] > p[best] {
            best = i;
        }
    }
    best
}

/// `counts[t][p]` by direct tally.
pub fn tally(truth: &[usize], pred: &[usize], k: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; k]; k];
    for t in 0..k {
        for p in 0..k {
            m[t][p] = truth
                .iter()
                .zip(pred)
                .filter(|&(&a, &b)| a == t && b == p)
                .count() as u64;
        }
    }
    m
}

/// Binary one-vs-rest precision, recall, F1 for class `c`, recounted from
/// the label lists. Zero denominators give 0.
pub fn one_vs_rest(truth: &[usize], pred: &[usize], c: usize) -> (f64, f64, f64) {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (&t, &p) in truth.iter().zip(pred) {
        match (t == c, p == c) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
            _ => {}
        }
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    (
        div(tp, tp + fp),
        div(tp, tp + fn_),
        div(2.0 * tp, 2.0 * tp + fp + fn_),
    )
}

/// Share of positive/negative pairs ranked correctly, ties counting half.
pub fn pairwise_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        if !positive[i] {
            continue;
        }
        for j in 0..scores.len() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    if pairs == 0.0 {
        None
    } else {
        Some(wins / pairs)
    }
}
