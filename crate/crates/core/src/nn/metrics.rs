//! Classification metrics computed over index masks.

use super::tensor::Tensor2;

/// Fraction of masked rows whose argmax logit equals the label. Ties
/// resolve to the lowest column index.
pub fn accuracy(logits: &Tensor2, labels: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let mut correct = 0usize;
    for &i in mask {
        let row = logits.row(i);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = j;
            }
        }
        if best == labels[i] {
            correct += 1;
        }
    }
    correct as f64 / mask.len() as f64
}

/// Area under the ROC curve for binary labels from a single score column,
/// computed as the normalized Mann-Whitney U statistic. Tied scores count
/// one half. Returns 0.5 when either class is absent from the mask.
pub fn binary_auc(scores: &[f64], labels: &[usize], mask: &[usize]) -> f64 {
    let positives: Vec<f64> = mask
        .iter()
        .filter(|&&i| labels[i] == 1)
        .map(|&i| scores[i])
        .collect();
    let negatives: Vec<f64> = mask
        .iter()
        .filter(|&&i| labels[i] == 0)
        .map(|&i| scores[i])
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return 0.5;
    }
    let mut wins = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (positives.len() as f64 * negatives.len() as f64)
}
