use crate::error::{Error, Result};

/// Default contrastive temperature.
pub const DEFAULT_TAU: f64 = 0.2;
/// Probability clamp used by [`bce_loss`].
pub const BCE_EPS: f64 = 1e-9;

/// Contrastive loss over a `2N × 2N` overlap matrix whose rows `i` and
/// `N + i` hold an image and its augmented partner.
///
/// `-Σ_{i<N} log( exp(s[i][N+i]/τ) / Σ_{j ∉ {i, N+i}} exp(s[i][j]/τ) )`.
/// Overlaps are clamped to `[0, 1]`; the diagonal is never read.
pub fn contrastive_loss(overlaps: &[Vec<f64>], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Argument(format!("temperature must be positive, got {tau}")));
    }
    let size = overlaps.len();
    if !size.is_multiple_of(2) || overlaps.iter().any(|row| row.len() != size) {
        return Err(Error::Argument(format!(
            "overlap matrix must be square with even size, got {size} rows"
        )));
    }
    let n = size / 2;
    if n < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 base images for a non-empty denominator, got {n}"
        )));
    }
    let s = |i: usize, j: usize| overlaps[i][j].clamp(0.0, 1.0) / tau;
    let mut total = 0.0;
    for i in 0..n {
        let logits: Vec<f64> = (0..size).filter(|&j| j != i && j != n + i).map(|j| s(i, j)).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        total += lse - s(i, n + i);
    }
    if !total.is_finite() {
        return Err(Error::Numeric(format!("contrastive loss is {total}")));
    }
    Ok(total)
}

/// Mean binary cross-entropy of probabilities against 0/1 labels.
pub fn bce_loss(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    let sum: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / scores.len() as f64)
}
