//! Accuracy, encoder pair accuracy, ROC analysis and trial aggregation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::ContrastiveSet;
use crate::error::{Error, Result};
use crate::params::ParameterSet;
use crate::training::{Measurement, OverlapEvaluator, Regime};

/// Threshold below which no score can fall; classifies everything positive.
pub const ALL_POSITIVE_THRESHOLD: f64 = -1.0;

/// Outcome of one draw–train–test cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub regime: Regime,
    pub n_train: usize,
    pub trial: usize,
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

/// Fraction of examples where `(score > threshold)` agrees with the label.
pub fn accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Argument("accuracy of an empty set".into()));
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s > threshold) == (y == 1))
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAccuracy {
    pub positive: f64,
    pub negative: f64,
    /// Pooled over every pair, not the mean of the two rates.
    pub overall: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

/// Pair accuracy from a precomputed overlap matrix over `set.images()`.
/// Positive pairs count as correct above `threshold`, negatives below it.
pub fn pair_accuracy_from_matrix(set: &ContrastiveSet, overlaps: &[Vec<f64>], threshold: f64) -> PairAccuracy {
    let (mut pos, mut pos_ok, mut neg, mut neg_ok) = (0usize, 0usize, 0usize, 0usize);
    for (i, j) in set.pairs() {
        let s = overlaps[i][j];
        if set.is_positive_pair(i, j) {
            pos += 1;
            pos_ok += usize::from(s > threshold);
        } else {
            neg += 1;
            neg_ok += usize::from(s < threshold);
        }
    }
    let rate = |ok: usize, n: usize| if n == 0 { 0.0 } else { ok as f64 / n as f64 };
    PairAccuracy {
        positive: rate(pos_ok, pos),
        negative: rate(neg_ok, neg),
        overall: rate(pos_ok + neg_ok, pos + neg),
        n_positive: pos,
        n_negative: neg,
    }
}

/// Evaluates every overlap circuit of `set` under `params` and scores the
/// pairs at `threshold`.
pub fn pairwise_encoder_accuracy<R: Rng + ?Sized>(
    params: &ParameterSet,
    set: &ContrastiveSet,
    threshold: f64,
    measurement: Measurement,
    rng: &mut R,
) -> Result<PairAccuracy> {
    let m = OverlapEvaluator::new(&set.images()).matrix(params, measurement, rng)?;
    Ok(pair_accuracy_from_matrix(set, &m, threshold))
}

/// ROC curve over the "score > threshold" decision rule.
///
/// Thresholds ascend: the first is [`ALL_POSITIVE_THRESHOLD`], the rest are
/// the distinct scores. TPR and FPR are therefore non-increasing along the
/// list, ending at (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auc: f64,
    pub youden_threshold: f64,
    pub youden_index: f64,
}

pub fn roc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Argument("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Argument("ROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut thresholds = vec![ALL_POSITIVE_THRESHOLD];
    let mut tpr = vec![1.0];
    let mut fpr = vec![1.0];
    // Walk scores upward; after consuming every example with score <= t the
    // remaining ones are the predicted positives at threshold t.
    let (mut tp, mut fp) = (n_pos, n_neg);
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] == 1 {
                tp -= 1;
            } else {
                fp -= 1;
            }
            k += 1;
        }
        thresholds.push(t);
        tpr.push(tp as f64 / n_pos as f64);
        fpr.push(fp as f64 / n_neg as f64);
    }
    let auc = fpr
        .windows(2)
        .zip(tpr.windows(2))
        .map(|(f, t)| (f[0] - f[1]) * (t[0] + t[1]) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    let (mut best, mut best_j) = (0, f64::NEG_INFINITY);
    for i in 0..thresholds.len() {
        let j = tpr[i] - fpr[i];
        if j > best_j + 1e-15 {
            best = i;
            best_j = j;
        }
    }
    Ok(RocCurve {
        youden_threshold: thresholds[best],
        youden_index: best_j,
        thresholds,
        tpr,
        fpr,
        auc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and sample standard deviation (`n - 1`); a single value has std 0.
pub fn mean_std(values: &[f64]) -> Result<GroupStats> {
    if values.is_empty() {
        return Err(Error::Argument("statistics of an empty group".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(GroupStats { n, mean, std })
}

/// Test-accuracy statistics per `(regime, N_L)`.
pub fn aggregate(trials: &[TrialResult]) -> Result<BTreeMap<(Regime, usize), GroupStats>> {
    let mut groups: BTreeMap<(Regime, usize), Vec<f64>> = BTreeMap::new();
    for t in trials {
        groups.entry((t.regime, t.n_train)).or_default().push(t.test_accuracy);
    }
    groups
        .into_iter()
        .map(|(key, values)| Ok((key, mean_std(&values)?)))
        .collect()
}

/// ROC over the pooled per-example scores of each `(regime, N_L)` group.
pub fn pooled_roc(trials: &[TrialResult]) -> Result<BTreeMap<(Regime, usize), RocCurve>> {
    let mut pooled: BTreeMap<(Regime, usize), (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for t in trials {
        let entry = pooled.entry((t.regime, t.n_train)).or_default();
        entry.0.extend_from_slice(&t.scores);
        entry.1.extend_from_slice(&t.labels);
    }
    pooled
        .into_iter()
        .map(|(key, (s, l))| Ok((key, roc(&s, &l)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_perturbed, make_contrastive_set};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn accuracy_basics() {
        let scores = [0.9, 0.2, 0.7, 0.1];
        let labels = [1, 0, 1, 0];
        assert_eq!(accuracy(&scores, &labels, 0.5).unwrap(), 1.0);
        let flipped = labels.map(|y| 1 - y);
        assert_eq!(accuracy(&scores, &flipped, 0.5).unwrap(), 0.0);
        assert!(accuracy(&[], &[], 0.5).is_err());
        assert!(accuracy(&[0.1], &[], 0.5).is_err());
    }

    #[test]
    fn accuracy_matches_brute_force() {
        let mut rng = crate::seed::rng(1);
        let scores: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let labels: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
        let mut correct = 0;
        for i in 0..200 {
            let pred = if scores[i] > 0.37 { 1 } else { 0 };
            if pred == labels[i] {
                correct += 1;
            }
        }
        assert_eq!(accuracy(&scores, &labels, 0.37).unwrap(), correct as f64 / 200.0);
    }

    #[test]
    fn roc_reference_cases() {
        let r = roc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.youden_threshold, 0.2);
        assert_eq!(r.youden_index, 1.0);
        let r = roc(&[0.4; 6], &[0, 1, 0, 1, 1, 0]).unwrap();
        assert!((r.auc - 0.5).abs() < 1e-12);
        assert!(roc(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn roc_auc_matches_pairwise_count() {
        let mut rng = crate::seed::rng(12);
        let scores: Vec<f64> = (0..60).map(|_| (rng.random_range(0..20) as f64) / 20.0).collect();
        let labels: Vec<u8> = (0..60).map(|i| (i % 3 == 0) as u8).collect();
        // Mann–Whitney: P(pos > neg) + 0.5 P(tie).
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..60 {
            for j in 0..60 {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((roc(&scores, &labels).unwrap().auc - num / den).abs() < 1e-12);
    }

    #[test]
    fn youden_ties_pick_lowest_threshold() {
        // Thresholds 0.2 and 0.3 both separate perfectly.
        let r = roc(&[0.1, 0.2, 0.4, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.youden_threshold, 0.2);
    }

    #[test]
    fn mean_std_cases() {
        assert_eq!(mean_std(&[0.7]).unwrap().std, 0.0);
        assert_eq!(mean_std(&[0.5, 0.5, 0.5]).unwrap().std, 0.0);
        let s = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perfect_pair_scores() {
        let imgs = generate_perturbed(&mut crate::seed::rng(3), 4).unwrap();
        let set = make_contrastive_set(&imgs).unwrap();
        let n = 8;
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j || set.is_positive_pair(i, j) { 1.0 } else { 0.0 }).collect())
            .collect();
        let acc = pair_accuracy_from_matrix(&set, &m, 0.5);
        assert_eq!((acc.positive, acc.negative, acc.overall), (1.0, 1.0, 1.0));
        assert_eq!((acc.n_positive, acc.n_negative), (4, 24));
    }

    #[test]
    fn aggregate_groups() {
        let t = |regime, n_train, acc| TrialResult {
            regime,
            n_train,
            trial: 0,
            seed: 0,
            train_accuracy: 1.0,
            test_accuracy: acc,
            scores: vec![],
            labels: vec![],
        };
        let trials = [
            t(Regime::Random, 4, 0.5),
            t(Regime::Random, 4, 0.7),
            t(Regime::Pretrained, 4, 0.8),
        ];
        let g = aggregate(&trials).unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[&(Regime::Random, 4)].mean - 0.6).abs() < 1e-12);
        assert_eq!(g[&(Regime::Pretrained, 4)].std, 0.0);
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_transform(
            raw in proptest::collection::vec((0.0f64..1.0, 0u8..2), 4..60)
        ) {
            let scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
            let mut labels: Vec<u8> = raw.iter().map(|r| r.1).collect();
            labels[0] = 0;
            labels[1] = 1;
            let a = roc(&scores, &labels).unwrap();
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() / 30.0).collect();
            let b = roc(&warped, &labels).unwrap();
            prop_assert!((a.auc - b.auc).abs() < 1e-12);
            prop_assert!(a.tpr.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(a.fpr.windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn youden_accuracy_dominates_half_on_balanced_sets(
            pos in proptest::collection::vec(0.0f64..1.0, 10),
            neg in proptest::collection::vec(0.0f64..1.0, 10),
        ) {
            let scores: Vec<f64> = pos.iter().chain(&neg).copied().collect();
            let labels: Vec<u8> = (0..20).map(|i| (i < 10) as u8).collect();
            let r = roc(&scores, &labels).unwrap();
            let at_youden = accuracy(&scores, &labels, r.youden_threshold).unwrap();
            let at_half = accuracy(&scores, &labels, 0.5).unwrap();
            prop_assert!(at_youden >= at_half - 1e-12);
        }

        #[test]
        fn aggregate_mean_is_permutation_invariant(mut values in proptest::collection::vec(0.0f64..1.0, 1..30)) {
            let a = mean_std(&values).unwrap();
            values.reverse();
            let b = mean_std(&values).unwrap();
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
            prop_assert!((a.std - b.std).abs() < 1e-12);
        }
    }
}
