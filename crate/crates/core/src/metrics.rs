//! Enrichment and classification metrics for ranked screening libraries.
//!
//! EF@x% ratios the active rate in the top window against the library rate.
//! BEDROC is the min-max normalized robust initial enhancement (RIE), the
//! exponentially rank-weighted early-recognition score; RIE here is the
//! observed exponential sum over active ranks divided by its random
//! expectation, so a perfect ranking hits the RIE_max limit exactly and
//! BEDROC(perfect) = 1. ROC-AUC is the Mann-Whitney statistic with ties
//! counted one half.

use crate::error::{Error, Result};
use crate::num::Real;

/// A ranking of (part of) a library, best first, against full-library
/// counts. `n_total`/`n_actives` are the original library size and active
/// count including any filtered-out ligands, so enrichment windows stay
/// comparable across filtering schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedLibrary<F: Real> {
    labels: Vec<bool>,
    scores: Option<Vec<F>>,
    n_total: usize,
    n_actives: usize,
}

impl<F: Real> RankedLibrary<F> {
    /// Complete ranking: every library ligand appears.
    pub fn full(labels: Vec<bool>) -> Result<Self> {
        let n_actives = labels.iter().filter(|&&a| a).count();
        let n_total = labels.len();
        Self::filtered(labels, n_total, n_actives)
    }

    /// Complete ranking carrying the ranking scores (for AUC and
    /// score-threshold policies).
    pub fn full_scored(labels: Vec<bool>, scores: Vec<F>) -> Result<Self> {
        let mut lib = Self::full(labels)?;
        lib.attach_scores(scores)?;
        Ok(lib)
    }

    /// Partial (filtered) ranking against the full library's counts.
    pub fn filtered(labels: Vec<bool>, n_total: usize, n_actives: usize) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::Argument("empty library".to_string()));
        }
        if labels.len() > n_total {
            return Err(Error::Argument(format!(
                "{} retained ligands exceed library size {n_total}",
                labels.len()
            )));
        }
        let retained_actives = labels.iter().filter(|&&a| a).count();
        if retained_actives > n_actives || n_actives > n_total {
            return Err(Error::Argument("inconsistent active counts".to_string()));
        }
        Ok(Self {
            labels,
            scores: None,
            n_total,
            n_actives,
        })
    }

    pub fn filtered_scored(
        labels: Vec<bool>,
        scores: Vec<F>,
        n_total: usize,
        n_actives: usize,
    ) -> Result<Self> {
        let mut lib = Self::filtered(labels, n_total, n_actives)?;
        lib.attach_scores(scores)?;
        Ok(lib)
    }

    fn attach_scores(&mut self, scores: Vec<F>) -> Result<()> {
        if scores.len() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} scores for {} ranked ligands",
                scores.len(),
                self.labels.len()
            )));
        }
        self.scores = Some(scores);
        Ok(())
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn scores(&self) -> Option<&[F]> {
        self.scores.as_deref()
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_actives(&self) -> usize {
        self.n_actives
    }

    pub fn retained_count(&self) -> usize {
        self.labels.len()
    }

    /// Whether every library ligand is ranked (nothing filtered out).
    pub fn is_complete(&self) -> bool {
        self.labels.len() == self.n_total
    }

    pub fn actives_remaining_pct(&self) -> F {
        if self.n_actives == 0 {
            return F::zero();
        }
        let retained = self.labels.iter().filter(|&&a| a).count();
        F::from_f64_lossy(100.0) * F::from_count(retained) / F::from_count(self.n_actives)
    }
}

/// Window size for a percentage of the library: floor(N * x / 100), at
/// least 1.
fn window_size(n_total: usize, x_pct: f64) -> usize {
    ((n_total as f64 * x_pct / 100.0).floor() as usize).max(1)
}

/// EF@x% = (actives in the top window / window size) / (n / N). The
/// denominator always uses the full window size, so a ranking with fewer
/// retained ligands than the window is penalized and an empty one scores 0.
pub fn enrichment_factor<F: Real>(lib: &RankedLibrary<F>, x_pct: F) -> Result<F> {
    let x = x_pct.to_f64().unwrap_or(f64::NAN);
    if !(x > 0.0 && x <= 100.0) {
        return Err(Error::Argument(format!("EF percentage must be in (0, 100], got {x}")));
    }
    if lib.n_actives() == 0 {
        return Err(Error::UndefinedMetric("EF needs at least one active".to_string()));
    }
    let w = window_size(lib.n_total(), x);
    let inspected = w.min(lib.retained_count());
    let hits = lib.labels[..inspected].iter().filter(|&&a| a).count();
    // (hits / w) / (n / N) as one exact integer ratio
    let num = (hits * lib.n_total()) as f64;
    let den = (w * lib.n_actives()) as f64;
    Ok(F::from_f64_lossy(num / den))
}

/// BEDROC(alpha) on a complete ranking. RIE normalizes the observed
/// exponential sum by its random expectation
/// `(n/N) * (1 - e^-a) / (e^(a/N) - 1)`; the min/max limits use
/// `RIE_max = (1 - e^(-a*Ra)) / (Ra * (1 - e^-a))` and the mirrored
/// expression for RIE_min, with Ra = n/N. Result clamped to [0, 1].
pub fn bedroc<F: Real>(lib: &RankedLibrary<F>, alpha: F) -> Result<F> {
    if alpha <= F::zero() {
        return Err(Error::Argument(format!("BEDROC alpha must be positive, got {alpha}")));
    }
    if lib.n_actives() == 0 {
        return Err(Error::UndefinedMetric("BEDROC needs at least one active".to_string()));
    }
    if !lib.is_complete() {
        return Err(Error::UnsupportedInput(
            "BEDROC requires a complete (unfiltered) ranking".to_string(),
        ));
    }
    let n_total = F::from_count(lib.n_total());
    let r_a = F::from_count(lib.n_actives()) / n_total;

    let mut sum = F::zero();
    for (idx, &active) in lib.labels.iter().enumerate() {
        if active {
            let x_i = F::from_count(idx + 1) / n_total;
            sum = sum + (-alpha * x_i).exp();
        }
    }
    // random expectation of the sum: (n/N) * (1 - e^-a) / (e^(a/N) - 1)
    let random_sum = r_a * (-((-alpha).exp_m1())) / (alpha / n_total).exp_m1();
    let rie = sum / random_sum;
    let rie_min = (alpha * r_a).exp_m1() / (r_a * alpha.exp_m1());
    let rie_max = (-alpha * r_a).exp_m1() / (r_a * (-alpha).exp_m1());
    let value = (rie - rie_min) / (rie_max - rie_min);
    Ok(value.max(F::zero()).min(F::one()))
}

/// ROC-AUC via the Mann-Whitney statistic on tie-averaged ranks: the
/// probability a random active outscores a random inactive, ties counted
/// one half.
pub fn roc_auc<F: Real>(scores: &[F], labels: &[bool]) -> Result<F> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&a| a).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC needs at least one active and one inactive".to_string(),
        ));
    }
    let mut order: Vec<(f64, bool)> = Vec::with_capacity(scores.len());
    for (&s, &l) in scores.iter().zip(labels) {
        let v = s.to_f64().unwrap_or(f64::NAN);
        if !v.is_finite() {
            return Err(Error::Argument("ROC-AUC scores must be finite".to_string()));
        }
        order.push((v, l));
    }
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // tie-averaged 1-based ranks, ascending by score
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].0 == order[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for item in &order[i..=j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(F::from_f64_lossy(u / (n_pos as f64 * n_neg as f64)))
}

/// How predicted positives are chosen for the confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy<F: Real> {
    /// Predicted positive = the top max(1, floor(N/100)) ranked ligands.
    Top1Percent,
    /// Predicted positive = retained ligands scoring at or above the value.
    ScoreThreshold(F),
}

impl<F: Real> std::fmt::Display for ThresholdPolicy<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdPolicy::Top1Percent => write!(f, "top1pct"),
            ThresholdPolicy::ScoreThreshold(t) => write!(f, "threshold={t}"),
        }
    }
}

/// Confusion-matrix metrics over the full library; filtered-out ligands
/// count as predicted negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMetrics<F: Real> {
    pub accuracy: F,
    pub precision: F,
    pub recall: F,
    pub specificity: F,
    pub f1: F,
    pub balanced_accuracy: F,
    pub mcc: F,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
    pub policy: String,
}

fn metrics_from_counts<F: Real>(
    tp: usize,
    fp: usize,
    n_total: usize,
    n_actives: usize,
    policy: String,
) -> ClassicalMetrics<F> {
    let fn_ = n_actives - tp;
    let tn = n_total - n_actives - fp;
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            F::zero()
        } else {
            F::from_count(num) / F::from_count(den)
        }
    };
    let accuracy = ratio(tp + tn, n_total);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, n_actives);
    let specificity = ratio(tn, tn + fp);
    let two = F::from_f64_lossy(2.0);
    let f1 = if precision + recall == F::zero() {
        F::zero()
    } else {
        two * precision * recall / (precision + recall)
    };
    let balanced_accuracy = (recall + specificity) / two;
    let marginals = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    let mcc = if marginals.contains(&0) {
        F::zero()
    } else {
        let num = (tp as f64) * (tn as f64) - (fp as f64) * (fn_ as f64);
        let den = marginals.iter().map(|&m| m as f64).product::<f64>().sqrt();
        F::from_f64_lossy(num / den)
    };
    ClassicalMetrics {
        accuracy,
        precision,
        recall,
        specificity,
        f1,
        balanced_accuracy,
        mcc,
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fn_,
        policy,
    }
}

/// Classical accuracy metrics for a ranking under a threshold policy. The
/// confusion matrix spans the full library: ligands the filter removed are
/// predicted negative.
pub fn classical_metrics<F: Real>(
    lib: &RankedLibrary<F>,
    policy: ThresholdPolicy<F>,
) -> Result<ClassicalMetrics<F>> {
    let n = lib.n_actives();
    if n == 0 || n == lib.n_total() {
        return Err(Error::UndefinedMetric(
            "classical metrics need both classes present".to_string(),
        ));
    }
    let (tp, fp) = match policy {
        ThresholdPolicy::Top1Percent => {
            let w = window_size(lib.n_total(), 1.0);
            let prefix = w.min(lib.retained_count());
            let tp = lib.labels[..prefix].iter().filter(|&&a| a).count();
            (tp, prefix - tp)
        }
        ThresholdPolicy::ScoreThreshold(t) => {
            let scores = lib.scores().ok_or_else(|| {
                Error::UnsupportedInput("score-threshold policy needs ranking scores".to_string())
            })?;
            let mut tp = 0;
            let mut fp = 0;
            for (&s, &a) in scores.iter().zip(lib.labels()) {
                if s >= t {
                    if a {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            (tp, fp)
        }
    };
    Ok(metrics_from_counts(tp, fp, lib.n_total(), n, policy.to_string()))
}

/// EF1%, EF10%, BEDROC(alpha), ROC-AUC, classical metrics, and actives
/// remaining for one ranking on one target. BEDROC and ROC-AUC are `None`
/// where the ranking does not support them (incomplete ranking, or AUC
/// suppressed for filtered schemes).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<F: Real> {
    pub target_id: String,
    pub pathway: String,
    pub scheme: String,
    pub ef1: F,
    pub ef10: F,
    pub bedroc: Option<F>,
    pub alpha: F,
    pub roc_auc: Option<F>,
    pub actives_remaining_pct: F,
    pub classical: ClassicalMetrics<F>,
}

/// Build the report for one ranking. `with_auc` gates ROC-AUC emission
/// (filtered consensus schemes report EF/actives-remaining/classical only);
/// BEDROC is computed whenever the ranking is complete. The two EF columns
/// default to 1% and 10% but the windows are configurable.
#[allow(clippy::too_many_arguments)]
pub fn compute_report_at<F: Real>(
    target_id: &str,
    pathway: &str,
    scheme: &str,
    lib: &RankedLibrary<F>,
    ef_pcts: (F, F),
    alpha: F,
    policy: ThresholdPolicy<F>,
    with_auc: bool,
) -> Result<MetricsReport<F>> {
    let ef1 = enrichment_factor(lib, ef_pcts.0)?;
    let ef10 = enrichment_factor(lib, ef_pcts.1)?;
    let bedroc_val = if lib.is_complete() {
        Some(bedroc(lib, alpha)?)
    } else {
        None
    };
    let roc = if with_auc && lib.is_complete() {
        match lib.scores() {
            Some(scores) => Some(roc_auc(scores, lib.labels())?),
            None => None,
        }
    } else {
        None
    };
    Ok(MetricsReport {
        target_id: target_id.to_string(),
        pathway: pathway.to_string(),
        scheme: scheme.to_string(),
        ef1,
        ef10,
        bedroc: bedroc_val,
        alpha,
        roc_auc: roc,
        actives_remaining_pct: lib.actives_remaining_pct(),
        classical: classical_metrics(lib, policy)?,
    })
}

/// [`compute_report_at`] with the standard 1% and 10% windows.
pub fn compute_report<F: Real>(
    target_id: &str,
    pathway: &str,
    scheme: &str,
    lib: &RankedLibrary<F>,
    alpha: F,
    policy: ThresholdPolicy<F>,
    with_auc: bool,
) -> Result<MetricsReport<F>> {
    let pcts = (F::one(), F::from_f64_lossy(10.0));
    compute_report_at(target_id, pathway, scheme, lib, pcts, alpha, policy, with_auc)
}

/// Median with the midpoint convention for even counts.
pub fn median<F: Real>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = sorted.len();
    Some(if k % 2 == 1 {
        sorted[k / 2]
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / F::from_f64_lossy(2.0)
    })
}

pub fn mean<F: Real>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().fold(F::zero(), |acc, &v| acc + v);
    Some(sum / F::from_count(values.len()))
}

/// One summary-table row: median and mean of each metric across targets for
/// one (pathway, scheme), plus the count of targets with EF1% > 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow<F: Real> {
    pub pathway: String,
    pub scheme: String,
    pub median_ef1: F,
    pub mean_ef1: F,
    pub median_ef10: F,
    pub mean_ef10: F,
    pub median_roc_auc: Option<F>,
    pub mean_roc_auc: Option<F>,
    pub median_bedroc: Option<F>,
    pub mean_bedroc: Option<F>,
    pub median_actives_remaining_pct: F,
    pub mean_actives_remaining_pct: F,
    pub success_times: usize,
    pub n_targets: usize,
}

/// Aggregate per-target reports for one (pathway, scheme). Optional metrics
/// aggregate over the targets where they exist.
pub fn aggregate<F: Real>(
    reports: &[&MetricsReport<F>],
    pathway: &str,
    scheme: &str,
) -> Result<SummaryRow<F>> {
    if reports.is_empty() {
        return Err(Error::Argument("aggregate needs at least one report".to_string()));
    }
    let ef1: Vec<F> = reports.iter().map(|r| r.ef1).collect();
    let ef10: Vec<F> = reports.iter().map(|r| r.ef10).collect();
    let auc: Vec<F> = reports.iter().filter_map(|r| r.roc_auc).collect();
    let bed: Vec<F> = reports.iter().filter_map(|r| r.bedroc).collect();
    let rem: Vec<F> = reports.iter().map(|r| r.actives_remaining_pct).collect();
    Ok(SummaryRow {
        pathway: pathway.to_string(),
        scheme: scheme.to_string(),
        median_ef1: median(&ef1).unwrap(),
        mean_ef1: mean(&ef1).unwrap(),
        median_ef10: median(&ef10).unwrap(),
        mean_ef10: mean(&ef10).unwrap(),
        median_roc_auc: median(&auc),
        mean_roc_auc: mean(&auc),
        median_bedroc: median(&bed),
        mean_bedroc: mean(&bed),
        median_actives_remaining_pct: median(&rem).unwrap(),
        mean_actives_remaining_pct: mean(&rem).unwrap(),
        success_times: ef1.iter().filter(|&&v| v > F::one()).count(),
        n_targets: reports.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// N labels with actives planted at the given 0-based positions.
    fn planted(n: usize, active_positions: &[usize]) -> Vec<bool> {
        let mut labels = vec![false; n];
        for &p in active_positions {
            labels[p] = true;
        }
        labels
    }

    #[test]
    fn ef_fig1_worked_example() {
        // N = 10,000, 5% actives, 10 actives in the top-100 window
        let mut positions: Vec<usize> = (0..10).collect();
        positions.extend(5000..5490); // remaining 490 actives far down
        let lib = RankedLibrary::<f64>::full(planted(10_000, &positions)).unwrap();
        assert_eq!(lib.n_actives(), 500);
        let ef = enrichment_factor(&lib, 1.0).unwrap();
        assert!((ef - 2.0).abs() <= 1e-12, "{ef}");
    }

    #[test]
    fn ef_zero_when_window_empty_of_actives() {
        let lib = RankedLibrary::<f64>::full(planted(1000, &[990, 995])).unwrap();
        assert_eq!(enrichment_factor(&lib, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn ef_all_active_library_is_one_at_every_x() {
        let lib = RankedLibrary::<f64>::full(vec![true; 500]).unwrap();
        for x in [0.5, 1.0, 7.0, 10.0, 100.0] {
            let ef = enrichment_factor(&lib, x).unwrap();
            assert!((ef - 1.0).abs() < 1e-12, "x={x} ef={ef}");
        }
    }

    #[test]
    fn ef_fully_filtered_list_scores_zero() {
        let lib = RankedLibrary::<f64>::filtered(vec![], 1000, 50).unwrap();
        assert_eq!(enrichment_factor(&lib, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn ef_partial_retention_keeps_full_window_denominator() {
        // window = 10, but only 3 retained, 2 of them active
        let lib = RankedLibrary::<f64>::filtered(vec![true, true, false], 1000, 100).unwrap();
        let ef = enrichment_factor(&lib, 1.0).unwrap();
        // (2/10) / (100/1000) = 2.0
        assert!((ef - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ef_argument_and_undefined_errors() {
        let lib = RankedLibrary::<f64>::full(planted(100, &[0])).unwrap();
        assert!(matches!(enrichment_factor(&lib, 0.0), Err(Error::Argument(_))));
        assert!(matches!(enrichment_factor(&lib, 101.0), Err(Error::Argument(_))));
        let none = RankedLibrary::<f64>::full(vec![false; 10]).unwrap();
        assert!(matches!(enrichment_factor(&none, 1.0), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn ef_promotion_never_decreases() {
        // swap an active one position up past an inactive
        let before = RankedLibrary::<f64>::full(planted(200, &[5, 50, 120])).unwrap();
        let after = RankedLibrary::<f64>::full(planted(200, &[5, 49, 120])).unwrap();
        for x in [1.0, 5.0, 10.0, 50.0, 100.0] {
            let a = enrichment_factor(&before, x).unwrap();
            let b = enrichment_factor(&after, x).unwrap();
            assert!(b >= a, "x={x}: {b} < {a}");
        }
    }

    #[test]
    fn bedroc_perfect_and_inverted_limits() {
        let perfect = RankedLibrary::<f64>::full(planted(1000, &(0..10).collect::<Vec<_>>())).unwrap();
        let b = bedroc(&perfect, 20.0).unwrap();
        assert!(b >= 0.99, "{b}");
        let worst = RankedLibrary::<f64>::full(planted(1000, &(990..1000).collect::<Vec<_>>())).unwrap();
        let b = bedroc(&worst, 20.0).unwrap();
        assert!(b <= 0.01, "{b}");
    }

    #[test]
    fn bedroc_bounds_and_promotion() {
        let lib = RankedLibrary::<f64>::full(planted(500, &[3, 77, 301, 499])).unwrap();
        let b = bedroc(&lib, 20.0).unwrap();
        assert!((0.0..=1.0).contains(&b));
        let promoted = RankedLibrary::<f64>::full(planted(500, &[3, 76, 301, 499])).unwrap();
        assert!(bedroc(&promoted, 20.0).unwrap() > b);
    }

    #[test]
    fn bedroc_rejects_bad_inputs() {
        let lib = RankedLibrary::<f64>::full(planted(100, &[0])).unwrap();
        assert!(matches!(bedroc(&lib, 0.0), Err(Error::Argument(_))));
        let partial = RankedLibrary::<f64>::filtered(vec![true], 100, 1).unwrap();
        assert!(matches!(bedroc(&partial, 20.0), Err(Error::UnsupportedInput(_))));
    }

    #[test]
    fn auc_perfect_separation() {
        let scores = vec![0.9, 0.8, 0.2, 0.1];
        let labels = vec![true, true, false, false];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let scores = vec![0.5; 6];
        let labels = vec![true, false, true, false, false, true];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn auc_known_small_case() {
        // pairs: (0.35 vs 0.1 win), (0.35 vs 0.4 loss), (0.8 vs both win)
        let scores = vec![0.1, 0.4, 0.35, 0.8];
        let labels = vec![false, false, true, true];
        let auc: f64 = roc_auc(&scores, &labels).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_reversal_identity() {
        let scores = vec![3.0, 9.0, 4.0, 1.0, 7.5, 2.0, 8.0];
        let labels = vec![false, true, true, false, false, true, false];
        let fwd: f64 = roc_auc(&scores, &labels).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let rev: f64 = roc_auc(&neg, &labels).unwrap();
        assert!((fwd + rev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_single_class_is_undefined() {
        assert!(matches!(
            roc_auc(&[1.0, 2.0], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn classical_top1pct_regime_example() {
        // N = 10,000, n = 100; top-100 contains 2 actives
        let mut positions: Vec<usize> = vec![10, 55];
        positions.extend(200..298);
        let lib = RankedLibrary::<f64>::full(planted(10_000, &positions)).unwrap();
        let m = classical_metrics(&lib, ThresholdPolicy::Top1Percent).unwrap();
        assert_eq!((m.true_pos, m.false_pos, m.false_neg, m.true_neg), (2, 98, 98, 9802));
        assert!((m.precision - 0.02).abs() < 1e-12);
        assert!((m.recall - 0.02).abs() < 1e-12);
        assert!((m.accuracy - 0.9804).abs() < 1e-12);
        assert!((m.balanced_accuracy - 0.50505050505050505).abs() < 1e-12);
        assert!((m.f1 - 0.02).abs() < 1e-12);
        // Eq. 3 identity, exact
        assert_eq!(m.balanced_accuracy, (m.recall + m.specificity) / 2.0);
    }

    #[test]
    fn classical_perfect_window() {
        let lib = RankedLibrary::<f64>::full(planted(500, &[0, 1, 2, 3, 4])).unwrap();
        let m = classical_metrics(&lib, ThresholdPolicy::Top1Percent).unwrap();
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.balanced_accuracy, 1.0);
    }

    #[test]
    fn classical_empty_window_degenerates_to_zero() {
        let lib = RankedLibrary::<f64>::full(planted(1000, &[500, 600])).unwrap();
        let m = classical_metrics(&lib, ThresholdPolicy::Top1Percent).unwrap();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert!(m.mcc <= 0.0);
    }

    #[test]
    fn classical_score_threshold_policy() {
        let lib = RankedLibrary::<f64>::full_scored(
            vec![true, false, true, false],
            vec![0.9, 0.7, 0.3, 0.1],
        )
        .unwrap();
        let m = classical_metrics(&lib, ThresholdPolicy::ScoreThreshold(0.5)).unwrap();
        assert_eq!((m.true_pos, m.false_pos, m.false_neg, m.true_neg), (1, 1, 1, 1));
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn classical_single_class_is_undefined() {
        let lib = RankedLibrary::<f64>::full(vec![true; 10]).unwrap();
        assert!(matches!(
            classical_metrics(&lib, ThresholdPolicy::Top1Percent),
            Err(Error::UndefinedMetric(_))
        ));
    }

    fn report_with_ef1(ef1: f64) -> MetricsReport<f64> {
        MetricsReport {
            target_id: "T".into(),
            pathway: "p".into(),
            scheme: "s".into(),
            ef1,
            ef10: ef1 / 2.0,
            bedroc: Some(0.1),
            alpha: 20.0,
            roc_auc: None,
            actives_remaining_pct: 100.0,
            classical: metrics_from_counts(1, 9, 1000, 10, "top1pct".into()),
        }
    }

    #[test]
    fn aggregate_median_and_mean() {
        let reports: Vec<MetricsReport<f64>> = [1.0, 2.0, 3.0].map(report_with_ef1).into();
        let refs: Vec<&MetricsReport<f64>> = reports.iter().collect();
        let row = aggregate(&refs, "p", "s").unwrap();
        assert_eq!(row.median_ef1, 2.0);
        assert_eq!(row.mean_ef1, 2.0);
    }

    #[test]
    fn aggregate_success_times_strictly_above_one() {
        let reports: Vec<MetricsReport<f64>> = [0.5, 1.2, 2.0].map(report_with_ef1).into();
        let refs: Vec<&MetricsReport<f64>> = reports.iter().collect();
        assert_eq!(aggregate(&refs, "p", "s").unwrap().success_times, 2);
        let boundary: Vec<MetricsReport<f64>> = [1.0, 1.0].map(report_with_ef1).into();
        let refs: Vec<&MetricsReport<f64>> = boundary.iter().collect();
        assert_eq!(aggregate(&refs, "p", "s").unwrap().success_times, 0);
    }

    #[test]
    fn aggregate_even_count_midpoint_and_outlier_mean() {
        let reports: Vec<MetricsReport<f64>> = [0.0, 1.0, 2.0, 9.0].map(report_with_ef1).into();
        let refs: Vec<&MetricsReport<f64>> = reports.iter().collect();
        let row = aggregate(&refs, "p", "s").unwrap();
        assert_eq!(row.median_ef1, 1.5);
        assert_eq!(row.mean_ef1, 3.0);
    }

    #[test]
    fn metrics_match_across_scalar_types() {
        let labels = planted(200, &[0, 3, 17, 120]);
        let lib64 = RankedLibrary::<f64>::full(labels.clone()).unwrap();
        let lib32 = RankedLibrary::<f32>::full(labels).unwrap();
        let ef64 = enrichment_factor(&lib64, 10.0f64).unwrap();
        let ef32 = enrichment_factor(&lib32, 10.0f32).unwrap();
        assert!((ef64 - ef32 as f64).abs() < 1e-6);
        let b64 = bedroc(&lib64, 20.0f64).unwrap();
        let b32 = bedroc(&lib32, 20.0f32).unwrap();
        assert!((b64 - b32 as f64).abs() < 1e-5);
    }
}
