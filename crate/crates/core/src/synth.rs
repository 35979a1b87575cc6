//! Seeded synthetic screening libraries with planted, tunable scorer
//! signal, plus brute-force metric oracles for tests.
//!
//! Scores are Gaussian-shaped (12-uniform sums from [`SplitMix64`], exact
//! IEEE additions only) with a shared-factor correlation model:
//! `score = sqrt(rho) * z_common + sqrt(1 - rho) * z_scorer`, shifted by
//! `signal_strength` for (a covered subset of) actives. Generation is fully
//! determined by the seed and bit-identical across platforms.

use serde::Deserialize;

use crate::data::{Direction, Pathway, ScoreRecord, ScorerSpec, ScreenDataset};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

fn default_coverage() -> f64 {
    1.0
}

/// One synthetic scorer: mean shift for actives (in score-spread units),
/// the fraction of actives carrying that shift, and the missing-cell rate.
/// Scorers with partial, independently drawn coverage are complementary:
/// each sees a different random subset of the actives.
#[derive(Debug, Clone, Deserialize)]
pub struct SyntheticScorer {
    pub id: String,
    #[serde(default)]
    pub signal_strength: f64,
    #[serde(default = "default_coverage")]
    pub active_coverage: f64,
    #[serde(default)]
    pub missing_rate: f64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_pathway")]
    pub pathway: Pathway,
}

fn default_direction() -> Direction {
    Direction::HigherBetter
}

fn default_pathway() -> Pathway {
    Pathway::Shared
}

impl SyntheticScorer {
    pub fn new(id: &str, signal_strength: f64) -> Self {
        Self {
            id: id.to_string(),
            signal_strength,
            active_coverage: 1.0,
            missing_rate: 0.0,
            direction: Direction::HigherBetter,
            pathway: Pathway::Shared,
        }
    }
}

/// Recipe for one synthetic target.
#[derive(Debug, Clone, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default = "default_target_id")]
    pub target_id: String,
    pub n_actives: usize,
    pub n_inactives: usize,
    /// Equicorrelation between every scorer pair, in [0, 1). The implied
    /// correlation matrix is positive semi-definite by construction.
    #[serde(default)]
    pub noise_correlation: f64,
    pub seed: u64,
    pub scorers: Vec<SyntheticScorer>,
}

fn default_target_id() -> String {
    "SYN1".to_string()
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.scorers.is_empty() {
            return Err(Error::Argument("synthetic spec needs at least one scorer".to_string()));
        }
        if self.n_actives + self.n_inactives == 0 {
            return Err(Error::Argument("synthetic spec needs at least one ligand".to_string()));
        }
        if !(0.0..1.0).contains(&self.noise_correlation) {
            return Err(Error::Argument(format!(
                "invalid correlation structure: noise_correlation {} outside [0, 1)",
                self.noise_correlation
            )));
        }
        for s in &self.scorers {
            if s.signal_strength < 0.0 {
                return Err(Error::Argument(format!(
                    "scorer `{}`: signal_strength must be >= 0",
                    s.id
                )));
            }
            if !(0.0..1.0).contains(&s.missing_rate) {
                return Err(Error::Argument(format!(
                    "scorer `{}`: missing_rate must be in [0, 1)",
                    s.id
                )));
            }
            if !(s.active_coverage > 0.0 && s.active_coverage <= 1.0) {
                return Err(Error::Argument(format!(
                    "scorer `{}`: active_coverage must be in (0, 1]",
                    s.id
                )));
            }
        }
        Ok(())
    }
}

/// Generate one target's score table. Draw order (fixed for portability):
/// active positions, per-scorer coverage flags, then per ligand one common
/// factor followed by per scorer (noise draw, missing draw).
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<ScreenDataset> {
    spec.validate()?;
    let n = spec.n_actives + spec.n_inactives;
    let mut rng = SplitMix64::new(spec.seed);

    let active_positions = rng.sample_indices(n, spec.n_actives);
    let mut is_active = vec![false; n];
    for &p in &active_positions {
        is_active[p] = true;
    }

    // covered[s][k] = does the k-th active carry scorer s's shift
    let covered: Vec<Vec<bool>> = spec
        .scorers
        .iter()
        .map(|s| {
            if s.active_coverage >= 1.0 {
                vec![true; spec.n_actives]
            } else {
                (0..spec.n_actives).map(|_| rng.next_f64() < s.active_coverage).collect()
            }
        })
        .collect();
    let mut active_ordinal = vec![usize::MAX; n];
    for (k, &p) in active_positions.iter().enumerate() {
        active_ordinal[p] = k;
    }

    let shared = spec.noise_correlation.sqrt();
    let own = (1.0 - spec.noise_correlation).sqrt();

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let z_common = rng.next_gaussian();
        let mut scores = Vec::with_capacity(spec.scorers.len());
        for (s_idx, scorer) in spec.scorers.iter().enumerate() {
            let z = rng.next_gaussian();
            let mut x = shared * z_common + own * z;
            if is_active[i] && covered[s_idx][active_ordinal[i]] {
                x += scorer.signal_strength;
            }
            let missing = scorer.missing_rate > 0.0 && rng.next_f64() < scorer.missing_rate;
            if missing {
                scores.push(None);
            } else {
                // emit on the declared direction's raw scale
                scores.push(Some(match scorer.direction {
                    Direction::HigherBetter => x,
                    Direction::LowerBetter => -x,
                }));
            }
        }
        records.push(ScoreRecord {
            ligand_id: format!("L{i:06}"),
            active: is_active[i],
            scores,
        });
    }

    Ok(ScreenDataset {
        target_id: spec.target_id.clone(),
        scorer_specs: spec
            .scorers
            .iter()
            .map(|s| ScorerSpec {
                scorer_id: s.id.clone(),
                column: None,
                direction: s.direction,
                pathway: s.pathway,
            })
            .collect(),
        records,
    })
}

/// Naive direct-summation metric implementations, maintained separately
/// from the production paths and used only by tests.
pub mod oracle {
    use crate::error::{Error, Result};

    /// EF by scanning the top window of a complete ranking.
    pub fn ef(ranked_labels: &[bool], x_pct: f64) -> Result<f64> {
        if !(x_pct > 0.0 && x_pct <= 100.0) {
            return Err(Error::Argument(format!("EF percentage {x_pct} outside (0, 100]")));
        }
        let n_total = ranked_labels.len();
        let n_actives = ranked_labels.iter().filter(|&&a| a).count();
        if n_actives == 0 {
            return Err(Error::UndefinedMetric("EF needs at least one active".to_string()));
        }
        let mut window = (n_total as f64 * x_pct / 100.0).floor() as usize;
        if window == 0 {
            window = 1;
        }
        let mut hits = 0usize;
        for &label in ranked_labels.iter().take(window) {
            if label {
                hits += 1;
            }
        }
        let observed_rate = hits as f64 / window as f64;
        let library_rate = n_actives as f64 / n_total as f64;
        Ok(observed_rate / library_rate)
    }

    /// AUC by O(n*m) pair counting: each active-inactive pair contributes
    /// 1, 1/2, or 0.
    pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
        let positives: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(&s, _)| s)
            .collect();
        let negatives: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(&s, _)| s)
            .collect();
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::UndefinedMetric(
                "ROC-AUC needs at least one active and one inactive".to_string(),
            ));
        }
        let mut credit = 0.0f64;
        for &p in &positives {
            for &q in &negatives {
                if p > q {
                    credit += 1.0;
                } else if p == q {
                    credit += 0.5;
                }
            }
        }
        Ok(credit / (positives.len() as f64 * negatives.len() as f64))
    }

    /// BEDROC from the active ranks (1-based) of a complete ranking of
    /// `n_total` ligands, by direct exponential summation.
    pub fn bedroc(active_ranks: &[usize], n_total: usize, alpha: f64) -> Result<f64> {
        if alpha <= 0.0 {
            return Err(Error::Argument(format!("BEDROC alpha must be positive, got {alpha}")));
        }
        let n = active_ranks.len();
        if n == 0 {
            return Err(Error::UndefinedMetric("BEDROC needs at least one active".to_string()));
        }
        let big_n = n_total as f64;
        let r_a = n as f64 / big_n;
        let mut observed = 0.0f64;
        for &rank in active_ranks {
            observed += (-alpha * rank as f64 / big_n).exp();
        }
        let mean_observed = observed / n as f64;
        let mean_random = (1.0 / big_n) * (1.0 - (-alpha).exp()) / ((alpha / big_n).exp() - 1.0);
        let rie = mean_observed / mean_random;
        let rie_min = (1.0 - (alpha * r_a).exp()) / (r_a * (1.0 - alpha.exp()));
        let rie_max = (1.0 - (-alpha * r_a).exp()) / (r_a * (1.0 - (-alpha).exp()));
        Ok(((rie - rie_min) / (rie_max - rie_min)).clamp(0.0, 1.0))
    }
}

/// Monte-Carlo mean and spread of EF under uniformly random rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomBaseline {
    pub mean: f64,
    pub std_dev: f64,
    pub trials: usize,
}

pub fn random_baseline(
    n_total: usize,
    n_actives: usize,
    x_pct: f64,
    trials: usize,
    seed: u64,
) -> Result<RandomBaseline> {
    if trials == 0 {
        return Err(Error::Argument("random baseline needs at least one trial".to_string()));
    }
    if n_actives == 0 || n_actives > n_total {
        return Err(Error::Argument("need 0 < n_actives <= n_total".to_string()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut labels: Vec<bool> = (0..n_total).map(|i| i < n_actives).collect();
    let mut values = Vec::with_capacity(trials);
    for _ in 0..trials {
        rng.shuffle(&mut labels);
        values.push(oracle::ef(&labels, x_pct)?);
    }
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / trials as f64;
    Ok(RandomBaseline {
        mean,
        std_dev: var.sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{bedroc as prod_bedroc, enrichment_factor, RankedLibrary};
    use crate::rank::assign_ranks;

    fn spec_with(n_actives: usize, n_inactives: usize, scorers: Vec<SyntheticScorer>, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            target_id: "SYN1".into(),
            n_actives,
            n_inactives,
            noise_correlation: 0.0,
            seed,
            scorers,
        }
    }

    fn ef1_of_scorer(ds: &ScreenDataset, scorer: &str) -> f64 {
        let table = assign_ranks(ds, scorer).unwrap();
        let labels: Vec<bool> = table.order.iter().map(|&i| ds.records[i].active).collect();
        let lib = RankedLibrary::<f64>::full(labels).unwrap();
        enrichment_factor(&lib, 1.0).unwrap()
    }

    #[test]
    fn exact_counts() {
        let ds = generate_synthetic(&spec_with(20, 1980, vec![SyntheticScorer::new("s", 0.0)], 5)).unwrap();
        assert_eq!(ds.n_total(), 2000);
        assert_eq!(ds.n_actives(), 20);
        assert_eq!(ds.n_inactives(), 1980);
    }

    #[test]
    fn seed_determinism_is_bitwise() {
        let spec = spec_with(10, 490, vec![SyntheticScorer::new("a", 1.0), SyntheticScorer::new("b", 0.5)], 99);
        let x = generate_synthetic(&spec).unwrap();
        let y = generate_synthetic(&spec).unwrap();
        assert_eq!(x, y);
        for (rx, ry) in x.records.iter().zip(&y.records) {
            for (sx, sy) in rx.scores.iter().zip(&ry.scores) {
                if let (Some(a), Some(b)) = (sx, sy) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn zero_signal_enriches_randomly() {
        let mut sum = 0.0;
        let seeds = 50;
        for seed in 0..seeds {
            let ds = generate_synthetic(&spec_with(100, 1900, vec![SyntheticScorer::new("s", 0.0)], seed)).unwrap();
            sum += ef1_of_scorer(&ds, "s");
        }
        let mean = sum / seeds as f64;
        assert!((mean - 1.0).abs() <= 0.2, "mean EF1 {mean}");
    }

    #[test]
    fn signal_ladder_is_monotone() {
        let mut means = Vec::new();
        for &signal in &[0.5, 1.0, 2.0] {
            let mut sum = 0.0;
            for seed in 0..50u64 {
                let ds = generate_synthetic(&spec_with(
                    20,
                    1980,
                    vec![SyntheticScorer::new("s", signal)],
                    1000 + seed,
                ))
                .unwrap();
                sum += ef1_of_scorer(&ds, "s");
            }
            means.push(sum / 50.0);
        }
        assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
    }

    #[test]
    fn planted_signal_recovery() {
        // signal 2 on a 1%-active library clears EF1 > 3 in >= 90% of seeds
        let mut hits = 0;
        let seeds = 50;
        for seed in 0..seeds {
            let ds = generate_synthetic(&spec_with(20, 1980, vec![SyntheticScorer::new("s", 2.0)], 7000 + seed)).unwrap();
            if ef1_of_scorer(&ds, "s") > 3.0 {
                hits += 1;
            }
        }
        assert!(hits * 10 >= seeds * 9, "only {hits}/{seeds} seeds recovered the signal");
    }

    #[test]
    fn missing_rate_injects_missing_cells() {
        let mut scorer = SyntheticScorer::new("s", 0.0);
        scorer.missing_rate = 0.25;
        let ds = generate_synthetic(&spec_with(50, 1950, vec![scorer], 3)).unwrap();
        let missing = ds.records.iter().filter(|r| r.scores[0].is_none()).count();
        let rate = missing as f64 / ds.n_total() as f64;
        assert!((rate - 0.25).abs() < 0.05, "missing rate {rate}");
    }

    #[test]
    fn lower_better_scorer_orients_back_to_signal() {
        let mut scorer = SyntheticScorer::new("energy", 2.0);
        scorer.direction = Direction::LowerBetter;
        let ds = generate_synthetic(&spec_with(20, 1980, vec![scorer], 21)).unwrap();
        let oriented = crate::data::orient_scores(&ds).unwrap();
        assert!(ef1_of_scorer(&oriented, "energy") > 3.0);
    }

    #[test]
    fn invalid_correlation_is_argument_error() {
        let mut spec = spec_with(5, 95, vec![SyntheticScorer::new("s", 0.0)], 1);
        spec.noise_correlation = 1.0;
        assert!(matches!(generate_synthetic(&spec), Err(Error::Argument(_))));
        spec.noise_correlation = -0.1;
        assert!(matches!(generate_synthetic(&spec), Err(Error::Argument(_))));
    }

    #[test]
    fn oracle_ef_matches_fig1_instance() {
        let mut labels = vec![false; 10_000];
        for p in 0..10 {
            labels[p] = true;
        }
        for p in 5000..5490 {
            labels[p] = true;
        }
        assert!((oracle::ef(&labels, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let lib = RankedLibrary::<f64>::full(labels).unwrap();
        let prod = enrichment_factor(&lib, 1.0).unwrap();
        assert!((oracle::ef(lib.labels(), 1.0).unwrap() - prod).abs() < 1e-12);
    }

    #[test]
    fn oracle_bedroc_single_active_at_top() {
        let mut labels = vec![false; 100];
        labels[0] = true;
        let lib = RankedLibrary::<f64>::full(labels).unwrap();
        let prod = prod_bedroc(&lib, 20.0).unwrap();
        let orc = oracle::bedroc(&[1], 100, 20.0).unwrap();
        assert!((prod - orc).abs() < 1e-10);
        assert!(prod >= 0.95, "{prod}");
    }

    #[test]
    fn random_baseline_mean_near_one() {
        let rb = random_baseline(5000, 50, 1.0, 1000, 77).unwrap();
        assert!((0.85..=1.15).contains(&rb.mean), "mean {}", rb.mean);
    }

    #[test]
    fn random_baseline_all_active_is_exactly_one() {
        let rb = random_baseline(200, 200, 1.0, 25, 5).unwrap();
        assert_eq!(rb.mean, 1.0);
        assert_eq!(rb.std_dev, 0.0);
    }

    #[test]
    fn random_baseline_single_trial_reproducible() {
        let a = random_baseline(300, 30, 1.0, 1, 42).unwrap();
        let b = random_baseline(300, 30, 1.0, 1, 42).unwrap();
        assert_eq!(a, b);
    }
}
