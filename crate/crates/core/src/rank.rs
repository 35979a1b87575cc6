//! Per-scorer rank assignment, score-threshold filtering, and weighted
//! rank-consensus rankings.
//!
//! Ranks are assigned on the full library before any filtering; a filter only
//! removes ligands from the output list. All ties break by ascending
//! ligand_id so identical inputs serialize byte-identically.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ScreenDataset, SCORER_AUTODOCK, SCORER_DIFFDOCK, SCORER_GNINA_AUTODOCK,
    SCORER_GNINA_DIFFDOCK, SCORER_NMDN_AUTODOCK, SCORER_NMDN_DIFFDOCK};
use crate::error::{Error, Result};
use crate::metrics::RankedLibrary;
use crate::num::Real;

/// Ranks (1 = best) for one scorer over one target's full library.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub target_id: String,
    pub scorer_id: String,
    /// Rank of each dataset record, parallel to record order.
    pub ranks: Vec<usize>,
    /// Record indices sorted best-first (inverse permutation of `ranks`).
    pub order: Vec<usize>,
}

impl RankTable {
    pub fn n_ranked(&self) -> usize {
        self.ranks.len()
    }

    pub fn rank_of(&self, record_idx: usize) -> usize {
        self.ranks[record_idx]
    }
}

/// Rank every ligand by one scorer's oriented score: descending score,
/// exact ties by ascending ligand_id, ligands missing the score after all
/// scored ligands (ordered by ligand_id).
pub fn assign_ranks(ds: &ScreenDataset, scorer_id: &str) -> Result<RankTable> {
    if !ds.is_oriented() {
        return Err(Error::Config(format!(
            "dataset `{}` is not oriented; call orient_scores first",
            ds.target_id
        )));
    }
    let col = ds
        .scorer_index(scorer_id)
        .ok_or_else(|| Error::Config(format!("unknown scorer `{scorer_id}`")))?;

    let mut scored: Vec<(usize, f64)> = Vec::new();
    let mut missing: Vec<usize> = Vec::new();
    for (i, rec) in ds.records.iter().enumerate() {
        match rec.scores[col] {
            Some(v) if v.is_finite() => scored.push((i, v)),
            Some(v) => {
                return Err(Error::Validation(format!(
                    "non-finite `{scorer_id}` score {v} for ligand `{}`",
                    rec.ligand_id
                )))
            }
            None => missing.push(i),
        }
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| ds.records[a.0].ligand_id.cmp(&ds.records[b.0].ligand_id))
    });
    missing.sort_by(|&a, &b| ds.records[a].ligand_id.cmp(&ds.records[b].ligand_id));

    let order: Vec<usize> = scored.iter().map(|&(i, _)| i).chain(missing).collect();
    let mut ranks = vec![0usize; ds.n_total()];
    for (pos, &rec_idx) in order.iter().enumerate() {
        ranks[rec_idx] = pos + 1;
    }
    Ok(RankTable {
        target_id: ds.target_id.clone(),
        scorer_id: scorer_id.to_string(),
        ranks,
        order,
    })
}

/// One minimum-score cutoff on the oriented scale. `group` lets a filter
/// express "pass all cutoffs of at least one group" (used by the global
/// scheme, which accepts a ligand that clears either pathway's pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub scorer: String,
    pub min: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub group: usize,
}

fn is_zero(g: &usize) -> bool {
    *g == 0
}

/// A named filter: a ligand is retained iff, within at least one group,
/// every thresholded score is present and >= its cutoff. A filter with no
/// entries retains everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub name: String,
    #[serde(default)]
    pub thresholds: Vec<ThresholdEntry>,
}

impl FilterSpec {
    pub fn unfiltered(name: &str) -> Self {
        Self {
            name: name.to_string(),
            thresholds: Vec::new(),
        }
    }
}

/// Result of applying a filter: retained record indices plus per-cutoff
/// pass counts (how many ligands clear each individual threshold).
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub retained: BTreeSet<usize>,
    pub pass_counts: Vec<(String, usize)>,
}

pub fn apply_filter(ds: &ScreenDataset, filter: &FilterSpec) -> Result<FilterOutcome> {
    let mut cols = Vec::with_capacity(filter.thresholds.len());
    for t in &filter.thresholds {
        let col = ds
            .scorer_index(&t.scorer)
            .ok_or_else(|| Error::Config(format!("filter threshold on unknown scorer `{}`", t.scorer)))?;
        cols.push(col);
    }
    let groups: BTreeSet<usize> = filter.thresholds.iter().map(|t| t.group).collect();

    let mut pass_counts = vec![0usize; filter.thresholds.len()];
    let mut retained = BTreeSet::new();
    for (i, rec) in ds.records.iter().enumerate() {
        let mut any_group = groups.is_empty();
        for &g in &groups {
            let mut all = true;
            for (t_idx, t) in filter.thresholds.iter().enumerate() {
                if t.group != g {
                    continue;
                }
                let ok = matches!(rec.scores[cols[t_idx]], Some(v) if v >= t.min);
                if !ok {
                    all = false;
                }
            }
            if all {
                any_group = true;
            }
        }
        for (t_idx, t) in filter.thresholds.iter().enumerate() {
            if matches!(rec.scores[cols[t_idx]], Some(v) if v >= t.min) {
                pass_counts[t_idx] += 1;
            }
        }
        if any_group {
            retained.insert(i);
        }
    }
    Ok(FilterOutcome {
        retained,
        pass_counts: filter
            .thresholds
            .iter()
            .zip(pass_counts)
            .map(|(t, c)| (t.scorer.clone(), c))
            .collect(),
    })
}

/// Non-negative rank weight for one member scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub scorer: String,
    pub w: f64,
}

/// A named filter-threshold set plus per-scorer rank weights. Members are
/// exactly the weighted scorers, in listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusSpec {
    pub name: String,
    /// Report label: `autodock`, `diffdock`, `global`, or free-form.
    pub pathway: String,
    pub filter: FilterSpec,
    pub weights: Vec<WeightEntry>,
}

impl ConsensusSpec {
    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.weights.iter().map(|w| w.scorer.as_str())
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.name, self.pathway)
    }

    pub fn validate(&self, ds: &ScreenDataset) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Config(format!("consensus `{}` has no members", self.name)));
        }
        let mut sum = 0.0;
        for w in &self.weights {
            if w.w < 0.0 || w.w.is_nan() {
                return Err(Error::Config(format!(
                    "consensus `{}`: weight for `{}` must be non-negative",
                    self.name, w.scorer
                )));
            }
            sum += w.w;
            if ds.scorer_index(&w.scorer).is_none() {
                return Err(Error::Config(format!(
                    "consensus `{}` references unknown scorer `{}`",
                    self.name, w.scorer
                )));
            }
        }
        if sum <= 0.0 {
            return Err(Error::Config(format!(
                "consensus `{}` needs at least one positive weight",
                self.name
            )));
        }
        for t in &self.filter.thresholds {
            if ds.scorer_index(&t.scorer).is_none() {
                return Err(Error::Config(format!(
                    "consensus `{}` filter references unknown scorer `{}`",
                    self.name, t.scorer
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = \"{}\"", self.name);
        let _ = writeln!(out, "pathway = \"{}\"", self.pathway);
        out.push('\n');
        for t in &self.filter.thresholds {
            out.push_str("[[filters]]\n");
            let _ = writeln!(out, "scorer = \"{}\"", t.scorer);
            let _ = writeln!(out, "min = {:?}", t.min);
            if t.group != 0 {
                let _ = writeln!(out, "group = {}", t.group);
            }
            out.push('\n');
        }
        for w in &self.weights {
            out.push_str("[[weights]]\n");
            let _ = writeln!(out, "scorer = \"{}\"", w.scorer);
            let _ = writeln!(out, "w = {:?}", w.w);
            out.push('\n');
        }
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            name: String,
            #[serde(default)]
            pathway: Option<String>,
            #[serde(default)]
            filters: Vec<ThresholdEntry>,
            weights: Vec<WeightEntry>,
        }
        let file: File =
            toml::from_str(text).map_err(|e| Error::Config(format!("consensus spec: {e}")))?;
        Ok(ConsensusSpec {
            filter: FilterSpec {
                name: file.name.clone(),
                thresholds: file.filters,
            },
            pathway: file.pathway.unwrap_or_else(|| "custom".to_string()),
            name: file.name,
            weights: file.weights,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// The four preconfigured schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsensusScheme {
    CcMedium,
    UcStrong,
    CcWeak,
    Global,
}

impl ConsensusScheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cc-medium" => Ok(Self::CcMedium),
            "uc-strong" => Ok(Self::UcStrong),
            "cc-weak" => Ok(Self::CcWeak),
            "global" => Ok(Self::Global),
            other => Err(Error::Argument(format!("unknown consensus scheme `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CcMedium => "cc-medium",
            Self::UcStrong => "uc-strong",
            Self::CcWeak => "cc-weak",
            Self::Global => "global",
        }
    }
}

/// Pathway selector for [`builtin_consensus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathwayChoice {
    AutoDock,
    DiffDock,
    Both,
}

impl PathwayChoice {
    fn scorers(&self) -> (&'static str, &'static str, &'static str) {
        match self {
            PathwayChoice::AutoDock => (SCORER_AUTODOCK, SCORER_GNINA_AUTODOCK, SCORER_NMDN_AUTODOCK),
            PathwayChoice::DiffDock => (SCORER_DIFFDOCK, SCORER_GNINA_DIFFDOCK, SCORER_NMDN_DIFFDOCK),
            PathwayChoice::Both => unreachable!("single-pathway scorers requested for Both"),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PathwayChoice::AutoDock => "autodock",
            PathwayChoice::DiffDock => "diffdock",
            PathwayChoice::Both => "global",
        }
    }
}

/// Cutoffs per scheme on the oriented scale: (NMDN min, CNNaffinity min).
/// The strong filter's NMDN cutoff really is +900 while the medium and weak
/// ones are -800 and -4000.
fn scheme_cutoffs(scheme: ConsensusScheme) -> (f64, f64) {
    match scheme {
        ConsensusScheme::CcMedium | ConsensusScheme::Global => (-800.0, 0.1),
        ConsensusScheme::UcStrong => (900.0, 0.6),
        ConsensusScheme::CcWeak => (-4000.0, 0.0),
    }
}

/// Whether GNINA's rank gets double weight (calibrated) or all members
/// weigh equally (uncalibrated).
fn gnina_weight(scheme: ConsensusScheme) -> f64 {
    match scheme {
        ConsensusScheme::UcStrong => 1.0,
        _ => 2.0,
    }
}

/// Build one of the preconfigured consensus specs over the canonical scorer
/// ids. The global scheme reuses the medium cutoffs and calibration across
/// both pathways' six scorers; its filter passes a ligand that clears both
/// cutoffs in at least one pathway.
pub fn builtin_consensus(scheme: ConsensusScheme, pathway: PathwayChoice) -> Result<ConsensusSpec> {
    match (scheme, pathway) {
        (ConsensusScheme::Global, PathwayChoice::Both) => {
            let (nmdn_min, gnina_min) = scheme_cutoffs(scheme);
            Ok(ConsensusSpec {
                name: "cc-medium".to_string(),
                pathway: "global".to_string(),
                filter: FilterSpec {
                    name: "cc-medium".to_string(),
                    thresholds: vec![
                        ThresholdEntry { scorer: SCORER_NMDN_AUTODOCK.into(), min: nmdn_min, group: 0 },
                        ThresholdEntry { scorer: SCORER_GNINA_AUTODOCK.into(), min: gnina_min, group: 0 },
                        ThresholdEntry { scorer: SCORER_NMDN_DIFFDOCK.into(), min: nmdn_min, group: 1 },
                        ThresholdEntry { scorer: SCORER_GNINA_DIFFDOCK.into(), min: gnina_min, group: 1 },
                    ],
                },
                weights: vec![
                    WeightEntry { scorer: SCORER_AUTODOCK.into(), w: 1.0 },
                    WeightEntry { scorer: SCORER_DIFFDOCK.into(), w: 1.0 },
                    WeightEntry { scorer: SCORER_GNINA_AUTODOCK.into(), w: 2.0 },
                    WeightEntry { scorer: SCORER_GNINA_DIFFDOCK.into(), w: 2.0 },
                    WeightEntry { scorer: SCORER_NMDN_AUTODOCK.into(), w: 1.0 },
                    WeightEntry { scorer: SCORER_NMDN_DIFFDOCK.into(), w: 1.0 },
                ],
            })
        }
        (ConsensusScheme::Global, _) => Err(Error::Argument(
            "global consensus requires both pathways".to_string(),
        )),
        (_, PathwayChoice::Both) => Err(Error::Argument(format!(
            "{} is a single-pathway scheme",
            scheme.as_str()
        ))),
        (scheme, pathway) => {
            let (baseline, gnina, nmdn) = pathway.scorers();
            let (nmdn_min, gnina_min) = scheme_cutoffs(scheme);
            Ok(ConsensusSpec {
                name: scheme.as_str().to_string(),
                pathway: pathway.as_str().to_string(),
                filter: FilterSpec {
                    name: scheme.as_str().to_string(),
                    thresholds: vec![
                        ThresholdEntry { scorer: nmdn.into(), min: nmdn_min, group: 0 },
                        ThresholdEntry { scorer: gnina.into(), min: gnina_min, group: 0 },
                    ],
                },
                weights: vec![
                    WeightEntry { scorer: baseline.into(), w: 1.0 },
                    WeightEntry { scorer: gnina.into(), w: gnina_weight(scheme) },
                    WeightEntry { scorer: nmdn.into(), w: 1.0 },
                ],
            })
        }
    }
}

/// Weighted average rank: sum(w_s * rank_s) / sum(w_s).
pub fn weighted_average_rank<F: Real>(ranks: &[usize], weights: &[F]) -> Result<F> {
    if ranks.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} ranks vs {} weights",
            ranks.len(),
            weights.len()
        )));
    }
    let mut num = F::zero();
    let mut den = F::zero();
    for (&r, &w) in ranks.iter().zip(weights) {
        if w < F::zero() {
            return Err(Error::Config("negative rank weight".to_string()));
        }
        num = num + w * F::from_count(r);
        den = den + w;
    }
    if den <= F::zero() {
        return Err(Error::Config("rank weights sum to zero".to_string()));
    }
    Ok(num / den)
}

/// One library entry of a consensus ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEntry {
    pub ligand_id: String,
    pub record_idx: usize,
    pub average_rank: f64,
    pub active: bool,
    pub retained: bool,
}

/// A consensus ranking over the full library: entries ascend by average
/// rank (ties by ligand_id); `retained` marks filter survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRanking {
    pub target_id: String,
    pub scheme: String,
    pub pathway: String,
    pub entries: Vec<ConsensusEntry>,
    /// 1-based position of each dataset record in `entries`.
    pub position_by_record: Vec<usize>,
    pub actives_remaining_pct: f64,
}

impl ConsensusRanking {
    pub fn retained(&self) -> impl Iterator<Item = &ConsensusEntry> {
        self.entries.iter().filter(|e| e.retained)
    }

    pub fn excluded(&self) -> impl Iterator<Item = &ConsensusEntry> {
        self.entries.iter().filter(|e| !e.retained)
    }

    pub fn retained_count(&self) -> usize {
        self.entries.iter().filter(|e| e.retained).count()
    }

    /// Ranking file: `ligand_id, average_rank, label, retained`, full
    /// library sorted by average rank.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("ligand_id,average_rank,label,retained\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.ligand_id,
                e.average_rank,
                u8::from(e.active),
                e.retained
            );
        }
        out
    }
}

/// Combine member rank tables into a weighted average-rank ordering over the
/// full library (Eq. weights normalize out), then mark `retained` from the
/// filter outcome. An empty retained set is a valid result.
pub fn consensus_rank(
    ds: &ScreenDataset,
    tables: &[RankTable],
    spec: &ConsensusSpec,
    retained: &BTreeSet<usize>,
) -> Result<ConsensusRanking> {
    spec.validate(ds)?;
    let n = ds.n_total();
    let mut member_tables = Vec::with_capacity(spec.weights.len());
    let mut weights = Vec::with_capacity(spec.weights.len());
    for w in &spec.weights {
        let table = tables
            .iter()
            .find(|t| t.scorer_id == w.scorer)
            .ok_or_else(|| Error::Config(format!("no rank table for member `{}`", w.scorer)))?;
        if table.n_ranked() != n {
            return Err(Error::Shape(format!(
                "rank table `{}` covers {} ligands, library has {n}",
                w.scorer,
                table.n_ranked()
            )));
        }
        member_tables.push(table);
        weights.push(w.w);
    }

    let weight_sum: f64 = weights.iter().sum();
    let mut entries: Vec<ConsensusEntry> = ds
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let num: f64 = member_tables
                .iter()
                .zip(&weights)
                .map(|(t, &w)| w * t.ranks[i] as f64)
                .sum();
            ConsensusEntry {
                ligand_id: rec.ligand_id.clone(),
                record_idx: i,
                average_rank: num / weight_sum,
                active: rec.active,
                retained: retained.contains(&i),
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.average_rank
            .partial_cmp(&b.average_rank)
            .unwrap()
            .then_with(|| a.ligand_id.cmp(&b.ligand_id))
    });

    let mut position_by_record = vec![0usize; n];
    for (pos, e) in entries.iter().enumerate() {
        position_by_record[e.record_idx] = pos + 1;
    }

    let total_actives = ds.n_actives();
    let retained_actives = entries.iter().filter(|e| e.retained && e.active).count();
    let actives_remaining_pct = if total_actives == 0 {
        0.0
    } else {
        100.0 * retained_actives as f64 / total_actives as f64
    };

    Ok(ConsensusRanking {
        target_id: ds.target_id.clone(),
        scheme: spec.name.clone(),
        pathway: spec.pathway.clone(),
        entries,
        position_by_record,
        actives_remaining_pct,
    })
}

/// Full-library ranked view of a single scorer, scored for AUC/threshold
/// use: ligands missing the score share one tie group strictly below the
/// worst observed score.
pub fn ranked_library_for_scorer(ds: &ScreenDataset, table: &RankTable) -> Result<RankedLibrary<f64>> {
    let col = ds
        .scorer_index(&table.scorer_id)
        .ok_or_else(|| Error::Config(format!("unknown scorer `{}`", table.scorer_id)))?;
    let worst = ds
        .records
        .iter()
        .filter_map(|r| r.scores[col])
        .fold(f64::INFINITY, f64::min);
    let missing_fill = if worst.is_finite() { worst - 1.0 } else { 0.0 };
    let mut labels = Vec::with_capacity(ds.n_total());
    let mut scores = Vec::with_capacity(ds.n_total());
    for &rec_idx in &table.order {
        let rec = &ds.records[rec_idx];
        labels.push(rec.active);
        scores.push(rec.scores[col].unwrap_or(missing_fill));
    }
    RankedLibrary::full_scored(labels, scores)
}

/// Retained-only ranked view of a consensus ranking against the full
/// library, scored by negated average rank.
pub fn ranked_library_for_consensus(
    ds: &ScreenDataset,
    ranking: &ConsensusRanking,
) -> Result<RankedLibrary<f64>> {
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for e in ranking.retained() {
        labels.push(e.active);
        scores.push(-e.average_rank);
    }
    RankedLibrary::filtered_scored(labels, scores, ds.n_total(), ds.n_actives())
}
