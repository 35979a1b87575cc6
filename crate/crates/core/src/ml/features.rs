//! Feature engineering: turn oriented scores, rank percentiles, and
//! consensus positions into a model-ready matrix.
//!
//! The default recipe emits 17 primary columns (6 oriented raw scores, 6
//! within-target rank percentiles, 3 medium-consensus rank percentiles,
//! mean and population standard deviation of the score percentiles) plus 25
//! derived columns (signed log and square of each raw score, pairwise
//! products of the 4 rescorer raw scores, 3 pathway percentile differences,
//! and min/max/median/range of the score percentiles) for 42 total. A
//! missing raw score is imputed as the scorer's worst observed oriented
//! score; percentile features come from the full-library rank tables, which
//! already place missing ligands at the worst ranks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ScreenDataset, SCORER_AUTODOCK, SCORER_DIFFDOCK, SCORER_GNINA_AUTODOCK,
    SCORER_GNINA_DIFFDOCK, SCORER_NMDN_AUTODOCK, SCORER_NMDN_DIFFDOCK};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rank::{ConsensusRanking, RankTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Oriented raw score of one scorer (missing imputed as its worst).
    RawScore,
    /// (rank - 1) / (N - 1): 0 = best, 1 = worst.
    RankPercentile,
    /// Position percentile in a named consensus ranking.
    ConsensusPercentile,
    /// sign(s) * ln(1 + |s|) of one raw score.
    SignedLog,
    /// Square of one raw score.
    Square,
    /// Product of two raw scores.
    Product,
    /// Rank-percentile difference of two scorers.
    PercentileDiff,
    PercentileMean,
    /// Population standard deviation of the listed scorers' percentiles.
    PercentileStd,
    PercentileMin,
    PercentileMax,
    /// Midpoint median of the listed scorers' percentiles.
    PercentileMedian,
    PercentileRange,
}

impl FeatureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::RawScore => "raw_score",
            FeatureKind::RankPercentile => "rank_percentile",
            FeatureKind::ConsensusPercentile => "consensus_percentile",
            FeatureKind::SignedLog => "signed_log",
            FeatureKind::Square => "square",
            FeatureKind::Product => "product",
            FeatureKind::PercentileDiff => "percentile_diff",
            FeatureKind::PercentileMean => "percentile_mean",
            FeatureKind::PercentileStd => "percentile_std",
            FeatureKind::PercentileMin => "percentile_min",
            FeatureKind::PercentileMax => "percentile_max",
            FeatureKind::PercentileMedian => "percentile_median",
            FeatureKind::PercentileRange => "percentile_range",
        }
    }

    fn arity(&self) -> (usize, Option<usize>) {
        match self {
            FeatureKind::RawScore
            | FeatureKind::RankPercentile
            | FeatureKind::ConsensusPercentile
            | FeatureKind::SignedLog
            | FeatureKind::Square => (1, Some(1)),
            FeatureKind::Product | FeatureKind::PercentileDiff => (2, Some(2)),
            _ => (1, None),
        }
    }
}

/// One feature: a name, a transform kind, and the scorer (or consensus)
/// ids it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub operands: Vec<String>,
}

/// Ordered feature definitions; the first `n_primary` are the primary set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecipe {
    pub name: String,
    pub n_primary: usize,
    pub features: Vec<FeatureDef>,
}

const SIX: [&str; 6] = [
    SCORER_AUTODOCK,
    SCORER_DIFFDOCK,
    SCORER_GNINA_AUTODOCK,
    SCORER_GNINA_DIFFDOCK,
    SCORER_NMDN_AUTODOCK,
    SCORER_NMDN_DIFFDOCK,
];

const RESCORERS: [&str; 4] = [
    SCORER_GNINA_AUTODOCK,
    SCORER_GNINA_DIFFDOCK,
    SCORER_NMDN_AUTODOCK,
    SCORER_NMDN_DIFFDOCK,
];

impl FeatureRecipe {
    pub fn width(&self) -> usize {
        self.features.len()
    }

    /// The normative 17-primary / 42-total recipe over the canonical six
    /// scorers and the three medium-consensus rankings.
    pub fn default_six() -> Self {
        let mut features = Vec::with_capacity(42);
        let def = |name: String, kind: FeatureKind, operands: Vec<&str>| FeatureDef {
            name,
            kind,
            operands: operands.into_iter().map(String::from).collect(),
        };
        // primary 17
        for s in SIX {
            features.push(def(format!("raw_{s}"), FeatureKind::RawScore, vec![s]));
        }
        for s in SIX {
            features.push(def(format!("pct_{s}"), FeatureKind::RankPercentile, vec![s]));
        }
        for pathway in ["autodock", "diffdock", "global"] {
            features.push(def(
                format!("cons_pct_cc_medium_{pathway}"),
                FeatureKind::ConsensusPercentile,
                vec![match pathway {
                    "autodock" => "cc-medium@autodock",
                    "diffdock" => "cc-medium@diffdock",
                    _ => "cc-medium@global",
                }],
            ));
        }
        features.push(def("pct_mean".into(), FeatureKind::PercentileMean, SIX.to_vec()));
        features.push(def("pct_std".into(), FeatureKind::PercentileStd, SIX.to_vec()));
        // derived 25
        for s in SIX {
            features.push(def(format!("slog_{s}"), FeatureKind::SignedLog, vec![s]));
        }
        for s in SIX {
            features.push(def(format!("sq_{s}"), FeatureKind::Square, vec![s]));
        }
        for (i, &a) in RESCORERS.iter().enumerate() {
            for &b in &RESCORERS[i + 1..] {
                features.push(def(format!("prod_{a}_{b}"), FeatureKind::Product, vec![a, b]));
            }
        }
        features.push(def(
            "pct_diff_gnina".into(),
            FeatureKind::PercentileDiff,
            vec![SCORER_GNINA_AUTODOCK, SCORER_GNINA_DIFFDOCK],
        ));
        features.push(def(
            "pct_diff_nmdn".into(),
            FeatureKind::PercentileDiff,
            vec![SCORER_NMDN_AUTODOCK, SCORER_NMDN_DIFFDOCK],
        ));
        features.push(def(
            "pct_diff_baseline".into(),
            FeatureKind::PercentileDiff,
            vec![SCORER_AUTODOCK, SCORER_DIFFDOCK],
        ));
        features.push(def("pct_min".into(), FeatureKind::PercentileMin, SIX.to_vec()));
        features.push(def("pct_max".into(), FeatureKind::PercentileMax, SIX.to_vec()));
        features.push(def("pct_median".into(), FeatureKind::PercentileMedian, SIX.to_vec()));
        features.push(def("pct_range".into(), FeatureKind::PercentileRange, SIX.to_vec()));

        FeatureRecipe {
            name: "default-six".to_string(),
            n_primary: 17,
            features,
        }
    }

    /// Generic recipe over an arbitrary scorer set: raw scores,
    /// percentiles, signed logs, squares, pairwise raw products, and
    /// percentile mean/std.
    pub fn for_scorers(scorer_ids: &[&str]) -> Self {
        let mut features = Vec::new();
        let ids: Vec<String> = scorer_ids.iter().map(|s| s.to_string()).collect();
        for s in &ids {
            features.push(FeatureDef {
                name: format!("raw_{s}"),
                kind: FeatureKind::RawScore,
                operands: vec![s.clone()],
            });
        }
        for s in &ids {
            features.push(FeatureDef {
                name: format!("pct_{s}"),
                kind: FeatureKind::RankPercentile,
                operands: vec![s.clone()],
            });
        }
        let n_primary = features.len();
        for s in &ids {
            features.push(FeatureDef {
                name: format!("slog_{s}"),
                kind: FeatureKind::SignedLog,
                operands: vec![s.clone()],
            });
        }
        for s in &ids {
            features.push(FeatureDef {
                name: format!("sq_{s}"),
                kind: FeatureKind::Square,
                operands: vec![s.clone()],
            });
        }
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                features.push(FeatureDef {
                    name: format!("prod_{}_{}", ids[i], ids[j]),
                    kind: FeatureKind::Product,
                    operands: vec![ids[i].clone(), ids[j].clone()],
                });
            }
        }
        if ids.len() > 1 {
            features.push(FeatureDef {
                name: "pct_mean".into(),
                kind: FeatureKind::PercentileMean,
                operands: ids.clone(),
            });
            features.push(FeatureDef {
                name: "pct_std".into(),
                kind: FeatureKind::PercentileStd,
                operands: ids.clone(),
            });
        }
        FeatureRecipe {
            name: format!("generic-{}", ids.len()),
            n_primary,
            features,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("recipe has no features".to_string()));
        }
        if self.n_primary > self.features.len() {
            return Err(Error::Config(format!(
                "recipe claims {} primary features but defines {}",
                self.n_primary,
                self.features.len()
            )));
        }
        let mut names = BTreeSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::Config(format!("duplicate feature name `{}`", f.name)));
            }
            let (min, max) = f.kind.arity();
            if f.operands.len() < min || max.is_some_and(|m| f.operands.len() > m) {
                return Err(Error::Config(format!(
                    "feature `{}` has {} operands",
                    f.name,
                    f.operands.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = \"{}\"", self.name);
        let _ = writeln!(out, "n_primary = {}", self.n_primary);
        out.push('\n');
        for f in &self.features {
            out.push_str("[[feature]]\n");
            let _ = writeln!(out, "name = \"{}\"", f.name);
            let _ = writeln!(out, "kind = \"{}\"", f.kind.as_str());
            let ops: Vec<String> = f.operands.iter().map(|o| format!("\"{o}\"")).collect();
            let _ = writeln!(out, "operands = [{}]", ops.join(", "));
            out.push('\n');
        }
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            name: String,
            n_primary: usize,
            feature: Vec<FeatureDef>,
        }
        let file: File = toml::from_str(text).map_err(|e| Error::Config(format!("recipe: {e}")))?;
        let recipe = FeatureRecipe {
            name: file.name,
            n_primary: file.n_primary,
            features: file.feature,
        };
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Row-major feature matrix with labels and ligand ids carried along.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<F: Real> {
    pub recipe_name: String,
    pub names: Vec<String>,
    pub n_primary: usize,
    pub ligand_ids: Vec<String>,
    pub labels: Vec<bool>,
    values: Vec<F>,
    width: usize,
}

impl<F: Real> FeatureMatrix<F> {
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<F>>, labels: Vec<bool>) -> Result<Self> {
        let width = names.len();
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!("{} rows vs {} labels", rows.len(), labels.len())));
        }
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in &rows {
            if row.len() != width {
                return Err(Error::Shape(format!(
                    "row width {} does not match {} feature names",
                    row.len(),
                    width
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            recipe_name: "adhoc".to_string(),
            n_primary: width,
            ligand_ids: (0..labels.len()).map(|i| format!("R{i}")).collect(),
            names,
            labels,
            values,
            width,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.n_rows()).map(|i| self.values[i * self.width + j]).collect()
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.width);
        let mut labels = Vec::with_capacity(indices.len());
        let mut ligand_ids = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            ligand_ids.push(self.ligand_ids[i].clone());
        }
        Self {
            recipe_name: self.recipe_name.clone(),
            names: self.names.clone(),
            n_primary: self.n_primary,
            ligand_ids,
            labels,
            values,
            width: self.width,
        }
    }

    pub(crate) fn replace_values(&self, values: Vec<F>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self {
            values,
            ..self.clone()
        }
    }

    /// Stack matrices with identical feature layouts (pooled multi-target
    /// training).
    pub fn concat(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Argument("no matrices to concatenate".to_string()))?;
        let mut out = first.clone();
        for part in &parts[1..] {
            if part.names != first.names {
                return Err(Error::Shape("feature layouts differ across matrices".to_string()));
            }
            out.values.extend_from_slice(&part.values);
            out.labels.extend_from_slice(&part.labels);
            out.ligand_ids.extend_from_slice(&part.ligand_ids);
        }
        Ok(out)
    }
}

fn signed_log(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().ln_1p()
    }
}

struct Columns {
    /// Per scorer id: raw oriented scores with missing cells imputed as the
    /// scorer's worst observed value.
    raw: BTreeMap<String, Vec<f64>>,
    /// Per scorer id: (rank-1)/(N-1) from the full-library rank table.
    pct: BTreeMap<String, Vec<f64>>,
    /// Per consensus label: position percentile in its ordering.
    consensus_pct: BTreeMap<String, Vec<f64>>,
}

impl Columns {
    fn raw(&self, scorer: &str) -> Result<&[f64]> {
        self.raw
            .get(scorer)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("recipe references unavailable scorer `{scorer}`")))
    }

    fn pct(&self, scorer: &str) -> Result<&[f64]> {
        self.pct
            .get(scorer)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("recipe references unavailable scorer `{scorer}`")))
    }

    fn consensus(&self, label: &str) -> Result<&[f64]> {
        self.consensus_pct.get(label).map(Vec::as_slice).ok_or_else(|| {
            Error::Config(format!("recipe references unavailable consensus ranking `{label}`"))
        })
    }
}

fn prepare_columns(
    ds: &ScreenDataset,
    tables: &[RankTable],
    consensus: &[ConsensusRanking],
) -> Result<Columns> {
    let n = ds.n_total();
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };

    let mut raw = BTreeMap::new();
    let mut pct = BTreeMap::new();
    for table in tables {
        let col = ds
            .scorer_index(&table.scorer_id)
            .ok_or_else(|| Error::Config(format!("rank table for unknown scorer `{}`", table.scorer_id)))?;
        if table.n_ranked() != n {
            return Err(Error::Shape(format!(
                "rank table `{}` covers {} of {n} ligands",
                table.scorer_id,
                table.n_ranked()
            )));
        }
        let worst = ds
            .records
            .iter()
            .filter_map(|r| r.scores[col])
            .fold(f64::INFINITY, f64::min);
        if !worst.is_finite() && ds.records.iter().any(|r| r.scores[col].is_none()) {
            return Err(Error::Config(format!(
                "scorer `{}` has no observed scores to impute from",
                table.scorer_id
            )));
        }
        let raw_col: Vec<f64> = ds
            .records
            .iter()
            .map(|r| r.scores[col].unwrap_or(worst))
            .collect();
        let pct_col: Vec<f64> = table.ranks.iter().map(|&r| (r - 1) as f64 / denom).collect();
        raw.insert(table.scorer_id.clone(), raw_col);
        pct.insert(table.scorer_id.clone(), pct_col);
    }

    let mut consensus_pct = BTreeMap::new();
    for ranking in consensus {
        let label = format!("{}@{}", ranking.scheme, ranking.pathway);
        if ranking.position_by_record.len() != n {
            return Err(Error::Shape(format!(
                "consensus `{label}` covers {} of {n} ligands",
                ranking.position_by_record.len()
            )));
        }
        let col: Vec<f64> = ranking
            .position_by_record
            .iter()
            .map(|&p| (p - 1) as f64 / denom)
            .collect();
        consensus_pct.insert(label, col);
    }

    Ok(Columns {
        raw,
        pct,
        consensus_pct,
    })
}

/// Evaluate a recipe over an oriented dataset, its full-library rank
/// tables, and any consensus rankings the recipe references.
pub fn build_features<F: Real>(
    ds: &ScreenDataset,
    tables: &[RankTable],
    consensus: &[ConsensusRanking],
    recipe: &FeatureRecipe,
) -> Result<FeatureMatrix<F>> {
    recipe.validate()?;
    if !ds.is_oriented() {
        return Err(Error::Config("build_features needs an oriented dataset".to_string()));
    }
    let cols = prepare_columns(ds, tables, consensus)?;
    let n = ds.n_total();
    let width = recipe.width();

    // per-feature source columns, evaluated row-wise below
    enum Eval<'a> {
        Copy(&'a [f64]),
        SignedLog(&'a [f64]),
        Square(&'a [f64]),
        Product(&'a [f64], &'a [f64]),
        Diff(&'a [f64], &'a [f64]),
        Stat(FeatureKind, Vec<&'a [f64]>),
    }
    let mut plan = Vec::with_capacity(width);
    for f in &recipe.features {
        let eval = match f.kind {
            FeatureKind::RawScore => Eval::Copy(cols.raw(&f.operands[0])?),
            FeatureKind::RankPercentile => Eval::Copy(cols.pct(&f.operands[0])?),
            FeatureKind::ConsensusPercentile => Eval::Copy(cols.consensus(&f.operands[0])?),
            FeatureKind::SignedLog => Eval::SignedLog(cols.raw(&f.operands[0])?),
            FeatureKind::Square => Eval::Square(cols.raw(&f.operands[0])?),
            FeatureKind::Product => Eval::Product(cols.raw(&f.operands[0])?, cols.raw(&f.operands[1])?),
            FeatureKind::PercentileDiff => Eval::Diff(cols.pct(&f.operands[0])?, cols.pct(&f.operands[1])?),
            kind => Eval::Stat(
                kind,
                f.operands
                    .iter()
                    .map(|o| cols.pct(o))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        plan.push(eval);
    }

    let mut values = Vec::with_capacity(n * width);
    let mut stat_buf = Vec::new();
    for i in 0..n {
        for eval in &plan {
            let v = match eval {
                Eval::Copy(c) => c[i],
                Eval::SignedLog(c) => signed_log(c[i]),
                Eval::Square(c) => c[i] * c[i],
                Eval::Product(a, b) => a[i] * b[i],
                Eval::Diff(a, b) => a[i] - b[i],
                Eval::Stat(kind, sources) => {
                    stat_buf.clear();
                    stat_buf.extend(sources.iter().map(|c| c[i]));
                    percentile_stat(*kind, &mut stat_buf)
                }
            };
            values.push(F::from_f64_lossy(v));
        }
    }

    Ok(FeatureMatrix {
        recipe_name: recipe.name.clone(),
        names: recipe.features.iter().map(|f| f.name.clone()).collect(),
        n_primary: recipe.n_primary,
        ligand_ids: ds.records.iter().map(|r| r.ligand_id.clone()).collect(),
        labels: ds.records.iter().map(|r| r.active).collect(),
        values,
        width,
    })
}

fn percentile_stat(kind: FeatureKind, xs: &mut [f64]) -> f64 {
    let k = xs.len() as f64;
    match kind {
        FeatureKind::PercentileMean => xs.iter().sum::<f64>() / k,
        FeatureKind::PercentileStd => {
            let mean = xs.iter().sum::<f64>() / k;
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k).sqrt()
        }
        FeatureKind::PercentileMin => xs.iter().copied().fold(f64::INFINITY, f64::min),
        FeatureKind::PercentileMax => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        FeatureKind::PercentileMedian => {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = xs.len();
            if m % 2 == 1 {
                xs[m / 2]
            } else {
                (xs[m / 2 - 1] + xs[m / 2]) / 2.0
            }
        }
        FeatureKind::PercentileRange => {
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - xs.iter().copied().fold(f64::INFINITY, f64::min)
        }
        _ => unreachable!("not a percentile statistic"),
    }
}
