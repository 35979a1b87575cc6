//! Per-target score tables: loading, validation, orientation, subsampling.
//!
//! Input is delimited text (comma-separated, UTF-8, header row) with required
//! columns `target_id, ligand_id, label` and one column per scorer; an empty
//! cell is a missing score. Scorer identity, direction, and pathway come from
//! a TOML spec file (see [`load_scorer_specs`]).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Whether a larger raw score means a better ligand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(rename = "higher")]
    HigherBetter,
    #[serde(rename = "lower")]
    LowerBetter,
}

/// Which docking engine produced the pose this scorer evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pathway {
    AutoDock,
    DiffDock,
    Shared,
}

impl Pathway {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pathway::AutoDock => "autodock",
            Pathway::DiffDock => "diffdock",
            Pathway::Shared => "shared",
        }
    }
}

/// Identity, direction convention, and pathway tag of one scoring method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub scorer_id: String,
    /// Source column in the score table; defaults to `scorer_id`.
    #[serde(default)]
    pub column: Option<String>,
    pub direction: Direction,
    pub pathway: Pathway,
}

impl ScorerSpec {
    pub fn new(scorer_id: &str, direction: Direction, pathway: Pathway) -> Self {
        Self {
            scorer_id: scorer_id.to_string(),
            column: None,
            direction,
            pathway,
        }
    }

    pub fn column_name(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.scorer_id)
    }
}

/// Canonical scorer ids used by the builtin consensus schemes.
pub const SCORER_AUTODOCK: &str = "autodock";
pub const SCORER_DIFFDOCK: &str = "diffdock";
pub const SCORER_GNINA_AUTODOCK: &str = "gnina_autodock";
pub const SCORER_GNINA_DIFFDOCK: &str = "gnina_diffdock";
pub const SCORER_NMDN_AUTODOCK: &str = "nmdn_autodock";
pub const SCORER_NMDN_DIFFDOCK: &str = "nmdn_diffdock";

/// The standard six-scorer layout: one baseline per pathway plus GNINA and
/// NMDN rescores of each pathway's poses. AutoDock reports binding energies
/// (more negative = tighter), everything else is higher-better.
pub fn canonical_six_specs() -> Vec<ScorerSpec> {
    vec![
        ScorerSpec::new(SCORER_AUTODOCK, Direction::LowerBetter, Pathway::AutoDock),
        ScorerSpec::new(SCORER_DIFFDOCK, Direction::HigherBetter, Pathway::DiffDock),
        ScorerSpec::new(SCORER_GNINA_AUTODOCK, Direction::HigherBetter, Pathway::AutoDock),
        ScorerSpec::new(SCORER_GNINA_DIFFDOCK, Direction::HigherBetter, Pathway::DiffDock),
        ScorerSpec::new(SCORER_NMDN_AUTODOCK, Direction::HigherBetter, Pathway::AutoDock),
        ScorerSpec::new(SCORER_NMDN_DIFFDOCK, Direction::HigherBetter, Pathway::DiffDock),
    ]
}

/// One ligand's labeled scores. `scores` is parallel to the dataset's
/// `scorer_specs`; `None` means the scorer failed on this ligand.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub ligand_id: String,
    pub active: bool,
    pub scores: Vec<Option<f64>>,
}

/// One target's labeled library. Immutable after construction; operations
/// return new datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenDataset {
    pub target_id: String,
    pub scorer_specs: Vec<ScorerSpec>,
    pub records: Vec<ScoreRecord>,
}

impl ScreenDataset {
    pub fn n_total(&self) -> usize {
        self.records.len()
    }

    pub fn n_actives(&self) -> usize {
        self.records.iter().filter(|r| r.active).count()
    }

    pub fn n_inactives(&self) -> usize {
        self.n_total() - self.n_actives()
    }

    pub fn scorer_index(&self, scorer_id: &str) -> Option<usize> {
        self.scorer_specs.iter().position(|s| s.scorer_id == scorer_id)
    }

    pub fn scorer_ids(&self) -> impl Iterator<Item = &str> {
        self.scorer_specs.iter().map(|s| s.scorer_id.as_str())
    }

    /// All raw scores re-expressed so larger = better.
    pub fn is_oriented(&self) -> bool {
        self.scorer_specs.iter().all(|s| s.direction == Direction::HigherBetter)
    }
}

/// Parse a TOML scorer spec file: a list of `[[scorer]]` tables with
/// `id`, `direction` (`higher`|`lower`), `pathway`
/// (`autodock`|`diffdock`|`shared`) and optional `column`.
pub fn load_scorer_specs(path: &Path) -> Result<Vec<ScorerSpec>> {
    #[derive(Deserialize)]
    struct Entry {
        id: String,
        #[serde(default)]
        column: Option<String>,
        direction: Direction,
        pathway: Pathway,
    }
    #[derive(Deserialize)]
    struct File {
        scorer: Vec<Entry>,
    }

    let text = std::fs::read_to_string(path)?;
    let file: File = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("scorer spec {}: {e}", path.display())))?;
    let specs: Vec<ScorerSpec> = file
        .scorer
        .into_iter()
        .map(|e| ScorerSpec {
            scorer_id: e.id,
            column: e.column,
            direction: e.direction,
            pathway: e.pathway,
        })
        .collect();
    let mut seen = BTreeSet::new();
    for s in &specs {
        if !seen.insert(s.scorer_id.clone()) {
            return Err(Error::Config(format!("duplicate scorer_id `{}`", s.scorer_id)));
        }
    }
    if specs.is_empty() {
        return Err(Error::Config("scorer spec file lists no scorers".into()));
    }
    Ok(specs)
}

/// Emit the TOML form of a scorer spec list (round-trips through
/// [`load_scorer_specs`]).
pub fn scorer_specs_to_toml(specs: &[ScorerSpec]) -> String {
    let mut out = String::new();
    for s in specs {
        out.push_str("[[scorer]]\n");
        let _ = writeln!(out, "id = \"{}\"", s.scorer_id);
        if let Some(col) = &s.column {
            let _ = writeln!(out, "column = \"{col}\"");
        }
        let dir = match s.direction {
            Direction::HigherBetter => "higher",
            Direction::LowerBetter => "lower",
        };
        let _ = writeln!(out, "direction = \"{dir}\"");
        let _ = writeln!(out, "pathway = \"{}\"", s.pathway.as_str());
        out.push('\n');
    }
    out
}

fn required_column(headers: &csv::StringRecord, name: &str, path: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema {
            column: name.to_string(),
            path: path.to_string(),
        })
}

/// Load a score table containing any number of targets, split per target in
/// order of first appearance. Record order within a target = file order.
pub fn load_score_tables(path: &Path, specs: &[ScorerSpec]) -> Result<Vec<ScreenDataset>> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{display}: {e}")))
            }
            _ => Error::Parse {
                path: display.clone(),
                row: 0,
                message: e.to_string(),
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: display.clone(),
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let target_col = required_column(&headers, "target_id", &display)?;
    let ligand_col = required_column(&headers, "ligand_id", &display)?;
    let label_col = required_column(&headers, "label", &display)?;
    let score_cols: Vec<usize> = specs
        .iter()
        .map(|s| required_column(&headers, s.column_name(), &display))
        .collect::<Result<_>>()?;

    let mut datasets: Vec<ScreenDataset> = Vec::new();
    let mut seen_ids: Vec<BTreeSet<String>> = Vec::new();

    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1; // 1-based over data rows
        let row = row.map_err(|e| Error::Parse {
            path: display.clone(),
            row: row_no,
            message: e.to_string(),
        })?;
        let field = |col: usize| row.get(col).unwrap_or("");

        let target_id = field(target_col).to_string();
        let ligand_id = field(ligand_col).to_string();
        let active = match field(label_col) {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse {
                    path: display.clone(),
                    row: row_no,
                    message: format!("label must be 0 or 1, got `{other}`"),
                })
            }
        };
        let mut scores = Vec::with_capacity(specs.len());
        for (spec, &col) in specs.iter().zip(&score_cols) {
            let cell = field(col);
            if cell.is_empty() {
                scores.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    path: display.clone(),
                    row: row_no,
                    message: format!("non-numeric `{}` score `{cell}`", spec.scorer_id),
                })?;
                scores.push(Some(v));
            }
        }

        let slot = match datasets.iter().position(|d| d.target_id == target_id) {
            Some(i) => i,
            None => {
                datasets.push(ScreenDataset {
                    target_id: target_id.clone(),
                    scorer_specs: specs.to_vec(),
                    records: Vec::new(),
                });
                seen_ids.push(BTreeSet::new());
                datasets.len() - 1
            }
        };
        if !seen_ids[slot].insert(ligand_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate ligand_id `{ligand_id}` in target `{target_id}`"
            )));
        }
        datasets[slot].records.push(ScoreRecord {
            ligand_id,
            active,
            scores,
        });
    }

    if datasets.is_empty() {
        return Err(Error::Validation(format!("{display}: no data rows")));
    }
    Ok(datasets)
}

/// Load a single-target score table; errors when the file mixes targets.
pub fn load_score_table(path: &Path, specs: &[ScorerSpec]) -> Result<ScreenDataset> {
    let mut all = load_score_tables(path, specs)?;
    if all.len() != 1 {
        return Err(Error::Validation(format!(
            "{}: expected one target, found {}",
            path.display(),
            all.len()
        )));
    }
    Ok(all.pop().unwrap())
}

/// Write datasets back to the standard file format. Scores print in the
/// shortest representation that parses back to the identical f64, so a
/// load -> write -> load round trip is bit-exact.
pub fn write_score_table(path: &Path, datasets: &[ScreenDataset]) -> Result<()> {
    let specs = &datasets
        .first()
        .ok_or_else(|| Error::Argument("no datasets to write".into()))?
        .scorer_specs;
    if datasets.iter().any(|d| &d.scorer_specs != specs) {
        return Err(Error::Argument(
            "datasets with different scorer layouts cannot share one table".into(),
        ));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    let mut header = vec!["target_id".to_string(), "ligand_id".to_string(), "label".to_string()];
    header.extend(specs.iter().map(|s| s.column_name().to_string()));
    w.write_record(&header).map_err(csv_io)?;
    for ds in datasets {
        for rec in &ds.records {
            let mut row = vec![
                ds.target_id.clone(),
                rec.ligand_id.clone(),
                if rec.active { "1".into() } else { "0".into() },
            ];
            row.extend(rec.scores.iter().map(|s| match s {
                Some(v) => format!("{v}"),
                None => String::new(),
            }));
            w.write_record(&row).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Re-express every score so larger = better: lower-better scores are
/// negated and all direction flags become `HigherBetter`. Idempotent.
pub fn orient_scores(ds: &ScreenDataset) -> Result<ScreenDataset> {
    for rec in &ds.records {
        if rec.scores.len() != ds.scorer_specs.len() {
            return Err(Error::Config(format!(
                "record `{}` has {} scores for {} scorers",
                rec.ligand_id,
                rec.scores.len(),
                ds.scorer_specs.len()
            )));
        }
    }
    let flip: Vec<bool> = ds
        .scorer_specs
        .iter()
        .map(|s| s.direction == Direction::LowerBetter)
        .collect();
    let specs = ds
        .scorer_specs
        .iter()
        .map(|s| ScorerSpec {
            direction: Direction::HigherBetter,
            ..s.clone()
        })
        .collect();
    let records = ds
        .records
        .iter()
        .map(|rec| ScoreRecord {
            ligand_id: rec.ligand_id.clone(),
            active: rec.active,
            scores: rec
                .scores
                .iter()
                .zip(&flip)
                .map(|(s, &f)| s.map(|v| if f { -v } else { v }))
                .collect(),
        })
        .collect();
    Ok(ScreenDataset {
        target_id: ds.target_id.clone(),
        scorer_specs: specs,
        records,
    })
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Keep every active and a seeded uniform draw (without replacement) of
/// exactly `round(fraction * n_inactives)` inactives, preserving record
/// order. Same seed, same subset.
pub fn subsample_inactives(ds: &ScreenDataset, fraction: f64, seed: u64) -> Result<ScreenDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "subsample fraction must be in (0, 1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok(ds.clone());
    }
    let inactive_positions: Vec<usize> = ds
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.active)
        .map(|(i, _)| i)
        .collect();
    let keep_count = round_half_up(fraction * inactive_positions.len() as f64);
    let mut rng = SplitMix64::new(seed);
    let chosen = rng.sample_indices(inactive_positions.len(), keep_count);
    let keep: BTreeSet<usize> = chosen.iter().map(|&i| inactive_positions[i]).collect();
    let records = ds
        .records
        .iter()
        .enumerate()
        .filter(|(i, r)| r.active || keep.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    Ok(ScreenDataset {
        target_id: ds.target_id.clone(),
        scorer_specs: ds.scorer_specs.clone(),
        records,
    })
}

/// Per-scorer missing counts, class counts, and invariant violations.
/// Violations are reported, never thrown.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub target_id: String,
    pub n_total: usize,
    pub n_actives: usize,
    pub n_inactives: usize,
    pub missing_counts: Vec<(String, usize)>,
    /// Ligands with at least one missing score.
    pub records_with_missing: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_dataset(ds: &ScreenDataset) -> ValidationReport {
    let mut violations = Vec::new();
    let n_actives = ds.n_actives();
    if n_actives == 0 {
        violations.push("no actives: enrichment undefined".to_string());
    }

    let mut seen = BTreeSet::new();
    for rec in &ds.records {
        if !seen.insert(rec.ligand_id.as_str()) {
            violations.push(format!("duplicate ligand_id `{}`", rec.ligand_id));
        }
        if rec.scores.len() != ds.scorer_specs.len() {
            violations.push(format!(
                "record `{}` has {} scores for {} scorers",
                rec.ligand_id,
                rec.scores.len(),
                ds.scorer_specs.len()
            ));
        } else if rec.scores.iter().all(|s| s.is_none()) {
            violations.push(format!("record `{}` has no scores", rec.ligand_id));
        }
    }

    let missing_counts = ds
        .scorer_specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let missing = ds
                .records
                .iter()
                .filter(|r| r.scores.get(i).is_none_or(|s| s.is_none()))
                .count();
            (spec.scorer_id.clone(), missing)
        })
        .collect();
    let records_with_missing = ds
        .records
        .iter()
        .filter(|r| r.scores.iter().any(|s| s.is_none()))
        .count();

    ValidationReport {
        target_id: ds.target_id.clone(),
        n_total: ds.n_total(),
        n_actives,
        n_inactives: ds.n_inactives(),
        missing_counts,
        records_with_missing,
        violations,
    }
}
