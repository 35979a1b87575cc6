//! Shared per-target machinery for the subcommands.

use std::collections::BTreeSet;
use std::path::Path;

use vscreen_core::data::{load_score_tables, load_scorer_specs, orient_scores, ScorerSpec,
    ScreenDataset, SCORER_AUTODOCK, SCORER_DIFFDOCK, SCORER_GNINA_AUTODOCK, SCORER_GNINA_DIFFDOCK,
    SCORER_NMDN_AUTODOCK, SCORER_NMDN_DIFFDOCK};
use vscreen_core::metrics::{compute_report_at, ThresholdPolicy};
use vscreen_core::rank::{apply_filter, assign_ranks, builtin_consensus, consensus_rank,
    ranked_library_for_consensus, ranked_library_for_scorer, ConsensusRanking, ConsensusScheme,
    ConsensusSpec, PathwayChoice, RankTable};
use vscreen_core::{Error, MetricsReport64, Result};

pub const CANONICAL_SIX: [&str; 6] = [
    SCORER_AUTODOCK,
    SCORER_DIFFDOCK,
    SCORER_GNINA_AUTODOCK,
    SCORER_GNINA_DIFFDOCK,
    SCORER_NMDN_AUTODOCK,
    SCORER_NMDN_DIFFDOCK,
];

pub fn load_targets(input: &Path, scorers: &Path) -> Result<(Vec<ScorerSpec>, Vec<ScreenDataset>)> {
    let specs = load_scorer_specs(scorers)?;
    let datasets = load_score_tables(input, &specs)?;
    Ok((specs, datasets))
}

/// Resolve the requested scheme names (plus any custom spec files) into
/// concrete consensus specs. `explicit` marks schemes the user asked for by
/// name, where a missing member scorer is an error rather than a skip.
pub struct SchemeSelection {
    pub specs: Vec<ConsensusSpec>,
    pub explicit: bool,
}

pub fn select_schemes(
    names: &[String],
    pathway: &str,
    scheme_files: &[std::path::PathBuf],
) -> Result<SchemeSelection> {
    let expanded: Vec<&str> = if names.iter().any(|n| n == "all") {
        vec!["cc-medium", "uc-strong", "cc-weak", "global"]
    } else {
        names.iter().map(String::as_str).collect()
    };
    let explicit = !names.iter().any(|n| n == "all") && !names.is_empty();

    let pathways: Vec<PathwayChoice> = match pathway {
        "autodock" => vec![PathwayChoice::AutoDock],
        "diffdock" => vec![PathwayChoice::DiffDock],
        "both" | "all" => vec![PathwayChoice::AutoDock, PathwayChoice::DiffDock],
        other => {
            return Err(Error::Argument(format!(
                "unknown pathway `{other}` (expected autodock, diffdock, or all)"
            )))
        }
    };

    let mut specs = Vec::new();
    for name in expanded {
        if name == "none" {
            continue;
        }
        let scheme = ConsensusScheme::parse(name)?;
        if scheme == ConsensusScheme::Global {
            specs.push(builtin_consensus(scheme, PathwayChoice::Both)?);
        } else {
            for &p in &pathways {
                specs.push(builtin_consensus(scheme, p)?);
            }
        }
    }
    for file in scheme_files {
        specs.push(ConsensusSpec::load(file)?);
    }
    Ok(SchemeSelection { specs, explicit })
}

pub fn scheme_applicable(spec: &ConsensusSpec, ds: &ScreenDataset) -> bool {
    spec.members().all(|m| ds.scorer_index(m).is_some())
        && spec.filter.thresholds.iter().all(|t| ds.scorer_index(&t.scorer).is_some())
}

/// Rank tables for every scorer of one oriented target.
pub fn all_rank_tables(ds: &ScreenDataset) -> Result<Vec<RankTable>> {
    ds.scorer_ids().map(|s| assign_ranks(ds, s)).collect()
}

pub fn build_consensus(
    ds: &ScreenDataset,
    tables: &[RankTable],
    spec: &ConsensusSpec,
) -> Result<ConsensusRanking> {
    let outcome = apply_filter(ds, &spec.filter)?;
    consensus_rank(ds, tables, spec, &outcome.retained)
}

/// Metric settings shared by every report of one `metrics` run.
#[derive(Debug, Clone, Copy)]
pub struct MetricSettings {
    pub alpha: f64,
    pub ef_pcts: (f64, f64),
    /// None = top-1% policy; Some(v) = score threshold v on the ranking
    /// score (oriented raw score for scorers, negated average rank for
    /// consensus schemes).
    pub threshold: Option<f64>,
}

impl MetricSettings {
    fn policy(&self) -> ThresholdPolicy<f64> {
        match self.threshold {
            Some(v) => ThresholdPolicy::ScoreThreshold(v),
            None => ThresholdPolicy::Top1Percent,
        }
    }
}

/// Per-(pathway, scheme) reports for one target: every scorer ranking plus
/// every applicable consensus scheme.
pub fn analyze_target(
    raw: &ScreenDataset,
    schemes: &[ConsensusSpec],
    explicit: bool,
    settings: MetricSettings,
) -> Result<Vec<MetricsReport64>> {
    let ds = orient_scores(raw)?;
    let tables = all_rank_tables(&ds)?;
    let mut reports = Vec::new();

    for (spec, table) in ds.scorer_specs.iter().zip(&tables) {
        let lib = ranked_library_for_scorer(&ds, table)?;
        reports.push(compute_report_at(
            &ds.target_id,
            spec.pathway.as_str(),
            &spec.scorer_id,
            &lib,
            settings.ef_pcts,
            settings.alpha,
            settings.policy(),
            true,
        )?);
    }

    for scheme in schemes {
        if !scheme_applicable(scheme, &ds) {
            if explicit {
                return Err(Error::Config(format!(
                    "scheme `{}` references scorers absent from target `{}`",
                    scheme.label(),
                    ds.target_id
                )));
            }
            continue;
        }
        let ranking = build_consensus(&ds, &tables, scheme)?;
        let lib = ranked_library_for_consensus(&ds, &ranking)?;
        reports.push(compute_report_at(
            &ds.target_id,
            &scheme.pathway,
            &scheme.name,
            &lib,
            settings.ef_pcts,
            settings.alpha,
            settings.policy(),
            false,
        )?);
    }

    Ok(reports)
}

/// Medium-consensus rankings over both pathways plus the global merge, as
/// the default feature recipe expects.
pub fn medium_consensus_trio(ds: &ScreenDataset, tables: &[RankTable]) -> Result<Vec<ConsensusRanking>> {
    let mut out = Vec::with_capacity(3);
    for (scheme, pathway) in [
        (ConsensusScheme::CcMedium, PathwayChoice::AutoDock),
        (ConsensusScheme::CcMedium, PathwayChoice::DiffDock),
        (ConsensusScheme::Global, PathwayChoice::Both),
    ] {
        let spec = builtin_consensus(scheme, pathway)?;
        out.push(build_consensus(ds, tables, &spec)?);
    }
    Ok(out)
}

pub fn has_canonical_six(ds: &ScreenDataset) -> bool {
    let ids: BTreeSet<&str> = ds.scorer_ids().collect();
    CANONICAL_SIX.iter().all(|s| ids.contains(s))
}
