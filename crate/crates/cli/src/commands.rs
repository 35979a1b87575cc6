//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use vscreen_core::data::{orient_scores, scorer_specs_to_toml, subsample_inactives,
    validate_dataset, write_score_table, ScorerSpec, ScreenDataset};
use vscreen_core::metrics::MetricsReport;
use vscreen_core::ml::{apply_scaler, build_features, column_ef1, evaluate_model, fit_scaler,
    split_dataset, train_mlp, FeatureMatrix, FeatureRecipe, NetConfig, TrainedModel};
use vscreen_core::synth::{generate_synthetic, SyntheticScorer, SyntheticSpec};
use vscreen_core::{Error, MetricsReport64, Result};

use crate::config::Resolved;
use crate::manifest::write_manifest;
use crate::pipeline::{analyze_target, has_canonical_six, load_targets, medium_consensus_trio,
    select_schemes, all_rank_tables, CANONICAL_SIX};
use crate::table::{fmt_f64, per_target_csv, parse_per_target_csv, render_aligned,
    render_summary_table, summarize, summary_csv};

fn require<'a>(value: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{what} is required (flag or config file)")))
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

// ---------------------------------------------------------------- ingest

pub fn cmd_ingest(cfg: &Resolved) -> Result<()> {
    let input = require(&cfg.input, "--input")?;
    let scorers = require(&cfg.scorers, "--scorers")?;
    let (_, datasets) = load_targets(input, scorers)?;

    let processed: Vec<ScreenDataset> = datasets
        .iter()
        .map(|ds| match cfg.subsample {
            Some(fraction) => subsample_inactives(ds, fraction, cfg.seed),
            None => Ok(ds.clone()),
        })
        .collect::<Result<_>>()?;

    let mut validation = String::from(
        "target_id,n_total,n_actives,n_inactives,records_with_missing,violations\n",
    );
    let mut missing = String::from("target_id,scorer_id,missing_count\n");
    let mut table = vec![vec![
        "target".to_string(),
        "ligands".to_string(),
        "actives".to_string(),
        "inactives".to_string(),
        "violations".to_string(),
    ]];
    for ds in &processed {
        let report = validate_dataset(ds);
        let _ = writeln!(
            validation,
            "{},{},{},{},{},{}",
            report.target_id,
            report.n_total,
            report.n_actives,
            report.n_inactives,
            report.records_with_missing,
            report.violations.join("; "),
        );
        for (scorer, count) in &report.missing_counts {
            let _ = writeln!(missing, "{},{scorer},{count}", report.target_id);
        }
        for v in &report.violations {
            eprintln!("{}: {v}", report.target_id);
        }
        table.push(vec![
            report.target_id.clone(),
            report.n_total.to_string(),
            report.n_actives.to_string(),
            report.n_inactives.to_string(),
            report.violations.len().to_string(),
        ]);
    }
    write_out(&cfg.out, "validation.csv", &validation)?;
    write_out(&cfg.out, "missing_counts.csv", &missing)?;
    if cfg.subsample.is_some() {
        write_score_table(&cfg.out.join("ingested.csv"), &processed)?;
    }
    print!("{}", render_aligned(&table));
    write_manifest("ingest", cfg, &[input, scorers])
}

// ----------------------------------------------------------------- synth

#[derive(Debug, Deserialize)]
struct SynthTarget {
    id: String,
    n_actives: usize,
    n_inactives: usize,
    #[serde(default)]
    scorer: Vec<SyntheticScorer>,
}

#[derive(Debug, Deserialize)]
struct SynthFile {
    seed: u64,
    #[serde(default)]
    noise_correlation: f64,
    #[serde(default)]
    scorer: Vec<SyntheticScorer>,
    target: Vec<SynthTarget>,
}

pub fn cmd_synth(cfg: &Resolved) -> Result<()> {
    let spec_path = require(&cfg.synth_spec, "--spec")?;
    let text = std::fs::read_to_string(spec_path)?;
    let file: SynthFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("synth spec: {e}")))?;
    if file.target.is_empty() {
        return Err(Error::Config("synth spec defines no targets".to_string()));
    }

    let mut datasets = Vec::new();
    let mut shared_specs: Option<Vec<ScorerSpec>> = None;
    for (idx, target) in file.target.iter().enumerate() {
        let scorers = if target.scorer.is_empty() {
            file.scorer.clone()
        } else {
            target.scorer.clone()
        };
        if scorers.is_empty() {
            return Err(Error::Config(format!(
                "target `{}` has no scorers (define [[scorer]] or [[target.scorer]])",
                target.id
            )));
        }
        let spec = SyntheticSpec {
            target_id: target.id.clone(),
            n_actives: target.n_actives,
            n_inactives: target.n_inactives,
            noise_correlation: file.noise_correlation,
            seed: file.seed.wrapping_add(idx as u64),
            scorers,
        };
        let ds = generate_synthetic(&spec)?;
        match &shared_specs {
            None => shared_specs = Some(ds.scorer_specs.clone()),
            Some(existing) if *existing != ds.scorer_specs => {
                return Err(Error::Config(
                    "all targets must share one scorer layout for a single score table".to_string(),
                ))
            }
            _ => {}
        }
        datasets.push(ds);
    }

    write_score_table(&cfg.out.join("scores.csv"), &datasets)?;
    write_out(
        &cfg.out,
        "scorers.toml",
        &scorer_specs_to_toml(&shared_specs.unwrap()),
    )?;
    let mut table = vec![vec!["target".to_string(), "actives".to_string(), "inactives".to_string()]];
    for ds in &datasets {
        table.push(vec![
            ds.target_id.clone(),
            ds.n_actives().to_string(),
            ds.n_inactives().to_string(),
        ]);
    }
    print!("{}", render_aligned(&table));
    write_manifest("synth", cfg, &[spec_path])
}

// ------------------------------------------------------------- consensus

pub fn cmd_consensus(cfg: &Resolved) -> Result<()> {
    let input = require(&cfg.input, "--input")?;
    let scorers = require(&cfg.scorers, "--scorers")?;
    let (_, datasets) = load_targets(input, scorers)?;
    let selection = select_schemes(&cfg.schemes, &cfg.pathway, &cfg.scheme_files)?;
    if selection.specs.is_empty() {
        return Err(Error::Config("no consensus schemes selected".to_string()));
    }

    for spec in &selection.specs {
        write_out(
            &cfg.out,
            &format!("resolved_spec_{}_{}.toml", spec.pathway, spec.name),
            &spec.to_toml(),
        )?;
    }

    let per_target: Vec<_> = datasets
        .par_iter()
        .map(|raw| -> Result<_> {
            let ds = orient_scores(raw)?;
            let tables = all_rank_tables(&ds)?;
            let mut rankings = Vec::new();
            for spec in &selection.specs {
                if !crate::pipeline::scheme_applicable(spec, &ds) {
                    if selection.explicit {
                        return Err(Error::Config(format!(
                            "scheme `{}` references scorers absent from target `{}`",
                            spec.label(),
                            ds.target_id
                        )));
                    }
                    continue;
                }
                rankings.push(crate::pipeline::build_consensus(&ds, &tables, spec)?);
            }
            Ok((ds.target_id.clone(), ds.n_total(), rankings))
        })
        .collect::<Result<_>>()?;
    let mut per_target = per_target;
    per_target.sort_by(|a, b| a.0.cmp(&b.0));

    let mut remaining = String::from(
        "target_id,pathway,scheme,retained,n_total,actives_remaining_pct\n",
    );
    let mut table = vec![vec![
        "target".to_string(),
        "pathway".to_string(),
        "scheme".to_string(),
        "retained".to_string(),
        "actives-left".to_string(),
    ]];
    for (target_id, n_total, rankings) in &per_target {
        for ranking in rankings {
            write_out(
                &cfg.out,
                &format!("ranking_{target_id}_{}_{}.csv", ranking.pathway, ranking.scheme),
                &ranking.to_csv_string(),
            )?;
            let _ = writeln!(
                remaining,
                "{target_id},{},{},{},{n_total},{}",
                ranking.pathway,
                ranking.scheme,
                ranking.retained_count(),
                fmt_f64(ranking.actives_remaining_pct),
            );
            table.push(vec![
                target_id.clone(),
                ranking.pathway.clone(),
                ranking.scheme.clone(),
                ranking.retained_count().to_string(),
                format!("{:.1}%", ranking.actives_remaining_pct),
            ]);
        }
    }
    write_out(&cfg.out, "actives_remaining.csv", &remaining)?;
    print!("{}", render_aligned(&table));
    write_manifest("consensus", cfg, &[input, scorers])
}

// --------------------------------------------------------------- metrics

pub fn cmd_metrics(cfg: &Resolved) -> Result<()> {
    let input = require(&cfg.input, "--input")?;
    let scorers = require(&cfg.scorers, "--scorers")?;
    let (_, datasets) = load_targets(input, scorers)?;
    let selection = select_schemes(&cfg.schemes, &cfg.pathway, &cfg.scheme_files)?;

    let settings = crate::pipeline::MetricSettings {
        alpha: cfg.alpha,
        ef_pcts: (cfg.ef_percents[0], cfg.ef_percents[1]),
        threshold: cfg.metrics_threshold,
    };
    let analyses: Vec<_> = datasets
        .par_iter()
        .map(|raw| analyze_target(raw, &selection.specs, selection.explicit, settings))
        .collect::<Result<_>>()?;
    let mut reports: Vec<MetricsReport64> = analyses.into_iter().flatten().collect();
    reports.sort_by(|a, b| {
        (&a.target_id, &a.pathway, &a.scheme).cmp(&(&b.target_id, &b.pathway, &b.scheme))
    });

    write_out(&cfg.out, "per_target_metrics.csv", &per_target_csv(&reports))?;
    let rows = summarize(&reports)?;
    write_out(&cfg.out, "summary.csv", &summary_csv(&rows))?;
    print!("{}", render_summary_table(&rows));
    write_manifest("metrics", cfg, &[input, scorers])
}

// ----------------------------------------------------------------- train

fn net_config(cfg: &Resolved) -> Result<NetConfig<f64>> {
    let mut net: NetConfig<f64> = match cfg.model.as_str() {
        "wide" => NetConfig::wide(cfg.seed),
        "deep" => NetConfig::deep(cfg.seed),
        other => return Err(Error::Config(format!("unknown model `{other}` (wide|deep)"))),
    };
    if let Some(widths) = &cfg.layer_widths {
        net.layer_widths = widths.clone();
    }
    if let Some(dropout) = &cfg.dropout {
        net.dropout = dropout.clone();
    }
    if let Some(bn) = cfg.batch_norm {
        net.batch_norm = bn;
    }
    if let Some(epochs) = cfg.max_epochs {
        net.max_epochs = epochs;
    }
    if let Some(patience) = cfg.patience {
        net.patience = patience;
    }
    net.validate()?;
    Ok(net)
}

struct TargetFeatures {
    matrix: FeatureMatrix<f64>,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
}

fn featurize_target(
    raw: &ScreenDataset,
    recipe: &FeatureRecipe,
    needs_consensus: bool,
    train_fraction: f64,
    seed: u64,
) -> Result<TargetFeatures> {
    let ds = orient_scores(raw)?;
    let tables = all_rank_tables(&ds)?;
    let rankings = if needs_consensus {
        medium_consensus_trio(&ds, &tables)?
    } else {
        Vec::new()
    };
    let matrix = build_features(&ds, &tables, &rankings, recipe)?;
    let (train_idx, val_idx) = split_dataset(&ds, train_fraction, seed)?;
    Ok(TargetFeatures {
        matrix,
        train_idx,
        val_idx,
    })
}

pub fn cmd_train(cfg: &Resolved) -> Result<()> {
    let input = require(&cfg.input, "--input")?;
    let scorers = require(&cfg.scorers, "--scorers")?;
    let (_, datasets) = load_targets(input, scorers)?;

    let recipe = match &cfg.recipe {
        Some(path) => FeatureRecipe::load(path)?,
        None => {
            if datasets.iter().all(has_canonical_six) {
                FeatureRecipe::default_six()
            } else {
                let ids: Vec<&str> = datasets[0].scorer_ids().collect();
                FeatureRecipe::for_scorers(&ids)
            }
        }
    };
    let needs_consensus = recipe
        .features
        .iter()
        .any(|f| f.kind == vscreen_core::ml::FeatureKind::ConsensusPercentile);

    let featurized: Vec<TargetFeatures> = datasets
        .par_iter()
        .map(|raw| featurize_target(raw, &recipe, needs_consensus, cfg.train_fraction, cfg.seed))
        .collect::<Result<_>>()?;

    let train_parts: Vec<FeatureMatrix<f64>> =
        featurized.iter().map(|t| t.matrix.select_rows(&t.train_idx)).collect();
    let val_parts: Vec<FeatureMatrix<f64>> =
        featurized.iter().map(|t| t.matrix.select_rows(&t.val_idx)).collect();
    let train_raw = FeatureMatrix::concat(&train_parts)?;
    let val_raw = FeatureMatrix::concat(&val_parts)?;

    let scaler = fit_scaler(&train_raw)?;
    let train_scaled = apply_scaler(&train_raw, &scaler)?;
    let val_scaled = apply_scaler(&val_raw, &scaler)?;

    let net = net_config(cfg)?;
    let outcome = train_mlp(&train_scaled, &val_scaled, &net)?;
    let model = TrainedModel::assemble(
        outcome,
        net.clone(),
        scaler,
        &recipe.name,
        train_raw.names.clone(),
    );

    let baseline = resolve_baseline(&cfg.baseline, &val_raw)?;
    let evaluation = evaluate_model(
        &model,
        &val_raw,
        "pooled-validation",
        cfg.alpha,
        cfg.threshold,
        baseline.as_ref().map(|(n, v)| (n.as_str(), *v)),
    )?;

    model.save(&cfg.out.join(format!("model_{}.json", net.name)))?;
    write_out(
        &cfg.out,
        &format!("training_log_{}.csv", net.name),
        &model.training_log_csv(),
    )?;

    // Comparison table: trained model against the classical baseline
    let mut rows: Vec<(String, f64, Option<f64>)> =
        vec![(format!("{} neural network", net.name), evaluation.report.ef1, None)];
    if let Some(cmp) = &evaluation.baseline {
        rows[0].2 = Some(cmp.delta_pct);
        rows.push((format!("{} (baseline)", cmp.name), cmp.baseline_ef1, None));
    }
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut comparison = String::from("rank,model,ef1,delta_vs_baseline_pct\n");
    let mut table = vec![vec![
        "rank".to_string(),
        "model".to_string(),
        "EF@1%".to_string(),
        "dvs baseline".to_string(),
    ]];
    for (i, (name, ef1, delta)) in rows.iter().enumerate() {
        let delta_txt = delta.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(comparison, "{},{name},{},{delta_txt}", i + 1, fmt_f64(*ef1));
        table.push(vec![
            (i + 1).to_string(),
            name.clone(),
            format!("{ef1:.4}"),
            delta.map(|d| format!("{d:+.1}%")).unwrap_or_else(|| "Ref.".to_string()),
        ]);
    }
    write_out(&cfg.out, "comparison.csv", &comparison)?;

    let mut eval = String::from(
        "policy,accuracy,precision,recall,specificity,f1,balanced_accuracy,mcc\n",
    );
    for c in [
        &evaluation.report.classical,
        &evaluation.classical_at_threshold,
        &evaluation.classical_at_f1max,
    ] {
        let _ = writeln!(
            eval,
            "{},{},{},{},{},{},{},{}",
            c.policy,
            fmt_f64(c.accuracy),
            fmt_f64(c.precision),
            fmt_f64(c.recall),
            fmt_f64(c.specificity),
            fmt_f64(c.f1),
            fmt_f64(c.balanced_accuracy),
            fmt_f64(c.mcc),
        );
    }
    write_out(&cfg.out, &format!("eval_{}.csv", net.name), &eval)?;

    print!("{}", render_aligned(&table));
    println!(
        "validation EF1% {:.4}, best epoch {}, f1-max threshold {:.4}",
        evaluation.report.ef1, model.best_epoch, evaluation.f1max_threshold
    );
    write_manifest("train", cfg, &[input, scorers])
}

/// Baseline EF1% on the pooled validation split: a named scorer's raw
/// feature, or `best` = the strongest single raw-score feature.
fn resolve_baseline(name: &str, val: &FeatureMatrix<f64>) -> Result<Option<(String, f64)>> {
    if name == "none" {
        return Ok(None);
    }
    let raw_columns: Vec<(usize, &String)> = val
        .names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with("raw_"))
        .collect();
    if name == "best" {
        let mut best: Option<(String, f64)> = None;
        for (idx, col_name) in &raw_columns {
            let ef1 = column_ef1(val, *idx)?;
            if best.as_ref().is_none_or(|(_, b)| ef1 > *b) {
                best = Some((col_name.trim_start_matches("raw_").to_string(), ef1));
            }
        }
        return best
            .map(Some)
            .ok_or_else(|| Error::Config("no raw score features to use as baseline".to_string()));
    }
    let wanted = format!("raw_{name}");
    let (idx, _) = raw_columns
        .iter()
        .find(|(_, n)| **n == wanted)
        .ok_or_else(|| Error::Config(format!("baseline scorer `{name}` has no raw feature")))?;
    Ok(Some((name.to_string(), column_ef1(val, *idx)?)))
}

// ---------------------------------------------------------------- report

pub fn cmd_report(cfg: &Resolved, per_target: &[std::path::PathBuf], comparisons: &[std::path::PathBuf]) -> Result<()> {
    if per_target.is_empty() && comparisons.is_empty() {
        return Err(Error::Config(
            "report needs --per-target and/or --comparison files".to_string(),
        ));
    }
    let mut inputs: Vec<&Path> = Vec::new();

    if !per_target.is_empty() {
        let mut reports: Vec<MetricsReport<f64>> = Vec::new();
        for path in per_target {
            inputs.push(path);
            reports.extend(parse_per_target_csv(&std::fs::read_to_string(path)?)?);
        }
        reports.sort_by(|a, b| {
            (&a.target_id, &a.pathway, &a.scheme).cmp(&(&b.target_id, &b.pathway, &b.scheme))
        });
        let rows = summarize(&reports)?;
        write_out(&cfg.out, "summary.csv", &summary_csv(&rows))?;
        print!("{}", render_summary_table(&rows));
    }

    if !comparisons.is_empty() {
        let mut model_rows: Vec<(String, f64)> = Vec::new();
        let mut baseline: Option<(String, f64)> = None;
        for path in comparisons {
            inputs.push(path);
            let text = std::fs::read_to_string(path)?;
            for (no, line) in text.lines().enumerate().skip(1) {
                if line.is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() != 4 {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        row: no,
                        message: "expected rank,model,ef1,delta_vs_baseline_pct".to_string(),
                    });
                }
                let ef1: f64 = cols[2].parse().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    row: no,
                    message: format!("bad EF value `{}`", cols[2]),
                })?;
                if cols[1].contains("(baseline)") {
                    if baseline.is_none() {
                        baseline = Some((cols[1].to_string(), ef1));
                    }
                } else {
                    model_rows.push((cols[1].to_string(), ef1));
                }
            }
        }
        model_rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let mut merged = String::from("rank,model,ef1,delta_vs_baseline_pct\n");
        let mut table = vec![vec![
            "rank".to_string(),
            "model".to_string(),
            "EF@1%".to_string(),
            "dvs baseline".to_string(),
        ]];
        let mut all_rows = model_rows;
        if let Some((name, ef1)) = &baseline {
            all_rows.push((name.clone(), *ef1));
            all_rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        }
        for (i, (name, ef1)) in all_rows.iter().enumerate() {
            let delta = match &baseline {
                Some((bname, bef1)) if bname != name => {
                    Some(vscreen_core::ml::delta_vs_baseline_pct(*ef1, *bef1))
                }
                _ => None,
            };
            let _ = writeln!(
                merged,
                "{},{name},{},{}",
                i + 1,
                fmt_f64(*ef1),
                delta.map(fmt_f64).unwrap_or_default()
            );
            table.push(vec![
                (i + 1).to_string(),
                name.clone(),
                format!("{ef1:.4}"),
                delta.map(|d| format!("{d:+.1}%")).unwrap_or_else(|| "Ref.".to_string()),
            ]);
        }
        write_out(&cfg.out, "merged_comparison.csv", &merged)?;
        print!("{}", render_aligned(&table));
    }

    write_manifest("report", cfg, &inputs)
}

/// The canonical six-scorer synthetic template, usable as a starting point.
pub fn synth_template() -> String {
    let mut out = String::from("seed = 42\nnoise_correlation = 0.2\n\n");
    for id in CANONICAL_SIX {
        out.push_str("[[scorer]]\n");
        let _ = writeln!(out, "id = \"{id}\"");
        let _ = writeln!(out, "signal_strength = 1.0");
        if id == "autodock" {
            out.push_str("direction = \"lower\"\n");
        }
        let pathway = if id.ends_with("diffdock") || id == "diffdock" {
            "diffdock"
        } else {
            "autodock"
        };
        let _ = writeln!(out, "pathway = \"{pathway}\"");
        out.push('\n');
    }
    out.push_str("[[target]]\nid = \"T1\"\nn_actives = 25\nn_inactives = 2475\n");
    out
}
