//! `vscreen`: post-process multi-engine docking score tables into filtered
//! rank-consensus rankings, enrichment metrics, and ML re-rankings.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;
mod pipeline;
mod table;

use config::{FileConfig, Resolved};
use vscreen_core::Result;

#[derive(Parser)]
#[command(name = "vscreen", version, about = "Virtual-screening score post-processing")]
struct Cli {
    /// TOML config file supplying defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic step (subsampling, splits, training)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for per-target parallelism
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct InputArgs {
    /// Score table (CSV with target_id, ligand_id, label, scorer columns)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Scorer spec file (TOML)
    #[arg(long)]
    scorers: Option<PathBuf>,
}

#[derive(Args, Default, Clone)]
struct SchemeArgs {
    /// Consensus scheme(s): cc-medium, uc-strong, cc-weak, global, all, none
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// Restrict builtin schemes to one pathway: autodock, diffdock, all
    #[arg(long)]
    pathway: Option<String>,
    /// Custom consensus spec file(s)
    #[arg(long = "spec-file")]
    scheme_files: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, validate, and optionally subsample score tables
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Keep this fraction of inactives (seeded, all actives retained)
        #[arg(long)]
        subsample: Option<f64>,
    },
    /// Generate a seeded synthetic score table from a spec
    Synth {
        /// Synthetic spec (TOML); `--template` prints an example
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Print a template spec to stdout and exit
        #[arg(long)]
        template: bool,
    },
    /// Produce filtered, weighted rank-consensus rankings
    Consensus {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        schemes: SchemeArgs,
    },
    /// Compute EF/BEDROC/ROC-AUC/classical metrics and summary tables
    Metrics {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        schemes: SchemeArgs,
        /// BEDROC early-recognition exponent
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Train and evaluate a feed-forward re-ranker
    Train {
        #[command(flatten)]
        input: InputArgs,
        /// Architecture: wide (512-256-128-1, batch norm) or deep (256-128-64-1)
        #[arg(long)]
        model: Option<String>,
        /// Feature recipe file (default: built-in recipe)
        #[arg(long)]
        recipe: Option<PathBuf>,
        /// Decision threshold for the classical-metrics block
        #[arg(long)]
        threshold: Option<f64>,
        /// Baseline for the comparison table: scorer id, `best`, or `none`
        #[arg(long)]
        baseline: Option<String>,
        /// Fraction of each target's ligands (per class) used for training
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Aggregate per-target metrics files; merge model comparison tables
    Report {
        /// Per-target metrics CSV(s) from `vscreen metrics`
        #[arg(long = "per-target")]
        per_target: Vec<PathBuf>,
        /// Comparison CSV(s) from `vscreen train`
        #[arg(long = "comparison")]
        comparison: Vec<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<Resolved> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let mut r = Resolved {
        input: file.input.clone(),
        scorers: file.scorers.clone(),
        out: cli
            .out
            .clone()
            .or(file.out.clone())
            .unwrap_or_else(|| PathBuf::from("vscreen_out")),
        seed: cli.seed.or(file.seed).unwrap_or(42),
        jobs: cli.jobs.or(file.jobs),
        alpha: file.alpha.unwrap_or(20.0),
        ef_percents: file.ef_percents.clone().unwrap_or_else(|| vec![1.0, 10.0]),
        schemes: file.schemes.clone().unwrap_or_else(|| vec!["all".to_string()]),
        pathway: file.pathway.clone().unwrap_or_else(|| "all".to_string()),
        scheme_files: file.scheme_files.clone().unwrap_or_default(),
        subsample: file.subsample,
        metrics_threshold: file.metrics_threshold,
        model: file.model.clone().unwrap_or_else(|| "wide".to_string()),
        recipe: file.recipe.clone(),
        threshold: file.threshold.unwrap_or(0.5),
        train_fraction: file.train_fraction.unwrap_or(0.75),
        baseline: file.baseline.clone().unwrap_or_else(|| "best".to_string()),
        max_epochs: file.max_epochs,
        patience: file.patience,
        layer_widths: file.layer_widths.clone(),
        dropout: file.dropout.clone(),
        batch_norm: file.batch_norm,
        synth_spec: file.synth_spec.clone(),
    };

    match &cli.command {
        Command::Ingest { input, subsample } => {
            merge_input(&mut r, input);
            if subsample.is_some() {
                r.subsample = *subsample;
            }
        }
        Command::Synth { spec, .. } => {
            if spec.is_some() {
                r.synth_spec = spec.clone();
            }
        }
        Command::Consensus { input, schemes } => {
            merge_input(&mut r, input);
            merge_schemes(&mut r, schemes);
        }
        Command::Metrics { input, schemes, alpha } => {
            merge_input(&mut r, input);
            merge_schemes(&mut r, schemes);
            if let Some(a) = alpha {
                r.alpha = *a;
            }
        }
        Command::Train {
            input,
            model,
            recipe,
            threshold,
            baseline,
            train_fraction,
        } => {
            merge_input(&mut r, input);
            if let Some(m) = model {
                r.model = m.clone();
            }
            if recipe.is_some() {
                r.recipe = recipe.clone();
            }
            if let Some(t) = threshold {
                r.threshold = *t;
            }
            if let Some(b) = baseline {
                r.baseline = b.clone();
            }
            if let Some(f) = train_fraction {
                r.train_fraction = *f;
            }
        }
        Command::Report { .. } => {}
    }
    r.validate()?;
    Ok(r)
}

fn merge_input(r: &mut Resolved, input: &InputArgs) {
    if input.input.is_some() {
        r.input = input.input.clone();
    }
    if input.scorers.is_some() {
        r.scorers = input.scorers.clone();
    }
}

fn merge_schemes(r: &mut Resolved, schemes: &SchemeArgs) {
    if !schemes.schemes.is_empty() {
        r.schemes = schemes.schemes.clone();
    }
    if let Some(p) = &schemes.pathway {
        r.pathway = p.clone();
    }
    if !schemes.scheme_files.is_empty() {
        r.scheme_files = schemes.scheme_files.clone();
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Synth { template: true, .. } = &cli.command {
        print!("{}", commands::synth_template());
        return Ok(());
    }
    let cfg = resolve(cli)?;
    if let Some(jobs) = cfg.jobs {
        // ignore the error when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    std::fs::create_dir_all(&cfg.out)?;
    match &cli.command {
        Command::Ingest { .. } => commands::cmd_ingest(&cfg),
        Command::Synth { .. } => commands::cmd_synth(&cfg),
        Command::Consensus { .. } => commands::cmd_consensus(&cfg),
        Command::Metrics { .. } => commands::cmd_metrics(&cfg),
        Command::Train { .. } => commands::cmd_train(&cfg),
        Command::Report { per_target, comparison } => {
            commands::cmd_report(&cfg, per_target, comparison)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
