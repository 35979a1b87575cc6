//! End-to-end behavior of the `vscreen` binary: exit codes, file outputs,
//! and cross-command flows on synthetic data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vscreen"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_synth_spec(dir: &Path, name: &str, signal: f64, targets: usize, n_act: usize, n_inact: usize) -> PathBuf {
    let mut spec = String::from("seed = 11\nnoise_correlation = 0.1\n\n");
    for id in [
        "autodock",
        "diffdock",
        "gnina_autodock",
        "gnina_diffdock",
        "nmdn_autodock",
        "nmdn_diffdock",
    ] {
        spec.push_str(&format!(
            "[[scorer]]\nid = \"{id}\"\nsignal_strength = {signal}\n"
        ));
        if id == "autodock" {
            spec.push_str("direction = \"lower\"\n");
        }
        let pathway = if id.contains("diffdock") { "diffdock" } else { "autodock" };
        spec.push_str(&format!("pathway = \"{pathway}\"\n\n"));
    }
    for t in 0..targets {
        spec.push_str(&format!(
            "[[target]]\nid = \"T{t}\"\nn_actives = {n_act}\nn_inactives = {n_inact}\n\n"
        ));
    }
    let path = dir.join(name);
    fs::write(&path, spec).unwrap();
    path
}

fn synth_data(dir: &Path) -> (PathBuf, PathBuf) {
    write_synth_spec(dir, "synth.toml", 1.0, 3, 15, 585);
    let out = run_in(dir, &["synth", "--spec", "synth.toml", "--out", "data"]);
    assert_ok(&out);
    (dir.join("data/scores.csv"), dir.join("data/scorers.toml"))
}

#[test]
fn missing_input_exits_3_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let (_, scorers) = synth_data(dir.path());
    let out = run_in(
        dir.path(),
        &["metrics", "--input", "nope.csv", "--scorers", scorers.to_str().unwrap(), "--out", "m"],
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.csv"), "{stderr}");
}

#[test]
fn unknown_scheme_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "metrics",
            "--input",
            scores.to_str().unwrap(),
            "--scorers",
            scorers.to_str().unwrap(),
            "--scheme",
            "bogus",
            "--out",
            "m",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_usage_exits_2() {
    let out = bin().arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn consensus_all_writes_every_applicable_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "consensus",
            "--input",
            scores.to_str().unwrap(),
            "--scorers",
            scorers.to_str().unwrap(),
            "--scheme",
            "all",
            "--out",
            "cons",
        ],
    );
    assert_ok(&out);
    // cc-medium, uc-strong, cc-weak on each pathway plus the global merge
    let rankings: Vec<String> = fs::read_dir(dir.path().join("cons"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("ranking_T0_"))
        .collect();
    assert_eq!(rankings.len(), 7, "{rankings:?}");
    for expected in [
        "ranking_T0_autodock_cc-medium.csv",
        "ranking_T0_autodock_uc-strong.csv",
        "ranking_T0_autodock_cc-weak.csv",
        "ranking_T0_diffdock_cc-medium.csv",
        "ranking_T0_diffdock_uc-strong.csv",
        "ranking_T0_diffdock_cc-weak.csv",
        "ranking_T0_global_cc-medium.csv",
    ] {
        assert!(rankings.contains(&expected.to_string()), "missing {expected}");
    }
}

#[test]
fn custom_spec_file_is_echoed_for_audit() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    let custom = "\
name = \"my-scheme\"
pathway = \"custom\"

[[filters]]
scorer = \"gnina_autodock\"
min = 0.25

[[weights]]
scorer = \"gnina_autodock\"
w = 3.0

[[weights]]
scorer = \"autodock\"
w = 1.0
";
    fs::write(dir.path().join("custom.toml"), custom).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "consensus",
            "--input",
            scores.to_str().unwrap(),
            "--scorers",
            scorers.to_str().unwrap(),
            "--scheme",
            "none",
            "--spec-file",
            "custom.toml",
            "--out",
            "cons",
        ],
    );
    assert_ok(&out);
    let audit = fs::read_to_string(dir.path().join("cons/resolved_spec_custom_my-scheme.toml")).unwrap();
    assert!(audit.contains("min = 0.25"), "{audit}");
    assert!(audit.contains("w = 3.0"), "{audit}");
    assert!(dir.path().join("cons/ranking_T0_custom_my-scheme.csv").exists());
}

#[test]
fn metrics_records_alpha_and_summary_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "metrics",
            "--input",
            scores.to_str().unwrap(),
            "--scorers",
            scorers.to_str().unwrap(),
            "--alpha",
            "20",
            "--out",
            "m",
        ],
    );
    assert_ok(&out);
    let per_target = fs::read_to_string(dir.path().join("m/per_target_metrics.csv")).unwrap();
    assert!(per_target.lines().skip(1).all(|l| l.is_empty() || l.split(',').nth(7) == Some("20")));
    let summary = fs::read_to_string(dir.path().join("m/summary.csv")).unwrap();
    assert!(summary.starts_with("pathway,scheme,median_ef1"));
    // one row per (pathway, scheme): 6 scorers + 6 pathway schemes + global
    assert_eq!(summary.lines().count() - 1, 13, "{summary}");
    let manifest = fs::read_to_string(dir.path().join("m/manifest.toml")).unwrap();
    assert!(manifest.contains("alpha = 20.0"), "{manifest}");
    assert!(manifest.contains("sha256"));
}

#[test]
fn ingest_subsample_is_seed_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    for out_dir in ["i1", "i2"] {
        let out = run_in(
            dir.path(),
            &[
                "ingest",
                "--input",
                scores.to_str().unwrap(),
                "--scorers",
                scorers.to_str().unwrap(),
                "--subsample",
                "0.2",
                "--seed",
                "9",
                "--out",
                out_dir,
            ],
        );
        assert_ok(&out);
    }
    let a = fs::read(dir.path().join("i1/ingested.csv")).unwrap();
    let b = fs::read(dir.path().join("i2/ingested.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_signal_synth_yields_near_random_metrics() {
    let dir = tempfile::tempdir().unwrap();
    write_synth_spec(dir.path(), "zero.toml", 0.0, 10, 100, 1900);
    let out = run_in(dir.path(), &["synth", "--spec", "zero.toml", "--out", "zdata"]);
    assert_ok(&out);
    let out = run_in(
        dir.path(),
        &[
            "metrics",
            "--input",
            "zdata/scores.csv",
            "--scorers",
            "zdata/scorers.toml",
            "--scheme",
            "none",
            "--out",
            "zm",
        ],
    );
    assert_ok(&out);
    let per_target = fs::read_to_string(dir.path().join("zm/per_target_metrics.csv")).unwrap();
    let efs: Vec<f64> = per_target
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty() && l.split(',').nth(2) == Some("autodock"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(efs.len(), 10);
    let mean = efs.iter().sum::<f64>() / efs.len() as f64;
    assert!((0.5..=1.5).contains(&mean), "mean EF1 {mean} from {efs:?}");
}

#[test]
fn commands_do_not_mutate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    let scores_before = fs::read(&scores).unwrap();
    let scorers_before = fs::read(&scorers).unwrap();
    for (cmd, out_dir) in [("metrics", "m"), ("consensus", "c"), ("ingest", "i")] {
        assert_ok(&run_in(
            dir.path(),
            &[
                cmd,
                "--input",
                scores.to_str().unwrap(),
                "--scorers",
                scorers.to_str().unwrap(),
                "--out",
                out_dir,
            ],
        ));
    }
    assert_eq!(fs::read(&scores).unwrap(), scores_before);
    assert_eq!(fs::read(&scorers).unwrap(), scorers_before);
}

#[test]
fn results_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    fs::write(
        dir.path().join("small.toml"),
        "layer_widths = [12, 1]\ndropout = [0.0]\nbatch_norm = false\nmax_epochs = 4\npatience = 2\n",
    )
    .unwrap();
    for (jobs, out_dir) in [("1", "j1"), ("2", "j2")] {
        let out = run_in(
            dir.path(),
            &[
                "train",
                "--config",
                "small.toml",
                "--input",
                scores.to_str().unwrap(),
                "--scorers",
                scorers.to_str().unwrap(),
                "--model",
                "deep",
                "--seed",
                "13",
                "--jobs",
                jobs,
                "--out",
                out_dir,
            ],
        );
        assert_ok(&out);
    }
    let a = fs::read(dir.path().join("j1/model_deep.json")).unwrap();
    let b = fs::read(dir.path().join("j2/model_deep.json")).unwrap();
    assert_eq!(a, b, "model parameters differ across thread counts");
    assert_eq!(
        fs::read(dir.path().join("j1/comparison.csv")).unwrap(),
        fs::read(dir.path().join("j2/comparison.csv")).unwrap()
    );
}

#[test]
fn report_aggregates_and_merges() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, scorers) = synth_data(dir.path());
    assert_ok(&run_in(
        dir.path(),
        &[
            "metrics",
            "--input",
            scores.to_str().unwrap(),
            "--scorers",
            scorers.to_str().unwrap(),
            "--out",
            "m",
        ],
    ));
    // externally computed rows merge with the Ref. baseline
    fs::write(
        dir.path().join("external.csv"),
        "rank,model,ef1,delta_vs_baseline_pct\n1,tree ensemble,3.8,\n2,gnina (baseline),2.14,\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "report",
            "--per-target",
            "m/per_target_metrics.csv",
            "--comparison",
            "external.csv",
            "--out",
            "rep",
        ],
    );
    assert_ok(&out);
    assert!(dir.path().join("rep/summary.csv").exists());
    let merged = fs::read_to_string(dir.path().join("rep/merged_comparison.csv")).unwrap();
    let tree_row = merged.lines().find(|l| l.contains("tree ensemble")).unwrap();
    let delta: f64 = tree_row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((delta - 77.570093457944).abs() < 1e-6, "{merged}");
}
