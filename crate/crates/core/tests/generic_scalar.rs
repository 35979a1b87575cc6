//! The numeric core at both scalar types: everything that is generic over
//! `Real` must work at f32 as well as f64.

use vscreen_core::metrics::{bedroc, classical_metrics, enrichment_factor, roc_auc,
    RankedLibrary, ThresholdPolicy};
use vscreen_core::ml::{apply_scaler, fit_scaler, train_mlp, FeatureMatrix, NetConfig};
use vscreen_core::rank::weighted_average_rank;
use vscreen_core::rng::SplitMix64;

fn labels(n: usize, actives: &[usize]) -> Vec<bool> {
    let mut out = vec![false; n];
    for &a in actives {
        out[a] = true;
    }
    out
}

#[test]
fn metrics_agree_across_scalars() {
    let lab = labels(400, &[0, 7, 33, 150, 399]);
    let lib64 = RankedLibrary::<f64>::full(lab.clone()).unwrap();
    let lib32 = RankedLibrary::<f32>::full(lab.clone()).unwrap();

    let ef64 = enrichment_factor(&lib64, 1.0f64).unwrap();
    let ef32 = enrichment_factor(&lib32, 1.0f32).unwrap();
    assert!((ef64 - ef32 as f64).abs() < 1e-6);

    let b64 = bedroc(&lib64, 20.0f64).unwrap();
    let b32 = bedroc(&lib32, 20.0f32).unwrap();
    assert!((b64 - b32 as f64).abs() < 1e-5, "{b64} vs {b32}");

    let mut rng = SplitMix64::new(3);
    let scores64: Vec<f64> = (0..400).map(|_| rng.next_gaussian()).collect();
    let scores32: Vec<f32> = scores64.iter().map(|&v| v as f32).collect();
    let a64: f64 = roc_auc(&scores64, &lab).unwrap();
    let a32: f32 = roc_auc(&scores32, &lab).unwrap();
    assert!((a64 - a32 as f64).abs() < 1e-5);

    let c64 = classical_metrics(&lib64, ThresholdPolicy::Top1Percent).unwrap();
    let c32 = classical_metrics(&lib32, ThresholdPolicy::Top1Percent).unwrap();
    assert_eq!(c64.true_pos, c32.true_pos);
    assert!((c64.balanced_accuracy - c32.balanced_accuracy as f64).abs() < 1e-6);
}

#[test]
fn consensus_kernel_works_at_f32() {
    let avg: f32 = weighted_average_rank(&[15, 76, 939], &[2.0f32, 1.0, 1.0]).unwrap();
    assert!((avg - 261.25).abs() < 1e-3);
}

#[test]
fn training_runs_at_f32() {
    let mut rng = SplitMix64::new(8);
    let mut rows: Vec<Vec<f32>> = Vec::new();
    let mut lab = Vec::new();
    for i in 0..160 {
        let y = i % 4 == 0;
        let base: f32 = if y { 1.2 } else { -1.2 };
        rows.push(vec![
            base + 0.4 * rng.next_gaussian() as f32,
            base + 0.4 * rng.next_gaussian() as f32,
        ]);
        lab.push(y);
    }
    let matrix = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], rows, lab).unwrap();
    let scaler = fit_scaler(&matrix).unwrap();
    let scaled = apply_scaler(&matrix, &scaler).unwrap();

    let mut config: NetConfig<f32> = NetConfig::deep(4);
    config.layer_widths = vec![8, 1];
    config.dropout = vec![0.1];
    config.max_epochs = 10;
    let out = train_mlp(&scaled, &scaled, &config).unwrap();
    let preds = out.mlp.predict_proba(scaled.values(), scaled.n_rows());
    let auc: f32 = roc_auc(&preds, &matrix.labels).unwrap();
    assert!(auc > 0.9, "f32 training AUC {auc}");
}
