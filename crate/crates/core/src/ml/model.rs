//! Trained-model artifact: scaler + parameters + training log, with
//! versioned JSON serialization and evaluation against a baseline.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::data::ScreenDataset;
use crate::error::{Error, Result};
use crate::metrics::{classical_metrics, compute_report, ClassicalMetrics, MetricsReport,
    RankedLibrary, ThresholdPolicy};
use crate::num::Real;

use super::features::FeatureMatrix;
use super::net::{train_mlp, validation_ef1, EpochLog, Mlp, NetConfig, TrainingOutcome};
use super::scaler::{apply_scaler, fit_scaler, ScalerParams};
use super::split::split_dataset;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Fixed training conventions, recorded for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub hidden_activation: String,
    pub output: String,
    pub init: String,
    pub weight_decay_mode: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            hidden_activation: "relu".to_string(),
            output: "sigmoid + class-weighted bce".to_string(),
            init: "he, seeded".to_string(),
            weight_decay_mode: "decoupled".to_string(),
        }
    }
}

/// A trained re-ranker: feature recipe reference, robust scaler, network
/// parameters, and the per-epoch training log. Inference is deterministic
/// (dropout off, batch norm on running statistics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<F: Real> {
    pub format_version: u32,
    pub dtype: String,
    pub recipe_name: String,
    pub feature_names: Vec<String>,
    pub config: NetConfig<F>,
    pub conventions: Conventions,
    pub scaler: ScalerParams<F>,
    pub params: Mlp<F>,
    pub pos_weight: F,
    pub best_epoch: usize,
    pub training_log: Vec<EpochLog<F>>,
}

fn dtype_name<F: Real>() -> String {
    std::any::type_name::<F>().to_string()
}

impl<F: Real> TrainedModel<F> {
    pub fn assemble(
        outcome: TrainingOutcome<F>,
        config: NetConfig<F>,
        scaler: ScalerParams<F>,
        recipe_name: &str,
        feature_names: Vec<String>,
    ) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            dtype: dtype_name::<F>(),
            recipe_name: recipe_name.to_string(),
            feature_names,
            config,
            conventions: Conventions::default(),
            scaler,
            params: outcome.mlp,
            pos_weight: outcome.pos_weight,
            best_epoch: outcome.best_epoch,
            training_log: outcome.log,
        }
    }

    /// Deterministic inference scores (higher = more likely active) on raw
    /// (unscaled) features; the stored scaler is applied first.
    pub fn predict(&self, matrix: &FeatureMatrix<F>) -> Result<Vec<F>> {
        if matrix.width() != self.params.input_dim {
            return Err(Error::Shape(format!(
                "matrix width {} does not match model input {}",
                matrix.width(),
                self.params.input_dim
            )));
        }
        let scaled = apply_scaler(matrix, &self.scaler)?;
        Ok(self.params.predict_proba(scaled.values(), scaled.n_rows()))
    }

    /// `epoch,train_loss,val_ef1,best` per epoch.
    pub fn training_log_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_ef1,best\n");
        for e in &self.training_log {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_ef1, e.best));
        }
        out
    }

    pub fn to_json(&self) -> Result<String>
    where
        F: Serialize,
    {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()>
    where
        F: Serialize,
    {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        F: DeserializeOwned,
    {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(Error::Serialization(format!(
                "model format version {version:?} does not match supported version {MODEL_FORMAT_VERSION}"
            )));
        }
        let dtype = value.get("dtype").and_then(|v| v.as_str()).unwrap_or("");
        if dtype != dtype_name::<F>() {
            return Err(Error::Serialization(format!(
                "model dtype `{dtype}` does not match requested `{}`",
                dtype_name::<F>()
            )));
        }
        serde_json::from_value(value).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self>
    where
        F: DeserializeOwned,
    {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Model EF1% against a named baseline EF1%, as a percentage change.
pub fn delta_vs_baseline_pct<F: Real>(model_ef1: F, baseline_ef1: F) -> F {
    F::from_f64_lossy(100.0) * (model_ef1 - baseline_ef1) / baseline_ef1
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineComparison<F: Real> {
    pub name: String,
    pub baseline_ef1: F,
    pub delta_pct: F,
}

/// Evaluation of a trained model on a validation set: standard report at
/// the top-1% policy, classical metrics at the user threshold and at the
/// F1-maximizing threshold, and the uplift over a named baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvaluation<F: Real> {
    pub report: MetricsReport<F>,
    pub classical_at_threshold: ClassicalMetrics<F>,
    pub classical_at_f1max: ClassicalMetrics<F>,
    pub f1max_threshold: F,
    pub baseline: Option<BaselineComparison<F>>,
}

/// F1-maximizing decision threshold over the predicted scores; ties keep
/// the highest threshold.
fn f1_max_threshold<F: Real>(scores: &[F], labels: &[bool]) -> (F, F) {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut tp = 0usize;
    let mut included = 0usize;
    let mut best_f1 = F::zero();
    let mut best_threshold = scores[order[0]];
    let two = F::from_f64_lossy(2.0);
    for (pos, &idx) in order.iter().enumerate() {
        if labels[idx] {
            tp += 1;
        }
        included += 1;
        let next_differs = pos + 1 == order.len() || scores[order[pos + 1]] != scores[idx];
        if !next_differs {
            continue;
        }
        let f1 = if tp == 0 {
            F::zero()
        } else {
            two * F::from_count(tp) / F::from_count(included + n_pos)
        };
        if f1 > best_f1 {
            best_f1 = f1;
            best_threshold = scores[idx];
        }
    }
    (best_threshold, best_f1)
}

pub fn evaluate_model<F: Real>(
    model: &TrainedModel<F>,
    validation: &FeatureMatrix<F>,
    target_id: &str,
    alpha: F,
    user_threshold: F,
    baseline: Option<(&str, F)>,
) -> Result<ModelEvaluation<F>> {
    let scores = model.predict(validation)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Training("non-finite model prediction".to_string()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let ranked_labels: Vec<bool> = order.iter().map(|&i| validation.labels[i]).collect();
    let ranked_scores: Vec<F> = order.iter().map(|&i| scores[i]).collect();
    let lib = RankedLibrary::full_scored(ranked_labels, ranked_scores.clone())?;

    let report = compute_report(
        target_id,
        "ml",
        &model.config.name,
        &lib,
        alpha,
        ThresholdPolicy::Top1Percent,
        true,
    )?;
    let classical_at_threshold = classical_metrics(&lib, ThresholdPolicy::ScoreThreshold(user_threshold))?;
    let (f1max_threshold, _) = f1_max_threshold(&scores, &validation.labels);
    let classical_at_f1max = classical_metrics(&lib, ThresholdPolicy::ScoreThreshold(f1max_threshold))?;

    let baseline = baseline.map(|(name, ef1)| BaselineComparison {
        name: name.to_string(),
        baseline_ef1: ef1,
        delta_pct: delta_vs_baseline_pct(report.ef1, ef1),
    });

    Ok(ModelEvaluation {
        report,
        classical_at_threshold,
        classical_at_f1max,
        f1max_threshold,
        baseline,
    })
}

/// EF1% of ranking the matrix rows by one feature column (descending).
pub fn column_ef1<F: Real>(matrix: &FeatureMatrix<F>, column: usize) -> Result<F> {
    let values = matrix.column(column);
    validation_ef1(&values, &matrix.labels)
}

/// Everything `cmd train` produces for one target.
#[derive(Debug, Clone)]
pub struct TrainArtifacts<F: Real> {
    pub model: TrainedModel<F>,
    pub evaluation: ModelEvaluation<F>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Split per-target, fit the scaler on the training split only, train, and
/// evaluate on the held-out split.
#[allow(clippy::too_many_arguments)]
pub fn train_pipeline<F: Real>(
    matrix: &FeatureMatrix<F>,
    ds: &ScreenDataset,
    config: &NetConfig<F>,
    train_fraction: f64,
    split_seed: u64,
    alpha: F,
    user_threshold: F,
    baseline: Option<(&str, F)>,
) -> Result<TrainArtifacts<F>> {
    if matrix.n_rows() != ds.n_total() {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows for {} ligands",
            matrix.n_rows(),
            ds.n_total()
        )));
    }
    let (train_indices, val_indices) = split_dataset(ds, train_fraction, split_seed)?;
    let train_raw = matrix.select_rows(&train_indices);
    let val_raw = matrix.select_rows(&val_indices);
    let scaler = fit_scaler(&train_raw)?;
    let train_scaled = apply_scaler(&train_raw, &scaler)?;
    let val_scaled = apply_scaler(&val_raw, &scaler)?;
    let outcome = train_mlp(&train_scaled, &val_scaled, config)?;
    let model = TrainedModel::assemble(
        outcome,
        config.clone(),
        scaler,
        &matrix.recipe_name,
        matrix.names.clone(),
    );
    let evaluation = evaluate_model(&model, &val_raw, &ds.target_id, alpha, user_threshold, baseline)?;
    Ok(TrainArtifacts {
        model,
        evaluation,
        train_indices,
        val_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn toy_matrix(n: usize, seed: u64) -> FeatureMatrix<f64> {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 10 == 0;
            let base = if y { 1.2 } else { -0.4 };
            rows.push(vec![base + rng.next_gaussian(), base + rng.next_gaussian()]);
            labels.push(y);
        }
        FeatureMatrix::from_rows(vec!["a".into(), "b".into()], rows, labels).unwrap()
    }

    fn trained_toy() -> (TrainedModel<f64>, FeatureMatrix<f64>) {
        let train = toy_matrix(300, 1);
        let val = toy_matrix(100, 2);
        let mut config = NetConfig::deep(3);
        config.layer_widths = vec![16, 8, 1];
        config.dropout = vec![0.1, 0.0];
        let scaler = fit_scaler(&train).unwrap();
        let train_scaled = apply_scaler(&train, &scaler).unwrap();
        let val_scaled = apply_scaler(&val, &scaler).unwrap();
        let outcome = train_mlp(&train_scaled, &val_scaled, &config).unwrap();
        let model = TrainedModel::assemble(outcome, config, scaler, "adhoc", train.names.clone());
        (model, val)
    }

    #[test]
    fn json_round_trip_predicts_bit_identically() {
        let (model, val) = trained_toy();
        let json = model.to_json().unwrap();
        let restored = TrainedModel::<f64>::from_json(&json).unwrap();
        let a = model.predict(&val).unwrap();
        let b = restored.predict(&val).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn version_mismatch_fails_loudly() {
        let (model, _) = trained_toy();
        let json = model.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 99");
        let err = TrainedModel::<f64>::from_json(&json).unwrap_err();
        assert!(matches!(err, Error::Serialization(_)), "{err}");
    }

    #[test]
    fn dtype_mismatch_fails_loudly() {
        let (model, _) = trained_toy();
        let json = model.to_json().unwrap();
        let err = TrainedModel::<f32>::from_json(&json).unwrap_err();
        assert!(err.to_string().contains("dtype"), "{err}");
    }

    #[test]
    fn width_mismatch_is_shape_error() {
        let (model, _) = trained_toy();
        let narrow = FeatureMatrix::from_rows(vec!["a".into()], vec![vec![0.0]], vec![false]).unwrap();
        assert!(matches!(model.predict(&narrow), Err(Error::Shape(_))));
    }

    #[test]
    fn table5_delta_arithmetic() {
        let delta: f64 = delta_vs_baseline_pct(4.49, 2.14);
        assert!((delta - 109.8).abs() < 0.1, "{delta}");
        assert_eq!(delta_vs_baseline_pct(2.14, 2.14), 0.0);
    }

    #[test]
    fn f1max_threshold_on_clean_separation() {
        let scores = vec![0.9, 0.8, 0.3, 0.2];
        let labels = vec![true, true, false, false];
        let (threshold, f1) = f1_max_threshold(&scores, &labels);
        assert_eq!(threshold, 0.8);
        assert_eq!(f1, 1.0);
    }

    #[test]
    fn training_log_csv_has_one_best_row() {
        let (model, _) = trained_toy();
        let csv = model.training_log_csv();
        let best_rows = csv.lines().filter(|l| l.ends_with(",true")).count();
        assert_eq!(best_rows, 1);
    }
}
