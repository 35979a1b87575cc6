//! Supervised re-ranking: feature engineering, robust scaling, stratified
//! splits, and feed-forward models trained with early stopping on
//! validation EF1%.

mod features;
mod model;
mod net;
mod scaler;
mod split;

pub use features::{build_features, FeatureDef, FeatureKind, FeatureMatrix, FeatureRecipe};
pub use model::{column_ef1, delta_vs_baseline_pct, evaluate_model, train_pipeline,
    BaselineComparison, Conventions, ModelEvaluation, TrainArtifacts, TrainedModel,
    MODEL_FORMAT_VERSION};
pub use net::{gradient_check, train_mlp, validation_ef1, BatchNormParams, DenseParams, EpochLog,
    Gradients, Mlp, NetConfig, TrainingOutcome};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams};
pub use split::split_dataset;
