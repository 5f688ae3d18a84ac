//! Adaptive-baseline heart-rate estimation.
//!
//! Heart rate is guessed from appearance alone: the subject's estimated age
//! and the average vertical motion amplitude (AMA) of the tracked face box.
//! No pulse signal is extracted. Four estimators are provided:
//!
//! | method    | prediction                                   |
//! |-----------|----------------------------------------------|
//! | `BC`      | floor of the training-set mean heart rate    |
//! | `BMotion` | line fitted on AMA                           |
//! | `BAge`    | line fitted on aggregated age                |
//! | `BAM`     | age line scaled by a motion-fitted relative residual |
//!
//! The pipeline is file based: [`dataio`] defines the formats, [`features`]
//! turns face tracks and age series into per-video rows, [`estimators`] fits
//! and applies models, and [`metrics`] scores predictions with MAE, RMSE and
//! Pearson R.

pub mod cli;
pub mod dataio;
pub mod estimators;
pub mod features;
pub mod fixtures;
pub mod metrics;
pub mod model;
pub mod regression;
pub mod synth;

pub use estimators::{fit, predict, Method};
pub use features::{aggregate_age, build_feature_rows, compute_ama, FeatureConfig};
pub use metrics::{evaluate, mae, pearson_r, rmse};
pub use model::{
    AgeSample, AgeSeries, EstimatorModel, FaceBox, FeatureRow, LinearModel, MetricsReport, Prediction, VideoMeta,
    VideoTrack, Variant,
};
pub use regression::{fit_ols, fit_relative_residual, predict_linear};
