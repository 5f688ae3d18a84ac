//! The four adaptive baselines behind one fit/predict surface.
//!
//! * `BC` predicts the floored training mean for every video.
//! * `BMotion` and `BAge` are single-predictor lines on AMA and age.
//! * `BAM` fits the age line first, then regresses its relative error on AMA
//!   and back-scales: `base + base * r`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{EstimatorModel, FeatureRow, LinearModel, Prediction, ValidationError, Variant};
use crate::regression::{fit_ols, fit_relative_residual, predict_linear, RegressionError};

/// Physiological bounds applied by the optional clamp, in bpm.
pub const CLAMP_RANGE: (f64, f64) = (40.0, 240.0);

// Absorbs summation error so that an exactly integral mean is not floored
// one step too far.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Ama,
    Age,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Feature::Ama => "ama",
            Feature::Age => "age",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("video {0} has no ground-truth heart rate")]
    MissingTarget(String),
    #[error("video {video_id} is missing feature {feature}")]
    MissingFeature { video_id: String, feature: Feature },
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Bc,
    BAge,
    BMotion,
    Bam,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bc, Method::BMotion, Method::BAge, Method::Bam];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bc => "bc",
            Method::BAge => "bage",
            Method::BMotion => "bmotion",
            Method::Bam => "bam",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bc" => Ok(Method::Bc),
            "bage" => Ok(Method::BAge),
            "bmotion" => Ok(Method::BMotion),
            "bam" => Ok(Method::Bam),
            other => Err(format!("unknown method '{other}' (expected bc, bage, bmotion or bam)")),
        }
    }
}

fn targets(rows: &[FeatureRow]) -> Result<Vec<f64>, EstimatorError> {
    rows.iter()
        .map(|r| r.hr_true.ok_or_else(|| EstimatorError::MissingTarget(r.video_id.clone())))
        .collect()
}

fn feature_value(row: &FeatureRow, feature: Feature) -> Result<f64, EstimatorError> {
    let value = match feature {
        Feature::Ama => row.ama,
        Feature::Age => row.age,
    };
    value.ok_or_else(|| EstimatorError::MissingFeature {
        video_id: row.video_id.clone(),
        feature,
    })
}

fn feature_column(rows: &[FeatureRow], feature: Feature) -> Result<Vec<f64>, EstimatorError> {
    rows.iter().map(|r| feature_value(r, feature)).collect()
}

pub fn fit_bc(train: &[FeatureRow], delta: usize) -> Result<EstimatorModel, EstimatorError> {
    if train.is_empty() {
        return Err(EstimatorError::EmptyTrainingSet);
    }
    let hrs = targets(train)?;
    let mean = hrs.iter().sum::<f64>() / hrs.len() as f64;
    let c = (mean + FLOOR_SLACK).floor() as i64;
    Ok(EstimatorModel::new(Variant::Bc { c }, delta)?)
}

fn fit_single(train: &[FeatureRow], feature: Feature) -> Result<LinearModel, EstimatorError> {
    if train.is_empty() {
        return Err(EstimatorError::EmptyTrainingSet);
    }
    let xs = feature_column(train, feature)?;
    let hrs = targets(train)?;
    Ok(fit_ols(&xs, &hrs)?)
}

pub fn fit_bage(train: &[FeatureRow], delta: usize) -> Result<EstimatorModel, EstimatorError> {
    let lm = fit_single(train, Feature::Age)?;
    Ok(EstimatorModel::new(Variant::BAge { lm }, delta)?)
}

pub fn fit_bmotion(train: &[FeatureRow], delta: usize) -> Result<EstimatorModel, EstimatorError> {
    let lm = fit_single(train, Feature::Ama)?;
    Ok(EstimatorModel::new(Variant::BMotion { lm }, delta)?)
}

pub fn fit_bam(train: &[FeatureRow], delta: usize) -> Result<EstimatorModel, EstimatorError> {
    if train.is_empty() {
        return Err(EstimatorError::EmptyTrainingSet);
    }
    let ages = feature_column(train, Feature::Age)?;
    let amas = feature_column(train, Feature::Ama)?;
    let hrs = targets(train)?;

    let lm_age = fit_ols(&ages, &hrs)?;
    let base: Vec<f64> = ages.iter().map(|&a| predict_linear(&lm_age, a)).collect();
    let lm_resid = fit_relative_residual(&hrs, &base, &amas)?;
    Ok(EstimatorModel::new(Variant::Bam { lm_age, lm_resid }, delta)?)
}

pub fn fit(method: Method, train: &[FeatureRow], delta: usize) -> Result<EstimatorModel, EstimatorError> {
    match method {
        Method::Bc => fit_bc(train, delta),
        Method::BAge => fit_bage(train, delta),
        Method::BMotion => fit_bmotion(train, delta),
        Method::Bam => fit_bam(train, delta),
    }
}

fn predict_row(model: &EstimatorModel, row: &FeatureRow) -> Result<f64, EstimatorError> {
    Ok(match &model.variant {
        Variant::Bc { c } => *c as f64,
        Variant::BAge { lm } => predict_linear(lm, feature_value(row, Feature::Age)?),
        Variant::BMotion { lm } => predict_linear(lm, feature_value(row, Feature::Ama)?),
        Variant::Bam { lm_age, lm_resid } => {
            let base = predict_linear(lm_age, feature_value(row, Feature::Age)?);
            let r = predict_linear(lm_resid, feature_value(row, Feature::Ama)?);
            base + base * r
        }
    })
}

/// One prediction per row, in input order.
pub fn predict(model: &EstimatorModel, rows: &[FeatureRow]) -> Result<Vec<Prediction>, EstimatorError> {
    rows.iter()
        .map(|row| {
            let hr = predict_row(model, row)?;
            Ok(Prediction::new(row.video_id.clone(), hr)?)
        })
        .collect()
}

/// Bounds every prediction to `[lo, hi]`.
pub fn clamp_predictions(preds: &mut [Prediction], (lo, hi): (f64, f64)) {
    for p in preds {
        p.hr_pred = p.hr_pred.clamp(lo, hi);
    }
}

/// Human-readable coefficient summary, one line per fitted component.
pub fn describe(model: &EstimatorModel) -> String {
    fn line(label: &str, lm: &LinearModel) -> String {
        format!(
            "{label}: slope={} intercept={} degenerate={}",
            lm.slope, lm.intercept, lm.degenerate
        )
    }
    let mut out = format!("method: {}\ndelta: {}\n", model.variant.name(), model.delta);
    match &model.variant {
        Variant::Bc { c } => out.push_str(&format!("constant: {c} bpm\n")),
        Variant::BAge { lm } => out.push_str(&(line("age model", lm) + "\n")),
        Variant::BMotion { lm } => out.push_str(&(line("motion model", lm) + "\n")),
        Variant::Bam { lm_age, lm_resid } => {
            out.push_str(&(line("age model", lm_age) + "\n"));
            out.push_str(&(line("residual model", lm_resid) + "\n"));
        }
    }
    out
}
