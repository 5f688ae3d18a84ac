//! Challenge scoring: MAE, RMSE and Pearson R.
//!
//! Sums are compensated (Neumaier) so results do not drift with input size.
//! A zero-variance side makes R undefined; it is reported as exactly 0.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::model::{MetricsReport, Prediction, VideoMeta};
use crate::regression::is_negligible_variance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no samples")]
    Empty,
    #[error("need at least 2 samples, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("no ground truth for video {0}")]
    MissingGroundTruth(String),
    #[error("duplicate prediction for video {0}")]
    DuplicatePrediction(String),
}

#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.total()
}

fn check_pair(y_true: &[f64], y_pred: &[f64]) -> Result<(), MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(i) = y_true
        .iter()
        .zip(y_pred)
        .position(|(a, b)| !a.is_finite() || !b.is_finite())
    {
        return Err(MetricsError::NonFinite(i));
    }
    Ok(())
}

pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricsError> {
    check_pair(y_true, y_pred)?;
    let total = compensated_sum(y_true.iter().zip(y_pred).map(|(t, p)| (t - p).abs()));
    Ok(total / y_true.len() as f64)
}

pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricsError> {
    check_pair(y_true, y_pred)?;
    let total = compensated_sum(y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)));
    Ok((total / y_true.len() as f64).sqrt())
}

/// Pearson correlation, or exactly 0 when either side has no variance.
pub fn pearson_r(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricsError> {
    check_pair(y_true, y_pred)?;
    let n = y_true.len();
    if n < 2 {
        return Err(MetricsError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mean_t = compensated_sum(y_true.iter().copied()) / nf;
    let mean_p = compensated_sum(y_pred.iter().copied()) / nf;

    let (mut stt, mut spp, mut stp) = (KahanSum::default(), KahanSum::default(), KahanSum::default());
    for (t, p) in y_true.iter().zip(y_pred) {
        let (dt, dp) = (t - mean_t, p - mean_p);
        stt.add(dt * dt);
        spp.add(dp * dp);
        stp.add(dt * dp);
    }
    let (stt, spp, stp) = (stt.total(), spp.total(), stp.total());
    if is_negligible_variance(stt / nf, mean_t) || is_negligible_variance(spp / nf, mean_p) {
        return Ok(0.0);
    }
    // sqrt of the product keeps R(y, y) and R(y, -y) at exactly +/-1.
    let r = stp / (stt * spp).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

/// Joins predictions with ground truth on `video_id` and scores them.
///
/// Pairs are accumulated in ascending `video_id` order regardless of input
/// order, so the report is reproducible bit for bit.
pub fn evaluate(preds: &[Prediction], metas: &[VideoMeta]) -> Result<MetricsReport, MetricsError> {
    let truth: HashMap<&str, Option<f64>> = metas.iter().map(|m| (m.video_id.as_str(), m.hr_true)).collect();
    let mut joined: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for p in preds {
        let hr = truth
            .get(p.video_id.as_str())
            .copied()
            .flatten()
            .ok_or_else(|| MetricsError::MissingGroundTruth(p.video_id.clone()))?;
        if joined.insert(p.video_id.as_str(), (hr, p.hr_pred)).is_some() {
            return Err(MetricsError::DuplicatePrediction(p.video_id.clone()));
        }
    }
    let (y_true, y_pred): (Vec<f64>, Vec<f64>) = joined.into_values().unzip();
    let n = y_true.len();
    let pearson_r = if n >= 2 { pearson_r(&y_true, &y_pred)? } else { 0.0 };
    Ok(MetricsReport {
        mae: mae(&y_true, &y_pred)?,
        rmse: rmse(&y_true, &y_pred)?,
        pearson_r,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[80.0, 90.0], &[80.0, 90.0]).unwrap(), 0.0);
        assert_eq!(mae(&[80.0, 90.0], &[85.0, 85.0]).unwrap(), 5.0);
        assert_eq!(mae(&[100.0], &[87.0]).unwrap(), 13.0);
        assert_eq!(mae(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch(1, 2)));
        assert_eq!(mae(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[80.0, 90.0], &[80.0, 90.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[80.0, 90.0], &[85.0, 85.0]).unwrap(), 5.0);
        assert!((rmse(&[80.0, 100.0], &[85.0, 85.0]).unwrap() - 11.180339887498949).abs() < 1e-12);
    }

    #[test]
    fn pearson_cases() {
        let y = [60.0, 75.0, 90.0, 82.0];
        assert_eq!(pearson_r(&y, &y).unwrap(), 1.0);
        assert_eq!(pearson_r(&y, &[87.0; 4]).unwrap(), 0.0);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson_r(&[1.0], &[1.0]), Err(MetricsError::TooFewPoints(1)));
    }

    fn meta(id: &str, hr: Option<f64>) -> VideoMeta {
        VideoMeta::new(id, 30.0, hr).unwrap()
    }

    fn pred(id: &str, hr: f64) -> Prediction {
        Prediction::new(id, hr).unwrap()
    }

    #[test]
    fn evaluate_two_videos() {
        let metas = [meta("a", Some(80.0)), meta("b", Some(90.0))];
        let report = evaluate(&[pred("b", 85.0), pred("a", 85.0)], &metas).unwrap();
        assert_eq!(
            report,
            MetricsReport {
                mae: 5.0,
                rmse: 5.0,
                pearson_r: 0.0,
                n: 2
            }
        );
    }

    #[test]
    fn evaluate_perfect() {
        let metas = [meta("a", Some(70.0)), meta("b", Some(95.0)), meta("c", Some(81.0))];
        let preds = [pred("a", 70.0), pred("b", 95.0), pred("c", 81.0)];
        let report = evaluate(&preds, &metas).unwrap();
        assert_eq!((report.mae, report.rmse, report.n), (0.0, 0.0, 3));
        assert!((report.pearson_r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_errors() {
        let metas = [meta("a", Some(70.0)), meta("b", None)];
        assert_eq!(
            evaluate(&[pred("z", 1.0)], &metas),
            Err(MetricsError::MissingGroundTruth("z".into()))
        );
        assert_eq!(
            evaluate(&[pred("b", 1.0)], &metas),
            Err(MetricsError::MissingGroundTruth("b".into()))
        );
        assert_eq!(
            evaluate(&[pred("a", 1.0), pred("a", 2.0)], &metas),
            Err(MetricsError::DuplicatePrediction("a".into()))
        );
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..80).prop_flat_map(|n| {
            (
                prop::collection::vec(40.0f64..180.0, n),
                prop::collection::vec(40.0f64..180.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn mae_below_rmse((t, p) in pairs()) {
            prop_assert!(mae(&t, &p).unwrap() <= rmse(&t, &p).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn r_bounded_and_affine((t, p) in pairs(), a in 0.1f64..10.0, b in -50.0f64..50.0) {
            let r = pearson_r(&t, &p).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
            let scaled: Vec<f64> = p.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson_r(&t, &scaled).unwrap() - r).abs() < 1e-9);
            let flipped: Vec<f64> = p.iter().map(|v| -a * v + b).collect();
            prop_assert!((pearson_r(&t, &flipped).unwrap() + r).abs() < 1e-9);
        }

        #[test]
        fn metrics_permutation_invariant((t, p) in pairs(), k in 0usize..80) {
            let k = k % t.len();
            let mut t2 = t.clone();
            let mut p2 = p.clone();
            t2.rotate_left(k);
            p2.rotate_left(k);
            prop_assert!((mae(&t, &p).unwrap() - mae(&t2, &p2).unwrap()).abs() < 1e-9);
            prop_assert!((rmse(&t, &p).unwrap() - rmse(&t2, &p2).unwrap()).abs() < 1e-9);
            prop_assert!((pearson_r(&t, &p).unwrap() - pearson_r(&t2, &p2).unwrap()).abs() < 1e-9);
        }
    }
}
