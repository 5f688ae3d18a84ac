//! Closed-form single-predictor least squares and the relative-residual
//! second stage used by the stacked estimator.

use thiserror::Error;

use crate::model::LinearModel;

/// Relative variance floor below which a predictor is treated as constant.
pub const ZERO_VARIANCE_REL: f64 = 1e-12;

/// Smallest base prediction magnitude accepted as a divisor.
pub const BASE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),
    #[error("base prediction at index {0} is too close to zero")]
    BaseNearZero(usize),
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// True when the population variance is negligible relative to the mean.
pub(crate) fn is_negligible_variance(var: f64, mean: f64) -> bool {
    var < ZERO_VARIANCE_REL * f64::max(1.0, mean * mean)
}

/// Ordinary least squares fit of `ys` on `xs` with an intercept.
///
/// Uses population moments. A predictor with negligible variance yields the
/// mean predictor flagged as degenerate instead of an error.
pub fn fit_ols(xs: &[f64], ys: &[f64]) -> Result<LinearModel, RegressionError> {
    if xs.len() != ys.len() {
        return Err(RegressionError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(RegressionError::TooFewPoints(n));
    }
    if let Some(i) = xs
        .iter()
        .zip(ys)
        .position(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(RegressionError::NonFiniteInput(i));
    }

    let x_mean = mean(xs);
    let y_mean = mean(ys);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let var_x = sxx / n as f64;
    if is_negligible_variance(var_x, x_mean) {
        return Ok(LinearModel::constant(y_mean));
    }
    let slope = sxy / sxx;
    Ok(LinearModel::new(slope, y_mean - slope * x_mean))
}

pub fn predict_linear(model: &LinearModel, x: f64) -> f64 {
    model.slope * x + model.intercept
}

/// Relative errors `(true - base) / base` for each sample.
pub fn relative_residuals(ys_true: &[f64], ys_base: &[f64]) -> Result<Vec<f64>, RegressionError> {
    if ys_true.len() != ys_base.len() {
        return Err(RegressionError::LengthMismatch(ys_true.len(), ys_base.len()));
    }
    ys_true
        .iter()
        .zip(ys_base)
        .enumerate()
        .map(|(i, (&t, &b))| {
            if b.is_nan() || b.abs() <= BASE_EPS {
                Err(RegressionError::BaseNearZero(i))
            } else {
                Ok((t - b) / b)
            }
        })
        .collect()
}

/// Fits the relative error of a base model against a second predictor.
pub fn fit_relative_residual(
    ys_true: &[f64],
    ys_base: &[f64],
    xs: &[f64],
) -> Result<LinearModel, RegressionError> {
    if xs.len() != ys_true.len() {
        return Err(RegressionError::LengthMismatch(xs.len(), ys_true.len()));
    }
    let residuals = relative_residuals(ys_true, ys_base)?;
    fit_ols(xs, &residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exact_line() {
        let lm = fit_ols(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!(close(lm.slope, 2.0, 1e-12));
        assert!(close(lm.intercept, 1.0, 1e-12));
        assert!(!lm.degenerate);
    }

    #[test]
    fn constant_predictor_falls_back_to_mean() {
        let lm = fit_ols(&[5.0, 5.0, 5.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(lm, LinearModel::constant(20.0));
    }

    #[test]
    fn four_point_fit_matches_normal_equations() {
        // Normal equations: slope = (4*42 - 10*14) / (4*30 - 10^2) = 1.4,
        // intercept = (14 - 1.4*10) / 4 = 0.
        let lm = fit_ols(&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 4.0, 6.0]).unwrap();
        assert!(close(lm.slope, 1.4, 1e-12));
        assert!(close(lm.intercept, 0.0, 1e-12));
    }

    #[test]
    fn fit_errors() {
        assert_eq!(fit_ols(&[1.0], &[1.0, 2.0]), Err(RegressionError::LengthMismatch(1, 2)));
        assert_eq!(fit_ols(&[1.0], &[1.0]), Err(RegressionError::TooFewPoints(1)));
        assert_eq!(
            fit_ols(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(RegressionError::NonFiniteInput(1))
        );
    }

    #[test]
    fn predict_substitution() {
        assert_eq!(predict_linear(&LinearModel::new(2.0, 1.0), 3.0), 7.0);
        assert_eq!(predict_linear(&LinearModel::constant(87.0), 1234.5), 87.0);
        assert!(close(predict_linear(&LinearModel::new(1.4, -0.2), 2.0), 2.6, 1e-12));
    }

    #[test]
    fn relative_residual_cases() {
        let lm = fit_relative_residual(&[90.0, 100.0, 80.0], &[90.0, 100.0, 80.0], &[0.1, 0.5, 0.3]).unwrap();
        assert_eq!((lm.slope, lm.intercept), (0.0, 0.0));

        let lm = fit_relative_residual(&[110.0, 90.0], &[100.0, 100.0], &[1.0, 0.0]).unwrap();
        assert!(close(lm.slope, 0.2, 1e-12));
        assert!(close(lm.intercept, -0.1, 1e-12));

        assert_eq!(
            fit_relative_residual(&[80.0, 90.0], &[85.0, 0.0], &[0.0, 1.0]),
            Err(RegressionError::BaseNearZero(1))
        );
    }

    fn points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-100.0f64..100.0, -500.0f64..500.0), 3..60)
    }

    proptest! {
        #[test]
        fn residuals_sum_to_zero(pts in points()) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let lm = fit_ols(&xs, &ys).unwrap();
            prop_assume!(!lm.degenerate);
            let n = xs.len() as f64;
            let max_y = ys.iter().fold(1.0f64, |m, y| m.max(y.abs()));
            let resid: f64 = xs.iter().zip(&ys).map(|(x, y)| y - predict_linear(&lm, *x)).sum();
            prop_assert!(resid.abs() < 1e-9 * n * max_y);
            let (xm, ym) = (mean(&xs), mean(&ys));
            prop_assert!((predict_linear(&lm, xm) - ym).abs() < 1e-9 * max_y);
        }

        #[test]
        fn permutation_invariant(pts in points(), rot in 0usize..60) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
            let mut shuffled = pts.clone();
            shuffled.reverse();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            let (xs2, ys2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            let a = fit_ols(&xs, &ys).unwrap();
            let b = fit_ols(&xs2, &ys2).unwrap();
            let scale = 1.0 + a.slope.abs() + a.intercept.abs();
            prop_assert!((a.slope - b.slope).abs() <= 1e-12 * scale);
            prop_assert!((a.intercept - b.intercept).abs() <= 1e-12 * scale);
        }

        #[test]
        fn affine_response(pts in points(), a in -5.0f64..5.0, b in -100.0f64..100.0) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let base = fit_ols(&xs, &ys).unwrap();
            prop_assume!(!base.degenerate);
            let ys2: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
            let mapped = fit_ols(&xs, &ys2).unwrap();
            let scale = 1.0 + base.slope.abs() + base.intercept.abs() + b.abs();
            prop_assert!((mapped.slope - a * base.slope).abs() <= 1e-9 * scale);
            prop_assert!((mapped.intercept - (a * base.intercept + b)).abs() <= 1e-9 * scale);
        }
    }
}
