//! Shared domain types.
//!
//! Every type here is plain immutable data. Types with invariants expose a
//! validating constructor; the struct fields stay public so loaders and tests
//! can build values directly and then run them through `validate`.

use thiserror::Error;

/// Inclusive bounds accepted for a single age sample, in years.
pub const AGE_RANGE: (f64, f64) = (1.0, 120.0);

/// Exclusive bounds accepted for a ground-truth heart rate, in bpm.
pub const HR_RANGE: (f64, f64) = (0.0, 300.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("duplicate frame index {0}")]
    DuplicateFrame(usize),
    #[error("frame index {0} is out of order")]
    UnsortedFrames(usize),
    #[error("non-positive box extent at frame {frame_idx} (w={w}, h={h})")]
    NonPositiveExtent { frame_idx: usize, w: f64, h: f64 },
    #[error("frame index {frame_idx} is not below frame count {frame_count}")]
    FrameOutOfRange { frame_idx: usize, frame_count: usize },
    #[error("frame count must be positive")]
    ZeroFrameCount,
    #[error("fps must be positive and finite, got {0}")]
    NonPositiveFps(f64),
    #[error("non-finite box coordinate at frame {0}")]
    NonFiniteBox(usize),
    #[error("heart rate {0} bpm outside (0, 300)")]
    HeartRateOutOfRange(f64),
    #[error("age {age} at frame {frame_idx} outside [1, 120]")]
    AgeOutOfRange { frame_idx: usize, age: f64 },
    #[error("ama must be finite and non-negative, got {0}")]
    NegativeAma(f64),
    #[error("prediction for {0} is not finite")]
    NonFinitePrediction(String),
    #[error("constant estimate must be positive, got {0}")]
    NonPositiveConstant(i64),
    #[error("delta must be at least 1")]
    ZeroDelta,
    #[error("degenerate linear model must have zero slope, got {0}")]
    DegenerateSlope(f64),
}

/// One face rectangle. `(x, y)` is the top-left corner in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceBox {
    pub frame_idx: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl FaceBox {
    pub fn new(frame_idx: usize, x: f64, y: f64, w: f64, h: f64) -> Result<Self, ValidationError> {
        let b = Self { frame_idx, x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(ValidationError::NonFiniteBox(self.frame_idx));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(ValidationError::NonPositiveExtent {
                frame_idx: self.frame_idx,
                w: self.w,
                h: self.h,
            });
        }
        Ok(())
    }

    /// Height-normalised vertical position, the quantity differenced by AMA.
    pub fn relative_y(&self) -> f64 {
        self.y / self.h
    }
}

/// Per-frame face rectangles for one video. Frames without a detection are
/// simply absent from `boxes`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrack {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: usize,
    pub boxes: Vec<FaceBox>,
}

impl VideoTrack {
    pub fn new(
        video_id: impl Into<String>,
        fps: f64,
        frame_count: usize,
        boxes: Vec<FaceBox>,
    ) -> Result<Self, ValidationError> {
        let track = Self {
            video_id: video_id.into(),
            fps,
            frame_count,
            boxes,
        };
        track.validate()?;
        Ok(track)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        validate_track(self).map(|_| ())
    }

    /// Box lookup by frame index.
    pub fn box_at(&self, frame_idx: usize) -> Option<&FaceBox> {
        self.boxes
            .binary_search_by_key(&frame_idx, |b| b.frame_idx)
            .ok()
            .map(|i| &self.boxes[i])
    }
}

/// Checks every track invariant and hands the track back untouched.
pub fn validate_track(track: &VideoTrack) -> Result<&VideoTrack, ValidationError> {
    if !(track.fps.is_finite() && track.fps > 0.0) {
        return Err(ValidationError::NonPositiveFps(track.fps));
    }
    if track.frame_count == 0 {
        return Err(ValidationError::ZeroFrameCount);
    }
    let mut prev: Option<usize> = None;
    for b in &track.boxes {
        b.validate()?;
        if let Some(p) = prev {
            if b.frame_idx == p {
                return Err(ValidationError::DuplicateFrame(b.frame_idx));
            }
            if b.frame_idx < p {
                return Err(ValidationError::UnsortedFrames(b.frame_idx));
            }
        }
        if b.frame_idx >= track.frame_count {
            return Err(ValidationError::FrameOutOfRange {
                frame_idx: b.frame_idx,
                frame_count: track.frame_count,
            });
        }
        prev = Some(b.frame_idx);
    }
    Ok(track)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoMeta {
    pub video_id: String,
    pub fps: f64,
    /// Absent in test-mode data.
    pub hr_true: Option<f64>,
}

impl VideoMeta {
    pub fn new(video_id: impl Into<String>, fps: f64, hr_true: Option<f64>) -> Result<Self, ValidationError> {
        let meta = Self {
            video_id: video_id.into(),
            fps,
            hr_true,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(ValidationError::NonPositiveFps(self.fps));
        }
        if let Some(hr) = self.hr_true {
            if !(hr > HR_RANGE.0 && hr < HR_RANGE.1) {
                return Err(ValidationError::HeartRateOutOfRange(hr));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeSample {
    pub frame_idx: usize,
    pub age: f64,
}

/// Per-frame age estimates for one video, in years.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeSeries {
    pub video_id: String,
    pub samples: Vec<AgeSample>,
}

impl AgeSeries {
    pub fn new(video_id: impl Into<String>, samples: Vec<AgeSample>) -> Result<Self, ValidationError> {
        let series = Self {
            video_id: video_id.into(),
            samples,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut prev: Option<usize> = None;
        for s in &self.samples {
            if !(s.age >= AGE_RANGE.0 && s.age <= AGE_RANGE.1) {
                return Err(ValidationError::AgeOutOfRange {
                    frame_idx: s.frame_idx,
                    age: s.age,
                });
            }
            if let Some(p) = prev {
                if s.frame_idx == p {
                    return Err(ValidationError::DuplicateFrame(s.frame_idx));
                }
                if s.frame_idx < p {
                    return Err(ValidationError::UnsortedFrames(s.frame_idx));
                }
            }
            prev = Some(s.frame_idx);
        }
        Ok(())
    }
}

/// Derived per-video features plus the optional regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub video_id: String,
    pub ama: Option<f64>,
    pub age: Option<f64>,
    pub hr_true: Option<f64>,
}

impl FeatureRow {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if let Some(ama) = self.ama {
            if !(ama.is_finite() && ama >= 0.0) {
                return Err(ValidationError::NegativeAma(ama));
            }
        }
        if let Some(age) = self.age {
            if !(age >= AGE_RANGE.0 && age <= AGE_RANGE.1) {
                return Err(ValidationError::AgeOutOfRange { frame_idx: 0, age });
            }
        }
        if let Some(hr) = self.hr_true {
            if !(hr > HR_RANGE.0 && hr < HR_RANGE.1) {
                return Err(ValidationError::HeartRateOutOfRange(hr));
            }
        }
        Ok(())
    }
}

/// Fitted line `slope * x + intercept`. A degenerate model came from a
/// zero-variance predictor and always has zero slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub slope: f64,
    pub intercept: f64,
    pub degenerate: bool,
}

impl LinearModel {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self {
            slope,
            intercept,
            degenerate: false,
        }
    }

    /// Mean predictor used when the regressor has no spread.
    pub fn constant(intercept: f64) -> Self {
        Self {
            slope: 0.0,
            intercept,
            degenerate: true,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.degenerate && self.slope != 0.0 {
            return Err(ValidationError::DegenerateSlope(self.slope));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Constant heart rate.
    Bc { c: i64 },
    /// Heart rate linear in motion amplitude.
    BMotion { lm: LinearModel },
    /// Heart rate linear in age.
    BAge { lm: LinearModel },
    /// Age line corrected by a motion-driven relative residual.
    Bam { lm_age: LinearModel, lm_resid: LinearModel },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Bc { .. } => "BC",
            Variant::BMotion { .. } => "BMotion",
            Variant::BAge { .. } => "BAge",
            Variant::Bam { .. } => "BAM",
        }
    }
}

/// A fitted estimator together with the motion offset its features used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorModel {
    pub variant: Variant,
    pub delta: usize,
}

impl EstimatorModel {
    pub fn new(variant: Variant, delta: usize) -> Result<Self, ValidationError> {
        let m = Self { variant, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.delta < 1 {
            return Err(ValidationError::ZeroDelta);
        }
        match self.variant {
            Variant::Bc { c } if c <= 0 => Err(ValidationError::NonPositiveConstant(c)),
            Variant::Bc { .. } => Ok(()),
            Variant::BMotion { lm } | Variant::BAge { lm } => lm.validate(),
            Variant::Bam { lm_age, lm_resid } => {
                lm_age.validate()?;
                lm_resid.validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub video_id: String,
    pub hr_pred: f64,
}

impl Prediction {
    pub fn new(video_id: impl Into<String>, hr_pred: f64) -> Result<Self, ValidationError> {
        let p = Self {
            video_id: video_id.into(),
            hr_pred,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !self.hr_pred.is_finite() {
            return Err(ValidationError::NonFinitePrediction(self.video_id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    pub pearson_r: f64,
    pub n: usize,
}
