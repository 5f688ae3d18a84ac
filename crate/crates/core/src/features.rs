//! Per-video scalar features: average motion amplitude (AMA) of the face box
//! and a trimmed aggregate of per-frame age estimates.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::model::{AgeSeries, FeatureRow, VideoMeta, VideoTrack};

pub const DEFAULT_DELTA: usize = 10;
pub const DEFAULT_AGE_SAMPLES: usize = 10;
pub const DEFAULT_AGE_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("track has {frame_count} frames, need more than delta={delta}")]
    TooShort { frame_count: usize, delta: usize },
    #[error("no frame pair {delta} apart has both boxes present")]
    NoUsablePairs { delta: usize },
    #[error("age series is empty")]
    EmptySeries,
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("no metadata for video {0}")]
    MissingMeta(String),
    #[error("video {video_id}: {source}")]
    Video {
        video_id: String,
        #[source]
        source: Box<FeatureError>,
    },
}

impl FeatureError {
    fn for_video(self, video_id: &str) -> Self {
        FeatureError::Video {
            video_id: video_id.to_string(),
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    /// Frame offset between the two boxes of a motion pair.
    pub delta: usize,
    /// Number of evenly spaced age samples drawn per video.
    pub age_sample_count: usize,
    /// Width of the centred window averaged from the sorted samples.
    pub age_median_window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            age_sample_count: DEFAULT_AGE_SAMPLES,
            age_median_window: DEFAULT_AGE_WINDOW,
        }
    }
}

impl FeatureConfig {
    pub fn with_delta(delta: usize) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.delta < 1 {
            return Err(FeatureError::InvalidConfig("delta must be at least 1".into()));
        }
        if self.age_median_window < 1 || self.age_median_window > self.age_sample_count {
            return Err(FeatureError::InvalidConfig(format!(
                "age window {} must lie in 1..={}",
                self.age_median_window, self.age_sample_count
            )));
        }
        Ok(())
    }
}

/// Mean absolute change of `y / h` between frames `delta` apart.
///
/// Only vertical motion is used. Pairs with a missing box on either side are
/// skipped and the mean is taken over the pairs that remain.
pub fn compute_ama(track: &VideoTrack, config: &FeatureConfig) -> Result<f64, FeatureError> {
    config.validate()?;
    let delta = config.delta;
    if track.frame_count <= delta {
        return Err(FeatureError::TooShort {
            frame_count: track.frame_count,
            delta,
        });
    }

    // Dense lookup keeps the summation order fixed at ascending f.
    let mut rel_y: Vec<Option<f64>> = vec![None; track.frame_count];
    for b in &track.boxes {
        if let Some(slot) = rel_y.get_mut(b.frame_idx) {
            *slot = Some(b.relative_y());
        }
    }

    let mut sum = 0.0;
    let mut pairs = 0usize;
    for f in delta..track.frame_count {
        if let (Some(now), Some(before)) = (rel_y[f], rel_y[f - delta]) {
            sum += (now - before).abs();
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(FeatureError::NoUsablePairs { delta });
    }
    Ok(sum / pairs as f64)
}

/// Frame indices targeted by the even age sampling.
pub fn age_sample_targets(frame_count: usize, sample_count: usize) -> Vec<usize> {
    let last = frame_count.saturating_sub(1) as f64;
    match sample_count {
        0 => Vec::new(),
        1 => vec![(last / 2.0).round() as usize],
        k => (0..k)
            .map(|i| (i as f64 * last / (k - 1) as f64).round() as usize)
            .collect(),
    }
}

/// Averages the centred window of the sorted, evenly sampled age estimates.
pub fn aggregate_age(series: &AgeSeries, frame_count: usize, config: &FeatureConfig) -> Result<f64, FeatureError> {
    config.validate()?;
    if series.samples.is_empty() {
        return Err(FeatureError::EmptySeries);
    }

    let mut selected: Vec<f64> = age_sample_targets(frame_count, config.age_sample_count)
        .into_iter()
        .map(|target| nearest_age(series, target))
        .collect();
    selected.sort_by(f64::total_cmp);

    let start = (config.age_sample_count - config.age_median_window) / 2;
    let window = &selected[start..start + config.age_median_window];
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

// Ties go to the earlier sample.
fn nearest_age(series: &AgeSeries, target: usize) -> f64 {
    let samples = &series.samples;
    let idx = samples.partition_point(|s| s.frame_idx < target);
    let after = samples.get(idx);
    let before = idx.checked_sub(1).map(|i| &samples[i]);
    match (before, after) {
        (Some(b), Some(a)) => {
            if a.frame_idx - target < target - b.frame_idx {
                a.age
            } else {
                b.age
            }
        }
        (Some(b), None) => b.age,
        (None, Some(a)) => a.age,
        (None, None) => unreachable!("series checked non-empty"),
    }
}

/// Computes one video's row, joining optional age and ground truth.
pub fn feature_row(
    track: &VideoTrack,
    ages: Option<&AgeSeries>,
    meta: Option<&VideoMeta>,
    config: &FeatureConfig,
) -> Result<FeatureRow, FeatureError> {
    let id = track.video_id.as_str();
    let meta = meta.ok_or_else(|| FeatureError::MissingMeta(id.to_string()))?;
    let ama = compute_ama(track, config).map_err(|e| e.for_video(id))?;
    let age = ages
        .map(|s| aggregate_age(s, track.frame_count, config))
        .transpose()
        .map_err(|e| e.for_video(id))?;
    Ok(FeatureRow {
        video_id: id.to_string(),
        ama: Some(ama),
        age,
        hr_true: meta.hr_true,
    })
}

/// Per-video feature results in ascending `video_id` order, failures
/// included, so callers can report every bad video at once.
pub fn extract_features(
    tracks: &[VideoTrack],
    ages: &[AgeSeries],
    metas: &[VideoMeta],
    config: &FeatureConfig,
) -> Vec<(String, Result<FeatureRow, FeatureError>)> {
    let ages: HashMap<&str, &AgeSeries> = ages.iter().map(|s| (s.video_id.as_str(), s)).collect();
    let metas: HashMap<&str, &VideoMeta> = metas.iter().map(|m| (m.video_id.as_str(), m)).collect();
    let sorted: BTreeMap<&str, &VideoTrack> = tracks.iter().map(|t| (t.video_id.as_str(), t)).collect();

    sorted
        .into_iter()
        .map(|(id, track)| {
            let row = feature_row(track, ages.get(id).copied(), metas.get(id).copied(), config);
            (id.to_string(), row)
        })
        .collect()
}

/// One row per track, ordered by `video_id`. Fails on the first bad video.
pub fn build_feature_rows(
    tracks: &[VideoTrack],
    ages: &[AgeSeries],
    metas: &[VideoMeta],
    config: &FeatureConfig,
) -> Result<Vec<FeatureRow>, FeatureError> {
    config.validate()?;
    extract_features(tracks, ages, metas, config)
        .into_iter()
        .map(|(_, row)| row)
        .collect()
}
