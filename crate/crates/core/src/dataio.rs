//! File formats: tracks, metadata, ages, features, predictions and models.
//!
//! All tabular files are comma-separated UTF-8 with a fixed header line and
//! `.` as the decimal separator. Optional values are written as empty fields.
//! Reals are written in their shortest round-trip form, except predictions,
//! which carry exactly six decimals. Models are JSON with coefficients stored
//! as 17-significant-digit decimal strings so a reload is bit-exact.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AgeSample, AgeSeries, EstimatorModel, FaceBox, FeatureRow, LinearModel, Prediction, ValidationError,
    VideoMeta, VideoTrack, Variant,
};

pub const TRACKS_HEADER: &str = "video_id,frame_idx,frame_count,fps,x,y,w,h";
pub const META_HEADER: &str = "video_id,fps,hr_bpm";
pub const AGES_HEADER: &str = "video_id,frame_idx,age_years";
pub const FEATURES_HEADER: &str = "video_id,ama,age,hr_true";
pub const PREDICTIONS_HEADER: &str = "video_id,hr_bpm";

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("video {video_id}: {source}")]
    Validation {
        video_id: String,
        #[source]
        source: ValidationError,
    },
    #[error("duplicate entry for video {0}")]
    DuplicateVideo(String),
    #[error("duplicate prediction for video {0}")]
    DuplicatePrediction(String),
    #[error("refusing to write an empty prediction set")]
    EmptyPredictions,
    #[error("unknown model variant '{0}'")]
    UnknownVariant(String),
    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u32 },
}

fn parse_err(line: u64, reason: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        reason: reason.into(),
    }
}

fn invalid(video_id: &str, source: ValidationError) -> DataError {
    DataError::Validation {
        video_id: video_id.to_string(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), DataError> {
    fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One data record with its 1-based source line.
struct Record {
    line: u64,
    fields: csv::StringRecord,
}

impl Record {
    fn text(&self, idx: usize) -> &str {
        self.fields.get(idx).unwrap_or("")
    }

    fn id(&self) -> Result<String, DataError> {
        let id = self.text(0);
        if id.is_empty() {
            return Err(parse_err(self.line, "empty video_id"));
        }
        Ok(id.to_string())
    }

    fn real(&self, idx: usize, name: &str) -> Result<f64, DataError> {
        self.opt_real(idx, name)?
            .ok_or_else(|| parse_err(self.line, format!("missing {name}")))
    }

    fn opt_real(&self, idx: usize, name: &str) -> Result<Option<f64>, DataError> {
        let raw = self.text(idx);
        if raw.is_empty() {
            return Ok(None);
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(parse_err(self.line, format!("{name} is not a finite number: '{raw}'"))),
        }
    }

    fn index(&self, idx: usize, name: &str) -> Result<usize, DataError> {
        let raw = self.text(idx);
        raw.parse::<usize>()
            .map_err(|_| parse_err(self.line, format!("{name} is not a non-negative integer: '{raw}'")))
    }
}

fn parse_table(text: &str, header: &str) -> Result<Vec<Record>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let expected: Vec<&str> = header.split(',').collect();
    let mut records = Vec::new();
    let mut seen_header = false;
    for result in reader.records() {
        let fields = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = fields.position().map(|p| p.line()).unwrap_or(0);
        if !seen_header {
            if fields.iter().collect::<Vec<_>>() != expected {
                return Err(parse_err(line, format!("expected header '{header}'")));
            }
            seen_header = true;
            continue;
        }
        if fields.len() == 1 && fields.get(0) == Some("") {
            continue;
        }
        if fields.len() != expected.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", expected.len(), fields.len()),
            ));
        }
        records.push(Record { line, fields });
    }
    if !seen_header {
        return Err(parse_err(1, format!("missing header '{header}'")));
    }
    Ok(records)
}

fn real_field(v: f64) -> String {
    format!("{v}")
}

fn opt_field(v: Option<f64>) -> String {
    v.map(real_field).unwrap_or_default()
}

pub fn parse_tracks(text: &str) -> Result<Vec<VideoTrack>, DataError> {
    let mut tracks: BTreeMap<String, VideoTrack> = BTreeMap::new();
    for rec in parse_table(text, TRACKS_HEADER)? {
        let id = rec.id()?;
        let frame_idx = rec.index(1, "frame_idx")?;
        let frame_count = rec.index(2, "frame_count")?;
        let fps = rec.real(3, "fps")?;
        let face = FaceBox {
            frame_idx,
            x: rec.real(4, "x")?,
            y: rec.real(5, "y")?,
            w: rec.real(6, "w")?,
            h: rec.real(7, "h")?,
        };
        match tracks.entry(id.clone()) {
            Entry::Vacant(slot) => {
                slot.insert(VideoTrack {
                    video_id: id,
                    fps,
                    frame_count,
                    boxes: vec![face],
                });
            }
            Entry::Occupied(mut slot) => {
                let track = slot.get_mut();
                if track.frame_count != frame_count || track.fps != fps {
                    return Err(parse_err(
                        rec.line,
                        format!("frame_count/fps disagree with earlier rows of video {id}"),
                    ));
                }
                track.boxes.push(face);
            }
        }
    }
    let tracks: Vec<VideoTrack> = tracks.into_values().collect();
    for t in &tracks {
        t.validate().map_err(|e| invalid(&t.video_id, e))?;
    }
    Ok(tracks)
}

pub fn load_tracks(path: &Path) -> Result<Vec<VideoTrack>, DataError> {
    parse_tracks(&read_text(path)?)
}

pub fn render_tracks(tracks: &[VideoTrack]) -> String {
    let mut out = format!("{TRACKS_HEADER}\n");
    let mut sorted: Vec<&VideoTrack> = tracks.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    for t in sorted {
        for b in &t.boxes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.video_id,
                b.frame_idx,
                t.frame_count,
                real_field(t.fps),
                real_field(b.x),
                real_field(b.y),
                real_field(b.w),
                real_field(b.h)
            );
        }
    }
    out
}

pub fn write_tracks(tracks: &[VideoTrack], path: &Path) -> Result<(), DataError> {
    write_text(path, &render_tracks(tracks))
}

pub fn parse_meta(text: &str) -> Result<Vec<VideoMeta>, DataError> {
    let mut metas: BTreeMap<String, VideoMeta> = BTreeMap::new();
    for rec in parse_table(text, META_HEADER)? {
        let id = rec.id()?;
        let meta = VideoMeta {
            video_id: id.clone(),
            fps: rec.real(1, "fps")?,
            hr_true: rec.opt_real(2, "hr_bpm")?,
        };
        meta.validate().map_err(|e| invalid(&id, e))?;
        if metas.insert(id.clone(), meta).is_some() {
            return Err(DataError::DuplicateVideo(id));
        }
    }
    Ok(metas.into_values().collect())
}

pub fn load_meta(path: &Path) -> Result<Vec<VideoMeta>, DataError> {
    parse_meta(&read_text(path)?)
}

pub fn render_meta(metas: &[VideoMeta]) -> String {
    let mut out = format!("{META_HEADER}\n");
    let mut sorted: Vec<&VideoMeta> = metas.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    for m in sorted {
        let _ = writeln!(out, "{},{},{}", m.video_id, real_field(m.fps), opt_field(m.hr_true));
    }
    out
}

pub fn write_meta(metas: &[VideoMeta], path: &Path) -> Result<(), DataError> {
    write_text(path, &render_meta(metas))
}

pub fn parse_ages(text: &str) -> Result<Vec<AgeSeries>, DataError> {
    let mut series: BTreeMap<String, Vec<AgeSample>> = BTreeMap::new();
    for rec in parse_table(text, AGES_HEADER)? {
        let id = rec.id()?;
        let sample = AgeSample {
            frame_idx: rec.index(1, "frame_idx")?,
            age: rec.real(2, "age_years")?,
        };
        series.entry(id).or_default().push(sample);
    }
    series
        .into_iter()
        .map(|(video_id, samples)| {
            let s = AgeSeries { video_id, samples };
            s.validate().map_err(|e| invalid(&s.video_id, e))?;
            Ok(s)
        })
        .collect()
}

pub fn load_ages(path: &Path) -> Result<Vec<AgeSeries>, DataError> {
    parse_ages(&read_text(path)?)
}

pub fn render_ages(series: &[AgeSeries]) -> String {
    let mut out = format!("{AGES_HEADER}\n");
    let mut sorted: Vec<&AgeSeries> = series.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    for s in sorted {
        for sample in &s.samples {
            let _ = writeln!(out, "{},{},{}", s.video_id, sample.frame_idx, real_field(sample.age));
        }
    }
    out
}

pub fn write_ages(series: &[AgeSeries], path: &Path) -> Result<(), DataError> {
    write_text(path, &render_ages(series))
}

pub fn parse_features(text: &str) -> Result<Vec<FeatureRow>, DataError> {
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for rec in parse_table(text, FEATURES_HEADER)? {
        let id = rec.id()?;
        let row = FeatureRow {
            video_id: id.clone(),
            ama: rec.opt_real(1, "ama")?,
            age: rec.opt_real(2, "age")?,
            hr_true: rec.opt_real(3, "hr_true")?,
        };
        row.validate().map_err(|e| invalid(&id, e))?;
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateVideo(id));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRow>, DataError> {
    parse_features(&read_text(path)?)
}

pub fn render_features(rows: &[FeatureRow]) -> String {
    let mut out = format!("{FEATURES_HEADER}\n");
    let mut sorted: Vec<&FeatureRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    for r in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.video_id,
            opt_field(r.ama),
            opt_field(r.age),
            opt_field(r.hr_true)
        );
    }
    out
}

pub fn write_features(rows: &[FeatureRow], path: &Path) -> Result<(), DataError> {
    write_text(path, &render_features(rows))
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, DataError> {
    let mut seen = BTreeSet::new();
    let mut preds = Vec::new();
    for rec in parse_table(text, PREDICTIONS_HEADER)? {
        let id = rec.id()?;
        let pred = Prediction {
            video_id: id.clone(),
            hr_pred: rec.real(1, "hr_bpm")?,
        };
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicatePrediction(id));
        }
        preds.push(pred);
    }
    Ok(preds)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, DataError> {
    parse_predictions(&read_text(path)?)
}

/// Rows sorted by `video_id`, values with six decimals.
pub fn render_predictions(preds: &[Prediction]) -> String {
    let mut out = format!("{PREDICTIONS_HEADER}\n");
    let mut sorted: Vec<&Prediction> = preds.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    for p in sorted {
        let _ = writeln!(out, "{},{:.6}", p.video_id, p.hr_pred);
    }
    out
}

pub fn write_predictions(preds: &[Prediction], path: &Path) -> Result<(), DataError> {
    if preds.is_empty() {
        return Err(DataError::EmptyPredictions);
    }
    write_text(path, &render_predictions(preds))
}

#[derive(Debug, Serialize, Deserialize)]
struct LineRecord {
    slope: String,
    intercept: String,
    degenerate: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelRecord {
    schema_version: u32,
    variant: String,
    delta: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constant: Option<i64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    coefficients: BTreeMap<String, LineRecord>,
}

fn exact_decimal(v: f64) -> String {
    format!("{v:.16e}")
}

impl From<&LinearModel> for LineRecord {
    fn from(lm: &LinearModel) -> Self {
        Self {
            slope: exact_decimal(lm.slope),
            intercept: exact_decimal(lm.intercept),
            degenerate: lm.degenerate,
        }
    }
}

fn json_err(e: serde_json::Error) -> DataError {
    parse_err(e.line() as u64, e.to_string())
}

fn coefficient(raw: &str, what: &str) -> Result<f64, DataError> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(0, format!("{what} is not a finite number: '{raw}'")))
}

fn line_from(record: &ModelRecord, key: &str) -> Result<LinearModel, DataError> {
    let raw = record
        .coefficients
        .get(key)
        .ok_or_else(|| parse_err(0, format!("missing coefficients '{key}'")))?;
    Ok(LinearModel {
        slope: coefficient(&raw.slope, &format!("{key}.slope"))?,
        intercept: coefficient(&raw.intercept, &format!("{key}.intercept"))?,
        degenerate: raw.degenerate,
    })
}

pub fn render_model(model: &EstimatorModel) -> String {
    let mut coefficients = BTreeMap::new();
    let mut constant = None;
    match &model.variant {
        Variant::Bc { c } => constant = Some(*c),
        Variant::BMotion { lm } => {
            coefficients.insert("motion".to_string(), LineRecord::from(lm));
        }
        Variant::BAge { lm } => {
            coefficients.insert("age".to_string(), LineRecord::from(lm));
        }
        Variant::Bam { lm_age, lm_resid } => {
            coefficients.insert("age".to_string(), LineRecord::from(lm_age));
            coefficients.insert("residual".to_string(), LineRecord::from(lm_resid));
        }
    }
    let record = ModelRecord {
        schema_version: MODEL_SCHEMA_VERSION,
        variant: model.variant.name().to_string(),
        delta: model.delta,
        constant,
        coefficients,
    };
    let mut text = serde_json::to_string_pretty(&record).expect("model record serialises");
    text.push('\n');
    text
}

pub fn parse_model(text: &str) -> Result<EstimatorModel, DataError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| parse_err(0, "missing schema_version"))?;
    if version != u64::from(MODEL_SCHEMA_VERSION) {
        return Err(DataError::SchemaVersionMismatch {
            found: version,
            expected: MODEL_SCHEMA_VERSION,
        });
    }
    let record: ModelRecord = serde_json::from_value(value).map_err(json_err)?;
    let variant = match record.variant.as_str() {
        "BC" => Variant::Bc {
            c: record
                .constant
                .ok_or_else(|| parse_err(0, "BC model without constant"))?,
        },
        "BMotion" => Variant::BMotion {
            lm: line_from(&record, "motion")?,
        },
        "BAge" => Variant::BAge {
            lm: line_from(&record, "age")?,
        },
        "BAM" => Variant::Bam {
            lm_age: line_from(&record, "age")?,
            lm_resid: line_from(&record, "residual")?,
        },
        other => return Err(DataError::UnknownVariant(other.to_string())),
    };
    EstimatorModel::new(variant, record.delta).map_err(|e| invalid("<model>", e))
}

pub fn save_model(model: &EstimatorModel, path: &Path) -> Result<(), DataError> {
    write_text(path, &render_model(model))
}

pub fn load_model(path: &Path) -> Result<EstimatorModel, DataError> {
    parse_model(&read_text(path)?)
}
