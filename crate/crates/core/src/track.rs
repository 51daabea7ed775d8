//! Timestamped pose tracks and their JSON Lines encoding.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2D;

/// One line of a track or route file: `{t, x, y, yaw, v, w}` with optional keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub t: f64,
    pub pose: Pose2D,
    /// Commanded speed issued at this sample, if recorded.
    pub v: Option<f64>,
    /// Commanded yaw rate issued at this sample, if recorded.
    pub w: Option<f64>,
}

impl TrackSample {
    pub fn record(&self) -> PoseRecord {
        PoseRecord {
            t: Some(self.t),
            x: self.pose.x,
            y: self.pose.y,
            yaw: self.pose.yaw,
            v: self.v,
            w: self.w,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrackError {
    #[error("timestamps decrease at sample {index}")]
    NonMonotonicTime { index: usize },
    #[error("record {index} has no timestamp")]
    MissingTime { index: usize },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sequence of timestamped poses with non-decreasing time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoseTrack {
    samples: Vec<TrackSample>,
}

impl PoseTrack {
    pub fn new(samples: Vec<TrackSample>) -> Result<Self, TrackError> {
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].t < w[0].t {
                return Err(TrackError::NonMonotonicTime { index: i + 1 });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&TrackSample> {
        self.samples.get(i)
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|s| s.pose.position()).collect()
    }

    pub fn from_records(records: &[PoseRecord]) -> Result<Self, TrackError> {
        let samples = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(TrackSample {
                    t: r.t.ok_or(TrackError::MissingTime { index: i })?,
                    pose: Pose2D::new(r.x, r.y, r.yaw),
                    v: r.v,
                    w: r.w,
                })
            })
            .collect::<Result<Vec<_>, TrackError>>()?;
        Self::new(samples)
    }

    pub fn records(&self) -> Vec<PoseRecord> {
        self.samples.iter().map(TrackSample::record).collect()
    }
}

pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<PoseRecord>, TrackError> {
    read_jsonl(reader)
}

pub fn write_records<W: Write>(mut writer: W, records: &[PoseRecord]) -> Result<(), TrackError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse one JSON value per non-empty line.
pub fn read_jsonl<T: serde::de::DeserializeOwned, R: BufRead>(
    reader: R,
) -> Result<Vec<T>, TrackError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| TrackError::Parse { line: i + 1, source })?,
        );
    }
    Ok(out)
}
