//! Frame/text embeddings and the per-frame relevance signal derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values further than this outside `[-1, 1]` are rejected at ingest;
/// anything closer is clamped.
pub const CLAMP_SLACK: f64 = 1e-3;

/// Frame embeddings and one text embedding for a single video, in a shared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub video_id: String,
    pub frame_embeddings: Vec<Vec<f64>>,
    pub text_embedding: Vec<f64>,
    pub fps: f64,
}

impl EmbeddingSet {
    pub fn validate(&self) -> Result<()> {
        let dim = self.text_embedding.len();
        if dim == 0 {
            return Err(Error::invalid("text embedding is empty"));
        }
        if self.frame_embeddings.is_empty() {
            return Err(Error::invalid("embedding set has no frames"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid(format!("fps must be positive, got {}", self.fps)));
        }
        if let Some(pos) = self.text_embedding.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("text embedding entry {pos} is not finite")));
        }
        for (row, frame) in self.frame_embeddings.iter().enumerate() {
            if frame.len() != dim {
                return Err(Error::invalid(format!(
                    "frame {row} has dimension {}, text embedding has {dim}",
                    frame.len()
                )));
            }
            if let Some(col) = frame.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("frame {row} entry {col} is not finite")));
            }
        }
        Ok(())
    }
}

/// Per-frame cosine similarity between one text query and a video.
///
/// Invariants: at least two frames, every value finite and inside `[-1, 1]`,
/// and a positive finite frame rate. Construction is the only way to obtain
/// one, so a track in hand always satisfies them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityTrack {
    video_id: String,
    values: Vec<f64>,
    fps: f64,
}

impl SimilarityTrack {
    /// Validates and clamps `values` into `[-1, 1]`.
    pub fn new(video_id: impl Into<String>, values: Vec<f64>, fps: f64) -> Result<Self> {
        let video_id = video_id.into();
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "track `{video_id}` needs at least 2 frames, got {}",
                values.len()
            )));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid(format!("track `{video_id}`: fps must be positive, got {fps}")));
        }
        let mut values = values;
        for (idx, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("track `{video_id}`: value {idx} is not finite")));
            }
            if v.abs() > 1.0 + CLAMP_SLACK {
                return Err(Error::invalid(format!(
                    "track `{video_id}`: value {idx} = {v} lies outside [-1, 1]"
                )));
            }
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self { video_id, values, fps })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Duration covered by the track in seconds.
    pub fn duration_sec(&self) -> f64 {
        self.values.len() as f64 / self.fps
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity of `text` against every row of `frames`, clamped into `[-1, 1]`.
///
/// Rejects zero-norm vectors and mismatched dimensions.
pub fn frame_similarities(text: &[f64], frames: &[Vec<f64>]) -> Result<Vec<f64>> {
    let text_norm = norm(text);
    if !text_norm.is_finite() {
        return Err(Error::invalid("text embedding is not finite"));
    }
    if text_norm == 0.0 {
        return Err(Error::invalid("text embedding has zero norm"));
    }
    frames
        .iter()
        .enumerate()
        .map(|(row, frame)| {
            if frame.len() != text.len() {
                return Err(Error::invalid(format!(
                    "frame {row} has dimension {}, text embedding has {}",
                    frame.len(),
                    text.len()
                )));
            }
            let frame_norm = norm(frame);
            if !frame_norm.is_finite() {
                return Err(Error::invalid(format!("frame {row} is not finite")));
            }
            if frame_norm == 0.0 {
                return Err(Error::invalid(format!("frame {row} has zero norm")));
            }
            let dot: f64 = text.iter().zip(frame).map(|(a, b)| a * b).sum();
            Ok((dot / (text_norm * frame_norm)).clamp(-1.0, 1.0))
        })
        .collect()
}

/// Turns an embedding set into a similarity track.
pub fn cosine_similarity(set: &EmbeddingSet) -> Result<SimilarityTrack> {
    set.validate()?;
    let values = frame_similarities(&set.text_embedding, &set.frame_embeddings)?;
    SimilarityTrack::new(set.video_id.clone(), values, set.fps)
}
