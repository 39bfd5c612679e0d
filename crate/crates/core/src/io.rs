//! File formats.
//!
//! Similarity tracks come in two forms, detected by their first bytes:
//!
//! * text: a JSON document `{"video_id": .., "fps": .., "values": [..]}`. A
//!   document with `frame_embeddings` and `text_embedding` instead of `values`
//!   is read as an embedding set and converted by cosine similarity.
//! * binary: `b"TFVT"`, format version as `u32`, frame count as `u64`, fps as
//!   `f64`, then one `f32` per frame, all little-endian. The binary form has no
//!   video id; [`read_track`] takes it from the file stem and
//!   [`read_track_for`] from the caller.
//!
//! Annotations and predictions are JSON lines, one record per line.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::write_atomic;
use crate::similarity::{cosine_similarity, EmbeddingSet, SimilarityTrack};

pub const TRACK_MAGIC: &[u8; 4] = b"TFVT";
pub const TRACK_VERSION: u32 = 1;
/// Size of the binary header in bytes.
pub const TRACK_HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackFormat {
    Text,
    Binary,
}

impl TrackFormat {
    /// `.tfvt` and `.bin` are binary; everything else is text.
    pub fn from_path(path: &Path) -> TrackFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tfvt") | Some("bin") => TrackFormat::Binary,
            _ => TrackFormat::Text,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            TrackFormat::Text => "json",
            TrackFormat::Binary => "tfvt",
        }
    }
}

#[derive(Serialize)]
struct TrackDocOut<'a> {
    video_id: &'a str,
    fps: f64,
    values: Vec<f32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackDocIn {
    video_id: String,
    fps: f64,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    frame_embeddings: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    text_embedding: Option<Vec<f64>>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads a track in either form.
pub fn read_track(path: &Path) -> Result<SimilarityTrack> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(TRACK_MAGIC) {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::format(path, "cannot derive a video id from the file name"))?;
        decode_binary_track(&bytes, stem).map_err(|msg| Error::format(path, msg))
    } else {
        decode_text_track(&bytes).map_err(|msg| Error::format(path, msg))
    }
}

/// Reads a track that must belong to `video_id`. Binary tracks take the id
/// from the caller instead of the file stem.
pub fn read_track_for(path: &Path, video_id: &str) -> Result<SimilarityTrack> {
    let bytes = read_bytes(path)?;
    let track = if bytes.starts_with(TRACK_MAGIC) {
        decode_binary_track(&bytes, video_id)
    } else {
        decode_text_track(&bytes)
    }
    .map_err(|msg| Error::format(path, msg))?;
    if track.video_id() != video_id {
        return Err(Error::format(
            path,
            format!("track is for video `{}`, expected `{video_id}`", track.video_id()),
        ));
    }
    Ok(track)
}

/// Writes a track, choosing the form from the file extension.
pub fn write_track(track: &SimilarityTrack, path: &Path) -> Result<()> {
    write_track_as(track, path, TrackFormat::from_path(path))
}

pub fn write_track_as(track: &SimilarityTrack, path: &Path, format: TrackFormat) -> Result<()> {
    let bytes = match format {
        TrackFormat::Binary => encode_binary_track(track),
        TrackFormat::Text => encode_text_track(track)?,
    };
    write_atomic(path, &bytes)
}

pub fn encode_text_track(track: &SimilarityTrack) -> Result<Vec<u8>> {
    let doc = TrackDocOut {
        video_id: track.video_id(),
        fps: track.fps(),
        values: track.values().iter().map(|&v| v as f32).collect(),
    };
    let mut out = serde_json::to_vec(&doc).map_err(|e| Error::Internal(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn decode_text_track(bytes: &[u8]) -> Result<SimilarityTrack, String> {
    let doc: TrackDocIn = serde_json::from_slice(bytes).map_err(|e| {
        format!("not a track document (line {}, column {}): {e}", e.line(), e.column())
    })?;
    match (doc.values, doc.frame_embeddings, doc.text_embedding) {
        (Some(values), None, None) => {
            SimilarityTrack::new(doc.video_id, values, doc.fps).map_err(|e| e.to_string())
        }
        (None, Some(frame_embeddings), Some(text_embedding)) => cosine_similarity(&EmbeddingSet {
            video_id: doc.video_id,
            frame_embeddings,
            text_embedding,
            fps: doc.fps,
        })
        .map_err(|e| e.to_string()),
        _ => Err("expected either `values` or both `frame_embeddings` and `text_embedding`".into()),
    }
}

pub fn encode_binary_track(track: &SimilarityTrack) -> Vec<u8> {
    let mut out = Vec::with_capacity(TRACK_HEADER_LEN + 4 * track.len());
    out.extend_from_slice(TRACK_MAGIC);
    out.extend_from_slice(&TRACK_VERSION.to_le_bytes());
    out.extend_from_slice(&(track.len() as u64).to_le_bytes());
    out.extend_from_slice(&track.fps().to_le_bytes());
    for &v in track.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_binary_track(bytes: &[u8], video_id: &str) -> Result<SimilarityTrack, String> {
    if bytes.len() < TRACK_HEADER_LEN {
        return Err(format!(
            "truncated header: expected {TRACK_HEADER_LEN} bytes, found {}",
            bytes.len()
        ));
    }
    if &bytes[..4] != TRACK_MAGIC {
        return Err(format!("bad magic at byte 0: {:?}", &bytes[..4]));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != TRACK_VERSION {
        return Err(format!("unsupported format version {version} at byte 4"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let fps = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = count
        .checked_mul(4)
        .and_then(|p| p.checked_add(TRACK_HEADER_LEN as u64))
        .ok_or_else(|| format!("frame count {count} at byte 8 is too large"))?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(format!(
            "truncated payload: header declares {count} frames, expected {expected} bytes, found {actual}"
        ));
    }
    if actual > expected {
        return Err(format!(
            "frame count mismatch: header declares {count} frames ({expected} bytes) but file has {actual} bytes"
        ));
    }
    let mut values = Vec::with_capacity(count as usize);
    for (idx, chunk) in bytes[TRACK_HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(format!(
                "value {idx} at byte {} is not finite",
                TRACK_HEADER_LEN + 4 * idx
            ));
        }
        values.push(v as f64);
    }
    SimilarityTrack::new(video_id, values, fps).map_err(|e| e.to_string())
}

/// Reads one JSON record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(idx, line)| {
            serde_json::from_str(line).map_err(|e| Error::format(path, format!("line {}: {e}", idx + 1)))
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    out.push(b'\n');
    write_atomic(path, &out)
}

/// Writes `bytes` to `path` through a temporary file and rename.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes)
}
