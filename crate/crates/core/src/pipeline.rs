//! End-to-end composition: plan, localize each sub-event, fuse.
//!
//! Tracks for a (video, sub-event) pair are looked up under a directory:
//!
//! ```text
//! <dir>/<video_id>/<text_key(description)>.json   per sub-event (or .tfvt)
//! <dir>/<video_id>.json                            per video, any description (or .tfvt)
//! ```
//!
//! The per-video form serves single-event runs where the track was computed
//! against the full query.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fusion::{predict, FinalPrediction};
use crate::io::read_track_for;
use crate::planner::QueryPlan;
use crate::scoring::{localize_topk, ScoredProposal, ScoringParams};
use crate::similarity::SimilarityTrack;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubEventProposals {
    pub description: String,
    pub order: usize,
    pub proposals: Vec<ScoredProposal>,
}

/// Ranked proposals for every sub-event of one plan on one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalSet {
    pub video_id: String,
    pub fps: f64,
    pub sub_events: Vec<SubEventProposals>,
}

/// Stable file-name key for a sub-event description: the first 16 hex digits
/// of SHA-256 over the trimmed text.
pub fn text_key(description: &str) -> String {
    let digest = Sha256::digest(description.trim().as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// Directory of similarity tracks laid out as described in the module docs.
#[derive(Debug, Clone)]
pub struct TrackStore {
    dir: PathBuf,
}

const EXTENSIONS: [&str; 2] = ["json", "tfvt"];

impl TrackStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Where a per-sub-event track should be written.
    pub fn sub_event_path(&self, video_id: &str, description: &str, ext: &str) -> PathBuf {
        self.dir.join(video_id).join(format!("{}.{ext}", text_key(description)))
    }

    pub fn video_path(&self, video_id: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{video_id}.{ext}"))
    }

    pub fn find(&self, video_id: &str, description: &str) -> Option<PathBuf> {
        let specific = EXTENSIONS.iter().map(|e| self.sub_event_path(video_id, description, e));
        let generic = EXTENSIONS.iter().map(|e| self.video_path(video_id, e));
        specific.chain(generic).find(|p| p.is_file())
    }

    pub fn load(&self, video_id: &str, description: &str) -> Result<SimilarityTrack> {
        let path = self.find(video_id, description).ok_or_else(|| Error::MissingTrack {
            dir: self.dir.clone(),
            video_id: video_id.to_string(),
            description: description.to_string(),
        })?;
        read_track_for(&path, video_id)
    }

    /// Every track file stored for `video_id`, per-video form first, then the
    /// per-sub-event files sorted by name.
    pub fn files_for(&self, video_id: &str) -> Result<Vec<PathBuf>> {
        let mut out: Vec<PathBuf> = EXTENSIONS
            .iter()
            .map(|e| self.video_path(video_id, e))
            .filter(|p| p.is_file())
            .collect();
        let sub = self.dir.join(video_id);
        if sub.is_dir() {
            let mut specific = Vec::new();
            for entry in std::fs::read_dir(&sub).map_err(|e| Error::io(&sub, e))? {
                let path = entry.map_err(|e| Error::io(&sub, e))?.path();
                let known = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| EXTENSIONS.contains(&e));
                if known && path.is_file() {
                    specific.push(path);
                }
            }
            specific.sort();
            out.extend(specific);
        }
        Ok(out)
    }

    /// One track per sub-event of `plan`, in plan order.
    pub fn load_plan(&self, video_id: &str, plan: &QueryPlan) -> Result<Vec<SimilarityTrack>> {
        plan.sub_events
            .iter()
            .map(|ev| self.load(video_id, &ev.description))
            .collect()
    }
}

/// Localizes every sub-event of `plan`; `tracks[i]` belongs to `plan.sub_events[i]`.
pub fn localize_plan(plan: &QueryPlan, tracks: &[SimilarityTrack], params: &ScoringParams) -> Result<ProposalSet> {
    plan.validate()?;
    if tracks.len() != plan.len() {
        return Err(Error::invalid(format!(
            "plan has {} sub-events but {} tracks were given",
            plan.len(),
            tracks.len()
        )));
    }
    let first = &tracks[0];
    for t in &tracks[1..] {
        if t.video_id() != first.video_id() || t.fps() != first.fps() {
            return Err(Error::invalid(format!(
                "tracks disagree on video or fps: `{}` at {} fps vs `{}` at {} fps",
                first.video_id(),
                first.fps(),
                t.video_id(),
                t.fps()
            )));
        }
    }
    let sub_events = plan
        .sub_events
        .iter()
        .zip(tracks)
        .map(|(ev, track)| {
            Ok(SubEventProposals {
                description: ev.description.clone(),
                order: ev.order,
                proposals: localize_topk(track, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProposalSet {
        video_id: first.video_id().to_string(),
        fps: first.fps(),
        sub_events,
    })
}

/// Fuses a proposal set produced for `plan`.
pub fn fuse(plan: &QueryPlan, set: &ProposalSet) -> Result<FinalPrediction> {
    plan.validate()?;
    let matches = set.sub_events.len() == plan.len()
        && set
            .sub_events
            .iter()
            .zip(&plan.sub_events)
            .all(|(s, ev)| s.description == ev.description && s.order == ev.order);
    if !matches {
        return Err(Error::invalid("proposal set does not match the plan's sub-events"));
    }
    let candidates: Vec<Vec<ScoredProposal>> = set.sub_events.iter().map(|s| s.proposals.clone()).collect();
    predict(plan, &candidates, &set.video_id, set.fps)
}

/// Localizes and fuses one (video, plan) pair from a track store.
pub fn ground(plan: &QueryPlan, video_id: &str, store: &TrackStore, params: &ScoringParams) -> Result<FinalPrediction> {
    let tracks = store.load_plan(video_id, plan)?;
    let set = localize_plan(plan, &tracks, params)?;
    fuse(plan, &set)
}
