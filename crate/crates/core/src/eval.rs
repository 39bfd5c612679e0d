//! Recall at IoU thresholds, mean IoU, and the prefix-insertion distribution shift.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fusion::FinalPrediction;
use crate::similarity::SimilarityTrack;

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.3, 0.5, 0.7];

/// Ground truth for one (video, query) pair, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub video_id: String,
    pub query: String,
    pub gt_start_sec: f64,
    pub gt_end_sec: f64,
    #[serde(rename = "duration", alias = "video_duration_sec")]
    pub video_duration_sec: f64,
}

impl Annotation {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gt_start_sec.is_finite()
            && self.gt_end_sec.is_finite()
            && self.video_duration_sec.is_finite()
            && self.gt_start_sec >= 0.0
            && self.gt_end_sec > self.gt_start_sec
            && self.video_duration_sec >= self.gt_end_sec;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "annotation ({}, {:?}) has interval [{}, {}) outside [0, {}]",
                self.video_id, self.query, self.gt_start_sec, self.gt_end_sec, self.video_duration_sec
            )))
        }
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.video_id, &self.query)
    }
}

/// Intersection over union of two half-open intervals.
pub fn iou(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    for (s, e) in [a, b] {
        if !(s.is_finite() && e.is_finite() && e > s) {
            return Err(Error::invalid(format!("degenerate interval [{s}, {e})")));
        }
    }
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    Ok(inter / union)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallAt {
    pub threshold: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Ascending by threshold.
    pub recall_at: Vec<RecallAt>,
    pub miou: f64,
    pub count: usize,
}

impl EvalReport {
    pub fn recall(&self, threshold: f64) -> Option<f64> {
        self.recall_at
            .iter()
            .find(|r| (r.threshold - threshold).abs() < 1e-12)
            .map(|r| r.percent)
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut header = String::new();
        let mut row = String::new();
        for r in &self.recall_at {
            let label = format!("R@{}", r.threshold);
            let _ = write!(header, "{label:>9}");
            let _ = write!(row, "{:>9.2}", r.percent);
        }
        let _ = write!(header, "{:>9}{:>8}", "mIoU", "count");
        let _ = write!(row, "{:>9.2}{:>8}", self.miou, self.count);
        format!("{header}\n{row}\n")
    }
}

/// Scores predictions against ground truth.
///
/// A pair counts toward R@m when its IoU is strictly greater than m. Pairs
/// without a prediction contribute IoU 0; predictions without ground truth are
/// ignored.
pub fn evaluate(preds: &[FinalPrediction], gts: &[Annotation], thresholds: &[f64]) -> Result<EvalReport> {
    if gts.is_empty() {
        return Err(Error::invalid("no annotations to evaluate"));
    }
    let mut thresholds = thresholds.to_vec();
    if thresholds.is_empty() {
        return Err(Error::invalid("no IoU thresholds given"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::invalid(format!("IoU threshold {t} is outside (0, 1)")));
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut by_key: HashMap<(&str, &str), &FinalPrediction> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_key.insert((&p.video_id, &p.query), p).is_some() {
            return Err(Error::invalid(format!(
                "duplicate prediction for ({}, {:?})",
                p.video_id, p.query
            )));
        }
    }

    let mut seen = std::collections::HashSet::with_capacity(gts.len());
    let mut ious = Vec::with_capacity(gts.len());
    for gt in gts {
        gt.validate()?;
        if !seen.insert(gt.key()) {
            return Err(Error::invalid(format!(
                "duplicate annotation for ({}, {:?})",
                gt.video_id, gt.query
            )));
        }
        let value = match by_key.get(&gt.key()) {
            Some(p) => iou((p.start_sec, p.end_sec), (gt.gt_start_sec, gt.gt_end_sec))?,
            None => 0.0,
        };
        ious.push(value);
    }

    let count = ious.len();
    let recall_at = thresholds
        .iter()
        .map(|&threshold| RecallAt {
            threshold,
            percent: 100.0 * ious.iter().filter(|&&v| v > threshold).count() as f64 / count as f64,
        })
        .collect();
    let miou = 100.0 * compensated_sum(&ious) / count as f64;
    Ok(EvalReport { recall_at, miou, count })
}

/// Neumaier summation; exact for the short sums of decimal IoUs seen in practice.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &x in xs {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Uniform similarity range for the inserted frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBand {
    pub low: f64,
    pub high: f64,
}

impl Default for NoiseBand {
    fn default() -> Self {
        Self { low: -0.05, high: 0.05 }
    }
}

/// [`ood_shift_with`] using the default noise band.
pub fn ood_shift(
    ann: &Annotation,
    track: &SimilarityTrack,
    prefix_sec: f64,
    seed: u64,
) -> Result<(Annotation, SimilarityTrack)> {
    ood_shift_with(ann, track, prefix_sec, seed, NoiseBand::default())
}

/// Seed for one labelled stream (a video, a file) derived from a run seed, so
/// results do not depend on processing order.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Number of frames inserted for a prefix of `prefix_sec` seconds.
pub fn prefix_frames(prefix_sec: f64, fps: f64) -> usize {
    (prefix_sec * fps).round() as usize
}

/// Prepends `round(prefix_sec * fps)` irrelevant frames to the track and moves
/// the ground truth and duration later by `prefix_sec`. Inserted values are
/// drawn uniformly from `band` with a generator seeded by `seed`.
pub fn ood_shift_with(
    ann: &Annotation,
    track: &SimilarityTrack,
    prefix_sec: f64,
    seed: u64,
    band: NoiseBand,
) -> Result<(Annotation, SimilarityTrack)> {
    let shifted_ann = shift_annotation(ann, prefix_sec)?;
    if ann.video_id != track.video_id() {
        return Err(Error::invalid(format!(
            "annotation video `{}` does not match track `{}`",
            ann.video_id,
            track.video_id()
        )));
    }
    Ok((shifted_ann, prepend_noise(track, prefix_sec, seed, band)?))
}

pub fn shift_annotation(ann: &Annotation, prefix_sec: f64) -> Result<Annotation> {
    if !(prefix_sec.is_finite() && prefix_sec > 0.0) {
        return Err(Error::invalid(format!("prefix_sec must be positive, got {prefix_sec}")));
    }
    Ok(Annotation {
        gt_start_sec: ann.gt_start_sec + prefix_sec,
        gt_end_sec: ann.gt_end_sec + prefix_sec,
        video_duration_sec: ann.video_duration_sec + prefix_sec,
        ..ann.clone()
    })
}

pub fn prepend_noise(track: &SimilarityTrack, prefix_sec: f64, seed: u64, band: NoiseBand) -> Result<SimilarityTrack> {
    if !(prefix_sec.is_finite() && prefix_sec > 0.0) {
        return Err(Error::invalid(format!("prefix_sec must be positive, got {prefix_sec}")));
    }
    if !(band.low.is_finite() && band.high.is_finite() && band.low <= band.high && band.low >= -1.0 && band.high <= 1.0) {
        return Err(Error::invalid(format!(
            "noise band [{}, {}] must be ordered and inside [-1, 1]",
            band.low, band.high
        )));
    }
    let frames = prefix_frames(prefix_sec, track.fps());
    if frames == 0 {
        return Err(Error::invalid(format!(
            "prefix of {prefix_sec} s is shorter than one frame at {} fps",
            track.fps()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..frames).map(|_| rng.random_range(band.low..=band.high)).collect();
    values.extend_from_slice(track.values());
    SimilarityTrack::new(track.video_id(), values, track.fps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::Provenance;
    use crate::planner::Relation;

    fn ann(video: &str, s: f64, e: f64) -> Annotation {
        Annotation {
            video_id: video.into(),
            query: "q".into(),
            gt_start_sec: s,
            gt_end_sec: e,
            video_duration_sec: 30.0,
        }
    }

    fn pred(video: &str, s: f64, e: f64) -> FinalPrediction {
        FinalPrediction {
            video_id: video.into(),
            query: "q".into(),
            start_sec: s,
            end_sec: e,
            combo_score: 0.0,
            relation: Relation::Single,
            per_subevent: vec![],
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn iou_examples() {
        assert!((iou((0.0, 2.0), (1.0, 3.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou((1.0, 4.0), (1.0, 4.0)).unwrap(), 1.0);
        assert_eq!(iou((0.0, 1.0), (2.0, 3.0)).unwrap(), 0.0);
        assert!(iou((1.0, 1.0), (0.0, 2.0)).is_err());
    }

    #[test]
    fn four_pair_fixture() {
        // IoUs 0.8, 0.6, 0.4, 0.2 against a [0, 10) ground truth
        let gts: Vec<_> = (0..4).map(|i| ann(&format!("v{i}"), 0.0, 10.0)).collect();
        let preds = vec![pred("v0", 0.0, 8.0), pred("v1", 0.0, 6.0), pred("v2", 0.0, 4.0), pred("v3", 0.0, 2.0)];
        let r = evaluate(&preds, &gts, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(r.recall(0.3), Some(75.0));
        assert_eq!(r.recall(0.5), Some(50.0));
        assert_eq!(r.recall(0.7), Some(25.0));
        assert_eq!(r.miou, 50.0);
        assert_eq!(r.count, 4);
        assert!(r.to_table().contains("R@0.3"));
    }

    #[test]
    fn threshold_is_strict() {
        // IoU exactly 0.5 does not count toward R@0.5
        let r = evaluate(&[pred("v", 0.0, 5.0)], &[ann("v", 0.0, 10.0)], &[0.5]).unwrap();
        assert_eq!(r.recall(0.5), Some(0.0));
    }

    #[test]
    fn missing_prediction_is_zero() {
        let gts = vec![ann("a", 1.0, 3.0), ann("b", 1.0, 3.0)];
        let r = evaluate(&[pred("a", 1.0, 3.0)], &gts, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(r.miou, 50.0);
    }

    #[test]
    fn duplicates_rejected() {
        let gts = vec![ann("a", 1.0, 3.0), ann("a", 1.0, 3.0)];
        assert!(evaluate(&[], &gts, &DEFAULT_THRESHOLDS).is_err());
        let preds = vec![pred("a", 1.0, 3.0), pred("a", 1.0, 2.0)];
        assert!(evaluate(&preds, &gts[..1], &DEFAULT_THRESHOLDS).is_err());
        assert!(evaluate(&[], &gts[..1], &[1.0]).is_err());
    }

    #[test]
    fn shift_moves_ground_truth() {
        let track = SimilarityTrack::new("v", vec![0.2; 30], 3.0).unwrap();
        let (a, t) = ood_shift(&ann("v", 2.0, 5.0), &track, 3.0, 7).unwrap();
        assert_eq!((a.gt_start_sec, a.gt_end_sec, a.video_duration_sec), (5.0, 8.0, 33.0));
        assert_eq!(t.len(), 39);
        assert!(t.values()[..9].iter().all(|v| (-0.05..=0.05).contains(v)));
        assert_eq!(&t.values()[9..], track.values());
    }

    #[test]
    fn shift_frame_count_and_determinism() {
        let track = SimilarityTrack::new("v", vec![0.2; 10], 3.0).unwrap();
        let a = prepend_noise(&track, 2.0, 11, NoiseBand::default()).unwrap();
        let b = prepend_noise(&track, 2.0, 11, NoiseBand::default()).unwrap();
        let c = prepend_noise(&track, 2.0, 12, NoiseBand::default()).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(prepend_noise(&track, 0.0, 1, NoiseBand::default()).is_err());
        assert!(prepend_noise(&track, 0.1, 1, NoiseBand::default()).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }
}
