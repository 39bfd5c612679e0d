//! Proposal scoring: dynamic (rising-transition) and static (inside vs.
//! outside contrast) scores, split-point maximization, and top-k localization.
//!
//! Frame intervals are half-open, `[start, end)`. A proposal `[i, j)` is split at
//! `k` into a dynamic part covering the difference indices `i+1..=k` of the
//! smoothed signal and a static part `[k, j)` evaluated on the raw signal.
//!
//! The scorer removes the first raw value from the signal before building its
//! tables. Every score is invariant to a constant offset, and centering makes
//! flat stretches produce exact zeros instead of rounding residue.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{differences, gaussian_smooth};
use crate::similarity::SimilarityTrack;

pub const DEFAULT_DELTA: f64 = 5e-4;
pub const DEFAULT_TOPK: usize = 3;
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_NMS_IOU: f64 = 0.7;
pub const DEFAULT_MIN_FRAMES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    /// A smoothed difference must exceed this to count as part of a rise.
    pub delta: f64,
    /// Gaussian standard deviation in frames; 0 disables smoothing.
    pub gaussian_sigma: f64,
    /// Number of proposals returned per sub-event.
    pub topk: usize,
    /// Candidates overlapping a better one by more than this IoU are dropped.
    pub nms_iou: f64,
    /// Shortest admissible proposal, in frames.
    pub min_frames: usize,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            gaussian_sigma: DEFAULT_SIGMA,
            topk: DEFAULT_TOPK,
            nms_iou: DEFAULT_NMS_IOU,
            min_frames: DEFAULT_MIN_FRAMES,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::invalid(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.gaussian_sigma.is_finite() && self.gaussian_sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "gaussian_sigma must be >= 0, got {}",
                self.gaussian_sigma
            )));
        }
        if self.topk == 0 {
            return Err(Error::invalid("topk must be positive"));
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(Error::invalid(format!("nms_iou must lie in [0, 1], got {}", self.nms_iou)));
        }
        if self.min_frames == 0 {
            return Err(Error::invalid("min_frames must be positive"));
        }
        Ok(())
    }
}

/// A scored candidate interval `[start, end)` with its best split point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredProposal {
    pub start: usize,
    pub end: usize,
    pub split: usize,
    pub dynamic_score: f64,
    pub static_score: f64,
    pub final_score: f64,
}

impl ScoredProposal {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Temporal IoU of two frame intervals.
    pub fn iou(&self, other: &ScoredProposal) -> f64 {
        frame_iou((self.start, self.end), (other.start, other.end))
    }

    /// Ranking order: higher score, then earlier start, then shorter, then smaller split.
    pub fn rank_cmp(&self, other: &ScoredProposal) -> Ordering {
        other
            .final_score
            .partial_cmp(&self.final_score)
            .unwrap_or(Ordering::Equal)
            .then(self.start.cmp(&other.start))
            .then(self.len().cmp(&other.len()))
            .then(self.split.cmp(&other.split))
    }
}

pub(crate) fn frame_iou(a: (usize, usize), b: (usize, usize)) -> f64 {
    let inter = a.1.min(b.1).saturating_sub(a.0.max(b.0));
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Sum of `diffs` over the dynamic segment `a+1..=b` if every entry exceeds
/// `delta`, else 0. `diffs` is laid out as returned by
/// [`differences`](crate::signal::differences), so the track has
/// `diffs.len() + 1` frames.
pub fn dynamic_score(diffs: &[f64], a: usize, b: usize, delta: f64) -> Result<f64> {
    let frames = diffs.len() + 1;
    if a > b || b >= frames {
        return Err(Error::invalid(format!(
            "dynamic segment ({a}, {b}) out of range for {frames} frames"
        )));
    }
    let segment = &diffs[a..b];
    if segment.iter().all(|&d| d > delta) {
        Ok(segment.iter().sum())
    } else {
        Ok(0.0)
    }
}

/// Prefix sums over a signal, for O(1) range means.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    sums: Vec<f64>,
}

impl PrefixSums {
    pub fn new(values: &[f64]) -> Self {
        let mut sums = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        sums.push(acc);
        for v in values {
            acc += v;
            sums.push(acc);
        }
        Self { sums }
    }

    pub fn len(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum over `[k, j)`.
    #[inline]
    pub fn range_sum(&self, k: usize, j: usize) -> f64 {
        self.sums[j] - self.sums[k]
    }

    /// Mean inside `[k, j)` minus mean outside it. Caller guarantees
    /// `k < j <= len` and `j - k < len`.
    #[inline]
    fn contrast(&self, k: usize, j: usize) -> f64 {
        let n = self.len();
        let inside = self.range_sum(k, j);
        let outside = self.sums[n] - inside;
        inside / (j - k) as f64 - outside / (n - (j - k)) as f64
    }

    /// Static score of `[k, j)`: inside mean minus outside mean.
    pub fn static_score(&self, k: usize, j: usize) -> Result<f64> {
        let n = self.len();
        if k >= j || j > n {
            return Err(Error::invalid(format!("static segment [{k}, {j}) out of range for {n} frames")));
        }
        if j - k == n {
            return Err(Error::invalid("static segment covers the whole track; outside mean is undefined"));
        }
        Ok(self.contrast(k, j))
    }
}

/// Static score of `[k, j)` on `values`. Builds prefix sums on every call; use
/// [`PrefixSums`] or [`ProposalScorer`] when scoring many segments.
pub fn static_score(values: &[f64], k: usize, j: usize) -> Result<f64> {
    PrefixSums::new(values).static_score(k, j)
}

/// Precomputed tables for scoring every proposal of one signal.
///
/// Construction is O(N). Each proposal evaluation costs O(r) where r is the
/// length of the rising run that starts at the proposal's first frame; splits
/// past that run carry no dynamic score and are covered by a per-end suffix
/// maximum of the static score.
#[derive(Debug, Clone)]
pub struct ProposalScorer {
    params: ScoringParams,
    raw: PrefixSums,
    smoothed: Vec<f64>,
    /// `run_end[i]` is the largest `b >= i` with every difference in `i+1..=b` above delta.
    run_end: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    start: u32,
    end: u32,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        match self.score.partial_cmp(&other.score).unwrap_or(Ordering::Equal) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (self.start, self.end - self.start) < (other.start, other.end - other.start),
        }
    }
}

impl ProposalScorer {
    pub fn new(values: &[f64], params: &ScoringParams) -> Result<Self> {
        params.validate()?;
        if values.len() < 2 {
            return Err(Error::invalid("scoring needs at least 2 frames"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signal contains non-finite values"));
        }
        let reference = values[0];
        let centered: Vec<f64> = values.iter().map(|v| v - reference).collect();
        let smoothed = gaussian_smooth(&centered, params.gaussian_sigma);
        let diffs = differences(&smoothed);
        let n = values.len();
        let mut run_end = vec![n - 1; n];
        for i in (0..n - 1).rev() {
            run_end[i] = if diffs[i] > params.delta { run_end[i + 1] } else { i };
        }
        Ok(Self {
            params: *params,
            raw: PrefixSums::new(&centered),
            smoothed,
            run_end,
        })
    }

    pub fn from_track(track: &SimilarityTrack, params: &ScoringParams) -> Result<Self> {
        Self::new(track.values(), params)
    }

    pub fn params(&self) -> &ScoringParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.smoothed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoothed.is_empty()
    }

    pub fn is_admissible(&self, start: usize, end: usize) -> bool {
        start < end && end <= self.len() && end - start >= self.params.min_frames && end - start < self.len()
    }

    #[inline]
    fn dynamic(&self, start: usize, split: usize) -> f64 {
        if split <= self.run_end[start] {
            self.smoothed[split] - self.smoothed[start]
        } else {
            0.0
        }
    }

    fn build(&self, start: usize, end: usize, split: usize) -> ScoredProposal {
        let dynamic_score = self.dynamic(start, split);
        let static_score = self.raw.contrast(split, end);
        ScoredProposal {
            start,
            end,
            split,
            dynamic_score,
            static_score,
            final_score: dynamic_score + static_score,
        }
    }

    /// Scores `[start, end)` by maximizing over every split `start <= k < end`.
    /// Ties go to the smallest split.
    pub fn score(&self, start: usize, end: usize) -> Result<ScoredProposal> {
        if !self.is_admissible(start, end) {
            return Err(Error::invalid(format!(
                "proposal [{start}, {end}) is not admissible for {} frames with min_frames {}",
                self.len(),
                self.params.min_frames
            )));
        }
        let mut best: Option<(f64, usize)> = None;
        for split in start..end {
            let value = self.dynamic(start, split) + self.raw.contrast(split, end);
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, split));
            }
        }
        let (_, split) = best.ok_or_else(|| Error::Internal(format!("no split for [{start}, {end})")))?;
        Ok(self.build(start, end, split))
    }

    /// Visits the best split of every admissible proposal as `(start, end, split, score)`.
    fn for_each_best(&self, mut visit: impl FnMut(usize, usize, usize, f64)) {
        let n = self.len();
        let min_len = self.params.min_frames;
        // best static score over splits k..end, smallest k on ties
        let mut suffix_best: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); n + 1];
        for end in min_len..=n {
            let lowest_start = (end + 1).saturating_sub(n);
            suffix_best[end] = (f64::NEG_INFINITY, end);
            for k in (lowest_start..end).rev() {
                let value = self.raw.contrast(k, end);
                let next = suffix_best[k + 1];
                suffix_best[k] = if value >= next.0 { (value, k) } else { next };
            }
            for start in lowest_start..=end - min_len {
                let run_last = self.run_end[start].min(end - 1);
                let mut best = (f64::NEG_INFINITY, start);
                for split in start..=run_last {
                    let value = (self.smoothed[split] - self.smoothed[start]) + self.raw.contrast(split, end);
                    if value > best.0 {
                        best = (value, split);
                    }
                }
                if run_last + 1 < end {
                    let tail = suffix_best[run_last + 1];
                    if tail.0 > best.0 {
                        best = tail;
                    }
                }
                visit(start, end, best.1, best.0);
            }
        }
    }

    /// Every admissible proposal with its best split, ordered by end then start.
    pub fn score_all(&self) -> Vec<ScoredProposal> {
        let mut out = Vec::new();
        self.for_each_best(|start, end, split, _| out.push(self.build(start, end, split)));
        out
    }

    /// Up to `topk` proposals in rank order after greedy 1-D non-maximum suppression.
    pub fn top_k(&self) -> Result<Vec<ScoredProposal>> {
        let n = self.len();
        if n < self.params.min_frames + 1 {
            return Err(Error::invalid(format!(
                "track has {n} frames; localization needs at least min_frames + 1 = {}",
                self.params.min_frames + 1
            )));
        }
        let mut candidates = Vec::new();
        self.for_each_best(|start, end, _, score| {
            candidates.push(Candidate {
                score,
                start: start as u32,
                end: end as u32,
            })
        });
        // Greedy NMS over the ranked list keeps, at each step, the best candidate
        // not suppressed by anything kept so far, so topk linear passes suffice.
        let mut kept: Vec<Candidate> = Vec::with_capacity(self.params.topk);
        while kept.len() < self.params.topk {
            let mut best: Option<&Candidate> = None;
            for c in &candidates {
                if best.is_some_and(|b| !c.beats(b)) {
                    continue;
                }
                let suppressed = kept.iter().any(|k| {
                    (k.start, k.end) == (c.start, c.end)
                        || frame_iou((k.start as usize, k.end as usize), (c.start as usize, c.end as usize))
                            > self.params.nms_iou
                });
                if !suppressed {
                    best = Some(c);
                }
            }
            match best {
                Some(c) => kept.push(*c),
                None => break,
            }
        }
        kept.iter()
            .map(|c| self.score(c.start as usize, c.end as usize))
            .collect()
    }
}

/// Scores a single proposal `[start, end)` of `track`.
pub fn proposal_score(
    track: &SimilarityTrack,
    params: &ScoringParams,
    start: usize,
    end: usize,
) -> Result<ScoredProposal> {
    ProposalScorer::from_track(track, params)?.score(start, end)
}

/// Top-k proposals for one sub-event track, best first.
pub fn localize_topk(track: &SimilarityTrack, params: &ScoringParams) -> Result<Vec<ScoredProposal>> {
    ProposalScorer::from_track(track, params)?.top_k()
}

/// The interval with the highest mean similarity, ignoring transitions.
///
/// Scores carry the mean in both `static_score` and `final_score`; the dynamic
/// part is zero and `split == start`.
pub fn naive_baseline(track: &SimilarityTrack, min_frames: usize) -> Result<ScoredProposal> {
    let values = track.values();
    let n = values.len();
    if min_frames == 0 {
        return Err(Error::invalid("min_frames must be positive"));
    }
    if n < min_frames + 1 {
        return Err(Error::invalid(format!(
            "track has {n} frames; the baseline needs at least min_frames + 1 = {}",
            min_frames + 1
        )));
    }
    let reference = values[0];
    let centered: Vec<f64> = values.iter().map(|v| v - reference).collect();
    let prefix = PrefixSums::new(&centered);
    let mut best: Option<(f64, usize, usize)> = None;
    for start in 0..n {
        for end in start + min_frames..=n {
            if end - start >= n {
                continue;
            }
            let mean = prefix.range_sum(start, end) / (end - start) as f64;
            let better = match best {
                None => true,
                Some((b, s, e)) => match mean.partial_cmp(&b).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => (start, end - start) < (s, e - s),
                },
            };
            if better {
                best = Some((mean, start, end));
            }
        }
    }
    let (mean, start, end) = best.ok_or_else(|| Error::Internal("no admissible baseline interval".into()))?;
    let mean = mean + reference;
    Ok(ScoredProposal {
        start,
        end,
        split: start,
        dynamic_score: 0.0,
        static_score: mean,
        final_score: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn track(values: &[f64]) -> SimilarityTrack {
        SimilarityTrack::new("t", values.to_vec(), 3.0).unwrap()
    }

    fn params(sigma: f64, delta: f64, topk: usize) -> ScoringParams {
        ScoringParams {
            delta,
            gaussian_sigma: sigma,
            topk,
            ..ScoringParams::default()
        }
    }

    #[test]
    fn defaults() {
        let p = ScoringParams::default();
        assert_eq!(p.delta, 5e-4);
        assert_eq!(p.topk, 3);
        assert_eq!(p.gaussian_sigma, 2.0);
        assert_eq!(p.nms_iou, 0.7);
        assert_eq!(p.min_frames, 2);
    }

    #[test]
    fn dynamic_examples() {
        let d = differences(&[0.0, 0.1, 0.2, 0.3]);
        assert!((dynamic_score(&d, 0, 3, 0.05).unwrap() - 0.3).abs() < 1e-12);
        let d = differences(&[0.0, 0.1, 0.05, 0.3]);
        assert_eq!(dynamic_score(&d, 0, 3, 0.05).unwrap(), 0.0);
        assert_eq!(dynamic_score(&d, 2, 2, 0.05).unwrap(), 0.0);
        assert!(dynamic_score(&d, 2, 4, 0.05).is_err());
        assert!(dynamic_score(&d, 3, 2, 0.05).is_err());
    }

    #[test]
    fn static_examples() {
        assert_eq!(static_score(&[1.0, 1.0, 0.0, 0.0], 0, 2).unwrap(), 1.0);
        assert_eq!(static_score(&[0.0, 1.0, 1.0, 0.0], 1, 3).unwrap(), 1.0);
        assert!(static_score(&[0.3; 6], 2, 5).unwrap().abs() < 1e-15);
        assert!(static_score(&[0.3; 6], 0, 6).is_err());
        assert!(static_score(&[0.3; 6], 3, 3).is_err());
    }

    #[test]
    fn static_halves_are_antisymmetric() {
        let s = [0.2, -0.4, 0.9, 0.1, 0.5, -0.3];
        let a = static_score(&s, 0, 3).unwrap();
        let b = static_score(&s, 3, 6).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn split_at_rise() {
        let t = track(&[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let p = proposal_score(&t, &params(0.0, 0.5, 3), 1, 4).unwrap();
        assert_eq!(p.split, 2);
        assert!((p.dynamic_score - 1.0).abs() < 1e-12);
        assert!((p.static_score - 1.0).abs() < 1e-12);
        assert!((p.final_score - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_track_scores_zero() {
        let t = track(&[0.37; 12]);
        let p = params(2.0, 0.0, 3);
        for prop in ProposalScorer::from_track(&t, &p).unwrap().score_all() {
            assert_eq!(prop.final_score, 0.0);
            assert_eq!(prop.dynamic_score, 0.0);
            assert_eq!(prop.static_score, 0.0);
        }
        let top = localize_topk(&t, &p).unwrap();
        assert_eq!(top.len(), 3);
        assert!(top.iter().all(|q| q.final_score == 0.0));
        assert_eq!(localize_topk(&t, &p).unwrap(), top);
        // earliest, shortest first
        assert_eq!((top[0].start, top[0].end), (0, 2));
    }

    #[test]
    fn inadmissible_proposals_rejected() {
        let t = track(&[0.1, 0.2, 0.3, 0.4]);
        let p = ScoringParams::default();
        assert!(proposal_score(&t, &p, 0, 4).is_err());
        assert!(proposal_score(&t, &p, 2, 3).is_err());
        assert!(proposal_score(&t, &p, 3, 2).is_err());
        assert!(localize_topk(&track(&[0.1, 0.2]), &p).is_err());
    }

    #[test]
    fn baseline_examples() {
        let b = naive_baseline(&track(&[0.0, 0.0, 1.0, 1.0, 0.0]), 2).unwrap();
        assert_eq!((b.start, b.end), (2, 4));
        assert_eq!(b.final_score, 1.0);
        assert_eq!(b.split, b.start);
        let b = naive_baseline(&track(&[0.1; 7]), 2).unwrap();
        assert_eq!((b.start, b.end), (0, 2));
    }

    #[test]
    fn rejects_bad_params() {
        let t = track(&[0.1, 0.2, 0.3]);
        let mut p = ScoringParams { topk: 0, ..Default::default() };
        assert!(localize_topk(&t, &p).is_err());
        p = ScoringParams { nms_iou: 1.5, ..Default::default() };
        assert!(localize_topk(&t, &p).is_err());
        p = ScoringParams { delta: -1.0, ..Default::default() };
        assert!(localize_topk(&t, &p).is_err());
    }

    proptest! {
        #[test]
        fn table_route_matches_split_loop(
            values in prop::collection::vec(-1.0f64..1.0, 3..30),
            sigma in prop::sample::select(vec![0.0, 1.0, 2.0]),
            delta in prop::sample::select(vec![0.0, 5e-4, 0.05]),
        ) {
            let scorer = ProposalScorer::new(&values, &params(sigma, delta, 3)).unwrap();
            for p in scorer.score_all() {
                prop_assert_eq!(p, scorer.score(p.start, p.end).unwrap());
            }
        }

        #[test]
        fn telescoping(
            values in prop::collection::vec(-1.0f64..1.0, 3..30),
            sigma in prop::sample::select(vec![0.0, 1.0, 2.0]),
        ) {
            let delta = 0.0;
            let smoothed = gaussian_smooth(&values, sigma);
            let d = differences(&smoothed);
            for a in 0..values.len() {
                for b in a..values.len() {
                    let dy = dynamic_score(&d, a, b, delta).unwrap();
                    if dy != 0.0 {
                        prop_assert!((dy - (smoothed[b] - smoothed[a])).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn final_is_sum_of_parts(values in prop::collection::vec(-1.0f64..1.0, 3..25)) {
            let scorer = ProposalScorer::new(&values, &params(1.0, 5e-4, 3)).unwrap();
            for p in scorer.score_all() {
                prop_assert_eq!(p.final_score, p.dynamic_score + p.static_score);
                prop_assert!(p.start <= p.split && p.split < p.end);
            }
        }
    }
}
