//! Combining per-sub-event proposals into one answer.
//!
//! Every way of picking one proposal per sub-event is enumerated, combinations
//! that contradict the planned chronology are dropped, and the best remaining
//! combination by summed score is merged according to the plan's relation:
//! intersection for simultaneous sub-events, the bounding interval otherwise.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{PlanSource, QueryPlan, Relation};
use crate::scoring::ScoredProposal;

/// One proposal per sub-event, in plan order.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub members: Vec<ScoredProposal>,
    /// Index of each member in its sub-event's candidate list.
    pub indices: Vec<usize>,
    pub total_score: f64,
}

/// Full Cartesian product of the candidate lists, in lexicographic index order.
pub fn enumerate_combinations(candidates: &[Vec<ScoredProposal>]) -> Result<Vec<Combination>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no sub-event candidate lists"));
    }
    if let Some(pos) = candidates.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("sub-event {pos} has no candidate proposals")));
    }
    let total: usize = candidates.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut indices = vec![0usize; candidates.len()];
    loop {
        let members: Vec<ScoredProposal> = indices.iter().zip(candidates).map(|(&i, c)| c[i]).collect();
        let total_score = members.iter().map(|p| p.final_score).sum();
        out.push(Combination {
            members,
            indices: indices.clone(),
            total_score,
        });
        // odometer increment, last position fastest
        let mut pos = candidates.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < candidates[pos].len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// True unless a sub-event ranked earlier starts strictly after a later-ranked
/// one ends. Overlap and touching boundaries are allowed.
pub fn respects_order(members: &[ScoredProposal], order: &[usize]) -> bool {
    members.iter().zip(order).all(|(earlier, &ra)| {
        members
            .iter()
            .zip(order)
            .all(|(later, &rb)| ra >= rb || earlier.start <= later.end)
    })
}

/// Drops combinations that violate `order` (chronological rank per sub-event).
pub fn order_filter(combos: Vec<Combination>, order: &[usize]) -> Vec<Combination> {
    combos.into_iter().filter(|c| respects_order(&c.members, order)).collect()
}

/// Merges half-open intervals: intersection for `simultaneously` (None when
/// empty), bounding interval otherwise.
pub fn merge_relation(members: &[(usize, usize)], relation: Relation) -> Option<(usize, usize)> {
    let first = *members.first()?;
    match relation {
        Relation::Simultaneously => {
            let (s, e) = members
                .iter()
                .fold(first, |(s, e), &(a, b)| (s.max(a), e.min(b)));
            (s < e).then_some((s, e))
        }
        Relation::Sequentially | Relation::Single => Some(
            members
                .iter()
                .fold(first, |(s, e), &(a, b)| (s.min(a), e.max(b))),
        ),
    }
}

/// A step of the fallback ladder taken while fusing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionFallback {
    /// Every combination broke the chronology, so the order filter was skipped.
    IgnoredOrder,
    /// Every intersection was empty, so members were merged as sequential.
    MergedSequentially,
}

/// The chosen combination and its merged frame interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub combination: Combination,
    pub interval: (usize, usize),
    /// Relation actually used to merge, after any fallback.
    pub merged_as: Relation,
    pub fallbacks: Vec<FusionFallback>,
}

fn spans(c: &Combination) -> Vec<(usize, usize)> {
    c.members.iter().map(|p| (p.start, p.end)).collect()
}

fn best_merged(combos: &[Combination], relation: Relation) -> Option<(usize, (usize, usize))> {
    combos
        .iter()
        .enumerate()
        .filter_map(|(idx, c)| merge_relation(&spans(c), relation).map(|iv| (idx, iv)))
        .min_by(|&(ia, a), &(ib, b)| {
            combos[ib]
                .total_score
                .partial_cmp(&combos[ia].total_score)
                .unwrap_or(Ordering::Equal)
                .then(a.0.cmp(&b.0))
                .then((a.1 - a.0).cmp(&(b.1 - b.0)))
                .then(ia.cmp(&ib))
        })
}

/// Picks the best combination for `plan`.
///
/// Candidate lists are indexed like `plan.sub_events`. When nothing survives,
/// the order filter is dropped first; if every intersection is still empty the
/// members are merged as sequential.
pub fn select(plan: &QueryPlan, candidates: &[Vec<ScoredProposal>]) -> Result<Selection> {
    if candidates.len() != plan.len() {
        return Err(Error::invalid(format!(
            "plan has {} sub-events but {} candidate lists were given",
            plan.len(),
            candidates.len()
        )));
    }
    let all = enumerate_combinations(candidates)?;
    let mut fallbacks = Vec::new();
    let mut pool = order_filter(all.clone(), &plan.order());
    if pool.is_empty() {
        fallbacks.push(FusionFallback::IgnoredOrder);
        pool = all;
    }
    let mut merged_as = plan.relation;
    let (idx, interval) = match best_merged(&pool, merged_as) {
        Some(found) => found,
        None => {
            fallbacks.push(FusionFallback::MergedSequentially);
            merged_as = Relation::Sequentially;
            best_merged(&pool, merged_as).ok_or_else(|| Error::Internal("bounding merge cannot be empty".into()))?
        }
    };
    Ok(Selection {
        combination: pool.swap_remove(idx),
        interval,
        merged_as,
        fallbacks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubEventSpan {
    pub description: String,
    pub start_sec: f64,
    pub end_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub plan: PlanSource,
    #[serde(default)]
    pub fusion: Vec<FusionFallback>,
}

/// Final answer for one (video, query) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPrediction {
    pub video_id: String,
    pub query: String,
    pub start_sec: f64,
    pub end_sec: f64,
    pub combo_score: f64,
    pub relation: Relation,
    pub per_subevent: Vec<SubEventSpan>,
    pub provenance: Provenance,
}

/// Fuses candidates into a prediction, converting frames to seconds with `fps`.
pub fn predict(
    plan: &QueryPlan,
    candidates: &[Vec<ScoredProposal>],
    video_id: &str,
    fps: f64,
) -> Result<FinalPrediction> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::invalid(format!("fps must be positive, got {fps}")));
    }
    let selection = select(plan, candidates)?;
    let to_sec = |frame: usize| frame as f64 / fps;
    let per_subevent = plan
        .sub_events
        .iter()
        .zip(&selection.combination.members)
        .map(|(ev, p)| SubEventSpan {
            description: ev.description.clone(),
            start_sec: to_sec(p.start),
            end_sec: to_sec(p.end),
        })
        .collect();
    Ok(FinalPrediction {
        video_id: video_id.to_string(),
        query: plan.original_query.clone(),
        start_sec: to_sec(selection.interval.0),
        end_sec: to_sec(selection.interval.1),
        combo_score: selection.combination.total_score,
        relation: plan.relation,
        per_subevent,
        provenance: Provenance {
            plan: plan.provenance,
            fusion: selection.fallbacks,
        },
    })
}
