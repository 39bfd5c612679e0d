//! Brute-force reference implementations used to check the optimized paths.
//!
//! Everything here is written directly from the definitions: per-split sums of
//! differences, explicit inside/outside means, full triple enumeration, and a
//! plain sort followed by greedy suppression. None of it shares code with the
//! scoring tables or the fusion selector.
#![allow(dead_code)]

use vtg_core::planner::{QueryPlan, Relation};
use vtg_core::scoring::{ScoredProposal, ScoringParams};
use vtg_core::signal::gaussian_smooth;

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    sum / count as f64
}

pub struct BruteScorer {
    raw: Vec<f64>,
    diffs: Vec<f64>,
    params: ScoringParams,
}

impl BruteScorer {
    pub fn new(values: &[f64], params: &ScoringParams) -> Self {
        let smoothed = gaussian_smooth(values, params.gaussian_sigma);
        // diffs[l] = smoothed[l] - smoothed[l-1], diffs[0] unused
        let mut diffs = vec![0.0; values.len()];
        for l in 1..values.len() {
            diffs[l] = smoothed[l] - smoothed[l - 1];
        }
        Self {
            raw: values.to_vec(),
            diffs,
            params: *params,
        }
    }

    pub fn dynamic(&self, a: usize, b: usize) -> f64 {
        let seg = &self.diffs[a + 1..=b];
        if seg.iter().all(|&d| d > self.params.delta) {
            seg.iter().sum()
        } else {
            0.0
        }
    }

    pub fn static_part(&self, k: usize, j: usize) -> f64 {
        let inside = mean(self.raw[k..j].iter().copied());
        let outside = mean(self.raw[..k].iter().chain(&self.raw[j..]).copied());
        inside - outside
    }

    pub fn proposal(&self, i: usize, j: usize) -> ScoredProposal {
        let mut best: Option<ScoredProposal> = None;
        for k in i..j {
            let dynamic_score = if k == i { 0.0 } else { self.dynamic(i, k) };
            let static_score = self.static_part(k, j);
            let final_score = dynamic_score + static_score;
            if best.is_none_or(|b| final_score > b.final_score) {
                best = Some(ScoredProposal {
                    start: i,
                    end: j,
                    split: k,
                    dynamic_score,
                    static_score,
                    final_score,
                });
            }
        }
        best.unwrap()
    }

    pub fn all(&self) -> Vec<ScoredProposal> {
        let n = self.raw.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + self.params.min_frames..=n {
                if j - i < n {
                    out.push(self.proposal(i, j));
                }
            }
        }
        out
    }

    pub fn top_k(&self) -> Vec<ScoredProposal> {
        let mut all = self.all();
        all.sort_by(|a, b| {
            b.final_score
                .partial_cmp(&a.final_score)
                .unwrap()
                .then(a.start.cmp(&b.start))
                .then((a.end - a.start).cmp(&(b.end - b.start)))
        });
        let mut kept: Vec<ScoredProposal> = Vec::new();
        for p in all {
            if kept.len() == self.params.topk {
                break;
            }
            let overlaps = kept.iter().any(|k| {
                let inter = p.end.min(k.end).saturating_sub(p.start.max(k.start)) as f64;
                let union = (p.end - p.start + k.end - k.start) as f64 - inter;
                inter / union > self.params.nms_iou
            });
            if !overlaps {
                kept.push(p);
            }
        }
        kept
    }
}

/// Result of exhaustive fusion: chosen candidate indices, merged interval and
/// whether each fallback fired.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteFusion {
    pub indices: Vec<usize>,
    pub interval: (usize, usize),
    pub ignored_order: bool,
    pub merged_sequentially: bool,
}

fn index_tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |i| {
                    let mut t = prefix.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn merged(spans: &[(usize, usize)], simultaneous: bool) -> Option<(usize, usize)> {
    if simultaneous {
        let s = spans.iter().map(|x| x.0).max().unwrap();
        let e = spans.iter().map(|x| x.1).min().unwrap();
        if s < e {
            Some((s, e))
        } else {
            None
        }
    } else {
        Some((
            spans.iter().map(|x| x.0).min().unwrap(),
            spans.iter().map(|x| x.1).max().unwrap(),
        ))
    }
}

pub fn brute_fusion(plan: &QueryPlan, candidates: &[Vec<ScoredProposal>]) -> BruteFusion {
    let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let tuples = index_tuples(&sizes);
    let consistent = |t: &Vec<usize>| {
        for a in 0..t.len() {
            for b in 0..t.len() {
                let (pa, pb) = (&candidates[a][t[a]], &candidates[b][t[b]]);
                if plan.sub_events[a].order < plan.sub_events[b].order && pa.start > pb.end {
                    return false;
                }
            }
        }
        true
    };
    let mut pool: Vec<Vec<usize>> = tuples.iter().filter(|t| consistent(t)).cloned().collect();
    let ignored_order = pool.is_empty();
    if ignored_order {
        pool = tuples;
    }
    let pick = |simultaneous: bool| {
        let mut best: Option<(f64, (usize, usize), Vec<usize>)> = None;
        for t in &pool {
            let spans: Vec<(usize, usize)> = t.iter().enumerate().map(|(s, &i)| (candidates[s][i].start, candidates[s][i].end)).collect();
            let Some(iv) = merged(&spans, simultaneous) else { continue };
            let mut total = 0.0;
            for (s, &i) in t.iter().enumerate() {
                total += candidates[s][i].final_score;
            }
            let better = match &best {
                None => true,
                Some((bt, biv, _)) => {
                    total > *bt || (total == *bt && (iv.0, iv.1 - iv.0) < (biv.0, biv.1 - biv.0))
                }
            };
            if better {
                best = Some((total, iv, t.clone()));
            }
        }
        best
    };
    let simultaneous = plan.relation == Relation::Simultaneously;
    let (found, merged_sequentially) = match pick(simultaneous) {
        Some(f) => (f, false),
        None => (pick(false).unwrap(), true),
    };
    BruteFusion {
        indices: found.2,
        interval: found.1,
        ignored_order,
        merged_sequentially,
    }
}
