//! Synthetic similarity tracks with a planted event, for tests and demos.
//!
//! A fixture is a low, slightly noisy background, a linear ramp into a high
//! plateau (the event), and a weaker distractor bump elsewhere. The ground
//! truth covers the ramp and the plateau.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::Annotation;
use crate::similarity::SimilarityTrack;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub fps: f64,
    /// Inclusive ranges, in frames.
    pub ramp_len: (usize, usize),
    pub plateau_len: (usize, usize),
    pub lead_len: (usize, usize),
    pub tail_len: (usize, usize),
    pub background: (f64, f64),
    /// Plateau height above the background.
    pub event_rise: (f64, f64),
    /// Distractor height above the background; kept below the event rise.
    pub distractor_rise: (f64, f64),
    pub distractor_len: (usize, usize),
    /// Half-width of the uniform jitter added to every frame.
    pub noise: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            fps: 3.0,
            ramp_len: (3, 8),
            plateau_len: (5, 20),
            lead_len: (10, 30),
            tail_len: (10, 30),
            background: (0.10, 0.20),
            event_rise: (0.40, 0.60),
            distractor_rise: (0.10, 0.20),
            distractor_len: (3, 5),
            noise: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFixture {
    pub track: SimilarityTrack,
    pub annotation: Annotation,
    pub ramp_start: usize,
    pub ramp_len: usize,
    pub plateau_len: usize,
    /// Half-open frame interval of the distractor bump.
    pub distractor: (usize, usize),
}

impl PlantedFixture {
    /// Half-open frame interval of ramp plus plateau.
    pub fn event(&self) -> (usize, usize) {
        (self.ramp_start, self.ramp_start + self.ramp_len + self.plateau_len)
    }
}

fn pick(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

fn pick_f(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

/// Builds fixture number `index` deterministically from `seed`.
pub fn planted_fixture(spec: &FixtureSpec, seed: u64, index: usize) -> PlantedFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let ramp_len = pick(&mut rng, spec.ramp_len);
    let plateau_len = pick(&mut rng, spec.plateau_len);
    let lead = pick(&mut rng, spec.lead_len);
    let tail = pick(&mut rng, spec.tail_len);
    let base = pick_f(&mut rng, spec.background);
    let height = base + pick_f(&mut rng, spec.event_rise);
    let bump_height = base + pick_f(&mut rng, spec.distractor_rise);
    let bump_len = pick(&mut rng, spec.distractor_len);
    let bump_before = rng.random_bool(0.5);

    // keep at least 4 background frames between the bump and the event
    let gap = 4;
    let (lead, tail) = if bump_before {
        (lead.max(bump_len + 2 * gap), tail)
    } else {
        (lead, tail.max(bump_len + 2 * gap))
    };
    let n = lead + ramp_len + plateau_len + tail;
    let ramp_start = lead;
    let plateau_start = ramp_start + ramp_len;
    let event_end = plateau_start + plateau_len;
    let bump_start = if bump_before {
        rng.random_range(gap..=lead - bump_len - gap)
    } else {
        rng.random_range(event_end + gap..=n - bump_len - gap)
    };

    let mut values = vec![base; n];
    for (t, v) in values[ramp_start..plateau_start].iter_mut().enumerate() {
        *v = base + (height - base) * (t + 1) as f64 / (ramp_len + 1) as f64;
    }
    values[plateau_start..event_end].iter_mut().for_each(|v| *v = height);
    values[bump_start..bump_start + bump_len].iter_mut().for_each(|v| *v = bump_height);
    if spec.noise > 0.0 {
        for v in &mut values {
            *v += rng.random_range(-spec.noise..=spec.noise);
        }
    }

    let video_id = format!("synth_{seed}_{index:03}");
    let track = SimilarityTrack::new(video_id.clone(), values, spec.fps).expect("fixture values lie in [-1, 1]");
    let annotation = Annotation {
        video_id,
        query: format!("planted event {index}"),
        gt_start_sec: ramp_start as f64 / spec.fps,
        gt_end_sec: event_end as f64 / spec.fps,
        video_duration_sec: n as f64 / spec.fps,
    };
    PlantedFixture {
        track,
        annotation,
        ramp_start,
        ramp_len,
        plateau_len,
        distractor: (bump_start, bump_start + bump_len),
    }
}

pub fn planted_fixtures(spec: &FixtureSpec, seed: u64, count: usize) -> Vec<PlantedFixture> {
    (0..count).map(|i| planted_fixture(spec, seed, i)).collect()
}
