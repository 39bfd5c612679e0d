//! Training-free temporal grounding over per-frame similarity tracks.
//!
//! A query is split into sub-events by [`planner`], each sub-event's track is
//! scored by [`scoring`], and [`fusion`] combines the results. [`pipeline`]
//! wires the stages to a directory of tracks; [`eval`] measures the output.

pub mod config;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod io;
pub mod pipeline;
pub mod planner;
pub mod scoring;
pub mod signal;
pub mod similarity;
pub mod synth;

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tracks.md")]
    mod tracks {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/fusion.md")]
    mod fusion {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
