use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use vtg_core::config::PipelineConfig;
use vtg_core::error::Error;
use vtg_core::eval::{derive_seed, evaluate as score, prepend_noise, shift_annotation, Annotation, NoiseBand};
use vtg_core::fusion::FinalPrediction;
use vtg_core::io::{read_json, read_jsonl, read_track, read_track_for, write_json, write_jsonl, write_track};
use vtg_core::pipeline::{fuse as fuse_set, localize_plan, ground, ProposalSet, TrackStore};
use vtg_core::planner::{plan_query, PlannerConfig, QueryPlan};

use crate::args::*;

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidInput(msg.into()).into()
}

fn load_config(args: &ConfigArgs) -> Result<PipelineConfig> {
    match &args.config {
        Some(path) => Ok(PipelineConfig::load(path)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn apply_scoring(cfg: &mut PipelineConfig, args: &ScoringArgs) {
    let s = &mut cfg.scoring;
    if let Some(v) = args.delta {
        s.delta = v;
    }
    if let Some(v) = args.sigma {
        s.gaussian_sigma = v;
    }
    if let Some(v) = args.topk {
        s.topk = v;
    }
    if let Some(v) = args.nms_iou {
        s.nms_iou = v;
    }
    if let Some(v) = args.min_frames {
        s.min_frames = v;
    }
}

/// Planner settings after flags, or `None` when the language model is off.
fn apply_planner(cfg: &mut PipelineConfig, args: &PlannerArgs) -> Result<()> {
    if args.no_llm {
        cfg.planner = None;
        return Ok(());
    }
    let mut planner = match (cfg.planner.take(), &args.endpoint_url) {
        (Some(p), _) => p,
        (None, Some(url)) => {
            let model = args
                .model
                .clone()
                .ok_or_else(|| input_error("--endpoint-url needs --model when no [planner] section is configured"))?;
            PlannerConfig::new(url.clone(), model)
        }
        (None, None) => return Ok(()),
    };
    if let Some(v) = &args.endpoint_url {
        planner.endpoint_url = v.clone();
    }
    if let Some(v) = &args.model {
        planner.model_name = v.clone();
    }
    if let Some(v) = &args.api_key_env {
        planner.api_key_env_var = v.clone();
    }
    if let Some(v) = args.max_retries {
        planner.max_retries = v;
    }
    if let Some(v) = args.timeout_sec {
        planner.timeout = Duration::try_from_secs_f64(v).map_err(|e| input_error(format!("--timeout-sec: {e}")))?;
    }
    if let Some(v) = &args.cache_dir {
        planner.cache_dir = v.clone();
    }
    cfg.planner = Some(planner);
    Ok(())
}

fn make_plan(query: &str, planner: Option<&PlannerConfig>) -> Result<QueryPlan> {
    match planner {
        Some(p) => Ok(plan_query(query, p)?),
        None => Ok(QueryPlan::fallback(query)),
    }
}

fn read_plan(path: &Path) -> Result<QueryPlan> {
    let plan: QueryPlan = read_json(path)?;
    plan.validate().with_context(|| format!("{}", path.display()))?;
    Ok(plan)
}

fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => Ok(write_json(path, value)?),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn required(value: Option<PathBuf>, flag: &str, key: &str) -> Result<PathBuf> {
    value.ok_or_else(|| input_error(format!("{flag} is required (or set paths.{key} in the config)")))
}

pub fn plan(args: PlanArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_planner(&mut cfg, &args.planner)?;
    if cfg.planner.is_none() && !args.planner.no_llm {
        log::warn!("no planner configured; writing the single-event plan");
    }
    let plan = make_plan(&args.query, cfg.planner.as_ref())?;
    emit_json(&plan, args.output.as_deref())
}

pub fn localize(args: LocalizeArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_scoring(&mut cfg, &args.scoring);
    let cfg = cfg.normalized()?;
    let plan = read_plan(&args.plan)?;
    let tracks = match (&args.tracks_dir, &args.video_id) {
        (Some(dir), Some(video)) => TrackStore::new(dir).load_plan(video, &plan)?,
        _ if !args.tracks.is_empty() => args.tracks.iter().map(|p| read_track(p)).collect::<Result<_, _>>()?,
        _ => return Err(input_error("give one --track per sub-event, or --tracks-dir with --video-id")),
    };
    let set = localize_plan(&plan, &tracks, &cfg.scoring)?;
    emit_json(&set, args.output.as_deref())
}

pub fn fuse(args: FuseArgs) -> Result<()> {
    let plan = read_plan(&args.plan)?;
    let set: ProposalSet = read_json(&args.proposals)?;
    let pred = fuse_set(&plan, &set).with_context(|| format!("{}", args.proposals.display()))?;
    match &args.output {
        Some(path) => write_jsonl(path, &[pred])?,
        None => println!("{}", serde_json::to_string(&pred)?),
    }
    Ok(())
}

pub fn pipeline(args: PipelineArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_scoring(&mut cfg, &args.scoring);
    apply_planner(&mut cfg, &args.planner)?;
    let cfg = cfg.normalized()?;
    if cfg.planner.is_none() && !args.planner.no_llm {
        log::warn!("no planner configured; every query is treated as a single event");
    }
    let annotations_path = required(args.annotations.or(cfg.paths.annotations.clone()), "--annotations", "annotations")?;
    let tracks = required(args.tracks.or(cfg.paths.tracks_dir.clone()), "--tracks", "tracks_dir")?;
    let output = required(args.output.or(cfg.paths.predictions.clone()), "--output", "predictions")?;

    let annotations: Vec<Annotation> = read_jsonl(&annotations_path)?;
    let store = TrackStore::new(tracks);
    let run = || {
        annotations
            .par_iter()
            .map(|ann| {
                let plan = make_plan(&ann.query, cfg.planner.as_ref())?;
                ground(&plan, &ann.video_id, &store, &cfg.scoring)
                    .with_context(|| format!("video `{}`, query {:?}", ann.video_id, ann.query))
            })
            .collect::<Result<Vec<FinalPrediction>>>()
    };
    let preds = if args.jobs == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .context("starting worker threads")?
            .install(run)?
    };
    write_jsonl(&output, &preds)?;
    log::info!("wrote {} predictions to {}", preds.len(), output.display());
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(t) = args.thresholds {
        cfg.thresholds = t;
    }
    let cfg = cfg.normalized()?;
    let preds_path = required(args.predictions.or(cfg.paths.predictions.clone()), "--predictions", "predictions")?;
    let gts_path = required(args.annotations.or(cfg.paths.annotations.clone()), "--annotations", "annotations")?;
    let preds: Vec<FinalPrediction> = read_jsonl(&preds_path)?;
    let gts: Vec<Annotation> = read_jsonl(&gts_path)?;
    let report = score(&preds, &gts, &cfg.thresholds)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    Ok(())
}

pub fn ood_shift(args: OodShiftArgs) -> Result<()> {
    let band = NoiseBand { low: args.low, high: args.high };
    let annotations: Vec<Annotation> = read_jsonl(&args.annotations)?;
    let shifted = annotations
        .iter()
        .map(|a| shift_annotation(a, args.prefix_sec))
        .collect::<Result<Vec<_>, _>>()?;

    let store = TrackStore::new(&args.tracks);
    let videos: BTreeSet<&str> = annotations.iter().map(|a| a.video_id.as_str()).collect();
    let videos: Vec<&str> = videos.into_iter().collect();
    let jobs = videos
        .iter()
        .map(|&video| {
            let files = store.files_for(video)?;
            if files.is_empty() {
                return Err(input_error(format!(
                    "no tracks for video `{video}` under {}",
                    args.tracks.display()
                )));
            }
            Ok(files.into_iter().map(move |f| (video, f)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();

    jobs.par_iter().try_for_each(|(video, path)| -> Result<()> {
        let track = read_track_for(path, video)?;
        // every track of a video gets the same inserted frames
        let noisy = prepend_noise(&track, args.prefix_sec, derive_seed(args.seed, video), band)?;
        let rel = path.strip_prefix(&args.tracks).expect("store paths live under the store");
        let dest = args.out_tracks.join(rel);
        if let Some(parent) = dest.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        write_track(&noisy, &dest)?;
        Ok(())
    })?;
    write_jsonl(&args.out_annotations, &shifted)?;
    Ok(())
}
