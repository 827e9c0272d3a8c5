//! End-to-end processing of a frame sequence, volume by volume:
//! slicing, segmentation, angles, slice saliency, projection, focus
//! selection and grouping. Each stage can also be run on its own against
//! an on-disk cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{aggregate_metrics, load_ground_truth, selection_metrics, GroundTruth, SelectionMetrics};
use crate::grouping::{average_motion_signature, select_objects, FrameContext, GroupingParams, MotionSignature, ObjectSelection, SizeTracker};
use crate::io;
use crate::motion_feature::{angles_for_stack, render_angle_map, RegionAngle};
use crate::raster::{BBox, Mask};
use crate::saliency::{project_to_frame, render_saliency_map, stack_saliency, FrameSaliency, SaliencyParams, SliceSaliency};
use crate::segmentation::{render_labels, segment_slice, Segmentation, SegmentationParams};
use crate::volume::{build_volume, count_frames, extract_slices, load_frames, window_frames, Axis, Frame, FrameVolume};

/// Per-slice segmentations of the three stacks of one volume.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSegmentation {
    pub xy: Vec<Segmentation>,
    pub xt: Vec<Segmentation>,
    pub yt: Vec<Segmentation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeAngles {
    pub xt: Vec<Vec<RegionAngle>>,
    pub yt: Vec<Vec<RegionAngle>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSaliency {
    pub xt: Vec<SliceSaliency>,
    pub yt: Vec<SliceSaliency>,
    /// One per frame of the volume, `frame` is the offset within it.
    pub frames: Vec<FrameSaliency>,
}

pub fn segment_stack(volume: &FrameVolume, axis: Axis, params: &SegmentationParams) -> Vec<Segmentation> {
    extract_slices(volume, axis)
        .slices
        .par_iter()
        .map(|s| segment_slice(s, params))
        .collect()
}

pub fn segment_volume(volume: &FrameVolume, params: &SegmentationParams) -> VolumeSegmentation {
    VolumeSegmentation {
        xy: segment_stack(volume, Axis::XY, params),
        xt: segment_stack(volume, Axis::XT, params),
        yt: segment_stack(volume, Axis::YT, params),
    }
}

pub fn volume_angles(seg: &VolumeSegmentation) -> VolumeAngles {
    VolumeAngles { xt: angles_for_stack(&seg.xt), yt: angles_for_stack(&seg.yt) }
}

pub fn volume_saliency(seg: &VolumeSegmentation, angles: &VolumeAngles, params: &SaliencyParams) -> VolumeSaliency {
    let xt = stack_saliency(&seg.xt, &angles.xt, params);
    let yt = stack_saliency(&seg.yt, &angles.yt, params);
    let frames = seg
        .xy
        .par_iter()
        .enumerate()
        .map(|(t, xy)| project_to_frame(t, xy, &xt, &yt, &seg.xt, &seg.yt))
        .collect();
    VolumeSaliency { xt, yt, frames }
}

/// Motion signature of every region of every frame.
pub fn volume_signatures(seg: &VolumeSegmentation, angles: &VolumeAngles) -> Vec<Vec<MotionSignature>> {
    seg.xy
        .par_iter()
        .enumerate()
        .map(|(t, xy)| {
            (0..xy.regions.len())
                .map(|id| average_motion_signature(id, t, xy, &angles.xt, &seg.xt, &angles.yt, &seg.yt))
                .collect()
        })
        .collect()
}

/// Grouping for every frame of a volume. Frames are processed in order so
/// the size guard sees the sizes of earlier frames; selections carry
/// absolute frame indices.
pub fn select_volume(
    seg: &VolumeSegmentation,
    signatures: Vec<Vec<MotionSignature>>,
    saliency: &[FrameSaliency],
    first_frame: usize,
    params: &GroupingParams,
) -> Vec<ObjectSelection> {
    let mut tracker = SizeTracker::default();
    let mut out = Vec::new();
    for (t, sigs) in signatures.into_iter().enumerate() {
        let ctx = FrameContext {
            frame: first_frame + t,
            xy: &seg.xy[t],
            saliency: saliency[t].clone(),
            signatures: sigs,
        };
        out.extend(select_objects(ctx, &mut tracker, params));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub frame: usize,
    pub cycle: usize,
    pub seed_region: usize,
    pub seed_saliency: f64,
    pub members: Vec<usize>,
    pub bbox: BBox,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetricsRecord {
    pub frame: usize,
    #[serde(flatten)]
    pub metrics: SelectionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub index: usize,
    pub first_frame: usize,
    pub frame_count: usize,
    pub selections: Vec<SelectionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load_s: f64,
    pub segment_s: f64,
    pub motion_s: f64,
    pub saliency_s: f64,
    pub select_s: f64,
    pub write_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub volumes: Vec<VolumeReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frame_metrics: Vec<FrameMetricsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate_metrics: Option<SelectionMetrics>,
    /// Written separately to `timing.json` so reports stay reproducible.
    #[serde(skip)]
    pub timings: StageTimings,
}

/// Optional debug and inspection outputs.
#[derive(Debug, Clone, Default)]
pub struct ArtifactOptions {
    /// Per-frame normalized saliency PNGs (`sal_%04d.png`).
    pub saliency_dir: Option<PathBuf>,
    /// Per-region saliency values keyed by frame and region id.
    pub saliency_json: Option<PathBuf>,
    /// X-Y label maps in random colors (`labels_%04d.png`).
    pub labels_dir: Option<PathBuf>,
    /// X-T angle maps (`angles_xt_%04d_y%04d.png`), one per slice.
    pub angles_dir: Option<PathBuf>,
}

pub fn mask_file_name(frame: usize, cycle: usize) -> String {
    format!("sel_f{frame:04}_c{cycle}.png")
}

/// Parses `sel_f%04d_c%d.png` back into `(frame, cycle)`.
pub fn parse_mask_file_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("sel_f")?.strip_suffix(".png")?;
    let (frame, cycle) = rest.split_once("_c")?;
    Some((frame.parse().ok()?, cycle.parse().ok()?))
}

/// Runs `f` on a pool of `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Frames of the configured input, windowed into volumes.
pub fn load_volumes(config: &PipelineConfig) -> Result<Vec<FrameVolume>> {
    let dir = config
        .input_dir
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("input_dir is required".into()))?;
    if !dir.is_dir() {
        return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "input directory not found")));
    }
    let count = config.count.unwrap_or_else(|| count_frames(dir, &config.pattern, config.start));
    let frames = load_frames(dir, &config.pattern, config.start..config.start + count)?;
    if frames.len() < 2 {
        return Err(Error::TooFewFrames(frames.len()));
    }
    window_frames(frames, config.volume_size).into_iter().map(build_volume).collect()
}

fn load_gt_for(config: &PipelineConfig, volumes: &[FrameVolume]) -> Result<Vec<GroundTruth>> {
    let Some(dir) = &config.gt_dir else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for v in volumes {
        let first = v.frames()[0].index;
        out.extend(load_ground_truth(dir, &config.pattern, first..first + v.depth())?);
    }
    Ok(out)
}

fn require_output(config: &PipelineConfig) -> Result<&Path> {
    config
        .output_dir
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("output_dir is required".into()))
}

fn emit_saliency(opts: &ArtifactOptions, vol_idx: usize, first: usize, seg: &VolumeSegmentation, sal: &VolumeSaliency) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let _ = vol_idx;
    if let Some(dir) = &opts.saliency_dir {
        io::create_dir(dir)?;
        for (t, fs) in sal.frames.iter().enumerate() {
            let img = render_saliency_map(fs, &seg.xy[t].label_map);
            io::save_gray(&dir.join(format!("sal_{:04}.png", first + t)), &img)?;
        }
    }
    let mut values = BTreeMap::new();
    if opts.saliency_json.is_some() {
        for (t, fs) in sal.frames.iter().enumerate() {
            let per_region = fs.values.iter().enumerate().map(|(id, &v)| (id.to_string(), v)).collect();
            values.insert(format!("{:04}", first + t), per_region);
        }
    }
    Ok(values)
}

fn emit_debug(opts: &ArtifactOptions, config: &PipelineConfig, first: usize, seg: &VolumeSegmentation, angles: Option<&VolumeAngles>) -> Result<()> {
    if let Some(dir) = &opts.labels_dir {
        io::create_dir(dir)?;
        for (t, s) in seg.xy.iter().enumerate() {
            let p = dir.join(format!("labels_{:04}.png", first + t));
            render_labels(&s.label_map, config.render_seed).to_image().save(&p).map_err(|e| Error::image(&p, e))?;
        }
    }
    if let (Some(dir), Some(angles)) = (&opts.angles_dir, angles) {
        io::create_dir(dir)?;
        for (y, s) in seg.xt.iter().enumerate() {
            let p = dir.join(format!("angles_xt_{first:04}_y{y:04}.png"));
            io::save_gray(&p, &render_angle_map(&s.label_map, &angles.xt[y]))?;
        }
    }
    Ok(())
}

fn records_for(selections: &[ObjectSelection], saliency: &[FrameSaliency], first: usize) -> Vec<SelectionRecord> {
    selections
        .iter()
        .map(|s| SelectionRecord {
            frame: s.frame,
            cycle: s.cycle,
            seed_region: s.seed_region,
            seed_saliency: saliency[s.frame - first].values[s.seed_region],
            members: s.members.iter().copied().collect(),
            bbox: s.bbox,
            size: s.size,
        })
        .collect()
}

fn write_masks(out: &Path, selections: &[ObjectSelection]) -> Result<()> {
    for s in selections {
        let mask = s.mask.as_ref().expect("fresh selections carry masks");
        io::save_gray(&out.join(mask_file_name(s.frame, s.cycle)), &mask.to_gray())?;
    }
    Ok(())
}

/// Union of all cycles per frame, scored against ground truth.
fn score(selections: &[ObjectSelection], gt: &[GroundTruth], volumes: &[FrameVolume]) -> Result<Vec<FrameMetricsRecord>> {
    let mut out = Vec::new();
    let mut gt_iter = gt.iter();
    for v in volumes {
        for f in v.frames() {
            let g = gt_iter.next().expect("ground truth loaded per frame");
            let mut mask = Mask::new(v.width(), v.height());
            for s in selections.iter().filter(|s| s.frame == f.index) {
                mask.union_with(s.mask.as_ref().expect("fresh selections carry masks"));
            }
            out.push(FrameMetricsRecord { frame: f.index, metrics: selection_metrics(&mask, g)? });
        }
    }
    Ok(out)
}

fn finish_report(
    out: &Path,
    volumes: &[FrameVolume],
    per_volume: Vec<(Vec<ObjectSelection>, Vec<FrameSaliency>)>,
    gt: &[GroundTruth],
    mut timings: StageTimings,
) -> Result<RunReport> {
    let started = Instant::now();
    let mut reports = Vec::new();
    let mut all = Vec::new();
    for (k, (v, (sels, sal))) in volumes.iter().zip(per_volume).enumerate() {
        let first = v.frames()[0].index;
        write_masks(out, &sels)?;
        reports.push(VolumeReport {
            index: k,
            first_frame: first,
            frame_count: v.depth(),
            selections: records_for(&sels, &sal, first),
        });
        all.extend(sels);
    }
    let frame_metrics = if gt.is_empty() { Vec::new() } else { score(&all, gt, volumes)? };
    let aggregate = aggregate_metrics(&frame_metrics.iter().map(|m| m.metrics).collect::<Vec<_>>());
    let report = RunReport { volumes: reports, frame_metrics, aggregate_metrics: aggregate, timings: StageTimings::default() };
    io::write_json(&out.join("report.json"), &report)?;
    timings.write_s += started.elapsed().as_secs_f64();
    io::write_json(&out.join("timing.json"), &timings)?;
    Ok(RunReport { timings, ..report })
}

/// Full pipeline, in memory, writing masks, `report.json` and `timing.json`
/// to the configured output directory. Inputs are read and checked before
/// anything is written.
pub fn run_pipeline(config: &PipelineConfig, opts: &ArtifactOptions) -> Result<RunReport> {
    config.validate()?;
    let out = require_output(config)?.to_path_buf();
    with_threads(config.threads, || {
        let mut timings = StageTimings::default();
        let clock = Instant::now();
        let volumes = load_volumes(config)?;
        let gt = load_gt_for(config, &volumes)?;
        timings.load_s = clock.elapsed().as_secs_f64();
        io::create_dir(&out)?;

        let mut per_volume = Vec::with_capacity(volumes.len());
        let mut saliency_values = BTreeMap::new();
        for (k, v) in volumes.iter().enumerate() {
            let first = v.frames()[0].index;
            let clock = Instant::now();
            let seg = segment_volume(v, &config.segmentation);
            timings.segment_s += clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            let angles = volume_angles(&seg);
            timings.motion_s += clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            let sal = volume_saliency(&seg, &angles, &config.saliency);
            timings.saliency_s += clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            let sigs = volume_signatures(&seg, &angles);
            let sels = select_volume(&seg, sigs, &sal.frames, first, &config.grouping);
            timings.select_s += clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            saliency_values.extend(emit_saliency(opts, k, first, &seg, &sal)?);
            emit_debug(opts, config, first, &seg, Some(&angles))?;
            timings.write_s += clock.elapsed().as_secs_f64();
            per_volume.push((sels, sal.frames));
        }
        if let Some(p) = &opts.saliency_json {
            io::write_json(p, &saliency_values)?;
        }
        finish_report(&out, &volumes, per_volume, &gt, timings)
    })?
}

fn volume_dir(cache: &Path, k: usize) -> PathBuf {
    cache.join(format!("vol_{k:03}"))
}

fn read_segmentation(cache: &Path, k: usize, volume: &FrameVolume) -> Result<VolumeSegmentation> {
    let path = volume_dir(cache, k).join("labels.bin");
    let mut maps = io::read_label_maps(&path)?.into_iter();
    let malformed = |reason: String| Error::Malformed { path: path.clone(), reason };
    let (w, h, t) = (volume.width(), volume.height(), volume.depth());
    if maps.len() != t + h + w {
        return Err(malformed(format!("expected {} label maps, found {}", t + h + w, maps.len())));
    }
    let mut rebuild = |axis: Axis| -> Result<Vec<Segmentation>> {
        let stack = extract_slices(volume, axis);
        stack
            .slices
            .iter()
            .map(|img| {
                let lm = maps.next().expect("count checked");
                Segmentation::from_label_map(lm, img).map_err(|e| malformed(e.to_string()))
            })
            .collect()
    };
    Ok(VolumeSegmentation { xy: rebuild(Axis::XY)?, xt: rebuild(Axis::XT)?, yt: rebuild(Axis::YT)? })
}

/// Stage 1: segment every stack and cache the label maps.
pub fn run_segment_stage(config: &PipelineConfig, cache: &Path, opts: &ArtifactOptions) -> Result<()> {
    config.validate()?;
    with_threads(config.threads, || {
        let volumes = load_volumes(config)?;
        for (k, v) in volumes.iter().enumerate() {
            let seg = segment_volume(v, &config.segmentation);
            let dir = volume_dir(cache, k);
            io::create_dir(&dir)?;
            let maps = seg.xy.iter().chain(&seg.xt).chain(&seg.yt).map(|s| &s.label_map);
            let maps: Vec<_> = maps.collect();
            io::write_label_maps(&dir.join("labels.bin"), maps.into_iter())?;
            emit_debug(opts, config, v.frames()[0].index, &seg, None)?;
        }
        Ok(())
    })?
}

/// Stage 2: angles and saliency from cached label maps.
pub fn run_saliency_stage(config: &PipelineConfig, cache: &Path, opts: &ArtifactOptions) -> Result<()> {
    config.validate()?;
    with_threads(config.threads, || {
        let volumes = load_volumes(config)?;
        let mut saliency_values = BTreeMap::new();
        for (k, v) in volumes.iter().enumerate() {
            let seg = read_segmentation(cache, k, v)?;
            let angles = volume_angles(&seg);
            let sal = volume_saliency(&seg, &angles, &config.saliency);
            io::write_json(&volume_dir(cache, k).join("saliency.json"), &sal)?;
            let first = v.frames()[0].index;
            saliency_values.extend(emit_saliency(opts, k, first, &seg, &sal)?);
            emit_debug(opts, config, first, &seg, Some(&angles))?;
        }
        if let Some(p) = &opts.saliency_json {
            io::write_json(p, &saliency_values)?;
        }
        Ok(())
    })?
}

/// Stage 3: grouping from cached label maps and saliency.
pub fn run_select_stage(config: &PipelineConfig, cache: &Path) -> Result<RunReport> {
    config.validate()?;
    let out = require_output(config)?.to_path_buf();
    with_threads(config.threads, || {
        let volumes = load_volumes(config)?;
        let gt = load_gt_for(config, &volumes)?;
        let mut inputs = Vec::with_capacity(volumes.len());
        for (k, v) in volumes.iter().enumerate() {
            let seg = read_segmentation(cache, k, v)?;
            let sal: VolumeSaliency = io::read_json(&volume_dir(cache, k).join("saliency.json"))?;
            if sal.frames.len() != v.depth() {
                return Err(Error::Malformed {
                    path: volume_dir(cache, k).join("saliency.json"),
                    reason: format!("{} frames, volume has {}", sal.frames.len(), v.depth()),
                });
            }
            inputs.push((seg, sal));
        }
        io::create_dir(&out)?;
        let mut timings = StageTimings::default();
        let mut per_volume = Vec::with_capacity(volumes.len());
        for (v, (seg, sal)) in volumes.iter().zip(inputs) {
            let clock = Instant::now();
            let angles = volume_angles(&seg);
            let sigs = volume_signatures(&seg, &angles);
            let sels = select_volume(&seg, sigs, &sal.frames, v.frames()[0].index, &config.grouping);
            timings.select_s += clock.elapsed().as_secs_f64();
            per_volume.push((sels, sal.frames));
        }
        finish_report(&out, &volumes, per_volume, &gt, timings)
    })?
}

/// In-memory processing of one volume, for library users and tests.
pub struct VolumeResult {
    pub segmentation: VolumeSegmentation,
    pub angles: VolumeAngles,
    pub saliency: VolumeSaliency,
    pub signatures: Vec<Vec<MotionSignature>>,
    pub selections: Vec<ObjectSelection>,
}

pub fn process_volume(volume: &FrameVolume, config: &PipelineConfig) -> VolumeResult {
    let segmentation = segment_volume(volume, &config.segmentation);
    let angles = volume_angles(&segmentation);
    let saliency = volume_saliency(&segmentation, &angles, &config.saliency);
    let signatures = volume_signatures(&segmentation, &angles);
    let selections = select_volume(
        &segmentation,
        signatures.clone(),
        &saliency.frames,
        volume.frames()[0].index,
        &config.grouping,
    );
    VolumeResult { segmentation, angles, saliency, signatures, selections }
}

/// Windows in-memory frames into volumes.
pub fn volumes_from_frames(frames: Vec<Frame>, depth: usize) -> Result<Vec<FrameVolume>> {
    window_frames(frames, depth).into_iter().map(build_volume).collect()
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    /// Directory holding `sel_f%04d_c%d.png` masks.
    pub selections_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub gt_pattern: String,
    /// Named saliency-map directories scored by threshold sweep.
    pub maps: Vec<(String, PathBuf)>,
    pub maps_pattern: String,
    pub out_dir: PathBuf,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub frames: Vec<FrameMetricsRecord>,
    pub selection: SelectionMetrics,
    pub empty_gt_frames: Vec<usize>,
    pub curves: Vec<String>,
}

fn selection_masks(dir: &Path) -> Result<BTreeMap<usize, Vec<PathBuf>>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut by_frame: BTreeMap<usize, Vec<PathBuf>> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some((frame, _)) = parse_mask_file_name(name) {
            by_frame.entry(frame).or_default().push(path);
        }
    }
    for paths in by_frame.values_mut() {
        paths.sort();
    }
    Ok(by_frame)
}

/// Scores selection masks (cycles OR-ed per frame) and optional saliency
/// maps against ground truth; writes `curves.csv`, `summary.json` and
/// `roc.svg`.
pub fn evaluate_run(opts: &EvaluateOptions) -> Result<EvaluationSummary> {
    if opts.levels < 2 {
        return Err(Error::InvalidConfig("levels must be at least 2".into()));
    }
    let masks = selection_masks(&opts.selections_dir)?;
    if masks.is_empty() {
        return Err(Error::Malformed {
            path: opts.selections_dir.clone(),
            reason: "no selection masks found".into(),
        });
    }
    let frames: Vec<usize> = masks.keys().copied().collect();
    let gt = load_ground_truth(&opts.gt_dir, &opts.gt_pattern, frames.iter().copied())?;

    let mut records = Vec::with_capacity(frames.len());
    for (g, paths) in gt.iter().zip(masks.values()) {
        let mut union = Mask::new(g.mask.width, g.mask.height);
        for p in paths {
            let img = image::open(p).map_err(|e| Error::image(p, e))?.to_luma8();
            let m = Mask::from_gray(&img);
            if (m.width, m.height) != (union.width, union.height) {
                return Err(Error::DimensionMismatch(format!("{}: mask size differs from ground truth", p.display())));
            }
            union.union_with(&m);
        }
        records.push(FrameMetricsRecord { frame: g.frame, metrics: selection_metrics(&union, g)? });
    }
    let selection = aggregate_metrics(&records.iter().map(|r| r.metrics).collect::<Vec<_>>())
        .expect("at least one frame");

    let dims = (gt[0].mask.width, gt[0].mask.height);
    let mut curves = Vec::with_capacity(opts.maps.len());
    for (name, dir) in &opts.maps {
        let maps = crate::evaluation::load_external_saliency(dir, &opts.maps_pattern, frames.iter().copied(), Some(dims))?;
        let per_frame = maps
            .iter()
            .zip(&gt)
            .map(|(m, g)| crate::evaluation::threshold_sweep(m, &g.mask, opts.levels))
            .collect::<Result<Vec<_>>>()?;
        curves.push((name.clone(), crate::evaluation::aggregate_curves(&per_frame)));
    }

    io::create_dir(&opts.out_dir)?;
    let csv_path = opts.out_dir.join("curves.csv");
    std::fs::write(&csv_path, crate::evaluation::curves_csv(&curves)).map_err(|e| Error::io(&csv_path, e))?;
    let svg_path = opts.out_dir.join("roc.svg");
    let svg = crate::evaluation::roc_svg(&curves, &[("grouping".to_string(), selection)]);
    std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
    let summary = EvaluationSummary {
        empty_gt_frames: records.iter().filter(|r| r.metrics.empty_gt).map(|r| r.frame).collect(),
        frames: records,
        selection,
        curves: curves.into_iter().map(|(n, _)| n).collect(),
    };
    io::write_json(&opts.out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
