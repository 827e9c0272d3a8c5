//! Saliency-guided grouping of X-Y regions into a multi-region object.
//!
//! Starting at the focus of attention, neighbors are tested breadth-first
//! against three conditions:
//!
//! * (a) similar motion: the Euclidean distance between the candidate's
//!   motion signature and the seed's is below `tau`;
//! * (b) reliable motion: the candidate's angles deviate from 90 degrees by
//!   more than the noise floors `sigma_xt` / `sigma_yt` (combined with
//!   `noise_mode`);
//! * (c) plausible size: the grown object stays below `eta` times the
//!   largest size seen for the same cycle on earlier frames of the volume.
//!
//! Accepted regions become seeds for expanding the search, while (a) is
//! always measured against the original focus region. The literal printed
//! form of (a), `sqrt(h_phi^2 + v_phi^2) < tau`, has no seed term and would
//! reject every static region at tau = 44, so the seed-relative reading is
//! used.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion_feature::RegionAngle;
use crate::raster::{BBox, Mask};
use crate::saliency::{select_foa, FrameSaliency};
use crate::segmentation::{LabelMap, RegionId, Segmentation};

/// Pixel-averaged X-T (`h_phi`) and Y-T (`v_phi`) angles of an X-Y region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSignature {
    pub h_phi: f64,
    pub v_phi: f64,
}

impl MotionSignature {
    pub fn distance(&self, other: &MotionSignature) -> f64 {
        (self.h_phi - other.h_phi).hypot(self.v_phi - other.v_phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    And,
    #[default]
    Or,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "and" => Ok(NoiseMode::And),
            "or" => Ok(NoiseMode::Or),
            other => Err(Error::InvalidConfig(format!("noise mode must be `and` or `or`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingParams {
    pub tau: f64,
    pub sigma_xt: f64,
    pub sigma_yt: f64,
    pub eta: f64,
    pub noise_mode: NoiseMode,
    pub cycles: usize,
    /// Evaluate condition (a). Disabled for targets that are static in the
    /// image, whose signature carries no usable motion.
    pub check_similarity: bool,
}

impl Default for GroupingParams {
    fn default() -> Self {
        GroupingParams {
            tau: 44.0,
            sigma_xt: 10.0,
            sigma_yt: 10.0,
            eta: 1.5,
            noise_mode: NoiseMode::Or,
            cycles: 1,
            check_similarity: true,
        }
    }
}

impl GroupingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidConfig("tau must be > 0".into()));
        }
        if !(self.sigma_xt >= 0.0) || !(self.sigma_yt >= 0.0) {
            return Err(Error::InvalidConfig("sigma must be >= 0".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    /// (a) signature too far from the seed.
    Dissimilar,
    /// (b) motion within the noise floor.
    Unreliable,
    /// (c) object would grow too much.
    TooLarge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSelection {
    pub frame: usize,
    pub cycle: usize,
    pub seed_region: RegionId,
    pub members: BTreeSet<RegionId>,
    #[serde(skip)]
    pub mask: Option<Mask>,
    pub bbox: BBox,
    pub size: usize,
}

/// Mean X-T / Y-T angle under the pixels of `region_id` on frame `t`.
#[allow(clippy::too_many_arguments)]
pub fn average_motion_signature<L: AsRef<LabelMap>>(
    region_id: RegionId,
    t: usize,
    xy: &Segmentation,
    xt_angles: &[Vec<RegionAngle>],
    xt_maps: &[L],
    yt_angles: &[Vec<RegionAngle>],
    yt_maps: &[L],
) -> MotionSignature {
    let r = &xy.regions[region_id];
    let inv_size = 1.0 / r.size as f64;
    let (mut h_phi, mut v_phi) = (0.0, 0.0);
    for y in r.bbox.top..=r.bbox.bottom {
        for x in r.bbox.left..=r.bbox.right {
            if xy.label_map.get(x, y) != region_id {
                continue;
            }
            let i_xt = xt_maps[y].as_ref().get(x, t);
            h_phi += xt_angles[y][i_xt].phi_st * inv_size;
            let i_yt = yt_maps[x].as_ref().get(y, t);
            v_phi += yt_angles[x][i_yt].phi_st * inv_size;
        }
    }
    MotionSignature { h_phi, v_phi }
}

fn reliable(sig: &MotionSignature, params: &GroupingParams) -> bool {
    let h = (sig.h_phi - 90.0).abs() > params.sigma_xt;
    let v = (sig.v_phi - 90.0).abs() > params.sigma_yt;
    match params.noise_mode {
        NoiseMode::And => h && v,
        NoiseMode::Or => h || v,
    }
}

/// Tests a candidate; returns the first failed condition.
pub fn check_conditions(
    seed: &MotionSignature,
    candidate: &MotionSignature,
    prospective_size: usize,
    max_prev_size: Option<usize>,
    params: &GroupingParams,
) -> Verdict {
    if params.check_similarity && seed.distance(candidate) >= params.tau {
        return Verdict::Dissimilar;
    }
    if !reliable(candidate, params) {
        return Verdict::Unreliable;
    }
    if let Some(max_prev) = max_prev_size {
        if prospective_size as f64 >= params.eta * max_prev as f64 {
            return Verdict::TooLarge;
        }
    }
    Verdict::Accept
}

/// Breadth-first growth over the region graph. Regions flagged in
/// `excluded` are never tested. Neighbors are queued in ascending id order.
pub fn grow_members(
    seed: RegionId,
    adjacency: &[BTreeSet<RegionId>],
    signatures: &[MotionSignature],
    sizes: &[usize],
    excluded: &[bool],
    max_prev_size: Option<usize>,
    params: &GroupingParams,
) -> BTreeSet<RegionId> {
    let mut members = BTreeSet::from([seed]);
    let seed_sig = signatures[seed];
    if !reliable(&seed_sig, params) {
        return members;
    }
    let mut visited: Vec<bool> = excluded.to_vec();
    visited[seed] = true;
    let mut queue = VecDeque::new();
    for &n in &adjacency[seed] {
        if !visited[n] {
            visited[n] = true;
            queue.push_back(n);
        }
    }
    let mut size = sizes[seed];
    while let Some(cand) = queue.pop_front() {
        let verdict = check_conditions(&seed_sig, &signatures[cand], size + sizes[cand], max_prev_size, params);
        if verdict != Verdict::Accept {
            continue;
        }
        members.insert(cand);
        size += sizes[cand];
        for &n in &adjacency[cand] {
            if !visited[n] {
                visited[n] = true;
                queue.push_back(n);
            }
        }
    }
    members
}

pub fn selection_from_members(
    frame: usize,
    cycle: usize,
    seed: RegionId,
    members: BTreeSet<RegionId>,
    xy: &Segmentation,
) -> ObjectSelection {
    let lm = &xy.label_map;
    let mut member_flag = vec![false; xy.regions.len()];
    for &m in &members {
        member_flag[m] = true;
    }
    let mask = Mask {
        width: lm.width,
        height: lm.height,
        bits: lm.labels.iter().map(|&l| member_flag[l]).collect(),
    };
    let bbox = members
        .iter()
        .map(|&m| xy.regions[m].bbox)
        .reduce(|a, b| a.union(&b))
        .expect("selection contains its seed");
    let size = members.iter().map(|&m| xy.regions[m].size).sum();
    ObjectSelection { frame, cycle, seed_region: seed, members, mask: Some(mask), bbox, size }
}

pub fn grow_object(
    foa: RegionId,
    t: usize,
    xy: &Segmentation,
    signatures: &[MotionSignature],
    max_prev_size: Option<usize>,
    params: &GroupingParams,
) -> ObjectSelection {
    let adjacency: Vec<_> = xy.regions.iter().map(|r| r.neighbors.clone()).collect();
    let sizes: Vec<_> = xy.regions.iter().map(|r| r.size).collect();
    let excluded = vec![false; sizes.len()];
    let members = grow_members(foa, &adjacency, signatures, &sizes, &excluded, max_prev_size, params);
    selection_from_members(t, 0, foa, members, xy)
}

/// Object-based inhibition of return: every member is suppressed.
pub fn apply_ior(mut frame: FrameSaliency, selection: &ObjectSelection) -> FrameSaliency {
    frame.suppress(selection.members.iter().copied());
    frame
}

/// Largest object size per cycle index seen so far in the current volume.
#[derive(Debug, Clone, Default)]
pub struct SizeTracker {
    max_sizes: Vec<Option<usize>>,
}

impl SizeTracker {
    pub fn get(&self, cycle: usize) -> Option<usize> {
        self.max_sizes.get(cycle).copied().flatten()
    }

    pub fn record(&mut self, cycle: usize, size: usize) {
        if self.max_sizes.len() <= cycle {
            self.max_sizes.resize(cycle + 1, None);
        }
        let slot = &mut self.max_sizes[cycle];
        *slot = Some(slot.map_or(size, |m| m.max(size)));
    }
}

/// Everything grouping needs about one X-Y frame.
pub struct FrameContext<'a> {
    pub frame: usize,
    pub xy: &'a Segmentation,
    pub saliency: FrameSaliency,
    pub signatures: Vec<MotionSignature>,
}

/// Runs `cycles` rounds of focus selection, growth and inhibition on one
/// frame. Fewer selections are returned once every region is inhibited.
pub fn select_objects(
    ctx: FrameContext<'_>,
    tracker: &mut SizeTracker,
    params: &GroupingParams,
) -> Vec<ObjectSelection> {
    let xy = ctx.xy;
    let adjacency: Vec<_> = xy.regions.iter().map(|r| r.neighbors.clone()).collect();
    let sizes: Vec<_> = xy.regions.iter().map(|r| r.size).collect();
    let mut saliency = ctx.saliency;
    let mut selections = Vec::with_capacity(params.cycles);
    for cycle in 0..params.cycles {
        let Ok(foa) = select_foa(&saliency) else { break };
        let members = grow_members(
            foa,
            &adjacency,
            &ctx.signatures,
            &sizes,
            &saliency.suppressed,
            tracker.get(cycle),
            params,
        );
        let selection = selection_from_members(ctx.frame, cycle, foa, members, xy);
        saliency = apply_ior(saliency, &selection);
        selections.push(selection);
    }
    for s in &selections {
        tracker.record(s.cycle, s.size);
    }
    selections
}
