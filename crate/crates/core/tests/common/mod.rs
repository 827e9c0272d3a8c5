#![allow(dead_code)]

use std::collections::BTreeSet;

use stgroup::grouping::{GroupingParams, MotionSignature, NoiseMode};
use stgroup::motion_feature::RegionAngle;
use stgroup::segmentation::Segmentation;

pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id} ({name}): {detail}");
}

fn reliable(s: &MotionSignature, p: &GroupingParams) -> bool {
    let h = (s.h_phi - 90.0).abs() > p.sigma_xt;
    let v = (s.v_phi - 90.0).abs() > p.sigma_yt;
    match p.noise_mode {
        NoiseMode::And => h && v,
        NoiseMode::Or => h || v,
    }
}

/// Accept-until-stable reference for region growth without the size guard.
pub fn fixpoint_object(
    seed: usize,
    adjacency: &[BTreeSet<usize>],
    signatures: &[MotionSignature],
    params: &GroupingParams,
) -> BTreeSet<usize> {
    let mut object = BTreeSet::from([seed]);
    if !reliable(&signatures[seed], params) {
        return object;
    }
    loop {
        let mut changed = false;
        for r in 0..adjacency.len() {
            if object.contains(&r) || !adjacency[r].iter().any(|n| object.contains(n)) {
                continue;
            }
            let s = &signatures[seed];
            let c = &signatures[r];
            let dist = ((s.h_phi - c.h_phi).powi(2) + (s.v_phi - c.v_phi).powi(2)).sqrt();
            if (!params.check_similarity || dist < params.tau) && reliable(c, params) {
                object.insert(r);
                changed = true;
            }
        }
        if !changed {
            return object;
        }
    }
}

/// Direct double loop over all region pairs, linear distance weight.
pub fn naive_motion_saliency(seg: &Segmentation, angles: &[RegionAngle]) -> Vec<f64> {
    let (w, h) = (seg.label_map.width as f64, seg.label_map.height as f64);
    let diag = (w * w + h * h).sqrt();
    let n = seg.regions.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (seg.regions[i].centroid, seg.regions[j].centroid);
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            let weight = (1.0 - d / diag).clamp(0.0, 1.0);
            out[i] += (angles[i].phi_st - angles[j].phi_st).abs() / 180.0 * weight;
        }
    }
    out
}
