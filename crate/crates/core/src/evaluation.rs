//! Threshold-sweep ROC evaluation of saliency maps and single-point scoring
//! of object selections against ground-truth masks.

use std::fmt::Write as _;
use std::path::Path;

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Mask;
use crate::volume::frame_path;

pub const DEFAULT_LEVELS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub frame: usize,
    pub mask: Mask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tp_rate: f64,
    pub fp_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
    /// Ground truth had no object pixels; `tp_rate` is 1 by definition.
    pub empty_gt: bool,
}

fn rates(tp: usize, fp: usize, positives: usize, negatives: usize) -> (f64, f64) {
    let tp_rate = if positives == 0 { 1.0 } else { tp as f64 / positives as f64 };
    let fp_rate = if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 };
    (tp_rate, fp_rate)
}

fn check_dims(map: (u32, u32), gt: &Mask) -> Result<()> {
    if (map.0 as usize, map.1 as usize) != (gt.width, gt.height) {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{}, ground truth is {}x{}",
            map.0, map.1, gt.width, gt.height
        )));
    }
    Ok(())
}

/// `levels` evenly spaced thresholds over `[0, 255]`.
pub fn threshold_ladder(levels: usize) -> Vec<f64> {
    (0..levels).map(|k| k as f64 * 255.0 / (levels - 1) as f64).collect()
}

/// Rates for the prediction `{pixels > threshold}`.
pub fn roc_point(map: &GrayImage, gt: &Mask, threshold: f64) -> Result<RocPoint> {
    check_dims(map.dimensions(), gt)?;
    let (mut tp, mut fp) = (0, 0);
    for (p, &is_obj) in map.pixels().zip(&gt.bits) {
        if p.0[0] as f64 > threshold {
            if is_obj {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let positives = gt.count();
    let (tp_rate, fp_rate) = rates(tp, fp, positives, gt.bits.len() - positives);
    Ok(RocPoint { threshold, tp_rate, fp_rate })
}

/// ROC curve over an increasing threshold ladder spanning `[0, 255]`.
pub fn threshold_sweep(map: &GrayImage, gt: &Mask, levels: usize) -> Result<Vec<RocPoint>> {
    check_dims(map.dimensions(), gt)?;
    if levels < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 threshold levels, got {levels}")));
    }
    // histograms of object / background pixels per gray value
    let mut obj = [0usize; 256];
    let mut bg = [0usize; 256];
    for (p, &is_obj) in map.pixels().zip(&gt.bits) {
        if is_obj {
            obj[p.0[0] as usize] += 1;
        } else {
            bg[p.0[0] as usize] += 1;
        }
    }
    // suffix sums: count of values strictly above v
    let mut obj_above = [0usize; 257];
    let mut bg_above = [0usize; 257];
    for v in (0..256).rev() {
        obj_above[v] = obj_above[v + 1] + obj[v];
        bg_above[v] = bg_above[v + 1] + bg[v];
    }
    let positives = obj_above[0];
    let negatives = bg_above[0];
    Ok(threshold_ladder(levels)
        .into_iter()
        .map(|threshold| {
            // first gray value strictly above the threshold
            let first = (threshold.floor() as i64 + 1).clamp(0, 256) as usize;
            let (tp_rate, fp_rate) = rates(obj_above[first], bg_above[first], positives, negatives);
            RocPoint { threshold, tp_rate, fp_rate }
        })
        .collect())
}

pub fn selection_metrics(mask: &Mask, gt: &GroundTruth) -> Result<SelectionMetrics> {
    let truth = &gt.mask;
    if (mask.width, mask.height) != (truth.width, truth.height) {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{}, ground truth is {}x{}",
            mask.width, mask.height, truth.width, truth.height
        )));
    }
    let (mut tp, mut fp) = (0, 0);
    for (&m, &g) in mask.bits.iter().zip(&truth.bits) {
        match (m, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            _ => {}
        }
    }
    let positives = truth.count();
    let (tp_rate, fp_rate) = rates(tp, fp, positives, truth.bits.len() - positives);
    Ok(SelectionMetrics { tp_rate, fp_rate, empty_gt: positives == 0 })
}

/// Mean over frames.
pub fn aggregate_metrics(per_frame: &[SelectionMetrics]) -> Option<SelectionMetrics> {
    if per_frame.is_empty() {
        return None;
    }
    let n = per_frame.len() as f64;
    Some(SelectionMetrics {
        tp_rate: per_frame.iter().map(|m| m.tp_rate).sum::<f64>() / n,
        fp_rate: per_frame.iter().map(|m| m.fp_rate).sum::<f64>() / n,
        empty_gt: per_frame.iter().any(|m| m.empty_gt),
    })
}

/// Per-threshold mean of several curves sampled on the same ladder.
pub fn aggregate_curves(curves: &[Vec<RocPoint>]) -> Vec<RocPoint> {
    let Some(first) = curves.first() else { return Vec::new() };
    let n = curves.len() as f64;
    (0..first.len())
        .map(|k| RocPoint {
            threshold: first[k].threshold,
            tp_rate: curves.iter().map(|c| c[k].tp_rate).sum::<f64>() / n,
            fp_rate: curves.iter().map(|c| c[k].fp_rate).sum::<f64>() / n,
        })
        .collect()
}

fn load_gray(path: &Path) -> Result<GrayImage> {
    Ok(image::open(path).map_err(|e| Error::image(path, e))?.to_luma8())
}

/// Loads externally computed saliency maps for the given frame indices.
pub fn load_external_saliency(
    dir: &Path,
    pattern: &str,
    frames: impl IntoIterator<Item = usize>,
    expected_dims: Option<(usize, usize)>,
) -> Result<Vec<GrayImage>> {
    if !dir.is_dir() {
        return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory")));
    }
    frames
        .into_iter()
        .map(|i| {
            let path = frame_path(dir, pattern, i);
            if !path.is_file() {
                return Err(Error::MissingFrame { index: i, path });
            }
            let img = load_gray(&path)?;
            if let Some((w, h)) = expected_dims {
                if (img.width() as usize, img.height() as usize) != (w, h) {
                    return Err(Error::SizeMismatch {
                        index: i,
                        expected_width: w,
                        expected_height: h,
                        found_width: img.width() as usize,
                        found_height: img.height() as usize,
                    });
                }
            }
            Ok(img)
        })
        .collect()
}

pub fn load_ground_truth(dir: &Path, pattern: &str, frames: impl IntoIterator<Item = usize>) -> Result<Vec<GroundTruth>> {
    frames
        .into_iter()
        .map(|i| {
            let path = frame_path(dir, pattern, i);
            if !path.is_file() {
                return Err(Error::MissingFrame { index: i, path });
            }
            Ok(GroundTruth { frame: i, mask: Mask::from_gray(&load_gray(&path)?) })
        })
        .collect()
}

/// `method,threshold,tp_rate,fp_rate` rows.
pub fn curves_csv(curves: &[(String, Vec<RocPoint>)]) -> String {
    let mut out = String::from("method,threshold,tp_rate,fp_rate\n");
    for (name, curve) in curves {
        for p in curve {
            let _ = writeln!(out, "{name},{},{},{}", p.threshold, p.tp_rate, p.fp_rate);
        }
    }
    out
}

/// ROC plot: FP rate on x, TP rate on y.
pub fn roc_svg(curves: &[(String, Vec<RocPoint>)], points: &[(String, SelectionMetrics)]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let px = |fp: f64| PAD + fp * SIZE;
    let py = |tp: f64| PAD + (1.0 - tp) * SIZE;
    let total = SIZE + 2.0 * PAD;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(svg, r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">FP rate</text>"#, PAD + SIZE / 2.0, total - 10.0);
    let _ = writeln!(svg, r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">TP rate</text>"#, PAD + SIZE / 2.0, PAD + SIZE / 2.0);
    for (k, (name, curve)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = curve.iter().map(|p| format!("{:.2},{:.2}", px(p.fp_rate), py(p.tp_rate))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, PAD + 8.0, PAD + 14.0 * (k as f64 + 1.0));
    }
    for (k, (name, m)) in points.iter().enumerate() {
        let color = COLORS[(curves.len() + k) % COLORS.len()];
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, px(m.fp_rate), py(m.tp_rate));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" fill="{color}">{name}</text>"#, px(m.fp_rate) + 6.0, py(m.tp_rate) - 6.0);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, v: Vec<u8>) -> GrayImage {
        GrayImage::from_raw(w as u32, h as u32, v).unwrap()
    }

    fn mask(w: usize, h: usize, bits: Vec<bool>) -> Mask {
        Mask { width: w, height: h, bits }
    }

    /// Per-pixel counting at every ladder threshold.
    fn brute_sweep(map: &GrayImage, gt: &Mask, levels: usize) -> Vec<(f64, f64)> {
        (0..levels)
            .map(|k| {
                let th = k as f64 * 255.0 / (levels - 1) as f64;
                let (mut tp, mut fp, mut pos, mut neg) = (0.0, 0.0, 0.0, 0.0);
                for (i, p) in map.pixels().enumerate() {
                    let hit = p.0[0] as f64 > th;
                    if gt.bits[i] {
                        pos += 1.0;
                        if hit { tp += 1.0 }
                    } else {
                        neg += 1.0;
                        if hit { fp += 1.0 }
                    }
                }
                (if pos == 0.0 { 1.0 } else { tp / pos }, if neg == 0.0 { 0.0 } else { fp / neg })
            })
            .collect()
    }

    #[test]
    fn perfect_map_separates() {
        let gt = mask(4, 1, vec![true, true, false, false]);
        let map = gray(4, 1, vec![255, 255, 0, 0]);
        let p = roc_point(&map, &gt, 100.0).unwrap();
        assert_eq!((p.tp_rate, p.fp_rate), (1.0, 0.0));
    }

    #[test]
    fn uniform_map_has_two_states() {
        let gt = mask(4, 1, vec![true, false, false, false]);
        let map = gray(4, 1, vec![77; 4]);
        for p in threshold_sweep(&map, &gt, 256).unwrap() {
            if p.threshold < 77.0 {
                assert_eq!((p.tp_rate, p.fp_rate), (1.0, 1.0));
            } else {
                assert_eq!((p.tp_rate, p.fp_rate), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn selection_metric_cases() {
        let g = GroundTruth { frame: 0, mask: mask(4, 1, vec![true, true, false, false]) };
        let m = selection_metrics(&g.mask, &g).unwrap();
        assert_eq!((m.tp_rate, m.fp_rate), (1.0, 0.0));
        let m = selection_metrics(&Mask::new(4, 1), &g).unwrap();
        assert_eq!((m.tp_rate, m.fp_rate), (0.0, 0.0));
        let m = selection_metrics(&g.mask.complement(), &g).unwrap();
        assert_eq!((m.tp_rate, m.fp_rate), (0.0, 1.0));
        let empty = GroundTruth { frame: 0, mask: Mask::new(4, 1) };
        let m = selection_metrics(&Mask::new(4, 1), &empty).unwrap();
        assert!(m.empty_gt);
        assert_eq!(m.tp_rate, 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = GroundTruth { frame: 0, mask: Mask::new(4, 1) };
        assert!(selection_metrics(&Mask::new(3, 1), &g).is_err());
        assert!(threshold_sweep(&gray(2, 2, vec![0; 4]), &g.mask, 256).is_err());
    }

    #[test]
    fn curve_aggregation_is_per_threshold_mean() {
        let a = vec![RocPoint { threshold: 0.0, tp_rate: 1.0, fp_rate: 0.5 }];
        let b = vec![RocPoint { threshold: 0.0, tp_rate: 0.0, fp_rate: 0.1 }];
        let m = aggregate_curves(&[a, b]);
        assert_eq!(m[0].tp_rate, 0.5);
        assert!((m[0].fp_rate - 0.3).abs() < 1e-15);
    }

    #[test]
    fn missing_external_dir_errors() {
        assert!(load_external_saliency(Path::new("/nonexistent/sal"), "s_%04d.png", [0], None).is_err());
    }

    #[test]
    fn external_maps_load_in_order() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..2u8 {
            gray(2, 2, vec![i; 4]).save(frame_path(dir.path(), "s_%04d.png", i as usize)).unwrap();
        }
        let maps = load_external_saliency(dir.path(), "s_%04d.png", 0..2, Some((2, 2))).unwrap();
        assert_eq!(maps.len(), 2);
        assert_eq!(maps[1].as_raw(), &vec![1; 4]);
        assert!(load_external_saliency(dir.path(), "s_%04d.png", 0..2, Some((3, 2))).is_err());
    }

    proptest! {
        #[test]
        fn sweep_matches_pixel_counting(
            (w, h, px, bits) in (1usize..10, 1usize..10).prop_flat_map(|(w, h)| (
                Just(w), Just(h),
                proptest::collection::vec(any::<u8>(), w * h),
                proptest::collection::vec(any::<bool>(), w * h),
            )),
            levels in 2usize..300,
        ) {
            let map = gray(w, h, px);
            let gt = mask(w, h, bits);
            let curve = threshold_sweep(&map, &gt, levels).unwrap();
            let oracle = brute_sweep(&map, &gt, levels);
            prop_assert_eq!(curve.len(), levels);
            for (p, (tp, fp)) in curve.iter().zip(oracle) {
                prop_assert_eq!(p.tp_rate, tp);
                prop_assert_eq!(p.fp_rate, fp);
            }
            for pair in curve.windows(2) {
                prop_assert!(pair[1].tp_rate <= pair[0].tp_rate);
                prop_assert!(pair[1].fp_rate <= pair[0].fp_rate);
            }
            let last = curve.last().unwrap();
            prop_assert_eq!(last.fp_rate, 0.0);
        }
    }
}
