//! Spatiotemporal angle of a region on an X-T or Y-T slice.
//!
//! On such a slice the row axis is time. A region's orientation is taken
//! from the mean spatial coordinate of its pixels in its first and last
//! occupied rows: `phi = atan2(h, c_first - c_last)` in degrees, with `h`
//! the number of rows between them. Static content gives 90 degrees,
//! leftward/upward motion less, rightward/downward motion more.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::segmentation::{LabelMap, Region, RegionId, Segmentation};

/// Displacements below this are treated as no motion.
pub const DISPLACEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionAngle {
    pub region_id: RegionId,
    /// Degrees in `[0, 180]`.
    pub phi_st: f64,
}

fn mean_column(region: &Region, label_map: &LabelMap, row: usize) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in region.bbox.left..=region.bbox.right {
        if label_map.get(x, row) == region.id {
            sum += x as f64;
            n += 1;
        }
    }
    debug_assert!(n > 0, "first/last rows are occupied by definition");
    sum / n as f64
}

pub fn spatiotemporal_angle(region: &Region, label_map: &LabelMap) -> RegionAngle {
    let h = region.last_row - region.first_row;
    if h == 0 {
        // no temporal extent, no motion evidence
        return RegionAngle { region_id: region.id, phi_st: 90.0 };
    }
    let c_first = mean_column(region, label_map, region.first_row);
    let c_last = mean_column(region, label_map, region.last_row);
    let dx = c_first - c_last;
    let phi_st = if dx.abs() < DISPLACEMENT_EPS {
        90.0
    } else {
        (h as f64).atan2(dx).to_degrees()
    };
    RegionAngle { region_id: region.id, phi_st }
}

pub fn angles_for_slice(segmentation: &Segmentation) -> Vec<RegionAngle> {
    segmentation
        .regions
        .iter()
        .map(|r| spatiotemporal_angle(r, &segmentation.label_map))
        .collect()
}

/// One angle list per slice, each indexed by region id.
pub fn angles_for_stack(segmentations: &[Segmentation]) -> Vec<Vec<RegionAngle>> {
    segmentations.par_iter().map(angles_for_slice).collect()
}

/// Grayscale visualisation of a slice's angles: 0 deg -> 0, 90 deg -> 128,
/// 180 deg -> 255.
pub fn render_angle_map(label_map: &LabelMap, angles: &[RegionAngle]) -> image::GrayImage {
    let raw = label_map
        .labels
        .iter()
        .map(|&l| (angles[l].phi_st / 180.0 * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    image::GrayImage::from_raw(label_map.width as u32, label_map.height as u32, raw)
        .expect("buffer length matches dimensions")
}
