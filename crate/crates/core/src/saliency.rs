//! Region-based motion saliency on spatiotemporal slices, its projection
//! back onto X-Y frames, and focus-of-attention selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion_feature::RegionAngle;
use crate::segmentation::{LabelMap, Region, RegionId, Segmentation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `1 - d / diagonal`: closer neighbors contribute more.
    #[default]
    Linear,
    /// Every pair weighs 1.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SaliencyParams {
    pub weight_mode: WeightMode,
    /// Divide each slice sum by `n - 1`.
    pub normalize_by_region_count: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSaliency {
    /// Indexed by region id.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSaliency {
    pub frame: usize,
    /// Indexed by X-Y region id.
    pub values: Vec<f64>,
    pub suppressed: Vec<bool>,
    pub foa_region: Option<RegionId>,
}

impl FrameSaliency {
    pub fn new(frame: usize, values: Vec<f64>) -> Self {
        let suppressed = vec![false; values.len()];
        let mut fs = FrameSaliency { frame, values, suppressed, foa_region: None };
        fs.foa_region = select_foa(&fs).ok();
        fs
    }

    /// Marks regions as inhibited: value zeroed and excluded from argmax.
    pub fn suppress(&mut self, ids: impl IntoIterator<Item = RegionId>) {
        for id in ids {
            self.values[id] = 0.0;
            self.suppressed[id] = true;
        }
        self.foa_region = select_foa(self).ok();
    }
}

/// Linear falloff of centroid distance relative to the slice diagonal,
/// clamped to `[0, 1]`.
pub fn distance_weight(a: &Region, b: &Region, slice_width: usize, slice_height: usize) -> f64 {
    let d = (a.centroid.0 - b.centroid.0).hypot(a.centroid.1 - b.centroid.1);
    let diag = (slice_width as f64).hypot(slice_height as f64);
    (1.0 - d / diag).clamp(0.0, 1.0)
}

impl WeightMode {
    pub fn weight(self, a: &Region, b: &Region, slice_width: usize, slice_height: usize) -> f64 {
        match self {
            WeightMode::Linear => distance_weight(a, b, slice_width, slice_height),
            WeightMode::Uniform => 1.0,
        }
    }
}

/// Sum over every other region of the normalized angle difference times
/// the distance weight.
pub fn motion_saliency(
    segmentation: &Segmentation,
    angles: &[RegionAngle],
    params: &SaliencyParams,
) -> SliceSaliency {
    let regions = &segmentation.regions;
    assert_eq!(angles.len(), regions.len(), "one angle per region");
    let (w, h) = (segmentation.label_map.width, segmentation.label_map.height);
    let n = regions.len();
    let mut values = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let diff = (angles[i].phi_st - angles[j].phi_st).abs() / 180.0;
            if diff == 0.0 {
                continue;
            }
            let contrib = diff * params.weight_mode.weight(&regions[i], &regions[j], w, h);
            values[i] += contrib;
            values[j] += contrib;
        }
    }
    if params.normalize_by_region_count && n > 1 {
        for v in &mut values {
            *v /= (n - 1) as f64;
        }
    }
    SliceSaliency { values }
}

pub fn stack_saliency(
    segmentations: &[Segmentation],
    angles: &[Vec<RegionAngle>],
    params: &SaliencyParams,
) -> Vec<SliceSaliency> {
    segmentations
        .par_iter()
        .zip(angles.par_iter())
        .map(|(s, a)| motion_saliency(s, a, params))
        .collect()
}

/// Back-projects X-T and Y-T slice saliency onto the regions of frame `t`.
///
/// `xt_maps[y]` is the label map of the X-T slice at row `y`, addressed at
/// `(x, t)`; `yt_maps[x]` is the Y-T slice at column `x`, addressed at
/// `(y, t)`. Each X-Y region receives the mean over its pixels of
/// `(ms_xt + ms_yt) / 2`.
pub fn project_to_frame<L: AsRef<LabelMap>>(
    t: usize,
    xy: &Segmentation,
    xt_saliency: &[SliceSaliency],
    yt_saliency: &[SliceSaliency],
    xt_maps: &[L],
    yt_maps: &[L],
) -> FrameSaliency {
    let labels = &xy.label_map;
    let values = xy
        .regions
        .iter()
        .map(|r| {
            let inv_size = 1.0 / r.size as f64;
            let mut acc = 0.0;
            for y in r.bbox.top..=r.bbox.bottom {
                for x in r.bbox.left..=r.bbox.right {
                    if labels.get(x, y) != r.id {
                        continue;
                    }
                    let i_xt = xt_maps[y].as_ref().get(x, t);
                    let i_yt = yt_maps[x].as_ref().get(y, t);
                    acc += (xt_saliency[y].values[i_xt] + yt_saliency[x].values[i_yt]) * 0.5 * inv_size;
                }
            }
            acc
        })
        .collect();
    FrameSaliency::new(t, values)
}

/// Argmax over non-suppressed regions; ties go to the lowest id.
pub fn select_foa(frame: &FrameSaliency) -> Result<RegionId> {
    let mut best: Option<(RegionId, f64)> = None;
    for (id, &v) in frame.values.iter().enumerate() {
        if frame.suppressed[id] {
            continue;
        }
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((id, v));
        }
    }
    best.map(|(id, _)| id).ok_or(Error::NoFocusAvailable)
}

/// Region saliency painted into its pixels, scaled so the frame maximum maps
/// to 255. Suppressed regions render black.
pub fn render_saliency_map(frame: &FrameSaliency, label_map: &LabelMap) -> image::GrayImage {
    let visible = |id: usize| if frame.suppressed[id] { 0.0 } else { frame.values[id] };
    let max = (0..frame.values.len()).map(visible).fold(0.0, f64::max);
    let raw = label_map
        .labels
        .iter()
        .map(|&l| if max > 0.0 { (visible(l) / max * 255.0).round() as u8 } else { 0 })
        .collect();
    image::GrayImage::from_raw(label_map.width as u32, label_map.height as u32, raw)
        .expect("buffer length matches dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RgbPlane;
    use proptest::prelude::*;

    fn seg_from_labels(w: usize, h: usize, labels: Vec<usize>) -> Segmentation {
        let lm = LabelMap { width: w, height: h, labels };
        Segmentation::from_label_map(lm, &RgbPlane::filled(w, h, [0; 3])).unwrap()
    }

    fn angles(phis: &[f64]) -> Vec<RegionAngle> {
        phis.iter().enumerate().map(|(i, &p)| RegionAngle { region_id: i, phi_st: p }).collect()
    }

    fn naive(seg: &Segmentation, ang: &[RegionAngle]) -> Vec<f64> {
        let (w, h) = (seg.label_map.width as f64, seg.label_map.height as f64);
        let diag = (w * w + h * h).sqrt();
        let mut out = vec![];
        for i in 0..seg.regions.len() {
            let mut s = 0.0;
            for j in 0..seg.regions.len() {
                let (a, b) = (seg.regions[i].centroid, seg.regions[j].centroid);
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                let wgt = (1.0 - d / diag).max(0.0).min(1.0);
                s += (ang[i].phi_st - ang[j].phi_st).abs() / 180.0 * wgt;
            }
            out.push(s);
        }
        out
    }

    fn region_at(cx: f64, cy: f64) -> Region {
        Region {
            id: 0,
            size: 1,
            bbox: crate::raster::BBox::point(0, 0),
            centroid: (cx, cy),
            mean_color: [0.0; 3],
            first_row: 0,
            last_row: 0,
            neighbors: Default::default(),
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(distance_weight(&region_at(3.0, 4.0), &region_at(3.0, 4.0), 320, 10), 1.0);
        assert_eq!(distance_weight(&region_at(0.0, 0.0), &region_at(320.0, 10.0), 320, 10), 0.0);
        let w = distance_weight(&region_at(0.0, 5.0), &region_at(160.0, 5.0), 320, 10);
        let expected = 1.0 - 160.0 / (320.0f64 * 320.0 + 100.0).sqrt();
        assert!((w - expected).abs() < 1e-15);
        assert!((w - 0.5002).abs() < 1e-4);
    }

    #[test]
    fn single_region_slice_is_not_salient() {
        let seg = seg_from_labels(4, 2, vec![0; 8]);
        let s = motion_saliency(&seg, &angles(&[37.0]), &SaliencyParams::default());
        assert_eq!(s.values, vec![0.0]);
    }

    #[test]
    fn uniform_weight_examples() {
        let p = SaliencyParams { weight_mode: WeightMode::Uniform, ..Default::default() };
        let two = seg_from_labels(2, 1, vec![0, 1]);
        assert_eq!(motion_saliency(&two, &angles(&[90.0, 0.0]), &p).values, vec![0.5, 0.5]);
        let three = seg_from_labels(3, 1, vec![0, 1, 2]);
        assert_eq!(motion_saliency(&three, &angles(&[90.0, 90.0, 0.0]), &p).values, vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn normalization_divides_by_others() {
        let p = SaliencyParams { weight_mode: WeightMode::Uniform, normalize_by_region_count: true };
        let three = seg_from_labels(3, 1, vec![0, 1, 2]);
        assert_eq!(motion_saliency(&three, &angles(&[90.0, 90.0, 0.0]), &p).values, vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn projection_averages_both_stacks() {
        // 3x2 frame, T = 1; every X-T slice says 0.6, every Y-T slice 0.2
        let xy = seg_from_labels(3, 2, vec![0, 0, 1, 0, 1, 1]);
        let xt: Vec<LabelMap> = (0..2).map(|_| LabelMap { width: 3, height: 1, labels: vec![0; 3] }).collect();
        let yt: Vec<LabelMap> = (0..3).map(|_| LabelMap { width: 2, height: 1, labels: vec![0; 2] }).collect();
        let xs = vec![SliceSaliency { values: vec![0.6] }; 2];
        let ys = vec![SliceSaliency { values: vec![0.2] }; 3];
        let f = project_to_frame(0, &xy, &xs, &ys, &xt, &yt);
        for v in &f.values {
            assert!((v - 0.4).abs() < 1e-12);
        }

        let zs = vec![SliceSaliency { values: vec![0.0] }; 3];
        let f = project_to_frame(0, &xy, &zs[..2], &zs, &xt, &yt);
        assert_eq!(f.values, vec![0.0, 0.0]);
    }

    #[test]
    fn foa_selection() {
        let f = FrameSaliency::new(0, vec![0.1, 0.7, 0.3]);
        assert_eq!(select_foa(&f).unwrap(), 1);
        assert_eq!(f.foa_region, Some(1));
        let f = FrameSaliency::new(0, vec![0.5, 0.5]);
        assert_eq!(select_foa(&f).unwrap(), 0);
        let mut f = FrameSaliency::new(0, vec![0.5]);
        f.suppress([0]);
        assert!(matches!(select_foa(&f), Err(Error::NoFocusAvailable)));
        assert_eq!(f.foa_region, None);
    }

    #[test]
    fn saliency_rendering() {
        let lm = LabelMap { width: 2, height: 1, labels: vec![0, 1] };
        let img = render_saliency_map(&FrameSaliency::new(0, vec![0.5, 1.0]), &lm);
        assert_eq!(img.as_raw(), &vec![128, 255]);
        let img = render_saliency_map(&FrameSaliency::new(0, vec![0.0, 0.0]), &lm);
        assert_eq!(img.as_raw(), &vec![0, 0]);
        let one = LabelMap { width: 2, height: 2, labels: vec![0; 4] };
        let img = render_saliency_map(&FrameSaliency::new(0, vec![0.3]), &one);
        assert!(img.pixels().all(|p| p.0[0] == 255));
    }

    fn arb_slice() -> impl Strategy<Value = (Segmentation, Vec<RegionAngle>)> {
        (2usize..16, 2usize..8).prop_flat_map(|(w, h)| {
            (proptest::collection::vec(0usize..6, w * h), proptest::collection::vec(0.0f64..=180.0, 6))
                .prop_map(move |(raw, phis)| {
                    let mut ids = std::collections::BTreeMap::new();
                    let labels = raw.iter().map(|&v| { let n = ids.len(); *ids.entry(v).or_insert(n) }).collect();
                    let seg = seg_from_labels(w, h, labels);
                    let n = seg.regions.len();
                    (seg, angles(&phis[..n]))
                })
        })
    }

    proptest! {
        #[test]
        fn matches_double_loop((seg, ang) in arb_slice()) {
            let got = motion_saliency(&seg, &ang, &SaliencyParams::default()).values;
            for (g, e) in got.iter().zip(naive(&seg, &ang)) {
                prop_assert!(*g >= 0.0);
                prop_assert!((g - e).abs() <= 1e-9 * e.abs().max(1e-12));
            }
        }

        #[test]
        fn values_follow_regions_under_relabeling((seg, ang) in arb_slice(), rot in 0usize..6) {
            let n = seg.regions.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let relabeled = LabelMap {
                width: seg.label_map.width,
                height: seg.label_map.height,
                labels: seg.label_map.labels.iter().map(|&l| perm[l]).collect(),
            };
            let seg2 = Segmentation::from_label_map(relabeled, &RgbPlane::filled(seg.label_map.width, seg.label_map.height, [0; 3])).unwrap();
            let mut ang2 = ang.clone();
            for (i, a) in ang.iter().enumerate() {
                ang2[perm[i]] = RegionAngle { region_id: perm[i], phi_st: a.phi_st };
            }
            let p = SaliencyParams::default();
            let s1 = motion_saliency(&seg, &ang, &p).values;
            let s2 = motion_saliency(&seg2, &ang2, &p).values;
            for i in 0..n {
                prop_assert!((s1[i] - s2[perm[i]]).abs() < 1e-12);
            }
        }

        #[test]
        fn projection_ignores_traversal_order(w in 2usize..7, h in 2usize..7, seed in any::<u64>()) {
            let t = 1;
            let depth = 3;
            let lab = |k: u64, n: usize| -> Vec<usize> {
                let mut ids = std::collections::BTreeMap::new();
                (0..n).map(|i| {
                    let v = (seed ^ k).wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 61;
                    let c = ids.len();
                    *ids.entry(v).or_insert(c)
                }).collect()
            };
            let xy = seg_from_labels(w, h, lab(1, w * h));
            let xt: Vec<LabelMap> = (0..h).map(|y| LabelMap { width: w, height: depth, labels: lab(100 + y as u64, w * depth) }).collect();
            let yt: Vec<LabelMap> = (0..w).map(|x| LabelMap { width: h, height: depth, labels: lab(500 + x as u64, h * depth) }).collect();
            let sal = |m: &LabelMap, k: u64| SliceSaliency { values: (0..m.region_count()).map(|i| ((seed ^ k) % 97 + i as u64) as f64 / 13.0).collect() };
            let xs: Vec<_> = xt.iter().enumerate().map(|(i, m)| sal(m, i as u64)).collect();
            let ys: Vec<_> = yt.iter().enumerate().map(|(i, m)| sal(m, 50 + i as u64)).collect();
            let f = project_to_frame(t, &xy, &xs, &ys, &xt, &yt);

            // reverse raster traversal over the whole frame
            let mut acc = vec![0.0; xy.regions.len()];
            for y in (0..h).rev() {
                for x in (0..w).rev() {
                    let r = xy.label_map.get(x, y);
                    acc[r] += (xs[y].values[xt[y].get(x, t)] + ys[x].values[yt[x].get(y, t)]) / 2.0;
                }
            }
            for (r, a) in acc.iter().enumerate() {
                let expected = a / xy.regions[r].size as f64;
                prop_assert!((f.values[r] - expected).abs() < 1e-9);
            }
        }
    }
}
