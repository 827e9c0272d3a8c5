//! Seeded region-growing color segmentation of single slices.
//!
//! Pixels are visited in raster order; the first unlabeled pixel seeds a new
//! region, which then grows over 4-neighbors whose color is close both to the
//! seed color and to the region pixel they border. Remnants smaller than
//! `min_region_size` are folded into their most similar neighbor afterwards.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BBox, Rgb, RgbPlane};

pub type RegionId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Max RGB distance between a candidate and the region's seed color.
    pub seed_threshold: f64,
    /// Max RGB distance between a candidate and the region pixel it touches.
    pub border_threshold: f64,
    pub min_region_size: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams { seed_threshold: 40.0, border_threshold: 25.0, min_region_size: 8 }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.seed_threshold >= 0.0) || !(self.border_threshold >= 0.0) {
            return Err(Error::InvalidConfig("segmentation thresholds must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub size: usize,
    pub bbox: BBox,
    pub centroid: (f64, f64),
    pub mean_color: [f64; 3],
    /// Lowest occupied row (the time axis on spatiotemporal slices).
    pub first_row: usize,
    pub last_row: usize,
    pub neighbors: BTreeSet<RegionId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<RegionId>,
}

impl LabelMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> RegionId {
        self.labels[y * self.width + x]
    }

    pub fn region_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }
}

impl AsRef<LabelMap> for LabelMap {
    fn as_ref(&self) -> &LabelMap {
        self
    }
}

impl AsRef<LabelMap> for Segmentation {
    fn as_ref(&self) -> &LabelMap {
        &self.label_map
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub regions: Vec<Region>,
    pub label_map: LabelMap,
}

impl Segmentation {
    /// Rebuilds region statistics and adjacency from a label map whose ids
    /// are exactly `0..n`.
    pub fn from_label_map(label_map: LabelMap, image: &RgbPlane) -> Result<Segmentation> {
        if (label_map.width, label_map.height) != (image.width, image.height)
            || label_map.labels.len() != image.width * image.height
        {
            return Err(Error::DimensionMismatch(format!(
                "label map {}x{} vs image {}x{}",
                label_map.width, label_map.height, image.width, image.height
            )));
        }
        let n = label_map.region_count();
        let mut size = vec![0usize; n];
        let mut bbox: Vec<Option<BBox>> = vec![None; n];
        let mut sum_xy = vec![(0.0f64, 0.0f64); n];
        let mut sum_rgb = vec![[0.0f64; 3]; n];
        for y in 0..label_map.height {
            for x in 0..label_map.width {
                let id = label_map.get(x, y);
                size[id] += 1;
                match &mut bbox[id] {
                    Some(b) => b.include(x, y),
                    slot => *slot = Some(BBox::point(x, y)),
                }
                sum_xy[id].0 += x as f64;
                sum_xy[id].1 += y as f64;
                let c = image.get(x, y);
                for k in 0..3 {
                    sum_rgb[id][k] += c[k] as f64;
                }
            }
        }
        if let Some(missing) = size.iter().position(|&s| s == 0) {
            return Err(Error::DimensionMismatch(format!("label map skips region id {missing}")));
        }
        let adjacency = compute_adjacency(&label_map);
        let regions = adjacency
            .into_iter()
            .enumerate()
            .map(|(id, neighbors)| {
                let s = size[id] as f64;
                let b = bbox[id].expect("every region has a pixel");
                Region {
                    id,
                    size: size[id],
                    bbox: b,
                    centroid: (sum_xy[id].0 / s, sum_xy[id].1 / s),
                    mean_color: sum_rgb[id].map(|v| v / s),
                    first_row: b.top,
                    last_row: b.bottom,
                    neighbors,
                }
            })
            .collect();
        Ok(Segmentation { regions, label_map })
    }
}

#[inline]
fn color_dist2(a: Rgb, b: Rgb) -> f64 {
    (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum()
}

fn mean_dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// Region adjacency under 4-connectivity, indexed by region id.
pub fn compute_adjacency(label_map: &LabelMap) -> Vec<BTreeSet<RegionId>> {
    let mut adj = vec![BTreeSet::new(); label_map.region_count()];
    let (w, h) = (label_map.width, label_map.height);
    for y in 0..h {
        for x in 0..w {
            let a = label_map.get(x, y);
            if x + 1 < w {
                let b = label_map.get(x + 1, y);
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
            if y + 1 < h {
                let b = label_map.get(x, y + 1);
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
    }
    adj
}

fn grow_regions(image: &RgbPlane, params: &SegmentationParams) -> (Vec<RegionId>, usize) {
    const UNSET: RegionId = RegionId::MAX;
    let (w, h) = (image.width, image.height);
    let seed_t2 = params.seed_threshold * params.seed_threshold;
    let border_t2 = params.border_threshold * params.border_threshold;
    let mut labels = vec![UNSET; w * h];
    let mut queue = VecDeque::new();
    let mut next = 0;
    for start in 0..w * h {
        if labels[start] != UNSET {
            continue;
        }
        let seed_color = image.pixels[start];
        labels[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % w, p / w);
            let here = image.pixels[p];
            let mut visit = |q: usize| {
                if labels[q] == UNSET {
                    let c = image.pixels[q];
                    if color_dist2(c, seed_color) <= seed_t2 && color_dist2(c, here) <= border_t2 {
                        labels[q] = next;
                        queue.push_back(q);
                    }
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        next += 1;
    }
    (labels, next)
}

/// Folds every region smaller than `min_size` into the neighbor with the
/// closest mean color (ties: lowest id), smallest ids first. Returns the
/// surviving id for each original id.
fn merge_small_regions(
    image: &RgbPlane,
    labels: &[RegionId],
    count: usize,
    min_size: usize,
) -> Vec<RegionId> {
    let mut target: Vec<RegionId> = (0..count).collect();
    if min_size <= 1 || count <= 1 {
        return target;
    }
    let mut size = vec![0usize; count];
    let mut sum = vec![[0.0f64; 3]; count];
    for (p, &id) in labels.iter().enumerate() {
        size[id] += 1;
        for k in 0..3 {
            sum[id][k] += image.pixels[p][k] as f64;
        }
    }
    let mut adj = compute_adjacency(&LabelMap {
        width: image.width,
        height: image.height,
        labels: labels.to_vec(),
    });
    let mut small: BTreeSet<RegionId> = (0..count).filter(|&i| size[i] < min_size).collect();
    let mut alive = count;
    while let Some(r) = small.pop_first() {
        if alive == 1 {
            break;
        }
        let mean_r = sum[r].map(|v| v / size[r] as f64);
        let best = adj[r]
            .iter()
            .map(|&n| (mean_dist2(&mean_r, &sum[n].map(|v| v / size[n] as f64)), n))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((_, into)) = best else { continue };

        size[into] += size[r];
        for k in 0..3 {
            sum[into][k] += sum[r][k];
        }
        for k in std::mem::take(&mut adj[r]) {
            adj[k].remove(&r);
            if k != into {
                adj[k].insert(into);
                adj[into].insert(k);
            }
        }
        target[r] = into;
        alive -= 1;
        if size[into] < min_size {
            small.insert(into);
        } else {
            small.remove(&into);
        }
    }
    // resolve merge chains
    for i in 0..count {
        let mut t = target[i];
        while target[t] != t {
            t = target[t];
        }
        target[i] = t;
    }
    target
}

/// Segments one slice into a total partition of 4-connected regions.
pub fn segment_slice(image: &RgbPlane, params: &SegmentationParams) -> Segmentation {
    assert!(image.width > 0 && image.height > 0, "cannot segment an empty image");
    let (raw, count) = grow_regions(image, params);
    let target = merge_small_regions(image, &raw, count, params.min_region_size);

    // compact ids in order of first raster appearance
    let mut compact = vec![RegionId::MAX; count];
    let mut next = 0;
    let labels = raw
        .iter()
        .map(|&r| {
            let t = target[r];
            if compact[t] == RegionId::MAX {
                compact[t] = next;
                next += 1;
            }
            compact[t]
        })
        .collect();
    let label_map = LabelMap { width: image.width, height: image.height, labels };
    Segmentation::from_label_map(label_map, image).expect("compact labels are consistent")
}

/// Renders a label map with a deterministic pseudo-random color per region.
pub fn render_labels(label_map: &LabelMap, seed: u64) -> RgbPlane {
    let palette: Vec<Rgb> = (0..label_map.region_count())
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            [rng.gen(), rng.gen(), rng.gen()]
        })
        .collect();
    RgbPlane::new(
        label_map.width,
        label_map.height,
        label_map.labels.iter().map(|&l| palette[l]).collect(),
    )
}
