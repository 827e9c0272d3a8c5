//! Deterministic synthetic scenes with pixel-exact ground truth.
//!
//! Objects are axis-aligned rectangles translating at integer velocities,
//! so their space-time traces are exact staircases and every expected angle
//! is closed-form.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::GroundTruth;
use crate::raster::{BBox, Mask, Rgb, RgbPlane};
use crate::volume::{frame_path, Frame, DEFAULT_PATTERN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    Solid { color: Rgb },
    /// Cells cycling through `colors`, shifted by `velocity * t`. A cell
    /// taller than the frame gives vertical stripes.
    Tiled {
        colors: Vec<Rgb>,
        cell_width: usize,
        cell_height: usize,
        #[serde(default)]
        velocity: [i64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fill {
    Solid { color: Rgb },
    /// Two halves; `vertical` splits into left/right, otherwise top/bottom.
    Split { colors: [Rgb; 2], vertical: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub width: usize,
    pub height: usize,
    pub fill: Fill,
    /// Top-left corner at frame 0.
    pub position: [i64; 2],
    /// Pixels per frame; positive is rightward / downward.
    pub velocity: [i64; 2],
}

impl SceneObject {
    pub fn bbox_at(&self, t: usize) -> (i64, i64) {
        let t = t as i64;
        (self.position[0] + self.velocity[0] * t, self.position[1] + self.velocity[1] * t)
    }

    fn color_at(&self, dx: usize, dy: usize) -> Rgb {
        match &self.fill {
            Fill::Solid { color } => *color,
            Fill::Split { colors, vertical: true } => colors[usize::from(dx >= self.width / 2)],
            Fill::Split { colors, vertical: false } => colors[usize::from(dy >= self.height / 2)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub background: Background,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub noise_amplitude: u8,
}

pub struct Scene {
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<GroundTruth>,
    /// `object_boxes[t][k]` is object `k`'s box on frame `t`.
    pub object_boxes: Vec<Vec<BBox>>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidScene("frame size must be positive".into()));
        }
        if let Background::Tiled { colors, cell_width, cell_height, .. } = &self.background {
            if colors.is_empty() || *cell_width == 0 || *cell_height == 0 {
                return Err(Error::InvalidScene("tiled background needs colors and positive cells".into()));
            }
        }
        for (k, o) in self.objects.iter().enumerate() {
            if o.width == 0 || o.height == 0 {
                return Err(Error::InvalidScene(format!("object {k} has zero size")));
            }
            for t in 0..self.frame_count {
                let (x, y) = o.bbox_at(t);
                if x < 0 || y < 0 || x + o.width as i64 > self.width as i64 || y + o.height as i64 > self.height as i64 {
                    return Err(Error::InvalidScene(format!("object {k} leaves the frame at t={t}")));
                }
            }
        }
        Ok(())
    }
}

fn background_color(bg: &Background, x: usize, y: usize, t: usize) -> Rgb {
    match bg {
        Background::Solid { color } => *color,
        Background::Tiled { colors, cell_width, cell_height, velocity } => {
            let sx = x as i64 - velocity[0] * t as i64;
            let sy = y as i64 - velocity[1] * t as i64;
            let cx = sx.div_euclid(*cell_width as i64);
            let cy = sy.div_euclid(*cell_height as i64);
            colors[(cx + cy).rem_euclid(colors.len() as i64) as usize]
        }
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let amp = spec.noise_amplitude as i32;
    let mut frames = Vec::with_capacity(spec.frame_count);
    let mut ground_truth = Vec::with_capacity(spec.frame_count);
    let mut object_boxes = Vec::with_capacity(spec.frame_count);
    for t in 0..spec.frame_count {
        let mut img = RgbPlane::filled(w, h, [0; 3]);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, background_color(&spec.background, x, y, t));
            }
        }
        let mut gt = Mask::new(w, h);
        let mut boxes = Vec::with_capacity(spec.objects.len());
        for o in &spec.objects {
            let (ox, oy) = o.bbox_at(t);
            let (ox, oy) = (ox as usize, oy as usize);
            for dy in 0..o.height {
                for dx in 0..o.width {
                    img.set(ox + dx, oy + dy, o.color_at(dx, dy));
                    gt.set(ox + dx, oy + dy, true);
                }
            }
            boxes.push(BBox { left: ox, top: oy, right: ox + o.width - 1, bottom: oy + o.height - 1 });
        }
        if amp > 0 {
            for p in &mut img.pixels {
                for c in p.iter_mut() {
                    *c = (*c as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8;
                }
            }
        }
        frames.push(Frame::new(t, img));
        ground_truth.push(GroundTruth { frame: t, mask: gt });
        object_boxes.push(boxes);
    }
    Ok(Scene { frames, ground_truth, object_boxes })
}

/// Angle of the trace left by an edge that shifts `displacement` columns
/// towards lower coordinates per row, over `h` rows. Zero displacement is
/// 90 degrees; a leftward/upward shift of one pixel per frame is 45.
pub fn expected_angle(displacement: f64, h: usize) -> f64 {
    assert!(h >= 1, "need at least one row of temporal extent");
    let h = h as f64;
    if displacement == 0.0 {
        return 90.0;
    }
    h.atan2(displacement * h).to_degrees()
}

/// [`expected_angle`] for a scene velocity component (positive is rightward
/// or downward).
pub fn expected_angle_for_velocity(velocity: i64, h: usize) -> f64 {
    expected_angle(-velocity as f64, h)
}

/// Writes frames as `frame_%04d.png` and masks under `gt/`.
pub fn write_scene(scene: &Scene, out: &Path) -> Result<()> {
    let gt_dir = out.join("gt");
    fs::create_dir_all(&gt_dir).map_err(|e| Error::io(&gt_dir, e))?;
    for f in &scene.frames {
        let p = frame_path(out, DEFAULT_PATTERN, f.index);
        f.image.to_image().save(&p).map_err(|e| Error::image(&p, e))?;
    }
    for g in &scene.ground_truth {
        let p = frame_path(&gt_dir, DEFAULT_PATTERN, g.frame);
        g.mask.to_gray().save(&p).map_err(|e| Error::image(&p, e))?;
    }
    Ok(())
}

pub fn load_spec(path: &Path) -> Result<SceneSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Fixture palette; every pair is more than 120 apart in RGB.
pub mod palette {
    use crate::raster::Rgb;
    pub const SLATE: Rgb = [40, 60, 90];
    pub const YELLOW: Rgb = [230, 200, 40];
    pub const RED: Rgb = [220, 40, 40];
    pub const GREEN: Rgb = [40, 220, 80];
    pub const WHITE: Rgb = [240, 240, 240];
    pub const CHARCOAL: Rgb = [30, 30, 30];
    pub const SKY: Rgb = [90, 140, 200];
    pub const ORANGE: Rgb = [200, 120, 60];
}

/// Ready-made scenes used by the test suite and `synth --preset`.
pub mod presets {
    use super::palette::*;
    use super::*;

    pub const NAMES: [&str; 4] = ["bar", "one-mover", "two-movers", "static-target"];

    /// Single solid bar crossing the frame at `vx` px/frame.
    pub fn bar(vx: i64, frame_count: usize) -> SceneSpec {
        let x0 = if vx < 0 { 260 } else { 20 };
        SceneSpec {
            width: 320,
            height: 240,
            frame_count,
            background: Background::Solid { color: SLATE },
            objects: vec![SceneObject {
                width: 40,
                height: 60,
                fill: Fill::Solid { color: YELLOW },
                position: [x0, 90],
                velocity: [vx, 0],
            }],
            rng_seed: 0,
            noise_amplitude: 0,
        }
    }

    /// Two-tone rigid mover on a static background, 40 frames.
    pub fn one_mover() -> SceneSpec {
        SceneSpec {
            width: 320,
            height: 240,
            frame_count: 40,
            background: Background::Solid { color: SLATE },
            objects: vec![SceneObject {
                width: 48,
                height: 36,
                fill: Fill::Split { colors: [YELLOW, RED], vertical: true },
                position: [250, 100],
                velocity: [-3, 0],
            }],
            rng_seed: 0,
            noise_amplitude: 0,
        }
    }

    /// Two movers in opposite directions on separate rows, 40 frames.
    pub fn two_movers() -> SceneSpec {
        SceneSpec {
            width: 320,
            height: 240,
            frame_count: 40,
            background: Background::Solid { color: SLATE },
            objects: vec![
                SceneObject {
                    width: 44,
                    height: 32,
                    fill: Fill::Split { colors: [YELLOW, RED], vertical: true },
                    position: [260, 40],
                    velocity: [-3, 0],
                },
                SceneObject {
                    width: 40,
                    height: 30,
                    fill: Fill::Split { colors: [GREEN, WHITE], vertical: false },
                    position: [20, 160],
                    velocity: [2, 1],
                },
            ],
            rng_seed: 0,
            noise_amplitude: 0,
        }
    }

    /// Static two-tone target in front of a horizontally scrolling striped
    /// background, 40 frames.
    pub fn static_target() -> SceneSpec {
        SceneSpec {
            width: 320,
            height: 240,
            frame_count: 40,
            background: Background::Tiled {
                colors: vec![CHARCOAL, SKY, ORANGE],
                cell_width: 16,
                cell_height: 1024,
                velocity: [2, 0],
            },
            objects: vec![SceneObject {
                width: 50,
                height: 40,
                fill: Fill::Split { colors: [GREEN, WHITE], vertical: false },
                position: [135, 100],
                velocity: [0, 0],
            }],
            rng_seed: 0,
            noise_amplitude: 0,
        }
    }

    pub fn by_name(name: &str) -> Option<SceneSpec> {
        match name {
            "bar" => Some(bar(-3, 10)),
            "one-mover" => Some(one_mover()),
            "two-movers" => Some(two_movers()),
            "static-target" => Some(static_target()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x: i64, vx: i64) -> SceneObject {
        SceneObject {
            width: 10,
            height: 8,
            fill: Fill::Solid { color: palette::RED },
            position: [x, 5],
            velocity: [vx, 0],
        }
    }

    fn spec(objects: Vec<SceneObject>) -> SceneSpec {
        SceneSpec {
            width: 320,
            height: 40,
            frame_count: 10,
            background: Background::Solid { color: palette::SLATE },
            objects,
            rng_seed: 1,
            noise_amplitude: 0,
        }
    }

    #[test]
    fn object_translates_by_velocity() {
        let scene = generate_scene(&spec(vec![rect(200, -3)])).unwrap();
        assert_eq!(scene.object_boxes[5][0].left, 185);
        assert!(scene.ground_truth[5].mask.get(185, 5));
        assert!(!scene.ground_truth[5].mask.get(184, 5));
        assert_eq!(scene.frames[5].image.get(185, 5), palette::RED);
    }

    #[test]
    fn static_object_gives_identical_frames() {
        let scene = generate_scene(&spec(vec![rect(50, 0)])).unwrap();
        for t in 1..10 {
            assert_eq!(scene.frames[t].image, scene.frames[0].image);
            assert_eq!(scene.ground_truth[t].mask, scene.ground_truth[0].mask);
        }
    }

    #[test]
    fn masks_are_union_of_boxes() {
        let scene = generate_scene(&spec(vec![rect(100, -3), rect(150, 3)])).unwrap();
        for (t, gt) in scene.ground_truth.iter().enumerate() {
            let mut expected = Mask::new(320, 40);
            for b in &scene.object_boxes[t] {
                for y in b.top..=b.bottom {
                    for x in b.left..=b.right {
                        expected.set(x, y, true);
                    }
                }
            }
            assert_eq!(gt.mask, expected);
        }
    }

    #[test]
    fn out_of_bounds_trajectory_is_rejected() {
        assert!(matches!(generate_scene(&spec(vec![rect(10, -3)])), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn noise_is_seeded() {
        let mut s = spec(vec![]);
        s.noise_amplitude = 20;
        let a = generate_scene(&s).unwrap();
        let b = generate_scene(&s).unwrap();
        assert_eq!(a.frames, b.frames);
        s.rng_seed = 2;
        let c = generate_scene(&s).unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn expected_angles() {
        assert_eq!(expected_angle(0.0, 9), 90.0);
        assert!((expected_angle(1.0, 9) - 45.0).abs() < 1e-12);
        assert!((expected_angle(3.0, 9) - 18.4349).abs() < 1e-4);
        assert!((expected_angle_for_velocity(-3, 9) - expected_angle(3.0, 9)).abs() < 1e-12);
        assert!((expected_angle_for_velocity(1, 9) - 135.0).abs() < 1e-12);
    }

    #[test]
    fn presets_are_valid_and_spec_roundtrips() {
        for name in presets::NAMES {
            let s = presets::by_name(name).unwrap();
            s.validate().unwrap();
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<SceneSpec>(&json).unwrap(), s);
        }
        for v in [-3, -1, 0, 1, 3] {
            presets::bar(v, 10).validate().unwrap();
        }
    }

    #[test]
    fn fixture_palette_is_well_separated() {
        use palette::*;
        let all = [SLATE, YELLOW, RED, GREEN, WHITE, CHARCOAL, SKY, ORANGE];
        // pairs that share a scene
        let scenes: [&[Rgb]; 3] = [
            &[SLATE, YELLOW, RED, GREEN, WHITE],
            &[CHARCOAL, SKY, ORANGE, GREEN, WHITE],
            &all[..1],
        ];
        for colors in scenes {
            for (i, a) in colors.iter().enumerate() {
                for b in &colors[i + 1..] {
                    let d: f64 = (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum::<f64>().sqrt();
                    assert!(d > 120.0, "{a:?} {b:?} {d}");
                }
            }
        }
    }
}
