//! Frame sequences, X-Y-T pixel volumes and their slice stacks.

use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Rgb, RgbPlane};

pub const DEFAULT_PATTERN: &str = "frame_%04d.png";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    pub image: RgbPlane,
}

impl Frame {
    pub fn new(index: usize, image: RgbPlane) -> Self {
        assert!(image.width > 0 && image.height > 0, "frames must be non-empty");
        Frame { index, image }
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }
}

/// `T` stacked frames of identical size.
#[derive(Debug, Clone)]
pub struct FrameVolume {
    frames: Vec<Frame>,
    width: usize,
    height: usize,
}

impl FrameVolume {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Temporal depth.
    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Pixel at `(x, y)` of the `t`-th frame of the volume.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize, t: usize) -> Rgb {
        self.frames[t].image.get(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    XY,
    XT,
    YT,
}

/// A stack of 2-D cuts through a volume.
///
/// * `XY`: `T` slices of `W x H`, slice `t` is frame `t`.
/// * `XT`: `H` slices of `W x T`, slice `y` holds `(x, t)`.
/// * `YT`: `W` slices of `H x T`, slice `x` holds `(y, t)`.
#[derive(Debug, Clone)]
pub struct SliceStack {
    pub axis: Axis,
    pub slices: Vec<RgbPlane>,
    pub slice_width: usize,
    pub slice_height: usize,
}

/// Expands a printf-style frame pattern (`%d`, `%04d`) with `index`.
pub fn format_pattern(pattern: &str, index: usize) -> String {
    let Some(start) = pattern.find('%') else {
        return pattern.to_string();
    };
    let rest = &pattern[start + 1..];
    let Some(d_pos) = rest.find('d') else {
        return pattern.to_string();
    };
    let spec = &rest[..d_pos];
    let width: usize = spec.trim_start_matches('0').parse().unwrap_or(0);
    let number = if spec.starts_with('0') {
        format!("{index:0width$}")
    } else {
        format!("{index:width$}")
    };
    format!("{}{}{}", &pattern[..start], number, &rest[d_pos + 1..])
}

pub fn frame_path(dir: &Path, pattern: &str, index: usize) -> PathBuf {
    dir.join(format_pattern(pattern, index))
}

fn decode_frame(path: &Path, index: usize) -> Result<Frame> {
    if !path.is_file() {
        return Err(Error::MissingFrame { index, path: path.to_path_buf() });
    }
    let img = image::open(path).map_err(|e| Error::image(path, e))?.to_rgb8();
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Malformed { path: path.to_path_buf(), reason: "empty image".into() });
    }
    Ok(Frame::new(index, RgbPlane::from_image(&img)))
}

/// Loads the numbered frames in `range`, in index order.
pub fn load_frames(dir: &Path, pattern: &str, range: Range<usize>) -> Result<Vec<Frame>> {
    let mut frames: Vec<Frame> = Vec::with_capacity(range.len());
    for index in range {
        let frame = decode_frame(&frame_path(dir, pattern, index), index)?;
        if let Some(first) = frames.first() {
            if (first.width(), first.height()) != (frame.width(), frame.height()) {
                return Err(Error::SizeMismatch {
                    index,
                    expected_width: first.width(),
                    expected_height: first.height(),
                    found_width: frame.width(),
                    found_height: frame.height(),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Number of consecutive frames present from `start` on.
pub fn count_frames(dir: &Path, pattern: &str, start: usize) -> usize {
    (start..).take_while(|&i| frame_path(dir, pattern, i).is_file()).count()
}

pub fn build_volume(frames: Vec<Frame>) -> Result<FrameVolume> {
    if frames.len() < 2 {
        return Err(Error::TooFewFrames(frames.len()));
    }
    let (width, height) = (frames[0].width(), frames[0].height());
    for f in &frames[1..] {
        if (f.width(), f.height()) != (width, height) {
            return Err(Error::SizeMismatch {
                index: f.index,
                expected_width: width,
                expected_height: height,
                found_width: f.width(),
                found_height: f.height(),
            });
        }
    }
    Ok(FrameVolume { frames, width, height })
}

/// Splits a frame sequence into consecutive non-overlapping windows of
/// `depth` frames. A trailing window shorter than 2 frames is dropped.
pub fn window_frames(frames: Vec<Frame>, depth: usize) -> Vec<Vec<Frame>> {
    assert!(depth >= 2, "volume depth must be at least 2");
    let mut windows = Vec::new();
    let mut iter = frames.into_iter().peekable();
    while iter.peek().is_some() {
        let window: Vec<Frame> = iter.by_ref().take(depth).collect();
        if window.len() >= 2 {
            windows.push(window);
        }
    }
    windows
}

pub fn extract_slices(volume: &FrameVolume, axis: Axis) -> SliceStack {
    let (w, h, t) = (volume.width, volume.height, volume.depth());
    match axis {
        Axis::XY => SliceStack {
            axis,
            slices: volume.frames.iter().map(|f| f.image.clone()).collect(),
            slice_width: w,
            slice_height: h,
        },
        Axis::XT => SliceStack {
            axis,
            slices: (0..h)
                .into_par_iter()
                .map(|y| {
                    let mut pixels = Vec::with_capacity(w * t);
                    for frame in &volume.frames {
                        let row = &frame.image.pixels[y * w..(y + 1) * w];
                        pixels.extend_from_slice(row);
                    }
                    RgbPlane::new(w, t, pixels)
                })
                .collect(),
            slice_width: w,
            slice_height: t,
        },
        Axis::YT => SliceStack {
            axis,
            slices: (0..w)
                .into_par_iter()
                .map(|x| {
                    let mut pixels = Vec::with_capacity(h * t);
                    for frame in &volume.frames {
                        pixels.extend((0..h).map(|y| frame.image.get(x, y)));
                    }
                    RgbPlane::new(h, t, pixels)
                })
                .collect(),
            slice_width: h,
            slice_height: t,
        },
    }
}
