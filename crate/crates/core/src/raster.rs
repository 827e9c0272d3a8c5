//! Minimal owned rasters shared by every stage.

use serde::{Deserialize, Serialize};

pub type Rgb = [u8; 3];

/// Row-major RGB image. Used for frames as well as for X-T / Y-T slices,
/// where the row axis is time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbPlane {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl RgbPlane {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count must equal width x height");
        RgbPlane { width, height, pixels }
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        RgbPlane { width, height, pixels: vec![color; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, color: Rgb) {
        self.pixels[y * self.width + x] = color;
    }

    pub fn to_image(&self) -> image::RgbImage {
        let raw = self.pixels.iter().flat_map(|p| p.iter().copied()).collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    pub fn from_image(img: &image::RgbImage) -> Self {
        let pixels = img.pixels().map(|p| p.0).collect();
        RgbPlane::new(img.width() as usize, img.height() as usize, pixels)
    }
}

/// Axis-aligned inclusive bounding box in raster coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub left: usize,
    pub top: usize,
    pub right: usize,
    pub bottom: usize,
}

impl BBox {
    pub fn point(x: usize, y: usize) -> Self {
        BBox { left: x, top: y, right: x, bottom: y }
    }

    pub fn include(&mut self, x: usize, y: usize) {
        self.left = self.left.min(x);
        self.right = self.right.max(x);
        self.top = self.top.min(y);
        self.bottom = self.bottom.max(y);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            left: self.left.min(other.left),
            top: self.top.min(other.top),
            right: self.right.max(other.right),
            bottom: self.bottom.max(other.bottom),
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.left && x <= self.right && y >= self.top && y <= self.bottom
    }

    pub fn area(&self) -> usize {
        (self.right - self.left + 1) * (self.bottom - self.top + 1)
    }
}

/// Binary image, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask { width, height, bits: vec![false; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union_with(&mut self, other: &Mask) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// 0/255 grayscale rendering.
    pub fn to_gray(&self) -> image::GrayImage {
        let raw = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    /// Foreground is any value above 127.
    pub fn from_gray(img: &image::GrayImage) -> Mask {
        Mask {
            width: img.width() as usize,
            height: img.height() as usize,
            bits: img.pixels().map(|p| p.0[0] > 127).collect(),
        }
    }
}
