//! Region-based spatiotemporal motion saliency and saliency-guided grouping.
//!
//! A short stack of frames is cut into X-Y, X-T and Y-T slices, each slice
//! is segmented into color regions, and the slant of every region's trace on
//! the spatiotemporal slices gives its motion. Regions whose motion differs
//! from their surroundings are salient; the most salient X-Y region is the
//! focus of attention, from which neighboring regions with a shared motion
//! signature are grouped into one object.

pub mod config;
pub mod error;
pub mod evaluation;
pub mod grouping;
pub mod io;
pub mod motion_feature;
pub mod pipeline;
pub mod raster;
pub mod saliency;
pub mod segmentation;
pub mod synth;
pub mod volume;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use grouping::{GroupingParams, MotionSignature, NoiseMode, ObjectSelection};
pub use pipeline::{run_pipeline, ArtifactOptions, RunReport};
pub use raster::{BBox, Mask, RgbPlane};
pub use saliency::{FrameSaliency, SaliencyParams, WeightMode};
pub use segmentation::{LabelMap, Region, Segmentation, SegmentationParams};
pub use volume::{Axis, Frame, FrameVolume, SliceStack};
