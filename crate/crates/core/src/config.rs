//! Pipeline configuration as a flat `key = value` file.
//!
//! Blank lines and `#` comments are ignored. Keys:
//!
//! | key | default |
//! |---|---|
//! | `input_dir` | |
//! | `pattern` | `frame_%04d.png` |
//! | `start` | `0` |
//! | `count` | all consecutive frames |
//! | `volume_size` | `10` |
//! | `seed_threshold` | `40` |
//! | `border_threshold` | `25` |
//! | `min_region_size` | `8` |
//! | `weight_mode` | `linear` (`linear`, `uniform`) |
//! | `normalize_saliency` | `false` |
//! | `tau` | `44` |
//! | `sigma_xt`, `sigma_yt` | `10` |
//! | `eta` | `1.5` |
//! | `noise_mode` | `or` (`and`, `or`) |
//! | `cycles` | `1` |
//! | `check_similarity` | `true` |
//! | `levels` | `256` |
//! | `output_dir` | |
//! | `gt_dir` | |
//! | `threads` | `0` (all cores) |
//! | `render_seed` | `0` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_LEVELS;
use crate::grouping::{GroupingParams, NoiseMode};
use crate::saliency::{SaliencyParams, WeightMode};
use crate::segmentation::SegmentationParams;
use crate::volume::DEFAULT_PATTERN;

pub const DEFAULT_VOLUME_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input_dir: Option<PathBuf>,
    pub pattern: String,
    pub start: usize,
    pub count: Option<usize>,
    pub volume_size: usize,
    pub segmentation: SegmentationParams,
    pub saliency: SaliencyParams,
    pub grouping: GroupingParams,
    pub levels: usize,
    pub output_dir: Option<PathBuf>,
    pub gt_dir: Option<PathBuf>,
    pub threads: usize,
    pub render_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_dir: None,
            pattern: DEFAULT_PATTERN.to_string(),
            start: 0,
            count: None,
            volume_size: DEFAULT_VOLUME_SIZE,
            segmentation: SegmentationParams::default(),
            saliency: SaliencyParams::default(),
            grouping: GroupingParams::default(),
            levels: DEFAULT_LEVELS,
            output_dir: None,
            gt_dir: None,
            threads: 0,
            render_seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse `{value}` for `{key}`")))
}

impl FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(WeightMode::Linear),
            "uniform" => Ok(WeightMode::Uniform),
            other => Err(Error::InvalidConfig(format!("unknown weight mode `{other}`"))),
        }
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let opt_path = |v: &str| if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        match key {
            "input_dir" => self.input_dir = opt_path(value),
            "pattern" => self.pattern = value.to_string(),
            "start" => self.start = parse(key, value)?,
            "count" => self.count = if value.is_empty() { None } else { Some(parse(key, value)?) },
            "volume_size" => self.volume_size = parse(key, value)?,
            "seed_threshold" => self.segmentation.seed_threshold = parse(key, value)?,
            "border_threshold" => self.segmentation.border_threshold = parse(key, value)?,
            "min_region_size" => self.segmentation.min_region_size = parse(key, value)?,
            "weight_mode" => self.saliency.weight_mode = value.parse()?,
            "normalize_saliency" => self.saliency.normalize_by_region_count = parse(key, value)?,
            "tau" => self.grouping.tau = parse(key, value)?,
            "sigma_xt" => self.grouping.sigma_xt = parse(key, value)?,
            "sigma_yt" => self.grouping.sigma_yt = parse(key, value)?,
            "eta" => self.grouping.eta = parse(key, value)?,
            "noise_mode" => self.grouping.noise_mode = value.parse::<NoiseMode>()?,
            "cycles" => self.grouping.cycles = parse(key, value)?,
            "check_similarity" => self.grouping.check_similarity = parse(key, value)?,
            "levels" => self.levels = parse(key, value)?,
            "output_dir" => self.output_dir = opt_path(value),
            "gt_dir" => self.gt_dir = opt_path(value),
            "threads" => self.threads = parse(key, value)?,
            "render_seed" => self.render_seed = parse(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::parse_str(&text)
    }

    /// Inverse of [`PipelineConfig::parse_str`].
    pub fn to_kv(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let weight = match self.saliency.weight_mode {
            WeightMode::Linear => "linear",
            WeightMode::Uniform => "uniform",
        };
        let noise = match self.grouping.noise_mode {
            NoiseMode::And => "and",
            NoiseMode::Or => "or",
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("input_dir", path(&self.input_dir));
        kv("pattern", self.pattern.clone());
        kv("start", self.start.to_string());
        kv("count", self.count.map(|c| c.to_string()).unwrap_or_default());
        kv("volume_size", self.volume_size.to_string());
        kv("seed_threshold", self.segmentation.seed_threshold.to_string());
        kv("border_threshold", self.segmentation.border_threshold.to_string());
        kv("min_region_size", self.segmentation.min_region_size.to_string());
        kv("weight_mode", weight.into());
        kv("normalize_saliency", self.saliency.normalize_by_region_count.to_string());
        kv("tau", self.grouping.tau.to_string());
        kv("sigma_xt", self.grouping.sigma_xt.to_string());
        kv("sigma_yt", self.grouping.sigma_yt.to_string());
        kv("eta", self.grouping.eta.to_string());
        kv("noise_mode", noise.into());
        kv("cycles", self.grouping.cycles.to_string());
        kv("check_similarity", self.grouping.check_similarity.to_string());
        kv("levels", self.levels.to_string());
        kv("output_dir", path(&self.output_dir));
        kv("gt_dir", path(&self.gt_dir));
        kv("threads", self.threads.to_string());
        kv("render_seed", self.render_seed.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.volume_size < 2 {
            return Err(Error::InvalidConfig("volume_size must be at least 2".into()));
        }
        if self.levels < 2 {
            return Err(Error::InvalidConfig("levels must be at least 2".into()));
        }
        if self.pattern.is_empty() {
            return Err(Error::InvalidConfig("pattern must not be empty".into()));
        }
        self.segmentation.validate()?;
        self.grouping.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_published_constants() {
        let c = PipelineConfig::default();
        assert_eq!(c.volume_size, 10);
        assert_eq!(c.grouping.tau, 44.0);
        assert_eq!((c.grouping.sigma_xt, c.grouping.sigma_yt), (10.0, 10.0));
        assert_eq!(c.grouping.eta, 1.5);
        c.validate().unwrap();
    }

    #[test]
    fn kv_roundtrip() {
        let mut c = PipelineConfig::default();
        c.set("tau", "30.5").unwrap();
        c.set("noise_mode", "and").unwrap();
        c.set("input_dir", "/data/seq").unwrap();
        c.set("count", "40").unwrap();
        c.set("check_similarity", "false").unwrap();
        assert_eq!(PipelineConfig::parse_str(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn comments_and_errors() {
        let c = PipelineConfig::parse_str("# experiment\n\ncycles = 2  # two objects\n").unwrap();
        assert_eq!(c.grouping.cycles, 2);
        assert!(PipelineConfig::parse_str("bogus = 1").is_err());
        assert!(PipelineConfig::parse_str("tau").is_err());
        assert!(PipelineConfig::parse_str("tau = x").is_err());
        assert!(PipelineConfig::parse_str("volume_size = 1").unwrap().validate().is_err());
        assert!(PipelineConfig::parse_str("eta = 0").unwrap().validate().is_err());
    }
}
