//! Run configuration, read from a TOML file.
//!
//! Every section and key is optional:
//!
//! ```toml
//! [estimation]
//! kernel_size = 15
//! lambda = 0.002
//!
//! [deconv]
//! alpha = 0.003
//!
//! [thresholds.ortho]
//! discard = 0.023
//! sharp = 0.030
//!
//! [run]
//! parallelism = 4
//! crop = [0, 0, 512, 512]
//!
//! [report]
//! min_samples = 50
//! bin_width = 0.001
//! range = [0.0, 0.06]
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use blindsharp::deconv::DeconvConfig;
use blindsharp::estimate::EstimationConfig;
use blindsharp::fleet::ReportOptions;
use blindsharp::sharpness::Thresholds;
use serde::{Deserialize, Serialize};

/// Pixel rectangle `x, y, width, height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct Crop {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl From<[usize; 4]> for Crop {
    fn from([x, y, width, height]: [usize; 4]) -> Self {
        Crop {
            x,
            y,
            width,
            height,
        }
    }
}

impl From<Crop> for [usize; 4] {
    fn from(c: Crop) -> Self {
        [c.x, c.y, c.width, c.height]
    }
}

impl std::str::FromStr for Crop {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("crop `{s}`: {e}"))?;
        match parts[..] {
            [x, y, w, h] => Ok(Crop::from([x, y, w, h])),
            _ => Err(format!("crop `{s}` must be x,y,w,h")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub parallelism: usize,
    pub crop: Option<Crop>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            parallelism: 1,
            crop: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub estimation: EstimationConfig,
    pub deconv: DeconvConfig,
    pub thresholds: Thresholds,
    pub run: RunSection,
    pub report: ReportOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.estimation.validate()?;
        self.deconv.validate()?;
        self.thresholds.validate()?;
        if self.run.parallelism == 0 {
            bail!("run.parallelism must be >= 1");
        }
        if let Some(c) = self.run.crop {
            if c.width == 0 || c.height == 0 {
                bail!("run.crop must have a non-zero size");
            }
        }
        Ok(())
    }
}
