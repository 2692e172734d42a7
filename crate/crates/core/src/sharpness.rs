//! Kernel-based sharpness score and quality classes.
//!
//! The score is the ℓ2 norm of the unit-mass kernel: 1 for a delta and
//! smaller as the kernel spreads. It depends only on the kernel, so scores
//! are comparable across scenes.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::kernel::Kernel;

/// Tolerance on kernel mass accepted by [`sharpness`].
pub const SCORE_MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductType {
    /// Non-orthorectified scene.
    Basic,
    /// Orthorectified (resampled) scene.
    Ortho,
}

impl ProductType {
    pub const ALL: [ProductType; 2] = [ProductType::Basic, ProductType::Ortho];

    pub fn as_str(self) -> &'static str {
        match self {
            ProductType::Basic => "basic",
            ProductType::Ortho => "ortho",
        }
    }
}

impl fmt::Display for ProductType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProductType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(ProductType::Basic),
            "ortho" => Ok(ProductType::Ortho),
            other => Err(Error::Parse(format!("unknown product type `{other}`"))),
        }
    }
}

/// Ordered `Discard < Deblurrable < Sharp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityClass {
    Discard,
    Deblurrable,
    Sharp,
}

impl QualityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityClass::Discard => "discard",
            QualityClass::Deblurrable => "deblurrable",
            QualityClass::Sharp => "sharp",
        }
    }
}

impl fmt::Display for QualityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "discard" => Ok(QualityClass::Discard),
            "deblurrable" => Ok(QualityClass::Deblurrable),
            "sharp" => Ok(QualityClass::Sharp),
            other => Err(Error::Parse(format!("unknown quality class `{other}`"))),
        }
    }
}

/// Score thresholds for one product type.
///
/// `score > sharp` is Sharp, `score < discard` is Discard, anything in
/// `[discard, sharp]` is Deblurrable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBounds {
    pub discard: f64,
    pub sharp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub basic: ClassBounds,
    pub ortho: ClassBounds,
}

impl Default for Thresholds {
    /// PlanetScope thresholds. The basic-product Sharp bound is not
    /// published; 0.035 is the ortho bound shifted by the gap between the
    /// basic and ortho mean scores (0.0309 − 0.0251), rounded to 0.005.
    fn default() -> Self {
        Self {
            basic: ClassBounds {
                discard: 0.028,
                sharp: 0.035,
            },
            ortho: ClassBounds {
                discard: 0.023,
                sharp: 0.030,
            },
        }
    }
}

impl Thresholds {
    pub fn bounds(&self, product: ProductType) -> ClassBounds {
        match product {
            ProductType::Basic => self.basic,
            ProductType::Ortho => self.ortho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("thresholds.basic", self.basic),
            ("thresholds.ortho", self.ortho),
        ] {
            if !(b.discard.is_finite() && b.sharp.is_finite() && b.discard <= b.sharp) {
                return Err(param(name, format!("need discard <= sharp, got {b:?}")));
            }
        }
        Ok(())
    }
}

/// `S = ‖k‖₂` of a unit-mass kernel.
pub fn sharpness(kernel: &Kernel) -> Result<f64> {
    let mass: f64 = kernel.weights().iter().sum();
    if (mass - 1.0).abs() > SCORE_MASS_TOLERANCE {
        return Err(Error::InvalidKernel(format!("kernel mass {mass} is not 1")));
    }
    Ok(kernel.l2_norm())
}

pub fn classify(score: f64, product: ProductType, thresholds: &Thresholds) -> QualityClass {
    let b = thresholds.bounds(product);
    if score > b.sharp {
        QualityClass::Sharp
    } else if score < b.discard {
        QualityClass::Discard
    } else {
        QualityClass::Deblurrable
    }
}

/// Per-image scoring result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub image_id: String,
    pub satellite_id: String,
    pub product: ProductType,
    pub acquired: Option<NaiveDate>,
    pub score: f64,
    pub class: QualityClass,
    /// True when estimation failed and the kernel is a substituted delta.
    pub fallback: bool,
    pub kernel: Kernel,
}
