//! Batch manifest: `{"entries": [{"path", "satellite_id", "product", "acquired", "image_id"?}]}`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blindsharp::sharpness::ProductType;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    pub satellite_id: String,
    pub product: ProductType,
    pub acquired: NaiveDate,
    /// Defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).context("invalid manifest")?;
        let mut seen = HashSet::new();
        for e in &m.entries {
            if !seen.insert(&e.path) {
                bail!("manifest lists {} more than once", e.path.display());
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("manifest {}", path.display()))
    }
}
