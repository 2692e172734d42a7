//! Constellation-level statistics over per-image sharpness scores.

pub mod special;
mod stats;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use stats::{anova_f, histogram, Anova, Histogram, Moments};

use crate::error::{Error, Result};
use crate::sharpness::{ProductType, QualityClass, Thresholds};

/// Scored image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetRecord {
    pub image_id: String,
    pub satellite_id: String,
    pub product: ProductType,
    pub score: f64,
    pub class: QualityClass,
    pub acquired: NaiveDate,
}

/// Class column of the records CSV; `error` marks images that failed to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowClass {
    Sharp,
    Deblurrable,
    Discard,
    Error,
}

impl From<QualityClass> for RowClass {
    fn from(c: QualityClass) -> Self {
        match c {
            QualityClass::Sharp => RowClass::Sharp,
            QualityClass::Deblurrable => RowClass::Deblurrable,
            QualityClass::Discard => RowClass::Discard,
        }
    }
}

/// One line of the records CSV
/// (`image_id,satellite_id,product,score,class,acquired`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub image_id: String,
    pub satellite_id: String,
    pub product: ProductType,
    pub score: Option<f64>,
    pub class: RowClass,
    pub acquired: NaiveDate,
}

impl From<&FleetRecord> for RecordRow {
    fn from(r: &FleetRecord) -> Self {
        RecordRow {
            image_id: r.image_id.clone(),
            satellite_id: r.satellite_id.clone(),
            product: r.product,
            score: Some(r.score),
            class: r.class.into(),
            acquired: r.acquired,
        }
    }
}

impl RecordRow {
    /// The scored record, or `None` for error rows.
    pub fn to_record(&self) -> Result<Option<FleetRecord>> {
        let class = match self.class {
            RowClass::Error => return Ok(None),
            RowClass::Sharp => QualityClass::Sharp,
            RowClass::Deblurrable => QualityClass::Deblurrable,
            RowClass::Discard => QualityClass::Discard,
        };
        let score = self.score.ok_or_else(|| {
            Error::Parse(format!(
                "record `{}` has a class but no score",
                self.image_id
            ))
        })?;
        if !(score > 0.0 && score <= 1.0) {
            return Err(Error::Parse(format!(
                "record `{}` has score {score} outside (0, 1]",
                self.image_id
            )));
        }
        Ok(Some(FleetRecord {
            image_id: self.image_id.clone(),
            satellite_id: self.satellite_id.clone(),
            product: self.product,
            score,
            class,
            acquired: self.acquired,
        }))
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[RecordRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<RecordRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let expected = [
        "image_id",
        "satellite_id",
        "product",
        "score",
        "class",
        "acquired",
    ];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!(
            "unexpected header {:?}, expected {}",
            headers.iter().collect::<Vec<_>>(),
            expected.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Scored records from CSV; error rows are skipped.
pub fn read_records<R: Read>(input: R) -> Result<Vec<FleetRecord>> {
    let mut out = Vec::new();
    for row in read_rows(input)? {
        if let Some(rec) = row.to_record()? {
            out.push(rec);
        }
    }
    Ok(out)
}

/// Drop records scoring below the Discard bound of their product type.
pub fn filter_valid(records: &[FleetRecord], thresholds: &Thresholds) -> Vec<FleetRecord> {
    records
        .iter()
        .filter(|r| r.score >= thresholds.bounds(r.product).discard)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteStats {
    pub satellite_id: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
}

/// Per-satellite grouping kept after the minimum-sample filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    /// Sorted by ascending mean.
    pub per_satellite: Vec<SatelliteStats>,
    /// Scores of each retained satellite, in `per_satellite` order.
    pub groups: Vec<Vec<f64>>,
}

impl Aggregate {
    pub fn retained(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

pub fn aggregate(records: &[FleetRecord], min_samples: usize) -> Result<Aggregate> {
    let mut by_sat: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_sat.entry(&r.satellite_id).or_default().push(r.score);
    }
    let mut kept: Vec<(SatelliteStats, Vec<f64>)> = by_sat
        .into_iter()
        .filter(|(_, scores)| scores.len() >= min_samples)
        .map(|(id, scores)| {
            let m: Moments = scores.iter().copied().collect();
            (
                SatelliteStats {
                    satellite_id: id.to_string(),
                    count: m.count,
                    mean: m.mean,
                    std: m.sample_std(),
                },
                scores,
            )
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::Statistics(format!(
            "no satellite passing min_samples ({min_samples})"
        )));
    }
    kept.sort_by(|a, b| {
        a.0.mean
            .total_cmp(&b.0.mean)
            .then_with(|| a.0.satellite_id.cmp(&b.0.satellite_id))
    });
    let (per_satellite, groups) = kept.into_iter().unzip();
    Ok(Aggregate {
        per_satellite,
        groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub min_samples: usize,
    pub bin_width: f64,
    pub range: (f64, f64),
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            min_samples: 50,
            bin_width: 0.001,
            range: (0.0, 0.06),
        }
    }
}

/// Statistics for one product type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSummary {
    pub product: ProductType,
    /// Scored records of this product before filtering.
    pub scored: usize,
    /// Records kept after the validity and minimum-sample filters.
    pub retained: usize,
    pub per_satellite: Vec<SatelliteStats>,
    /// Histogram of the retained scores.
    pub histogram: Histogram,
    pub anova: Option<Anova>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anova_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSummary {
    pub products: Vec<ProductSummary>,
    /// Products that had records but no satellite passing the filters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedProduct>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedProduct {
    pub product: ProductType,
    pub reason: String,
}

/// Filter, aggregate and test each product type separately.
pub fn summarize(
    records: &[FleetRecord],
    thresholds: &Thresholds,
    options: &ReportOptions,
) -> Result<FleetSummary> {
    let mut products = Vec::new();
    let mut skipped = Vec::new();
    for product in ProductType::ALL {
        let of_product: Vec<FleetRecord> = records
            .iter()
            .filter(|r| r.product == product)
            .cloned()
            .collect();
        if of_product.is_empty() {
            continue;
        }
        let valid = filter_valid(&of_product, thresholds);
        let agg = match aggregate(&valid, options.min_samples) {
            Ok(a) => a,
            Err(Error::Statistics(reason)) => {
                skipped.push(SkippedProduct { product, reason });
                continue;
            }
            Err(e) => return Err(e),
        };
        let retained: Vec<f64> = agg.groups.iter().flatten().copied().collect();
        let histogram = histogram(&retained, options.bin_width, options.range)?;
        let (anova, anova_error) = match anova_f(&agg.groups) {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.to_string())),
        };
        products.push(ProductSummary {
            product,
            scored: of_product.len(),
            retained: retained.len(),
            per_satellite: agg.per_satellite,
            histogram,
            anova,
            anova_error,
        });
    }
    if products.is_empty() {
        let reason = skipped
            .first()
            .map(|s| s.reason.clone())
            .unwrap_or_else(|| "no scored records".into());
        return Err(Error::Statistics(reason));
    }
    Ok(FleetSummary { products, skipped })
}

pub fn write_histogram_csv<W: Write>(out: W, h: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge", "count"])?;
    for (edge, count) in h.edges.iter().zip(&h.counts) {
        w.write_record([edge.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
