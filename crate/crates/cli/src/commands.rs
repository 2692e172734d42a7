use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blindsharp::deconv::deblur;
use blindsharp::estimate::estimate_kernel;
use blindsharp::fleet::{self, FleetSummary, RecordRow, RowClass};
use blindsharp::io::{load_grayscale, write_kernel_png, write_kernel_text, write_raster};
use blindsharp::kernel::Kernel;
use blindsharp::raster::Raster;
use blindsharp::sharpness::{classify, sharpness, ProductType, QualityClass, SharpnessReport};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Crop, RunConfig};
use crate::manifest::Manifest;

/// Identifying metadata attached to a scored image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMeta {
    pub image_id: String,
    pub satellite_id: String,
    pub product: ProductType,
    pub acquired: Option<NaiveDate>,
}

impl ImageMeta {
    pub fn for_path(path: &Path, product: ProductType) -> Self {
        ImageMeta {
            image_id: file_stem(path),
            satellite_id: "unknown".into(),
            product,
            acquired: None,
        }
    }
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn apply_crop(image: Raster, crop: Option<Crop>) -> Result<Raster> {
    match crop {
        Some(c) => Ok(image.crop(c.x, c.y, c.width, c.height)?),
        None => Ok(image),
    }
}

/// Estimate, score and classify an already decoded image.
pub fn score_raster(
    image: &Raster,
    meta: &ImageMeta,
    config: &RunConfig,
) -> Result<SharpnessReport> {
    let region = apply_crop(image.clone(), config.run.crop)?;
    let est = estimate_kernel(&region, &config.estimation)?;
    let score = sharpness(&est.kernel)?;
    Ok(SharpnessReport {
        image_id: meta.image_id.clone(),
        satellite_id: meta.satellite_id.clone(),
        product: meta.product,
        acquired: meta.acquired,
        score,
        class: classify(score, meta.product, &config.thresholds),
        fallback: est.fallback,
        kernel: est.kernel,
    })
}

pub fn cmd_score(
    image_path: &Path,
    meta: &ImageMeta,
    config: &RunConfig,
) -> Result<SharpnessReport> {
    let image =
        load_grayscale(image_path).with_context(|| format!("reading {}", image_path.display()))?;
    score_raster(&image, meta, config).with_context(|| format!("scoring {}", image_path.display()))
}

/// Write the kernel as text at `path` and as a 32×32 PNG preview beside it.
/// A `.png` path gets only the preview.
pub fn write_kernel_files(path: &Path, kernel: &Kernel) -> Result<()> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if !is_png {
        write_kernel_text(path, kernel)
            .with_context(|| format!("writing kernel {}", path.display()))?;
    }
    let png = path.with_extension("png");
    write_kernel_png(&png, kernel).with_context(|| format!("writing kernel {}", png.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeblurReport {
    pub input: PathBuf,
    /// `None` when the input was refused.
    pub output: Option<PathBuf>,
    pub product: ProductType,
    pub score_before: f64,
    pub class_before: QualityClass,
    pub score_after: Option<f64>,
    pub class_after: Option<QualityClass>,
    pub kernel_fallback: bool,
    pub refused: bool,
    #[serde(skip)]
    pub kernel: Option<Kernel>,
}

/// Estimate the blur of `in_path`, deconvolve it and write the result to
/// `out_path`. Discard-class inputs are refused unless `force` is set. The
/// kernel is estimated on the crop window when one is configured and the
/// whole image is deconvolved.
pub fn cmd_deblur(
    in_path: &Path,
    out_path: &Path,
    product: ProductType,
    force: bool,
    config: &RunConfig,
) -> Result<DeblurReport> {
    let image =
        load_grayscale(in_path).with_context(|| format!("reading {}", in_path.display()))?;
    let meta = ImageMeta::for_path(in_path, product);
    let before = score_raster(&image, &meta, config)?;
    let mut report = DeblurReport {
        input: in_path.to_path_buf(),
        output: None,
        product,
        score_before: before.score,
        class_before: before.class,
        score_after: None,
        class_after: None,
        kernel_fallback: before.fallback,
        refused: false,
        kernel: Some(before.kernel.clone()),
    };
    if before.class == QualityClass::Discard && !force {
        report.refused = true;
        return Ok(report);
    }
    let restored = deblur(&image, &before.kernel, &config.deconv)?;
    write_raster(out_path, &restored).with_context(|| format!("writing {}", out_path.display()))?;
    let after = score_raster(&restored, &meta, config)?;
    report.output = Some(out_path.to_path_buf());
    report.score_after = Some(after.score);
    report.class_after = Some(after.class);
    Ok(report)
}

/// Score every manifest entry on a pool of `config.run.parallelism` workers.
/// Rows come back in manifest order; failures become `error` rows.
pub fn batch_rows(manifest: &Manifest, base: &Path, config: &RunConfig) -> Result<Vec<RecordRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.parallelism)
        .build()
        .context("starting worker pool")?;
    let rows = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let path = base.join(&entry.path);
                let meta = ImageMeta {
                    image_id: entry
                        .image_id
                        .clone()
                        .unwrap_or_else(|| file_stem(&entry.path)),
                    satellite_id: entry.satellite_id.clone(),
                    product: entry.product,
                    acquired: Some(entry.acquired),
                };
                let (score, class) = match cmd_score(&path, &meta, config) {
                    Ok(r) => (Some(r.score), r.class.into()),
                    Err(e) => {
                        eprintln!("warning: {}: {e:#}", path.display());
                        (None, RowClass::Error)
                    }
                };
                RecordRow {
                    image_id: meta.image_id,
                    satellite_id: meta.satellite_id,
                    product: meta.product,
                    score,
                    class,
                    acquired: entry.acquired,
                }
            })
            .collect()
    });
    Ok(rows)
}

/// Score the manifest and write the records CSV. Entry paths are resolved
/// relative to the manifest's directory.
pub fn cmd_batch(
    manifest_path: &Path,
    out_csv: &Path,
    config: &RunConfig,
) -> Result<Vec<RecordRow>> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let rows = batch_rows(&manifest, base, config)?;
    let file = File::create(out_csv).with_context(|| format!("creating {}", out_csv.display()))?;
    fleet::write_rows(BufWriter::new(file), &rows)
        .with_context(|| format!("writing {}", out_csv.display()))?;
    Ok(rows)
}

/// Histogram CSV path for one product: `<out_json stem>_<product>_histogram.csv`.
pub fn histogram_path(out_json: &Path, product: ProductType) -> PathBuf {
    let stem = file_stem(out_json);
    out_json.with_file_name(format!("{stem}_{product}_histogram.csv"))
}

pub fn cmd_report(records_csv: &Path, out_json: &Path, config: &RunConfig) -> Result<FleetSummary> {
    let file =
        File::open(records_csv).with_context(|| format!("opening {}", records_csv.display()))?;
    let records = fleet::read_records(std::io::BufReader::new(file))
        .with_context(|| format!("reading {}", records_csv.display()))?;
    if records.is_empty() {
        bail!("{} holds no scored records", records_csv.display());
    }
    let summary = fleet::summarize(&records, &config.thresholds, &config.report)?;
    let out = File::create(out_json).with_context(|| format!("creating {}", out_json.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(out), &summary)?;
    for p in &summary.products {
        let path = histogram_path(out_json, p.product);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        fleet::write_histogram_csv(BufWriter::new(file), &p.histogram)?;
    }
    Ok(summary)
}
