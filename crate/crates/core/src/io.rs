//! Image and kernel files.

use std::fmt::Write as _;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::raster::{to_grayscale, MultiBandImage, Raster};

/// Decode a PNG, TIFF or PGM file into its raw bands.
///
/// PNG alpha is dropped. A four-channel TIFF keeps all four channels as
/// spectral bands (e.g. RGB plus near-infrared).
pub fn load_bands(path: impl AsRef<Path>) -> Result<MultiBandImage> {
    let reader = ImageReader::open(path.as_ref())?.with_guessed_format()?;
    let format = reader.format();
    match format {
        Some(ImageFormat::Png | ImageFormat::Tiff | ImageFormat::Pnm) => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: unsupported image format {:?}",
                path.as_ref().display(),
                other
            )))
        }
    }
    let img = reader.decode()?;
    let keep_alpha = format == Some(ImageFormat::Tiff);
    Ok(split_bands(img, keep_alpha))
}

fn split_bands(img: DynamicImage, keep_alpha: bool) -> MultiBandImage {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let channels = img.color().channel_count() as usize;
    let has_alpha = img.color().has_alpha();
    let used = if has_alpha && !keep_alpha {
        channels - 1
    } else {
        channels
    };
    let (full_scale, samples): (f64, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(b) => (255.0, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageLumaA8(b) => (255.0, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageRgb8(b) => (255.0, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageRgba8(b) => (255.0, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageLuma16(b) => {
            (65535.0, b.into_raw().into_iter().map(f64::from).collect())
        }
        DynamicImage::ImageLumaA16(b) => {
            (65535.0, b.into_raw().into_iter().map(f64::from).collect())
        }
        DynamicImage::ImageRgb16(b) => (65535.0, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageRgba16(b) => {
            (65535.0, b.into_raw().into_iter().map(f64::from).collect())
        }
        DynamicImage::ImageRgb32F(b) => (1.0, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageRgba32F(b) => (1.0, b.into_raw().into_iter().map(f64::from).collect()),
        other => (
            65535.0,
            other
                .into_rgb16()
                .into_raw()
                .into_iter()
                .map(f64::from)
                .collect(),
        ),
    };
    let channels = samples.len() / (width * height).max(1);
    let used = used.min(channels);
    let bands = (0..used)
        .map(|c| samples.iter().skip(c).step_by(channels).copied().collect())
        .collect();
    MultiBandImage {
        width,
        height,
        full_scale,
        bands,
    }
}

/// Decode an image and reduce it to a grayscale raster in `[0, 1]`.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<Raster> {
    to_grayscale(&load_bands(path)?)
}

fn output_format(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("tif" | "tiff") => Ok(ImageFormat::Tiff),
        Some("pgm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::Parse(format!(
            "{}: output extension must be png, tif, tiff or pgm",
            path.display()
        ))),
    }
}

/// Write a raster as 16-bit grayscale; values are clipped to `[0, 1]`.
/// The container is chosen from the file extension.
pub fn write_raster(path: impl AsRef<Path>, raster: &Raster) -> Result<()> {
    let path = path.as_ref();
    let format = output_format(path)?;
    let samples: Vec<u16> = raster
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(raster.width() as u32, raster.height() as u32, samples)
            .expect("buffer length matches dimensions");
    buf.save_with_format(path, format)?;
    Ok(())
}

/// Plain-text kernel: the extent on the first line, then one row of
/// weights per line.
pub fn format_kernel(kernel: &Kernel) -> String {
    let n = kernel.size();
    let mut out = format!("{n}\n");
    for j in 0..n {
        let row: Vec<String> = (0..n)
            .map(|i| format!("{:.12e}", kernel.get(i, j)))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_kernel(text: &str) -> Result<Kernel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty kernel file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("bad kernel extent `{header}`")))?;
    let mut weights = Vec::with_capacity(n * n);
    for (row, line) in lines.enumerate() {
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("kernel row {row}: {e}")))?;
        if values.len() != n {
            return Err(Error::Parse(format!(
                "kernel row {row} has {} values, expected {n}",
                values.len()
            )));
        }
        weights.extend(values);
    }
    if weights.len() != n * n {
        return Err(Error::Parse(format!(
            "kernel has {} rows, expected {n}",
            weights.len() / n.max(1)
        )));
    }
    Kernel::from_weights(n, weights)
}

pub fn write_kernel_text(path: impl AsRef<Path>, kernel: &Kernel) -> Result<()> {
    std::fs::write(path, format_kernel(kernel))?;
    Ok(())
}

pub fn read_kernel_text(path: impl AsRef<Path>) -> Result<Kernel> {
    parse_kernel(&std::fs::read_to_string(path)?)
}

/// Nearest-neighbour enlargement of the kernel to `side × side`, scaled so
/// the largest weight is white.
pub fn kernel_preview(kernel: &Kernel, side: usize) -> Raster {
    let n = kernel.size();
    let peak = kernel.max_weight();
    Raster::from_fn(side, side, |x, y| {
        let w = kernel.get(x * n / side, y * n / side);
        if peak > 0.0 {
            w / peak
        } else {
            0.0
        }
    })
}

/// Save a 32×32 PNG preview of the kernel.
pub fn write_kernel_png(path: impl AsRef<Path>, kernel: &Kernel) -> Result<()> {
    let preview = kernel_preview(kernel, 32);
    let samples: Vec<u8> = preview
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(32, 32, samples).expect("32x32 buffer");
    buf.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}
