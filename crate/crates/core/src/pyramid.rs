//! Anti-aliased image pyramids for the coarse-to-fine estimator.

use crate::error::{param, Error, Result};
use crate::raster::Raster;

/// Separable Gaussian blur with edge-replicate boundaries.
pub fn gaussian_blur(image: &Raster, sigma: f64) -> Raster {
    if sigma <= 0.0 {
        return image.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);

    let (w, h) = image.dims();
    let horiz = Raster::from_fn(w, h, |x, y| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * image.get_clamped(x as isize + i as isize - radius, y as isize))
            .sum()
    });
    Raster::from_fn(w, h, |x, y| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * horiz.get_clamped(x as isize, y as isize + i as isize - radius))
            .sum()
    })
}

/// Bilinear resampling to `width × height`, pixel centres aligned.
pub fn resize_bilinear(image: &Raster, width: usize, height: usize) -> Raster {
    let sx = image.width() as f64 / width as f64;
    let sy = image.height() as f64 / height as f64;
    Raster::from_fn(width, height, |x, y| {
        let px = (x as f64 + 0.5) * sx - 0.5;
        let py = (y as f64 + 0.5) * sy - 0.5;
        let (x0, y0) = (px.floor(), py.floor());
        let (fx, fy) = (px - x0, py - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let a = image.get_clamped(x0, y0);
        let b = image.get_clamped(x0 + 1, y0);
        let c = image.get_clamped(x0, y0 + 1);
        let d = image.get_clamped(x0 + 1, y0 + 1);
        (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d)
    })
}

/// Size of a pyramid level `depth` steps below the original.
pub fn level_size(size: usize, scale: f64, depth: usize) -> usize {
    ((size as f64) * scale.powi(depth as i32)).round().max(1.0) as usize
}

/// Pyramid ordered coarse to fine; the last entry is the original image.
///
/// Each level is produced directly from the original: Gaussian low-pass with
/// σ = 0.8·(1/s − 1) for the cumulative scale `s`, then bilinear decimation.
pub fn build_pyramid(
    image: &Raster,
    scale: f64,
    levels: usize,
    min_size: usize,
) -> Result<Vec<Raster>> {
    if !(scale > 0.0 && scale < 1.0) {
        return Err(param("scale", format!("{scale} is not in (0, 1)")));
    }
    if levels == 0 {
        return Err(param("levels", "at least one level is required"));
    }
    let (w, h) = image.dims();
    let (cw, ch) = (
        level_size(w, scale, levels - 1),
        level_size(h, scale, levels - 1),
    );
    if cw < min_size || ch < min_size {
        return Err(Error::Dimensions(format!(
            "{levels} levels at scale {scale} shrink {w}x{h} to {cw}x{ch}, below {min_size}"
        )));
    }
    let mut out = Vec::with_capacity(levels);
    for depth in (1..levels).rev() {
        let s = scale.powi(depth as i32);
        let smoothed = gaussian_blur(image, 0.8 * (1.0 / s - 1.0));
        out.push(resize_bilinear(
            &smoothed,
            level_size(w, scale, depth),
            level_size(h, scale, depth),
        ));
    }
    out.push(image.clone());
    Ok(out)
}
