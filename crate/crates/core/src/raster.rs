//! Single-band floating-point rasters and the finite-difference operators
//! used by the solvers.

use crate::error::{Error, Result};

/// Single-band image, row-major, nominal sample range `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions(format!("empty raster {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Dimensions(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raster samples"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty raster");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty raster");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    // Internal constructor for solver outputs whose finiteness is checked by the caller.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Sample with coordinates clamped to the image domain.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }

    /// Sample with periodic wrap-around.
    #[inline]
    pub fn get_wrapped(&self, x: isize, y: isize) -> f64 {
        let xw = x.rem_euclid(self.width as isize) as usize;
        let yw = y.rem_euclid(self.height as isize) as usize;
        self.get(xw, yw)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Raster {
        Raster::from_parts(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn clipped(&self) -> Raster {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rectangular sub-image.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Raster> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Dimensions(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + width]);
        }
        Ok(Raster::from_parts(width, height, data))
    }

    /// Extend every side by `pad` pixels replicating the nearest edge sample.
    pub fn pad_replicate(&self, pad: usize) -> Raster {
        let p = pad as isize;
        Raster::from_fn(self.width + 2 * pad, self.height + 2 * pad, |x, y| {
            self.get_clamped(x as isize - p, y as isize - p)
        })
    }

    /// Inverse of [`Raster::pad_replicate`].
    pub fn unpad(&self, pad: usize) -> Raster {
        self.crop(pad, pad, self.width - 2 * pad, self.height - 2 * pad)
            .expect("unpad of a raster smaller than its padding")
    }

    pub fn sum_sq_diff(&self, other: &Raster) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn rmse(&self, other: &Raster) -> f64 {
        (self.sum_sq_diff(other) / self.data.len() as f64).sqrt()
    }
}

/// Multi-band image as decoded from a container, with raw sample values.
#[derive(Debug, Clone)]
pub struct MultiBandImage {
    pub width: usize,
    pub height: usize,
    /// Full-scale sample value of the container (255 for 8-bit, 65535 for 16-bit, 1 for float).
    pub full_scale: f64,
    pub bands: Vec<Vec<f64>>,
}

/// Reduce a multi-band image to the unweighted band mean, rescaled to `[0, 1]`.
pub fn to_grayscale(image: &MultiBandImage) -> Result<Raster> {
    if image.bands.is_empty() || image.width == 0 || image.height == 0 {
        return Err(Error::Dimensions("empty image".into()));
    }
    let n = image.width * image.height;
    if let Some(bad) = image.bands.iter().position(|b| b.len() != n) {
        return Err(Error::Dimensions(format!(
            "band {bad} has {} samples, expected {n}",
            image.bands[bad].len()
        )));
    }
    if !(image.full_scale > 0.0) {
        return Err(Error::Dimensions("non-positive full-scale value".into()));
    }
    let scale = 1.0 / (image.bands.len() as f64 * image.full_scale);
    let data = (0..n)
        .map(|i| image.bands.iter().map(|b| b[i]).sum::<f64>() * scale)
        .collect();
    Raster::new(image.width, image.height, data)
}

/// Forward-difference gradient with periodic wrap on the last row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Raster,
    pub gy: Raster,
}

impl GradientField {
    pub fn dims(&self) -> (usize, usize) {
        self.gx.dims()
    }

    pub fn is_zero(&self) -> bool {
        self.gx.data.iter().chain(&self.gy.data).all(|&v| v == 0.0)
    }

    /// Zero both components within `margin` pixels of the image border.
    pub fn mask_border(&mut self, margin: usize) {
        let (w, h) = self.dims();
        for y in 0..h {
            for x in 0..w {
                if x < margin || y < margin || x + margin >= w || y + margin >= h {
                    self.gx.set(x, y, 0.0);
                    self.gy.set(x, y, 0.0);
                }
            }
        }
    }
}

pub fn gradient(image: &Raster) -> Result<GradientField> {
    let (w, h) = image.dims();
    if w < 2 || h < 2 {
        return Err(Error::Dimensions(format!(
            "gradient needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h {
        let yn = if y + 1 == h { 0 } else { y + 1 };
        for x in 0..w {
            let xn = if x + 1 == w { 0 } else { x + 1 };
            let c = image.get(x, y);
            gx.push(image.get(xn, y) - c);
            gy.push(image.get(x, yn) - c);
        }
    }
    Ok(GradientField {
        gx: Raster::from_parts(w, h, gx),
        gy: Raster::from_parts(w, h, gy),
    })
}
