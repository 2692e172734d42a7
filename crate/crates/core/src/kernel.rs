//! Blur kernels: the validated [`Kernel`] type, raw solver output and the
//! projection that turns the latter into the former.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit ℓ1 mass of a kernel.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Square, odd-sized, non-negative blur kernel with unit ℓ1 mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    size: usize,
    weights: Vec<f64>,
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        Kernel::from_weights(r.size, r.weights)
    }
}

impl From<Kernel> for KernelRepr {
    fn from(k: Kernel) -> Self {
        KernelRepr {
            size: k.size,
            weights: k.weights,
        }
    }
}

impl Kernel {
    /// Validate and wrap a row-major weight array.
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!("even extent {size}")));
        }
        if weights.len() != size * size {
            return Err(Error::InvalidKernel(format!(
                "{} weights for a {size}x{size} kernel",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidKernel("negative or non-finite weight".into()));
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidKernel(format!("mass {mass} is not 1")));
        }
        Ok(Self { size, weights })
    }

    /// Normalize arbitrary non-negative weights to unit mass.
    pub fn normalized(size: usize, mut weights: Vec<f64>) -> Result<Self> {
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidKernel("zero mass".into()));
        }
        for w in weights.iter_mut() {
            *w /= mass;
        }
        Self::from_weights(size, weights)
    }

    pub fn delta(size: usize) -> Self {
        assert!(size % 2 == 1, "kernel extent must be odd");
        let mut weights = vec![0.0; size * size];
        weights[size * size / 2] = 1.0;
        Self { size, weights }
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size % 2 == 1, "kernel extent must be odd");
        let n = (size * size) as f64;
        Self {
            size,
            weights: vec![1.0 / n; size * size],
        }
    }

    /// Isotropic Gaussian sampled on the grid and truncated to `size`.
    pub fn gaussian(size: usize, sigma: f64) -> Self {
        assert!(size % 2 == 1 && sigma > 0.0);
        let r = (size / 2) as f64;
        let mut w = Vec::with_capacity(size * size);
        for j in 0..size {
            for i in 0..size {
                let dx = i as f64 - r;
                let dy = j as f64 - r;
                w.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
            }
        }
        Self::normalized(size, w).expect("gaussian has positive mass")
    }

    /// Linear motion blur of `length` pixels at `angle_deg` (counter-clockwise
    /// from the x axis), centred on the kernel origin.
    pub fn motion(size: usize, length: f64, angle_deg: f64) -> Self {
        assert!(size % 2 == 1 && length >= 0.0);
        let r = (size / 2) as f64;
        let (s, c) = angle_deg.to_radians().sin_cos();
        let mut w = vec![0.0; size * size];
        let steps = 2000;
        for n in 0..=steps {
            let t = length * (n as f64 / steps as f64 - 0.5);
            // image y grows downwards
            let px = r + t * c;
            let py = r - t * s;
            let (x0, y0) = (px.floor(), py.floor());
            let (fx, fy) = (px - x0, py - y0);
            for (dx, dy, wt) in [
                (0, 0, (1.0 - fx) * (1.0 - fy)),
                (1, 0, fx * (1.0 - fy)),
                (0, 1, (1.0 - fx) * fy),
                (1, 1, fx * fy),
            ] {
                let x = x0 as isize + dx;
                let y = y0 as isize + dy;
                if x >= 0 && y >= 0 && (x as usize) < size && (y as usize) < size {
                    w[y as usize * size + x as usize] += wt;
                }
            }
        }
        Self::normalized(size, w).expect("motion kernel has positive mass")
    }

    /// Uniform horizontal bar of `len` pixels (odd) in a `size` grid.
    pub fn horizontal_bar(size: usize, len: usize) -> Self {
        assert!(size % 2 == 1 && len % 2 == 1 && len <= size);
        let mut w = vec![0.0; size * size];
        let row = size / 2;
        let start = size / 2 - len / 2;
        for x in start..start + len {
            w[row * size + x] = 1.0 / len as f64;
        }
        Self { size, weights: w }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.size + i]
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Centroid offset `(x, y)` from the geometric centre.
    pub fn centroid_offset(&self) -> (f64, f64) {
        centroid(&self.weights, self.size, self.size)
    }

    /// Embed in a larger odd grid, keeping the centre.
    pub fn padded_to(&self, size: usize) -> Kernel {
        assert!(size % 2 == 1 && size >= self.size);
        let off = (size - self.size) / 2;
        let mut w = vec![0.0; size * size];
        for j in 0..self.size {
            for i in 0..self.size {
                w[(j + off) * size + i + off] = self.get(i, j);
            }
        }
        Kernel { size, weights: w }
    }

    /// Bilinear resampling onto a `size` grid where one output pixel spans
    /// `ratio` input pixels. The result is raw (not yet projected).
    pub fn resample(&self, size: usize, ratio: f64) -> RawKernel {
        assert!(size % 2 == 1 && ratio > 0.0);
        let rin = self.radius() as f64;
        let rout = (size / 2) as f64;
        let n = self.size as isize;
        let mut out = vec![0.0; size * size];
        for j in 0..size {
            for i in 0..size {
                let sx = rin + (i as f64 - rout) * ratio;
                let sy = rin + (j as f64 - rout) * ratio;
                let (x0, y0) = (sx.floor(), sy.floor());
                let (fx, fy) = (sx - x0, sy - y0);
                let mut acc = 0.0;
                for (dx, dy, wt) in [
                    (0, 0, (1.0 - fx) * (1.0 - fy)),
                    (1, 0, fx * (1.0 - fy)),
                    (0, 1, (1.0 - fx) * fy),
                    (1, 1, fx * fy),
                ] {
                    let x = x0 as isize + dx;
                    let y = y0 as isize + dy;
                    if x >= 0 && y >= 0 && x < n && y < n {
                        acc += wt * self.get(x as usize, y as usize);
                    }
                }
                out[j * size + i] = acc;
            }
        }
        RawKernel::new(size, size, out).expect("odd extents")
    }
}

/// Unconstrained kernel-shaped array (e.g. a least-squares solution before
/// projection). Extents are odd, not necessarily equal.
#[derive(Debug, Clone, PartialEq)]
pub struct RawKernel {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RawKernel {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!(
                "even extent {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidKernel(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn square(size: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(size, size, values)
    }
}

impl From<&Kernel> for RawKernel {
    fn from(k: &Kernel) -> Self {
        RawKernel {
            width: k.size,
            height: k.size,
            values: k.weights.clone(),
        }
    }
}

fn centroid(values: &[f64], width: usize, height: usize) -> (f64, f64) {
    let mut mass = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for j in 0..height {
        for i in 0..width {
            let v = values[j * width + i];
            mass += v;
            sx += v * i as f64;
            sy += v * j as f64;
        }
    }
    if mass <= 0.0 {
        return (0.0, 0.0);
    }
    (
        sx / mass - (width / 2) as f64,
        sy / mass - (height / 2) as f64,
    )
}

/// Clamp negatives, prune entries below `prune_fraction × max`, keep the
/// 8-connected component holding the maximum and renormalize to unit mass.
/// Operates on any odd-extent grid; no recentring.
pub fn normalize_support(raw: &RawKernel, prune_fraction: f64) -> Result<Vec<f64>> {
    let (w, h) = (raw.width, raw.height);
    let mut v: Vec<f64> = raw
        .values
        .iter()
        .map(|&x| if x.is_finite() && x > 0.0 { x } else { 0.0 })
        .collect();
    let (peak_idx, peak) =
        v.iter().cloned().enumerate().fold(
            (0, 0.0),
            |best, (i, x)| if x > best.1 { (i, x) } else { best },
        );
    if !(peak > 0.0) {
        return Err(Error::InvalidKernel("no positive entries".into()));
    }
    let cutoff = prune_fraction * peak;
    for x in v.iter_mut() {
        if *x < cutoff {
            *x = 0.0;
        }
    }

    let mut keep = vec![false; w * h];
    let mut queue = VecDeque::from([peak_idx]);
    keep[peak_idx] = true;
    while let Some(idx) = queue.pop_front() {
        let (x, y) = ((idx % w) as isize, (idx / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if !keep[n] && v[n] > 0.0 {
                    keep[n] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    for (x, k) in v.iter_mut().zip(&keep) {
        if !k {
            *x = 0.0;
        }
    }

    let mass: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= mass;
    }
    Ok(v)
}

/// Integer-shift a kernel so its centroid lies within half a pixel of the
/// centre. Mass pushed off the grid is dropped and the rest renormalized.
pub fn recenter(weights: &mut Vec<f64>, size: usize) {
    for _ in 0..4 {
        let (cx, cy) = centroid(weights, size, size);
        let (sx, sy) = (shift_for(cx), shift_for(cy));
        if sx == 0 && sy == 0 {
            return;
        }
        let mut shifted = vec![0.0; size * size];
        for j in 0..size as isize {
            for i in 0..size as isize {
                let (si, sj) = (i + sx, j + sy);
                if si >= 0 && sj >= 0 && si < size as isize && sj < size as isize {
                    shifted[(j * size as isize + i) as usize] =
                        weights[(sj * size as isize + si) as usize];
                }
            }
        }
        let mass: f64 = shifted.iter().sum();
        if !(mass > 0.0) {
            return;
        }
        for x in shifted.iter_mut() {
            *x /= mass;
        }
        *weights = shifted;
    }
}

fn shift_for(offset: f64) -> isize {
    if offset.abs() > 0.5 {
        offset.round() as isize
    } else {
        0
    }
}

/// Project a raw square solution onto the set of valid kernels.
pub fn project_kernel(raw: &RawKernel, prune_fraction: f64) -> Result<Kernel> {
    if raw.width != raw.height {
        return Err(Error::InvalidKernel(format!(
            "kernel grid must be square, got {}x{}",
            raw.width, raw.height
        )));
    }
    let mut w = normalize_support(raw, prune_fraction)?;
    recenter(&mut w, raw.width);
    let mass: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= mass;
    }
    Kernel::from_weights(raw.width, w)
}
