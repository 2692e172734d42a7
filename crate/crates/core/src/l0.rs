//! Latent-image update under the ℓ0 gradient prior, by half-quadratic
//! splitting with continuation on the penalty weight.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convolve::kernel_transfer;
use crate::error::{param, Error, Result};
use crate::fft::Fft2;
use crate::kernel::Kernel;
use crate::raster::{gradient, GradientField, Raster};

/// Geometric continuation of the splitting weight β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub beta_init: f64,
    pub beta_max: f64,
    pub beta_rate: f64,
}

impl Continuation {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_init > 0.0) {
            return Err(param("beta_init", "must be > 0"));
        }
        if !(self.beta_rate > 1.0) {
            return Err(param("beta_rate", "must be > 1"));
        }
        if !(self.beta_max.is_finite()) {
            return Err(param("beta_max", "must be finite"));
        }
        Ok(())
    }

    /// The β values visited, in order.
    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.beta_init), move |b| Some(b * self.beta_rate))
            .take_while(move |b| *b <= self.beta_max)
    }
}

/// Periodic-domain solver for `‖u∗k − v‖² + β‖∇u − g‖²` with precomputed
/// spectra.
pub(crate) struct SplitSolver {
    fft: Fft2,
    width: usize,
    height: usize,
    kv: Vec<Complex64>,
    kk: Vec<f64>,
    dd: Vec<f64>,
}

impl SplitSolver {
    pub fn new(v: &Raster, k: &Kernel) -> Self {
        let (w, h) = v.dims();
        let mut fft = Fft2::new(w, h);
        let otf = kernel_transfer(&mut fft, k);
        let vs = fft.forward_raster(v);
        let (dx, dy) = fft.difference_transfers();
        let kv = otf.iter().zip(&vs).map(|(k, v)| k.conj() * v).collect();
        let kk = otf.iter().map(|k| k.norm_sqr()).collect();
        let dd = dx
            .iter()
            .zip(&dy)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect();
        Self {
            fft,
            width: w,
            height: h,
            kv,
            kk,
            dd,
        }
    }

    /// Exact minimizer of the quadratic for fixed `g` and `beta`.
    pub fn solve(&mut self, g: &GradientField, beta: f64) -> Raster {
        let div = adjoint_gradient(g);
        let gs = self.fft.forward_raster(&div);
        let spec: Vec<Complex64> = (0..self.fft.len())
            .map(|i| (self.kv[i] + beta * gs[i]) / (self.kk[i] + beta * self.dd[i]))
            .collect();
        Raster::from_parts(self.width, self.height, self.fft.inverse_real(spec))
    }
}

/// `Dxᵀ gx + Dyᵀ gy` for periodic forward differences.
pub(crate) fn adjoint_gradient(g: &GradientField) -> Raster {
    let (w, h) = g.dims();
    Raster::from_fn(w, h, |x, y| {
        let xp = if x == 0 { w - 1 } else { x - 1 };
        let yp = if y == 0 { h - 1 } else { y - 1 };
        g.gx.get(xp, y) - g.gx.get(x, y) + g.gy.get(x, yp) - g.gy.get(x, y)
    })
}

/// Keep gradient pairs whose squared magnitude exceeds `threshold`.
pub(crate) fn hard_threshold(mut g: GradientField, threshold: f64) -> GradientField {
    let (w, h) = g.dims();
    for y in 0..h {
        for x in 0..w {
            let (a, b) = (g.gx.get(x, y), g.gy.get(x, y));
            if a * a + b * b <= threshold {
                g.gx.set(x, y, 0.0);
                g.gy.set(x, y, 0.0);
            }
        }
    }
    g
}

/// Approximate minimizer of `‖u∗k − v‖² + λ‖∇u‖₀`.
///
/// The image is edge-replicate padded by the kernel extent and the result
/// cropped back.
pub fn l0_latent_update(
    v: &Raster,
    k: &Kernel,
    lambda: f64,
    schedule: &Continuation,
) -> Result<Raster> {
    if !(lambda > 0.0) {
        return Err(param("lambda", "must be > 0"));
    }
    schedule.validate()?;
    let pad = k.size();
    let padded = v.pad_replicate(pad);
    let mut solver = SplitSolver::new(&padded, k);
    let mut u = padded;
    for beta in schedule.betas() {
        let g = hard_threshold(gradient(&u)?, lambda / beta);
        u = solver.solve(&g, beta);
        if !u.is_finite() {
            return Err(Error::NonFinite("ℓ0 latent update"));
        }
    }
    Ok(u.unpad(pad))
}
