//! Non-blind deconvolution with an isotropic total-variation prior,
//! `argmin_u ‖u∗k − v‖² + α‖∇u‖₁`, by half-quadratic splitting.
//!
//! An auxiliary field `w ≈ ∇u` is introduced. The β continuation is
//! expressed on the α-normalized objective
//! `(1/α)‖u∗k − v‖² + ‖w‖₁ + (β/2)‖w − ∇u‖²`, so the defaults (β from 1 to
//! 256 by 2√2) do not depend on α. Each β step alternates an isotropic
//! shrinkage of `∇u` with an exact FFT-domain solve for `u`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convolve::kernel_transfer;
use crate::error::{param, Error, Result};
use crate::fft::Fft2;
use crate::kernel::Kernel;
use crate::l0::adjoint_gradient;
use crate::raster::{gradient, GradientField, Raster};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeconvConfig {
    /// TV weight.
    pub alpha: f64,
    pub beta_init: f64,
    pub beta_max: f64,
    pub beta_rate: f64,
    /// Shrink/solve alternations per β value.
    pub inner_iters: usize,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self {
            alpha: 3e-3,
            beta_init: 1.0,
            beta_max: 256.0,
            beta_rate: 2.0 * std::f64::consts::SQRT_2,
            inner_iters: 1,
        }
    }
}

impl DeconvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(param("alpha", "must be > 0"));
        }
        if !(self.beta_init > 0.0) {
            return Err(param("beta_init", "must be > 0"));
        }
        if !(self.beta_rate > 1.0) {
            return Err(param("beta_rate", "must be > 1"));
        }
        if !self.beta_max.is_finite() {
            return Err(param("beta_max", "must be finite"));
        }
        if self.inner_iters == 0 {
            return Err(param("inner_iters", "must be >= 1"));
        }
        Ok(())
    }

    fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.beta_init), move |b| Some(b * self.beta_rate))
            .take_while(move |b| *b <= self.beta_max)
    }
}

/// Isotropic soft-shrinkage of a gradient pair.
pub fn shrink(pair: (f64, f64), t: f64) -> (f64, f64) {
    let norm = pair.0.hypot(pair.1);
    if norm == 0.0 {
        return (0.0, 0.0);
    }
    let scale = (norm - t).max(0.0) / norm;
    (pair.0 * scale, pair.1 * scale)
}

fn shrink_field(g: &GradientField, t: f64) -> GradientField {
    let (w, h) = g.dims();
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for (&a, &b) in g.gx.data().iter().zip(g.gy.data()) {
        let (sa, sb) = shrink((a, b), t);
        gx.push(sa);
        gy.push(sb);
    }
    GradientField {
        gx: Raster::from_parts(w, h, gx),
        gy: Raster::from_parts(w, h, gy),
    }
}

/// Solver for `(1/α)‖u∗k − v‖² + (β/2)‖∇u − w‖²` on a periodic domain.
pub(crate) struct TvSolver {
    fft: Fft2,
    width: usize,
    height: usize,
    alpha: f64,
    kv: Vec<Complex64>,
    kk: Vec<f64>,
    dd: Vec<f64>,
}

impl TvSolver {
    pub fn new(v: &Raster, k: &Kernel, alpha: f64) -> Self {
        let (w, h) = v.dims();
        let mut fft = Fft2::new(w, h);
        let otf = kernel_transfer(&mut fft, k);
        let vs = fft.forward_raster(v);
        let (dx, dy) = fft.difference_transfers();
        Self {
            kv: otf.iter().zip(&vs).map(|(k, v)| k.conj() * v).collect(),
            kk: otf.iter().map(|k| k.norm_sqr()).collect(),
            dd: dx
                .iter()
                .zip(&dy)
                .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
                .collect(),
            fft,
            width: w,
            height: h,
            alpha,
        }
    }

    pub fn solve(&mut self, w: &GradientField, beta: f64) -> Raster {
        // normal equations scaled by α/2: (|K|² + αβ/2 |D|²) U = K̄V + αβ/2 D̄ᵀW
        let rho = 0.5 * self.alpha * beta;
        let ws = self.fft.forward_raster(&adjoint_gradient(w));
        let spec: Vec<Complex64> = (0..self.fft.len())
            .map(|i| (self.kv[i] + rho * ws[i]) / (self.kk[i] + rho * self.dd[i]))
            .collect();
        Raster::from_parts(self.width, self.height, self.fft.inverse_real(spec))
    }

    pub fn shrink_step(&self, u: &Raster, beta: f64) -> GradientField {
        shrink_field(
            &gradient(u).expect("solver domain is at least 2x2"),
            1.0 / beta,
        )
    }
}

/// Deblur `v` with the known kernel `k`. Output clipped to `[0, 1]`.
pub fn deblur(v: &Raster, k: &Kernel, config: &DeconvConfig) -> Result<Raster> {
    config.validate()?;
    if !v.is_finite() {
        return Err(Error::NonFinite("deblur input"));
    }
    let pad = k.size();
    let padded = v.pad_replicate(pad);
    let mut solver = TvSolver::new(&padded, k, config.alpha);
    let mut u = padded;
    for beta in config.betas() {
        for _ in 0..config.inner_iters {
            let w = solver.shrink_step(&u, beta);
            u = solver.solve(&w, beta);
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("TV deconvolution"));
        }
    }
    Ok(u.unpad(pad).clipped())
}
