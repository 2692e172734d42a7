//! Coarse-to-fine blind kernel estimation.
//!
//! Each pyramid level alternates a latent-image update under the ℓ0 gradient
//! prior ([`l0_latent_update`]) with a ridge-regularized kernel solve in the
//! gradient domain ([`kernel_update`]). The kernel found at one level is
//! upsampled bilinearly and re-projected to seed the next finer level.

use serde::{Deserialize, Serialize};

use crate::convolve::{convolve, BoundaryMode};
use crate::error::{param, Error, Result};
use crate::kernel::Kernel;
use crate::kernel_update::kernel_update;
use crate::l0::{l0_latent_update, Continuation};
use crate::pyramid::{build_pyramid, level_size};
use crate::raster::{gradient, Raster};

/// Hyperparameters of the blind estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    /// Odd kernel extent at full resolution.
    pub kernel_size: usize,
    /// Weight of the ℓ0 gradient prior.
    pub lambda: f64,
    /// Ridge weight of the kernel solve.
    pub gamma: f64,
    /// Alternations per pyramid level.
    pub outer_iters: usize,
    pub beta_init: f64,
    pub beta_max: f64,
    pub beta_rate: f64,
    pub pyramid_scale: f64,
    /// Kernel entries below this fraction of the peak are zeroed.
    pub prune_fraction: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        let lambda = 2e-3;
        Self {
            kernel_size: 15,
            lambda,
            gamma: 2.0,
            outer_iters: 5,
            beta_init: 2.0 * lambda,
            beta_max: 1e5,
            beta_rate: 2.0,
            pyramid_scale: 0.5,
            prune_fraction: 0.05,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size.is_multiple_of(2) || self.kernel_size < 3 {
            return Err(param(
                "kernel_size",
                format!("{} must be odd and >= 3", self.kernel_size),
            ));
        }
        if !(self.lambda > 0.0) {
            return Err(param("lambda", "must be > 0"));
        }
        if !(self.gamma > 0.0) {
            return Err(param("gamma", "must be > 0"));
        }
        if self.outer_iters == 0 {
            return Err(param("outer_iters", "must be >= 1"));
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return Err(param("pyramid_scale", "must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return Err(param("prune_fraction", "must lie in [0, 1)"));
        }
        self.schedule().validate()
    }

    pub fn schedule(&self) -> Continuation {
        Continuation {
            beta_init: self.beta_init,
            beta_max: self.beta_max,
            beta_rate: self.beta_rate,
        }
    }

    /// Kernel extent used `depth` levels below full resolution.
    pub fn kernel_size_at(&self, depth: usize) -> usize {
        let s = (self.kernel_size as f64 * self.pyramid_scale.powi(depth as i32)).ceil() as usize;
        let s = if s.is_multiple_of(2) { s + 1 } else { s };
        s.clamp(3, self.kernel_size)
    }

    /// Number of pyramid levels for an image of the given dimensions: keep
    /// halving while the coarse kernel stays above 3 px and the coarse image
    /// stays at least three kernel extents wide.
    pub fn levels_for(&self, width: usize, height: usize) -> usize {
        let mut levels = 1;
        loop {
            let depth = levels;
            let scaled = self.kernel_size as f64 * self.pyramid_scale.powi(depth as i32);
            if scaled < 3.0 {
                break;
            }
            let ks = self.kernel_size_at(depth);
            let w = level_size(width, self.pyramid_scale, depth);
            let h = level_size(height, self.pyramid_scale, depth);
            if w < 3 * ks || h < 3 * ks {
                break;
            }
            levels += 1;
        }
        levels
    }
}

/// Output of [`estimate_kernel`].
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub kernel: Kernel,
    /// Final latent sharp image at full resolution.
    pub latent: Raster,
    /// `‖u∗k − v‖²` after every outer iteration, all levels in order.
    pub energy_trace: Vec<f64>,
    /// Set when the solver produced no usable kernel and a delta was substituted.
    pub fallback: bool,
}

/// Blindly estimate the blur kernel of `v`.
pub fn estimate_kernel(v: &Raster, config: &EstimationConfig) -> Result<EstimationResult> {
    config.validate()?;
    let (w, h) = v.dims();
    if w < 3 * config.kernel_size || h < 3 * config.kernel_size {
        return Err(Error::Dimensions(format!(
            "image {w}x{h} smaller than three kernel extents ({})",
            3 * config.kernel_size
        )));
    }
    if gradient(v)?.is_zero() {
        return Err(Error::InsufficientStructure("image is constant".into()));
    }

    let levels = config.levels_for(w, h);
    let pyramid = build_pyramid(v, config.pyramid_scale, levels, 3)?;
    let schedule = config.schedule();
    let mut energy_trace = Vec::with_capacity(levels * config.outer_iters);

    let mut kernel = Kernel::horizontal_bar(config.kernel_size_at(levels - 1), 3);
    let mut latent = pyramid[0].clone();
    let mut prev_width = pyramid[0].width();

    for (idx, level) in pyramid.iter().enumerate() {
        let depth = levels - 1 - idx;
        let ks = config.kernel_size_at(depth);
        if idx > 0 {
            let ratio = prev_width as f64 / level.width() as f64;
            let raw = kernel.resample(ks, ratio);
            kernel = match crate::kernel::project_kernel(&raw, 0.0) {
                Ok(k) => k,
                Err(Error::InvalidKernel(_)) => return Ok(fallback(v, config, energy_trace)),
                Err(e) => return Err(e),
            };
        }
        prev_width = level.width();

        let margin = ks / 2 + 1;
        let mut grad_v = gradient(level)?;
        grad_v.mask_border(margin);

        for _ in 0..config.outer_iters {
            latent = l0_latent_update(level, &kernel, config.lambda, &schedule)?;
            let mut grad_u = gradient(&latent)?;
            grad_u.mask_border(margin);
            kernel = match kernel_update(&grad_u, &grad_v, config.gamma, ks, config.prune_fraction)
            {
                Ok(k) => k,
                Err(Error::InvalidKernel(_)) => return Ok(fallback(v, config, energy_trace)),
                Err(e) => return Err(e),
            };
            let fit = convolve(&latent, &kernel, BoundaryMode::EdgeReplicatePad(ks))?;
            energy_trace.push(fit.sum_sq_diff(level));
        }
    }

    Ok(EstimationResult {
        kernel,
        latent,
        energy_trace,
        fallback: false,
    })
}

fn fallback(v: &Raster, config: &EstimationConfig, energy_trace: Vec<f64>) -> EstimationResult {
    EstimationResult {
        kernel: Kernel::delta(config.kernel_size),
        latent: v.clone(),
        energy_trace,
        fallback: true,
    }
}
