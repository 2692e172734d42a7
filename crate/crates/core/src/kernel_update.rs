//! Closed-form kernel re-estimation in the gradient domain.

use num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::fft::Fft2;
use crate::kernel::{project_kernel, Kernel, RawKernel};
use crate::raster::GradientField;

/// Minimizer of `‖∇u∗k − ∇v‖² + γ‖k‖²` over kernels with full periodic
/// support, cropped to `kernel_size` around the origin. Not projected.
pub fn kernel_update_raw(
    grad_u: &GradientField,
    grad_v: &GradientField,
    gamma: f64,
    kernel_size: usize,
) -> Result<RawKernel> {
    let (w, h) = grad_u.dims();
    if grad_v.dims() != (w, h) {
        return Err(Error::Dimensions(format!(
            "gradient fields differ: {w}x{h} vs {:?}",
            grad_v.dims()
        )));
    }
    if kernel_size.is_multiple_of(2) {
        return Err(param("kernel_size", format!("{kernel_size} is even")));
    }
    if kernel_size > w || kernel_size > h {
        return Err(Error::Dimensions(format!(
            "kernel {kernel_size} larger than field {w}x{h}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(param("gamma", "must be > 0"));
    }
    if grad_u.is_zero() || grad_v.is_zero() {
        return Err(Error::InsufficientStructure(
            "gradient field is identically zero".into(),
        ));
    }

    let mut fft = Fft2::new(w, h);
    let ux = fft.forward_raster(&grad_u.gx);
    let uy = fft.forward_raster(&grad_u.gy);
    let vx = fft.forward_raster(&grad_v.gx);
    let vy = fft.forward_raster(&grad_v.gy);
    let spec: Vec<Complex64> = (0..w * h)
        .map(|i| {
            let num = ux[i].conj() * vx[i] + uy[i].conj() * vy[i];
            num / (ux[i].norm_sqr() + uy[i].norm_sqr() + gamma)
        })
        .collect();
    let full = fft.inverse_real(spec);

    let r = (kernel_size / 2) as isize;
    let mut values = Vec::with_capacity(kernel_size * kernel_size);
    for dy in -r..=r {
        let y = dy.rem_euclid(h as isize) as usize;
        for dx in -r..=r {
            let x = dx.rem_euclid(w as isize) as usize;
            values.push(full[y * w + x]);
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel update"));
    }
    RawKernel::square(kernel_size, values)
}

/// [`kernel_update_raw`] followed by [`project_kernel`].
pub fn kernel_update(
    grad_u: &GradientField,
    grad_v: &GradientField,
    gamma: f64,
    kernel_size: usize,
    prune_fraction: f64,
) -> Result<Kernel> {
    let raw = kernel_update_raw(grad_u, grad_v, gamma, kernel_size)?;
    project_kernel(&raw, prune_fraction)
}
