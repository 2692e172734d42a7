use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::kernel::Kernel;
use crate::raster::Raster;

/// How samples outside the image are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMode {
    Periodic,
    EdgeReplicatePad(usize),
}

/// Transfer function of `kernel` on a `width × height` periodic grid.
pub(crate) fn kernel_transfer(fft: &mut Fft2, kernel: &Kernel) -> Vec<Complex64> {
    let r = kernel.radius();
    fft.transfer(kernel.weights(), kernel.size(), kernel.size(), r, r)
}

fn convolve_periodic(image: &Raster, kernel: &Kernel) -> Raster {
    let (w, h) = image.dims();
    let mut fft = Fft2::new(w, h);
    let otf = kernel_transfer(&mut fft, kernel);
    let mut spec = fft.forward_raster(image);
    for (s, k) in spec.iter_mut().zip(&otf) {
        *s *= k;
    }
    Raster::from_parts(w, h, fft.inverse_real(spec))
}

/// Convolve `image` with `kernel`; the output has the input's dimensions.
pub fn convolve(image: &Raster, kernel: &Kernel, mode: BoundaryMode) -> Result<Raster> {
    let (w, h) = image.dims();
    if kernel.size().is_multiple_of(2) {
        return Err(Error::InvalidKernel(format!(
            "even extent {}",
            kernel.size()
        )));
    }
    if kernel.size() > w || kernel.size() > h {
        return Err(Error::Dimensions(format!(
            "kernel {} larger than image {w}x{h}",
            kernel.size()
        )));
    }
    match mode {
        BoundaryMode::Periodic => Ok(convolve_periodic(image, kernel)),
        BoundaryMode::EdgeReplicatePad(pad) => {
            if pad < kernel.radius() {
                return Err(Error::Dimensions(format!(
                    "pad {pad} smaller than kernel radius {}",
                    kernel.radius()
                )));
            }
            Ok(convolve_periodic(&image.pad_replicate(pad), kernel).unpad(pad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct(image: &Raster, kernel: &Kernel, periodic: bool) -> Raster {
        let r = kernel.radius() as isize;
        Raster::from_fn(image.width(), image.height(), |x, y| {
            let mut acc = 0.0;
            for j in 0..kernel.size() {
                for i in 0..kernel.size() {
                    let sx = x as isize - (i as isize - r);
                    let sy = y as isize - (j as isize - r);
                    let s = if periodic {
                        image.get_wrapped(sx, sy)
                    } else {
                        image.get_clamped(sx, sy)
                    };
                    acc += kernel.get(i, j) * s;
                }
            }
            acc
        })
    }

    fn random_kernel(rng: &mut ChaCha8Rng, size: usize) -> Kernel {
        let w = (0..size * size).map(|_| rng.random::<f64>()).collect();
        Kernel::normalized(size, w).unwrap()
    }

    #[test]
    fn delta_is_identity() {
        let img = Raster::from_fn(9, 7, |x, y| ((x * y) % 5) as f64 / 5.0);
        for mode in [BoundaryMode::Periodic, BoundaryMode::EdgeReplicatePad(3)] {
            let out = convolve(&img, &Kernel::delta(3), mode).unwrap();
            assert!(out.rmse(&img) < 1e-14);
        }
    }

    #[test]
    fn constant_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_kernel(&mut rng, 5);
        let out = convolve(&Raster::filled(12, 10, 0.42), &k, BoundaryMode::Periodic).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-14));
    }

    #[test]
    fn matches_direct_on_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = Raster::from_fn(8, 8, |_, _| rng.random::<f64>());
        let k = random_kernel(&mut rng, 3);
        let fast = convolve(&img, &k, BoundaryMode::Periodic).unwrap();
        let slow = direct(&img, &k, true);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300));
        }
        let fast = convolve(&img, &k, BoundaryMode::EdgeReplicatePad(3)).unwrap();
        let slow = direct(&img, &k, false);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn rejects_oversized_kernel_and_small_pad() {
        let img = Raster::filled(4, 4, 0.0);
        assert!(convolve(&img, &Kernel::delta(5), BoundaryMode::Periodic).is_err());
        assert!(convolve(&img, &Kernel::delta(3), BoundaryMode::EdgeReplicatePad(0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn fft_equals_direct(w in 5usize..=16, h in 5usize..=16, ks in prop::sample::select(vec![1usize, 3, 5]), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Raster::from_fn(w, h, |_, _| rng.random::<f64>());
            let k = random_kernel(&mut rng, ks);
            let fast = convolve(&img, &k, BoundaryMode::Periodic).unwrap();
            let slow = direct(&img, &k, true);
            let num: f64 = fast.sum_sq_diff(&slow).sqrt();
            let den: f64 = slow.data().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(num <= 1e-10 * den);
        }
    }
}
