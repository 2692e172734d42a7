//! 2-D FFT on row-major buffers, built from 1-D `rustfft` passes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::raster::Raster;

pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    transposed: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            transposed: vec![Complex64::default(); width * height],
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    fn run(&mut self, data: &mut [Complex64], inverse: bool) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(data.len(), w * h);
        let (rows, cols) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        rows.process(data);
        for y in 0..h {
            for x in 0..w {
                self.transposed[x * h + y] = data[y * w + x];
            }
        }
        cols.process(&mut self.transposed);
        for x in 0..w {
            for y in 0..h {
                data[y * w + x] = self.transposed[x * h + y];
            }
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Normalized inverse transform.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.run(data, true);
        let norm = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    pub fn forward_real(&mut self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn forward_raster(&mut self, raster: &Raster) -> Vec<Complex64> {
        debug_assert_eq!(raster.dims(), (self.width, self.height));
        self.forward_real(raster.data())
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&mut self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spectrum);
        spectrum.into_iter().map(|c| c.re).collect()
    }

    /// Transfer function of a small filter whose tap `(i, j)` sits at offset
    /// `(i - cx, j - cy)` from the origin.
    pub fn transfer(
        &mut self,
        taps: &[f64],
        taps_w: usize,
        taps_h: usize,
        cx: usize,
        cy: usize,
    ) -> Vec<Complex64> {
        let (w, h) = (self.width, self.height);
        let mut buf = vec![Complex64::default(); w * h];
        for j in 0..taps_h {
            let y = (j as isize - cy as isize).rem_euclid(h as isize) as usize;
            for i in 0..taps_w {
                let x = (i as isize - cx as isize).rem_euclid(w as isize) as usize;
                buf[y * w + x] += taps[j * taps_w + i];
            }
        }
        self.forward(&mut buf);
        buf
    }

    /// Transfer functions of the periodic forward differences `u(x+1) - u(x)`
    /// and `u(y+1) - u(y)`.
    pub fn difference_transfers(&mut self) -> (Vec<Complex64>, Vec<Complex64>) {
        // as a convolution the forward difference has taps +1 at offset -1 and -1 at 0
        let dx = self.transfer(&[1.0, -1.0], 2, 1, 1, 0);
        let dy = self.transfer(&[1.0, -1.0], 1, 2, 0, 1);
        (dx, dy)
    }
}
