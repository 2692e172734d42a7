//! Synthetic degradations and test scenes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::convolve::{convolve, BoundaryMode};
use crate::error::{param, Result};
use crate::kernel::Kernel;
use crate::raster::Raster;

/// Blurry observation `truth ∗ kernel + noise`, clipped to `[0, 1]`.
///
/// Borders use edge replication. The output is a pure function of the
/// arguments.
pub fn synthesize(truth: &Raster, kernel: &Kernel, noise_sigma: f64, seed: u64) -> Result<Raster> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(param(
            "noise_sigma",
            format!("{noise_sigma} must be finite and >= 0"),
        ));
    }
    let blurred = convolve(truth, kernel, BoundaryMode::EdgeReplicatePad(kernel.size()))?;
    if noise_sigma == 0.0 {
        return Ok(blurred.clipped());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
    Ok(blurred.map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0)))
}

enum Shape {
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        cos: f64,
        sin: f64,
    },
    Triangle {
        p: [(f64, f64); 3],
    },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Ellipse {
                cx,
                cy,
                rx,
                ry,
                cos,
                sin,
            } => {
                let dx = x - cx;
                let dy = y - cy;
                let u = (dx * cos + dy * sin) / rx;
                let v = (-dx * sin + dy * cos) / ry;
                u * u + v * v <= 1.0
            }
            Shape::Triangle { p } => {
                let edge = |a: (f64, f64), b: (f64, f64)| {
                    (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
                };
                let d0 = edge(p[0], p[1]);
                let d1 = edge(p[1], p[2]);
                let d2 = edge(p[2], p[0]);
                (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
            }
        }
    }
}

/// Piecewise-constant "cartoon" scene of rectangles, ellipses and triangles,
/// sampled at pixel centres so edges are pixel-sharp. Deterministic in `seed`.
pub fn cartoon_scene(width: usize, height: usize, seed: u64) -> Raster {
    cartoon_scene_supersampled(width, height, seed, 1)
}

/// [`cartoon_scene`] averaged over `ss × ss` samples per pixel. Any
/// `ss > 1` softens edges, which acts as a mild box blur of its own.
pub fn cartoon_scene_supersampled(width: usize, height: usize, seed: u64, ss: usize) -> Raster {
    assert!(ss >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (width as f64, height as f64);
    let scale = wf.min(hf);
    let background = rng.random_range(0.2..0.8);
    let count = 12 + (width * height) / 2048;
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let value = rng.random_range(0.05..0.95);
        let cx = rng.random_range(0.0..wf);
        let cy = rng.random_range(0.0..hf);
        let size = scale * rng.random_range(0.04..0.22);
        let shape = match rng.random_range(0..3) {
            0 => {
                let aspect = rng.random_range(0.4..2.5);
                Shape::Rect {
                    x0: cx - size * aspect,
                    y0: cy - size / aspect,
                    x1: cx + size * aspect,
                    y1: cy + size / aspect,
                }
            }
            1 => {
                let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
                Shape::Ellipse {
                    cx,
                    cy,
                    rx: size * rng.random_range(0.5..1.5),
                    ry: size * rng.random_range(0.5..1.5),
                    cos: angle.cos(),
                    sin: angle.sin(),
                }
            }
            _ => {
                let mut p = [(0.0, 0.0); 3];
                for v in p.iter_mut() {
                    *v = (
                        cx + size * rng.random_range(-1.5..1.5),
                        cy + size * rng.random_range(-1.5..1.5),
                    );
                }
                Shape::Triangle { p }
            }
        };
        shapes.push((shape, value));
    }

    Raster::from_fn(width, height, |x, y| {
        let mut acc = 0.0;
        for sy in 0..ss {
            for sx in 0..ss {
                let px = x as f64 + (sx as f64 + 0.5) / ss as f64;
                let py = y as f64 + (sy as f64 + 0.5) / ss as f64;
                let v = shapes
                    .iter()
                    .rev()
                    .find(|(s, _)| s.contains(px, py))
                    .map_or(background, |(_, v)| *v);
                acc += v;
            }
        }
        acc / (ss * ss) as f64
    })
}
