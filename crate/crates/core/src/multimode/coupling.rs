//! Nonlocal three-wave coupling with a separable Gaussian kernel.
//!
//! `f(z_a, z_p, z_s) = (1/sqrt(pi sigma^3)) G(z_a - z_p) G(z_a - z_s)` with
//! `G(u) = exp(-u^2 / 2 sigma^2)`. On a uniform grid `G` depends only on the
//! index offset, so the kernel is stored once as a band of width
//! `KERNEL_CUTOFF * sigma`. All three coordinates are weighted by the same
//! medium window, which keeps the discrete coupling exactly anti-hermitian.
//! The window edges are error-function ramps of width `ramp`; a hard edge
//! (`ramp = 0`) makes the source discontinuous and the spectral advection
//! then rings across the whole periodic domain.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use super::Grid1D;
use crate::linalg::C64;

/// Band half-width in units of sigma; `G` is below 1e-17 beyond it.
pub const KERNEL_CUTOFF: f64 = 9.0;

/// Window weights below this are dropped.
const WEIGHT_FLOOR: f64 = 1e-18;

/// Medium window: 1 inside `[start, end]`, error-function edges of width
/// `ramp`, a hard indicator for `ramp = 0`.
pub fn window(z: f64, (start, end): (f64, f64), ramp: f64) -> f64 {
    if ramp == 0.0 {
        return if z >= start && z <= end { 1.0 } else { 0.0 };
    }
    let s = std::f64::consts::SQRT_2 * ramp;
    0.5 * (libm::erf((z - start) / s) - libm::erf((z - end) / s))
}

/// The nonlocal response kernel.
pub fn kernel(z_a: f64, z_p: f64, z_s: f64, sigma: f64) -> f64 {
    let norm = 1.0 / (std::f64::consts::PI * sigma.powi(3)).sqrt();
    let two_s2 = 2.0 * sigma * sigma;
    norm * (-(z_a - z_p).powi(2) / two_s2).exp() * (-(z_a - z_s).powi(2) / two_s2).exp()
}

#[derive(Debug, Clone)]
pub struct Coupling {
    /// `G` at index offsets `0..=band`.
    profile: Vec<f64>,
    band: usize,
    /// Window weight per grid index.
    weight: Vec<f64>,
    /// Grid indices with non-negligible weight, `lo..hi`.
    lo: usize,
    hi: usize,
    prefactor: f64,
    dz: f64,
}

impl Coupling {
    pub fn new(grid: &Grid1D, sigma: f64, medium: (f64, f64), ramp: f64) -> Self {
        let dz = grid.dz();
        let band = ((KERNEL_CUTOFF * sigma) / dz).ceil() as usize;
        let profile = (0..=band)
            .map(|k| {
                let u = k as f64 * dz;
                (-u * u / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let weight: Vec<f64> = grid
            .points()
            .iter()
            .map(|&z| window(z, medium, ramp))
            .collect();
        let inside: Vec<usize> = (0..grid.n())
            .filter(|&i| weight[i] > WEIGHT_FLOOR)
            .collect();
        let (lo, hi) = match (inside.first(), inside.last()) {
            (Some(&a), Some(&b)) => (a, b + 1),
            _ => (0, 0),
        };
        Self {
            profile,
            band,
            weight,
            lo,
            hi,
            prefactor: 1.0 / (std::f64::consts::PI * sigma.powi(3)).sqrt(),
            dz,
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Index range of the medium window.
    pub fn window(&self) -> std::ops::Range<usize> {
        self.lo..self.hi
    }

    #[inline]
    fn g(&self, i: usize, j: usize) -> f64 {
        self.profile[i.abs_diff(j)]
    }

    fn neighbours(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.band).max(self.lo)..(i + self.band + 1).min(self.hi)
    }

    /// Adds `scale * int f(z_a, z_p, z_s) phi_a(z_a) dz_a` to `out[p, s]`.
    pub fn add_to_pair(&self, phi_a: &Array1<C64>, scale: C64, out: &mut Array2<C64>) {
        let factor = scale * self.prefactor * self.dz;
        let n = out.ncols();
        let (lo, hi) = (self.lo, self.hi);
        let slice = out.as_slice_mut().expect("standard layout");
        slice[lo * n..hi * n]
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(offset, row)| {
                let p = lo + offset;
                let w = &self.weight;
                for a in self.neighbours(p) {
                    let x = factor * (w[p] * w[a] * self.g(a, p)) * phi_a[a];
                    for s in self.neighbours(a) {
                        row[s] += x * (w[s] * self.g(a, s));
                    }
                }
            });
    }

    /// Adds `scale * int int f(z_a, z_p, z_s) phi_ps(z_p, z_s) dz_p dz_s` to
    /// `out[a]`.
    pub fn add_to_aux(&self, phi_ps: &Array2<C64>, scale: C64, out: &mut Array1<C64>) {
        let factor = scale * self.prefactor * self.dz * self.dz;
        let values: Vec<(usize, C64)> = (self.lo..self.hi)
            .into_par_iter()
            .map(|a| {
                let w = &self.weight;
                let mut acc = C64::new(0.0, 0.0);
                for p in self.neighbours(a) {
                    let row = phi_ps.row(p);
                    let mut inner = C64::new(0.0, 0.0);
                    for s in self.neighbours(a) {
                        inner += row[s] * (w[s] * self.g(a, s));
                    }
                    acc += inner * (w[p] * self.g(a, p));
                }
                (a, acc * (factor * w[a]))
            })
            .collect();
        for (a, v) in values {
            out[a] += v;
        }
    }
}
