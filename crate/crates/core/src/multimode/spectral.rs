//! Fourier pseudo-spectral advection on the periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::Grid1D;
use crate::linalg::C64;

pub struct Advection {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers in FFT order, Nyquist set to zero.
    k: Vec<f64>,
}

impl std::fmt::Debug for Advection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Advection").field("n", &self.n).finish()
    }
}

impl Advection {
    pub fn new(grid: &Grid1D) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let length = grid.z_max() - grid.z_min();
        let k = (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as f64
                } else if j == n / 2 && n.is_multiple_of(2) {
                    0.0
                } else {
                    j as f64 - n as f64
                };
                2.0 * PI * m / length
            })
            .collect();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k,
        }
    }

    fn rows(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let scratch_len = fft.get_inplace_scratch_len();
        data.par_chunks_mut(self.n).for_each_init(
            || vec![C64::new(0.0, 0.0); scratch_len],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );
    }

    fn line(&self, phi: &Array1<C64>, symbol: impl Fn(usize) -> C64) -> Array1<C64> {
        let mut buf: Vec<C64> = phi.iter().copied().collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (j, b) in buf.iter_mut().enumerate() {
            *b *= symbol(j) * scale;
        }
        self.inverse.process(&mut buf);
        Array1::from_vec(buf)
    }

    fn plane(&self, phi: &Array2<C64>, symbol: impl Fn(usize, usize) -> C64 + Sync) -> Array2<C64> {
        let n = self.n;
        let mut buf = phi.as_standard_layout().into_owned();
        self.rows(buf.as_slice_mut().expect("standard layout"), &self.forward);
        // [p, ks] -> [ks, p]
        let mut t = buf.t().as_standard_layout().into_owned();
        self.rows(t.as_slice_mut().expect("standard layout"), &self.forward);
        let scale = 1.0 / (n * n) as f64;
        t.as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(ks, row)| {
                for (kp, v) in row.iter_mut().enumerate() {
                    *v *= symbol(kp, ks) * scale;
                }
            });
        self.rows(t.as_slice_mut().expect("standard layout"), &self.inverse);
        let mut out = t.t().as_standard_layout().into_owned();
        self.rows(out.as_slice_mut().expect("standard layout"), &self.inverse);
        out
    }

    fn phases(&self, v: f64, t: f64) -> Vec<C64> {
        self.k
            .iter()
            .map(|k| C64::from_polar(1.0, -v * k * t))
            .collect()
    }

    /// `-(v d_z) phi` for a line field.
    pub fn apply_1d(&self, phi: &Array1<C64>, v: f64) -> Array1<C64> {
        self.line(phi, |j| C64::new(0.0, -v * self.k[j]))
    }

    /// `-(v_p d_zp + v_s d_zs) phi` for a pair field indexed `[p, s]`.
    pub fn apply_2d(&self, phi: &Array2<C64>, v_p: f64, v_s: f64) -> Array2<C64> {
        self.plane(phi, |kp, ks| {
            C64::new(0.0, -(v_p * self.k[kp] + v_s * self.k[ks]))
        })
    }

    /// Exact free advection of a line field over time `t`.
    pub fn shift_1d(&self, phi: &Array1<C64>, v: f64, t: f64) -> Array1<C64> {
        let ph = self.phases(v, t);
        self.line(phi, |j| ph[j])
    }

    /// Exact free advection of a pair field over time `t`.
    pub fn shift_2d(&self, phi: &Array2<C64>, v_p: f64, v_s: f64, t: f64) -> Array2<C64> {
        let (pp, ps) = (self.phases(v_p, t), self.phases(v_s, t));
        self.plane(phi, |kp, ks| pp[kp] * ps[ks])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(z: f64) -> f64 {
        (-z * z / 0.5).exp()
    }

    fn dgaussian(z: f64) -> f64 {
        -4.0 * z * gaussian(z)
    }

    #[test]
    fn derivative_of_gaussian_is_spectrally_accurate() {
        let grid = Grid1D::new(-8.0, 8.0, 128).unwrap();
        let adv = Advection::new(&grid);
        let phi = Array1::from_iter(grid.points().iter().map(|&z| C64::new(gaussian(z), 0.0)));
        let d = adv.apply_1d(&phi, 2.0);
        for (i, z) in grid.points().iter().enumerate() {
            assert!((d[i] - C64::new(-2.0 * dgaussian(*z), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn two_dimensional_derivative() {
        let grid = Grid1D::new(-6.0, 6.0, 64).unwrap();
        let adv = Advection::new(&grid);
        let z = grid.points();
        let phi = Array2::from_shape_fn((64, 64), |(p, s)| {
            C64::new(gaussian(z[p] - 0.5) * gaussian(z[s] + 1.0), 0.0)
        });
        let d = adv.apply_2d(&phi, 1.0, 0.6);
        for (p, s) in [(20, 30), (32, 25), (40, 10)] {
            let expect = -(dgaussian(z[p] - 0.5) * gaussian(z[s] + 1.0)
                + 0.6 * gaussian(z[p] - 0.5) * dgaussian(z[s] + 1.0));
            assert!((d[[p, s]].re - expect).abs() < 1e-9);
            assert!(d[[p, s]].im.abs() < 1e-12);
        }
    }

    #[test]
    fn shift_translates_by_whole_cells() {
        let grid = Grid1D::new(-8.0, 8.0, 128).unwrap();
        let adv = Advection::new(&grid);
        let z = grid.points();
        let phi = Array2::from_shape_fn((128, 128), |(p, s)| {
            C64::new(gaussian(z[p] + 1.0) * gaussian(z[s]), 0.0)
        });
        let dz = grid.dz();
        let moved = adv.shift_2d(&phi, 1.0, 0.5, 6.0 * dz);
        for (p, s) in [(60, 64), (70, 66), (50, 60)] {
            assert!((moved[[p + 6, s + 3]] - phi[[p, s]]).norm() < 1e-12);
        }
        let line = Array1::from_iter(z.iter().map(|&x| C64::new(gaussian(x), 0.0)));
        let moved = adv.shift_1d(&line, 2.0, 5.0 * dz);
        assert!((moved[74] - line[64]).norm() < 1e-12);
    }

    #[test]
    fn advection_is_norm_neutral() {
        let grid = Grid1D::new(-6.0, 6.0, 64).unwrap();
        let adv = Advection::new(&grid);
        let z = grid.points();
        let phi = Array2::from_shape_fn((64, 64), |(p, s)| {
            C64::new(gaussian(z[p]), 0.3 * gaussian(z[s] - 0.2))
        });
        let d = adv.apply_2d(&phi, 1.0, 0.6);
        let rate: f64 = phi
            .iter()
            .zip(d.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        assert!(rate.abs() < 1e-10);
    }
}
