//! Wigner functions of single-mode states.
//!
//! Convention: `alpha = (x + i p)/sqrt(2)` and `int W dx dp = 1`, so the
//! vacuum peaks at `1/pi` and every value lies in `[-1/pi, 1/pi]`.
//! Values are evaluated as a displaced parity expectation,
//! `W(x, p) = (1/pi) Tr[D(-alpha) rho D(alpha) P] = (1/pi) Tr[rho D(2 alpha) P]`.

use std::f64::consts::{FRAC_1_PI, SQRT_2};
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{displacement_block, DensityOperator};
use crate::linalg::C64;

/// Uniform rectangular grid in the (x, p) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn uniform(x_range: (f64, f64), nx: usize, p_range: (f64, f64), np: usize) -> Result<Self> {
        Ok(Self {
            x: linspace(x_range, nx)?,
            p: linspace(p_range, np)?,
        })
    }

    /// 101 x 101 points over `[-4, 4]^2`.
    pub fn standard() -> Self {
        Self::uniform((-4.0, 4.0), 101, (-4.0, 4.0), 101).expect("valid grid")
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn cell_area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.p[1] - self.p[0])
    }
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "phase-space axis needs n >= 2 and lo < hi, got n = {n} on [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

/// Wigner function sampled on a grid; `values[[ix, ip]]`.
#[derive(Debug, Clone)]
pub struct WignerMap {
    pub grid: PhaseSpaceGrid,
    pub values: Array2<f64>,
}

impl WignerMap {
    /// Riemann sum of `W dx dp` over the grid.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid point holding the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let ((ix, ip), _) = self
            .values
            .indexed_iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        (self.grid.x[ix], self.grid.p[ip])
    }

    /// Writes `x,p,w` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["x", "p", "w"])?;
        for (ix, x) in self.grid.x.iter().enumerate() {
            for (ip, p) in self.grid.p.iter().enumerate() {
                writer.write_record([
                    x.to_string(),
                    p.to_string(),
                    self.values[[ix, ip]].to_string(),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}

/// Value of the Wigner function at a single phase-space point.
pub fn wigner_at(rho: &DensityOperator, x: f64, p: f64) -> Result<f64> {
    rho.require_single_mode()?;
    Ok(parity_trace(rho, C64::new(x, p) / SQRT_2))
}

fn parity_trace(rho: &DensityOperator, alpha: C64) -> f64 {
    let m = rho.matrix();
    let dim = m.nrows();
    let d = displacement_block(2.0 * alpha, dim);
    // sum_{m,n} rho_mn <n|D(2 alpha)|m> (-1)^m
    let mut acc = C64::new(0.0, 0.0);
    for col in 0..dim {
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        let mut s = C64::new(0.0, 0.0);
        for row in 0..dim {
            s += m[[col, row]] * d[[row, col]];
        }
        acc += s * sign;
    }
    acc.re * FRAC_1_PI
}

/// Wigner function of a single-mode state on `grid`.
pub fn wigner(rho: &DensityOperator, grid: &PhaseSpaceGrid) -> Result<WignerMap> {
    rho.require_single_mode()?;
    let np = grid.p.len();
    let values: Vec<f64> = grid
        .x
        .par_iter()
        .flat_map_iter(|&x| {
            grid.p
                .iter()
                .map(move |&p| parity_trace(rho, C64::new(x, p) / SQRT_2))
        })
        .collect();
    Ok(WignerMap {
        grid: grid.clone(),
        values: Array2::from_shape_vec((grid.x.len(), np), values).expect("grid shape"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, displacement, fock_state, ModeSpace};
    use crate::linalg;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_and_single_photon_at_origin() {
        let vac = fock_state(0, 8).unwrap().projector();
        assert_abs_diff_eq!(
            wigner_at(&vac, 0.0, 0.0).unwrap(),
            1.0 / PI,
            epsilon = 1e-12
        );
        let one = fock_state(1, 8).unwrap().projector();
        assert_abs_diff_eq!(
            wigner_at(&one, 0.0, 0.0).unwrap(),
            -1.0 / PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn vacuum_is_gaussian() {
        let vac = fock_state(0, 4).unwrap().projector();
        for (x, p) in [(1.0f64, 0.0f64), (0.3, -1.2), (2.5, 2.5)] {
            let expect = (-(x * x + p * p)).exp() / PI;
            assert_abs_diff_eq!(wigner_at(&vac, x, p).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn coherent_peak_location() {
        let alpha = 0.9;
        let rho = coherent_state(C64::new(alpha, 0.0), 20)
            .unwrap()
            .projector();
        let grid = PhaseSpaceGrid::uniform((-1.0, 3.0), 401, (-1.0, 1.0), 201).unwrap();
        let map = wigner(&rho, &grid).unwrap();
        let (x, p) = map.argmax();
        assert!((x - SQRT_2 * alpha).abs() <= 0.01);
        assert!(p.abs() <= 0.01);
    }

    #[test]
    fn parity_identity() {
        let rho = coherent_state(C64::new(0.4, -0.7), 16).unwrap().projector();
        let alternating: f64 = (0..16)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * rho.population(n).unwrap())
            .sum();
        assert_abs_diff_eq!(
            wigner_at(&rho, 0.0, 0.0).unwrap() * PI,
            alternating,
            epsilon = 1e-9
        );
    }

    #[test]
    fn standard_grid_normalisation_and_bounds() {
        let psi = fock_state(1, 16).unwrap();
        let map = wigner(&psi.projector(), &PhaseSpaceGrid::standard()).unwrap();
        assert_abs_diff_eq!(map.integral(), 1.0, epsilon = 1e-3);
        assert!(map.max() <= 2.0 / PI + 1e-6 && map.min() >= -2.0 / PI - 1e-6);
    }

    #[test]
    fn displacement_covariance() {
        let beta = C64::new(0.5, -0.3);
        let rho = fock_state(1, 24).unwrap().projector();
        let d = displacement(beta, 24).unwrap();
        let shifted = d
            .matrix()
            .dot(rho.matrix())
            .dot(&linalg::dagger(&d.matrix().view()));
        let shifted = DensityOperator::new(shifted, ModeSpace::single(24).unwrap(), 0.0).unwrap();
        let (dx, dp) = (SQRT_2 * beta.re, SQRT_2 * beta.im);
        for (x, p) in [(0.0, 0.0), (0.4, 0.2), (-1.0, 0.7)] {
            let a = wigner_at(&shifted, x + dx, p + dp).unwrap();
            let b = wigner_at(&rho, x, p).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_multimode_input() {
        let two = fock_state(0, 2)
            .unwrap()
            .tensor(&fock_state(1, 2).unwrap())
            .unwrap();
        assert!(matches!(
            wigner(&two.projector(), &PhaseSpaceGrid::standard()),
            Err(Error::NotSingleMode { modes: 2 })
        ));
    }

    #[test]
    fn csv_export() {
        let rho = fock_state(0, 4).unwrap().projector();
        let grid = PhaseSpaceGrid::uniform((-1.0, 1.0), 3, (-1.0, 1.0), 2).unwrap();
        let map = wigner(&rho, &grid).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "x,p,w");
        let fields: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields[0], -1.0);
        assert_eq!(fields[2], map.values[[0, 0]]);
    }

    #[test]
    fn grid_rejects_degenerate_axis() {
        assert!(PhaseSpaceGrid::uniform((1.0, 1.0), 10, (-1.0, 1.0), 10).is_err());
        assert!(PhaseSpaceGrid::uniform((-1.0, 1.0), 1, (-1.0, 1.0), 10).is_err());
    }
}
