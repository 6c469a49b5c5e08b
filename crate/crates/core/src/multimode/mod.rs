//! Real-space multimode model: one probe photon and one signal photon
//! travelling as wave packets through a medium with a nonlocal three-wave
//! response.
//!
//! The pair amplitude `phi_ps(t; z_p, z_s)` and the auxiliary amplitude
//! `phi_a(t; z_a)` obey
//!
//! ```text
//! d_t phi_ps = -v_p d_zp phi_ps - v_s d_zs phi_ps - (i g0/2) int f phi_a dz_a
//! d_t phi_a  = -v_a d_za phi_a - (i g0/2) int int f phi_ps dz_p dz_s
//! ```
//!
//! with the coupling integrals restricted to the medium window. The same
//! uniform grid is used for every coordinate.

mod coupling;
mod export;
mod propagate;
mod spectral;

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

pub use coupling::{kernel, window, Coupling, KERNEL_CUTOFF};
pub use export::{
    read_qndm, write_aux_csv, write_phase_csv, write_qndm, write_qndm_aux, write_snapshot_csv,
    Dump, QNDM_MAGIC, QNDM_VERSION,
};
pub use propagate::{
    calibrate_g0, coupled_rhs, multimode_fidelity, phase_map, propagate_fields,
    propagate_multimode, Calibration, CalibrationScan, Settings, Snapshot, Trajectory,
};
pub use spectral::Advection;

/// Pulses must sit at least this many durations from the domain edge.
pub const INPUT_MARGIN: f64 = 5.0;

/// Uniform periodic grid: `z_i = z_min + i dz`, `dz = (z_max - z_min) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    z_min: f64,
    z_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(z_min: f64, z_max: f64, n: usize) -> Result<Self> {
        let grid = Self { z_min, z_max, n };
        grid.validate()?;
        Ok(grid)
    }

    /// 512 points over `[-10, 10]`.
    pub fn standard() -> Self {
        Self::new(-10.0, 10.0, 512).expect("valid grid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 64 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 64 points, got {}",
                self.n
            )));
        }
        if !(self.z_max > self.z_min) || !self.z_min.is_finite() || !self.z_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        Ok(())
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.n as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + self.dz() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.z(i)).collect()
    }

    /// Same bounds with twice the points.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n,
            ..*self
        }
    }
}

/// Physical parameters of a multimode run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimodeParams {
    pub g0: f64,
    pub sigma: f64,
    pub v_a: f64,
    pub v_p: f64,
    pub v_s: f64,
    pub tau: f64,
    pub z_p0: f64,
    pub z_s0: f64,
    /// Interaction window `[start, end]`.
    pub medium: [f64; 2],
    /// Width of the window edges; 0 gives a hard window.
    #[serde(default = "default_ramp")]
    pub ramp: f64,
}

pub const DEFAULT_RAMP: f64 = 0.25;

fn default_ramp() -> f64 {
    DEFAULT_RAMP
}

impl MultimodeParams {
    /// Probe and signal copropagating at equal speed from the same delay.
    pub fn copropagating(g0: f64) -> Self {
        Self {
            g0,
            sigma: 0.2,
            v_a: 1.0,
            v_p: 1.0,
            v_s: 1.0,
            tau: 0.6,
            z_p0: -3.0,
            z_s0: -3.0,
            medium: [0.0, 8.0],
            ramp: DEFAULT_RAMP,
        }
    }

    /// A slow signal overtaken by a fast probe. The window keeps `L = 8`
    /// and is centred on the mean crossing point `z = 1.4`, so every pair
    /// completes its crossing inside the medium.
    pub fn scan_over(g0: f64) -> Self {
        Self {
            g0,
            sigma: 0.2,
            v_a: 1.0,
            v_p: 1.0,
            v_s: 0.6,
            tau: 0.6,
            z_p0: -7.6,
            z_s0: -4.0,
            medium: [-2.6, 5.4],
            ramp: DEFAULT_RAMP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("v_a", self.v_a),
            ("v_p", self.v_p),
            ("v_s", self.v_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.ramp >= 0.0) || !self.ramp.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ramp must be non-negative, got {}",
                self.ramp
            )));
        }
        if !self.g0.is_finite() || !self.z_p0.is_finite() || !self.z_s0.is_finite() {
            return Err(Error::InvalidParameter(
                "g0 and pulse centres must be finite".into(),
            ));
        }
        if !(self.medium[1] > self.medium[0]) {
            return Err(Error::InvalidParameter(format!(
                "medium window must satisfy start < end, got {:?}",
                self.medium
            )));
        }
        Ok(())
    }

    pub fn max_velocity(&self) -> f64 {
        self.v_a.max(self.v_p).max(self.v_s)
    }

    /// Free-advection centres `(z_p, z_s)` at time `t`.
    pub fn centres_at(&self, t: f64) -> (f64, f64) {
        (self.z_p0 + self.v_p * t, self.z_s0 + self.v_s * t)
    }
}

/// Pair amplitude on the square grid; `values[[p, s]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPS {
    pub values: Array2<C64>,
    pub grid: Grid1D,
}

/// Auxiliary amplitude; `values[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldA {
    pub values: Array1<C64>,
    pub grid: Grid1D,
}

impl FieldPS {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            values: Array2::zeros((grid.n(), grid.n())),
            grid,
        }
    }

    /// `sum |phi|^2 dz^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dz().powi(2)
    }

    /// `sum conj(self) other dz^2`.
    pub fn inner(&self, other: &FieldPS) -> C64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.dz().powi(2)
    }

    /// Largest magnitude on the outer rows and columns.
    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.n();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for (p, s) in [(0, i), (n - 1, i), (i, 0), (i, n - 1)] {
                m = m.max(self.values[[p, s]].norm());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl FieldA {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            values: Array1::zeros(grid.n()),
            grid,
        }
    }

    /// `sum |phi|^2 dz`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dz()
    }

    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.n();
        self.values[0].norm().max(self.values[n - 1].norm())
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Separable Gaussian pair amplitude centred at `(z_p, z_s)`, evaluated
/// without any margin check.
pub fn gaussian_pair(grid: &Grid1D, tau: f64, z_p: f64, z_s: f64) -> FieldPS {
    let norm = 1.0 / (PI * tau * tau).sqrt();
    let profile = |c: f64| -> Vec<f64> {
        grid.points()
            .iter()
            .map(|z| (-(z - c).powi(2) / (2.0 * tau * tau)).exp())
            .collect()
    };
    let (gp, gs) = (profile(z_p), profile(z_s));
    let values = Array2::from_shape_fn((grid.n(), grid.n()), |(p, s)| {
        C64::new(norm * gp[p] * gs[s], 0.0)
    });
    FieldPS {
        values,
        grid: *grid,
    }
}

/// Initial condition: product Gaussian pair, empty auxiliary field.
pub fn gaussian_input(params: &MultimodeParams, grid: &Grid1D) -> Result<(FieldPS, FieldA)> {
    params.validate()?;
    grid.validate()?;
    let margin = INPUT_MARGIN * params.tau;
    for (name, centre) in [("probe", params.z_p0), ("signal", params.z_s0)] {
        if centre - margin < grid.z_min() || centre + margin > grid.z_max() {
            return Err(Error::Domain(format!(
                "{name} pulse at {centre} needs [{:.3}, {:.3}] inside the grid [{}, {}]",
                centre - margin,
                centre + margin,
                grid.z_min(),
                grid.z_max()
            )));
        }
    }
    let ps = gaussian_pair(grid, params.tau, params.z_p0, params.z_s0);
    let norm = ps.norm_sqr();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Tolerance(format!(
            "discretised input norm {norm} deviates from 1 by more than 1e-6"
        )));
    }
    Ok((ps, FieldA::zeros(*grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_spacing_and_points() {
        let g = Grid1D::new(-1.0, 1.0, 64).unwrap();
        assert_abs_diff_eq!(g.dz(), 2.0 / 64.0, epsilon = 1e-15);
        assert_eq!(g.z(0), -1.0);
        assert_eq!(g.points().len(), 64);
        assert!(Grid1D::new(-1.0, 1.0, 32).is_err());
        assert!(Grid1D::new(1.0, 1.0, 64).is_err());
        assert_eq!(g.refined().n(), 128);
    }

    #[test]
    fn input_norm_and_peak() {
        let params = MultimodeParams::copropagating(1.0);
        let grid = Grid1D::new(-7.0, 9.0, 256).unwrap();
        let (ps, a) = gaussian_input(&params, &grid).unwrap();
        assert_abs_diff_eq!(ps.norm_sqr(), 1.0, epsilon = 1e-6);
        assert_eq!(a.norm_sqr(), 0.0);
        let i = ((params.z_p0 - grid.z_min()) / grid.dz()).round() as usize;
        assert_abs_diff_eq!(grid.z(i), params.z_p0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            ps.values[[i, i]].re,
            1.0 / (PI * params.tau * params.tau).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn input_is_separable() {
        let params = MultimodeParams::scan_over(1.0);
        let grid = Grid1D::new(-12.0, 4.0, 128).unwrap();
        let (ps, _) = gaussian_input(&params, &grid).unwrap();
        let v = &ps.values;
        for (p, s, q, r) in [(40, 60, 50, 70), (10, 90, 30, 64), (55, 55, 56, 70)] {
            let lhs = v[[p, s]] * v[[q, r]];
            let rhs = v[[p, r]] * v[[q, s]];
            assert!((lhs - rhs).norm() <= 1e-14 * lhs.norm().max(1e-300));
        }
    }

    #[test]
    fn input_too_close_to_edge() {
        let params = MultimodeParams::scan_over(1.0);
        assert!(matches!(
            gaussian_input(&params, &Grid1D::standard()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn params_validation() {
        let mut p = MultimodeParams::copropagating(1.0);
        p.sigma = 0.0;
        assert!(p.validate().is_err());
        let mut p = MultimodeParams::copropagating(1.0);
        p.medium = [2.0, 1.0];
        assert!(p.validate().is_err());
        let json = r#"{"g0":1,"sigma":0.2,"v_a":1,"v_p":1,"v_s":1,"tau":0.6,
            "z_p0":0,"z_s0":0,"medium":[0,8],"extra":1}"#;
        assert!(serde_json::from_str::<MultimodeParams>(json).is_err());
    }
}
