//! Time integration: exact spectral advection with an integrating-factor
//! RK4 step for the banded coupling.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{
    gaussian_input, gaussian_pair, Advection, Coupling, FieldA, FieldPS, Grid1D, MultimodeParams,
};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Step control and run-time checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// `v_max dt / dz`; must not exceed 0.5.
    pub cfl: f64,
    /// Allowed drift of the total norm from its initial value.
    pub norm_tolerance: f64,
    /// Largest magnitude allowed on the grid edge at sampled times.
    pub boundary_tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            norm_tolerance: 1e-6,
            boundary_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub ps: FieldPS,
    pub a: FieldA,
}

impl Snapshot {
    pub fn norm_sqr(&self) -> f64 {
        self.ps.norm_sqr() + self.a.norm_sqr()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Snapshots at `t = 0`, every requested time and `t_end`, in order.
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// Largest step taken.
    pub dt: f64,
    /// Largest `|norm(t) - norm(0)|` over every step.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trajectory holds the initial state")
    }
}

struct System {
    advection: Advection,
    coupling: Coupling,
    params: MultimodeParams,
}

impl System {
    fn new(params: &MultimodeParams, grid: &Grid1D) -> Self {
        Self {
            advection: Advection::new(grid),
            coupling: Coupling::new(
                grid,
                params.sigma,
                (params.medium[0], params.medium[1]),
                params.ramp,
            ),
            params: params.clone(),
        }
    }

    fn rhs(&self, ps: &Array2<C64>, a: &Array1<C64>) -> (Array2<C64>, Array1<C64>) {
        let p = &self.params;
        let mut dps = self.advection.apply_2d(ps, p.v_p, p.v_s);
        let mut da = self.advection.apply_1d(a, p.v_a);
        self.add_coupling(ps, a, &mut dps, &mut da);
        (dps, da)
    }

    fn add_coupling(
        &self,
        ps: &Array2<C64>,
        a: &Array1<C64>,
        dps: &mut Array2<C64>,
        da: &mut Array1<C64>,
    ) {
        if self.params.g0 != 0.0 {
            let scale = C64::new(0.0, -0.5 * self.params.g0);
            self.coupling.add_to_pair(a, scale, dps);
            self.coupling.add_to_aux(ps, scale, da);
        }
    }

    /// `h` times the coupling terms.
    fn kick(&self, ps: &Array2<C64>, a: &Array1<C64>, h: f64) -> (Array2<C64>, Array1<C64>) {
        let mut dps = Array2::zeros(ps.raw_dim());
        let mut da = Array1::zeros(a.raw_dim());
        self.add_coupling(ps, a, &mut dps, &mut da);
        dps *= C64::new(h, 0.0);
        da *= C64::new(h, 0.0);
        (dps, da)
    }

    fn drift(&self, ps: &Array2<C64>, a: &Array1<C64>, t: f64) -> (Array2<C64>, Array1<C64>) {
        let p = &self.params;
        (
            self.advection.shift_2d(ps, p.v_p, p.v_s, t),
            self.advection.shift_1d(a, p.v_a, t),
        )
    }

    /// One integrating-factor RK4 step: advection is applied exactly in
    /// Fourier space, RK4 integrates the coupling in the co-moving frame.
    fn step(&self, ps: &mut Array2<C64>, a: &mut Array1<C64>, h: f64) {
        let half = 0.5 * h;
        let c = |x: f64| C64::new(x, 0.0);
        let (k1p, k1a) = self.kick(ps, a, h);
        let (up, ua) = self.drift(ps, a, half);
        let (bp, ba) = self.drift(&k1p, &k1a, half);
        let (k2p, k2a) = self.kick(&(&up + &(&bp * c(0.5))), &(&ua + &(&ba * c(0.5))), h);
        let (k3p, k3a) = self.kick(&(&up + &(&k2p * c(0.5))), &(&ua + &(&k2a * c(0.5))), h);
        let (wp, wa) = self.drift(&(&up + &k3p), &(&ua + &k3a), half);
        let (k4p, k4a) = self.kick(&wp, &wa, h);
        let sp = &up + &(&bp * c(1.0 / 6.0)) + &((&k2p + &k3p) * c(1.0 / 3.0));
        let sa = &ua + &(&ba * c(1.0 / 6.0)) + &((&k2a + &k3a) * c(1.0 / 3.0));
        let (mut np, mut na) = self.drift(&sp, &sa, half);
        np.scaled_add(c(1.0 / 6.0), &k4p);
        na.scaled_add(c(1.0 / 6.0), &k4a);
        *ps = np;
        *a = na;
    }
}

fn check_grids(ps: &FieldPS, a: &FieldA) -> Result<()> {
    if ps.grid != a.grid {
        return Err(Error::InvalidParameter(
            "pair and auxiliary fields live on different grids".into(),
        ));
    }
    let n = ps.grid.n();
    for found in [ps.values.nrows(), ps.values.ncols(), a.values.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    Ok(())
}

/// Time derivatives of both fields.
pub fn coupled_rhs(
    ps: &FieldPS,
    a: &FieldA,
    params: &MultimodeParams,
) -> Result<(Array2<C64>, Array1<C64>)> {
    params.validate()?;
    check_grids(ps, a)?;
    Ok(System::new(params, &ps.grid).rhs(&ps.values, &a.values))
}

/// Integrates from the Gaussian input.
pub fn propagate_multimode(
    params: &MultimodeParams,
    grid: &Grid1D,
    t_end: f64,
    sample_times: &[f64],
    settings: &Settings,
) -> Result<Trajectory> {
    let (ps, a) = gaussian_input(params, grid)?;
    propagate_fields(ps, a, params, t_end, sample_times, settings)
}

/// Integrates arbitrary initial fields.
pub fn propagate_fields(
    ps0: FieldPS,
    a0: FieldA,
    params: &MultimodeParams,
    t_end: f64,
    sample_times: &[f64],
    settings: &Settings,
) -> Result<Trajectory> {
    params.validate()?;
    check_grids(&ps0, &a0)?;
    if !(settings.cfl > 0.0) || settings.cfl > 0.5 {
        return Err(Error::Cfl { cfl: settings.cfl });
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be non-negative, got {t_end}"
        )));
    }
    let mut times = vec![0.0];
    for &t in sample_times {
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "sample time {t} outside [0, {t_end}]"
            )));
        }
        times.push(t);
    }
    times.push(t_end);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let grid = ps0.grid;
    let system = System::new(params, &grid);
    let dt_max = settings.cfl * grid.dz() / params.max_velocity();
    let mut ps = ps0.values;
    let mut a = a0.values;
    let norm0 = total_norm(&ps, &a, &grid);
    let mut snapshots = Vec::with_capacity(times.len());
    let mut steps = 0;
    let mut dt: f64 = 0.0;
    let mut max_drift: f64 = 0.0;
    let mut t_prev = 0.0;
    for &t in &times {
        let length = t - t_prev;
        if length > 0.0 {
            let count = (length / dt_max).ceil() as usize;
            let h = length / count as f64;
            dt = dt.max(h);
            for _ in 0..count {
                system.step(&mut ps, &mut a, h);
                steps += 1;
                let drift = (total_norm(&ps, &a, &grid) - norm0).abs();
                max_drift = max_drift.max(drift);
                if !(drift <= settings.norm_tolerance) {
                    return Err(Error::Tolerance(format!(
                        "total norm drifted by {drift:.3e} after {steps} steps"
                    )));
                }
            }
        }
        let snap = Snapshot {
            t,
            ps: FieldPS {
                values: ps.clone(),
                grid,
            },
            a: FieldA {
                values: a.clone(),
                grid,
            },
        };
        if !snap.ps.is_finite() || !snap.a.is_finite() {
            return Err(Error::Tolerance(format!("non-finite field at t = {t}")));
        }
        let edge = snap.ps.boundary_max().max(snap.a.boundary_max());
        if edge > settings.boundary_tolerance {
            return Err(Error::Domain(format!(
                "amplitude {edge:.3e} on the grid edge at t = {t}; enlarge the domain"
            )));
        }
        snapshots.push(snap);
        t_prev = t;
    }
    log::debug!("multimode run: {steps} steps, dt = {dt:.4e}, norm drift {max_drift:.2e}");
    Ok(Trajectory {
        snapshots,
        steps,
        dt,
        max_norm_drift: max_drift,
    })
}

fn total_norm(ps: &Array2<C64>, a: &Array1<C64>, grid: &Grid1D) -> f64 {
    let dz = grid.dz();
    ps.iter().map(|v| v.norm_sqr()).sum::<f64>() * dz * dz
        + a.iter().map(|v| v.norm_sqr()).sum::<f64>() * dz
}

/// `F = |1 - <ref|phi>| / 2`, with `ref` the input advected freely to
/// `t_end`.
pub fn multimode_fidelity(ps_end: &FieldPS, params: &MultimodeParams, t_end: f64) -> f64 {
    let (zp, zs) = params.centres_at(t_end);
    let reference = gaussian_pair(&ps_end.grid, params.tau, zp, zs);
    0.5 * (C64::new(1.0, 0.0) - reference.inner(ps_end)).norm()
}

/// `arg(phi)` where `|phi| > floor * max|phi|`, `NaN` elsewhere.
pub fn phase_map(ps: &FieldPS, floor: f64) -> Result<Array2<f64>> {
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "phase floor must be positive, got {floor}"
        )));
    }
    let peak = ps.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cut = floor * peak;
    Ok(ps
        .values
        .mapv(|v| if v.norm() > cut { v.arg() } else { f64::NAN }))
}

/// Coarse scan followed by golden-section refinement of the first maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationScan {
    pub g_min: f64,
    pub g_max: f64,
    pub points: usize,
    pub refine_iterations: usize,
}

impl Default for CalibrationScan {
    fn default() -> Self {
        Self {
            g_min: 0.25,
            g_max: 4.0,
            points: 16,
            refine_iterations: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub g0: f64,
    pub fidelity: f64,
    /// Every `(g0, F)` evaluated, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Finds the coupling giving the first maximum of the fidelity.
pub fn calibrate_g0(
    params: &MultimodeParams,
    grid: &Grid1D,
    t_end: f64,
    settings: &Settings,
    scan: &CalibrationScan,
) -> Result<Calibration> {
    if scan.points < 3 || !(scan.g_max > scan.g_min) {
        return Err(Error::InvalidParameter(
            "calibration scan needs at least 3 points on an increasing range".into(),
        ));
    }
    let mut evaluations = Vec::new();
    let fidelity = |g: f64, evaluations: &mut Vec<(f64, f64)>| -> Result<f64> {
        let p = MultimodeParams {
            g0: g,
            ..params.clone()
        };
        let run = propagate_multimode(&p, grid, t_end, &[], settings)?;
        let f = multimode_fidelity(&run.last().ps, &p, t_end);
        log::info!("calibration: g0 = {g:.6}, F = {f:.6}");
        evaluations.push((g, f));
        Ok(f)
    };
    let step = (scan.g_max - scan.g_min) / (scan.points - 1) as f64;
    let gs: Vec<f64> = (0..scan.points)
        .map(|i| scan.g_min + step * i as f64)
        .collect();
    let mut fs = Vec::with_capacity(gs.len());
    let mut peak = None;
    for (i, &g) in gs.iter().enumerate() {
        fs.push(fidelity(g, &mut evaluations)?);
        if i >= 1 && fs[i] < fs[i - 1] {
            peak = Some(i - 1);
            break;
        }
    }
    let peak = peak.ok_or_else(|| {
        Error::Tolerance(format!(
            "fidelity still rising at g0 = {}; widen the scan",
            scan.g_max
        ))
    })?;
    let (mut lo, mut hi) = (gs[peak.saturating_sub(1)], gs[peak + 1]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = fidelity(x1, &mut evaluations)?;
    let mut f2 = fidelity(x2, &mut evaluations)?;
    for _ in 0..scan.refine_iterations {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = fidelity(x2, &mut evaluations)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = fidelity(x1, &mut evaluations)?;
        }
    }
    let (g0, f) = evaluations
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one evaluation");
    Ok(Calibration {
        g0,
        fidelity: f,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_grid() -> Grid1D {
        Grid1D::new(-6.0, 6.0, 64).unwrap()
    }

    fn small_params(g0: f64) -> MultimodeParams {
        MultimodeParams {
            g0,
            sigma: 0.4,
            v_a: 1.0,
            v_p: 1.0,
            v_s: 0.6,
            tau: 0.6,
            z_p0: -1.5,
            z_s0: 0.0,
            medium: [-3.0, 3.0],
            ramp: 0.25,
        }
    }

    fn noisy_fields(grid: &Grid1D, seed: u64) -> (FieldPS, FieldA) {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let n = grid.n();
        let ps = Array2::from_shape_fn((n, n), |_| C64::new(next(), next()));
        let a = Array1::from_shape_fn(n, |_| C64::new(next(), next()));
        (
            FieldPS {
                values: ps,
                grid: *grid,
            },
            FieldA {
                values: a,
                grid: *grid,
            },
        )
    }

    #[test]
    fn zero_coupling_is_pure_advection() {
        let grid = small_grid();
        let params = small_params(0.0);
        let (ps, a) = noisy_fields(&grid, 3);
        let (dps, da) = coupled_rhs(&ps, &a, &params).unwrap();
        let adv = Advection::new(&grid);
        let expect = adv.apply_2d(&ps.values, params.v_p, params.v_s);
        assert!(dps
            .iter()
            .zip(expect.iter())
            .all(|(x, y)| (x - y).norm() < 1e-14));
        let expect = adv.apply_1d(&a.values, params.v_a);
        assert!(da
            .iter()
            .zip(expect.iter())
            .all(|(x, y)| (x - y).norm() < 1e-14));
    }

    #[test]
    fn auxiliary_source_is_negative_imaginary() {
        let grid = small_grid();
        let params = small_params(1.0);
        let ps = gaussian_pair(&grid, params.tau, 0.0, 0.0);
        let a = FieldA::zeros(grid);
        let (_, da) = coupled_rhs(&ps, &a, &params).unwrap();
        for (i, v) in da.iter().enumerate() {
            assert!(v.re.abs() < 1e-15);
            let z = grid.z(i);
            if z > -2.0 && z < 2.0 {
                assert!(v.im < 0.0, "z = {z}: {v}");
            }
            if z < params.medium[0] - 10.0 * params.ramp
                || z > params.medium[1] + 10.0 * params.ramp
            {
                assert_eq!(*v, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn coupling_conserves_norm() {
        let grid = small_grid();
        let mut params = small_params(1.3);
        params.v_a = 1e-300;
        params.v_p = 1e-300;
        params.v_s = 1e-300;
        for seed in 0..4 {
            let (ps, a) = noisy_fields(&grid, seed);
            let (dps, da) = coupled_rhs(&ps, &a, &params).unwrap();
            let dz = grid.dz();
            let rate = 2.0
                * (ps
                    .values
                    .iter()
                    .zip(dps.iter())
                    .map(|(x, y)| (x.conj() * y).re)
                    .sum::<f64>()
                    * dz
                    * dz
                    + a.values
                        .iter()
                        .zip(da.iter())
                        .map(|(x, y)| (x.conj() * y).re)
                        .sum::<f64>()
                        * dz);
            assert!(rate.abs() < 1e-12, "seed {seed}: {rate}");
        }
    }

    #[test]
    fn assembled_coupling_is_anti_hermitian() {
        // Columns of the generator from unit inputs, in dz-weighted
        // orthonormal coordinates: u_ps = dz phi_ps, u_a = sqrt(dz) phi_a.
        let grid = small_grid();
        let params = small_params(1.0);
        let coupling = Coupling::new(&grid, params.sigma, (-3.0, 3.0), params.ramp);
        let n = grid.n();
        let dz = grid.dz();
        let scale = C64::new(0.0, -0.5 * params.g0);
        let mut to_pair = Array2::<C64>::zeros((n * n, n));
        for a in coupling.window() {
            let mut unit = Array1::zeros(n);
            unit[a] = C64::new(1.0 / dz.sqrt(), 0.0);
            let mut out = Array2::zeros((n, n));
            coupling.add_to_pair(&unit, scale, &mut out);
            for (k, v) in out.iter().enumerate() {
                to_pair[[k, a]] = v * dz;
            }
        }
        let mut worst: f64 = 0.0;
        for k in (0..n * n).step_by(5) {
            let mut unit = Array2::zeros((n, n));
            unit[[k / n, k % n]] = C64::new(1.0 / dz, 0.0);
            let mut out = Array1::zeros(n);
            coupling.add_to_aux(&unit, scale, &mut out);
            for a in 0..n {
                let to_aux = out[a] * dz.sqrt();
                worst = worst.max((to_aux + to_pair[[k, a]].conj()).norm());
            }
        }
        assert!(worst < 1e-12, "{worst}");
        assert!(to_pair.iter().any(|v| v.norm() > 1e-3));
        assert!(to_pair.iter().all(|v| v.re == 0.0));
    }

    #[test]
    fn coupling_is_local() {
        let grid = Grid1D::new(-8.0, 8.0, 128).unwrap();
        let mut params = small_params(2.0);
        params.sigma = 0.2;
        params.medium = [-1.0, 1.0];
        params.v_a = 1e-300;
        params.v_p = 1e-300;
        params.v_s = 1e-300;
        let (ps, a) = noisy_fields(&grid, 5);
        let (dps, da) = coupled_rhs(&ps, &a, &params).unwrap();
        let far = 8.0 * params.sigma;
        let dist = |z: f64| {
            if z < -1.0 {
                -1.0 - z
            } else if z > 1.0 {
                z - 1.0
            } else {
                0.0
            }
        };
        for p in 0..grid.n() {
            for s in 0..grid.n() {
                if dist(grid.z(p)).max(dist(grid.z(s))) > far {
                    assert!(dps[[p, s]].norm() < 1e-12);
                }
            }
            if dist(grid.z(p)) > far {
                assert!(da[p].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let params = small_params(1.0);
        let ps = FieldPS::zeros(small_grid());
        let a = FieldA::zeros(Grid1D::new(-6.0, 6.0, 128).unwrap());
        assert!(coupled_rhs(&ps, &a, &params).is_err());
    }

    #[test]
    fn cfl_violation_before_stepping() {
        let params = small_params(1.0);
        let settings = Settings {
            cfl: 0.6,
            ..Settings::default()
        };
        assert!(matches!(
            propagate_multimode(
                &params,
                &Grid1D::new(-8.0, 8.0, 64).unwrap(),
                1.0,
                &[],
                &settings
            ),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn free_advection_translates_pulses() {
        let grid = Grid1D::new(-6.0, 10.0, 128).unwrap();
        let mut params = small_params(0.0);
        params.z_p0 = -2.0;
        params.z_s0 = -1.0;
        let t_end = 3.0;
        let run = propagate_multimode(&params, &grid, t_end, &[1.0], &Settings::default()).unwrap();
        assert_eq!(run.snapshots.len(), 3);
        let end = &run.last().ps;
        let (zp, zs) = params.centres_at(t_end);
        let expect = gaussian_pair(&grid, params.tau, zp, zs);
        let diff: f64 = end
            .values
            .iter()
            .zip(expect.values.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = expect
            .values
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff / scale < 1e-4, "relative L2 error {}", diff / scale);
        assert_abs_diff_eq!(multimode_fidelity(end, &params, t_end), 0.0, epsilon = 1e-4);
    }

    #[test]
    fn fidelity_reference_cases() {
        let grid = Grid1D::new(-8.0, 8.0, 128).unwrap();
        let params = small_params(0.0);
        let t_end = 2.0;
        let (zp, zs) = params.centres_at(t_end);
        let shifted = gaussian_pair(&grid, params.tau, zp, zs);
        assert_abs_diff_eq!(
            multimode_fidelity(&shifted, &params, t_end),
            0.0,
            epsilon = 1e-12
        );
        let negated = FieldPS {
            values: shifted.values.mapv(|v| -v),
            grid,
        };
        assert_abs_diff_eq!(
            multimode_fidelity(&negated, &params, t_end),
            1.0,
            epsilon = 1e-12
        );
        let rotated = FieldPS {
            values: shifted.values.mapv(|v| v * C64::new(0.0, 1.0)),
            grid,
        };
        assert_abs_diff_eq!(
            multimode_fidelity(&rotated, &params, t_end),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn phase_map_of_gaussians() {
        let grid = small_grid();
        let g = gaussian_pair(&grid, 0.6, 0.0, 0.5);
        let map = phase_map(&g, 1e-3).unwrap();
        assert!(map.iter().any(|v| v.is_nan()));
        assert!(map.iter().filter(|v| !v.is_nan()).all(|v| *v == 0.0));
        let neg = FieldPS {
            values: g.values.mapv(|v| -v),
            grid,
        };
        let map = phase_map(&neg, 1e-3).unwrap();
        assert!(map
            .iter()
            .filter(|v| !v.is_nan())
            .all(|v| (v.abs() - std::f64::consts::PI).abs() < 1e-12));
        assert!(phase_map(&g, 0.0).is_err());
    }

    #[test]
    fn interacting_run_keeps_norm_and_symmetry() {
        let grid = Grid1D::new(-9.0, 7.0, 128).unwrap();
        let mut params = small_params(2.0);
        params.v_s = 1.0;
        params.z_p0 = -5.0;
        params.z_s0 = -5.0;
        params.medium = [-2.0, 0.0];
        let run = propagate_multimode(&params, &grid, 6.0, &[3.0], &Settings::default()).unwrap();
        assert!(run.max_norm_drift < 1e-6);
        for snap in &run.snapshots {
            let v = &snap.ps.values;
            let asym = v
                .indexed_iter()
                .map(|((p, s), x)| (x - v[[s, p]]).norm())
                .fold(0.0, f64::max);
            assert!(asym < 1e-10, "t = {}: {asym}", snap.t);
        }
        assert!(run.last().a.norm_sqr() > 1e-4);
    }
}
