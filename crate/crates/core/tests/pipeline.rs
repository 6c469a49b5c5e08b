use std::f64::consts::PI;

use qnd_core::detection::{DetectionReport, DEFAULT_CASCADE_THRESHOLD};
use qnd_core::dynamics::{input_state, propagate, InteractionParams};
use qnd_core::hilbert::DEFAULT_EPS_TRUNC;
use qnd_core::multimode::{
    gaussian_input, multimode_fidelity, propagate_fields, propagate_multimode, Grid1D,
    MultimodeParams, Settings,
};
use qnd_core::C64;

fn report(alpha_sq: f64) -> DetectionReport {
    let params = InteractionParams::standard();
    let alpha = C64::new(alpha_sq.sqrt(), 0.0);
    let rho0 = input_state(alpha, 1, &params.space, DEFAULT_EPS_TRUNC).unwrap();
    let rho_t = propagate(&rho0, &params, 2.0 * PI, &[]).unwrap();
    DetectionReport::from_state(rho_t.final_state(), alpha, DEFAULT_CASCADE_THRESHOLD).unwrap()
}

#[test]
fn error_minimum_sits_near_the_figure_point() {
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let errors: Vec<f64> = grid.iter().map(|&a| report(a).p_err_numeric).collect();
    let (best, _) = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(
        (grid[best] - 0.6).abs() <= 0.1 + 1e-12,
        "minimum at {}",
        grid[best]
    );
    // Fidelity falls as the probe grows.
    let f_low = report(0.2).signal_fidelity;
    let f_high = report(1.0).signal_fidelity;
    assert!(f_low > f_high);
}

#[test]
fn weak_probe_needs_four_units() {
    let r = report(0.2);
    assert_eq!(r.cascade_n, Some(4));
    assert!(r.cascade_p_err.unwrap() < DEFAULT_CASCADE_THRESHOLD);
}

fn crossing() -> (MultimodeParams, Grid1D) {
    let params = MultimodeParams {
        g0: 2.0,
        sigma: 0.4,
        v_a: 1.0,
        v_p: 1.0,
        v_s: 0.6,
        tau: 0.6,
        z_p0: -6.0,
        z_s0: -3.5,
        medium: [-2.0, 2.0],
        // Resolved by several cells at this grid spacing.
        ramp: 0.5,
    };
    (params, Grid1D::new(-10.0, 10.0, 144).unwrap())
}

#[test]
fn halving_the_time_step_leaves_the_fidelity() {
    let (params, grid) = crossing();
    let coarse = Settings::default();
    let fine = Settings {
        cfl: coarse.cfl / 2.0,
        ..coarse
    };
    let t_end = 8.0;
    let a = propagate_multimode(&params, &grid, t_end, &[], &coarse).unwrap();
    let b = propagate_multimode(&params, &grid, t_end, &[], &fine).unwrap();
    assert_eq!(b.steps, 2 * a.steps);
    let fa = multimode_fidelity(&a.last().ps, &params, t_end);
    let fb = multimode_fidelity(&b.last().ps, &params, t_end);
    assert!(fa > 0.05, "coupling too weak to test: F = {fa}");
    assert!((fa - fb).abs() < 1e-4, "{fa} vs {fb}");
}

#[test]
fn relabelling_probe_and_signal_mirrors_the_field() {
    let (mut params, grid) = crossing();
    params.v_s = 1.0;
    params.z_s0 = params.z_p0 + 1.0;
    let (ps, a) = gaussian_input(&params, &grid).unwrap();
    let swapped = MultimodeParams {
        z_p0: params.z_s0,
        z_s0: params.z_p0,
        ..params.clone()
    };
    let (ps_swapped, a_swapped) = gaussian_input(&swapped, &grid).unwrap();
    let t_end = 7.0;
    let run = propagate_fields(ps, a, &params, t_end, &[], &Settings::default()).unwrap();
    let mirror = propagate_fields(
        ps_swapped,
        a_swapped,
        &swapped,
        t_end,
        &[],
        &Settings::default(),
    )
    .unwrap();
    let (x, y) = (&run.last().ps.values, &mirror.last().ps.values);
    let diff = x
        .indexed_iter()
        .map(|((p, s), v)| (v - y[[s, p]]).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
    assert!((run.last().a.values.clone() - &mirror.last().a.values)
        .iter()
        .all(|v| v.norm() < 1e-10));
}

#[test]
fn no_coupling_gives_no_fidelity() {
    let (mut params, grid) = crossing();
    params.g0 = 0.0;
    let run = propagate_multimode(&params, &grid, 9.0, &[], &Settings::default()).unwrap();
    assert!(multimode_fidelity(&run.last().ps, &params, 9.0) < 0.01);
    assert!(run.last().a.norm_sqr() == 0.0);
}
