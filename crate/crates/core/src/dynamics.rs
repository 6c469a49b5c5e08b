//! Propagation of the three-mode density operator along the medium.
//!
//! Distance plays the role of time: the state obeys
//! `d rho/dz = -i[H, rho] + sum_j (gamma_j/2)(2 a_j rho a_j^dag - {a_j^dag a_j, rho})`
//! with the pumped three-wave-mixing Hamiltonian
//! `H = (g/2) a_a a_p^dag a_s^dag + (g^*/2) a_a^dag a_p a_s`.
//!
//! Units are dimensionless with `g = 1`, so `z = 2 pi` is one full exchange
//! cycle of the `|1_p, 0_a, 1_s> <-> |0_p, 1_a, 0_s>` transition.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    self, coherent_state_eps, embed, fock_state, ladder_ops, partial_trace, DensityOperator, Mode,
    ModeSpace, Operator,
};
use crate::linalg::{Matrix, C64};

/// Loss rates per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gammas {
    pub probe: f64,
    pub auxiliary: f64,
    pub signal: f64,
}

impl Gammas {
    pub fn uniform(gamma: f64) -> Self {
        Self {
            probe: gamma,
            auxiliary: gamma,
            signal: gamma,
        }
    }

    pub fn zero() -> Self {
        Self::uniform(0.0)
    }

    fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Probe => self.probe,
            Mode::Auxiliary => self.auxiliary,
            Mode::Signal => self.signal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InteractionParams {
    pub g: C64,
    pub gammas: Gammas,
    pub space: ModeSpace,
}

impl InteractionParams {
    pub fn new(g: C64, gammas: Gammas, space: ModeSpace) -> Result<Self> {
        for mode in Mode::ALL {
            let rate = gammas.get(mode);
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "loss rate for {mode:?} must be finite and nonnegative, got {rate}"
                )));
            }
        }
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::InvalidParameter("coupling must be finite".into()));
        }
        if space.n_modes() != 3 {
            return Err(Error::InvalidParameter(
                "interaction needs the (probe, auxiliary, signal) space".into(),
            ));
        }
        Ok(Self { g, gammas, space })
    }

    /// `g = 1`, `gamma_j = 1e-3`, truncation (16, 2, 2).
    pub fn standard() -> Self {
        Self {
            g: C64::new(1.0, 0.0),
            gammas: Gammas::uniform(1e-3),
            space: ModeSpace::standard(16, 2, 2).expect("valid dims"),
        }
    }

    fn mode_ops(&self, mode: Mode) -> Result<(Operator, Operator)> {
        let dim = self.space.dims()[mode.index()];
        let (a, ad) = ladder_ops(dim)?;
        Ok((
            embed(&a, mode.index(), &self.space)?,
            embed(&ad, mode.index(), &self.space)?,
        ))
    }

    pub fn number_operator(&self, mode: Mode) -> Result<Operator> {
        let (a, ad) = self.mode_ops(mode)?;
        ad.compose(&a)
    }

    pub fn annihilation(&self, mode: Mode) -> Result<Operator> {
        Ok(self.mode_ops(mode)?.0)
    }
}

pub fn build_hamiltonian(params: &InteractionParams) -> Result<Operator> {
    let (ap, apd) = params.mode_ops(Mode::Probe)?;
    let (aa, aad) = params.mode_ops(Mode::Auxiliary)?;
    let (as_, asd) = params.mode_ops(Mode::Signal)?;
    let down = aa.compose(&apd)?.compose(&asd)?;
    let up = aad.compose(&ap)?.compose(&as_)?;
    let g = params.g;
    let matrix = down.matrix().mapv(|z| z * g / 2.0) + up.matrix().mapv(|z| z * g.conj() / 2.0);
    Operator::new(matrix, params.space.clone())
}

/// Compressed sparse row storage for the very sparse ladder-type operators.
#[derive(Debug, Clone)]
struct Sparse {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Sparse {
    fn from_dense(m: &Matrix) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in m.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            row_ptr,
            cols,
            vals,
        }
    }

    fn rows(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.row_ptr.len() - 1).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }
}

/// The Liouvillian in a form suited to repeated evaluation.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    dim: usize,
    /// `H - (i/2) sum_j gamma_j a_j^dag a_j`
    h_eff: Sparse,
    jumps: Vec<(f64, Sparse)>,
}

impl MasterEquation {
    pub fn new(params: &InteractionParams) -> Result<Self> {
        let h = build_hamiltonian(params)?;
        let mut h_eff = h.into_matrix();
        let mut jumps = Vec::new();
        for mode in Mode::ALL {
            let rate = params.gammas.get(mode);
            if rate == 0.0 {
                continue;
            }
            let (a, ad) = params.mode_ops(mode)?;
            let n = ad.compose(&a)?;
            h_eff = h_eff - n.matrix().mapv(|z| z * C64::new(0.0, rate / 2.0));
            jumps.push((rate, Sparse::from_dense(a.matrix())));
        }
        Ok(Self {
            dim: params.space.total(),
            h_eff: Sparse::from_dense(&h_eff),
            jumps,
        })
    }

    /// Writes `L(rho)` into `out`. Assumes `rho` is hermitian.
    pub fn apply(&self, rho: &Matrix, out: &mut Matrix) {
        let mut scratch = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        let rho = rho.as_standard_layout();
        let out_slice = out.as_slice_mut().expect("standard layout");
        self.apply_slices(
            rho.as_slice().expect("standard layout"),
            out_slice,
            &mut scratch,
        );
    }

    fn apply_slices(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let n = self.dim;
        let zero = C64::new(0.0, 0.0);
        // scratch = -i H_eff rho; the commutator part is scratch + scratch^dag.
        scratch.fill(zero);
        for i in 0..n {
            let dst = &mut scratch[i * n..(i + 1) * n];
            for k in self.h_eff.row_ptr[i]..self.h_eff.row_ptr[i + 1] {
                let v = self.h_eff.vals[k];
                let coeff = C64::new(v.im, -v.re);
                let src = &rho[self.h_eff.cols[k] * n..(self.h_eff.cols[k] + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += coeff * s;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = scratch[i * n + j] + scratch[j * n + i].conj();
            }
        }
        for (rate, l) in &self.jumps {
            // out += rate * L rho L^dag; each ladder row and column holds at
            // most one entry, so this is a sparse gather.
            for i in 0..n {
                for ki in l.row_ptr[i]..l.row_ptr[i + 1] {
                    let (ci, vi) = (l.cols[ki], l.vals[ki] * *rate);
                    for j in 0..n {
                        for kj in l.row_ptr[j]..l.row_ptr[j + 1] {
                            out[i * n + j] += vi * rho[ci * n + l.cols[kj]] * l.vals[kj].conj();
                        }
                    }
                }
            }
        }
    }
}

/// Right-hand side of the spatial master equation.
pub fn lindblad_rhs(rho: &DensityOperator, params: &InteractionParams) -> Result<Matrix> {
    if rho.space() != &params.space {
        return Err(Error::DimensionMismatch {
            expected: params.space.total(),
            found: rho.space().total(),
        });
    }
    let eq = MasterEquation::new(params)?;
    let mut out = Array2::zeros(rho.matrix().raw_dim());
    eq.apply(rho.matrix(), &mut out);
    Ok(out)
}

/// Mode occupations and the probe field amplitude at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub z: f64,
    pub n_probe: f64,
    pub n_auxiliary: f64,
    pub n_signal: f64,
    pub probe_amplitude: C64,
}

impl Observables {
    fn max_diff(&self, other: &Observables) -> f64 {
        [
            (self.n_probe - other.n_probe).abs(),
            (self.n_auxiliary - other.n_auxiliary).abs(),
            (self.n_signal - other.n_signal).abs(),
            (self.probe_amplitude - other.probe_amplitude).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Precomputed observable operators for one space.
struct Probes {
    numbers: [Vec<f64>; 3],
    probe_annihilation: Sparse,
}

impl Probes {
    fn new(params: &InteractionParams) -> Result<Self> {
        let diag = |mode| -> Result<Vec<f64>> {
            Ok(params
                .number_operator(mode)?
                .matrix()
                .diag()
                .iter()
                .map(|z| z.re)
                .collect())
        };
        Ok(Self {
            numbers: [
                diag(Mode::Probe)?,
                diag(Mode::Auxiliary)?,
                diag(Mode::Signal)?,
            ],
            probe_annihilation: Sparse::from_dense(params.annihilation(Mode::Probe)?.matrix()),
        })
    }

    fn measure(&self, z: f64, rho: &Matrix) -> Observables {
        let occ = |n: &Vec<f64>| n.iter().enumerate().map(|(i, w)| w * rho[[i, i]].re).sum();
        let amp = self
            .probe_annihilation
            .rows()
            .map(|(i, k, v)| v * rho[[k, i]])
            .sum();
        Observables {
            z,
            n_probe: occ(&self.numbers[0]),
            n_auxiliary: occ(&self.numbers[1]),
            n_signal: occ(&self.numbers[2]),
            probe_amplitude: amp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    /// Steps taken by the returned run.
    pub accepted: usize,
    /// Steps spent on coarser runs discarded by the refinement audit.
    pub rejected: usize,
    /// Nominal step size of the returned run.
    pub step: f64,
    /// Largest observable change between the returned run and the previous
    /// (twice coarser) one.
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub samples: Vec<(f64, DensityOperator)>,
    pub observables: Vec<Observables>,
    pub step_stats: StepStats,
}

impl PropagationResult {
    pub fn final_state(&self) -> &DensityOperator {
        &self.samples.last().expect("at least the input sample").1
    }
}

/// Step-size policy for [`propagate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    /// Starting resolution, in RK4 steps per `2 pi` of propagation.
    pub steps_per_cycle: usize,
    /// Required agreement of all observables under step halving.
    pub tolerance: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            steps_per_cycle: 4096,
            tolerance: 1e-8,
        }
    }
}

/// Propagates with the default [`StepControl`].
pub fn propagate(
    rho0: &DensityOperator,
    params: &InteractionParams,
    z_end: f64,
    sample_points: &[f64],
) -> Result<PropagationResult> {
    propagate_with(rho0, params, z_end, sample_points, &StepControl::default())
}

/// Fixed-step RK4 propagation to `z_end`, sampling at `sample_points`.
///
/// The step starts at `2 pi / steps_per_cycle` and is halved until two
/// successive runs agree on every reported observable within the tolerance;
/// the finer run is returned.
pub fn propagate_with(
    rho0: &DensityOperator,
    params: &InteractionParams,
    z_end: f64,
    sample_points: &[f64],
    control: &StepControl,
) -> Result<PropagationResult> {
    let points = sample_grid(z_end, sample_points)?;
    if rho0.space() != &params.space {
        return Err(Error::DimensionMismatch {
            expected: params.space.total(),
            found: rho0.space().total(),
        });
    }
    if control.steps_per_cycle == 0 {
        return Err(Error::InvalidParameter(
            "steps_per_cycle must be positive".into(),
        ));
    }
    let eq = MasterEquation::new(params)?;
    let probes = Probes::new(params)?;

    let mut steps = control.steps_per_cycle;
    let mut previous = integrate(&eq, &probes, rho0, &points, 2.0 * PI / steps as f64);
    let mut rejected = 0;
    loop {
        let h = PI / steps as f64;
        if z_end > 0.0 && h < 1e-12 * z_end {
            return Err(Error::Stiffness { h });
        }
        let finer = integrate(&eq, &probes, rho0, &points, h);
        let diff = previous
            .observables
            .iter()
            .zip(&finer.observables)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max);
        if diff < control.tolerance || z_end == 0.0 {
            let result = finer.into_result(rho0, rejected, h, diff)?;
            for (_, rho) in &result.samples {
                rho.validate(1.0 - rho0.tail() - 1e-9)?;
            }
            return Ok(result);
        }
        rejected += previous.steps;
        previous = finer;
        steps *= 2;
    }
}

/// One propagation pass at nominal step `h`, without refinement.
pub fn propagate_fixed(
    rho0: &DensityOperator,
    params: &InteractionParams,
    z_end: f64,
    sample_points: &[f64],
    h: f64,
) -> Result<PropagationResult> {
    let points = sample_grid(z_end, sample_points)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }
    let eq = MasterEquation::new(params)?;
    let probes = Probes::new(params)?;
    integrate(&eq, &probes, rho0, &points, h).into_result(rho0, 0, h, f64::NAN)
}

fn sample_grid(z_end: f64, sample_points: &[f64]) -> Result<Vec<f64>> {
    if !(z_end >= 0.0 && z_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "propagation length must be finite and nonnegative, got {z_end}"
        )));
    }
    if let Some(z) = sample_points.iter().find(|&&z| !(0.0..=z_end).contains(&z)) {
        return Err(Error::InvalidParameter(format!(
            "sample point {z} outside [0, {z_end}]"
        )));
    }
    let mut points: Vec<f64> = sample_points.to_vec();
    points.push(0.0);
    points.push(z_end);
    points.sort_by(f64::total_cmp);
    points.dedup();
    Ok(points)
}

struct Pass {
    states: Vec<Matrix>,
    observables: Vec<Observables>,
    steps: usize,
}

impl Pass {
    fn into_result(
        self,
        rho0: &DensityOperator,
        rejected: usize,
        h: f64,
        err: f64,
    ) -> Result<PropagationResult> {
        let samples = self
            .observables
            .iter()
            .zip(self.states)
            .map(|(o, m)| {
                Ok((
                    o.z,
                    DensityOperator::new(m, rho0.space().clone(), rho0.tail())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PropagationResult {
            samples,
            observables: self.observables,
            step_stats: StepStats {
                accepted: self.steps,
                rejected,
                step: h,
                max_error_estimate: err,
            },
        })
    }
}

fn integrate(
    eq: &MasterEquation,
    probes: &Probes,
    rho0: &DensityOperator,
    points: &[f64],
    h_nominal: f64,
) -> Pass {
    let n = eq.dim;
    let zero = C64::new(0.0, 0.0);
    let rho0 = rho0.matrix().as_standard_layout().into_owned();
    let mut rho: Vec<C64> = rho0.as_slice().expect("standard layout").to_vec();
    let mut stage = vec![zero; n * n];
    let mut scratch = vec![zero; n * n];
    let mut k = [
        vec![zero; n * n],
        vec![zero; n * n],
        vec![zero; n * n],
        vec![zero; n * n],
    ];
    let to_matrix = |v: &[C64]| Array2::from_shape_vec((n, n), v.to_vec()).expect("square buffer");
    let mut states = vec![rho0.clone()];
    let mut observables = vec![probes.measure(0.0, &rho0)];
    let mut steps = 0;
    for pair in points.windows(2) {
        let (z0, z1) = (pair[0], pair[1]);
        let count = ((z1 - z0) / h_nominal).ceil().max(1.0) as usize;
        let h = (z1 - z0) / count as f64;
        for _ in 0..count {
            let [k1, k2, k3, k4] = &mut k;
            eq.apply_slices(&rho, k1, &mut scratch);
            for ((s, r), d) in stage.iter_mut().zip(&rho).zip(k1.iter()) {
                *s = r + d * (h / 2.0);
            }
            eq.apply_slices(&stage, k2, &mut scratch);
            for ((s, r), d) in stage.iter_mut().zip(&rho).zip(k2.iter()) {
                *s = r + d * (h / 2.0);
            }
            eq.apply_slices(&stage, k3, &mut scratch);
            for ((s, r), d) in stage.iter_mut().zip(&rho).zip(k3.iter()) {
                *s = r + d * h;
            }
            eq.apply_slices(&stage, k4, &mut scratch);
            for i in 0..n * n {
                rho[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
        }
        steps += count;
        let snapshot = to_matrix(&rho);
        observables.push(probes.measure(z1, &snapshot));
        states.push(snapshot);
    }
    Pass {
        states,
        observables,
        steps,
    }
}

/// `|alpha_p>_p |0>_a |n_s>_s` as a density operator.
pub fn input_state(
    alpha_p: C64,
    signal_photons: usize,
    space: &ModeSpace,
    eps_trunc: f64,
) -> Result<DensityOperator> {
    let dims = space.dims();
    if dims.len() != 3 {
        return Err(Error::InvalidParameter(
            "input state needs three modes".into(),
        ));
    }
    let probe = coherent_state_eps(alpha_p, dims[0], eps_trunc)?;
    let aux = fock_state(0, dims[1])?;
    let signal = fock_state(signal_photons, dims[2])?;
    Ok(probe.tensor(&aux)?.tensor(&signal)?.projector())
}

/// `<-alpha| Tr_{a,s}[rho] |-alpha>`: overlap of the transmitted probe with
/// the phase-flipped coherent state.
pub fn probe_overlap(rho: &DensityOperator, alpha: C64) -> Result<f64> {
    let probe = if rho.space().n_modes() == 1 {
        rho.clone()
    } else {
        partial_trace(rho, &[Mode::Probe.index()])?
    };
    let dim = probe.space().dims()[0];
    let flipped = coherent_state_eps(-alpha, dim, 1.0)?;
    let v = flipped.amplitudes();
    let m = probe.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            acc += v[i].conj() * m[[i, j]] * v[j];
        }
    }
    Ok(acc.re)
}

/// Reduced state of one mode of a three-mode density operator.
pub fn reduce(rho: &DensityOperator, mode: Mode) -> Result<DensityOperator> {
    hilbert::partial_trace(rho, &[mode.index()])
}
