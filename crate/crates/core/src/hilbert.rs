//! Truncated Fock-space operator and state algebra.
//!
//! Every multi-mode object lives on a [`ModeSpace`], an ordered list of
//! truncation dimensions. The three-mode space is always ordered
//! (probe, auxiliary, signal) and the first mode is the most significant
//! index of the tensor product.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, C64};

/// Default bound on the Fock-space tail discarded by state constructors.
pub const DEFAULT_EPS_TRUNC: f64 = 1e-10;

/// The three interacting fields, in tensor-product order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Probe,
    Auxiliary,
    Signal,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Probe, Mode::Auxiliary, Mode::Signal];

    pub fn index(self) -> usize {
        match self {
            Mode::Probe => 0,
            Mode::Auxiliary => 1,
            Mode::Signal => 2,
        }
    }
}

/// Ordered truncation dimensions of one to three modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpace {
    dims: Vec<usize>,
}

impl ModeSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "a mode space holds 1 to 3 modes, got {}",
                dims.len()
            )));
        }
        if let Some(&dim) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension { dim });
        }
        Ok(Self {
            dims: dims.to_vec(),
        })
    }

    /// The (probe, auxiliary, signal) space.
    pub fn standard(probe: usize, auxiliary: usize, signal: usize) -> Result<Self> {
        Self::new(&[probe, auxiliary, signal])
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(&[dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Space spanned by the modes at `keep` (indices into this space).
    pub fn subspace(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.normalize_keep(keep)?;
        Self::new(&keep.iter().map(|&k| self.dims[k]).collect::<Vec<_>>())
    }

    /// Decomposes a flat basis index into per-mode Fock numbers.
    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn flatten(&self, fock: &[usize]) -> usize {
        fock.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&n, &d)| acc * d + n)
    }

    fn normalize_keep(&self, keep: &[usize]) -> Result<Vec<usize>> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&index) = keep.iter().find(|&&k| k >= self.dims.len()) {
            return Err(Error::ModeIndex {
                index,
                modes: self.dims.len(),
            });
        }
        Ok(keep)
    }
}

/// A dense operator on a [`ModeSpace`].
#[derive(Debug, Clone)]
pub struct Operator {
    matrix: Matrix,
    space: ModeSpace,
}

impl Operator {
    pub fn new(matrix: Matrix, space: ModeSpace) -> Result<Self> {
        check_square(&matrix, space.total())?;
        Ok(Self { matrix, space })
    }

    pub fn identity(space: &ModeSpace) -> Self {
        Self {
            matrix: linalg::identity(space.total()),
            space: space.clone(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: linalg::dagger(&self.matrix.view()),
            space: self.space.clone(),
        }
    }

    pub fn compose(&self, other: &Operator) -> Result<Self> {
        self.same_space(&other.space)?;
        Ok(Self {
            matrix: self.matrix.dot(&other.matrix),
            space: self.space.clone(),
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.matrix) <= tol
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.same_space(&psi.space)?;
        Ok(StateVector {
            amplitudes: self.matrix.dot(&psi.amplitudes),
            space: self.space.clone(),
            tail: psi.tail,
        })
    }

    fn same_space(&self, other: &ModeSpace) -> Result<()> {
        if &self.space != other {
            return Err(Error::DimensionMismatch {
                expected: self.space.total(),
                found: other.total(),
            });
        }
        Ok(())
    }
}

/// A ket with the truncation tail its constructor discarded.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Array1<C64>,
    space: ModeSpace,
    tail: f64,
}

impl StateVector {
    pub fn new(amplitudes: Array1<C64>, space: ModeSpace, tail: f64) -> Result<Self> {
        if amplitudes.len() != space.total() {
            return Err(Error::DimensionMismatch {
                expected: space.total(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            amplitudes,
            space,
            tail,
        })
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    /// Probability weight discarded by truncation.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Tensor product, `self` taking the more significant position.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut dims = self.space.dims.clone();
        dims.extend_from_slice(&other.space.dims);
        let space = ModeSpace::new(&dims)?;
        let n = other.amplitudes.len();
        let mut amplitudes = Array1::zeros(space.total());
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[i * n + j] = a * b;
            }
        }
        Ok(StateVector {
            amplitudes,
            space,
            tail: 1.0 - (1.0 - self.tail) * (1.0 - other.tail),
        })
    }

    pub fn projector(&self) -> DensityOperator {
        let a = &self.amplitudes;
        let matrix = Array2::from_shape_fn((a.len(), a.len()), |(i, j)| a[i] * a[j].conj());
        DensityOperator {
            matrix,
            space: self.space.clone(),
            tail: self.tail,
        }
    }
}

/// A (possibly sub-normalized) density matrix on a [`ModeSpace`].
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: Matrix,
    space: ModeSpace,
    tail: f64,
}

impl DensityOperator {
    pub fn new(matrix: Matrix, space: ModeSpace, tail: f64) -> Result<Self> {
        check_square(&matrix, space.total())?;
        Ok(Self {
            matrix,
            space,
            tail,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for hermitian rho
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != &self.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.total(),
                found: op.space().total(),
            });
        }
        // Tr(A rho) = sum_ij A_ij rho_ji
        let m = &self.matrix;
        Ok(op
            .matrix()
            .indexed_iter()
            .map(|((i, j), a)| a * m[[j, i]])
            .sum())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        linalg::is_positive_semidefinite(&self.matrix, tol)
    }

    /// Checks hermiticity (1e-10), trace in `[trace_floor, 1 + 1e-9]` and
    /// eigenvalues >= -1e-9.
    pub fn validate(&self, trace_floor: f64) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::Tolerance(format!(
                "density operator not hermitian (defect {herm:.3e})"
            )));
        }
        let tr = self.trace();
        if tr < trace_floor || tr > 1.0 + 1e-9 {
            return Err(Error::Tolerance(format!(
                "density operator trace {tr} outside [{trace_floor}, 1 + 1e-9]"
            )));
        }
        if !self.is_positive(1e-9) {
            return Err(Error::Tolerance(
                "density operator has an eigenvalue below -1e-9".into(),
            ));
        }
        Ok(())
    }

    /// Population of Fock level `n` of a single-mode state.
    pub fn population(&self, n: usize) -> Result<f64> {
        self.require_single_mode()?;
        if n >= self.matrix.nrows() {
            return Ok(0.0);
        }
        Ok(self.matrix[[n, n]].re)
    }

    /// Weight in the top `levels` Fock levels of a single-mode state.
    pub fn top_level_weight(&self, levels: usize) -> Result<f64> {
        self.require_single_mode()?;
        let d = self.matrix.nrows();
        Ok((d.saturating_sub(levels)..d)
            .map(|n| self.matrix[[n, n]].re)
            .sum())
    }

    /// Tensor product of several states, earlier entries more significant.
    pub fn product(parts: &[&DensityOperator]) -> Result<DensityOperator> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty tensor product".into()))?;
        let mut acc = (*first).clone();
        for part in rest {
            let mut dims = acc.space.dims.clone();
            dims.extend_from_slice(&part.space.dims);
            acc = DensityOperator {
                matrix: linalg::kron(&acc.matrix, &part.matrix),
                space: ModeSpace::new(&dims)?,
                tail: 1.0 - (1.0 - acc.tail) * (1.0 - part.tail),
            };
        }
        Ok(acc)
    }

    pub fn require_single_mode(&self) -> Result<()> {
        if self.space.n_modes() != 1 {
            return Err(Error::NotSingleMode {
                modes: self.space.n_modes(),
            });
        }
        Ok(())
    }
}

fn check_square(m: &Matrix, n: usize) -> Result<()> {
    let (r, c) = m.dim();
    if r != n || c != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if r != n { r } else { c },
        });
    }
    Ok(())
}

/// Annihilation and creation operators of one mode truncated at `dim` levels.
pub fn ladder_ops(dim: usize) -> Result<(Operator, Operator)> {
    let space = ModeSpace::single(dim)?;
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let annihilation = Operator::new(a, space)?;
    let creation = annihilation.dagger();
    Ok((annihilation, creation))
}

pub fn number_op(dim: usize) -> Result<Operator> {
    let space = ModeSpace::single(dim)?;
    let diag = Array1::from_shape_fn(dim, |n| C64::new(n as f64, 0.0));
    Operator::new(Array2::from_diag(&diag), space)
}

/// Lifts a single-mode operator onto `space`, acting as the identity on the
/// other modes.
pub fn embed(op: &Operator, mode_index: usize, space: &ModeSpace) -> Result<Operator> {
    let dims = space.dims();
    if mode_index >= dims.len() {
        return Err(Error::ModeIndex {
            index: mode_index,
            modes: dims.len(),
        });
    }
    let d = op.matrix().nrows();
    if op.space().n_modes() != 1 || d != dims[mode_index] {
        return Err(Error::DimensionMismatch {
            expected: dims[mode_index],
            found: d,
        });
    }
    let mut matrix: Option<Matrix> = None;
    for (k, &dk) in dims.iter().enumerate() {
        let factor = if k == mode_index {
            op.matrix().clone()
        } else {
            linalg::identity(dk)
        };
        matrix = Some(match matrix {
            None => factor,
            Some(m) => linalg::kron(&m, &factor),
        });
    }
    Operator::new(matrix.expect("at least one mode"), space.clone())
}

/// Probability mass of a Poisson distribution with mean `mean` at `n >= dim`.
pub fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // log p_n = -mean + n ln(mean) - ln n!
    let mut ln_fact = 0.0;
    for k in 1..=dim {
        ln_fact += (k as f64).ln();
    }
    let mut p = (-mean + dim as f64 * mean.ln() - ln_fact).exp();
    let mut tail = 0.0;
    let mut n = dim;
    while p > 0.0 {
        tail += p;
        n += 1;
        p *= mean / n as f64;
        if p < tail * 1e-18 && n as f64 > mean {
            break;
        }
    }
    tail
}

/// Smallest truncation whose coherent-state tail is below `eps`.
pub fn required_dim(mean: f64, eps: f64) -> usize {
    let mut dim = 2;
    while poisson_tail(mean, dim) >= eps {
        dim += 1;
    }
    dim
}

pub fn fock_state(n: usize, dim: usize) -> Result<StateVector> {
    let space = ModeSpace::single(dim)?;
    if n >= dim {
        return Err(Error::InvalidParameter(format!(
            "Fock level {n} outside a {dim}-level truncation"
        )));
    }
    let mut amplitudes = Array1::zeros(dim);
    amplitudes[n] = C64::new(1.0, 0.0);
    StateVector::new(amplitudes, space, 0.0)
}

/// Truncated coherent state with the default tail bound.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<StateVector> {
    coherent_state_eps(alpha, dim, DEFAULT_EPS_TRUNC)
}

/// Truncated coherent state `|alpha>`; fails if more than `eps` of its
/// Poisson weight falls outside the first `dim` levels.
pub fn coherent_state_eps(alpha: C64, dim: usize, eps: f64) -> Result<StateVector> {
    let space = ModeSpace::single(dim)?;
    let mean = alpha.norm_sqr();
    let tail = poisson_tail(mean, dim);
    if tail >= eps {
        return Err(Error::TruncationTooSmall {
            mean,
            tail,
            eps,
            required: required_dim(mean, eps),
        });
    }
    let mut amplitudes = Array1::zeros(dim);
    let mut c = C64::new((-mean / 2.0).exp(), 0.0);
    amplitudes[0] = c;
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        amplitudes[n] = c;
    }
    StateVector::new(amplitudes, space, tail)
}

/// Displacement operator `exp(alpha a^dag - alpha^* a)` in the truncated space.
pub fn displacement(alpha: C64, dim: usize) -> Result<Operator> {
    let (a, ad) = ladder_ops(dim)?;
    let generator = ad.matrix().mapv(|z| alpha * z) - a.matrix().mapv(|z| alpha.conj() * z);
    Operator::new(linalg::expm(&generator), ModeSpace::single(dim)?)
}

/// Exact matrix elements `<n|D(beta)|m>` for `n, m < dim`.
///
/// Uses the normal-ordered form `D = e^{-|beta|^2/2} e^{beta a^dag} e^{-beta^* a}`:
/// both factors are triangular, so the leading `dim x dim` block of the
/// product involves no truncated intermediate states and is free of the
/// edge error of [`displacement`].
pub fn displacement_block(beta: C64, dim: usize) -> Matrix {
    // raise[n, k] = <n| e^{beta a^dag} |k> = beta^{n-k} sqrt(n!/k!) / (n-k)!
    let mut raise: Matrix = Array2::zeros((dim, dim));
    for k in 0..dim {
        let mut v = C64::new(1.0, 0.0);
        raise[[k, k]] = v;
        for n in (k + 1)..dim {
            v = v * beta * (n as f64).sqrt() / (n - k) as f64;
            raise[[n, k]] = v;
        }
    }
    // <k| e^{-beta^* a} |m> = <m| e^{-beta a^dag} |k>^*
    let lower = Array2::from_shape_fn((dim, dim), |(k, m)| {
        if k > m {
            C64::new(0.0, 0.0)
        } else {
            let steps = (m - k) as i32;
            raise[[m, k]].conj() * (-1f64).powi(steps)
        }
    });
    raise
        .dot(&lower)
        .mapv(|z| z * (-beta.norm_sqr() / 2.0).exp())
}

/// Traces out every mode not listed in `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let space = rho.space();
    let keep = space.normalize_keep(keep)?;
    let reduced_space = space.subspace(&keep)?;
    let n = space.total();
    let mut out: Matrix = Array2::zeros((reduced_space.total(), reduced_space.total()));
    let labels: Vec<Vec<usize>> = (0..n).map(|i| space.unflatten(i)).collect();
    let traced: Vec<usize> = (0..space.n_modes()).filter(|k| !keep.contains(k)).collect();
    let reduced_index = |fock: &[usize]| {
        keep.iter()
            .zip(reduced_space.dims())
            .fold(0, |acc, (&k, &d)| acc * d + fock[k])
    };
    for i in 0..n {
        for j in 0..n {
            if traced.iter().all(|&t| labels[i][t] == labels[j][t]) {
                out[[reduced_index(&labels[i]), reduced_index(&labels[j])]] += rho.matrix[[i, j]];
            }
        }
    }
    DensityOperator::new(out, reduced_space, rho.tail)
}
