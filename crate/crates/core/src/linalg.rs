//! Small dense complex linear-algebra helpers.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = Array2<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> Matrix {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn dagger(a: &ArrayView2<C64>) -> Matrix {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a.dot(b) - b.dot(a)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.zip_mut_with(b, |o, &y| *o = x * y);
    }
    out
}

pub fn trace(a: &Matrix) -> C64 {
    a.diag().sum()
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermiticity_defect(a: &Matrix) -> f64 {
    max_abs_diff(a, &dagger(&a.view()))
}

/// Maximum absolute column sum.
pub fn norm_one(a: &Matrix) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring around a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, where the
/// series converges to machine precision within ~20 terms.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=40 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if max_abs(&term) <= 1e-18 * max_abs(&result).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Checks positive semidefiniteness of a hermitian matrix by attempting a
/// Cholesky factorization of `a + shift * I`.
pub fn is_positive_semidefinite(a: &Matrix, shift: f64) -> bool {
    let n = a.nrows();
    let mut l: Matrix = Array2::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]].re + shift;
        for k in 0..j {
            diag -= l[[j, k]].norm_sqr();
        }
        if diag <= 0.0 {
            return false;
        }
        let d = diag.sqrt();
        l[[j, j]] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = s / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::zeros((4, 4));
        assert!(max_abs_diff(&expm(&z), &identity(4)) < 1e-15);
    }

    #[test]
    fn expm_of_pauli_rotation() {
        // exp(-i theta sigma_x) = cos(theta) I - i sin(theta) sigma_x
        let theta = 2.7_f64;
        let sx = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let u = expm(&sx.mapv(|z| -I * theta * z));
        assert_abs_diff_eq!(u[[0, 0]].re, theta.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[[0, 1]].im, -theta.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[[1, 1]].re, theta.cos(), epsilon = 1e-14);
    }

    #[test]
    fn expm_of_large_diagonal() {
        let d = Array2::from_diag(&ndarray::array![c(3.0, 1.0), c(-7.5, 0.0), c(0.0, 20.0)]);
        let e = expm(&d);
        for k in 0..3 {
            let expect = d[[k, k]].exp();
            assert!((e[[k, k]] - expect).norm() < 1e-12 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn kron_shapes_and_values() {
        let a = ndarray::array![[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]];
        let b = identity(3);
        let k = kron(&a, &b);
        assert_eq!(k.dim(), (6, 6));
        assert_eq!(k[[4, 1]], c(3.0, 0.0));
        assert_eq!(k[[4, 2]], c(0.0, 0.0));
    }

    #[test]
    fn psd_check() {
        let good = ndarray::array![[c(0.5, 0.0), c(0.0, 0.5)], [c(0.0, -0.5), c(0.5, 0.0)]];
        assert!(is_positive_semidefinite(&good, 1e-12));
        let bad = ndarray::array![[c(0.5, 0.0), c(0.9, 0.0)], [c(0.9, 0.0), c(0.5, 0.0)]];
        assert!(!is_positive_semidefinite(&bad, 1e-12));
    }
}
