//! Dense symmetric eigensolver (cyclic Jacobi).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense eigensolver.
pub const DENSE_LIMIT: usize = 1000;

const MAX_SWEEPS: usize = 50;
const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Smallest eigenvalue of a symmetric matrix with a unit (ℓ2) eigenvector.
///
/// The eigenvector sign is canonical: its first significant component is
/// positive. Callers that need `⟨v, u⟩ ≤ 0` for some `v` flip it themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda_min: f64,
    pub u: DVector<f64>,
}

impl EigenPair {
    /// `u` with its sign chosen so that `⟨v, u⟩ ≤ 0`.
    pub fn signed_against(&self, v: &DVector<f64>) -> DVector<f64> {
        if v.dot(&self.u) > 0.0 {
            -&self.u
        } else {
            self.u.clone()
        }
    }
}

/// Full spectrum, eigenvalues ascending, eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Verify that `h` is square, finite and symmetric up to rounding.
pub fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in 0..i {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// `1e-13 · ‖H‖_F` or 50 sweeps have been made.
pub fn symmetric_eigen(h: &DMatrix<f64>) -> Result<SymmetricEigen> {
    check_symmetric(h)?;
    let n = h.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge(n, DENSE_LIMIT));
    }
    // Work on the exactly symmetrized matrix.
    let mut a = (h + h.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let target = OFF_DIAGONAL_TOL * a.norm();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the lowest index first among equal eigenvalues.
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut u = v.column(i).into_owned();
        canonicalize_sign(&mut u);
        vectors.set_column(col, &u);
    }
    Ok(SymmetricEigen { values, vectors })
}

/// `λ_min[H]` and an associated unit eigenvector.
pub fn smallest_eigenpair(h: &DMatrix<f64>) -> Result<EigenPair> {
    let eig = symmetric_eigen(h)?;
    if h.nrows() == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    Ok(EigenPair {
        lambda_min: eig.values[0],
        u: eig.vectors.column(0).into_owned(),
    })
}

/// Spectral norm `max |λ_i|`.
pub fn spectral_norm(h: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_eigen(h)?;
    Ok(eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

fn canonicalize_sign(u: &mut DVector<f64>) {
    let scale = u.amax();
    if let Some(first) = u.iter().copied().find(|x| x.abs() > 1e-12 * scale) {
        if first < 0.0 {
            u.neg_mut();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn diagonal() {
        let h = DMatrix::from_diagonal(&dvector![2.0, -3.0]);
        let e = smallest_eigenpair(&h).unwrap();
        assert_eq!(e.lambda_min, -3.0);
        assert_eq!(e.u, dvector![0.0, 1.0]);
    }

    #[test]
    fn householder_reflection() {
        let w = dvector![5.0, 1.0];
        let h = DMatrix::identity(2, 2) - 2.0 * &w * w.transpose() / w.dot(&w);
        let e = smallest_eigenpair(&h).unwrap();
        assert_relative_eq!(e.lambda_min, -1.0, epsilon = 1e-14);
        assert_relative_eq!(e.u, w / 26f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn zero_matrix_gives_first_axis() {
        let e = smallest_eigenpair(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.lambda_min, 0.0);
        assert_eq!(e.u, dvector![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(smallest_eigenpair(&h), Err(Error::NotSymmetric(_))));
        let h = DMatrix::from_row_slice(2, 2, &[1.0, f64::INFINITY, f64::INFINITY, 1.0]);
        assert_eq!(smallest_eigenpair(&h), Err(Error::NonFinite));
    }

    #[test]
    fn signed_against_flips() {
        let e = EigenPair { lambda_min: -1.0, u: dvector![1.0, 0.0] };
        assert_eq!(e.signed_against(&dvector![2.0, 1.0]), dvector![-1.0, 0.0]);
        assert_eq!(e.signed_against(&dvector![-2.0, 1.0]), dvector![1.0, 0.0]);
        assert_eq!(e.signed_against(&dvector![0.0, 1.0]), dvector![1.0, 0.0]);
    }
}
