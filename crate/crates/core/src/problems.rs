//! Built-in objectives, a finite-difference derivative checker, random
//! model instances and the brute-force grid oracle.

use std::f64::consts::PI;

use nalgebra::{dmatrix, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FnObjective, Problem, RegularizedQuadratic};
use crate::norms::Norm;
use crate::rqmin::psi_omega;

pub const BUILTIN_NAMES: [&str; 5] = [
    "quadratic",
    "rosenbrock",
    "sixhumpcamel",
    "rastrigin2d",
    "regquad_as_objective",
];

/// Global minimum of the six-hump camel function.
pub const SIXHUMPCAMEL_F_LOW: f64 = -1.031_628_453_489_877;

/// Householder reflection `I − 2uuᵀ/⟨u,u⟩`.
pub fn householder(u: &DVector<f64>) -> Result<DMatrix<f64>> {
    let uu = u.dot(u);
    if uu == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = u.len();
    Ok(DMatrix::identity(n, n) - u * u.transpose() * (2.0 / uu))
}

fn fixed_dim(name: &str, n: usize, want: usize) -> Result<()> {
    if n != want {
        return Err(Error::UnsupportedDimension { name: name.into(), n });
    }
    Ok(())
}

/// Look up a built-in problem by name.
pub fn builtin_problem(name: &str, n: usize) -> Result<Problem> {
    match name {
        "quadratic" => {
            if n == 0 {
                return Err(Error::UnsupportedDimension { name: name.into(), n });
            }
            let obj = FnObjective::new(
                n,
                |x| 0.5 * x.dot(x),
                |x| x.clone(),
                move |_| DMatrix::identity(n, n),
            );
            Ok(Problem::new(name, obj).with_f_low(0.0).with_lipschitz(0.0, 0.0))
        }
        "rosenbrock" => {
            if n < 2 {
                return Err(Error::UnsupportedDimension { name: name.into(), n });
            }
            Ok(Problem::new(name, FnObjective::new(n, rosenbrock_f, rosenbrock_g, rosenbrock_h)).with_f_low(0.0))
        }
        "sixhumpcamel" => {
            fixed_dim(name, n, 2)?;
            let obj = FnObjective::new(
                2,
                |x| {
                    let (a, b) = (x[0], x[1]);
                    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
                },
                |x| {
                    let (a, b) = (x[0], x[1]);
                    DVector::from_vec(vec![
                        8.0 * a - 8.4 * a.powi(3) + 2.0 * a.powi(5) + b,
                        a - 8.0 * b + 16.0 * b.powi(3),
                    ])
                },
                |x| {
                    let (a, b) = (x[0], x[1]);
                    dmatrix![8.0 - 25.2 * a * a + 10.0 * a.powi(4), 1.0; 1.0, -8.0 + 48.0 * b * b]
                },
            );
            Ok(Problem::new(name, obj).with_f_low(SIXHUMPCAMEL_F_LOW))
        }
        "rastrigin2d" => {
            fixed_dim(name, n, 2)?;
            let obj = FnObjective::new(
                2,
                |x| 20.0 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>(),
                |x| x.map(|v| 2.0 * v + 20.0 * PI * (2.0 * PI * v).sin()),
                |x| DMatrix::from_diagonal(&x.map(|v| 2.0 + 40.0 * PI * PI * (2.0 * PI * v).cos())),
            );
            Ok(Problem::new(name, obj).with_f_low(0.0))
        }
        "regquad_as_objective" => {
            // The smooth quadratic part of the reflection instance: its Hessian is
            // constant with λ_min = −1, so no point is second-order critical.
            fixed_dim(name, n, 2)?;
            let h = householder(&DVector::from_vec(vec![5.0, 1.0]))?;
            let (h1, h2) = (h.clone(), h.clone());
            let obj = FnObjective::new(2, move |x| 0.5 * x.dot(&(&h1 * x)), move |x| &h2 * x, move |_| h.clone());
            Ok(Problem::new(name, obj).with_lipschitz(0.0, 0.0))
        }
        other => Err(Error::UnknownProblem(other.into())),
    }
}

fn rosenbrock_f(x: &DVector<f64>) -> f64 {
    x.as_slice()
        .windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

fn rosenbrock_g(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let t = x[i + 1] - x[i] * x[i];
        g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
        g[i + 1] += 200.0 * t;
    }
    g
}

fn rosenbrock_h(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
        h[(i, i + 1)] -= 400.0 * x[i];
        h[(i + 1, i)] -= 400.0 * x[i];
        h[(i + 1, i + 1)] += 200.0;
    }
    h
}

/// Outcome of [`check_derivatives`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub passed: bool,
    pub tolerance: f64,
    pub grad_error: f64,
    pub hess_error: f64,
    /// The worst offending entries, human readable.
    pub worst: Vec<String>,
}

/// Compare the analytic gradient and Hessian with central differences.
///
/// Errors are relative, `|a − fd| / (1 + |fd|)`, against
/// `max(1e−5, 100·h²)`. Evaluations are not counted.
pub fn check_derivatives(problem: &Problem, x: &DVector<f64>, h: f64) -> Result<DerivativeReport> {
    if !(h > 0.0) {
        return Err(Error::Precondition("step must be positive".into()));
    }
    let n = problem.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let obj = problem.objective();
    let tol = (100.0 * h * h).max(1e-5);
    let rel = |a: f64, fd: f64| (a - fd).abs() / (1.0 + fd.abs());

    let g = obj.gradient(x);
    let hess = obj.hessian(x);
    let mut entries: Vec<(f64, String)> = Vec::new();
    let (mut grad_error, mut hess_error) = (0.0f64, 0.0f64);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
        let e = rel(g[i], fd);
        grad_error = grad_error.max(e);
        entries.push((e, format!("g[{i}]: analytic {} vs fd {fd}", g[i])));

        let col = (obj.gradient(&xp) - obj.gradient(&xm)) / (2.0 * h);
        for j in 0..n {
            let e = rel(hess[(j, i)], col[j]);
            hess_error = hess_error.max(e);
            entries.push((e, format!("H[{j},{i}]: analytic {} vs fd {}", hess[(j, i)], col[j])));
        }
    }
    let passed = grad_error <= tol && hess_error <= tol;
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
    let worst = entries
        .into_iter()
        .take_while(|(e, _)| *e > tol)
        .take(5)
        .map(|(_, s)| s)
        .collect();
    Ok(DerivativeReport { passed, tolerance: tol, grad_error, hess_error, worst })
}

/// A random model with `g`, `H` entries uniform in `[−1, 1]` and `σ` uniform in
/// `sigma_range`. With `indefinite` the Hessian is shifted, if needed, so that
/// `λ_min[H] ≤ −½`.
pub fn random_regularized_quadratic<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    norm: Norm,
    sigma_range: (f64, f64),
    indefinite: bool,
) -> Result<RegularizedQuadratic> {
    let g = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let mut h = (&a + a.transpose()) * 0.5;
    if indefinite {
        let lambda = crate::linalg::smallest_eigenpair(&h)?.lambda_min;
        if lambda > -0.5 {
            for i in 0..n {
                h[(i, i)] -= lambda + 0.5;
            }
        }
    }
    let sigma = rng.gen_range(sigma_range.0..=sigma_range.1);
    RegularizedQuadratic::new(0.0, g, h, sigma, norm)
}

/// Best vertex of a brute-force scan and its necessary-condition residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOracleResult {
    pub s_star: DVector<f64>,
    pub m_star: f64,
    pub grid_step: f64,
    /// Half-width of the scanned square.
    pub radius: f64,
    /// `|‖g + Hs*‖_* − ½σ‖s*‖²|`.
    pub noc1_residual: f64,
    /// `λ_min + ω(s*)σ‖s*‖`.
    pub noc2_residual: f64,
}

/// Scan `[−R, R]²` with `R = κ_{s,upp}` on a `resolution × resolution` grid.
///
/// Rows are scanned in parallel; ties are broken by the lowest row then
/// column index, so the result is deterministic. An odd resolution puts
/// the origin on the grid.
pub fn grid_oracle(q: &RegularizedQuadratic, resolution: usize) -> Result<GridOracleResult> {
    if q.dim() != 2 {
        return Err(Error::UnsupportedDimension { name: "grid_oracle".into(), n: q.dim() });
    }
    if resolution < 101 {
        return Err(Error::Precondition("grid resolution must be at least 101".into()));
    }
    let radius = q.radius_upper();
    let last = (resolution - 1) as f64;
    let coord = |i: usize| radius * (2.0 * i as f64 - last) / last;

    let (m_star, i, j) = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, i, 0);
            for j in 0..resolution {
                let m = q.value(&DVector::from_vec(vec![coord(i), coord(j)]));
                if m < best.0 {
                    best = (m, i, j);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    if !m_star.is_finite() {
        return Err(Error::NonFinite);
    }
    let s_star = DVector::from_vec(vec![coord(i), coord(j)]);
    let (noc1_residual, noc2_residual) = noc_residuals(q, &s_star)?;
    Ok(GridOracleResult {
        s_star,
        m_star,
        grid_step: 2.0 * radius / last,
        radius,
        noc1_residual,
        noc2_residual,
    })
}

/// First- and second-order necessary-condition residuals at `s`, with the
/// eigenvector signed so that `⟨g + Hs, u⟩ ≤ 0`.
pub fn noc_residuals(q: &RegularizedQuadratic, s: &DVector<f64>) -> Result<(f64, f64)> {
    let r = q.norm().value(s);
    let gs = q.quadratic_gradient(s);
    let noc1 = (q.norm().dual_norm(&gs) - 0.5 * q.sigma() * r * r).abs();
    let eig = q.eigenpair()?;
    let om = psi_omega(q, s, &eig.signed_against(&gs))?;
    Ok((noc1, eig.lambda_min + om.omega * q.sigma() * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn rosenbrock_minimizer() {
        let p = builtin_problem("rosenbrock", 2).unwrap();
        let x = dvector![1.0, 1.0];
        assert_eq!(p.objective().value(&x), 0.0);
        assert_eq!(p.objective().gradient(&x), DVector::zeros(2));
        let lam = crate::linalg::smallest_eigenpair(&p.objective().hessian(&x)).unwrap().lambda_min;
        assert!(lam > 0.0);
        assert_eq!(p.f_low, Some(0.0));
    }

    #[test]
    fn camel_origin_is_indefinite() {
        let p = builtin_problem("sixhumpcamel", 2).unwrap();
        let h = p.objective().hessian(&DVector::zeros(2));
        // [[8, 1], [1, −8]] has eigenvalues ±√65.
        let lam = crate::linalg::smallest_eigenpair(&h).unwrap().lambda_min;
        approx::assert_relative_eq!(lam, -65f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn camel_known_minimum() {
        let p = builtin_problem("sixhumpcamel", 2).unwrap();
        let x = dvector![0.089_842_010_099_3, -0.712_656_403_020_3];
        approx::assert_relative_eq!(p.objective().value(&x), SIXHUMPCAMEL_F_LOW, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_has_zero_lipschitz() {
        let p = builtin_problem("quadratic", 4).unwrap();
        let k = p.known_lipschitz.unwrap();
        assert_eq!((k.l_r, k.l_2), (0.0, 0.0));
        assert_eq!(p.objective().value(&dvector![1.0, 2.0, 0.0, 2.0]), 4.5);
    }

    #[test]
    fn lookup_errors() {
        assert!(matches!(builtin_problem("nope", 2), Err(Error::UnknownProblem(_))));
        assert!(matches!(builtin_problem("sixhumpcamel", 3), Err(Error::UnsupportedDimension { .. })));
        assert!(builtin_problem("rosenbrock", 1).is_err());
        assert!(builtin_problem("quadratic", 0).is_err());
    }

    #[test]
    fn derivative_checks() {
        for name in BUILTIN_NAMES {
            let p = builtin_problem(name, 2).unwrap();
            let rep = check_derivatives(&p, &dvector![-1.2, 1.0], 1e-5).unwrap();
            assert!(rep.passed, "{name}: {rep:?}");
        }
        let p = builtin_problem("rosenbrock", 5).unwrap();
        assert!(check_derivatives(&p, &dvector![0.3, -0.2, 1.1, 0.7, -0.9], 1e-5).unwrap().passed);
        assert!(check_derivatives(&p, &DVector::zeros(5), 0.0).is_err());
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let bad = Problem::new(
            "bad",
            FnObjective::new(2, |x| x.dot(x), |x| x * 2.0 + dvector![0.1, 0.0], |_| DMatrix::identity(2, 2) * 2.0),
        );
        let rep = check_derivatives(&bad, &dvector![0.5, 0.5], 1e-5).unwrap();
        assert!(!rep.passed);
        assert!(rep.worst[0].starts_with("g[0]"));
    }

    #[test]
    fn oracle_convex_zero_gradient() {
        let q = RegularizedQuadratic::new(0.0, DVector::zeros(2), dmatrix![2.0, 0.5; 0.5, 1.0], 3.0, Norm::L1).unwrap();
        let o = grid_oracle(&q, 101).unwrap();
        assert_eq!(o.s_star, DVector::zeros(2));
        assert_eq!(o.noc1_residual, 0.0);
        assert!(o.noc2_residual > 0.0);
        assert_eq!(o.m_star, 0.0);
    }

    #[test]
    fn oracle_reflection_instance() {
        let h = householder(&dvector![5.0, 1.0]).unwrap();
        let q = RegularizedQuadratic::new(0.0, DVector::zeros(2), h, 6.0, Norm::L2).unwrap();
        let o = grid_oracle(&q, 801).unwrap();
        // Along ±u the model is −t²/2 + t³: ‖s*‖ = 1/3 and m* = −1/54.
        approx::assert_relative_eq!(q.norm().value(&o.s_star), 1.0 / 3.0, epsilon = 2.0 * o.grid_step);
        assert!(o.m_star >= -1.0 / 54.0 && o.m_star <= -1.0 / 54.0 + 1e-4);
        assert!(o.noc1_residual <= 5.0 * o.grid_step * (6.0 * o.radius + 1.0));
        assert!(o.noc2_residual >= -5.0 * o.grid_step * 6.0);
        assert!(grid_oracle(&q, 99).is_err());
    }
}
