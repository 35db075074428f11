//! Benchmark cells and log-log slope fits for complexity experiments.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ar_driver::{self, Algorithm, Status};
use crate::error::{Error, Result};
use crate::model::ARConfig;
use crate::norms::Norm;
use crate::problems::builtin_problem;

/// Conventional starting point of a built-in problem.
pub fn standard_start(name: &str, n: usize) -> DVector<f64> {
    match name {
        "rosenbrock" => DVector::from_fn(n, |i, _| if i % 2 == 0 { -1.2 } else { 1.0 }),
        "sixhumpcamel" => DVector::from_vec(vec![1.5, 0.5]),
        "rastrigin2d" => DVector::from_vec(vec![0.3, -0.2]),
        "regquad_as_objective" => DVector::from_vec(vec![0.1, 0.1]),
        _ => DVector::from_fn(n, |i, _| 1.0 + i as f64),
    }
}

/// One benchmark configuration. Which tolerance varies is set by `sweep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub problem: String,
    pub n: usize,
    pub norm: Norm,
    pub eps: f64,
    pub sweep: Sweep,
    pub repeat: usize,
}

/// Which tolerance a sweep varies; the other stays at the configured value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Eps1,
    Eps2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub problem: String,
    pub n: usize,
    pub norm: Norm,
    pub eps: f64,
    pub repeat: usize,
    pub status: Status,
    pub successful: usize,
    pub iterations: usize,
    pub n_f: usize,
    pub n_g: usize,
    pub n_h: usize,
    pub f_final: f64,
    pub wall_seconds: f64,
}

/// Repeat 0 is [`standard_start`]; later repeats perturb it by
/// `U[−0.1, 0.1]` noise drawn from `(seed, repeat)`.
pub fn start_point(name: &str, n: usize, seed: u64, repeat: usize) -> DVector<f64> {
    let mut x0 = standard_start(name, n);
    if repeat > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (repeat as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        x0.iter_mut().for_each(|v| *v += rng.gen_range(-0.1..=0.1));
    }
    x0
}

/// Run one cell from [`start_point`]; only invalid configurations are errors.
pub fn run_cell(cell: &Cell, base: &ARConfig, seed: u64) -> Result<BenchRow> {
    let mut problem = builtin_problem(&cell.problem, cell.n)?;
    let x0 = start_point(&cell.problem, cell.n, seed, cell.repeat);
    let mut cfg = base.clone();
    match cell.sweep {
        Sweep::Eps1 => cfg.eps1 = cell.eps,
        Sweep::Eps2 => cfg.eps2 = cell.eps,
    }
    let start = Instant::now();
    cfg.validate()?;
    // Solver failures (budget or otherwise) still yield a row; the status says which.
    let (x, trace) = match ar_driver::run(cell.algorithm, &mut problem, &x0, &cfg, cell.norm) {
        Ok(v) => v,
        Err(fail) => (fail.x, fail.trace),
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let f_final = problem.objective().value(&x);
    Ok(BenchRow {
        algorithm: cell.algorithm,
        problem: cell.problem.clone(),
        n: cell.n,
        norm: cell.norm,
        eps: cell.eps,
        repeat: cell.repeat,
        status: trace.status,
        successful: trace.successful,
        iterations: trace.iterations(),
        n_f: trace.n_f,
        n_g: trace.n_g,
        n_h: trace.n_h,
        f_final,
        wall_seconds,
    })
}

/// Least-squares slope of `log(counts)` against `log(1/eps)`.
pub fn loglog_slope(eps: &[f64], counts: &[f64]) -> Result<f64> {
    if eps.len() != counts.len() {
        return Err(Error::DimensionMismatch { expected: eps.len(), got: counts.len() });
    }
    if eps.len() < 2 || eps.iter().chain(counts).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Precondition("need at least two positive, finite points".into()));
    }
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("eps values must differ".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let eps = [1e-2, 1e-3, 1e-4, 1e-5];
        let counts: Vec<f64> = eps.iter().map(|e: &f64| 7.0 * e.powf(-1.5)).collect();
        approx::assert_relative_eq!(loglog_slope(&eps, &counts).unwrap(), 1.5, epsilon = 1e-12);
        assert_eq!(loglog_slope(&eps, &[3.0; 4]).unwrap(), 0.0);
        assert!(loglog_slope(&eps, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(loglog_slope(&[1e-2], &[1.0]).is_err());
    }

    #[test]
    fn single_cell() {
        let cell = Cell {
            algorithm: Algorithm::Ar2gn,
            problem: "rosenbrock".into(),
            n: 2,
            norm: Norm::L2,
            eps: 1e-5,
            sweep: Sweep::Eps1,
            repeat: 0,
        };
        let row = run_cell(&cell, &ARConfig::default(), 0).unwrap();
        assert_eq!(row.status, Status::Converged);
        assert_eq!(row.n_g, 1 + row.successful);
        assert!(row.f_final < 1e-8);
    }
}
