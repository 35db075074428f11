//! Reference computations for integration tests, written independently of
//! the library's own norm and model code.
#![allow(dead_code)]

use argen_core::Norm;
use nalgebra::{DMatrix, DVector};

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm_of(norm: Norm, v: &[f64]) -> f64 {
    match norm {
        Norm::L1 => l1(v),
        Norm::L2 => l2(v),
        Norm::LInf => linf(v),
    }
}

pub fn dual_of(norm: Norm, v: &[f64]) -> f64 {
    match norm {
        Norm::L1 => linf(v),
        Norm::L2 => l2(v),
        Norm::LInf => l1(v),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `I − 2uuᵀ/⟨u,u⟩` entry by entry.
pub fn reflection(u: &[f64]) -> DMatrix<f64> {
    let uu = dot(u, u);
    DMatrix::from_fn(u.len(), u.len(), |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * u[i] * u[j] / uu
    })
}

pub fn mat_vec(h: &DMatrix<f64>, s: &[f64]) -> Vec<f64> {
    (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)] * s[j]).sum()).collect()
}

/// `f0 + ⟨g,s⟩ + ½⟨Hs,s⟩ + σ/6‖s‖³`.
pub fn model_value(f0: f64, g: &[f64], h: &DMatrix<f64>, sigma: f64, norm: Norm, s: &[f64]) -> f64 {
    let r = norm_of(norm, s);
    f0 + dot(g, s) + 0.5 * dot(&mat_vec(h, s), s) + sigma / 6.0 * r * r * r
}

/// Smallest eigenvalue via nalgebra's symmetric eigensolver.
pub fn lambda_min(h: &DMatrix<f64>) -> f64 {
    h.clone().symmetric_eigen().eigenvalues.min()
}

/// Unit eigenvector for the smallest eigenvalue, via nalgebra.
pub fn leftmost(h: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let e = h.clone().symmetric_eigen();
    let i = e.eigenvalues.imin();
    (e.eigenvalues[i], e.eigenvectors.column(i).into_owned())
}

/// `ω(s) = 1 + 2√ψ/√3`, `ψ = max(0, 1 + 2⟨g+Hs,u⟩/(σ‖s‖²))`, with `u`
/// signed so that `⟨g+Hs,u⟩ ≤ 0`; `ω(0) = 1`.
pub fn omega(g: &[f64], h: &DMatrix<f64>, sigma: f64, norm: Norm, s: &[f64]) -> f64 {
    let r = norm_of(norm, s);
    if r == 0.0 {
        return 1.0;
    }
    let (_, u) = leftmost(h);
    let gs: Vec<f64> = mat_vec(h, s).iter().zip(g).map(|(a, b)| a + b).collect();
    let ip = -dot(&gs, u.as_slice()).abs();
    let psi = (1.0 + 2.0 * ip / (sigma * r * r)).max(0.0);
    1.0 + 2.0 * psi.sqrt() / 3f64.sqrt()
}

/// `max |⟨Hs,s⟩|` over the unit sphere of a 2-D norm, by dense angular sampling
/// plus the sphere's vertices.
pub fn induced_norm_2d(norm: Norm, h: &DMatrix<f64>) -> f64 {
    let q = |s: [f64; 2]| {
        let r = norm_of(norm, &s);
        let hs = mat_vec(h, &s);
        (dot(&hs, &s) / (r * r)).abs()
    };
    let mut best: f64 = 0.0;
    for k in 0..200_000 {
        let t = std::f64::consts::TAU * k as f64 / 200_000.0;
        best = best.max(q([t.cos(), t.sin()]));
    }
    for s in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]] {
        best = best.max(q(s));
    }
    best
}
