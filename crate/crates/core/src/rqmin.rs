//! Approximate minimization of a cubic-regularized quadratic
//! `m(s) = f0 + ⟨g, s⟩ + ½⟨Hs, s⟩ + σ/6 ‖s‖³` in a general norm.
//!
//! Starting from `s₀ = 0`, each iteration performs exact one-dimensional
//! minimizations of `m` along one or two directions:
//!
//! * a Cauchy step along the norm-steepest-descent direction of the quadratic
//!   part, when `‖g_k‖_* > ½σ‖s_k‖²` (the step is too short);
//! * a retraction towards the origin, when `‖g_k‖_* < ½σ‖s_k‖²` (too long);
//! * an eigenvalue step along the leftmost eigenvector of `H`, when the
//!   curvature test `λ_min[H] + θ₂ω(s_k)σ‖s_k‖ ≥ 0` fails.
//!
//! Every step is logged together with the decrease that the analysis
//! guarantees for it. The line search is seeded at the step length used by
//! that analysis, so the achieved decrease can never fall short of the
//! guarantee except through rounding.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::EigenPair;
use crate::model::{certify_step, RegularizedQuadratic, StepCertificate};
use crate::norms::Norm;

/// Upper bound of `ω(s)`: `1 + 2/√3`.
pub const KAPPA_OMEGA: f64 = 1.0 + 2.0 / 1.732_050_807_568_877_2;

/// Termination variant of the inner solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RqminMode {
    /// Two-sided gradient test `|‖g_k‖_* − ½σ‖s_k‖²| ≤ ε₁` plus the curvature test.
    Full,
    /// One-sided gradient test plus the curvature test; no retraction steps.
    Relaxed1,
    /// One-sided gradient test only; Cauchy steps only.
    Relaxed2,
}

impl std::str::FromStr for RqminMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(RqminMode::Full),
            "relaxed1" => Ok(RqminMode::Relaxed1),
            "relaxed2" => Ok(RqminMode::Relaxed2),
            other => Err(format!("unknown inner mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    Cauchy,
    Retraction,
    Eigen,
}

/// One accepted inner step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoggedStep {
    pub kind: StepKind,
    /// `m(s_k) − m(s_{k+1})`.
    pub decrease: f64,
    /// Lower bound on `decrease` promised by the analysis of this step kind.
    pub guaranteed: f64,
    /// `m(s_{k+1})`, tracked as `m(0)` minus the accumulated decreases.
    pub m_value: f64,
    /// `‖s_{k+1}‖`.
    pub step_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RqminResult {
    pub s: DVector<f64>,
    pub m_value: f64,
    pub iterations: usize,
    pub step_log: Vec<LoggedStep>,
    pub certificate: StepCertificate,
}

/// Candidate produced by a single step kind.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub s_next: DVector<f64>,
    pub decrease: f64,
    pub guaranteed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaPsi {
    pub psi: f64,
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RqminOptions {
    pub mode: RqminMode,
    /// Absolute tolerance of the two-sided gradient test. `None` uses
    /// `½(θ₁−1)σ·max(‖s_k‖², ε_mach)`, re-evaluated at every iterate.
    pub eps1: Option<f64>,
    pub theta1: f64,
    pub theta2: f64,
    pub max_iter: usize,
}

impl Default for RqminOptions {
    fn default() -> Self {
        RqminOptions {
            mode: RqminMode::Full,
            eps1: None,
            theta1: 2.0,
            theta2: 2.0,
            max_iter: 100_000,
        }
    }
}

/// `ψ(s)` and `ω(s)` for a unit eigenvector already signed so that
/// `⟨g + Hs, u⟩ ≤ 0`.
pub fn psi_omega(q: &RegularizedQuadratic, s: &DVector<f64>, u_signed: &DVector<f64>) -> Result<OmegaPsi> {
    if (u_signed.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition("eigenvector must have unit l2 norm".into()));
    }
    let r = q.norm().value(s);
    if r == 0.0 {
        return Ok(OmegaPsi { psi: 0.0, omega: 1.0 });
    }
    let gs = q.quadratic_gradient(s);
    let ip = gs.dot(u_signed);
    if ip > 1e-12 * (1.0 + gs.norm()) {
        return Err(Error::Precondition(format!(
            "eigenvector sign convention violated: <g+Hs,u> = {ip:e} > 0"
        )));
    }
    let psi = (1.0 + 2.0 * ip.min(0.0) / (q.sigma() * r * r)).max(0.0);
    Ok(OmegaPsi {
        psi,
        omega: 1.0 + 2.0 * psi.sqrt() / 3f64.sqrt(),
    })
}

/// `t* = min[c/(ν+3|b|), ⅓√(c/|a|)]`, at which `at² + bt + c > c/2`.
pub fn safeguard_alpha(a: f64, b: f64, c: f64, nu: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::Precondition("leading coefficient must be nonzero".into()));
    }
    if !(c > 0.0) || !(nu > 0.0) {
        return Err(Error::Precondition("need c > 0 and nu > 0".into()));
    }
    Ok((c / (nu + 3.0 * b.abs())).min((c / a.abs()).sqrt() / 3.0))
}

/// `|x + y| − |x|` without cancellation when the sign is kept.
fn abs_increment(x: f64, y: f64) -> f64 {
    let z = x + y;
    if x > 0.0 && z >= 0.0 {
        y
    } else if x < 0.0 && z <= 0.0 {
        -y
    } else {
        z.abs() - x.abs()
    }
}

/// `‖s + αd‖ − ‖s‖`, accurate even when `α‖d‖ ≪ ‖s‖`.
fn norm_increment(norm: Norm, s: &DVector<f64>, d: &DVector<f64>, alpha: f64, r0: f64) -> f64 {
    let pairs = s.iter().zip(d.iter());
    match norm {
        Norm::L1 => pairs.map(|(si, di)| abs_increment(*si, alpha * di)).sum(),
        Norm::L2 => {
            let (mut sd, mut dd, mut r2) = (0.0, 0.0, 0.0);
            for (si, di) in pairs {
                sd += si * di;
                dd += di * di;
                let v = si + alpha * di;
                r2 += v * v;
            }
            let num = alpha * (2.0 * sd + alpha * dd);
            let den = r2.sqrt() + r0;
            if den == 0.0 { 0.0 } else { num / den }
        }
        Norm::LInf => pairs
            .map(|(si, di)| abs_increment(*si, alpha * di) + (si.abs() - r0))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// `α ↦ m(s + αd) − m(s)` evaluated from precomputed directional data.
struct Ray<'a> {
    norm: Norm,
    sigma: f64,
    s: &'a DVector<f64>,
    d: &'a DVector<f64>,
    slope: f64,
    curvature: f64,
    r0: f64,
}

impl<'a> Ray<'a> {
    fn new(q: &RegularizedQuadratic, s: &'a DVector<f64>, g_k: &DVector<f64>, d: &'a DVector<f64>) -> Self {
        let r0 = q.norm().value(s);
        Ray {
            norm: q.norm(),
            sigma: q.sigma(),
            s,
            d,
            slope: g_k.dot(d),
            curvature: d.dot(&(q.h() * d)),
            r0,
        }
    }

    fn change(&self, alpha: f64) -> f64 {
        let dr = norm_increment(self.norm, self.s, self.d, alpha, self.r0);
        let r = self.r0 + dr;
        let cubic = dr * (r * r + r * self.r0 + self.r0 * self.r0);
        alpha * self.slope + 0.5 * alpha * alpha * self.curvature + self.sigma / 6.0 * cubic
    }
}

const GRID_SAMPLES: usize = 64;
const GOLDEN_ITERATIONS: usize = 90;

/// Best `(α, m(s+αd) − m(s))` on `[0, α_max]`: a uniform scan, the optional
/// analytic seed, then golden-section refinement around the best sample.
/// `α = 0` is a candidate only when no seed is supplied.
fn minimize_on_ray(ray: &Ray<'_>, alpha_max: f64, seed: Option<f64>) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = (0..=GRID_SAMPLES)
        .map(|i| alpha_max * i as f64 / GRID_SAMPLES as f64)
        .map(|a| (a, ray.change(a)))
        .collect();
    if let Some(a) = seed {
        pts.push((a, ray.change(a)));
    }
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.dedup_by(|x, y| x.0 == y.0);

    let admissible = |a: f64| seed.is_none() || a > 0.0;
    let (mut best_i, mut best) = (usize::MAX, (0.0, f64::INFINITY));
    for (i, &(a, v)) in pts.iter().enumerate() {
        if admissible(a) && v < best.1 {
            best_i = i;
            best = (a, v);
        }
    }

    let lo = if best_i == 0 { pts[0].0 } else { pts[best_i - 1].0 };
    let hi = pts.get(best_i + 1).map_or(pts[best_i].0, |p| p.0);
    if hi > lo {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (ray.change(c), ray.change(d));
        for _ in 0..GOLDEN_ITERATIONS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = ray.change(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = ray.change(d);
            }
            if b - a <= 1e-16 * b.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if admissible(x) && fx < best.1 {
                best = (x, fx);
            }
        }
    }
    best
}

/// One-dimensional minimization of `α ↦ m(s + αd)` over `(0, α_max]`.
///
/// Returns `(α*, m(s + α*d))` with `m(s + α*d) ≤ m(s + α_fallback·d)`.
pub fn line_min(
    q: &RegularizedQuadratic,
    s: &DVector<f64>,
    d: &DVector<f64>,
    alpha_max: f64,
    alpha_fallback: f64,
) -> Result<(f64, f64)> {
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    if !(alpha_fallback > 0.0 && alpha_fallback <= alpha_max) {
        return Err(Error::Precondition("need 0 < alpha_fallback <= alpha_max".into()));
    }
    let g_k = q.quadratic_gradient(s);
    let ray = Ray::new(q, s, &g_k, d);
    let (alpha, change) = minimize_on_ray(&ray, alpha_max, Some(alpha_fallback));
    let m_new = q.value(&(s + d * alpha));
    if !change.is_finite() || !m_new.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok((alpha, m_new))
}

fn search(
    q: &RegularizedQuadratic,
    s_k: &DVector<f64>,
    g_k: &DVector<f64>,
    d: &DVector<f64>,
    alpha_max: f64,
    seed: Option<f64>,
    guaranteed: f64,
) -> Result<StepOutcome> {
    let ray = Ray::new(q, s_k, g_k, d);
    let alpha_max = seed.map_or(alpha_max, |a| alpha_max.max(a));
    let (alpha, change) = minimize_on_ray(&ray, alpha_max, seed);
    if !change.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(StepOutcome {
        s_next: s_k + d * alpha,
        decrease: -change,
        guaranteed,
    })
}

/// Line minimization along the steepest-descent direction of `g_k`.
///
/// Requires `‖g_k‖_* ≥ ½σ‖s_k‖²` and `g_k ≠ 0`.
pub fn cauchy_step(q: &RegularizedQuadratic, s_k: &DVector<f64>, g_k: &DVector<f64>) -> Result<StepOutcome> {
    let norm = q.norm();
    let sigma = q.sigma();
    let gn = norm.dual_norm(g_k);
    let r = norm.value(s_k);
    if gn < 0.5 * sigma * r * r {
        return Err(Error::Precondition("Cauchy step needs ||g_k||_* >= sigma/2 ||s_k||^2".into()));
    }
    let d = norm.descent_direction(g_k)?;
    let hdd = d.dot(&(q.h() * &d));

    let (seed, guaranteed) = if r == 0.0 {
        let alpha0 = safeguard_alpha(-sigma / 6.0, -0.5 * hdd, gn, 1.0)?;
        (Some(alpha0), 0.5 * gn * alpha0)
    } else {
        // Bound along v = ‖s_k‖ d with β = ½σ‖s_k‖³.
        let beta = 0.5 * sigma * r * r * r;
        let c = gn * r - beta;
        if c > 0.0 {
            let alpha1 = safeguard_alpha(-beta / 3.0, -(0.5 * r * r * hdd + beta), c, 0.5 * r * r)?;
            (Some(alpha1 * r), 0.5 * c * alpha1)
        } else {
            (None, 0.0)
        }
    };
    search(q, s_k, g_k, &d, 2.0 * q.radius_upper(), seed, guaranteed)
}

/// Line minimization from `s_k` back towards the origin, `s_k − α s_k` with `α ∈ (0, 1]`.
///
/// Requires `‖g_k‖_* < ½σ‖s_k‖²`.
pub fn retraction_step(q: &RegularizedQuadratic, s_k: &DVector<f64>, g_k: &DVector<f64>) -> Result<StepOutcome> {
    let norm = q.norm();
    let sigma = q.sigma();
    let gn = norm.dual_norm(g_k);
    let r = norm.value(s_k);
    if !(gn < 0.5 * sigma * r * r) {
        return Err(Error::Precondition("retraction needs ||g_k||_* < sigma/2 ||s_k||^2".into()));
    }
    let beta = 0.5 * sigma * r * r * r;
    let c = g_k.dot(s_k) + beta;
    let shs = s_k.dot(&(q.h() * s_k));
    let d = -s_k;
    let (seed, guaranteed) = if c > 0.0 {
        let alpha2 = safeguard_alpha(beta / 3.0, -0.5 * shs - beta, c, 0.5 * r * r)?;
        (Some(alpha2.min(1.0)), 0.5 * c * alpha2.min(1.0))
    } else {
        (None, 0.0)
    };
    search(q, s_k, g_k, &d, 1.0, seed, guaranteed)
}

/// Line minimization along the leftmost eigenvector, signed so that
/// `⟨g_k, u_k⟩ ≤ 0` (a zero inner product keeps `u_k = −u`).
///
/// The guaranteed decrease accounts for `ν = ‖u‖` in the model norm, which
/// differs from one outside ℓ2: it uses the effective curvature `λ/ν²` and
/// `ψ, ω` evaluated along `u_k/ν`. For ℓ2 it reduces to
/// `9|λ|³/(16σ²)` at the origin and `9|λ + σω‖s‖|³/(16σ²)` elsewhere.
pub fn eigen_step(
    q: &RegularizedQuadratic,
    s_k: &DVector<f64>,
    g_k: &DVector<f64>,
    eig: &EigenPair,
) -> Result<StepOutcome> {
    let lambda = eig.lambda_min;
    if !(lambda < 0.0) {
        return Err(Error::Precondition("eigen step needs a negative eigenvalue".into()));
    }
    let norm = q.norm();
    let sigma = q.sigma();
    let u_k = if g_k.dot(&eig.u) >= 0.0 { -&eig.u } else { eig.u.clone() };
    let nu = norm.value(&u_k);
    let lambda_eff = lambda / (nu * nu);
    let r = norm.value(s_k);

    let (seed, guaranteed) = if r == 0.0 {
        let t = 1.5 * lambda_eff.abs() / sigma;
        (Some(t / nu), 9.0 * lambda_eff.abs().powi(3) / (16.0 * sigma * sigma))
    } else {
        let ip = g_k.dot(&u_k) / nu;
        let psi = (1.0 + 2.0 * ip / (sigma * r * r)).max(0.0);
        let omega = 1.0 + 2.0 * psi.sqrt() / 3f64.sqrt();
        let b = lambda_eff + sigma * r;
        let margin = lambda_eff + sigma * omega * r;
        let guaranteed = if margin < 0.0 {
            9.0 * margin.abs().powi(3) / (16.0 * sigma * sigma)
        } else {
            0.0
        };
        let seed = (b < 0.0).then(|| -1.5 * b / (sigma * nu));
        (seed, guaranteed)
    };
    search(q, s_k, g_k, &u_k, 2.0 * q.radius_upper() / nu, seed, guaranteed)
}

/// `(κ_low, κ_upp)` radii for iterates whose model value lies at least
/// `beta` below `m(0)`.
///
/// The lower radius uses `λ_min[H]` scaled by the norm-equivalence constant
/// so that it bounds `min_{‖s‖=1} ⟨Hs, s⟩` from below.
pub fn step_radius_bounds(q: &RegularizedQuadratic, beta: f64) -> Result<(f64, f64)> {
    if !(beta >= 0.0) {
        return Err(Error::Precondition("beta must be nonnegative".into()));
    }
    let upper = q.radius_upper();
    if beta == 0.0 {
        return Ok((0.0, upper));
    }
    let lambda = q.eigenpair()?.lambda_min;
    let gn = q.norm().dual_norm(q.g());
    let lower = if lambda < 0.0 {
        let lr = lambda.abs() * q.norm().euclidean_square_ratio(q.dim());
        ((gn * gn + 2.0 * beta * lr).sqrt() - gn) / lr
    } else {
        beta / gn
    };
    Ok((lower, upper))
}

fn certificate(q: &RegularizedQuadratic, s: &DVector<f64>, opts: &RqminOptions) -> Result<StepCertificate> {
    if opts.mode == RqminMode::Relaxed2 {
        let r = q.norm().value(s);
        return Ok(StepCertificate {
            descent_ok: q.value(s) <= q.f0(),
            grad_residual: q.norm().dual_norm(&q.quadratic_gradient(s)) - opts.theta1 * q.sigma() / 2.0 * r * r,
            curvature_residual: None,
        });
    }
    certify_step(q, s, opts.theta1, opts.theta2)
}

/// Run the inner solver from `s₀ = 0`.
///
/// On budget exhaustion or stagnation the error carries the last iterate.
pub fn rqmin_solve(q: &RegularizedQuadratic, opts: &RqminOptions) -> Result<RqminResult> {
    if let Some(e) = opts.eps1 {
        if !(e > 0.0) {
            return Err(Error::Precondition("eps1 must be positive".into()));
        }
    }
    if !(opts.theta1 > 1.0 && opts.theta2 > 1.0) {
        return Err(Error::Precondition("theta1 and theta2 must exceed one".into()));
    }
    let norm = q.norm();
    let sigma = q.sigma();
    let eig = match opts.mode {
        RqminMode::Relaxed2 => None,
        _ => Some(q.eigenpair()?),
    };

    let mut s = DVector::zeros(q.dim());
    let mut g_k = q.g().clone();
    let mut m_k = q.f0();
    let mut log = Vec::new();

    let finish = |s: DVector<f64>, m_value: f64, log: Vec<LoggedStep>| -> Result<RqminResult> {
        let certificate = certificate(q, &s, opts)?;
        Ok(RqminResult {
            iterations: log.len(),
            s,
            m_value,
            step_log: log,
            certificate,
        })
    };

    loop {
        let r = norm.value(&s);
        let half = 0.5 * sigma * r * r;
        let gap = norm.dual_norm(&g_k) - half;
        let grad_ok = match opts.mode {
            RqminMode::Full => {
                let eps = opts
                    .eps1
                    .unwrap_or_else(|| 0.5 * (opts.theta1 - 1.0) * sigma * (r * r).max(f64::EPSILON));
                gap.abs() <= eps
            }
            RqminMode::Relaxed1 | RqminMode::Relaxed2 => gap <= (opts.theta1 - 1.0) * half,
        };
        let curv_ok = match eig {
            None => true,
            Some(e) => {
                let om = psi_omega(q, &s, &e.signed_against(&g_k))?;
                e.lambda_min + opts.theta2 * om.omega * sigma * r >= 0.0
            }
        };
        if grad_ok && curv_ok {
            return finish(s, m_k, log);
        }
        if log.len() >= opts.max_iter {
            return Err(Error::InnerNotConverged(Box::new(finish(s, m_k, log)?)));
        }

        let gradient_step = if grad_ok {
            None
        } else if gap > 0.0 {
            Some((StepKind::Cauchy, cauchy_step(q, &s, &g_k)?))
        } else if gap < 0.0 && opts.mode == RqminMode::Full {
            Some((StepKind::Retraction, retraction_step(q, &s, &g_k)?))
        } else {
            None
        };
        let eigen = match (curv_ok, eig) {
            (false, Some(e)) => Some((StepKind::Eigen, eigen_step(q, &s, &g_k, e)?)),
            _ => None,
        };
        let chosen = match (gradient_step, eigen) {
            (Some(a), Some(b)) => {
                if a.1.decrease >= b.1.decrease {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => {
                return Err(Error::InnerNotConverged(Box::new(finish(s, m_k, log)?)));
            }
        };
        let (kind, step) = chosen;
        if !(step.decrease > 0.0) {
            // No representable progress along any admissible direction.
            return Err(Error::InnerNotConverged(Box::new(finish(s, m_k, log)?)));
        }
        s = step.s_next;
        g_k = q.quadratic_gradient(&s);
        // Accumulate the ray decreases: re-evaluating m(s) would add rounding
        // noise larger than the late decreases themselves.
        let m_new = m_k - step.decrease;
        m_k = m_new;
        log.push(LoggedStep {
            kind,
            decrease: step.decrease,
            guaranteed: step.guaranteed,
            m_value: m_new,
            step_norm: norm.value(&s),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dvector, DMatrix};

    fn figure_instance(norm: Norm) -> RegularizedQuadratic {
        let w = dvector![5.0, 1.0];
        let h = DMatrix::identity(2, 2) - 2.0 * &w * w.transpose() / w.dot(&w);
        RegularizedQuadratic::new(0.0, DVector::zeros(2), h, 6.0, norm).unwrap()
    }

    fn linear(norm: Norm) -> RegularizedQuadratic {
        RegularizedQuadratic::new(0.0, dvector![1.0, 0.0], DMatrix::zeros(2, 2), 6.0, norm).unwrap()
    }

    #[test]
    fn kappa_omega_value() {
        assert_relative_eq!(KAPPA_OMEGA, 2.154_700_538_379_251_5, epsilon = 1e-15);
    }

    #[test]
    fn psi_omega_cases() {
        // g = 0, H = 0: <g+Hs,u> = 0 for every s, so psi = 1 and omega = kappa.
        let q = RegularizedQuadratic::new(0.0, DVector::zeros(2), DMatrix::zeros(2, 2), 2.0, Norm::L2).unwrap();
        let u = dvector![1.0, 0.0];
        let om = psi_omega(&q, &dvector![0.0, 1.0], &u).unwrap();
        assert_eq!(om.psi, 1.0);
        assert_relative_eq!(om.omega, KAPPA_OMEGA, epsilon = 1e-15);

        // <g+Hs,u> = -σ‖s‖²/2 clamps psi at zero.
        let q = RegularizedQuadratic::new(0.0, dvector![-1.0, 0.0], DMatrix::zeros(2, 2), 2.0, Norm::L2).unwrap();
        let om = psi_omega(&q, &dvector![0.0, 1.0], &u).unwrap();
        assert_eq!(om.psi, 0.0);
        assert_eq!(om.omega, 1.0);

        let om = psi_omega(&q, &DVector::zeros(2), &u).unwrap();
        assert_eq!(om.omega, 1.0);

        // Wrong sign is rejected.
        assert!(psi_omega(&q, &dvector![0.0, 1.0], &dvector![-1.0, 0.0]).is_err());
    }

    #[test]
    fn safeguard_examples() {
        // q(t) = -t² - t + 4
        let t = safeguard_alpha(-1.0, -1.0, 4.0, 1.0).unwrap();
        assert_relative_eq!(t, 2.0 / 3.0, epsilon = 1e-15);
        let q = |t: f64| -t * t - t + 4.0;
        assert_relative_eq!(q(t), 26.0 / 9.0, epsilon = 1e-14);
        assert!(q(t) > 2.0);

        assert_relative_eq!(safeguard_alpha(-1.0, 0.0, 1.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        let t = safeguard_alpha(-1.0, 0.0, 9.0, 1.0).unwrap();
        assert_eq!(t, 1.0);
        assert!(9.0 - t * t > 4.5);

        assert!(safeguard_alpha(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn line_min_linear_model() {
        let q = linear(Norm::L2);
        let s = DVector::zeros(2);
        let (alpha, m) = line_min(&q, &s, &dvector![-1.0, 0.0], 10.0, 0.5).unwrap();
        assert_relative_eq!(alpha, 1.0 / 3f64.sqrt(), epsilon = 1e-8);
        assert_relative_eq!(-m, 2.0 / (3.0 * 3f64.sqrt()), epsilon = 1e-14);
        assert!(line_min(&q, &s, &DVector::zeros(2), 1.0, 0.5).is_err());
        assert!(line_min(&q, &s, &dvector![-1.0, 0.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn line_min_degenerate_direction() {
        // <g,d> = 0 and H = 0 along d: the best move is no move at all.
        let q = linear(Norm::L2);
        let (alpha, m) = line_min(&q, &DVector::zeros(2), &dvector![0.0, 1.0], 1.0, 0.5).unwrap();
        assert!(alpha < 1e-10);
        assert!(m.abs() < 1e-25);
    }

    #[test]
    fn line_min_along_figure_eigenvector() {
        let q = figure_instance(Norm::L2);
        let u = dvector![5.0, 1.0] / 26f64.sqrt();
        let (alpha, m) = line_min(&q, &DVector::zeros(2), &u, 2.0, 0.25).unwrap();
        assert_relative_eq!(alpha, 1.0 / 3.0, epsilon = 1e-8);
        assert_relative_eq!(-m, 1.0 / 54.0, epsilon = 1e-14);
        assert!(-m >= 9.0 / 576.0);
    }

    #[test]
    fn cauchy_from_origin() {
        for norm in [Norm::L2, Norm::L1] {
            let q = linear(norm);
            let out = cauchy_step(&q, &DVector::zeros(2), q.g()).unwrap();
            assert_relative_eq!(out.decrease, 2.0 / (3.0 * 3f64.sqrt()), epsilon = 1e-13);
            assert_relative_eq!(out.s_next, dvector![-1.0 / 3f64.sqrt(), 0.0], epsilon = 1e-8);
            let dmc = 0.5 * (1.0f64).min(1.0 / (3.0 * 6f64.sqrt()));
            assert!(out.guaranteed >= dmc && out.decrease >= out.guaranteed);
        }
    }

    #[test]
    fn cauchy_on_the_boundary() {
        // ‖g_k‖ = ½σ‖s_k‖² exactly: guarantee is zero, decrease nonnegative.
        let q = RegularizedQuadratic::new(0.0, dvector![3.0, 0.0], DMatrix::zeros(2, 2), 6.0, Norm::L2).unwrap();
        let s = dvector![0.0, 1.0];
        let out = cauchy_step(&q, &s, q.g()).unwrap();
        assert_eq!(out.guaranteed, 0.0);
        assert!(out.decrease >= 0.0);
        assert!(cauchy_step(&q, &dvector![0.0, 2.0], q.g()).is_err());
    }

    #[test]
    fn retraction_of_pure_cubic() {
        let q = RegularizedQuadratic::new(0.0, DVector::zeros(2), DMatrix::zeros(2, 2), 6.0, Norm::L1).unwrap();
        let s = dvector![0.3, -0.4];
        let out = retraction_step(&q, &s, q.g()).unwrap();
        assert_eq!(out.s_next, DVector::zeros(2));
        assert_relative_eq!(out.decrease, 0.7f64.powi(3), epsilon = 1e-15);
        assert!(out.decrease >= out.guaranteed && out.guaranteed > 0.0);
        assert!(retraction_step(&q, &DVector::zeros(2), q.g()).is_err());
    }

    #[test]
    fn eigen_step_from_origin() {
        let q = figure_instance(Norm::L2);
        let eig = q.eigenpair().unwrap().clone();
        let out = eigen_step(&q, &DVector::zeros(2), q.g(), &eig).unwrap();
        assert_relative_eq!(out.guaranteed, 0.015625, epsilon = 1e-14);
        assert_relative_eq!(out.decrease, 1.0 / 54.0, epsilon = 1e-14);

        let psd = RegularizedQuadratic::new(0.0, dvector![1.0, 0.0], DMatrix::identity(2, 2), 1.0, Norm::L2).unwrap();
        let e = psd.eigenpair().unwrap().clone();
        assert!(eigen_step(&psd, &DVector::zeros(2), psd.g(), &e).is_err());
    }

    #[test]
    fn eigen_step_l1_uses_norm_of_eigenvector() {
        // ‖u‖₁ = 6/√26 > 1, so the ℓ2 constant 9/576 is not attainable here;
        // the ν-corrected bound still holds.
        let q = figure_instance(Norm::L1);
        let eig = q.eigenpair().unwrap().clone();
        let out = eigen_step(&q, &DVector::zeros(2), q.g(), &eig).unwrap();
        let nu: f64 = 6.0 / 26f64.sqrt();
        assert_relative_eq!(out.guaranteed, 0.015625 / nu.powi(6), epsilon = 1e-14);
        assert!(out.decrease >= out.guaranteed);
        assert!(out.decrease < 0.015625);
    }

    #[test]
    fn radius_bounds() {
        let q = RegularizedQuadratic::new(0.0, DVector::zeros(2), DMatrix::zeros(2, 2), 1.0, Norm::L2).unwrap();
        assert_eq!(step_radius_bounds(&q, 0.0).unwrap(), (0.0, 0.0));

        let q = figure_instance(Norm::L2);
        let (lo, hi) = step_radius_bounds(&q, 9.0 / 576.0).unwrap();
        assert_relative_eq!(lo, (2.0f64 * 9.0 / 576.0).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(hi, 0.75, epsilon = 1e-14);
        assert!(step_radius_bounds(&q, -1.0).is_err());
    }

    #[test]
    fn zero_gradient_psd_terminates_immediately() {
        for mode in [RqminMode::Full, RqminMode::Relaxed1, RqminMode::Relaxed2] {
            let q = RegularizedQuadratic::new(1.0, DVector::zeros(3), DMatrix::identity(3, 3), 2.0, Norm::LInf).unwrap();
            let opts = RqminOptions { mode, eps1: Some(1e-8), ..Default::default() };
            let res = rqmin_solve(&q, &opts).unwrap();
            assert_eq!(res.iterations, 0);
            assert_eq!(res.s, DVector::zeros(3));
        }
    }

    #[test]
    fn figure_instance_full_mode() {
        for norm in Norm::ALL {
            let q = figure_instance(norm);
            let opts = RqminOptions {
                mode: RqminMode::Full,
                eps1: Some(1e-10),
                theta2: 1.1,
                ..Default::default()
            };
            let res = rqmin_solve(&q, &opts).unwrap();
            assert_eq!(res.step_log[0].kind, StepKind::Eigen);
            let r = norm.value(&res.s);
            let gap = norm.dual_norm(&q.quadratic_gradient(&res.s)) - 3.0 * r * r;
            assert!(gap.abs() <= 1e-10, "{norm}: {gap}");
            assert!(res.certificate.curvature_residual.unwrap() >= 0.0);
            assert!(res.m_value < 0.0);
        }
    }

    #[test]
    fn inner_budget_exhaustion_carries_iterate() {
        let q = figure_instance(Norm::L2);
        let opts = RqminOptions { mode: RqminMode::Full, eps1: Some(1e-12), max_iter: 1, ..Default::default() };
        match rqmin_solve(&q, &opts) {
            Err(Error::InnerNotConverged(best)) => {
                assert_eq!(best.iterations, 1);
                assert!(best.m_value < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
