//! Objectives, Taylor models, the regularized model and step certificates.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, EigenPair};
use crate::norms::Norm;
use crate::rqmin::RqminMode;
use crate::rqmin::psi_omega;

/// A twice continuously differentiable objective with exact derivatives.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// [`Objective`] assembled from closures.
pub struct FnObjective {
    dim: usize,
    f: Box<ValueFn>,
    g: Box<GradFn>,
    h: Box<HessFn>,
}

impl FnObjective {
    pub fn new(
        dim: usize,
        f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        g: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        h: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        FnObjective {
            dim,
            f: Box::new(f),
            g: Box::new(g),
            h: Box::new(h),
        }
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.g)(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.h)(x)
    }
}

/// Evaluation tallies. They only ever increase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub n_f: usize,
    pub n_g: usize,
    pub n_h: usize,
}

/// Known Lipschitz constants of the top derivative, measured in the
/// `(r-norm, dual)` and `(ℓ2, ℓ2)` pairings respectively.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lipschitz {
    pub l_r: f64,
    pub l_2: f64,
}

/// An objective together with its evaluation counters and known constants.
pub struct Problem {
    name: String,
    objective: Box<dyn Objective>,
    counters: EvalCounters,
    pub f_low: Option<f64>,
    pub known_lipschitz: Option<Lipschitz>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("counters", &self.counters)
            .field("f_low", &self.f_low)
            .finish()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, objective: impl Objective + 'static) -> Self {
        Problem {
            name: name.into(),
            objective: Box::new(objective),
            counters: EvalCounters::default(),
            f_low: None,
            known_lipschitz: None,
        }
    }

    pub fn with_f_low(mut self, f_low: f64) -> Self {
        self.f_low = Some(f_low);
        self
    }

    pub fn with_lipschitz(mut self, l_r: f64, l_2: f64) -> Self {
        self.known_lipschitz = Some(Lipschitz { l_r, l_2 });
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn counters(&self) -> EvalCounters {
        self.counters
    }

    /// Uncounted access to the objective, for derivative checks and oracles.
    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval_f(&mut self, x: &DVector<f64>) -> Result<f64> {
        self.check_point(x)?;
        self.counters.n_f += 1;
        Ok(self.objective.value(x))
    }

    pub fn eval_grad(&mut self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        self.counters.n_g += 1;
        Ok(self.objective.gradient(x))
    }

    pub fn eval_hess(&mut self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        self.counters.n_h += 1;
        Ok(self.objective.hessian(x))
    }

    /// Evaluate `f` and the derivatives up to `degree` at `x` (counted once each).
    pub fn expand(&mut self, x: &DVector<f64>, degree: Degree) -> Result<TaylorExpansion> {
        let f0 = self.eval_f(x)?;
        self.expand_with_value(x, f0, degree)
    }

    /// As [`Problem::expand`] when `f(x)` is already known.
    pub fn expand_with_value(
        &mut self,
        x: &DVector<f64>,
        f0: f64,
        degree: Degree,
    ) -> Result<TaylorExpansion> {
        let g = self.eval_grad(x)?;
        let h = match degree {
            Degree::One => None,
            Degree::Two => Some(self.eval_hess(x)?),
        };
        TaylorExpansion::new(f0, g, h)
    }
}

/// Taylor degree `p`. Only `p ∈ {1, 2}` is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Degree {
    One,
    Two,
}

impl Degree {
    pub fn as_u32(self) -> u32 {
        match self {
            Degree::One => 1,
            Degree::Two => 2,
        }
    }

    /// `p!`
    pub fn factorial(self) -> f64 {
        match self {
            Degree::One => 1.0,
            Degree::Two => 2.0,
        }
    }

    /// `(p+1)!`
    pub fn next_factorial(self) -> f64 {
        match self {
            Degree::One => 2.0,
            Degree::Two => 6.0,
        }
    }
}

impl TryFrom<u32> for Degree {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Degree::One),
            2 => Ok(Degree::Two),
            other => Err(Error::UnsupportedDegree(other)),
        }
    }
}

/// Cached derivatives at a point: `T(x, s) = f + ⟨g, s⟩ [+ ½⟨Hs, s⟩]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorExpansion {
    pub f0: f64,
    pub g: DVector<f64>,
    pub h: Option<DMatrix<f64>>,
}

impl TaylorExpansion {
    pub fn new(f0: f64, g: DVector<f64>, h: Option<DMatrix<f64>>) -> Result<Self> {
        if let Some(h) = &h {
            if h.nrows() != g.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.len(),
                    got: h.nrows(),
                });
            }
            linalg::check_symmetric(h)?;
        }
        Ok(TaylorExpansion { f0, g, h })
    }

    pub fn degree(&self) -> Degree {
        if self.h.is_some() {
            Degree::Two
        } else {
            Degree::One
        }
    }

    /// `T(x, s)`; uses only the cached derivatives.
    pub fn eval(&self, s: &DVector<f64>) -> f64 {
        self.f0 - self.decrease(s)
    }

    /// `T(x, 0) - T(x, s)`, computed without forming `f0`.
    pub fn decrease(&self, s: &DVector<f64>) -> f64 {
        let lin = self.g.dot(s);
        match &self.h {
            None => -lin,
            Some(h) => -lin - 0.5 * s.dot(&(h * s)),
        }
    }

    /// `∇_s T(x, s)`.
    pub fn gradient_at(&self, s: &DVector<f64>) -> DVector<f64> {
        match &self.h {
            None => self.g.clone(),
            Some(h) => &self.g + h * s,
        }
    }

    /// The regularized model `T(x, s) + σ/(p+1)! ‖s‖^{p+1}`.
    pub fn regularized(&self, s: &DVector<f64>, sigma: f64, norm: Norm) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        let p = self.degree();
        let r = norm.value(s);
        Ok(self.eval(s) + sigma / p.next_factorial() * r.powi(p.as_u32() as i32 + 1))
    }
}

/// `T(x, s)` for cached derivatives at `x`, checking the requested degree.
pub fn taylor_eval(expansion: &TaylorExpansion, s: &DVector<f64>, p: u32) -> Result<f64> {
    let degree = Degree::try_from(p)?;
    if degree == Degree::Two && expansion.h.is_none() {
        return Err(Error::Precondition(
            "second-order Taylor value requested without a Hessian".into(),
        ));
    }
    let truncated;
    let exp = if degree == Degree::One && expansion.h.is_some() {
        truncated = TaylorExpansion {
            f0: expansion.f0,
            g: expansion.g.clone(),
            h: None,
        };
        &truncated
    } else {
        expansion
    };
    Ok(exp.eval(s))
}

/// `m(s) = f0 + ⟨g, s⟩ + ½⟨Hs, s⟩ + σ/6 ‖s‖³`.
///
/// Immutable once built; the smallest eigenpair of `H` is computed on first
/// use and shared afterwards.
#[derive(Debug)]
pub struct RegularizedQuadratic {
    f0: f64,
    g: DVector<f64>,
    h: DMatrix<f64>,
    sigma: f64,
    norm: Norm,
    eig: OnceLock<EigenPair>,
    h_upper: OnceLock<f64>,
}

impl Clone for RegularizedQuadratic {
    fn clone(&self) -> Self {
        RegularizedQuadratic {
            f0: self.f0,
            g: self.g.clone(),
            h: self.h.clone(),
            sigma: self.sigma,
            norm: self.norm,
            eig: self.eig.clone(),
            h_upper: self.h_upper.clone(),
        }
    }
}

impl RegularizedQuadratic {
    pub fn new(f0: f64, g: DVector<f64>, h: DMatrix<f64>, sigma: f64, norm: Norm) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::NonPositiveSigma(sigma));
        }
        if h.nrows() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: g.len(),
                got: h.nrows(),
            });
        }
        if !f0.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        linalg::check_symmetric(&h)?;
        Ok(RegularizedQuadratic {
            f0,
            g,
            h,
            sigma,
            norm,
            eig: OnceLock::new(),
            h_upper: OnceLock::new(),
        })
    }

    /// Model of a second-order expansion with regularization `sigma`.
    pub fn from_expansion(exp: &TaylorExpansion, sigma: f64, norm: Norm) -> Result<Self> {
        let h = exp.h.clone().ok_or(Error::UnsupportedDegree(1))?;
        Self::new(exp.f0, exp.g.clone(), h, sigma, norm)
    }

    /// Attach a precomputed eigenpair of `H`.
    pub fn with_eigenpair(self, eig: EigenPair) -> Self {
        let _ = self.eig.set(eig);
        self
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }
    pub fn f0(&self) -> f64 {
        self.f0
    }
    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn eigenpair(&self) -> Result<&EigenPair> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = linalg::smallest_eigenpair(&self.h)?;
        Ok(self.eig.get_or_init(|| e))
    }

    /// An upper bound on `‖H‖_{r,2}` from norm equivalence with `‖H‖₂`.
    pub fn hessian_norm_upper(&self) -> f64 {
        *self.h_upper.get_or_init(|| {
            let spectral = linalg::spectral_norm(&self.h).unwrap_or_else(|_| self.h.norm());
            spectral * self.norm.euclidean_square_ratio(self.dim())
        })
    }

    /// Value of the model at `s`.
    pub fn value(&self, s: &DVector<f64>) -> f64 {
        let r = self.norm.value(s);
        self.f0 + self.g.dot(s) + 0.5 * s.dot(&(&self.h * s)) + self.sigma / 6.0 * r * r * r
    }

    /// Gradient of the quadratic part at `s`, `g + Hs`.
    pub fn quadratic_gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        &self.g + &self.h * s
    }

    /// `T(0) - T(s)` for the quadratic part.
    pub fn taylor_decrease(&self, s: &DVector<f64>) -> f64 {
        -self.g.dot(s) - 0.5 * s.dot(&(&self.h * s))
    }

    /// `κ_{s,upp}`: radius containing every `s` with `m(s) ≤ m(0)`.
    pub fn radius_upper(&self) -> f64 {
        let hn = self.hessian_norm_upper();
        let gn = self.norm.dual_norm(&self.g);
        (0.5 * hn + (hn * hn + 2.0 / 3.0 * self.sigma * gn).sqrt()) / (self.sigma / 3.0)
    }
}

/// Checks that `ΔT ≥ σ/(p+1)! ‖s‖^{p+1}` whenever the model did not increase.
pub fn taylor_decrease_bound_holds(
    q: &RegularizedQuadratic,
    s: &DVector<f64>,
    tol: f64,
) -> bool {
    let r = q.norm().value(s);
    if q.value(s) > q.value(&DVector::zeros(q.dim())) {
        return true;
    }
    q.taylor_decrease(s) >= q.sigma() / 6.0 * r * r * r - tol
}

/// Smallest `ΔT` accepted by [`compute_rho`].
pub const MIN_PREDICTED_DECREASE: f64 = 1e-300;

/// Ratio of achieved to predicted decrease.
pub fn compute_rho(f_x: f64, f_trial: f64, delta_t: f64) -> Result<f64> {
    if !(delta_t > MIN_PREDICTED_DECREASE) {
        return Err(Error::DegenerateStep(delta_t));
    }
    Ok((f_x - f_trial) / delta_t)
}

/// All constants of the outer adaptive-regularization loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ARConfig {
    pub p: u32,
    pub sigma0: f64,
    pub sigma_min: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub max_outer: usize,
    /// Inner solver variant; `None` picks Relaxed1 for AR2GN and Relaxed2 for AR1pGN.
    pub inner: Option<RqminMode>,
    pub max_inner: usize,
    /// Try the Newton step first when the Hessian is positive definite.
    pub newton_first: bool,
}

impl Default for ARConfig {
    fn default() -> Self {
        ARConfig {
            p: 2,
            sigma0: 1.0,
            sigma_min: 1e-10,
            eta1: 0.1,
            eta2: 0.9,
            gamma1: 0.5,
            gamma2: 2.0,
            gamma3: 10.0,
            theta1: 2.0,
            theta2: 2.0,
            eps1: 1e-5,
            eps2: 1e-5,
            max_outer: 500,
            inner: None,
            max_inner: 1_000_000,
            newton_first: false,
        }
    }
}

impl ARConfig {
    /// Reject constants that violate the required orderings.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        Degree::try_from(self.p)?;
        let all = [
            self.sigma0, self.sigma_min, self.eta1, self.eta2, self.gamma1, self.gamma2,
            self.gamma3, self.theta1, self.theta2, self.eps1, self.eps2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all constants must be finite");
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma0) {
            return bad("need 0 < sigma_min <= sigma0");
        }
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return bad("need 0 < eta1 <= eta2 < 1");
        }
        if !(0.0 < self.gamma1 && self.gamma1 < 1.0 && 1.0 < self.gamma2 && self.gamma2 < self.gamma3) {
            return bad("need 0 < gamma1 < 1 < gamma2 < gamma3");
        }
        if !(self.theta1 > 1.0) {
            return bad("need theta1 > 1");
        }
        if !(self.theta2 > 1.0) {
            return bad("need theta2 > 1");
        }
        if !(self.eps1 > 0.0 && self.eps1 <= 1.0) {
            return bad("need eps1 in (0, 1]");
        }
        if !(self.eps2 > 0.0 && self.eps2 <= 1.0) {
            return bad("need eps2 in (0, 1]");
        }
        Ok(())
    }

    pub fn degree(&self) -> Result<Degree> {
        Degree::try_from(self.p)
    }
}

/// Next regularization parameter from the ratio `rho`.
///
/// Very successful: `max(σ_min, γ₁σ)`; successful: `σ`; otherwise `γ₂σ`.
pub fn sigma_update(sigma_k: f64, rho: f64, cfg: &ARConfig) -> f64 {
    if rho >= cfg.eta2 {
        (cfg.gamma1 * sigma_k).max(cfg.sigma_min)
    } else if rho >= cfg.eta1 {
        sigma_k
    } else {
        cfg.gamma2 * sigma_k
    }
}

/// Measured residuals of the step conditions for a candidate step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCertificate {
    /// `m(s) ≤ m(0)`.
    pub descent_ok: bool,
    /// `‖∇_s T(x, s)‖_* − θ₁ σ/p! ‖s‖^p`; admissible when `≤ 0`.
    pub grad_residual: f64,
    /// `λ_min[H] + θ₂ ω(s) σ ‖s‖`; admissible when `≥ 0`.
    pub curvature_residual: Option<f64>,
}

impl StepCertificate {
    pub fn first_order_ok(&self) -> bool {
        self.descent_ok && self.grad_residual <= 0.0
    }

    pub fn second_order_ok(&self) -> bool {
        self.first_order_ok() && self.curvature_residual.is_some_and(|c| c >= 0.0)
    }

    /// Certificate for a first-order (p = 1) model.
    pub fn first_order(
        exp: &TaylorExpansion,
        s: &DVector<f64>,
        sigma: f64,
        norm: Norm,
        theta1: f64,
    ) -> Result<Self> {
        let m0 = exp.regularized(&DVector::zeros(s.len()), sigma, norm)?;
        let ms = exp.regularized(s, sigma, norm)?;
        let grad = norm.dual_norm(&exp.gradient_at(s));
        let p = exp.degree();
        Ok(StepCertificate {
            descent_ok: ms <= m0,
            grad_residual: grad
                - theta1 * sigma / p.factorial() * norm.value(s).powi(p.as_u32() as i32),
            curvature_residual: None,
        })
    }
}

/// Residuals of the descent, gradient and curvature conditions at `s`.
pub fn certify_step(
    q: &RegularizedQuadratic,
    s: &DVector<f64>,
    theta1: f64,
    theta2: f64,
) -> Result<StepCertificate> {
    let r = q.norm().value(s);
    let gs = q.quadratic_gradient(s);
    let descent_ok = q.value(s) <= q.f0();
    let grad_residual = q.norm().dual_norm(&gs) - theta1 * q.sigma() / 2.0 * r * r;
    let eig = q.eigenpair()?;
    let u = eig.signed_against(&gs);
    let om = psi_omega(q, s, &u)?;
    Ok(StepCertificate {
        descent_ok,
        grad_residual,
        curvature_residual: Some(eig.lambda_min + theta2 * om.omega * q.sigma() * r),
    })
}
