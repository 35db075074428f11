//! Outer adaptive-regularization loops: AR1pGN (first-order criticality,
//! `p ∈ {1, 2}`) and AR2GN (second-order criticality, `p = 2`).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, EigenPair};
use crate::model::{
    certify_step, compute_rho, sigma_update, taylor_decrease_bound_holds, ARConfig, Degree,
    Problem, RegularizedQuadratic, StepCertificate, TaylorExpansion,
};
use crate::norms::Norm;
use crate::rqmin::{rqmin_solve, RqminMode, RqminOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ar1pgn,
    Ar2gn,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ar1pgn => "ar1pgn",
            Algorithm::Ar2gn => "ar2gn",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ar1pgn" => Ok(Algorithm::Ar1pgn),
            "ar2gn" => Ok(Algorithm::Ar2gn),
            other => Err(format!("unknown algorithm {other:?} (expected ar1pgn or ar2gn)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxOuter,
    Failed,
}

/// One outer iteration. The last record of a trace is terminal: it has no
/// step, `rho` or certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub f: f64,
    pub dual_grad_norm: f64,
    pub lambda_min: Option<f64>,
    pub sigma: f64,
    pub rho: Option<f64>,
    pub step_norm: Option<f64>,
    pub accepted: bool,
    pub inner_iterations: usize,
    pub certificate: Option<StepCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ARTrace {
    pub algorithm: Algorithm,
    pub norm: Norm,
    pub p: u32,
    pub records: Vec<IterationRecord>,
    pub n_f: usize,
    pub n_g: usize,
    pub n_h: usize,
    pub successful: usize,
    pub status: Status,
}

impl ARTrace {
    /// Outer iterations performed (the terminal record is not one).
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.rho.is_some()).count()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Check `k ≤ |S_k|(1 + |log γ₁|/log γ₂) + log(σ_max/σ₀)/log γ₂` at every
    /// recorded `k`, with `σ_max` the largest `σ_j`, `j ≤ k`.
    pub fn successes_bound_holds(&self, cfg: &ARConfig) -> bool {
        let (l1, l2) = (cfg.gamma1.ln().abs(), cfg.gamma2.ln());
        let mut successes = 0usize;
        let mut sigma_max = cfg.sigma0;
        for rec in &self.records {
            sigma_max = sigma_max.max(rec.sigma);
            let bound = successes as f64 * (1.0 + l1 / l2) + (sigma_max / cfg.sigma0).ln() / l2;
            if rec.k as f64 > bound + 1e-9 * (1.0 + bound.abs()) {
                return false;
            }
            if rec.accepted {
                successes += 1;
            }
        }
        true
    }
}

/// Failure of an outer solve; the trace up to the failure is kept.
#[derive(Debug, thiserror::Error)]
#[error("{algorithm} failed: {reason}")]
pub struct SolveFailure {
    pub algorithm: Algorithm,
    pub reason: Error,
    pub x: DVector<f64>,
    pub trace: ARTrace,
}

pub type SolveResult = std::result::Result<(DVector<f64>, ARTrace), Box<SolveFailure>>;

/// First-order adaptive regularization with Taylor degree `cfg.p`.
pub fn ar1pgn_solve(problem: &mut Problem, x0: &DVector<f64>, cfg: &ARConfig, norm: Norm) -> SolveResult {
    solve(Algorithm::Ar1pgn, problem, x0, cfg, norm)
}

/// Second-order adaptive regularization (`p = 2`).
pub fn ar2gn_solve(problem: &mut Problem, x0: &DVector<f64>, cfg: &ARConfig, norm: Norm) -> SolveResult {
    solve(Algorithm::Ar2gn, problem, x0, cfg, norm)
}

/// Dispatch on `algorithm`.
pub fn run(algorithm: Algorithm, problem: &mut Problem, x0: &DVector<f64>, cfg: &ARConfig, norm: Norm) -> SolveResult {
    solve(algorithm, problem, x0, cfg, norm)
}

/// Certificate of the Newton step `−H⁻¹g` for the model at `x` with
/// regularization `sigma`.
pub fn newton_step_probe(
    problem: &mut Problem,
    x: &DVector<f64>,
    sigma: f64,
    cfg: &ARConfig,
    norm: Norm,
) -> Result<StepCertificate> {
    if cfg.p != 2 {
        return Err(Error::UnsupportedDegree(cfg.p));
    }
    let exp = problem.expand(x, Degree::Two)?;
    let q = RegularizedQuadratic::from_expansion(&exp, sigma, norm)?;
    Ok(newton_step(&q, cfg)?.1)
}

fn newton_step(q: &RegularizedQuadratic, cfg: &ARConfig) -> Result<(DVector<f64>, StepCertificate)> {
    let chol = q.h().clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let s = -chol.solve(q.g());
    let cert = certify_step(q, &s, cfg.theta1, cfg.theta2)?;
    Ok((s, cert))
}

struct State {
    x: DVector<f64>,
    exp: TaylorExpansion,
    eig: Option<EigenPair>,
}

impl State {
    fn new(problem: &mut Problem, x: DVector<f64>, f: Option<f64>, degree: Degree) -> Result<Self> {
        let exp = match f {
            Some(f) => problem.expand_with_value(&x, f, degree)?,
            None => problem.expand(&x, degree)?,
        };
        let eig = exp.h.as_ref().map(linalg::smallest_eigenpair).transpose()?;
        Ok(State { x, exp, eig })
    }
}

struct Step {
    s: DVector<f64>,
    certificate: StepCertificate,
    inner_iterations: usize,
}

fn compute_step(algorithm: Algorithm, st: &State, sigma: f64, cfg: &ARConfig, norm: Norm) -> Result<Step> {
    let Some(eig) = &st.eig else {
        // p = 1: m(s) = f + ⟨g, s⟩ + σ/2‖s‖², minimized along the descent direction.
        let g = &st.exp.g;
        let s = norm.descent_direction(g)? * (norm.dual_norm(g) / sigma);
        let certificate = StepCertificate::first_order(&st.exp, &s, sigma, norm, cfg.theta1)?;
        return Ok(Step { s, certificate, inner_iterations: 0 });
    };
    let q = RegularizedQuadratic::from_expansion(&st.exp, sigma, norm)?.with_eigenpair(eig.clone());
    if algorithm == Algorithm::Ar2gn && cfg.newton_first && eig.lambda_min > 0.0 {
        if let Ok((s, certificate)) = newton_step(&q, cfg) {
            if certificate.second_order_ok() {
                return Ok(Step { s, certificate, inner_iterations: 0 });
            }
        }
    }
    let mode = cfg.inner.unwrap_or(match algorithm {
        Algorithm::Ar1pgn => RqminMode::Relaxed2,
        Algorithm::Ar2gn => RqminMode::Relaxed1,
    });
    let opts = RqminOptions {
        mode,
        eps1: None,
        theta1: cfg.theta1,
        theta2: cfg.theta2,
        max_iter: cfg.max_inner,
    };
    let res = rqmin_solve(&q, &opts)?;
    debug_assert!(taylor_decrease_bound_holds(&q, &res.s, 1e-12 * (1.0 + q.f0().abs())));
    Ok(Step {
        s: res.s,
        certificate: res.certificate,
        inner_iterations: res.iterations,
    })
}

fn solve(algorithm: Algorithm, problem: &mut Problem, x0: &DVector<f64>, cfg: &ARConfig, norm: Norm) -> SolveResult {
    let mut trace = ARTrace {
        algorithm,
        norm,
        p: cfg.p,
        records: Vec::new(),
        n_f: 0,
        n_g: 0,
        n_h: 0,
        successful: 0,
        status: Status::Failed,
    };
    let fail = |reason: Error, x: &DVector<f64>, mut trace: ARTrace, problem: &Problem| {
        let c = problem.counters();
        (trace.n_f, trace.n_g, trace.n_h) = (c.n_f, c.n_g, c.n_h);
        Box::new(SolveFailure { algorithm, reason, x: x.clone(), trace })
    };
    let checked = cfg.validate().and_then(|_| {
        if algorithm == Algorithm::Ar2gn && cfg.p != 2 {
            return Err(Error::InvalidConfig("ar2gn requires p = 2".into()));
        }
        cfg.degree()
    });
    let degree = match checked {
        Ok(d) => d,
        Err(e) => return Err(fail(e, x0, trace, problem)),
    };
    let mut st = match State::new(problem, x0.clone(), None, degree) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, x0, trace, problem)),
    };
    let mut sigma = cfg.sigma0;

    for k in 0.. {
        let gnorm = norm.dual_norm(&st.exp.g);
        let lambda_min = st.eig.as_ref().map(|e| e.lambda_min);
        let done = match algorithm {
            Algorithm::Ar1pgn => gnorm <= cfg.eps1,
            Algorithm::Ar2gn => gnorm <= cfg.eps1 && lambda_min.is_some_and(|l| l >= -cfg.eps2),
        };
        let mut record = IterationRecord {
            k,
            x: st.x.clone(),
            f: st.exp.f0,
            dual_grad_norm: gnorm,
            lambda_min,
            sigma,
            rho: None,
            step_norm: None,
            accepted: false,
            inner_iterations: 0,
            certificate: None,
        };
        if done || k >= cfg.max_outer {
            trace.records.push(record);
            let c = problem.counters();
            (trace.n_f, trace.n_g, trace.n_h) = (c.n_f, c.n_g, c.n_h);
            if done {
                trace.status = Status::Converged;
                debug_assert!(trace.successes_bound_holds(cfg));
                return Ok((st.x, trace));
            }
            trace.status = Status::MaxOuter;
            return Err(fail(Error::MaxOuter(cfg.max_outer), &st.x.clone(), trace, problem));
        }

        let step = match compute_step(algorithm, &st, sigma, cfg, norm) {
            Ok(s) => s,
            Err(e) => {
                trace.records.push(record);
                return Err(fail(e, &st.x.clone(), trace, problem));
            }
        };
        let trial = &st.x + &step.s;
        let outcome = problem
            .eval_f(&trial)
            .and_then(|f_trial| Ok((f_trial, compute_rho(st.exp.f0, f_trial, st.exp.decrease(&step.s))?)));
        let (f_trial, rho) = match outcome {
            Ok(v) => v,
            Err(e) => {
                trace.records.push(record);
                return Err(fail(e, &st.x.clone(), trace, problem));
            }
        };
        // A NaN trial value is simply unsuccessful.
        let rho = if rho.is_nan() { f64::NEG_INFINITY } else { rho };
        let accepted = rho >= cfg.eta1;
        record.rho = Some(rho);
        record.step_norm = Some(norm.value(&step.s));
        record.accepted = accepted;
        record.inner_iterations = step.inner_iterations;
        record.certificate = Some(step.certificate);
        trace.records.push(record);

        sigma = sigma_update(sigma, rho, cfg);
        if accepted {
            trace.successful += 1;
            st = match State::new(problem, trial, Some(f_trial), degree) {
                Ok(s) => s,
                Err(e) => return Err(fail(e, &st.x.clone(), trace, problem)),
            };
        }
    }
    unreachable!("the outer loop only exits by returning")
}
