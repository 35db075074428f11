//! Norm primitives used by the regularized models.
//!
//! Every algorithm in the crate is written against [`Norm`]. Besides the
//! value of the norm it supplies the dual norm (used to measure gradients),
//! the unit-ball steepest-descent direction and an element of the
//! subdifferential. Only the three Hölder norms ℓ1, ℓ2 and ℓ∞ are shipped; a
//! new norm would have to provide the same four primitives together with its
//! dual.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A primal norm on ℝⁿ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::LInf];

    /// The Hölder dual: ℓ1 ↔ ℓ∞, ℓ2 ↔ ℓ2.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::LInf => "linf",
        }
    }

    /// Norm value. Non-finite entries propagate; see [`Norm::try_value`].
    pub fn value(self, s: &DVector<f64>) -> f64 {
        match self {
            Norm::L1 => s.iter().map(|v| v.abs()).sum(),
            Norm::L2 => s.norm(),
            Norm::LInf => s.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn try_value(self, s: &DVector<f64>) -> Result<f64> {
        check_finite(s)?;
        Ok(self.value(s))
    }

    /// `max { ⟨g, v⟩ : ‖v‖ ≤ 1 }`, i.e. the value of the dual norm.
    pub fn dual_norm(self, g: &DVector<f64>) -> f64 {
        self.dual().value(g)
    }

    pub fn try_dual_norm(self, g: &DVector<f64>) -> Result<f64> {
        check_finite(g)?;
        Ok(self.dual_norm(g))
    }

    /// Unit vector `d` minimizing `⟨g, d⟩`, so that `⟨g, d⟩ = -dual_norm(g)`.
    ///
    /// Ties in the ℓ1 case go to the lowest index; for ℓ∞ components with
    /// `g_i = 0` are left at zero.
    pub fn descent_direction(self, g: &DVector<f64>) -> Result<DVector<f64>> {
        check_finite(g)?;
        if g.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(match self {
            Norm::L2 => -g / g.norm(),
            Norm::L1 => {
                let i = argmax_abs(g);
                let mut d = DVector::zeros(g.len());
                d[i] = -g[i].signum();
                d
            }
            Norm::LInf => g.map(|v| if v == 0.0 { 0.0 } else { -v.signum() }),
        })
    }

    /// An element `v` of the subdifferential of the norm at `s ≠ 0`:
    /// `⟨v, s⟩ = ‖s‖` and `dual_norm(v) = 1`.
    pub fn subgradient_witness(self, s: &DVector<f64>) -> Result<DVector<f64>> {
        check_finite(s)?;
        if s.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(match self {
            Norm::L2 => s / s.norm(),
            Norm::L1 => s.map(|v| if v == 0.0 { 0.0 } else { v.signum() }),
            Norm::LInf => {
                let i = argmax_abs(s);
                let mut v = DVector::zeros(s.len());
                v[i] = s[i].signum();
                v
            }
        })
    }

    /// Upper bound `c` with `|⟨Hs, s⟩| ≤ c · ‖H‖₂ · ‖s‖²` for this norm, i.e.
    /// `max ‖s‖₂² / ‖s‖²` over nonzero `s` in dimension `n`.
    pub fn euclidean_square_ratio(self, n: usize) -> f64 {
        match self {
            Norm::L1 | Norm::L2 => 1.0,
            Norm::LInf => n as f64,
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l-inf" | "inf" => Ok(Norm::LInf),
            other => Err(format!("unknown norm {other:?} (expected l1, l2 or linf)")),
        }
    }
}

fn check_finite(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn argmax_abs(v: &DVector<f64>) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Sandwich `(lower, upper)` around the induced norm
/// `‖H‖_{r,2} = max_{‖s‖=1} |⟨Hs, s⟩|`.
///
/// Test oracle only: the exact value is a nonconvex problem for ℓ1 and ℓ∞.
/// The lower bound maximizes over `samples` seeded random unit vectors, the
/// coordinate vertices, sign vectors (all of them for `n ≤ 12`) and the
/// eigenvectors of `H`; the upper bound comes from norm equivalence with the
/// spectral norm. For ℓ2 both bounds equal the spectral norm.
pub fn induced_quadratic_norm_estimate(
    norm: Norm,
    h: &DMatrix<f64>,
    samples: usize,
) -> Result<(f64, f64)> {
    let n = h.nrows();
    let eig = linalg::symmetric_eigen(h)?;
    let spectral = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm == Norm::L2 {
        return Ok((spectral, spectral));
    }
    let upper = spectral * norm.euclidean_square_ratio(n);

    let quad = |s: &DVector<f64>| -> f64 {
        let r = norm.value(s);
        if r == 0.0 {
            0.0
        } else {
            (s.dot(&(h * s)) / (r * r)).abs()
        }
    };

    let mut lower = 0.0f64;
    for i in 0..n {
        lower = lower.max(quad(&eig.vectors.column(i).into_owned()));
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        lower = lower.max(quad(&e));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    if n <= 12 {
        for mask in 0u32..(1u32 << n) {
            let s = DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
            lower = lower.max(quad(&s));
        }
    } else {
        for _ in 0..samples {
            let s = DVector::from_fn(n, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 });
            lower = lower.max(quad(&s));
        }
    }
    for _ in 0..samples {
        let s = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        lower = lower.max(quad(&s));
    }
    Ok((lower.min(upper), upper))
}
