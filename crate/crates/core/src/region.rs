//! Admissible-region scans of a two-dimensional regularized model.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RegularizedQuadratic;
use crate::norms::Norm;
use crate::problems::householder;
use crate::rqmin::psi_omega;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    /// Reflection vector: `H = I − 2uuᵀ/⟨u,u⟩`.
    pub u: [f64; 2],
    pub sigma: f64,
    pub g: [f64; 2],
    pub norm: Norm,
    pub grid: usize,
    /// Half-width of the scanned square; `None` uses `κ_{s,upp}`.
    pub half_width: Option<f64>,
    pub tol1: f64,
    pub tol2: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams {
            u: [5.0, 1.0],
            sigma: 6.0,
            g: [0.0, 0.0],
            norm: Norm::L2,
            grid: 801,
            half_width: None,
            tol1: 0.01,
            tol2: 0.1,
        }
    }
}

impl RegionParams {
    pub fn model(&self) -> Result<RegularizedQuadratic> {
        let h = householder(&DVector::from_row_slice(&self.u))?;
        RegularizedQuadratic::new(0.0, DVector::from_row_slice(&self.g), h, self.sigma, self.norm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub s: [f64; 2],
    /// `m(s) ≤ m(0)`.
    pub descent_ok: bool,
    /// `|‖g + Hs‖_* − ½σ‖s‖²| ≤ tol1·½σ‖s‖²`.
    pub noc1_band: bool,
    /// `λ_min + ω(s)σ‖s‖ ≥ −tol2·σ‖s‖`.
    pub noc2_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub params: RegionParams,
    pub half_width: f64,
    pub lambda_min: f64,
    /// Row-major: `cells[i * grid + j]` has `s = (x_i, x_j)`.
    pub cells: Vec<RegionCell>,
}

impl RegionScan {
    pub fn mask(&self, pick: impl Fn(&RegionCell) -> bool) -> Vec<bool> {
        self.cells.iter().map(pick).collect()
    }

    pub fn cell_at_origin(&self) -> Option<&RegionCell> {
        self.cells.iter().find(|c| c.s == [0.0, 0.0])
    }
}

/// Classify every vertex of a `grid × grid` lattice over `[−w, w]²`.
pub fn region_scan(params: &RegionParams) -> Result<RegionScan> {
    if !(params.sigma > 0.0) {
        return Err(Error::NonPositiveSigma(params.sigma));
    }
    if params.grid < 2 {
        return Err(Error::Precondition("grid must have at least two points per side".into()));
    }
    if !(params.tol1 >= 0.0 && params.tol2 >= 0.0) {
        return Err(Error::Precondition("tolerances must be nonnegative".into()));
    }
    let q = params.model()?;
    let half_width = match params.half_width {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => return Err(Error::Precondition(format!("half-width must be positive, got {w}"))),
        None => q.radius_upper(),
    };
    let eig = q.eigenpair()?.clone();
    let n = params.grid;
    let last = (n - 1) as f64;
    let coord = |i: usize| half_width * (2.0 * i as f64 - last) / last;
    let (sigma, norm) = (params.sigma, params.norm);
    let m0 = q.f0();

    let rows: Result<Vec<Vec<RegionCell>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = DVector::from_vec(vec![coord(i), coord(j)]);
                    let r = norm.value(&s);
                    let gs = q.quadratic_gradient(&s);
                    let half = 0.5 * sigma * r * r;
                    let om = psi_omega(&q, &s, &eig.signed_against(&gs))?;
                    Ok(RegionCell {
                        s: [s[0], s[1]],
                        descent_ok: q.value(&s) <= m0,
                        noc1_band: (norm.dual_norm(&gs) - half).abs() <= params.tol1 * half,
                        noc2_ok: eig.lambda_min + om.omega * sigma * r >= -params.tol2 * sigma * r,
                    })
                })
                .collect()
        })
        .collect();
    Ok(RegionScan {
        params: params.clone(),
        half_width,
        lambda_min: eig.lambda_min,
        cells: rows?.into_iter().flatten().collect(),
    })
}

/// Sizes of the 8-connected components of a row-major `side × side` mask,
/// largest first.
pub fn connected_components(mask: &[bool], side: usize) -> Vec<usize> {
    assert_eq!(mask.len(), side * side, "mask must be square");
    let mut seen = vec![false; mask.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(idx) = stack.pop() {
            size += 1;
            let (i, j) = ((idx / side) as isize, (idx % side) as isize);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= side as isize || b >= side as isize {
                        continue;
                    }
                    let k = a as usize * side + b as usize;
                    if mask[k] && !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_of_small_masks() {
        #[rustfmt::skip]
        let mask = [
            true,  false, false, true,
            false, true,  false, false,
            false, false, false, false,
            true,  true,  false, true,
        ];
        assert_eq!(connected_components(&mask, 4), vec![2, 2, 1, 1]);
        assert!(connected_components(&[false; 9], 3).is_empty());
    }

    #[test]
    fn origin_cell_at_defaults() {
        for norm in Norm::ALL {
            let scan = region_scan(&RegionParams { norm, grid: 101, ..Default::default() }).unwrap();
            let c = scan.cell_at_origin().unwrap();
            assert!(c.descent_ok && c.noc1_band && !c.noc2_ok);
            assert_eq!(scan.cells.len(), 101 * 101);
        }
    }

    #[test]
    fn default_width_is_radius_bound() {
        let scan = region_scan(&RegionParams { grid: 3, ..Default::default() }).unwrap();
        // g = 0 and ‖H‖₂ = 1: (½ + 1)/(σ/3) = 0.75.
        approx::assert_relative_eq!(scan.half_width, 0.75, epsilon = 1e-12);
        assert_eq!(scan.cells[0].s, [-scan.half_width, -scan.half_width]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(region_scan(&RegionParams { sigma: 0.0, ..Default::default() }).is_err());
        assert!(region_scan(&RegionParams { half_width: Some(-1.0), ..Default::default() }).is_err());
        assert!(region_scan(&RegionParams { u: [0.0, 0.0], ..Default::default() }).is_err());
    }
}
