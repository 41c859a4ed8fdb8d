use super::{CcpInstance, ProbEstimate, SolveRecord};
use crate::distributions::MarginalModel;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::optim::{cutting_plane, ConvexOracle};
use serde::{Deserialize, Serialize};

/// Constraints `xᵀB_k ξ ≤ u_k` with `B_k ∈ ℝ^{m×d}`, cost `cᵀx`, `x ∈ ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bilinear {
    pub b: Vec<Mat>,
    pub u: Vec<f64>,
    pub cost: Vec<f64>,
}

impl Bilinear {
    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        let m = self.cost.len();
        if self.b.is_empty() || self.b.len() != self.u.len() {
            return bad("need K ≥ 1 matrices and one threshold per matrix".into());
        }
        for (k, bk) in self.b.iter().enumerate() {
            if bk.len() != m || bk.iter().any(|r| r.len() != d) {
                return bad(format!("B_{k} must be {m}×{d}"));
            }
            // Ray probing: xᵀB_k z > u_k needs ‖z‖ ≥ u_k/‖B_kᵀx‖, bounded away from 0.
            if !(self.u[k] > 0.0 && self.u[k].is_finite()) {
                return bad(format!("u_{k} must be positive"));
            }
            if bk.iter().all(|r| r.iter().all(|v| *v == 0.0)) {
                return bad(format!("B_{k} is zero so its unsafe set is empty"));
            }
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return bad("cost must be finite".into());
        }
        Ok(())
    }

    /// ln P(xᵀB_k ξ > u_k) for ξ = μ + Σ^{1/2}·(spherical generator).
    pub fn ln_violation(&self, k: usize, x: &[f64], gen: &MarginalModel, mu: &[f64], sigma: &Mat) -> f64 {
        let a = linalg::mat_t_vec(&self.b[k], x);
        let mean = linalg::dot(&a, mu);
        let var = linalg::quad_form(sigma, &a);
        if var <= 0.0 {
            return if mean > self.u[k] { 0.0 } else { f64::NEG_INFINITY };
        }
        gen.ln_survival((self.u[k] - mean) / var.sqrt())
    }
}

/// `min cᵀx s.t. aᵀx + κ√(xᵀMx) ≤ u` for positive definite M, κ > 0, u > 0.
pub fn soc_min_linear(c: &[f64], a: &[f64], m: &Mat, kappa: f64, u: f64) -> Result<(Vec<f64>, f64)> {
    if !(kappa > 0.0) {
        return Err(Error::Unsupported(format!("quantile multiplier κ = {kappa} must be positive")));
    }
    let l = linalg::cholesky(m).ok_or(Error::InvalidInstance("B Σ Bᵀ is not positive definite".into()))?;
    let pc = linalg::chol_solve(&l, c);
    let pa = linalg::chol_solve(&l, a);
    let cpc = linalg::dot(c, &pc);
    let cpa = linalg::dot(c, &pa);
    let apa = linalg::dot(a, &pa);
    if cpc == 0.0 {
        return Ok((vec![0.0; c.len()], 0.0));
    }
    // g = w c + a with gᵀPg = κ².
    let disc = cpa * cpa - cpc * (apa - kappa * kappa);
    if disc < 0.0 {
        return Err(Error::NoSolution("second-order cone constraint admits no stationary point".into()));
    }
    let roots = [(-cpa + disc.sqrt()) / cpc, (-cpa - disc.sqrt()) / cpc];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &w in &roots {
        if !(w > 0.0) {
            continue;
        }
        let g: Vec<f64> = c.iter().zip(a).map(|(ci, ai)| w * ci + ai).collect();
        let pg: Vec<f64> = pc.iter().zip(&pa).map(|(x, y)| w * x + y).collect();
        let apg = linalg::dot(a, &pg);
        let denom = kappa - apg / kappa;
        if !(denom > 0.0) {
            continue;
        }
        let rho = u / denom;
        let x: Vec<f64> = pg.iter().map(|v| -rho * v / kappa).collect();
        let value = linalg::dot(c, &x);
        debug_assert!(g.len() == x.len());
        if best.as_ref().map_or(true, |(_, b)| value < *b) {
            best = Some((x, value));
        }
    }
    best.ok_or(Error::NoSolution("linear objective is unbounded on the cone constraint".into()))
}

/// Exact solve of `aₖᵀx + κₖ√(xᵀMₖx) ≤ uₖ` for all k.
pub(super) fn solve_quantile(
    inst: &CcpInstance,
    b: &Bilinear,
    mu: &[f64],
    sigma: &Mat,
    kappas: &[f64],
    alpha: f64,
    method: &str,
) -> Result<SolveRecord> {
    let (x, warnings) = solve_soc_system(b, mu, sigma, kappas)?;
    let cost = linalg::dot(&b.cost, &x);
    let p = super::closed_form(inst, &x).unwrap_or_else(|_| ProbEstimate::exact_ln(f64::NAN, Vec::new()));
    Ok(SolveRecord { x, cost, alpha_target: alpha, p, method: method.into(), targets: None, warnings })
}

pub(crate) fn solve_soc_system(b: &Bilinear, mu: &[f64], sigma: &Mat, kappas: &[f64]) -> Result<(Vec<f64>, Vec<String>)> {
    let ks = b.b.len();
    let a: Vec<Vec<f64>> = b.b.iter().map(|bk| linalg::mat_vec(bk, mu)).collect();
    let mm: Vec<Mat> = b.b.iter().map(|bk| linalg::sandwich(bk, sigma)).collect();
    if ks == 1 {
        let (x, _) = soc_min_linear(&b.cost, &a[0], &mm[0], kappas[0], b.u[0])?;
        return Ok((x, Vec::new()));
    }
    let m = b.cost.len();
    // Bounding box of each single constraint; the feasible set lies in their intersection.
    let mut lo = vec![f64::NEG_INFINITY; m];
    let mut hi = vec![f64::INFINITY; m];
    for k in 0..ks {
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            let (_, vmin) = soc_min_linear(&e, &a[k], &mm[k], kappas[k], b.u[k])?;
            e[i] = -1.0;
            let (_, vmax) = soc_min_linear(&e, &a[k], &mm[k], kappas[k], b.u[k])?;
            lo[i] = lo[i].max(vmin);
            hi[i] = hi[i].min(-vmax);
        }
    }
    let h = |k: usize, x: &[f64]| -> (f64, Vec<f64>) {
        let mx = linalg::mat_vec(&mm[k], x);
        let nrm = linalg::dot(x, &mx).max(0.0).sqrt();
        let v = linalg::dot(&a[k], x) + kappas[k] * nrm - b.u[k];
        let g = if nrm > 0.0 {
            a[k].iter().zip(&mx).map(|(ai, mi)| ai + kappas[k] * mi / nrm).collect()
        } else {
            a[k].clone()
        };
        (v, g)
    };
    let oracles: Vec<Box<ConvexOracle>> = (0..ks).map(|k| Box::new(move |x: &[f64]| h(k, x)) as Box<ConvexOracle>).collect();
    let refs: Vec<&ConvexOracle> = oracles.iter().map(|o| o.as_ref()).collect();
    let scale = b.u.iter().cloned().fold(0.0, f64::max);
    let res = cutting_plane(&b.cost, &refs, &lo, &hi, 1e-10 * scale, 5000)?;
    let mut warnings = Vec::new();
    if !res.converged {
        warnings.push(format!("ConvergenceWarning: cutting plane stopped with violation {:.3e}", res.violation));
    }
    // Shrink toward the origin, which is strictly feasible, until every constraint holds.
    let worst = |t: f64| (0..ks).map(|k| h(k, &res.x.iter().map(|v| v * t).collect::<Vec<_>>()).0).fold(f64::NEG_INFINITY, f64::max);
    let mut t = 1.0;
    if worst(1.0) > 0.0 {
        let (mut lo_t, mut hi_t) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo_t + hi_t);
            if worst(mid) > 0.0 {
                hi_t = mid;
            } else {
                lo_t = mid;
            }
        }
        t = lo_t;
    }
    Ok((res.x.iter().map(|v| v * t).collect(), warnings))
}
