//! Derivative-free and cutting-plane minimizers plus interval helpers.

use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig {
    pub max_iter: usize,
    /// Stop once the simplex diameter falls below this.
    pub diameter_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig { max_iter: 2000, diameter_tol: 1e-6, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead with reflection 1, expansion 2, contraction ½, shrink ½.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], cfg: NelderMeadConfig) -> NelderMeadResult {
    let n = x0.len();
    if n == 0 {
        return NelderMeadResult { x: Vec::new(), value: f(x0), iterations: 0, converged: true };
    }
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += cfg.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let diam = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diam < cfg.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n).map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (pts[n][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    for k in 0..n {
                        pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
                    }
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .expect("nonempty simplex");
    NelderMeadResult { x: pts[best].clone(), value: vals[best], iterations, converged }
}

/// A convex constraint `h(x) ≤ 0` evaluated with one subgradient.
pub type ConvexOracle<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Sync + 'a;

#[derive(Debug, Clone)]
pub struct CuttingPlaneResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// max_i h_i(x) at the returned point.
    pub violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Kelley's cutting-plane method for `min cᵀx s.t. h_i(x) ≤ 0, lo ≤ x ≤ hi`.
pub fn cutting_plane(
    c: &[f64],
    constraints: &[&ConvexOracle],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CuttingPlaneResult> {
    let n = c.len();
    let mut lp = LinearProgram::new(c.to_vec());
    lp.bounds = lo.iter().zip(hi).map(|(&a, &b)| (a, b)).collect();
    let mut best: Option<CuttingPlaneResult> = None;
    for it in 0..max_iter {
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::Infeasible("cutting-plane relaxation is empty".into())),
            LpStatus::Unbounded => return Err(Error::Infeasible("cutting-plane relaxation is unbounded".into())),
        }
        let x = sol.x;
        let mut worst = f64::NEG_INFINITY;
        let mut cuts = Vec::new();
        for h in constraints {
            let (v, g) = h(&x);
            worst = worst.max(v);
            if v > tol {
                cuts.push((v, g));
            }
        }
        let value = crate::linalg::dot(c, &x);
        let result = CuttingPlaneResult { x: x.clone(), value, violation: worst, iterations: it + 1, converged: worst <= tol };
        if worst <= tol {
            return Ok(result);
        }
        best = Some(result);
        for (v, g) in cuts {
            // v + gᵀ(z − x) ≤ 0
            let rhs = crate::linalg::dot(&g, &x) - v;
            lp.add(g, Relation::Le, rhs);
        }
        debug_assert_eq!(lp.objective.len(), n);
    }
    Ok(best.expect("at least one iteration"))
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Golden-section search for a unimodal function on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], NelderMeadConfig { max_iter: 5000, diameter_tol: 1e-10, initial_step: 0.5 });
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn cutting_plane_disc() {
        // min −x − y over the unit disc: optimum −√2.
        let disc = |x: &[f64]| (x[0] * x[0] + x[1] * x[1] - 1.0, vec![2.0 * x[0], 2.0 * x[1]]);
        let r = cutting_plane(&[-1.0, -1.0], &[&disc], &[-2.0, -2.0], &[2.0, 2.0], 1e-9, 500).unwrap();
        assert!(r.converged);
        assert!((r.value + 2f64.sqrt()).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson(1000, 1_000_000);
        assert!(lo < 1e-3 && hi > 1e-3);
        assert!(hi - lo < 2.0 * 1.96 * (1e-3f64 / 1e6).sqrt() * 1.01);
        assert_eq!(wilson(0, 10).0, 0.0);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, _) = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
