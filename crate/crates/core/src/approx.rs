//! CVaR and Bonferroni inner approximations and ray line search.

use crate::ccp::bilinear::solve_soc_system;
use crate::ccp::network::{closed_form_targets, record_from_targets};
use crate::ccp::{
    best_oracle, default_mc_n, violation_probability, CcpInstance, Family, JointMode, OracleMethod, ProbEstimate,
    SolveRecord,
};
use crate::distributions::Samples;
use crate::error::{check_level, Error, Result};
use crate::linalg;
use crate::optim::{cutting_plane, ConvexOracle};
use crate::rng::derive_seed;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvarEstimator {
    Analytic,
    SampleAverage { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub eta_weights: Vec<f64>,
    pub cvar_estimator: CvarEstimator,
}

impl ApproxConfig {
    /// All-ones weights with the analytic estimator.
    pub fn cvar_default(k: usize) -> Self {
        ApproxConfig { eta_weights: vec![1.0; k], cvar_estimator: CvarEstimator::Analytic }
    }

    /// Uniform split `1/K`.
    pub fn bonferroni_default(k: usize) -> Self {
        ApproxConfig { eta_weights: vec![1.0 / k as f64; k], cvar_estimator: CvarEstimator::Analytic }
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.eta_weights.len() != k || self.eta_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("need {k} positive weights")));
        }
        Ok(())
    }
}

/// Largest sample matrix the sample-average estimator will allocate.
const MAX_SAMPLE_ENTRIES: usize = 200_000_000;

/// Empirical CVaR at level α of `values`, with the sample weights of its subgradient.
/// Returns (cvar, [(index, weight)]).
pub fn empirical_cvar(values: &[f64], alpha: f64) -> (f64, Vec<(usize, f64)>) {
    let n = values.len();
    let k = alpha * n as f64;
    let whole = (k.floor() as usize).min(n);
    let take = (k.ceil() as usize).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    let cmp = |a: &usize, b: &usize| values[*b].partial_cmp(&values[*a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b));
    if take < n {
        idx.select_nth_unstable_by(take - 1, cmp);
    }
    idx.truncate(take);
    idx.sort_unstable_by(cmp);
    let mut weights = Vec::with_capacity(take);
    let mut sum = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        let w = if pos < whole { 1.0 } else { k - whole as f64 };
        if w > 0.0 {
            sum += w * values[i];
            weights.push((i, w / k));
        }
    }
    (sum / k, weights)
}

/// CVaR inner approximation: `CVaR_α(max_k η_k g_k(x, ξ)) ≤ 0`.
pub fn solve_cvar_approx(inst: &CcpInstance, alpha: f64, cfg: &ApproxConfig) -> Result<SolveRecord> {
    check_level(alpha)?;
    let kc = inst.n_constraints();
    cfg.check(kc)?;
    for m in &inst.model.marginals {
        m.cvar(0.5)?;
    }
    let separable = inst.joint_mode == JointMode::Individual || kc == 1;
    match cfg.cvar_estimator {
        CvarEstimator::Analytic => {
            if !separable {
                return Err(Error::OracleUnavailable("closed-form CVaR of a maximum of several constraints".into()));
            }
            match &inst.family {
                Family::RhsNetwork(net) => {
                    let q = inst.model.marginals.iter().map(|m| m.cvar(alpha)).collect::<std::result::Result<Vec<_>, _>>()?;
                    record_from_targets(inst, net, &q, alpha, "cvar_analytic")
                }
                Family::Bilinear(b) => {
                    let Some((gen, mu, sigma)) = inst.model.elliptical_params() else {
                        return Err(Error::OracleUnavailable("closed-form CVaR needs an elliptical model".into()));
                    };
                    let kappa = gen.cvar(alpha)?;
                    let (x, warnings) = solve_soc_system(b, &mu, &sigma, &vec![kappa; kc])?;
                    let p = violation_probability(inst, &x, OracleMethod::ClosedForm)?;
                    Ok(SolveRecord { cost: inst.cost(&x), x, alpha_target: alpha, p, method: "cvar_analytic".into(), targets: None, warnings })
                }
            }
        }
        CvarEstimator::SampleAverage { n, seed } => {
            if (n as f64) * alpha < 50.0 {
                return Err(Error::SampleBudgetTooSmall { n, n_alpha: n as f64 * alpha });
            }
            if n > 10_000_000 || n * inst.model.dim() > MAX_SAMPLE_ENTRIES {
                return Err(Error::Config(format!("sample-average CVaR with n = {n} exceeds the sample budget")));
            }
            let samples = inst.model.sample(n, seed);
            let groups: Vec<Vec<usize>> = if inst.joint_mode == JointMode::Joint { vec![(0..kc).collect()] } else { (0..kc).map(|k| vec![k]).collect() };
            let mut rec = match &inst.family {
                Family::RhsNetwork(net) if separable => {
                    let q: Vec<f64> = (0..kc).map(|j| empirical_cvar(&samples.column(j), alpha).0).collect();
                    let (x, cost) = net.solve_targets_lp(&q)?;
                    let p = best_oracle(inst, &x, default_mc_n(alpha), derive_seed(seed, 7))?;
                    SolveRecord { x, cost, alpha_target: alpha, p, method: "cvar_saa".into(), targets: Some(q), warnings: Vec::new() }
                }
                _ => saa_cutting_plane(inst, &samples, alpha, &cfg.eta_weights, &groups, seed)?,
            };
            rec.method = "cvar_saa".into();
            Ok(rec)
        }
    }
}

/// Linear map from the search variable to the constraint margins of one sample:
/// `g_k = w_kᵀ z + b_k(ξ)`.
struct MarginModel<'a> {
    inst: &'a CcpInstance,
}

impl MarginModel<'_> {
    fn dim(&self) -> usize {
        match &self.inst.family {
            Family::RhsNetwork(n) => n.dcs,
            Family::Bilinear(b) => b.cost.len(),
        }
    }

    fn cost_vector(&self) -> Vec<f64> {
        match &self.inst.family {
            Family::RhsNetwork(n) => n.unit_costs(),
            Family::Bilinear(b) => b.cost.clone(),
        }
    }

    /// Margin of constraint k at sample ξ and its gradient in z.
    fn margin(&self, k: usize, z: &[f64], xi: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match &self.inst.family {
            Family::RhsNetwork(_) => {
                if let Some(g) = grad {
                    g[k] -= 1.0;
                }
                xi[k] - z[k]
            }
            Family::Bilinear(b) => {
                let bxi = linalg::mat_vec(&b.b[k], xi);
                if let Some(g) = grad {
                    for (gi, v) in g.iter_mut().zip(&bxi) {
                        *gi += v;
                    }
                }
                linalg::dot(&bxi, z) - b.u[k]
            }
        }
    }

    fn decision(&self, z: &[f64]) -> Vec<f64> {
        match &self.inst.family {
            Family::RhsNetwork(n) => n.decision_from_targets(z),
            Family::Bilinear(_) => z.to_vec(),
        }
    }
}

/// Sample CVaR of `max_{k∈group} η_k g_k` and a subgradient.
fn group_cvar(mm: &MarginModel, samples: &Samples, group: &[usize], eta: &[f64], alpha: f64, z: &[f64]) -> (f64, Vec<f64>) {
    let vals: Vec<(f64, usize)> = (0..samples.n)
        .into_par_iter()
        .map(|i| {
            let xi = samples.row(i);
            let mut best = (f64::NEG_INFINITY, group[0]);
            for &k in group {
                let v = eta[k] * mm.margin(k, z, xi, None);
                if v > best.0 {
                    best = (v, k);
                }
            }
            best
        })
        .collect();
    let l: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let (cvar, weights) = empirical_cvar(&l, alpha);
    let mut grad = vec![0.0; mm.dim()];
    for (i, w) in weights {
        let k = vals[i].1;
        let mut g = vec![0.0; mm.dim()];
        mm.margin(k, z, samples.row(i), Some(&mut g));
        for (t, v) in grad.iter_mut().zip(&g) {
            *t += w * eta[k] * v;
        }
    }
    (cvar, grad)
}

fn saa_cutting_plane(
    inst: &CcpInstance,
    samples: &Samples,
    alpha: f64,
    eta: &[f64],
    groups: &[Vec<usize>],
    seed: u64,
) -> Result<SolveRecord> {
    let mm = MarginModel { inst };
    let dim = mm.dim();
    let worst = |z: &[f64]| groups.iter().map(|g| group_cvar(&mm, samples, g, eta, alpha, z).0).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = match &inst.family {
        Family::RhsNetwork(_) => {
            let lo: Vec<f64> = (0..dim).map(|j| samples.column(j).into_iter().fold(f64::INFINITY, f64::min)).collect();
            let hi: Vec<f64> = (0..dim).map(|j| samples.column(j).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect();
            (lo, hi)
        }
        Family::Bilinear(_) => {
            // Feasible extent along each signed axis, widened a hundredfold.
            let mut reach = 0.0f64;
            for i in 0..dim {
                for sign in [1.0, -1.0] {
                    let at = |t: f64| {
                        let mut z = vec![0.0; dim];
                        z[i] = sign * t;
                        worst(&z)
                    };
                    let mut t = 1.0;
                    while at(t) <= 0.0 && t < 1e12 {
                        t *= 2.0;
                    }
                    let (mut a, mut b) = (0.0, t);
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        if at(m) <= 0.0 {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    reach = reach.max(a);
                }
            }
            (vec![-100.0 * reach; dim], vec![100.0 * reach; dim])
        }
    };
    let oracles: Vec<Box<ConvexOracle>> = groups
        .iter()
        .map(|g| {
            let mm = &mm;
            Box::new(move |z: &[f64]| group_cvar(mm, samples, g, eta, alpha, z)) as Box<ConvexOracle>
        })
        .collect();
    let refs: Vec<&ConvexOracle> = oracles.iter().map(|o| o.as_ref()).collect();
    let scale = hi.iter().chain(&lo).map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    let res = cutting_plane(&mm.cost_vector(), &refs, &lo, &hi, 1e-7 * scale, 400)?;
    let mut warnings = Vec::new();
    if !res.converged {
        warnings.push(format!("ConvergenceWarning: cutting plane stopped with CVaR {:.3e}", res.violation));
    }
    // Restore exact sample feasibility by moving outward along the ray.
    let r = inst.r();
    let at = |t: f64| worst(&res.x.iter().map(|v| v * t.powf(r)).collect::<Vec<_>>());
    let mut t = 1.0;
    if at(1.0) > 0.0 {
        let mut b = 1.0 + 1e-6;
        while at(b) > 0.0 && b < 1e6 {
            b = 1.0 + 2.0 * (b - 1.0);
        }
        let mut a = 1.0;
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if at(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        t = b;
    }
    let z: Vec<f64> = res.x.iter().map(|v| v * t.powf(r)).collect();
    let x = mm.decision(&z);
    let cost = inst.cost(&x);
    let p = best_oracle(inst, &x, default_mc_n(alpha), derive_seed(seed, 7))?;
    let targets = matches!(inst.family, Family::RhsNetwork(_)).then(|| z.clone());
    Ok(SolveRecord { x, cost, alpha_target: alpha, p, method: "cvar_saa".into(), targets, warnings })
}

/// Union-bound approximation: constraint k at level `η_k α` with `Σ η_k = 1`.
pub fn solve_bonferroni(inst: &CcpInstance, alpha: f64, cfg: &ApproxConfig) -> Result<SolveRecord> {
    check_level(alpha)?;
    let kc = inst.n_constraints();
    cfg.check(kc)?;
    let total: f64 = cfg.eta_weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("Bonferroni weights sum to {total}, not 1")));
    }
    let levels: Vec<f64> = cfg.eta_weights.iter().map(|w| w * alpha).collect();
    let joint = inst.with_mode(JointMode::Joint);
    match &inst.family {
        Family::RhsNetwork(net) => {
            let q = inst
                .model
                .marginals
                .iter()
                .zip(&levels)
                .map(|(m, a)| m.inverse_survival(*a))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let (x, cost) = net.solve_targets_lp(&q)?;
            let p = match closed_form_targets(&joint, &q) {
                Ok(p) => p,
                Err(Error::OracleUnavailable(_)) => best_oracle(&joint, &x, default_mc_n(alpha), 0xB0F)?,
                Err(e) => return Err(e),
            };
            Ok(SolveRecord { x, cost, alpha_target: alpha, p, method: "bonferroni".into(), targets: Some(q), warnings: Vec::new() })
        }
        Family::Bilinear(b) => {
            let Some((gen, mu, sigma)) = inst.model.elliptical_params() else {
                return Err(Error::Unsupported("Bonferroni split for bilinear constraints needs an elliptical model".into()));
            };
            let kappas = levels.iter().map(|a| gen.inverse_survival(*a)).collect::<std::result::Result<Vec<_>, _>>()?;
            let (x, warnings) = solve_soc_system(b, &mu, &sigma, &kappas)?;
            let p = best_oracle(&joint, &x, default_mc_n(alpha), 0xB0F)?;
            Ok(SolveRecord { cost: inst.cost(&x), x, alpha_target: alpha, p, method: "bonferroni".into(), targets: None, warnings })
        }
    }
}

fn feasible(p: &ProbEstimate, alpha: f64) -> bool {
    if p.exact {
        p.p <= alpha * (1.0 + 1e-12)
    } else {
        p.upper <= alpha
    }
}

/// Scale a feasible decision along its ray `t^r x`, `t ∈ (0, 1]`, to the
/// smallest t that keeps `p ≤ α`.
pub fn line_search_refine(inst: &CcpInstance, x_apx: &[f64], alpha: f64, method: OracleMethod) -> Result<SolveRecord> {
    check_level(alpha)?;
    let eval = |t: f64| violation_probability(inst, &inst.scale_decision(x_apx, t), method);
    let p0 = eval(1.0)?;
    let refuted = if p0.exact { p0.p > alpha * (1.0 + 1e-9) } else { p0.lower > alpha };
    if refuted {
        return Err(Error::InfeasibleInput { p: p0.p, lower: p0.lower, alpha });
    }
    let mut warnings = Vec::new();
    let mut t = 1.0;
    if feasible(&p0, alpha) {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let tol = if p0.exact { 1e-13 } else { 1e-7 };
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid < 1e-12 {
                break;
            }
            if feasible(&eval(mid)?, alpha) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        t = hi;
    } else {
        warnings.push("input feasibility is statistically inconclusive; returned unchanged".to_string());
    }
    let x = inst.scale_decision(x_apx, t);
    let p = eval(t)?;
    let targets = match &inst.family {
        Family::RhsNetwork(n) => Some(n.demand_targets(&x)),
        Family::Bilinear(_) => None,
    };
    Ok(SolveRecord { cost: inst.cost(&x), x, alpha_target: alpha, p, method: "line_search".into(), targets, warnings })
}
