use super::{CcpInstance, JointMode, ProbEstimate, SolveRecord};
use crate::distributions::{Copula, MarginalModel};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::optim::{golden_section, nelder_mead, NelderMeadConfig};
use crate::rng::StreamRng;
use crate::special;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Bipartite capacity-sizing network. Decision vector is
/// `(x_1..x_M, y_1..y_E)`: factory capacities followed by edge shipments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub factories: usize,
    pub dcs: usize,
    /// `[factory, dc]`, zero-based.
    pub edges: Vec<[usize; 2]>,
    pub capacity_costs: Vec<f64>,
    pub transport_costs: Vec<f64>,
}

impl Network {
    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if self.dcs != d {
            return bad(format!("network has {} DCs but the demand model has dimension {d}", self.dcs));
        }
        if self.capacity_costs.len() != self.factories {
            return bad("one capacity cost per factory is required".into());
        }
        if self.transport_costs.len() != self.edges.len() {
            return bad("one transport cost per edge is required".into());
        }
        if self.capacity_costs.iter().chain(&self.transport_costs).any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("costs must be finite and nonnegative".into());
        }
        for e in &self.edges {
            if e[0] >= self.factories || e[1] >= self.dcs {
                return bad(format!("edge {:?} out of range", e));
            }
        }
        // Ray probing: every DC must be reachable, otherwise the unsafe set
        // contains the whole ray t·e_j and no decision is safe.
        let mut reached = vec![false; self.dcs];
        for e in &self.edges {
            reached[e[1]] = true;
        }
        if let Some(j) = reached.iter().position(|r| !r) {
            return bad(format!("DC {j} has no incoming edge"));
        }
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.factories + self.edges.len()
    }

    /// Cheapest cost of delivering one unit to each DC.
    pub fn unit_costs(&self) -> Vec<f64> {
        let mut m = vec![f64::INFINITY; self.dcs];
        for (e, d) in self.edges.iter().zip(&self.transport_costs) {
            m[e[1]] = m[e[1]].min(self.capacity_costs[e[0]] + d);
        }
        m
    }

    pub fn demand_targets(&self, x: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.dcs];
        for (e, y) in self.edges.iter().zip(&x[self.factories..]) {
            q[e[1]] += y;
        }
        q
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.capacity_costs, &x[..self.factories])
            + crate::linalg::dot(&self.transport_costs, &x[self.factories..])
    }

    /// Cost of the cheapest decision meeting targets `q` (negative targets are free).
    pub fn cost_of_targets(&self, q: &[f64]) -> f64 {
        self.unit_costs().iter().zip(q).map(|(m, v)| m * v.max(0.0)).sum()
    }

    /// Route each DC's target over its cheapest edge (lowest index on ties).
    pub fn decision_from_targets(&self, q: &[f64]) -> Vec<f64> {
        let mut best: Vec<Option<(usize, f64)>> = vec![None; self.dcs];
        for (k, (e, d)) in self.edges.iter().zip(&self.transport_costs).enumerate() {
            let c = self.capacity_costs[e[0]] + d;
            if best[e[1]].map_or(true, |(_, b)| c < b) {
                best[e[1]] = Some((k, c));
            }
        }
        let mut x = vec![0.0; self.n_vars()];
        for (j, b) in best.iter().enumerate() {
            let (k, _) = b.expect("validated network");
            let v = q[j].max(0.0);
            x[self.factories + k] = v;
            x[self.edges[k][0]] += v;
        }
        x
    }

    /// Transportation LP for demand targets `q`.
    pub fn solve_targets_lp(&self, q: &[f64]) -> Result<(Vec<f64>, f64)> {
        let nv = self.n_vars();
        let mut obj = self.capacity_costs.clone();
        obj.extend_from_slice(&self.transport_costs);
        let mut lp = LinearProgram::new(obj);
        for j in 0..self.dcs {
            let mut row = vec![0.0; nv];
            for (k, e) in self.edges.iter().enumerate() {
                if e[1] == j {
                    row[self.factories + k] = 1.0;
                }
            }
            lp.add(row, Relation::Ge, q[j]);
        }
        for i in 0..self.factories {
            let mut row = vec![0.0; nv];
            row[i] = -1.0;
            for (k, e) in self.edges.iter().enumerate() {
                if e[0] == i {
                    row[self.factories + k] = 1.0;
                }
            }
            lp.add(row, Relation::Le, 0.0);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok((sol.x, sol.value)),
            LpStatus::Infeasible => Err(Error::Infeasible("transportation LP".into())),
            LpStatus::Unbounded => Err(Error::Infeasible("transportation LP is unbounded".into())),
        }
    }
}

/// P(Z₁ > h, Z₂ > k) for standard normals with correlation ρ.
pub fn bivariate_normal_upper(h: f64, k: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return special::norm_sf(h) * special::norm_sf(k);
    }
    let s = (1.0 - rho * rho).sqrt();
    let scale = special::norm_sf(h).min(special::norm_sf(k));
    if scale == 0.0 {
        return 0.0;
    }
    special::integrate_to_inf(
        |z| special::norm_pdf(z) * special::norm_sf((k - rho * z) / s),
        h,
        1e-14 * scale,
        1e-11,
    )
}

pub(crate) fn closed_form_targets(inst: &CcpInstance, q: &[f64]) -> Result<ProbEstimate> {
    let m = &inst.model.marginals;
    let ln_sf: Vec<f64> = m.iter().zip(q).map(|(mj, qj)| mj.ln_survival(*qj)).collect();
    let per: Vec<f64> = ln_sf.iter().map(|v| v.exp()).collect();
    if inst.joint_mode == JointMode::Individual || m.len() == 1 {
        let ln_p = ln_sf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return Ok(ProbEstimate::exact_ln(ln_p, per));
    }
    match &inst.model.copula {
        Copula::Independent => {
            let ln_all: f64 = m.iter().zip(q).map(|(mj, qj)| mj.ln_cdf(*qj)).sum();
            let ln_p = if ln_all == 0.0 { f64::NEG_INFINITY } else { (-ln_all.exp_m1()).ln() };
            Ok(ProbEstimate::exact_ln(ln_p, per))
        }
        Copula::GaussianCopula { correlation } if m.len() == 2 => {
            let h: Vec<f64> = ln_sf.iter().map(|l| special::norm_isf_ln(*l)).collect();
            let joint = bivariate_normal_upper(h[0], h[1], correlation[0][1]);
            let p = (per[0] + per[1] - joint).clamp(0.0, 1.0);
            Ok(ProbEstimate::exact_ln(p.ln(), per))
        }
        _ => Err(Error::OracleUnavailable("joint probability under a dependent copula".into())),
    }
}

pub(crate) fn record_from_targets(inst: &CcpInstance, net: &Network, q: &[f64], alpha: f64, method: &str) -> Result<SolveRecord> {
    let q_pos: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
    let (x, cost) = net.solve_targets_lp(&q_pos)?;
    // Probabilities are reported at the exact targets rather than the LP's rounded flows.
    let p = closed_form_targets(inst, q)?;
    Ok(SolveRecord { x, cost, alpha_target: alpha, p, method: method.into(), targets: Some(q.to_vec()), warnings: Vec::new() })
}

pub(super) fn solve_individual(inst: &CcpInstance, net: &Network, alpha: f64) -> Result<SolveRecord> {
    let q = inst
        .model
        .marginals
        .iter()
        .map(|m| m.inverse_survival(alpha))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    record_from_targets(inst, net, &q, alpha, "exact_quantile")
}

/// ln(1 − (1−α)^β), the per-DC survival level of a reliability split.
pub fn split_level_ln(alpha: f64, beta: f64) -> f64 {
    let l1 = (-alpha).ln_1p();
    (-(beta * l1).exp_m1()).ln()
}

pub(crate) fn targets_from_split(marginals: &[MarginalModel], alpha: f64, beta: &[f64]) -> Vec<f64> {
    marginals.iter().zip(beta).map(|(m, b)| m.inverse_survival_ln(split_level_ln(alpha, *b))).collect()
}

fn softmax_last_zero(theta: &[f64]) -> Vec<f64> {
    let mx = theta.iter().cloned().fold(0.0, f64::max);
    let mut e: Vec<f64> = theta.iter().map(|t| (t - mx).exp()).collect();
    e.push((-mx).exp());
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Exact minimizer of Σ m_j q_j subject to Π F_j(q_j) = 1 − α by bisection on
/// the KKT multiplier; each q_j solves m_j = λ f_j(q_j)/F_j(q_j).
pub fn kkt_split(marginals: &[MarginalModel], unit: &[f64], alpha: f64) -> Vec<f64> {
    let target = -(-alpha).ln_1p();
    let q_min: Vec<f64> = marginals.iter().map(|m| m.inverse_survival_ln(alpha.ln())).collect();
    let ln_rev_hazard = |m: &MarginalModel, q: f64| m.ln_density(q) - m.ln_cdf(q);
    let q_at = |ln_lambda: f64| -> Vec<f64> {
        marginals
            .iter()
            .zip(unit)
            .zip(&q_min)
            .map(|((m, mj), &lo)| {
                let goal = mj.ln() - ln_lambda;
                if ln_rev_hazard(m, lo) <= goal {
                    return lo;
                }
                let mut hi = lo.abs().max(1.0) * 2.0 + lo;
                let mut guard = 0;
                while ln_rev_hazard(m, hi) > goal && guard < 2000 {
                    hi = lo + 2.0 * (hi - lo);
                    guard += 1;
                }
                let mut a = lo;
                let mut b = hi;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if ln_rev_hazard(m, mid) > goal {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if b - a <= 1e-15 * b.abs().max(1e-300) {
                        break;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    };
    let excess = |ln_lambda: f64| -> f64 {
        let q = q_at(ln_lambda);
        let s: f64 = marginals.iter().zip(&q).map(|(m, qj)| -m.ln_cdf(*qj)).sum();
        s - target
    };
    let mut lo = 0.0;
    while excess(lo) < 0.0 {
        lo -= 10.0;
    }
    let mut hi = lo + 10.0;
    while excess(hi) > 0.0 {
        hi += 10.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    let q = q_at(hi);
    // Re-derive the split so that the constraint holds exactly.
    let raw: Vec<f64> = marginals.iter().zip(&q).map(|(m, qj)| -m.ln_cdf(*qj)).collect();
    let total: f64 = raw.iter().sum();
    let beta: Vec<f64> = raw.iter().map(|v| v / total).collect();
    targets_from_split(marginals, alpha, &beta)
}

/// Dimension up to which the split is searched with Nelder–Mead.
pub const NELDER_MEAD_MAX_DIM: usize = 10;

pub(super) fn nelder_mead_split(marginals: &[MarginalModel], unit: &[f64], alpha: f64) -> (Vec<f64>, bool) {
    let d = marginals.len();
    let cost = |theta: &[f64]| -> f64 {
        let beta = softmax_last_zero(theta);
        let q = targets_from_split(marginals, alpha, &beta);
        unit.iter().zip(&q).map(|(m, v)| m * v.max(0.0)).sum()
    };
    let uniform = vec![1.0 / d as f64; d];
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    let mut rng = StreamRng::new(0xB57A, d as u64);
    for restart in 0..8 {
        let x0: Vec<f64> = if restart == 0 {
            vec![0.0; d - 1]
        } else {
            (0..d - 1).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        let r = nelder_mead(cost, &x0, NelderMeadConfig::default());
        let beta = softmax_last_zero(&r.x);
        let better = match &best {
            None => true,
            Some((v, b, _)) => {
                let tie = (r.value - v).abs() <= 1e-12 * v.abs().max(1e-300);
                let dist = |x: &[f64]| x.iter().zip(&uniform).map(|(a, u)| (a - u).powi(2)).sum::<f64>();
                if tie {
                    dist(&beta) < dist(b)
                } else {
                    r.value < *v
                }
            }
        };
        if better {
            best = Some((r.value, beta, r.converged));
        }
    }
    let (_, beta, converged) = best.expect("eight restarts");
    (beta, converged)
}

pub(super) fn solve_joint_independent(inst: &CcpInstance, net: &Network, alpha: f64) -> Result<SolveRecord> {
    let m = &inst.model.marginals;
    let unit = net.unit_costs();
    if m.len() == 1 {
        return solve_individual(inst, net, alpha);
    }
    if m.len() <= NELDER_MEAD_MAX_DIM {
        let (beta, converged) = nelder_mead_split(m, &unit, alpha);
        let q = targets_from_split(m, alpha, &beta);
        let mut rec = record_from_targets(inst, net, &q, alpha, "split_nelder_mead")?;
        if !converged {
            rec.warnings.push("ConvergenceWarning: split search stopped at the iteration limit".into());
        }
        Ok(rec)
    } else {
        let q = kkt_split(m, &unit, alpha);
        record_from_targets(inst, net, &q, alpha, "split_kkt")
    }
}

/// Union probability of two DCs under a Gaussian copula.
fn pair_union(m: &[MarginalModel], rho: f64, q: [f64; 2]) -> f64 {
    let ls = [m[0].ln_survival(q[0]), m[1].ln_survival(q[1])];
    let joint = bivariate_normal_upper(special::norm_isf_ln(ls[0]), special::norm_isf_ln(ls[1]), rho);
    ls[0].exp() + ls[1].exp() - joint
}

pub(super) fn solve_joint_gaussian_pair(inst: &CcpInstance, net: &Network, alpha: f64) -> Result<SolveRecord> {
    let m = &inst.model.marginals;
    let Copula::GaussianCopula { correlation } = &inst.model.copula else { unreachable!() };
    let rho = correlation[0][1];
    let unit = net.unit_costs();
    // For a share s of the budget on DC 1, solve DC 2's level so the union hits α.
    let targets = |s: f64| -> [f64; 2] {
        let q1 = m[0].inverse_survival_ln((s * alpha).ln());
        let (mut lo, mut hi) = (alpha * (1.0 - s), alpha);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let q2 = m[1].inverse_survival_ln(mid.ln());
            if pair_union(m, rho, [q1, q2]) > alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        [q1, m[1].inverse_survival_ln(lo.ln())]
    };
    let cost = |s: f64| {
        let q = targets(s);
        unit[0] * q[0].max(0.0) + unit[1] * q[1].max(0.0)
    };
    let grid = 64;
    let (mut bs, mut bv) = (0.5, cost(0.5));
    for k in 1..grid {
        let s = k as f64 / grid as f64;
        let v = cost(s);
        if v < bv {
            bs = s;
            bv = v;
        }
    }
    let width = 1.0 / grid as f64;
    let (s, _) = golden_section(cost, (bs - width).max(1e-9), (bs + width).min(1.0 - 1e-9), 1e-9);
    let q = targets(s);
    record_from_targets(inst, net, &q, alpha, "pair_boundary_search")
}

#[cfg(test)]
mod tests {
    use super::super::tests::two_dc;
    use super::super::{solve_ccp, Family};
    use super::*;
    use crate::distributions::JointModel;

    #[test]
    fn lp_matches_unit_cost_formula() {
        let net = Network {
            factories: 2,
            dcs: 3,
            edges: vec![[0, 0], [1, 0], [0, 1], [1, 2], [0, 2]],
            capacity_costs: vec![1.0, 0.4],
            transport_costs: vec![0.2, 0.9, 0.1, 0.3, 0.05],
        };
        let q = [2.0, 1.5, 4.0];
        let (x, v) = net.solve_targets_lp(&q).unwrap();
        assert!((v - net.cost_of_targets(&q)).abs() < 1e-10);
        assert!((net.cost(&x) - v).abs() < 1e-10);
        assert!((net.cost(&net.decision_from_targets(&q)) - v).abs() < 1e-10);
        // Homogeneity of the transportation family.
        let (_, v3) = net.solve_targets_lp(&[6.0, 4.5, 12.0]).unwrap();
        assert!((v3 - 3.0 * v).abs() < 1e-9);
    }

    #[test]
    fn symmetric_split_is_uniform() {
        let inst = two_dc(MarginalModel::pareto(3.0, 1.0).unwrap(), JointMode::Joint);
        let rec = solve_ccp(&inst, 1e-3).unwrap();
        let q = rec.targets.unwrap();
        assert!((q[0] - q[1]).abs() < 1e-6 * q[0]);
        let m = &inst.model.marginals;
        let Family::RhsNetwork(net) = &inst.family else { unreachable!() };
        let mut best = f64::INFINITY;
        let mut best_b = 0.0;
        for k in 1..1000 {
            let b = k as f64 / 1000.0;
            let c = net.cost_of_targets(&targets_from_split(m, 1e-3, &[b, 1.0 - b]));
            if c < best {
                best = c;
                best_b = b;
            }
        }
        assert!((best_b - 0.5).abs() < 1e-9);
        assert!(rec.cost <= best * (1.0 + 1e-9));
    }

    #[test]
    fn nelder_mead_agrees_with_kkt() {
        let ms = vec![
            MarginalModel::pareto(3.0, 1.0).unwrap(),
            MarginalModel::pareto(3.0, 2.5).unwrap(),
            MarginalModel::gamma_dist(2.0, 0.7).unwrap(),
            MarginalModel::weibull(1.5, 1.2).unwrap(),
        ];
        let unit = [1.0, 0.6, 2.0, 1.3];
        for &a in &[1e-2, 1e-4] {
            let (beta, _) = nelder_mead_split(&ms, &unit, a);
            let qn = targets_from_split(&ms, a, &beta);
            let qk = kkt_split(&ms, &unit, a);
            let cn: f64 = unit.iter().zip(&qn).map(|(m, q)| m * q).sum();
            let ck: f64 = unit.iter().zip(&qk).map(|(m, q)| m * q).sum();
            assert!((cn - ck).abs() <= 1e-6 * ck, "{cn} vs {ck}");
            let ln_all: f64 = ms.iter().zip(&qk).map(|(m, q)| m.ln_cdf(*q)).sum();
            assert!((ln_all - (-a).ln_1p()).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_costs_bracketed_by_individual_bounds() {
        let inst = two_dc(MarginalModel::gamma_dist(2.0, 1.0).unwrap(), JointMode::Joint);
        let a = 1e-4;
        let joint = solve_ccp(&inst, a).unwrap().cost;
        let lower = solve_ccp(&inst.with_mode(JointMode::Individual), a).unwrap().cost;
        let upper = solve_ccp(&inst.with_mode(JointMode::Individual), a / 2.0).unwrap().cost;
        assert!(lower <= joint && joint <= upper * (1.0 + 1e-12));
    }

    #[test]
    fn bivariate_upper_matches_monte_carlo_scale() {
        assert!((bivariate_normal_upper(0.0, 0.0, 0.5) - (0.25 + (0.5f64).asin() / (2.0 * std::f64::consts::PI))).abs() < 1e-10);
        assert!((bivariate_normal_upper(1.0, -0.3, 0.0) - special::norm_sf(1.0) * special::norm_sf(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_copula_pair_is_feasible_and_cheaper_than_bonferroni() {
        let m = MarginalModel::pareto(3.0, 1.0).unwrap();
        let model = JointModel::gaussian_copula(vec![m.clone(), m], vec![vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let base = two_dc(MarginalModel::pareto(3.0, 1.0).unwrap(), JointMode::Joint);
        let inst = base.with_model(model).unwrap();
        let rec = solve_ccp(&inst, 1e-3).unwrap();
        assert!((rec.p.p - 1e-3).abs() < 1e-8, "{}", rec.p.p);
        let indep = solve_ccp(&base, 1e-3).unwrap();
        assert!(rec.cost <= indep.cost * (1.0 + 1e-9));
    }
}
