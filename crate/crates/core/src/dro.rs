//! Distributionally robust comparators.
//!
//! f-divergence balls reduce to the nominal problem at a smaller level; the
//! marginal ambiguity set reduces to a union-bound budget on rectangular unsafe
//! sets. Wasserstein and moment balls are handled through certified floors: the
//! optimal nominal cost under one heavy-tailed member of the ball.

use crate::ccp::{solve_ccp, CcpInstance, Family, JointMode, ProbEstimate, SolveRecord};
use crate::distributions::{Generator, JointModel, MarginalModel};
use crate::error::{check_level, Error, Result};
use crate::linalg::{self, Mat};
use crate::special::{self, log_sum_exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivKind {
    /// f(x) = x ln x.
    Kl,
    /// f(x) = (x − 1)²/2.
    ChiSquare,
    /// f(x) = (x^p − p(x − 1) − 1)/(p(p − 1)), p > 1.
    Polynomial { p: f64 },
    /// f(x) = (x − 1)² eˣ.
    ExpGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDivergence {
    #[serde(flatten)]
    pub kind: DivKind,
    pub eta: f64,
}

impl FDivergence {
    pub fn new(kind: DivKind, eta: f64) -> Result<Self> {
        let d = FDivergence { kind, eta };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("radius η = {} must be positive", self.eta)));
        }
        if let DivKind::Polynomial { p } = self.kind {
            if !(p > 1.0 && p.is_finite()) {
                return Err(Error::Config(format!("polynomial divergence needs p > 1, got {p}")));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let d: FDivergence = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("divergence serializes")
    }

    pub fn name(&self) -> String {
        match self.kind {
            DivKind::Kl => "kl".into(),
            DivKind::ChiSquare => "chi_square".into(),
            DivKind::Polynomial { p } => format!("polynomial_{p}"),
            DivKind::ExpGrowth => "exp_growth".into(),
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        match self.kind {
            DivKind::Kl => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            DivKind::ChiSquare => 0.5 * (x - 1.0) * (x - 1.0),
            DivKind::Polynomial { p } => (x.powf(p) - p * (x - 1.0) - 1.0) / (p * (p - 1.0)),
            DivKind::ExpGrowth => (x - 1.0) * (x - 1.0) * x.exp(),
        }
    }

    /// f(x)/x at x = e^w.
    fn f_over_x_ln(&self, w: f64) -> f64 {
        let x = w.exp();
        match self.kind {
            DivKind::Kl => w,
            DivKind::ChiSquare => {
                let e = w.exp_m1();
                0.5 * e * e / x
            }
            DivKind::Polynomial { p } => (x.powf(p) - p * w.exp_m1() - 1.0) / (p * (p - 1.0) * x),
            DivKind::ExpGrowth => {
                let e = w.exp_m1();
                e * e * (x - w).exp()
            }
        }
    }

    /// ln g(u) with g(u) = inf{x ≥ 1 : f(x)/x ≥ u}.
    pub fn ln_g_of_u(&self, u: f64) -> f64 {
        if !(u > 0.0) {
            return 0.0;
        }
        match self.kind {
            DivKind::Kl => u,
            DivKind::ChiSquare => (1.0 + u + (u * u + 2.0 * u).sqrt()).ln(),
            _ => {
                let mut hi = 1.0;
                while self.f_over_x_ln(hi) < u {
                    hi *= 2.0;
                }
                special::bisect_increasing(|w| self.f_over_x_ln(w) - u, 0.0, hi, 1e-15, 200)
            }
        }
    }

    pub fn g_of_u(&self, u: f64) -> f64 {
        self.ln_g_of_u(u).exp()
    }

    /// Divergence of the extreme tilt that lifts an event of nominal mass
    /// `alpha·e^{-w}` to mass `alpha`.
    fn tilt_cost(&self, alpha: f64, w: f64) -> f64 {
        let first = alpha * self.f_over_x_ln(w);
        let p = alpha * (-w).exp();
        let rest = match self.kind {
            DivKind::Kl => (1.0 - alpha) * ((-alpha).ln_1p() - (-p).ln_1p()),
            _ => {
                let y = (1.0 - alpha) / (1.0 - p);
                (1.0 - p) * self.f(y)
            }
        };
        first + rest
    }
}

/// ln α_eff: the nominal level at which the worst case over the ball equals α.
pub fn worst_case_level_ln(div: &FDivergence, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    div.validate()?;
    let eta = div.eta;
    let lg = div.ln_g_of_u(2.0 * eta / alpha);
    // s ∈ [1, g(2η/α) + 2], in w = ln s.
    let mut hi = lg + (2.0 * (-lg).exp()).ln_1p();
    while !(div.tilt_cost(alpha, hi) >= eta) {
        hi *= 2.0;
        if hi > 1e12 || !hi.is_finite() {
            return Err(Error::NoSolution(format!("radius η = {eta} is out of reach at α = {alpha}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if div.tilt_cost(alpha, mid) < eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = 0.5 * (lo + hi);
    let resid = (div.tilt_cost(alpha, w) - eta).abs();
    let slack = div.tilt_cost(alpha, hi) - div.tilt_cost(alpha, lo);
    if resid > 1e-10 && resid > slack {
        return Err(Error::NoSolution(format!("worst-case equation residual {resid:.2e} at α = {alpha}")));
    }
    Ok(alpha.ln() - w)
}

pub fn worst_case_level(div: &FDivergence, alpha: f64) -> Result<f64> {
    worst_case_level_ln(div, alpha).map(f64::exp)
}

/// Worst-case probability over the ball of an event with nominal mass `p`.
pub fn worst_case_probability(div: &FDivergence, p: f64) -> Result<f64> {
    check_level(p)?;
    div.validate()?;
    let cost = |w: f64| {
        let pw = (p * w.exp()).min(1.0);
        pw * div.f_over_x_ln(w) + (1.0 - p) * div.f((1.0 - pw) / (1.0 - p))
    };
    let top = -p.ln();
    if cost(top) <= div.eta {
        return Ok(1.0);
    }
    let w = special::bisect_increasing(|w| cost(w) - div.eta, 0.0, top, 1e-16, 200);
    Ok((p * w.exp()).min(1.0))
}

/// The asymptotic level α/g(η/α), in logs.
pub fn asymptotic_level_ln(div: &FDivergence, alpha: f64) -> f64 {
    alpha.ln() - div.ln_g_of_u(div.eta / alpha)
}

/// Heaviest-marginal quantile at level `exp(ln_level)`; overflow-safe.
fn quantile_at_ln(model: &JointModel, ln_level: f64) -> f64 {
    let v = model.marginals.iter().map(|m| m.inverse_survival_ln(ln_level)).fold(f64::NEG_INFINITY, f64::max);
    if v.is_finite() {
        v
    } else {
        crate::scaling::ln_s_alpha_ln(model, ln_level).exp()
    }
}

/// t_α = F̄⁻¹(α/g(η/α)).
pub fn t_alpha(div: &FDivergence, model: &JointModel, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    div.validate()?;
    Ok(quantile_at_ln(model, asymptotic_level_ln(div, alpha)))
}

/// ln t_α; valid when t_α > 0.
pub fn ln_t_alpha(div: &FDivergence, model: &JointModel, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    div.validate()?;
    Ok(crate::scaling::ln_s_alpha_ln(model, asymptotic_level_ln(div, alpha)))
}

/// f-divergence DRO optimum: the nominal problem at the effective level.
pub fn solve_dro_ccp(inst: &CcpInstance, div: &FDivergence, alpha: f64) -> Result<SolveRecord> {
    let ln_eff = worst_case_level_ln(div, alpha)?;
    let eff = ln_eff.exp();
    if !(eff >= f64::MIN_POSITIVE) {
        return Err(Error::NoSolution(format!("effective level e^{ln_eff:.1} underflows")));
    }
    let mut rec = solve_ccp(inst, eff)?;
    rec.alpha_target = alpha;
    rec.method = format!("dro_{}+{}", div.name(), rec.method);
    Ok(rec)
}

fn log_cost_path(inst: &CcpInstance) -> bool {
    matches!(inst.family, Family::RhsNetwork(_))
        && inst.joint_mode == JointMode::Individual
        && inst.model.marginals.iter().all(|m| m.support_lower() >= 0.0)
}

/// (ln cost, cost) of the nominal optimum at level `exp(ln_level)`.
fn cost_at_ln_level(inst: &CcpInstance, ln_level: f64) -> Result<(f64, f64)> {
    if let (true, Family::RhsNetwork(net)) = (log_cost_path(inst), &inst.family) {
        let terms: Vec<f64> = net
            .unit_costs()
            .iter()
            .zip(&inst.model.marginals)
            .map(|(m, mj)| m.ln() + mj.ln_inverse_survival_ln(ln_level))
            .collect();
        let l = log_sum_exp(&terms);
        return Ok((l, l.exp()));
    }
    let a = ln_level.exp();
    if !(a >= f64::MIN_POSITIVE) {
        return Err(Error::NoSolution(format!("level e^{ln_level:.1} underflows")));
    }
    let c = solve_ccp(inst, a)?.cost;
    Ok((c.abs().ln(), c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleClass {
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "wSP")]
    WSp,
    Distorting,
}

impl ScaleClass {
    pub fn label(&self) -> &'static str {
        match self {
            ScaleClass::Sp => "SP",
            ScaleClass::WSp => "wSP",
            ScaleClass::Distorting => "Distorting",
        }
    }
}

/// Empirical scale class from nominal and DRO log costs on a decreasing grid.
///
/// Over the last two decades of the grid: SP when the cost ratio grows by at
/// most 10%; wSP when instead the log costs grow at most 1.5 times as fast;
/// otherwise Distorting.
pub fn classify_scale(alphas: &[f64], ln_nominal: &[f64], ln_dro: &[f64]) -> ScaleClass {
    let n = alphas.len();
    if n < 2 {
        return ScaleClass::Sp;
    }
    let (i_min, _) = alphas.iter().enumerate().fold((0, f64::INFINITY), |b, (i, a)| if *a < b.1 { (i, *a) } else { b });
    let anchor = alphas[i_min].ln() + 100f64.ln();
    let (i_hi, _) = alphas
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, a)| if (a.ln() - anchor).abs() < b.1 { (i, (a.ln() - anchor).abs()) } else { b });
    let ratio_growth = (ln_dro[i_min] - ln_nominal[i_min]) - (ln_dro[i_hi] - ln_nominal[i_hi]);
    if ratio_growth <= 1.1f64.ln() {
        return ScaleClass::Sp;
    }
    let rate = (ln_dro[i_min] - ln_dro[i_hi]) / (ln_nominal[i_min] - ln_nominal[i_hi]);
    if rate <= 1.5 {
        ScaleClass::WSp
    } else {
        ScaleClass::Distorting
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroReport {
    pub divergence: FDivergence,
    pub alpha_grid: Vec<f64>,
    pub effective_levels: Vec<f64>,
    pub ln_effective_levels: Vec<f64>,
    pub t_values: Vec<f64>,
    pub nominal_costs: Vec<f64>,
    pub dro_costs: Vec<f64>,
    /// ln|cost|, finite even where the cost overflows.
    pub ln_nominal_costs: Vec<f64>,
    pub ln_dro_costs: Vec<f64>,
    pub scale_class: ScaleClass,
}

impl DroReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,alpha_eff,ln_alpha_eff,t_alpha,nominal_cost,dro_cost,ln_nominal_cost,ln_dro_cost,scale_class\n");
        for i in 0..self.alpha_grid.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.alpha_grid[i],
                self.effective_levels[i],
                self.ln_effective_levels[i],
                self.t_values[i],
                self.nominal_costs[i],
                self.dro_costs[i],
                self.ln_nominal_costs[i],
                self.ln_dro_costs[i],
                self.scale_class.label()
            ));
        }
        s
    }
}

/// Nominal and DRO costs over a grid, with the empirical scale class.
pub fn dro_report(inst: &CcpInstance, div: &FDivergence, alphas: &[f64]) -> Result<DroReport> {
    if alphas.is_empty() {
        return Err(Error::Config("empty α grid".into()));
    }
    let rows = alphas
        .par_iter()
        .map(|&a| {
            check_level(a)?;
            let ln_eff = worst_case_level_ln(div, a)?;
            let t = t_alpha(div, &inst.model, a)?;
            let (ln_nom, nom) = cost_at_ln_level(inst, a.ln())?;
            let (ln_dro, dro) = cost_at_ln_level(inst, ln_eff)?;
            Ok((ln_eff, t, ln_nom, nom, ln_dro, dro))
        })
        .collect::<Result<Vec<_>>>()?;
    let ln_nominal_costs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ln_dro_costs: Vec<f64> = rows.iter().map(|r| r.4).collect();
    let scale_class = classify_scale(alphas, &ln_nominal_costs, &ln_dro_costs);
    Ok(DroReport {
        divergence: *div,
        alpha_grid: alphas.to_vec(),
        effective_levels: rows.iter().map(|r| r.0.exp()).collect(),
        ln_effective_levels: rows.iter().map(|r| r.0).collect(),
        t_values: rows.iter().map(|r| r.1).collect(),
        nominal_costs: rows.iter().map(|r| r.3).collect(),
        dro_costs: rows.iter().map(|r| r.5).collect(),
        ln_nominal_costs,
        ln_dro_costs,
        scale_class,
    })
}

/// Worst case over all couplings of the fixed marginals: min(1, Σ F̄_j(q_j)).
pub fn marginal_worst_case(inst: &CcpInstance, q: &[f64]) -> f64 {
    inst.model.marginals.iter().zip(q).map(|(m, v)| m.survival(*v)).sum::<f64>().min(1.0)
}

/// Smallest q ≥ lo with ln f(q) ≤ goal, for a density decreasing beyond lo.
fn density_level(m: &MarginalModel, goal: f64, lo: f64) -> f64 {
    if m.ln_density(lo) <= goal {
        return lo;
    }
    let mut hi = lo + lo.abs().max(1.0);
    let mut guard = 0;
    while m.ln_density(hi) > goal && guard < 2000 {
        hi = lo + 2.0 * (hi - lo);
        guard += 1;
    }
    special::bisect_increasing(|q| goal - m.ln_density(q), lo, hi, 1e-15, 200)
}

/// Marginal-DRO optimum for rectangular unsafe sets.
///
/// Minimizes Σ m_j q_j subject to Σ F̄_j(q_j) ≤ α. Stationarity gives
/// m_j = λ f_j(q_j); the multiplier is found by bisection on the budget.
pub fn solve_marginal_dro(inst: &CcpInstance, alpha: f64) -> Result<SolveRecord> {
    check_level(alpha)?;
    let Family::RhsNetwork(net) = &inst.family else {
        return Err(Error::Unsupported("marginal DRO needs rectangular unsafe sets".into()));
    };
    if inst.joint_mode == JointMode::Individual {
        // Each constraint sees a single marginal, which the ambiguity set fixes.
        let mut rec = solve_ccp(inst, alpha)?;
        rec.method = format!("marginal_dro+{}", rec.method);
        return Ok(rec);
    }
    let ms = &inst.model.marginals;
    let unit = net.unit_costs();
    let q_lo: Vec<f64> = ms.iter().map(|m| m.inverse_survival(alpha)).collect::<std::result::Result<_, _>>()?;
    let budget = |q: &[f64]| ms.iter().zip(q).map(|(m, v)| m.survival(*v)).sum::<f64>();
    let q = if budget(&q_lo) <= alpha {
        q_lo
    } else {
        let q_at = |ln_lambda: f64| -> Vec<f64> {
            ms.iter().zip(&unit).zip(&q_lo).map(|((m, mj), lo)| density_level(m, mj.ln() - ln_lambda, *lo)).collect()
        };
        let (mut lo, mut hi) = (-50.0, 50.0);
        while budget(&q_at(lo)) <= alpha {
            lo -= 50.0;
        }
        while budget(&q_at(hi)) > alpha {
            hi += 50.0;
            if hi > 1e4 {
                return Err(Error::NoSolution("union budget cannot be met".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if budget(&q_at(mid)) > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        q_at(hi)
    };
    let (x, cost) = net.solve_targets_lp(&q.iter().map(|v| v.max(0.0)).collect::<Vec<_>>())?;
    let per: Vec<f64> = ms.iter().zip(&q).map(|(m, v)| m.survival(*v)).collect();
    let p = ProbEstimate::exact_ln(marginal_worst_case(inst, &q).ln(), per);
    Ok(SolveRecord { x, cost, alpha_target: alpha, p, method: "marginal_dro_union".into(), targets: Some(q), warnings: Vec::new() })
}

/// Certified lower-bound curve on a DRO optimal cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloorCurve {
    pub alpha_grid: Vec<f64>,
    pub floor_costs: Vec<f64>,
    pub nominal_costs: Vec<f64>,
    /// Mixture weight δ (Wasserstein) or the Student-t degrees of freedom (moment).
    pub parameter: f64,
}

impl FloorCurve {
    /// Least-squares slope of ln|floor| against ln(1/α).
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .alpha_grid
            .iter()
            .zip(&self.floor_costs)
            .filter(|(_, c)| c.is_finite() && **c != 0.0)
            .map(|(a, c)| (-a.ln(), c.abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,floor_cost,nominal_cost\n");
        for i in 0..self.alpha_grid.len() {
            s.push_str(&format!("{},{},{}\n", self.alpha_grid[i], self.floor_costs[i], self.nominal_costs[i]));
        }
        s
    }
}

fn check_grid(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::Config("empty α grid".into()));
    }
    alphas.iter().try_for_each(|a| check_level(*a))
}

fn nominal_costs(inst: &CcpInstance, alphas: &[f64]) -> Vec<f64> {
    alphas.par_iter().map(|a| solve_ccp(inst, *a).map_or(f64::NAN, |r| r.cost)).collect()
}

/// Smallest q with (1−δ)F̄_P(q) + δF̄_T(q) ≤ α.
fn mixture_quantile(p: &MarginalModel, t: &MarginalModel, delta: f64, alpha: f64) -> Result<f64> {
    let qp = p.inverse_survival(alpha)?;
    let qt = t.inverse_survival(alpha)?;
    let sf = |q: f64| (1.0 - delta) * p.survival(q) + delta * t.survival(q);
    Ok(special::bisect_increasing(|q| alpha - sf(q), qp.min(qt), qp.max(qt), 1e-15, 200))
}

/// Floor on the p-Wasserstein DRO cost from the mixture (1−δ)P + δT, where T
/// is a standard multivariate Student-t with p+ε degrees of freedom and δ
/// spends the whole transport budget η.
///
/// Network instances use per-DC mixture quantiles, which is exact in
/// Individual mode and a relaxation in Joint mode. Bilinear instances use the
/// relaxation P_T(violation) ≤ α/δ.
pub fn certify_wasserstein_floor(inst: &CcpInstance, p_order: f64, eta: f64, alphas: &[f64], eps: f64) -> Result<FloorCurve> {
    check_grid(alphas)?;
    if !(p_order >= 1.0 && eta > 0.0 && eps > 0.0) {
        return Err(Error::Config("need p ≥ 1, η > 0 and ε > 0".into()));
    }
    let d = inst.model.dim();
    let nu = p_order + eps;
    // ‖ξ‖₂^p ≤ d^{p−1} Σ|ξ_j|^p.
    let m_p = (d as f64).powf(p_order - 1.0) * inst.model.marginals.iter().map(|m| m.abs_moment(p_order)).sum::<f64>();
    let m_t = special::mvt_norm_moment(nu, d, p_order);
    if !(m_p.is_finite() && m_t.is_finite()) {
        return Err(Error::BudgetInfeasible(format!("E‖ξ‖^{p_order} is not finite under the nominal law")));
    }
    let spread = (m_p.powf(1.0 / p_order) + m_t.powf(1.0 / p_order)).powf(p_order);
    let delta = (eta / spread).min(1.0);
    if !(delta > 0.0) {
        return Err(Error::BudgetInfeasible("mixture weight vanishes".into()));
    }
    let t = MarginalModel::student_t(nu, 1.0, 0.0)?;
    let floors = match &inst.family {
        Family::RhsNetwork(net) => alphas
            .par_iter()
            .map(|&a| {
                let q = inst.model.marginals.iter().map(|m| mixture_quantile(m, &t, delta, a)).collect::<Result<Vec<_>>>()?;
                Ok(net.cost_of_targets(&q))
            })
            .collect::<Result<Vec<_>>>()?,
        Family::Bilinear(b) => alphas
            .par_iter()
            .map(|&a| {
                let level = a / delta;
                if level >= 0.5 {
                    return Err(Error::Unsupported(format!("relaxed level α/δ = {level:.3} is not in the tail")));
                }
                let kappa = t.inverse_survival(level)?;
                let zero = vec![0.0; d];
                let (x, _) = crate::ccp::bilinear::solve_soc_system(b, &zero, &linalg::identity(d), &vec![kappa; b.b.len()])?;
                Ok(linalg::dot(&b.cost, &x))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(FloorCurve { alpha_grid: alphas.to_vec(), floor_costs: floors, nominal_costs: nominal_costs(inst, alphas), parameter: delta })
}

/// Dispersion constraint of a moment ambiguity set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dispersion {
    /// Cov(ξ) ⪯ Σ.
    Cov { sigma: Mat },
    /// E|ξ_i − μ_i|^p ≤ σ_i.
    AbsDev { p: f64, sigma: Vec<f64> },
    /// E(ξ_i − μ_i)₊^p ≤ σ_i.
    SemiDev { p: f64, sigma: Vec<f64> },
    /// E‖ξ − μ‖^p ≤ σ.
    NormDev { p: f64, sigma: f64 },
}

impl Dispersion {
    fn order(&self) -> f64 {
        match self {
            Dispersion::Cov { .. } => 2.0,
            Dispersion::AbsDev { p, .. } | Dispersion::SemiDev { p, .. } | Dispersion::NormDev { p, .. } => *p,
        }
    }
}

/// The Student-t member of the moment set with p+ε degrees of freedom.
pub fn moment_member(dispersion: &Dispersion, mu: &[f64], eps: f64) -> Result<JointModel> {
    let d = mu.len();
    let p = dispersion.order();
    if !(p >= 1.0 && eps > 0.0) {
        return Err(Error::Config("need p ≥ 1 and ε > 0".into()));
    }
    let nu = p + eps;
    let diag = |tau: Vec<f64>| -> Mat { (0..d).map(|i| (0..d).map(|j| if i == j { tau[i] * tau[i] } else { 0.0 }).collect()).collect() };
    let per_coord = |sigma: &[f64], factor: f64| -> Result<Vec<f64>> {
        if sigma.len() != d || sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("need one positive dispersion bound per coordinate".into()));
        }
        let m = special::t_abs_moment(nu, p);
        Ok(sigma.iter().map(|s| (factor * s / m).powf(1.0 / p)).collect())
    };
    let shape = match dispersion {
        Dispersion::Cov { sigma } => {
            if sigma.len() != d {
                return Err(Error::Config("covariance bound must be d×d".into()));
            }
            let k = (nu - 2.0) / nu;
            sigma.iter().map(|r| r.iter().map(|v| v * k).collect()).collect()
        }
        Dispersion::AbsDev { sigma, .. } => diag(per_coord(sigma, 1.0)?),
        // The positive part of a symmetric variable carries half the absolute moment.
        Dispersion::SemiDev { sigma, .. } => diag(per_coord(sigma, 2.0)?),
        Dispersion::NormDev { sigma, .. } => {
            if !(*sigma > 0.0) {
                return Err(Error::Config("norm dispersion bound must be positive".into()));
            }
            let tau = (sigma / special::mvt_norm_moment(nu, d, p)).powf(1.0 / p);
            diag(vec![tau; d])
        }
    };
    Ok(JointModel::elliptical(Generator::StudentT { dof: nu }, mu.to_vec(), shape)?)
}

/// Floor on the moment-DRO cost: the nominal optimum under the Student-t
/// member, with joint constraints relaxed to individual ones.
pub fn certify_moment_floor(inst: &CcpInstance, dispersion: &Dispersion, mu: &[f64], alphas: &[f64], eps: f64) -> Result<FloorCurve> {
    check_grid(alphas)?;
    if mu.len() != inst.model.dim() {
        return Err(Error::Config(format!("μ has {} entries for a {}-dimensional model", mu.len(), inst.model.dim())));
    }
    let q0 = moment_member(dispersion, mu, eps)?;
    let nu = dispersion.order() + eps;
    let relaxed = inst.with_mode(JointMode::Individual).with_model(q0)?;
    let floors = alphas.par_iter().map(|a| solve_ccp(&relaxed, *a).map(|r| r.cost)).collect::<Result<Vec<_>>>()?;
    Ok(FloorCurve { alpha_grid: alphas.to_vec(), floor_costs: floors, nominal_costs: nominal_costs(inst, alphas), parameter: nu })
}
