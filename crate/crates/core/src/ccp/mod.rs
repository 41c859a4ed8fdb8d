//! Chance-constrained instances, violation-probability oracles and solvers.
//!
//! Two structured families are supported. `RhsNetwork` is capacity sizing on
//! a bipartite factory/DC graph with random demands on the right-hand side
//! (`r = 1`). `Bilinear` has constraints `xᵀB_k ξ ≤ u_k` (`r = −1`).

mod apx;
pub(crate) mod bilinear;
pub mod generator;
pub(crate) mod network;
mod sweep;

pub use apx::{solve_ccpapx, rate_functional, ApxSolution};
pub use bilinear::{soc_min_linear, Bilinear};
pub use network::{bivariate_normal_upper, Network};
pub use sweep::{scaling_sweep, SweepRow, SweepTable};

use crate::distributions::{Copula, JointModel, MarginalModel};
use crate::error::{check_level, Error, Result};
use crate::linalg;
use crate::optim::wilson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointMode {
    Joint,
    Individual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Family {
    RhsNetwork(Network),
    Bilinear(Bilinear),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpInstance {
    pub family: Family,
    pub joint_mode: JointMode,
    pub model: JointModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    ClosedForm,
    MonteCarlo { n: usize, seed: u64 },
}

/// Violation probability with a 95% interval (degenerate for closed forms).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbEstimate {
    pub p: f64,
    pub ln_p: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// Per-constraint probabilities; `p` is their max in individual mode.
    pub per_constraint: Vec<f64>,
}

impl ProbEstimate {
    pub fn exact_ln(ln_p: f64, per_constraint: Vec<f64>) -> Self {
        let p = ln_p.exp();
        ProbEstimate { p, ln_p, lower: p, upper: p, exact: true, per_constraint }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    /// p ≤ α for exact values, lower CI bound ≤ α for estimates.
    pub fn consistent_with(&self, alpha: f64) -> bool {
        if self.exact {
            self.p <= alpha * (1.0 + 1e-9)
        } else {
            self.lower <= alpha
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRecord {
    pub x: Vec<f64>,
    pub cost: f64,
    pub alpha_target: f64,
    pub p: ProbEstimate,
    pub method: String,
    /// Demand targets q_j for network instances.
    pub targets: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl CcpInstance {
    pub fn new(family: Family, joint_mode: JointMode, model: JointModel) -> Result<Self> {
        let inst = CcpInstance { family, joint_mode, model: model.checked()? };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.model.dim();
        match &self.family {
            Family::RhsNetwork(net) => net.validate(d),
            Family::Bilinear(b) => b.validate(d),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: CcpInstance = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        CcpInstance::new(raw.family, raw.joint_mode, raw.model)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance serializes")
    }

    /// Decision homogeneity degree.
    pub fn r(&self) -> f64 {
        match self.family {
            Family::RhsNetwork(_) => 1.0,
            Family::Bilinear(_) => -1.0,
        }
    }

    /// Constraint-value scaling degree.
    pub fn rho(&self) -> f64 {
        0.0
    }

    pub fn n_constraints(&self) -> usize {
        match &self.family {
            Family::RhsNetwork(n) => n.dcs,
            Family::Bilinear(b) => b.b.len(),
        }
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::RhsNetwork(n) => n.cost(x),
            Family::Bilinear(b) => linalg::dot(&b.cost, x),
        }
    }

    /// Decision scaled along its ray: `t^r x`.
    pub fn scale_decision(&self, x: &[f64], t: f64) -> Vec<f64> {
        let f = t.powf(self.r());
        x.iter().map(|v| v * f).collect()
    }

    pub fn with_mode(&self, mode: JointMode) -> Self {
        let mut c = self.clone();
        c.joint_mode = mode;
        c
    }

    pub fn with_model(&self, model: JointModel) -> Result<Self> {
        CcpInstance::new(self.family.clone(), self.joint_mode, model)
    }

    /// Constraint margins `g_k(x, ξ)`; violation when any is positive.
    pub(crate) fn margins_fn(&self, x: &[f64]) -> Box<dyn Fn(&[f64], &mut [f64]) + Sync + '_> {
        match &self.family {
            Family::RhsNetwork(n) => {
                let q = n.demand_targets(x);
                Box::new(move |xi: &[f64], out: &mut [f64]| {
                    for ((o, v), qj) in out.iter_mut().zip(xi).zip(&q) {
                        *o = v - qj;
                    }
                })
            }
            Family::Bilinear(b) => {
                let a: Vec<Vec<f64>> = b.b.iter().map(|bk| linalg::mat_t_vec(bk, x)).collect();
                let u = b.u.clone();
                Box::new(move |xi: &[f64], out: &mut [f64]| {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = linalg::dot(&a[k], xi) - u[k];
                    }
                })
            }
        }
    }
}

/// Closed-form ln of the standardized generator survival when the model is elliptical.
pub(crate) fn elliptical_generator(model: &JointModel) -> Option<(MarginalModel, Vec<f64>, linalg::Mat)> {
    model.elliptical_params()
}

pub fn violation_probability(inst: &CcpInstance, x: &[f64], method: OracleMethod) -> Result<ProbEstimate> {
    match method {
        OracleMethod::ClosedForm => closed_form(inst, x),
        OracleMethod::MonteCarlo { n, seed } => Ok(monte_carlo(inst, x, n, seed)),
    }
}

fn closed_form(inst: &CcpInstance, x: &[f64]) -> Result<ProbEstimate> {
    match &inst.family {
        Family::RhsNetwork(net) => {
            let q = net.demand_targets(x);
            network::closed_form_targets(inst, &q)
        }
        Family::Bilinear(b) => {
            let Some((gen, mu, sigma)) = elliptical_generator(&inst.model) else {
                return Err(Error::OracleUnavailable("bilinear constraints under a non-elliptical model".into()));
            };
            if inst.joint_mode == JointMode::Joint && b.b.len() > 1 {
                return Err(Error::OracleUnavailable("joint probability of several bilinear constraints".into()));
            }
            let per: Vec<f64> = (0..b.b.len()).map(|k| b.ln_violation(k, x, &gen, &mu, &sigma)).collect();
            let ln_p = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok(ProbEstimate::exact_ln(ln_p, per.iter().map(|v| v.exp()).collect()))
        }
    }
}

/// Empirical violation frequency with Wilson intervals, deterministic in `seed`.
pub fn monte_carlo(inst: &CcpInstance, x: &[f64], n: usize, seed: u64) -> ProbEstimate {
    use crate::distributions::BLOCK_ROWS;
    let d = inst.model.dim();
    let k = inst.n_constraints();
    let margins = inst.margins_fn(x);
    let blocks = n.div_ceil(BLOCK_ROWS);
    let counts: Vec<(u64, Vec<u64>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let rows = BLOCK_ROWS.min(n - b * BLOCK_ROWS);
            let mut buf = vec![0.0; rows * d];
            inst.model.sample_block(seed, b as u64, &mut buf);
            let mut g = vec![0.0; k];
            let mut any = 0u64;
            let mut each = vec![0u64; k];
            for row in buf.chunks(d) {
                margins(row, &mut g);
                let mut hit = false;
                for (e, v) in each.iter_mut().zip(&g) {
                    if *v > 0.0 {
                        *e += 1;
                        hit = true;
                    }
                }
                any += hit as u64;
            }
            (any, each)
        })
        .collect();
    let mut any = 0u64;
    let mut each = vec![0u64; k];
    for (a, e) in counts {
        any += a;
        for (t, v) in each.iter_mut().zip(e) {
            *t += v;
        }
    }
    let per: Vec<f64> = each.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
    let count = match inst.joint_mode {
        JointMode::Joint => any,
        JointMode::Individual => each.iter().copied().max().unwrap_or(0),
    };
    let (lower, upper) = wilson(count, n as u64);
    let p = count as f64 / n.max(1) as f64;
    ProbEstimate { p, ln_p: p.ln(), lower, upper, exact: false, per_constraint: per }
}

/// Closed form where available, otherwise Monte Carlo with `n` draws.
pub fn best_oracle(inst: &CcpInstance, x: &[f64], n: usize, seed: u64) -> Result<ProbEstimate> {
    match closed_form(inst, x) {
        Ok(p) => Ok(p),
        Err(Error::OracleUnavailable(_)) => Ok(monte_carlo(inst, x, n, seed)),
        Err(e) => Err(e),
    }
}

pub fn has_closed_form(inst: &CcpInstance) -> bool {
    match &inst.family {
        Family::RhsNetwork(net) => {
            inst.joint_mode == JointMode::Individual
                || net.dcs == 1
                || matches!(inst.model.copula, Copula::Independent)
                || (matches!(inst.model.copula, Copula::GaussianCopula { .. }) && inst.model.dim() == 2)
        }
        Family::Bilinear(b) => {
            elliptical_generator(&inst.model).is_some() && (b.b.len() == 1 || inst.joint_mode == JointMode::Individual)
        }
    }
}

/// Default Monte Carlo budget for level α: max(10⁵, 100/α) capped at 10⁷.
pub fn default_mc_n(alpha: f64) -> usize {
    ((100.0 / alpha).max(1e5)).min(1e7).ceil() as usize
}

/// Solve CCP(α) with the exact path for the instance's structure.
pub fn solve_ccp(inst: &CcpInstance, alpha: f64) -> Result<SolveRecord> {
    solve_ccp_seeded(inst, alpha, 0x5EED)
}

/// As `solve_ccp`; `seed` drives the sample-based fallback for dependent models.
pub fn solve_ccp_seeded(inst: &CcpInstance, alpha: f64, seed: u64) -> Result<SolveRecord> {
    check_level(alpha)?;
    match &inst.family {
        Family::RhsNetwork(net) => {
            if inst.joint_mode == JointMode::Individual || net.dcs == 1 {
                return network::solve_individual(inst, net, alpha);
            }
            match &inst.model.copula {
                Copula::Independent => network::solve_joint_independent(inst, net, alpha),
                Copula::GaussianCopula { .. } if inst.model.dim() == 2 => network::solve_joint_gaussian_pair(inst, net, alpha),
                _ => delegate_to_cvar(inst, alpha, seed),
            }
        }
        Family::Bilinear(b) => {
            if let Some((gen, mu, sigma)) = elliptical_generator(&inst.model) {
                if b.b.len() == 1 || inst.joint_mode == JointMode::Individual {
                    let z = gen.inverse_survival(alpha)?;
                    return bilinear::solve_quantile(inst, b, &mu, &sigma, &vec![z; b.b.len()], alpha, "soc_exact");
                }
            }
            delegate_to_cvar(inst, alpha, seed)
        }
    }
}

fn delegate_to_cvar(inst: &CcpInstance, alpha: f64, seed: u64) -> Result<SolveRecord> {
    use crate::approx::{line_search_refine, solve_cvar_approx, ApproxConfig, CvarEstimator};
    let n = default_mc_n(alpha);
    let cfg = ApproxConfig {
        eta_weights: vec![1.0; inst.n_constraints()],
        cvar_estimator: CvarEstimator::SampleAverage { n, seed },
    };
    let apx = solve_cvar_approx(inst, alpha, &cfg)?;
    let mut rec = line_search_refine(inst, &apx.x, alpha, OracleMethod::MonteCarlo { n, seed: crate::rng::derive_seed(seed, 1) })?;
    rec.method = "cvar_line_search".into();
    rec.warnings.extend(apx.warnings);
    Ok(rec)
}
