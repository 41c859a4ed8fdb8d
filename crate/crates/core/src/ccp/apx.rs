//! The limiting program `min c(x) s.t. I(x) ≤ 1` and its rate functional.

use super::{CcpInstance, Family, JointMode};
use crate::distributions::{Copula, TailClass};
use crate::error::{Error, Result};
use crate::linalg;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApxSolution {
    pub v_star: f64,
    pub x_star: Vec<f64>,
    /// Scaled demand targets q̃ for network instances.
    pub targets: Option<Vec<f64>>,
    pub method: String,
}

fn nonneg_correlation(copula: &Copula) -> bool {
    match copula {
        Copula::GaussianCopula { correlation } => correlation.iter().flatten().all(|v| *v >= 0.0),
        Copula::Elliptical { dispersion, .. } => dispersion.iter().flatten().all(|v| *v >= 0.0),
        Copula::Independent => true,
    }
}

fn heavy_elliptical(inst: &CcpInstance) -> bool {
    matches!(inst.model.copula, Copula::Elliptical { .. }) && inst.model.tail_profile().class == TailClass::Heavy
}

/// Per-coordinate maximum dispersion σ_max² of an elliptical model.
fn sigma_max_sq(sigma: &linalg::Mat) -> f64 {
    (0..sigma.len()).map(|i| sigma[i][i]).fold(0.0, f64::max)
}

/// The limiting rate functional `I(x)`.
pub fn rate_functional(inst: &CcpInstance, x: &[f64]) -> Result<f64> {
    let prof = inst.model.tail_profile();
    let g = prof.gamma;
    match &inst.family {
        Family::RhsNetwork(net) => {
            let q = net.demand_targets(x);
            match prof.class {
                TailClass::Light => {
                    if !nonneg_correlation(&inst.model.copula) {
                        return Err(Error::Unsupported("negative correlation in the limiting program".into()));
                    }
                    let c_min = prof.c.iter().cloned().fold(f64::INFINITY, f64::min);
                    let worst = q
                        .iter()
                        .zip(&prof.c)
                        .filter(|(_, c)| c.is_finite())
                        .map(|(qj, cj)| if *qj <= 0.0 { 0.0 } else { cj * qj.powf(g) })
                        .fold(f64::INFINITY, f64::min);
                    Ok(c_min / worst)
                }
                TailClass::Heavy => {
                    let c_max = prof.c.iter().cloned().fold(0.0, f64::max);
                    let terms = q.iter().zip(&prof.c).filter(|(_, c)| **c > 0.0).map(|(qj, cj)| {
                        if *qj <= 0.0 {
                            f64::INFINITY
                        } else {
                            cj * qj.powf(-g)
                        }
                    });
                    match inst.joint_mode {
                        JointMode::Individual => Ok(terms.fold(0.0, f64::max) / c_max),
                        JointMode::Joint if heavy_elliptical(inst) => {
                            Err(Error::Unsupported("joint limiting mass under a heavy elliptical model".into()))
                        }
                        JointMode::Joint => Ok(terms.sum::<f64>() / c_max),
                    }
                }
            }
        }
        Family::Bilinear(b) => {
            let Some((_, _, sigma)) = inst.model.elliptical_params() else {
                return Err(Error::Unsupported("bilinear limiting program needs an elliptical model".into()));
            };
            if prof.class == TailClass::Heavy && inst.joint_mode == JointMode::Joint && b.b.len() > 1 {
                return Err(Error::Unsupported("joint limiting mass of several bilinear constraints".into()));
            }
            let s2 = sigma_max_sq(&sigma);
            let worst = b
                .b
                .iter()
                .zip(&b.u)
                .map(|(bk, uk)| {
                    let a = linalg::mat_t_vec(bk, x);
                    linalg::quad_form(&sigma, &a) / (s2 * uk * uk)
                })
                .fold(0.0, f64::max);
            Ok(worst.powf(0.5 * g))
        }
    }
}

/// Solve the limiting program for the supported families.
pub fn solve_ccpapx(inst: &CcpInstance) -> Result<ApxSolution> {
    let prof = inst.model.tail_profile();
    let g = prof.gamma;
    match &inst.family {
        Family::RhsNetwork(net) => {
            let q: Vec<f64> = match prof.class {
                TailClass::Light => {
                    if !nonneg_correlation(&inst.model.copula) {
                        return Err(Error::Unsupported("negative correlation in the limiting program".into()));
                    }
                    let c_min = prof.c.iter().cloned().fold(f64::INFINITY, f64::min);
                    prof.c.iter().map(|c| if c.is_finite() { (c_min / c).powf(1.0 / g) } else { 0.0 }).collect()
                }
                TailClass::Heavy => {
                    let c_max = prof.c.iter().cloned().fold(0.0, f64::max);
                    match inst.joint_mode {
                        JointMode::Individual => prof.c.iter().map(|c| (c / c_max).powf(1.0 / g)).collect(),
                        JointMode::Joint if heavy_elliptical(inst) => {
                            return Err(Error::Unsupported("joint limiting mass under a heavy elliptical model".into()))
                        }
                        JointMode::Joint => {
                            // Stationarity: m_j = λγ c_j q_j^{−γ−1}, so q_j = κ (c_j/m_j)^{1/(γ+1)}.
                            let unit = net.unit_costs();
                            let base: Vec<f64> = prof.c.iter().zip(&unit).map(|(c, m)| (c / m).powf(1.0 / (g + 1.0))).collect();
                            let mass: f64 = prof
                                .c
                                .iter()
                                .zip(&base)
                                .filter(|(c, _)| **c > 0.0)
                                .map(|(c, b)| c * b.powf(-g))
                                .sum();
                            let kappa = (mass / c_max).powf(1.0 / g);
                            base.iter().map(|b| kappa * b).collect()
                        }
                    }
                }
            };
            let (x, v) = net.solve_targets_lp(&q)?;
            Ok(ApxSolution { v_star: v, x_star: x, targets: Some(q), method: "network_closed_form".into() })
        }
        Family::Bilinear(b) => {
            let Some((_, mu, sigma)) = inst.model.elliptical_params() else {
                return Err(Error::Unsupported("bilinear limiting program needs an elliptical model".into()));
            };
            if prof.class == TailClass::Heavy && inst.joint_mode == JointMode::Joint && b.b.len() > 1 {
                return Err(Error::Unsupported("joint limiting mass of several bilinear constraints".into()));
            }
            // x'M_k x ≤ σ_max² u_k² is the centred second-order cone with κ = 1/σ_max.
            let kappa = 1.0 / sigma_max_sq(&sigma).sqrt();
            let zero = vec![0.0; mu.len()];
            let (x, _) = super::bilinear::solve_soc_system(b, &zero, &sigma, &vec![kappa; b.b.len()])?;
            let v = linalg::dot(&b.cost, &x);
            Ok(ApxSolution { v_star: v, x_star: x, targets: None, method: "soc_closed_form".into() })
        }
    }
}
