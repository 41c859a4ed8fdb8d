//! Scaling functions and growth-rate diagnostics.

use crate::distributions::{DistError, JointModel, TailClass};
use serde::Serialize;

/// s_α = F̄⁻¹(α) for the heaviest marginal tail, taken as the max of the
/// per-marginal quantiles.
pub fn s_alpha(j: &JointModel, alpha: f64) -> Result<f64, DistError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DistError::DomainError(alpha));
    }
    Ok(ln_s_alpha_ln_raw(j, alpha.ln(), false))
}

/// ln s_α at level `exp(ln_alpha)`; valid when s_α is positive.
pub fn ln_s_alpha_ln(j: &JointModel, ln_alpha: f64) -> f64 {
    ln_s_alpha_ln_raw(j, ln_alpha, true)
}

fn ln_s_alpha_ln_raw(j: &JointModel, ln_alpha: f64, log: bool) -> f64 {
    j.marginals
        .iter()
        .map(|m| if log { m.ln_inverse_survival_ln(ln_alpha) } else { m.inverse_survival_ln(ln_alpha) })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Leading-order s_α from the tail constants alone: `(c/α)^{1/γ}` for heavy
/// tails and `(ln(1/α)/c)^{1/γ}` for light tails.
pub fn asymptotic_s_alpha(j: &JointModel, alpha: f64) -> f64 {
    let prof = j.tail_profile();
    match prof.class {
        TailClass::Heavy => {
            let c = prof.c.iter().cloned().fold(0.0, f64::max);
            (c / alpha).powf(1.0 / prof.gamma)
        }
        TailClass::Light => {
            let c = prof.c.iter().cloned().fold(f64::INFINITY, f64::min);
            ((1.0 / alpha).ln() / c).powf(1.0 / prof.gamma)
        }
    }
}

/// v*·s_α^r.
pub fn predict_cost(v_star: f64, r: f64, j: &JointModel, alpha: f64) -> Result<f64, DistError> {
    if r == 0.0 {
        return Ok(v_star);
    }
    Ok(v_star * s_alpha(j, alpha)?.powf(r))
}

/// v*·s_α^r with the leading-order s_α.
pub fn predict_cost_asymptotic(v_star: f64, r: f64, j: &JointModel, alpha: f64) -> f64 {
    v_star * asymptotic_s_alpha(j, alpha).powf(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Predictor {
    pub v_star: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    /// log(1/α)
    Log,
    /// log log(1/α)
    LogLog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub alphas: Vec<f64>,
    pub s_values: Vec<f64>,
    pub fitted_index: f64,
    pub regressor: Regressor,
    pub predictor: Option<Predictor>,
}

impl ScalingReport {
    pub fn with_predictor(mut self, v_star: f64, r: f64) -> Self {
        self.predictor = Some(Predictor { v_star, r });
        self
    }

    pub fn predicted(&self) -> Vec<Option<f64>> {
        self.s_values
            .iter()
            .map(|s| self.predictor.map(|p| p.v_star * s.powf(p.r)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,s_alpha,predicted_cost\n");
        for ((a, s), p) in self.alphas.iter().zip(&self.s_values).zip(self.predicted()) {
            let p = p.map(|v| format!("{v:.10e}")).unwrap_or_default();
            out.push_str(&format!("{a:.6e},{s:.10e},{p}\n"));
        }
        out
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Regress log s_α on log(1/α) (heavy) or log log(1/α) (light) using only
/// grid points within two decades of the smallest α.
pub fn growth_diagnostic(j: &JointModel, alpha_grid: &[f64]) -> Result<ScalingReport, DistError> {
    let mut alphas: Vec<f64> = alpha_grid.to_vec();
    alphas.sort_by(|a, b| b.partial_cmp(a).expect("finite grid"));
    alphas.dedup();
    let s_values = alphas.iter().map(|&a| s_alpha(j, a)).collect::<Result<Vec<_>, _>>()?;
    let class = j.tail_profile().class;
    let regressor = match class {
        TailClass::Heavy => Regressor::Log,
        TailClass::Light => Regressor::LogLog,
    };
    let a_min = alphas.last().copied().unwrap_or(f64::NAN);
    let window: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] <= a_min * 100.0 * (1.0 + 1e-12)).collect();
    let x: Vec<f64> = window
        .iter()
        .map(|&i| {
            let l = (1.0 / alphas[i]).ln();
            match regressor {
                Regressor::Log => l,
                Regressor::LogLog => l.ln(),
            }
        })
        .collect();
    let y: Vec<f64> = window.iter().map(|&i| s_values[i].ln()).collect();
    let fitted_index = if x.len() >= 2 { ols_slope(&x, &y) } else { f64::NAN };
    Ok(ScalingReport { alphas, s_values, fitted_index, regressor, predictor: None })
}

/// Logarithmically spaced grid from `hi` down to `lo` with `per_decade` points per decade.
pub fn log_grid(hi: f64, lo: f64, per_decade: usize) -> Vec<f64> {
    let (lh, ll) = (hi.log10(), lo.log10());
    let steps = ((lh - ll) * per_decade as f64).round() as usize;
    (0..=steps).map(|k| 10f64.powf(lh - (lh - ll) * k as f64 / steps as f64)).collect()
}
