use super::{solve_ccp, solve_ccpapx, CcpInstance};
use crate::error::Result;
use crate::scaling::s_alpha;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub s_alpha: f64,
    pub cost: f64,
    /// `v* s_α^r`.
    pub predicted: f64,
    pub ratio: f64,
    /// Coordinatewise `x_α / (x* s_α^r)` on demand targets (network) or decisions.
    pub coord_ratios: Vec<f64>,
    pub method: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub v_star: Option<f64>,
    pub r: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn costs_monotone(&self) -> bool {
        let ok: Vec<&SweepRow> = self.rows.iter().filter(|r| r.error.is_none()).collect();
        ok.windows(2).all(|w| (w[1].cost - w[0].cost) * (w[0].alpha - w[1].alpha) >= -1e-9 * w[0].cost.abs())
    }

    /// Max relative spread of `cost / s_α^r` over rows with `alpha ≤ hi`.
    pub fn ratio_variation(&self, hi: f64) -> f64 {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|row| row.alpha <= hi && row.error.is_none())
            .map(|row| row.cost / row.s_alpha.powf(self.r))
            .collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let up = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (up - lo) / lo.abs()
    }
}

/// Solve CCP(α) on each grid point and compare with the limiting prediction.
pub fn scaling_sweep(inst: &CcpInstance, alphas: &[f64]) -> Result<SweepTable> {
    let apx = solve_ccpapx(inst).ok();
    let r = inst.r();
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let s = s_alpha(&inst.model, alpha)?;
            let predicted = apx.as_ref().map_or(f64::NAN, |a| a.v_star * s.powf(r));
            let row = match solve_ccp(inst, alpha) {
                Ok(rec) => {
                    let coord_ratios = match (&apx, &rec.targets) {
                        (Some(a), Some(q)) => a.targets.as_ref().map_or(Vec::new(), |qs| {
                            q.iter().zip(qs).map(|(qa, qs)| qa / (qs * s.powf(r))).collect()
                        }),
                        (Some(a), None) => rec.x.iter().zip(&a.x_star).map(|(xa, xs)| xa / (xs * s.powf(r))).collect(),
                        _ => Vec::new(),
                    };
                    SweepRow {
                        alpha,
                        s_alpha: s,
                        cost: rec.cost,
                        predicted,
                        ratio: rec.cost / predicted,
                        coord_ratios,
                        method: rec.method,
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    alpha,
                    s_alpha: s,
                    cost: f64::NAN,
                    predicted,
                    ratio: f64::NAN,
                    coord_ratios: Vec::new(),
                    method: String::new(),
                    error: Some(e.code().to_string()),
                },
            };
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { v_star: apx.map(|a| a.v_star), r, rows })
}
