//! Sample-based solutions: SAA, the extrapolated trajectory `t^r x̂_{α₀}`, and
//! the P-model budget rule.

use crate::ccp::network::{closed_form_targets, kkt_split, NELDER_MEAD_MAX_DIM};
use crate::ccp::{default_mc_n, monte_carlo, solve_ccp, CcpInstance, Family, JointMode, ProbEstimate, SolveRecord};
use crate::distributions::{Copula, JointModel, TailClass};
use crate::error::{check_level, Error, Result};
use crate::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;

/// N×d sample matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub n: usize,
    pub d: usize,
    pub data: Vec<f64>,
    pub seed: Option<u64>,
    pub source: Option<String>,
    pub tail_index_estimate: Option<f64>,
}

impl SampleSet {
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.is_empty() || data.len() % d != 0 {
            return Err(Error::Config(format!("{} values do not form rows of width {d}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("samples must be finite".into()));
        }
        Ok(SampleSet { n: data.len() / d, d, data, seed: None, source: None, tail_index_estimate: None })
    }

    pub fn from_model(model: &JointModel, n: usize, seed: u64) -> Self {
        let s = model.sample(n, seed);
        SampleSet { n: s.n, d: s.d, data: s.data, seed: Some(seed), source: Some(model.to_toml()), tail_index_estimate: None }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.d + j]).collect()
    }

    /// Headerless CSV, one sample per line.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut d = 0;
        let mut data = Vec::new();
        for (ln, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("line {}: {e}", ln + 1))))
                .collect::<Result<Vec<_>>>()?;
            if d == 0 {
                d = row.len();
            } else if row.len() != d {
                return Err(Error::Config(format!("line {} has {} fields, expected {d}", ln + 1, row.len())));
            }
            data.extend(row);
        }
        SampleSet::new(d, data)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

fn network_of(inst: &CcpInstance) -> Result<&crate::ccp::Network> {
    match &inst.family {
        Family::RhsNetwork(n) => Ok(n),
        Family::Bilinear(_) => Err(Error::Unsupported("sample-based solvers cover network instances".into())),
    }
}

fn check_dims(s: &SampleSet, inst: &CcpInstance) -> Result<()> {
    if s.d != inst.model.dim() {
        return Err(Error::Config(format!("samples have {} columns for a {}-dimensional model", s.d, inst.model.dim())));
    }
    Ok(())
}

/// Empirical violation frequency of `x`.
pub fn saa_probability(s: &SampleSet, inst: &CcpInstance, x: &[f64]) -> f64 {
    let k = inst.n_constraints();
    let margins = inst.margins_fn(x);
    let mut g = vec![0.0; k];
    let mut any = 0usize;
    let mut each = vec![0usize; k];
    for i in 0..s.n {
        margins(s.row(i), &mut g);
        let mut hit = false;
        for (e, v) in each.iter_mut().zip(&g) {
            if *v > 0.0 {
                *e += 1;
                hit = true;
            }
        }
        any += hit as usize;
    }
    let count = match inst.joint_mode {
        JointMode::Joint => any,
        JointMode::Individual => each.into_iter().max().unwrap_or(0),
    };
    count as f64 / s.n as f64
}

/// Out-of-sample probability of network targets under the instance's model.
pub fn oracle_probability(inst: &CcpInstance, q: &[f64], seed: u64) -> Result<ProbEstimate> {
    match closed_form_targets(inst, q) {
        Err(Error::OracleUnavailable(_)) => {
            let net = network_of(inst)?;
            Ok(monte_carlo(inst, &net.decision_from_targets(q), default_mc_n(1e-4), seed))
        }
        r => r,
    }
}

fn record(inst: &CcpInstance, q: Vec<f64>, alpha: f64, method: &str, warnings: Vec<String>) -> Result<SolveRecord> {
    let net = network_of(inst)?;
    let q_pos: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
    let (x, cost) = net.solve_targets_lp(&q_pos)?;
    let p = oracle_probability(inst, &q, 0x0005)?;
    Ok(SolveRecord { x, cost, alpha_target: alpha, p, method: method.into(), targets: Some(q), warnings })
}

/// Targets dropping `k` scenarios greedily, each time the one whose removal
/// lowers Σ m_j q_j⁺ most (lowest index on ties).
fn greedy_drop(s: &SampleSet, unit: &[f64], k: usize) -> Vec<f64> {
    let (n, d) = (s.n, s.d);
    let mut order: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|a, b| s.data[b * d + j].total_cmp(&s.data[a * d + j]).then(a.cmp(b)));
            idx
        })
        .collect();
    let mut head = vec![0usize; d];
    let mut dropped = vec![false; n];
    for _ in 0..k {
        let mut gain = vec![0.0; n];
        for j in 0..d {
            let col = &order[j];
            while dropped[col[head[j]]] {
                head[j] += 1;
            }
            let top = col[head[j]];
            let mut nxt = head[j] + 1;
            while nxt < n && dropped[col[nxt]] {
                nxt += 1;
            }
            let hi = s.data[top * d + j].max(0.0);
            let lo = if nxt < n { s.data[col[nxt] * d + j].max(0.0) } else { 0.0 };
            gain[top] += unit[j] * (hi - lo);
        }
        let mut best = None;
        for (i, g) in gain.iter().enumerate() {
            if dropped[i] {
                continue;
            }
            if best.map_or(true, |(_, bg)| *g > bg) {
                best = Some((i, *g));
            }
        }
        let (i, _) = best.expect("fewer drops than scenarios");
        dropped[i] = true;
    }
    for j in 0..d {
        let col = &mut order[j];
        while dropped[col[head[j]]] {
            head[j] += 1;
        }
    }
    (0..d).map(|j| s.data[order[j][head[j]] * d + j]).collect()
}

/// Targets after dropping the `k` scenarios whose best column rank is highest,
/// i.e. the box at a common per-column empirical level.
fn rank_drop(s: &SampleSet, k: usize) -> Vec<f64> {
    let (n, d) = (s.n, s.d);
    let mut best_rank = vec![n; n];
    for j in 0..d {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|a, b| s.data[b * d + j].total_cmp(&s.data[a * d + j]).then(a.cmp(b)));
        for (r, i) in idx.into_iter().enumerate() {
            best_rank[i] = best_rank[i].min(r);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|i| (best_rank[*i], *i));
    let mut q = vec![f64::NEG_INFINITY; d];
    for &i in &order[k..] {
        for (qj, v) in q.iter_mut().zip(s.row(i)) {
            *qj = qj.max(*v);
        }
    }
    q
}

/// SAA solution at level α ∈ [0, 1).
pub fn solve_saa(s: &SampleSet, inst: &CcpInstance, alpha: f64) -> Result<SolveRecord> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("α = {alpha} must lie in [0, 1)")));
    }
    check_dims(s, inst)?;
    let net = network_of(inst)?;
    let k = (alpha * s.n as f64).floor() as usize;
    if inst.joint_mode == JointMode::Individual || s.d == 1 {
        let q: Vec<f64> = (0..s.d)
            .map(|j| {
                let mut c = s.column(j);
                c.sort_by(|a, b| b.total_cmp(a));
                c[k]
            })
            .collect();
        return record(inst, q, alpha, "saa_quantile", Vec::new());
    }
    let mut warnings = Vec::new();
    if k == 0 && alpha > 0.0 {
        warnings.push(format!(
            "TaperWarning: α·N = {:.3} < 1, so the SAA keeps every scenario (DegenerateLevel)",
            alpha * s.n as f64
        ));
    }
    let unit = net.unit_costs();
    let cost = |q: &[f64]| unit.iter().zip(q).map(|(m, v)| m * v.max(0.0)).sum::<f64>();
    let greedy = greedy_drop(s, &unit, k);
    let ranked = rank_drop(s, k);
    let q = if cost(&ranked) < cost(&greedy) { ranked } else { greedy };
    record(inst, q, alpha, "saa_greedy_drop", warnings)
}

/// Exact joint SAA optimum by enumerating sample-valued targets; d ≤ 3, N ≤ 200.
pub fn exact_joint_saa(s: &SampleSet, inst: &CcpInstance, alpha: f64) -> Result<(Vec<f64>, f64)> {
    check_dims(s, inst)?;
    let net = network_of(inst)?;
    if s.d > 3 || s.n > 200 {
        return Err(Error::Unsupported("exact SAA enumeration needs d ≤ 3 and N ≤ 200".into()));
    }
    let keep = s.n - (alpha * s.n as f64).floor() as usize;
    let unit = net.unit_costs();
    let cost = |q: &[f64]| unit.iter().zip(q).map(|(m, v)| m * v.max(0.0)).sum::<f64>();
    // The last coordinate is the keep-th smallest among rows inside the box on the others.
    let last = |rows: &[usize]| -> Option<f64> {
        if rows.len() < keep {
            return None;
        }
        let mut v: Vec<f64> = rows.iter().map(|i| s.data[i * s.d + s.d - 1]).collect();
        v.sort_by(f64::total_cmp);
        Some(v[keep - 1])
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |q: Vec<f64>| {
        let c = cost(&q);
        if best.as_ref().map_or(true, |(_, b)| c < *b) {
            best = Some((q, c));
        }
    };
    let all: Vec<usize> = (0..s.n).collect();
    match s.d {
        1 => consider(vec![last(&all).expect("keep ≤ N")]),
        2 => {
            for a in 0..s.n {
                let q0 = s.data[a * 2];
                let rows: Vec<usize> = all.iter().copied().filter(|i| s.data[i * 2] <= q0).collect();
                if let Some(q1) = last(&rows) {
                    consider(vec![q0, q1]);
                }
            }
        }
        _ => {
            for a in 0..s.n {
                for b in 0..s.n {
                    let (q0, q1) = (s.data[a * 3], s.data[b * 3 + 1]);
                    let rows: Vec<usize> =
                        all.iter().copied().filter(|i| s.data[i * 3] <= q0 && s.data[i * 3 + 1] <= q1).collect();
                    if let Some(q2) = last(&rows) {
                        consider(vec![q0, q1, q2]);
                    }
                }
            }
        }
    }
    best.ok_or(Error::Infeasible("no target box keeps enough scenarios".into()))
}

/// The ray `t^r x̂_{α₀}` through an SAA base solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub base_alpha: f64,
    pub base: SolveRecord,
    pub r: f64,
}

impl Trajectory {
    pub fn point(&self, t: f64) -> Vec<f64> {
        let f = t.powf(self.r);
        self.base.x.iter().map(|v| v * f).collect()
    }

    pub fn targets(&self, t: f64) -> Vec<f64> {
        let f = t.powf(self.r);
        self.base.targets.as_ref().expect("network base").iter().map(|v| v * f).collect()
    }

    pub fn cost(&self, t: f64) -> f64 {
        t.powf(self.r) * self.base.cost
    }
}

pub fn build_trajectory(s: &SampleSet, inst: &CcpInstance, alpha0: f64) -> Result<Trajectory> {
    check_level(alpha0)?;
    let na = s.n as f64 * alpha0;
    if na < 50.0 {
        return Err(Error::BaseLevelTooExtreme(na));
    }
    let base = solve_saa(s, inst, alpha0)?;
    Ok(Trajectory { base_alpha: alpha0, base, r: inst.r() })
}

/// Optimal nominal cost at level `exp(ln_alpha)`.
fn frontier_cost(inst: &CcpInstance, ln_alpha: f64) -> Result<f64> {
    let net = network_of(inst)?;
    let ms = &inst.model.marginals;
    if inst.joint_mode == JointMode::Individual || ms.len() == 1 {
        let q: Vec<f64> = ms.iter().map(|m| m.inverse_survival_ln(ln_alpha)).collect();
        return Ok(net.cost_of_targets(&q));
    }
    if matches!(inst.model.copula, Copula::Independent) && ms.len() > NELDER_MEAD_MAX_DIM {
        let q = kkt_split(ms, &net.unit_costs(), ln_alpha.exp());
        return Ok(net.cost_of_targets(&q));
    }
    Ok(solve_ccp(inst, ln_alpha.exp())?.cost)
}

/// ν*(B): ln of the smallest violation probability attainable at cost B.
pub fn frontier_level_ln(inst: &CcpInstance, budget: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-700.0, (0.999f64).ln());
    if frontier_cost(inst, hi)? >= budget {
        return Ok(hi);
    }
    if frontier_cost(inst, lo)? <= budget {
        return Ok(lo);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if frontier_cost(inst, mid)? > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Generic numeric table with a header row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        ResultTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c == name).expect("known column");
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let v: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
            s.push_str(&v.join(","));
            s.push('\n');
        }
        s
    }
}

/// Trajectory points against the efficient frontier at matched cost.
pub fn pareto_experiment(s: &SampleSet, inst: &CcpInstance, alpha0: f64, t_grid: &[f64]) -> Result<ResultTable> {
    if t_grid.is_empty() {
        return Err(Error::Config("empty t grid".into()));
    }
    let traj = build_trajectory(s, inst, alpha0)?;
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            if !(t >= 1.0) {
                return Err(Error::Config(format!("trajectory multiplier t = {t} must be ≥ 1")));
            }
            let cost = traj.cost(t);
            let p = oracle_probability(inst, &traj.targets(t), derive_seed(0x7A, t.to_bits()))?;
            let nu = frontier_level_ln(inst, cost)?;
            Ok(vec![t, cost, p.p, p.ln_p, nu.exp(), nu, p.ln_p / nu])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ResultTable::new(&["t", "cost", "p", "ln_p", "frontier_p", "frontier_ln_p", "log_ratio"]);
    table.rows = rows;
    Ok(table)
}

/// Scale the base solution to spend the budget B exactly.
pub fn solve_pmodel(s: &SampleSet, inst: &CcpInstance, budget: f64, alpha0: f64) -> Result<SolveRecord> {
    let traj = build_trajectory(s, inst, alpha0)?;
    let base = traj.base.cost;
    if budget < base {
        return Err(Error::BudgetBelowBase { budget, base });
    }
    let t = (budget / base).powf(1.0 / traj.r);
    let q = traj.targets(t);
    let mut rec = record(inst, q, f64::NAN, "pmodel_extrapolation", Vec::new())?;
    rec.x = traj.point(t);
    rec.cost = if t == 1.0 { base } else { budget };
    Ok(rec)
}

/// Tail index from the top `k` order statistics of one coordinate: Hill for
/// heavy tails, a Weibull-plot slope for light ones.
pub fn estimate_tail_index(s: &SampleSet, coordinate: usize, k: usize, class: TailClass) -> Result<f64> {
    if k < 20 {
        return Err(Error::TooFewExceedances(k));
    }
    let half = s.n / 2;
    if k >= half {
        return Err(Error::TooManyExceedances { k, half });
    }
    let mut c = s.column(coordinate);
    c.sort_by(|a, b| b.total_cmp(a));
    if !(c[k] > 0.0) {
        return Err(Error::Config("order statistics must be positive".into()));
    }
    match class {
        TailClass::Heavy => {
            let base = c[k].ln();
            let mean: f64 = c[..k].iter().map(|v| v.ln() - base).sum::<f64>() / k as f64;
            Ok(1.0 / mean)
        }
        TailClass::Light => {
            // ln(−ln F̄) is linear in ln x with slope γ for Weibull-type tails.
            let n1 = (s.n + 1) as f64;
            let pts: Vec<(f64, f64)> = (0..k).map(|i| (c[i].ln(), (-((i + 1) as f64 / n1).ln()).ln())).collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            Ok(sxy / sxx)
        }
    }
}

/// Mean, normal-approximation 95% half width and median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub half_width: f64,
    pub median: f64,
}

pub fn summarize(v: &[f64]) -> Summary {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    let median = if m % 2 == 1 { s[m / 2] } else { 0.5 * (s[m / 2 - 1] + s[m / 2]) };
    Summary { mean, half_width: 1.96 * (var / n).sqrt(), median }
}

/// Run `f` on `reps` derived seeds in parallel; results keep replication order.
pub fn replicate<T: Send, F: Fn(u64) -> Result<T> + Sync>(reps: usize, seed: u64, f: F) -> Result<Vec<T>> {
    (0..reps).into_par_iter().map(|i| f(derive_seed(seed, i as u64))).collect()
}

pub const DEFAULT_REPLICATIONS: usize = 32;
pub const DEFAULT_BASE_LEVEL: f64 = 0.2;

/// Out-of-sample reliability and cost of SAA solutions across target levels.
pub fn saa_tapering(inst: &CcpInstance, n: usize, alphas: &[f64], reps: usize, seed: u64) -> Result<ResultTable> {
    if alphas.is_empty() {
        return Err(Error::Config("empty α grid".into()));
    }
    let runs = replicate(reps, seed, |sd| {
        let s = SampleSet::from_model(&inst.model, n, sd);
        alphas.iter().map(|a| solve_saa(&s, inst, *a).map(|r| (1.0 - r.p.p, r.cost))).collect::<Result<Vec<_>>>()
    })?;
    let mut table = ResultTable::new(&["alpha", "reliability", "reliability_ci", "cost", "cost_ci"]);
    for (i, a) in alphas.iter().enumerate() {
        let rel = summarize(&runs.iter().map(|r| r[i].0).collect::<Vec<_>>());
        let cost = summarize(&runs.iter().map(|r| r[i].1).collect::<Vec<_>>());
        table.rows.push(vec![*a, rel.mean, rel.half_width, cost.mean, cost.half_width]);
    }
    Ok(table)
}

/// ln of the limiting violation law along the trajectory: α₀ t^{−γ} for heavy
/// tails and α₀^{t^γ} for light ones.
pub fn trajectory_law_ln(class: TailClass, gamma: f64, alpha0: f64, t: f64) -> f64 {
    match class {
        TailClass::Heavy => alpha0.ln() - gamma * t.ln(),
        TailClass::Light => t.powf(gamma) * alpha0.ln(),
    }
}

/// Replicated trajectory reliability and cost, with the deviation from the
/// limiting law.
pub fn trajectory_experiment(inst: &CcpInstance, n: usize, alpha0: f64, t_grid: &[f64], reps: usize, seed: u64) -> Result<ResultTable> {
    if t_grid.is_empty() {
        return Err(Error::Config("empty t grid".into()));
    }
    let prof = inst.model.tail_profile();
    let runs = replicate(reps, seed, |sd| {
        let s = SampleSet::from_model(&inst.model, n, sd);
        let traj = build_trajectory(&s, inst, alpha0)?;
        t_grid
            .iter()
            .map(|t| oracle_probability(inst, &traj.targets(*t), derive_seed(sd, 1)).map(|p| (p.p, p.ln_p, traj.cost(*t))))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut table = ResultTable::new(&["t", "reliability", "reliability_ci", "cost", "cost_ci", "median_ln_p", "median_law_gap"]);
    for (i, t) in t_grid.iter().enumerate() {
        let rel = summarize(&runs.iter().map(|r| 1.0 - r[i].0).collect::<Vec<_>>());
        let cost = summarize(&runs.iter().map(|r| r[i].2).collect::<Vec<_>>());
        let lnp = summarize(&runs.iter().map(|r| r[i].1).collect::<Vec<_>>());
        let law = trajectory_law_ln(prof.class, prof.gamma, alpha0, *t);
        let gap = summarize(&runs.iter().map(|r| (r[i].1 - law).abs()).collect::<Vec<_>>());
        table.rows.push(vec![*t, rel.mean, rel.half_width, cost.mean, cost.half_width, lnp.median, gap.median]);
    }
    Ok(table)
}

/// Replicated P-model ratios ln p(x̂_B) / ν*(B) for budgets `m · c(x̂_{α₀})`.
pub fn pmodel_experiment(inst: &CcpInstance, n: usize, alpha0: f64, multipliers: &[f64], reps: usize, seed: u64) -> Result<ResultTable> {
    if multipliers.is_empty() {
        return Err(Error::Config("empty budget grid".into()));
    }
    let runs = replicate(reps, seed, |sd| {
        let s = SampleSet::from_model(&inst.model, n, sd);
        let base = build_trajectory(&s, inst, alpha0)?.base.cost;
        multipliers
            .iter()
            .map(|m| {
                let rec = solve_pmodel(&s, inst, m * base, alpha0)?;
                let nu = frontier_level_ln(inst, rec.cost)?;
                Ok((rec.p.ln_p, nu))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut table = ResultTable::new(&["budget_multiplier", "median_ln_p", "median_frontier_ln_p", "median_ratio", "min_ratio", "max_ratio"]);
    for (i, m) in multipliers.iter().enumerate() {
        let ratios: Vec<f64> = runs.iter().map(|r| r[i].0 / r[i].1).collect();
        let lnp = summarize(&runs.iter().map(|r| r[i].0).collect::<Vec<_>>());
        let nu = summarize(&runs.iter().map(|r| r[i].1).collect::<Vec<_>>());
        let rs = summarize(&ratios);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        table.rows.push(vec![*m, lnp.median, nu.median, rs.median, lo, hi]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccp::generator::{network_instance, DemandFamily, NetworkSpec};
    use crate::ccp::Network;
    use crate::distributions::MarginalModel;

    fn net_inst(ms: Vec<MarginalModel>, mode: JointMode, costs: Vec<f64>) -> CcpInstance {
        let d = ms.len();
        let net = Network {
            factories: 1,
            dcs: d,
            edges: (0..d).map(|j| [0, j]).collect(),
            capacity_costs: vec![0.0],
            transport_costs: costs,
        };
        CcpInstance::new(Family::RhsNetwork(net), mode, JointModel::independent(ms).unwrap()).unwrap()
    }

    #[test]
    fn saa_probability_counts() {
        let m = MarginalModel::pareto(3.0, 1.0).unwrap();
        let inst = net_inst(vec![m], JointMode::Joint, vec![1.0]);
        let s = SampleSet::new(1, vec![1.0, 2.0, 3.0]).unwrap();
        assert!((saa_probability(&s, &inst, &[2.0, 2.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(saa_probability(&s, &inst, &[3.0, 3.0]), 0.0);
    }

    #[test]
    fn saa_probability_agrees_with_oracle() {
        let inst = net_inst(
            vec![MarginalModel::gamma_dist(2.0, 1.0).unwrap(), MarginalModel::weibull(1.5, 1.0).unwrap()],
            JointMode::Joint,
            vec![1.0, 1.0],
        );
        let s = SampleSet::from_model(&inst.model, 1_000_000, 11);
        let Family::RhsNetwork(net) = &inst.family else { unreachable!() };
        let q = [3.0, 1.5];
        let x = net.decision_from_targets(&q);
        let p = saa_probability(&s, &inst, &x);
        let exact = oracle_probability(&inst, &q, 0).unwrap().p;
        let (lo, hi) = crate::optim::wilson((p * 1e6).round() as u64, 1_000_000);
        assert!(lo <= exact && exact <= hi, "{exact} not in [{lo}, {hi}]");
    }

    #[test]
    fn csv_round_trip() {
        let s = SampleSet::new(2, vec![1.0, 2.5, -0.125, 1e-20]).unwrap();
        let back = SampleSet::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.data, s.data);
        assert_eq!(SampleSet::from_csv("1,2\n3\n").unwrap_err().code(), "ConfigError");
    }

    #[test]
    fn full_coverage_and_taper_warning() {
        let inst = net_inst(vec![MarginalModel::gamma_dist(2.0, 1.0).unwrap(); 3], JointMode::Joint, vec![1.0, 2.0, 0.5]);
        let s = SampleSet::from_model(&inst.model, 100, 3);
        let full = solve_saa(&s, &inst, 0.0).unwrap();
        let q = full.targets.clone().unwrap();
        for j in 0..3 {
            assert_eq!(q[j], s.column(j).into_iter().fold(f64::NEG_INFINITY, f64::max));
        }
        assert_eq!(saa_probability(&s, &inst, &full.x), 0.0);
        let tiny = solve_saa(&s, &inst, 1e-3).unwrap();
        assert_eq!(tiny.targets, full.targets);
        assert!(tiny.warnings.iter().any(|w| w.starts_with("TaperWarning")));
    }

    #[test]
    fn greedy_close_to_exact_enumeration() {
        let inst = net_inst(vec![MarginalModel::gamma_dist(2.0, 1.0).unwrap(); 2], JointMode::Joint, vec![1.0, 1.3]);
        let mut worst: f64 = 0.0;
        for seed in 0..5 {
            let s = SampleSet::from_model(&inst.model, 150, seed);
            let greedy = solve_saa(&s, &inst, 0.1).unwrap();
            let (_, best) = exact_joint_saa(&s, &inst, 0.1).unwrap();
            assert!(saa_probability(&s, &inst, &greedy.x) <= 0.1 + 1e-12);
            assert!(greedy.cost >= best - 1e-9);
            worst = worst.max(greedy.cost / best - 1.0);
        }
        assert!(worst < 0.05, "{worst}");
        let three = net_inst(vec![MarginalModel::weibull(1.0, 1.0).unwrap(); 3], JointMode::Joint, vec![1.0, 1.0, 1.0]);
        let s = SampleSet::from_model(&three.model, 40, 9);
        let (q, c) = exact_joint_saa(&s, &three, 0.1).unwrap();
        let kept = (0..40).filter(|i| s.row(*i).iter().zip(&q).all(|(v, qj)| v <= qj)).count();
        assert!(kept >= 36 && c <= solve_saa(&s, &three, 0.1).unwrap().cost + 1e-12);
    }

    #[test]
    fn trajectory_basics() {
        let inst = net_inst(vec![MarginalModel::pareto(3.0, 1.0).unwrap(); 2], JointMode::Individual, vec![1.0, 2.0]);
        let s = SampleSet::from_model(&inst.model, 1000, 5);
        assert_eq!(build_trajectory(&s, &inst, 0.01).unwrap_err().code(), "BaseLevelTooExtreme");
        let tr = build_trajectory(&s, &inst, 0.2).unwrap();
        assert_eq!(tr.point(1.0), tr.base.x);
        let mut last = tr.cost(1.0);
        for t in [1.5, 2.0, 4.0] {
            let c = inst.cost(&tr.point(t));
            assert!((c / (t * tr.cost(1.0)) - 1.0).abs() < 1e-12);
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn pmodel_closed_form() {
        let inst = net_inst(vec![MarginalModel::weibull(2.0, 1.0).unwrap(); 3], JointMode::Joint, vec![1.0, 0.5, 2.0]);
        let s = SampleSet::from_model(&inst.model, 1000, 8);
        let base = build_trajectory(&s, &inst, 0.2).unwrap();
        let rec = solve_pmodel(&s, &inst, 2.0 * base.base.cost, 0.2).unwrap();
        assert_eq!(rec.cost, 2.0 * base.base.cost);
        assert_eq!(rec.x, base.point(2.0));
        let same = solve_pmodel(&s, &inst, base.base.cost, 0.2).unwrap();
        assert_eq!(same.x, base.base.x);
        assert_eq!(solve_pmodel(&s, &inst, 0.5 * base.base.cost, 0.2).unwrap_err().code(), "BudgetBelowBase");
    }

    #[test]
    fn hill_estimates() {
        let m = MarginalModel::pareto(3.0, 1.0).unwrap();
        let inst = net_inst(vec![m], JointMode::Individual, vec![1.0]);
        let s = SampleSet::from_model(&inst.model, 100_000, 21);
        let g = estimate_tail_index(&s, 0, 500, TailClass::Heavy).unwrap();
        assert!((g - 3.0).abs() < 0.4, "{g}");
        // Exact power law x = U^{-1/2}.
        let u = SampleSet::from_model(&JointModel::independent(vec![MarginalModel::weibull(1.0, 1.0).unwrap()]).unwrap(), 20_000, 2);
        let pw = SampleSet::new(1, u.data.iter().map(|e| (0.5 * e).exp()).collect()).unwrap();
        let g = estimate_tail_index(&pw, 0, 1000, TailClass::Heavy).unwrap();
        assert!((g - 2.0).abs() < 0.3, "{g}");
        assert_eq!(estimate_tail_index(&pw, 0, pw.n - 1, TailClass::Heavy).unwrap_err().code(), "TooManyExceedances");
        assert_eq!(estimate_tail_index(&pw, 0, 10, TailClass::Heavy).unwrap_err().code(), "TooFewExceedances");
        let w = SampleSet::from_model(&JointModel::independent(vec![MarginalModel::weibull(2.0, 1.0).unwrap()]).unwrap(), 50_000, 4);
        let g = estimate_tail_index(&w, 0, 2000, TailClass::Light).unwrap();
        assert!((g - 2.0).abs() < 0.3, "{g}");
    }

    /// Largest `ln p(grid) / ln p(x(t))` over a 200-point grid spending 0.9·c(x(t)).
    fn grid_log_ratio(inst: &CcpInstance, tr: &Trajectory, t: f64, unit: [f64; 2]) -> (f64, f64) {
        let lp = oracle_probability(inst, &tr.targets(t), 0).unwrap().ln_p;
        let c = tr.cost(t);
        let worst = (0..200)
            .map(|i| {
                let share = (i as f64 + 0.5) / 200.0;
                let q = [0.9 * c * share / unit[0], 0.9 * c * (1.0 - share) / unit[1]];
                oracle_probability(inst, &q, 0).unwrap().ln_p / lp
            })
            .fold(f64::NEG_INFINITY, f64::max);
        (lp, worst)
    }

    #[test]
    fn weak_pareto_grid() {
        let inst = net_inst(vec![MarginalModel::weibull(2.0, 1.0).unwrap(); 2], JointMode::Joint, vec![1.0, 1.5]);
        for seed in [1, 17] {
            let s = SampleSet::from_model(&inst.model, 1000, seed);
            let tr = build_trajectory(&s, &inst, 0.2).unwrap();
            for t in [1.0, 1.5, 2.0, 2.5, 3.0] {
                let (lp, worst) = grid_log_ratio(&inst, &tr, t, [1.0, 1.5]);
                if lp >= 1e-6f64.ln() {
                    assert!(worst <= 0.85, "seed {seed} t {t}: {worst}");
                }
            }
        }
    }

    #[test]
    fn weak_pareto_ratio_tracks_tail_shape() {
        // With γ = 1 a 10% budget cut costs about 10% of log p, so the ratio sits near 0.9.
        let inst = net_inst(vec![MarginalModel::gamma_dist(2.0, 1.0).unwrap(); 2], JointMode::Joint, vec![1.0, 1.5]);
        let s = SampleSet::from_model(&inst.model, 1000, 17);
        let tr = build_trajectory(&s, &inst, 0.2).unwrap();
        for t in [1.5, 2.0, 4.0] {
            let (_, worst) = grid_log_ratio(&inst, &tr, t, [1.0, 1.5]);
            assert!(worst > 0.85 && worst < 0.9, "t {t}: {worst}");
        }
    }

    #[test]
    fn saa_band_at_moderate_level() {
        let inst = network_instance(&NetworkSpec { factories: 5, dcs: 30, seed: 1 }, DemandFamily::Gamma { shape: 2.0 }, JointMode::Joint).unwrap();
        let table = saa_tapering(&inst, 1000, &[0.2], 32, 7).unwrap();
        let p = 1.0 - table.rows[0][1];
        assert!((0.18..=0.30).contains(&p), "{p}");
    }

    #[test]
    fn replicated_tables_are_deterministic() {
        let inst = net_inst(vec![MarginalModel::pareto(3.0, 1.0).unwrap(); 2], JointMode::Individual, vec![1.0, 2.0]);
        let a = trajectory_experiment(&inst, 500, 0.2, &[1.0, 2.0], 4, 99).unwrap().to_csv();
        let b = trajectory_experiment(&inst, 500, 0.2, &[1.0, 2.0], 4, 99).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn frontier_is_monotone() {
        let inst = net_inst(vec![MarginalModel::pareto(3.0, 1.0).unwrap(); 2], JointMode::Joint, vec![1.0, 2.0]);
        let s = SampleSet::from_model(&inst.model, 1000, 1);
        let table = pareto_experiment(&s, &inst, 0.2, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        let fp = table.column("frontier_p");
        let p = table.column("p");
        assert!(fp.windows(2).all(|w| w[1] < w[0]));
        assert!(p.iter().zip(&fp).all(|(a, b)| *a >= *b * (1.0 - 1e-6)));
        let base = solve_saa(&s, &inst, 0.2).unwrap();
        assert_eq!(table.rows[0][1], base.cost);
    }
}
