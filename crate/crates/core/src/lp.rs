//! Dense two-phase revised simplex.
//!
//! The problem is brought to standard form `A z = b, z ≥ 0, b ≥ 0` by shifting
//! lower bounds, splitting free variables, turning finite upper bounds into
//! rows and adding slack, surplus and artificial columns. The basis inverse is
//! kept explicitly and rebuilt from scratch every `REFACTOR` pivots.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable `[lo, hi]`; `lo` may be `-∞`, `hi` may be `+∞`.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per constraint row: ≥ 0 on `Ge` rows and ≤ 0 on `Le` rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("non-finite data: {0}")]
    NonFinite(String),
    #[error("simplex failed to converge after {0} iterations")]
    NumericalFailure(usize),
}

const PRICE_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const REFACTOR: usize = 64;
const DEGENERATE_RUN: usize = 50;

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), bounds: vec![(0.0, f64::INFINITY); n] }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, rel, rhs });
        self
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(LpError::Dimension(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Dimension(format!("row {i} has {} coefficients, expected {n}", c.coeffs.len())));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite(format!("row {i}")));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
        }
        Ok(())
    }
}

/// Column of the standard form in terms of the original variables.
#[derive(Clone, Copy)]
enum ColKind {
    /// z = x_j − lo_j
    Shifted(usize),
    /// z = hi_j − x_j for variables with only an upper bound
    Reflected(usize),
    /// positive or negative part of a free variable
    FreePos(usize),
    FreeNeg(usize),
    Slack,
    Artificial,
}

struct Standard {
    cols: Vec<Vec<f64>>,
    kinds: Vec<ColKind>,
    b: Vec<f64>,
    cost: Vec<f64>,
    /// ±1: sign applied to each standard row relative to the source row.
    row_sign: Vec<f64>,
    n_source_rows: usize,
    const_term: f64,
}

fn standardize(p: &LinearProgram) -> Standard {
    let n = p.objective.len();
    let mut kinds = Vec::new();
    let mut const_term = 0.0;
    // Row contributions of each original variable: (standard column, coefficient).
    let mut var_map: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut shift = vec![0.0; n];
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = p.bounds[j];
        if lo.is_finite() {
            shift[j] = lo;
            var_map[j].push((kinds.len(), 1.0));
            kinds.push(ColKind::Shifted(j));
            if hi.is_finite() {
                extra_rows.push((j, hi - lo));
            }
        } else if hi.is_finite() {
            shift[j] = hi;
            var_map[j].push((kinds.len(), -1.0));
            kinds.push(ColKind::Reflected(j));
        } else {
            var_map[j].push((kinds.len(), 1.0));
            kinds.push(ColKind::FreePos(j));
            var_map[j].push((kinds.len(), -1.0));
            kinds.push(ColKind::FreeNeg(j));
        }
        const_term += p.objective[j] * shift[j];
    }
    let n_struct = kinds.len();
    let mut cost = vec![0.0; n_struct];
    for j in 0..n {
        for &(c, s) in &var_map[j] {
            cost[c] = s * p.objective[j];
        }
    }
    // Dense rows over structural columns.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for con in &p.constraints {
        let mut row = vec![0.0; n_struct];
        let mut rhs = con.rhs;
        for j in 0..n {
            let a = con.coeffs[j];
            if a == 0.0 {
                continue;
            }
            rhs -= a * shift[j];
            for &(c, s) in &var_map[j] {
                row[c] += s * a;
            }
        }
        rows.push((row, con.rel, rhs));
    }
    for &(j, width) in &extra_rows {
        let mut row = vec![0.0; n_struct];
        row[var_map[j][0].0] = 1.0;
        rows.push((row, Relation::Le, width));
    }
    let m = rows.len();
    let mut row_sign = vec![1.0; m];
    for (i, (row, rel, rhs)) in rows.iter_mut().enumerate() {
        if *rhs < 0.0 {
            row_sign[i] = -1.0;
            for v in row.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let mut cols: Vec<Vec<f64>> = (0..n_struct).map(|c| rows.iter().map(|r| r.0[c]).collect()).collect();
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        match rel {
            Relation::Le => {
                let mut col = vec![0.0; m];
                col[i] = 1.0;
                cols.push(col);
                kinds.push(ColKind::Slack);
                cost.push(0.0);
            }
            Relation::Ge => {
                let mut col = vec![0.0; m];
                col[i] = -1.0;
                cols.push(col);
                kinds.push(ColKind::Slack);
                cost.push(0.0);
            }
            Relation::Eq => {}
        }
    }
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != Relation::Le {
            let mut col = vec![0.0; m];
            col[i] = 1.0;
            cols.push(col);
            kinds.push(ColKind::Artificial);
            cost.push(0.0);
        }
    }
    Standard {
        cols,
        kinds,
        b: rows.iter().map(|r| r.2).collect(),
        cost,
        row_sign,
        n_source_rows: p.constraints.len(),
        const_term,
    }
}

struct Simplex<'a> {
    s: &'a Standard,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    iterations: usize,
    max_iter: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize) -> Vec<f64> {
        let a = &self.s.cols[j];
        self.binv
            .iter()
            .map(|r| r.iter().zip(a).filter(|(_, v)| **v != 0.0).map(|(x, v)| x * v).sum())
            .collect()
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.basis.len();
        let mut a: Vec<Vec<f64>> = (0..m).map(|i| self.basis.iter().map(|&c| self.s.cols[c][i]).collect()).collect();
        let mut inv = crate::linalg::identity(m);
        for k in 0..m {
            let p = (k..m)
                .max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).expect("finite"))
                .expect("nonempty");
            if a[p][k].abs() < 1e-13 {
                return Err(LpError::NumericalFailure(self.iterations));
            }
            a.swap(k, p);
            inv.swap(k, p);
            let d = a[k][k];
            for v in a[k].iter_mut() {
                *v /= d;
            }
            for v in inv[k].iter_mut() {
                *v /= d;
            }
            for i in 0..m {
                if i != k {
                    let f = a[i][k];
                    if f != 0.0 {
                        for c in 0..m {
                            a[i][c] -= f * a[k][c];
                            inv[i][c] -= f * inv[k][c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.xb = self.binv.iter().map(|r| crate::linalg::dot(r, &self.s.b)).collect();
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -FEAS_TOL {
                *v = 0.0;
            }
        }
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.basis.len();
        let mut y = vec![0.0; m];
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[r][i];
                }
            }
        }
        y
    }

    fn pivot(&mut self, r: usize, enter: usize, u: &[f64]) {
        let m = self.basis.len();
        let ur = u[r];
        for v in self.binv[r].iter_mut() {
            *v /= ur;
        }
        self.xb[r] /= ur;
        let prow = self.binv[r].clone();
        let xr = self.xb[r];
        for i in 0..m {
            if i != r && u[i] != 0.0 {
                let f = u[i];
                for (v, p) in self.binv[i].iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                self.xb[i] -= f * xr;
                if self.xb[i] < 0.0 && self.xb[i] > -FEAS_TOL {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.basis[r] = enter;
    }

    fn run(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<Outcome, LpError> {
        let n = self.s.cols.len();
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= self.max_iter {
                return Err(LpError::NumericalFailure(self.iterations));
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let y = self.duals(cost);
            let mut in_basis = vec![false; n];
            for &b in &self.basis {
                in_basis[b] = true;
            }
            let mut enter = None;
            let mut best = -PRICE_TOL;
            for j in 0..n {
                if in_basis[j] || !allowed(j) {
                    continue;
                }
                let a = &self.s.cols[j];
                let d = cost[j] - a.iter().zip(&y).filter(|(v, _)| **v != 0.0).map(|(v, w)| v * w).sum::<f64>();
                if bland {
                    if d < -PRICE_TOL {
                        enter = Some(j);
                        break;
                    }
                } else if d < best {
                    best = d;
                    enter = Some(j);
                }
            }
            let Some(enter) = enter else {
                return Ok(Outcome::Optimal);
            };
            let u = self.column(enter);
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for (i, &ui) in u.iter().enumerate() {
                if ui > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / ui;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    ui > u[l]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_ratio = best_ratio.min(ratio);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, enter, &u);
            self.iterations += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR {
                self.refactor()?;
                since_refactor = 0;
            }
        }
    }
}

/// Solve `p` to optimality, or report infeasibility or unboundedness.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution, LpError> {
    p.check()?;
    let n = p.objective.len();
    let s = standardize(p);
    let m = s.b.len();
    let ncols = s.cols.len();
    let is_art: Vec<bool> = s.kinds.iter().map(|k| matches!(k, ColKind::Artificial)).collect();

    // Initial basis: slack of each Le row, artificial otherwise.
    let mut basis = vec![usize::MAX; m];
    for (c, col) in s.cols.iter().enumerate() {
        let unit_row = col.iter().position(|v| *v == 1.0);
        if let Some(i) = unit_row {
            if col.iter().filter(|v| **v != 0.0).count() == 1 && basis[i] == usize::MAX {
                let candidate = matches!(s.kinds[c], ColKind::Slack | ColKind::Artificial);
                if candidate {
                    basis[i] = c;
                }
            }
        }
    }
    debug_assert!(basis.iter().all(|&b| b != usize::MAX));
    let mut sx = Simplex {
        s: &s,
        basis,
        binv: crate::linalg::identity(m),
        xb: s.b.clone(),
        iterations: 0,
        max_iter: 50 * (m + ncols) + 1000,
    };

    let infeasible = |iterations: usize| LpSolution {
        status: LpStatus::Infeasible,
        x: vec![f64::NAN; n],
        value: f64::NAN,
        duals: vec![f64::NAN; p.constraints.len()],
        iterations,
    };

    if is_art.iter().any(|&a| a) {
        let phase1: Vec<f64> = is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        sx.run(&phase1, &|_| true)?;
        sx.refactor()?;
        let infeas: f64 = sx.basis.iter().zip(&sx.xb).filter(|(b, _)| is_art[**b]).map(|(_, x)| *x).sum();
        let scale = 1.0 + s.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > 1e-9 * scale {
            return Ok(infeasible(sx.iterations));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if !is_art[sx.basis[r]] {
                continue;
            }
            let in_basis: Vec<usize> = sx.basis.clone();
            let mut swapped = false;
            for j in 0..ncols {
                if is_art[j] || in_basis.contains(&j) {
                    continue;
                }
                let u = sx.column(j);
                if u[r].abs() > 1e-7 {
                    sx.pivot(r, j, &u);
                    swapped = true;
                    break;
                }
            }
            if !swapped {
                // Redundant row; the artificial stays basic at zero.
                sx.xb[r] = 0.0;
            }
        }
        sx.refactor()?;
    }

    let outcome = sx.run(&s.cost, &|j| !is_art[j])?;
    if let Outcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            value: f64::NEG_INFINITY,
            duals: vec![f64::NAN; p.constraints.len()],
            iterations: sx.iterations,
        });
    }
    sx.refactor()?;
    let mut z = vec![0.0; ncols];
    for (r, &b) in sx.basis.iter().enumerate() {
        z[b] = sx.xb[r].max(0.0);
    }
    let mut x = vec![0.0; n];
    for (c, kind) in s.kinds.iter().enumerate() {
        match *kind {
            ColKind::Shifted(j) => x[j] = p.bounds[j].0 + z[c],
            ColKind::Reflected(j) => x[j] = p.bounds[j].1 - z[c],
            ColKind::FreePos(j) => x[j] += z[c],
            ColKind::FreeNeg(j) => x[j] -= z[c],
            _ => {}
        }
    }
    let y = sx.duals(&s.cost);
    let duals = (0..s.n_source_rows).map(|i| s.row_sign[i] * y[i]).collect();
    let value = crate::linalg::dot(&p.objective, &x);
    debug_assert!((value - (s.const_term + crate::linalg::dot(&s.cost, &z))).abs() <= 1e-6 * (1.0 + value.abs()));
    Ok(LpSolution { status: LpStatus::Optimal, x, value, duals, iterations: sx.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn single_lower_bound() {
        let mut p = LinearProgram::new(vec![1.0]);
        p.add(vec![1.0], Relation::Ge, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.value - 1.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forced_transport() {
        // variables (x, y): capacity cost 2, shipping cost 1, demand 3.
        let mut p = LinearProgram::new(vec![2.0, 1.0]);
        p.add(vec![0.0, 1.0], Relation::Ge, 3.0);
        p.add(vec![-1.0, 1.0], Relation::Le, 0.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.value - 9.0).abs() < 1e-12);
        assert!((s.x[0] - 3.0).abs() < 1e-12 && (s.x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LinearProgram::new(vec![1.0]);
        p.add(vec![1.0], Relation::Ge, 2.0);
        p.add(vec![1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
        let mut q = LinearProgram::new(vec![-1.0, 0.0]);
        q.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&q).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_and_free_variables() {
        // min x0 − x1, x0 free, x0 ≥ −5 via row, x1 ∈ [−1, 2]
        let mut p = LinearProgram::new(vec![1.0, -1.0]);
        p.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY), (-1.0, 2.0)];
        p.add(vec![1.0, 0.0], Relation::Ge, -5.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.value + 7.0).abs() < 1e-12, "{:?}", s);
        let mut q = LinearProgram::new(vec![-1.0]);
        q.bounds = vec![(f64::NEG_INFINITY, 4.0)];
        assert!((solve_lp(&q).unwrap().value + 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule without anti-cycling.
        let mut p = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0]);
        p.add(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        p.add(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        p.add(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.value + 0.05).abs() < 1e-9, "{}", s.value);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LinearProgram::new(vec![1.0, 2.0]);
        p.add(vec![1.0, 1.0], Relation::Eq, 2.0);
        p.add(vec![2.0, 2.0], Relation::Eq, 4.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    fn random_instance(rng: &mut StreamRng, m: usize, n: usize) -> LinearProgram {
        let mut p = LinearProgram::new((0..n).map(|_| 0.1 + rng.open01()).collect());
        for i in 0..m {
            let coeffs: Vec<f64> = (0..n).map(|_| if rng.open01() < 0.3 { 0.0 } else { rng.open01() }).collect();
            if i % 3 == 2 {
                p.add(coeffs, Relation::Le, 2.0 + 3.0 * rng.open01());
            } else {
                p.add(coeffs, Relation::Ge, 0.2 + rng.open01());
            }
        }
        p
    }

    /// Minimum over all basic solutions of {Ax rel b, x ≥ 0}.
    fn vertex_enumeration(p: &LinearProgram) -> Option<f64> {
        let n = p.objective.len();
        let mut rows: Vec<(Vec<f64>, f64)> = p.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push((e, 0.0));
        }
        let total = rows.len();
        let mut best: Option<f64> = None;
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
            let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
            if let Some(x) = gauss_solve(a, b) {
                let feasible = x.iter().all(|v| *v >= -1e-9)
                    && p.constraints.iter().all(|c| {
                        let lhs = crate::linalg::dot(&c.coeffs, &x);
                        match c.rel {
                            Relation::Le => lhs <= c.rhs + 1e-9,
                            Relation::Ge => lhs >= c.rhs - 1e-9,
                            Relation::Eq => (lhs - c.rhs).abs() <= 1e-9,
                        }
                    });
                if feasible {
                    let v = crate::linalg::dot(&p.objective, &x);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
            // next combination
            let mut k = n;
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                if idx[k] < total - n + k {
                    idx[k] += 1;
                    for t in k + 1..n {
                        idx[t] = idx[t - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap())?;
            if a[p][k].abs() < 1e-12 {
                return None;
            }
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for c in k..n {
                    a[i][c] -= f * a[k][c];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|c| a[i][c] * x[c]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        Some(x)
    }

    #[test]
    fn matches_vertex_enumeration() {
        let mut rng = StreamRng::new(77, 0);
        for _ in 0..40 {
            let p = random_instance(&mut rng, 5, 5);
            let s = solve_lp(&p).unwrap();
            match vertex_enumeration(&p) {
                Some(v) => {
                    assert_eq!(s.status, LpStatus::Optimal);
                    assert!((s.value - v).abs() < 1e-6, "{} vs {v}", s.value);
                }
                None => assert_eq!(s.status, LpStatus::Infeasible),
            }
        }
    }

    #[test]
    fn random_20x20_kkt() {
        let mut rng = StreamRng::new(78, 0);
        for _ in 0..20 {
            let p = random_instance(&mut rng, 20, 20);
            let s = solve_lp(&p).unwrap();
            if s.status != LpStatus::Optimal {
                continue;
            }
            let mut dual_obj = 0.0;
            for (c, y) in p.constraints.iter().zip(&s.duals) {
                let lhs = crate::linalg::dot(&c.coeffs, &s.x);
                match c.rel {
                    Relation::Le => {
                        assert!(lhs <= c.rhs + 1e-8);
                        assert!(*y <= 1e-9);
                    }
                    Relation::Ge => {
                        assert!(lhs >= c.rhs - 1e-8);
                        assert!(*y >= -1e-9);
                    }
                    Relation::Eq => {}
                }
                assert!((y * (lhs - c.rhs)).abs() <= 1e-7);
                dual_obj += y * c.rhs;
            }
            assert!(s.x.iter().all(|v| *v >= -1e-9));
            assert!((dual_obj - s.value).abs() <= 1e-7 * (1.0 + s.value.abs()));
        }
    }
}
