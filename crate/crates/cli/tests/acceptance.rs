//! Acceptance criteria C1–C10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relscale::approx::{line_search_refine, solve_cvar_approx, ApproxConfig};
use relscale::ccp::generator::{network_instance, DemandFamily, NetworkSpec};
use relscale::ccp::{
    monte_carlo, scaling_sweep, solve_ccp, solve_ccpapx, violation_probability, CcpInstance, Family, JointMode, Network,
    OracleMethod,
};
use relscale::datadriven::{pmodel_experiment, saa_tapering, trajectory_experiment};
use relscale::distributions::{JointModel, MarginalKind, MarginalModel};
use relscale::dro::{
    asymptotic_level_ln, certify_moment_floor, certify_wasserstein_floor, dro_report, solve_dro_ccp, solve_marginal_dro,
    worst_case_level_ln, Dispersion, DivKind, FDivergence, ScaleClass,
};
use relscale::lp::{solve_lp, Constraint, LinearProgram, LpStatus, Relation};
use relscale::scaling::{growth_diagnostic, log_grid, s_alpha};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

fn built_in(family: DemandFamily, mode: JointMode) -> CcpInstance {
    network_instance(&NetworkSpec::default(), family, mode).unwrap()
}

fn thirty(family: DemandFamily, mode: JointMode) -> CcpInstance {
    network_instance(&NetworkSpec { factories: 5, dcs: 30, seed: 1 }, family, mode).unwrap()
}

/// One factory, two DCs, unit costs `1 + t_j`.
fn pair(a: MarginalModel, b: MarginalModel, transport: [f64; 2], mode: JointMode) -> CcpInstance {
    let net = Network { factories: 1, dcs: 2, edges: vec![[0, 0], [0, 1]], capacity_costs: vec![1.0], transport_costs: transport.to_vec() };
    CcpInstance::new(Family::RhsNetwork(net), mode, JointModel::independent(vec![a, b]).unwrap()).unwrap()
}

fn lomax_scale(m: &MarginalModel) -> (f64, f64) {
    match m.kind {
        MarginalKind::Pareto { index, scale } => (index, scale),
        _ => panic!("not a Pareto marginal"),
    }
}

fn c1() -> Outcome {
    let inst = built_in(DemandFamily::Pareto { index: 3.0 }, JointMode::Individual);
    let alphas = log_grid(1e-4, 1e-6, 4);
    let table = scaling_sweep(&inst, &alphas).unwrap();
    let ratios: Vec<f64> = table.rows.iter().map(|r| r.cost / r.s_alpha.powf(table.r)).collect();
    let v_star = solve_ccpapx(&inst).unwrap().v_star;
    let var = spread(&ratios);
    let off = ratios.iter().map(|r| (r / v_star - 1.0).abs()).fold(0.0, f64::max);
    outcome(var < 0.05 && off <= 0.15, format!("v/s_α variation {var:.4} (< 0.05), max |v/s_α − v*|/v* {off:.4} (≤ 0.15)"))
}

fn c2() -> Outcome {
    let grid = log_grid(1e-2, 1e-8, 4);
    let cases = [
        ("Pareto(2)", MarginalModel::pareto(2.0, 1.0).unwrap(), 0.5, 0.02),
        ("Pareto(3)", MarginalModel::pareto(3.0, 1.0).unwrap(), 1.0 / 3.0, 0.02),
        ("Weibull(1)", MarginalModel::weibull(1.0, 1.0).unwrap(), 1.0, 0.05),
        ("Weibull(2)", MarginalModel::weibull(2.0, 1.0).unwrap(), 0.5, 0.05),
        ("Gaussian", MarginalModel::gaussian(0.0, 1.0).unwrap(), 0.5, 0.05),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, want, tol) in cases {
        let rep = growth_diagnostic(&JointModel::independent(vec![m]).unwrap(), &grid).unwrap();
        let ok = (rep.fitted_index - want).abs() <= tol;
        pass &= ok;
        parts.push(format!("{name} {:.3} (want {want:.3} ± {tol}){}", rep.fitted_index, if ok { "" } else { " ✗" }));
    }
    outcome(pass, parts.join(", "))
}

/// CVaR of a Lomax tail: q + (s + q)/(γ − 1) with q the VaR.
fn lomax_cvar(m: &MarginalModel, alpha: f64) -> f64 {
    let (g, s) = lomax_scale(m);
    let q = s * (alpha.powf(-1.0 / g) - 1.0);
    q + (s + q) / (g - 1.0)
}

fn c3() -> Outcome {
    let alpha = 1e-6;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, family, lo, hi) in [
        ("Pareto(3)", DemandFamily::Pareto { index: 3.0 }, 1.425, 1.575),
        ("Gamma(2)", DemandFamily::Gamma { shape: 2.0 }, 1.0, 1.05),
    ] {
        let inst = built_in(family, JointMode::Individual);
        let nominal = solve_ccp(&inst, alpha).unwrap();
        let cvar = solve_cvar_approx(&inst, alpha, &ApproxConfig::cvar_default(inst.n_constraints())).unwrap();
        let c = cvar.cost / nominal.cost;
        let per: Vec<f64> =
            cvar.targets.as_ref().unwrap().iter().zip(nominal.targets.as_ref().unwrap()).map(|(a, b)| a / b).collect();
        let sp = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - per.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut ok = (lo..=hi).contains(&c) && sp <= 0.1 * c;
        if matches!(family, DemandFamily::Pareto { .. }) {
            let err = inst
                .model
                .marginals
                .iter()
                .zip(cvar.targets.as_ref().unwrap())
                .map(|(m, q)| (q / lomax_cvar(m, alpha) - 1.0).abs())
                .fold(0.0, f64::max);
            ok &= err < 1e-6;
            parts.push(format!("closed-form CVaR targets rel err {err:.1e}"));
        }
        pass &= ok;
        parts.push(format!("{name} ratio {c:.4} in [{lo}, {hi}], coordinate spread {sp:.4} (≤ {:.4}){}", 0.1 * c, if ok { "" } else { " ✗" }));
    }
    outcome(pass, parts.join("; "))
}

fn c4() -> Outcome {
    let alpha = 1e-6;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, inst) in [
        ("Pareto(3) individual", built_in(DemandFamily::Pareto { index: 3.0 }, JointMode::Individual)),
        ("Gamma(2) individual", built_in(DemandFamily::Gamma { shape: 2.0 }, JointMode::Individual)),
    ] {
        let nominal = solve_ccp(&inst, alpha).unwrap();
        let cvar = solve_cvar_approx(&inst, alpha, &ApproxConfig::cvar_default(inst.n_constraints())).unwrap();
        let refined = line_search_refine(&inst, &cvar.x, alpha, OracleMethod::ClosedForm).unwrap();
        let p = violation_probability(&inst, &refined.x, OracleMethod::ClosedForm).unwrap().p;
        let feasible = p <= alpha * (1.0 + 1e-12);
        let gap = refined.cost / nominal.cost - 1.0;
        let interior = violation_probability(&inst, &cvar.x, OracleMethod::ClosedForm).unwrap().p < alpha;
        let cheaper = !interior || refined.cost < cvar.cost;
        let ok = feasible && gap <= 0.02 && cheaper;
        pass &= ok;
        parts.push(format!("{name}: p/α {:.6}, gap {gap:.2e}, refined/CVaR {:.4}{}", p / alpha, refined.cost / cvar.cost, if ok { "" } else { " ✗" }));
    }
    outcome(pass, parts.join("; "))
}

fn c5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, kind) in [("KL", DivKind::Kl), ("χ²", DivKind::ChiSquare)] {
        let d = FDivergence { kind, eta: 0.1 };
        let exact = worst_case_level_ln(&d, 1e-3).unwrap();
        let delta = (exact - asymptotic_level_ln(&d, 1e-3)).abs();
        let ok = delta < 0.15;
        pass &= ok;
        parts.push(format!("{name} |Δ ln α_eff| {delta:.3}{}", if ok { "" } else { " ✗ (≥ 0.15)" }));
    }
    let alphas: Vec<f64> = (0..=16).map(|i| 10f64.powf(-2.0 - 0.25 * i as f64)).collect();
    let light = pair(MarginalModel::weibull(1.0, 1.0).unwrap(), MarginalModel::weibull(1.0, 1.0).unwrap(), [0.5, 0.5], JointMode::Individual);
    let heavy = pair(MarginalModel::pareto(3.0, 1.0).unwrap(), MarginalModel::pareto(3.0, 1.0).unwrap(), [0.5, 0.5], JointMode::Individual);
    let cells = [
        ("KL", DivKind::Kl, ScaleClass::Distorting, ScaleClass::Distorting),
        ("poly", DivKind::ChiSquare, ScaleClass::Sp, ScaleClass::Distorting),
        ("exp", DivKind::ExpGrowth, ScaleClass::Sp, ScaleClass::WSp),
    ];
    let mut matched = 0;
    for (_, kind, wl, wh) in cells {
        let d = FDivergence { kind, eta: 0.1 };
        matched += (dro_report(&light, &d, &alphas).unwrap().scale_class == wl) as usize;
        matched += (dro_report(&heavy, &d, &alphas).unwrap().scale_class == wh) as usize;
    }
    pass &= matched == 6;
    parts.push(format!("classification {matched}/6 cells"));
    let inst = built_in(DemandFamily::Pareto { index: 3.0 }, JointMode::Joint);
    let kl = FDivergence { kind: DivKind::Kl, eta: 0.1 };
    let ratio = solve_dro_ccp(&inst, &kl, 0.05).unwrap().cost / solve_ccp(&inst, 0.05).unwrap().cost;
    pass &= ratio > 2.0;
    parts.push(format!("KL cost ratio at α = 0.05 {ratio:.3} (> 2)"));
    outcome(pass, parts.join("; "))
}

fn c6() -> Outcome {
    let m = MarginalModel::pareto(3.0, 1.0).unwrap();
    let inst = pair(m.clone(), m.clone(), [0.5, 0.5], JointMode::Joint);
    let alphas = log_grid(1e-2, 1e-6, 4);
    let bound = 2f64.powf(1.0 / 3.0) + 0.2;
    let (mut tail, mut lo, mut hi, mut oracle_err) = (Vec::new(), f64::INFINITY, 0.0f64, 0.0f64);
    for &a in &alphas {
        let vm = solve_marginal_dro(&inst, a).unwrap().cost;
        let v = solve_ccp(&inst, a).unwrap().cost;
        // Symmetric union budget: each DC at level α/2.
        let (g, s) = lomax_scale(&m);
        let direct = 2.0 * 1.5 * s * ((a / 2.0).powf(-1.0 / g) - 1.0);
        oracle_err = oracle_err.max((vm / direct - 1.0).abs());
        if a <= 1e-4 * (1.0 + 1e-9) {
            tail.push(vm / s_alpha(&inst.model, a).unwrap());
        }
        lo = lo.min(vm / v);
        hi = hi.max(vm / v);
    }
    let var = spread(&tail);
    let pass = var < 0.1 && lo >= 1.0 - 1e-9 && hi <= bound && oracle_err < 1e-6;
    outcome(pass, format!("v^M/s_α variation {var:.4} (< 0.1), v^M/v* in [{lo:.4}, {hi:.4}] ⊆ [1, {bound:.4}], union-budget oracle err {oracle_err:.1e}"))
}

fn c7() -> Outcome {
    let g = MarginalModel::gaussian(0.0, 1.0).unwrap();
    let inst = pair(g.clone(), g, [0.5, 0.5], JointMode::Individual);
    let alphas = log_grid(1e-2, 1e-4, 4);
    let r = inst.r();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1.0, 2.0] {
        let slope = certify_wasserstein_floor(&inst, p, 10.0, &alphas, 0.1).unwrap().slope();
        let ok = slope >= 0.9 * r / p;
        pass &= ok;
        parts.push(format!("Wasserstein p={p} slope {slope:.3} (≥ {:.3})", 0.9 * r / p));
    }
    let disp = Dispersion::Cov { sigma: vec![vec![1.0, 0.0], vec![0.0, 1.0]] };
    let slope = certify_moment_floor(&inst, &disp, &[0.0, 0.0], &alphas, 0.1).unwrap().slope();
    let ok = slope >= 0.45 * r;
    pass &= ok;
    parts.push(format!("moment Cov slope {slope:.3} (≥ {:.3})", 0.45 * r));
    outcome(pass, parts.join("; "))
}

fn c8() -> Outcome {
    let n = 1000;
    let reps = 32;
    let heavy = thirty(DemandFamily::Pareto { index: 3.0 }, JointMode::Individual);
    let light = thirty(DemandFamily::Gamma { shape: 2.0 }, JointMode::Joint);
    let mut pass = true;
    let mut parts = Vec::new();

    let taper_alphas = [0.2, 0.15, 0.1, 0.05, 0.025, 0.01, 0.005, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5];
    for (name, inst) in [("heavy", &heavy), ("light", &light)] {
        let t = saa_tapering(inst, n, &taper_alphas, reps, 11).unwrap();
        let rel: Vec<f64> = t.rows.iter().filter(|r| r[0] < 10.0 / n as f64).map(|r| r[1]).collect();
        let width = rel.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - rel.iter().cloned().fold(f64::INFINITY, f64::min);
        let ok = width < 0.01;
        pass &= ok;
        parts.push(format!("(a) {name} plateau width {width:.4} (< 0.01), top reliability {:.5}", rel.last().unwrap()));
    }

    let grids: [(&str, &CcpInstance, Vec<f64>); 2] = [
        ("heavy", &heavy, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]),
        ("light", &light, vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0]),
    ];
    for (name, inst, t_grid) in grids {
        let t = trajectory_experiment(inst, n, 0.2, &t_grid, reps, 12).unwrap();
        let min_p = t.column("median_ln_p").into_iter().fold(f64::INFINITY, f64::min).exp();
        let gap = t.column("median_law_gap").into_iter().fold(0.0, f64::max);
        let ok = min_p <= 1e-5 && gap <= 0.3;
        pass &= ok;
        parts.push(format!("(b) {name} smallest median p {min_p:.1e} (≤ 1e-5), max median law gap {gap:.3} (≤ 0.3){}", if ok { "" } else { " ✗" }));
    }

    let mults = [1.0, 1.5, 2.0, 2.5, 3.0];
    for (name, inst) in [("heavy", &heavy), ("light", &light)] {
        let t = pmodel_experiment(inst, n, 0.2, &mults, reps, 13).unwrap();
        let r = t.column("median_ratio");
        let (lo, hi) = (r.iter().cloned().fold(f64::INFINITY, f64::min), r.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let ok = lo >= 0.9 && hi <= 1.1;
        pass &= ok;
        parts.push(format!("(c) {name} median ratio in [{lo:.3}, {hi:.3}]"));
    }
    outcome(pass, parts.join("; "))
}

/// Wilson score interval at 95%.
fn wilson(k: f64, n: f64) -> (f64, f64) {
    let z = 1.959963984540054;
    let p = k / n;
    let den = 1.0 + z * z / n;
    let mid = (p + z * z / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / den;
    (mid - half, mid + half)
}

/// Best vertex of `{A x (rel) b, x ≥ 0}` by enumerating every basis.
fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    let mut rows: Vec<(Vec<f64>, f64)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e, 0.0));
    }
    let m = rows.len();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn next(pick: &mut [usize], m: usize) -> bool {
        let n = pick.len();
        for i in (0..n).rev() {
            if pick[i] < m - n + i {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    loop {
        let mut a: Vec<Vec<f64>> = pick.iter().map(|&r| rows[r].0.clone()).collect();
        let mut b: Vec<f64> = pick.iter().map(|&r| rows[r].1).collect();
        if let Some(x) = gauss(&mut a, &mut b) {
            let ok = x.iter().all(|v| *v >= -1e-9)
                && lp.constraints.iter().all(|c| {
                    let lhs: f64 = c.coeffs.iter().zip(&x).map(|(u, v)| u * v).sum();
                    match c.rel {
                        Relation::Le => lhs <= c.rhs + 1e-9,
                        Relation::Ge => lhs >= c.rhs - 1e-9,
                        Relation::Eq => (lhs - c.rhs).abs() <= 1e-9,
                    }
                });
            if ok {
                let v: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        if !next(&mut pick, m) {
            return best;
        }
    }
}

fn gauss(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn c9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    // Joint two-DC solver against a 1e-3 grid over the split of α.
    let alpha = 1e-2;
    let pareto_isf = |u: f64| u.powf(-1.0 / 3.0) - 1.0;
    let weibull_isf = |u: f64| (-u.ln()).sqrt();
    let cases: [(&str, MarginalModel, &dyn Fn(f64) -> f64); 2] = [
        ("Pareto(3)", MarginalModel::pareto(3.0, 1.0).unwrap(), &pareto_isf),
        ("Weibull(2)", MarginalModel::weibull(2.0, 1.0).unwrap(), &weibull_isf),
    ];
    for (name, m, isf) in cases {
        let inst = pair(m.clone(), m, [0.5, 0.9], JointMode::Joint);
        let solver = solve_ccp(&inst, alpha).unwrap().cost;
        let brute = (1..1000)
            .map(|i| {
                let u = alpha * i as f64 / 1000.0;
                let v = 1.0 - (1.0 - alpha) / (1.0 - u);
                1.5 * isf(u) + 1.9 * isf(v)
            })
            .fold(f64::INFINITY, f64::min);
        let rel = (solver / brute - 1.0).abs();
        pass &= rel <= 0.005;
        parts.push(format!("{name} joint solver vs grid {rel:.1e}"));
    }

    // Simplex against vertex enumeration on random 5×5 programs.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut status_agree = true;
    for _ in 0..30 {
        let mut lp = LinearProgram::new((0..5).map(|_| rng.gen_range(-1.0..0.5)).collect());
        for k in 0..5 {
            let coeffs: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
            let (rel, rhs) = if k < 3 { (Relation::Le, rng.gen_range(1.0..2.0)) } else { (Relation::Ge, rng.gen_range(0.0..0.6)) };
            lp.constraints.push(Constraint { coeffs, rel, rhs });
        }
        let sol = solve_lp(&lp).unwrap();
        match (sol.status, vertex_enumeration(&lp)) {
            (LpStatus::Optimal, Some(v)) => worst = worst.max((sol.value - v).abs()),
            (LpStatus::Infeasible, None) => {}
            _ => status_agree = false,
        }
    }
    pass &= worst <= 1e-6 && status_agree;
    parts.push(format!("LP vs vertex enumeration max |Δ| {worst:.1e}"));

    // Monte Carlo against the closed form at n = 1e6.
    let m = MarginalModel::pareto(3.0, 1.0).unwrap();
    let inst = pair(m.clone(), m, [0.5, 0.9], JointMode::Joint);
    let Family::RhsNetwork(net) = &inst.family else { unreachable!() };
    let q = [4.0, 3.0];
    let x = net.decision_from_targets(&q);
    let exact = 1.0 - (1.0 - 5f64.powi(-3)) * (1.0 - 4f64.powi(-3));
    let lib = violation_probability(&inst, &x, OracleMethod::ClosedForm).unwrap().p;
    let n = 1_000_000;
    let mc = monte_carlo(&inst, &x, n, 77);
    let (lo, hi) = wilson((mc.p * n as f64).round(), n as f64);
    let ok = (lo..=hi).contains(&exact) && (lib / exact - 1.0).abs() < 1e-12;
    pass &= ok;
    parts.push(format!("MC {:.5} Wilson [{lo:.5}, {hi:.5}] ∋ exact {exact:.5}", mc.p));
    outcome(pass, parts.join("; "))
}

fn plans_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans")
}

fn run_plan(command: &str, plan: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_relscale"))
        .args([command, "--config"])
        .arg(plan)
        .arg("--out")
        .arg(out)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn c10() -> Outcome {
    let base = std::env::temp_dir().join(format!("relscale-acceptance-{}", std::process::id()));
    let mut plans: Vec<PathBuf> = std::fs::read_dir(plans_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    plans.sort();
    let mut pass = true;
    let mut parts = Vec::new();
    for plan in &plans {
        let text = std::fs::read_to_string(plan).unwrap();
        let command = text
            .lines()
            .find_map(|l| l.strip_prefix("command = "))
            .map(|c| c.trim().trim_matches('"').to_string())
            .expect("plan names its command");
        let stem = plan.file_stem().unwrap().to_string_lossy().to_string();
        let (a, b) = (base.join(format!("{stem}-a")), base.join(format!("{stem}-b")));
        let ran = run_plan(&command, plan, &a) && run_plan(&command, plan, &b);
        let same = ran && {
            let mut files: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
            files.sort();
            !files.is_empty() && files.iter().all(|f| std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok())
        };
        pass &= same;
        if !same {
            parts.push(format!("{stem} differs"));
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    parts.insert(0, format!("{} plans rerun byte-identical", plans.len() - parts.len()));
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, f64); 10] = [
        ("C1", c1, 60.0),
        ("C2", c2, 5.0),
        ("C3", c3, 60.0),
        ("C4", c4, 30.0),
        ("C5", c5, 60.0),
        ("C6", c6, 30.0),
        ("C7", c7, 60.0),
        ("C8", c8, 600.0),
        ("C9", c9, 300.0),
        ("C10", c10, f64::INFINITY),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, f, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| id.eq_ignore_ascii_case(p)) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = out.pass && secs < budget;
        failed += !pass as usize;
        let budget_note = if budget.is_finite() { format!(" (budget {budget:.0} s)") } else { String::new() };
        println!("{id} {} {} [{secs:.1} s{budget_note}]", if pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
