mod plan;
mod svg;

use clap::Parser;
use plan::{Ambiguity, Command, Plan};
use rayon::prelude::*;
use relscale::approx::{line_search_refine, solve_bonferroni, solve_cvar_approx, ApproxConfig, CvarEstimator};
use relscale::ccp::{scaling_sweep, SweepRow};
use relscale::ccp::{default_mc_n, has_closed_form, solve_ccp, solve_ccp_seeded, CcpInstance, Family, OracleMethod};
use relscale::datadriven::{
    pareto_experiment, pmodel_experiment, saa_tapering, trajectory_experiment, ResultTable, SampleSet,
    DEFAULT_REPLICATIONS,
};
use relscale::dro::{certify_moment_floor, certify_wasserstein_floor, dro_report, solve_marginal_dro, DivKind, FDivergence};
use relscale::rng::derive_seed;
use serde_json::json;
use std::path::{Path, PathBuf};
use svg::{Chart, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] relscale::error::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Solver(relscale::error::Error::Config(_)) => "ConfigError",
            CliError::Solver(_) => "SolverError",
            CliError::Io(_) => "IoError",
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum DivArg {
    Kl,
    ChiSquare,
    ExpGrowth,
}

#[derive(Debug, Parser)]
#[command(name = "relscale", version, about = "Chance-constrained provisioning experiments")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment plan (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// f-divergence for dro-compare; overrides the plan.
    #[arg(long, value_enum)]
    div: Option<DivArg>,
    #[arg(long)]
    eta: Option<f64>,
}

/// One command's artifacts.
struct Output {
    csv: String,
    chart: Chart,
    extra: Vec<(&'static str, String)>,
}

/// CSV with a header; numbers in shortest round-trip form.
struct Csv {
    text: String,
}

enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")) }
    }

    fn row(&mut self, cells: Vec<Cell>) {
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(v) if v.is_nan() => String::new(),
                Cell::Num(v) => format!("{v:?}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.replace(',', ";"),
            })
            .collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

fn series(name: &str, xs: &[f64], ys: &[f64]) -> Series {
    Series { name: name.into(), xs: xs.to_vec(), ys: ys.to_vec() }
}

fn inv(alphas: &[f64]) -> Vec<f64> {
    alphas.iter().map(|a| 1.0 / a).collect()
}

fn cost_chart(title: &str, alphas: &[f64], series_list: Vec<(&str, Vec<f64>)>) -> Chart {
    let xs = inv(alphas);
    Chart {
        title: title.into(),
        x_label: "1/α".into(),
        y_label: "cost".into(),
        log_x: true,
        log_y: true,
        series: series_list.into_iter().map(|(n, ys)| series(n, &xs, &ys)).collect(),
    }
}

fn table_chart(table: &ResultTable, title: &str, x: &str, ys: &[&str], log_x: bool, log_y: bool, y_label: &str) -> Chart {
    let xs = table.column(x);
    Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y_label.into(),
        log_x,
        log_y,
        series: ys.iter().map(|c| series(c, &xs, &table.column(c))).collect(),
    }
}

fn err_cell<T>(r: &Result<T, relscale::error::Error>) -> Cell {
    match r {
        Ok(_) => Cell::Text(String::new()),
        Err(e) => Cell::Text(e.code().into()),
    }
}

fn run_solve(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    let alpha = plan.alpha()?;
    let rec = solve_ccp_seeded(inst, alpha, plan.seed)?;
    let mut csv = Csv::new(&["alpha", "cost", "p", "p_lower", "p_upper", "method", "index", "x", "target"]);
    for (i, x) in rec.x.iter().enumerate() {
        let target = rec.targets.as_ref().and_then(|q| q.get(i).copied()).unwrap_or(f64::NAN);
        csv.row(vec![
            alpha.into(),
            rec.cost.into(),
            rec.p.p.into(),
            rec.p.lower.into(),
            rec.p.upper.into(),
            rec.method.clone().into(),
            i.into(),
            (*x).into(),
            target.into(),
        ]);
    }
    let idx: Vec<f64> = (0..rec.x.len()).map(|i| i as f64).collect();
    let chart = Chart {
        title: format!("decision at α = {alpha:e}"),
        x_label: "index".into(),
        y_label: "x".into(),
        log_x: false,
        log_y: false,
        series: vec![series("x", &idx, &rec.x)],
    };
    Ok(Output { csv: csv.text, chart, extra: Vec::new() })
}

fn run_sweep(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    let alphas = plan.alphas()?;
    let table = scaling_sweep(inst, &alphas)?;
    let mut csv = Csv::new(&["alpha", "s_alpha", "cost", "predicted", "ratio", "cost_over_s_r", "method", "error"]);
    for row in &table.rows {
        csv.row(vec![
            row.alpha.into(),
            row.s_alpha.into(),
            row.cost.into(),
            row.predicted.into(),
            row.ratio.into(),
            (row.cost / row.s_alpha.powf(table.r)).into(),
            row.method.clone().into(),
            row.error.clone().unwrap_or_default().into(),
        ]);
    }
    let col = |f: fn(&SweepRow) -> f64| table.rows.iter().map(f).collect::<Vec<_>>();
    let chart = cost_chart("optimal cost against the scaling prediction", &alphas, vec![("v*_α", col(|r| r.cost)), ("v* s_α^r", col(|r| r.predicted))]);
    Ok(Output { csv: csv.text, chart, extra: Vec::new() })
}

fn divergence(plan: &Plan, args: &Args) -> Result<FDivergence, CliError> {
    let mut d = plan.divergence.clone().unwrap_or(FDivergence { kind: DivKind::Kl, eta: 0.1 });
    if let Some(k) = args.div {
        d.kind = match k {
            DivArg::Kl => DivKind::Kl,
            DivArg::ChiSquare => DivKind::ChiSquare,
            DivArg::ExpGrowth => DivKind::ExpGrowth,
        };
    }
    if let Some(eta) = args.eta {
        d.eta = eta;
    }
    d.validate()?;
    Ok(d)
}

fn run_dro(plan: &Plan, inst: &CcpInstance, args: &Args) -> Result<Output, CliError> {
    let alphas = plan.alphas()?;
    match &plan.ambiguity {
        None => {
            let div = divergence(plan, args)?;
            let rep = dro_report(inst, &div, &alphas)?;
            let title = format!("{} ball, η = {} ({})", div.name(), div.eta, rep.scale_class.label());
            let chart = cost_chart(&title, &alphas, vec![("nominal", rep.nominal_costs.clone()), ("DRO", rep.dro_costs.clone())]);
            Ok(Output { csv: rep.to_csv(), chart, extra: Vec::new() })
        }
        Some(Ambiguity::Marginal) => {
            let rows: Vec<_> = alphas.par_iter().map(|a| (solve_ccp(inst, *a), solve_marginal_dro(inst, *a))).collect();
            let mut csv = Csv::new(&["alpha", "nominal_cost", "dro_cost", "ratio", "error"]);
            let (mut nom, mut dro) = (Vec::new(), Vec::new());
            for (a, (n, d)) in alphas.iter().zip(&rows) {
                let nc = n.as_ref().map_or(f64::NAN, |r| r.cost);
                let dc = d.as_ref().map_or(f64::NAN, |r| r.cost);
                let err = if n.is_err() { err_cell(n) } else { err_cell(d) };
                csv.row(vec![(*a).into(), nc.into(), dc.into(), (dc / nc).into(), err]);
                nom.push(nc);
                dro.push(dc);
            }
            let chart = cost_chart("marginal ambiguity set", &alphas, vec![("nominal", nom), ("DRO", dro)]);
            Ok(Output { csv: csv.text, chart, extra: Vec::new() })
        }
        Some(amb) => {
            let (curve, title) = match amb {
                Ambiguity::Wasserstein { p, eta, eps } => {
                    (certify_wasserstein_floor(inst, *p, *eta, &alphas, *eps)?, format!("Wasserstein-{p} floor, η = {eta}"))
                }
                Ambiguity::Moment { dispersion, mu, eps } => (certify_moment_floor(inst, dispersion, mu, &alphas, *eps)?, "moment floor".to_string()),
                Ambiguity::Marginal => unreachable!(),
            };
            let mut csv = Csv::new(&["alpha", "floor_cost", "nominal_cost", "parameter", "slope"]);
            let slope = curve.slope();
            for i in 0..alphas.len() {
                csv.row(vec![alphas[i].into(), curve.floor_costs[i].into(), curve.nominal_costs[i].into(), curve.parameter.into(), slope.into()]);
            }
            let chart = cost_chart(&title, &alphas, vec![("nominal", curve.nominal_costs.clone()), ("certified floor", curve.floor_costs.clone())]);
            Ok(Output { csv: csv.text, chart, extra: Vec::new() })
        }
    }
}

fn run_cvar(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    let alphas = plan.alphas()?;
    let k = inst.n_constraints();
    let mut cfg = ApproxConfig::cvar_default(k);
    if let Some(n) = plan.cvar_samples {
        cfg.cvar_estimator = CvarEstimator::SampleAverage { n, seed: derive_seed(plan.seed, 1) };
    }
    let rows: Vec<_> = alphas
        .par_iter()
        .map(|&a| {
            let nominal = solve_ccp(inst, a);
            let cvar = solve_cvar_approx(inst, a, &cfg);
            let method = if has_closed_form(inst) {
                OracleMethod::ClosedForm
            } else {
                OracleMethod::MonteCarlo { n: default_mc_n(a), seed: derive_seed(plan.seed, 2) }
            };
            let refined = match &cvar {
                Ok(c) => line_search_refine(inst, &c.x, a, method),
                Err(e) => Err(e.clone()),
            };
            (nominal, cvar, refined)
        })
        .collect();
    let mut csv = Csv::new(&["alpha", "nominal_cost", "cvar_cost", "refined_cost", "cvar_ratio", "refined_gap", "refined_p", "error"]);
    let mut cols = [Vec::new(), Vec::new(), Vec::new()];
    for (a, (n, c, r)) in alphas.iter().zip(&rows) {
        let nc = n.as_ref().map_or(f64::NAN, |x| x.cost);
        let cc = c.as_ref().map_or(f64::NAN, |x| x.cost);
        let rc = r.as_ref().map_or(f64::NAN, |x| x.cost);
        let rp = r.as_ref().map_or(f64::NAN, |x| x.p.p);
        let err = [err_cell(n), err_cell(c), err_cell(r)]
            .into_iter()
            .find(|e| matches!(e, Cell::Text(s) if !s.is_empty()))
            .unwrap_or(Cell::Text(String::new()));
        csv.row(vec![(*a).into(), nc.into(), cc.into(), rc.into(), (cc / nc).into(), (rc / nc - 1.0).into(), rp.into(), err]);
        cols[0].push(nc);
        cols[1].push(cc);
        cols[2].push(rc);
    }
    let [n, c, r] = cols;
    let chart = cost_chart("CVaR approximation and line-search refinement", &alphas, vec![("nominal", n), ("CVaR", c), ("refined", r)]);
    Ok(Output { csv: csv.text, chart, extra: Vec::new() })
}

fn run_bonferroni(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    let alphas = plan.alphas()?;
    let cfg = ApproxConfig::bonferroni_default(inst.n_constraints());
    let rows: Vec<_> = alphas.par_iter().map(|&a| (solve_ccp(inst, a), solve_bonferroni(inst, a, &cfg))).collect();
    let mut csv = Csv::new(&["alpha", "nominal_cost", "bonferroni_cost", "ratio", "bonferroni_p", "error"]);
    let (mut nom, mut bon) = (Vec::new(), Vec::new());
    for (a, (n, b)) in alphas.iter().zip(&rows) {
        let nc = n.as_ref().map_or(f64::NAN, |x| x.cost);
        let bc = b.as_ref().map_or(f64::NAN, |x| x.cost);
        let bp = b.as_ref().map_or(f64::NAN, |x| x.p.p);
        let err = if n.is_err() { err_cell(n) } else { err_cell(b) };
        csv.row(vec![(*a).into(), nc.into(), bc.into(), (bc / nc).into(), bp.into(), err]);
        nom.push(nc);
        bon.push(bc);
    }
    let chart = cost_chart("union-bound approximation", &alphas, vec![("nominal", nom), ("Bonferroni", bon)]);
    Ok(Output { csv: csv.text, chart, extra: Vec::new() })
}

fn samples(plan: &Plan, inst: &CcpInstance) -> Result<SampleSet, CliError> {
    match &plan.samples {
        Some(p) => {
            let path = plan.dir.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(SampleSet::from_csv(&text)?)
        }
        None => Ok(SampleSet::from_model(&inst.model, plan.n_samples, plan.seed)),
    }
}

fn run_pareto(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    let t_grid = Plan::positive_grid("t_grid", &plan.t_grid)?;
    let s = samples(plan, inst)?;
    let table = pareto_experiment(&s, inst, plan.base_alpha, &t_grid)?;
    let reps = plan.replications.unwrap_or(DEFAULT_REPLICATIONS);
    let mut extra = Vec::new();
    if plan.alphas.is_some() || plan.grid.is_some() {
        let taper = saa_tapering(inst, plan.n_samples, &plan.alphas()?, reps, derive_seed(plan.seed, 3))?;
        extra.push(("saa.csv", taper.to_csv()));
    }
    if plan.replications.is_some() {
        let traj = trajectory_experiment(inst, plan.n_samples, plan.base_alpha, &t_grid, reps, derive_seed(plan.seed, 4))?;
        extra.push(("trajectory.csv", traj.to_csv()));
    }
    let chart = table_chart(&table, "extrapolated trajectory against the efficient frontier", "cost", &["p", "frontier_p"], false, true, "violation probability");
    Ok(Output { csv: table.to_csv(), chart, extra })
}

fn run_pmodel(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    let mults = Plan::positive_grid("budget_multipliers", &plan.budget_multipliers)?;
    let reps = plan.replications.unwrap_or(DEFAULT_REPLICATIONS);
    let table = pmodel_experiment(inst, plan.n_samples, plan.base_alpha, &mults, reps, plan.seed)?;
    let chart = table_chart(
        &table,
        "budget-constrained extrapolation",
        "budget_multiplier",
        &["median_ratio", "min_ratio", "max_ratio"],
        false,
        false,
        "log p / log ν*(B)",
    );
    Ok(Output { csv: table.to_csv(), chart, extra: Vec::new() })
}

fn run_generate(plan: &Plan, inst: &CcpInstance) -> Result<Output, CliError> {
    if plan.instance.is_some() {
        return Err(CliError::Config("generate-instance takes a `[network]` table, not an instance file".into()));
    }
    let Family::RhsNetwork(net) = &inst.family else { unreachable!("generated instances are networks") };
    let unit = net.unit_costs();
    let mut csv = Csv::new(&["dc", "unit_cost", "median_demand", "demand_q99"]);
    let (mut med, mut q99) = (Vec::new(), Vec::new());
    for (j, m) in inst.model.marginals.iter().enumerate() {
        let a = m.inverse_survival(0.5).map_err(relscale::error::Error::from)?;
        let b = m.inverse_survival(0.01).map_err(relscale::error::Error::from)?;
        csv.row(vec![j.into(), unit[j].into(), a.into(), b.into()]);
        med.push(a);
        q99.push(b);
    }
    let idx: Vec<f64> = (0..unit.len()).map(|j| j as f64).collect();
    let chart = Chart {
        title: format!("{} factories, {} DCs", net.factories, net.dcs),
        x_label: "DC".into(),
        y_label: "value".into(),
        log_x: false,
        log_y: false,
        series: vec![series("unit cost", &idx, &unit), series("median demand", &idx, &med), series("demand 0.99-quantile", &idx, &q99)],
    };
    Ok(Output { csv: csv.text, chart, extra: vec![("instance.toml", inst.to_toml())] })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn run(args: &Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut plan = Plan::load(&args.config, args.command)?;
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    let inst = plan.instance()?;
    log::info!("{} on a {}-dimensional instance, seed {}", args.command.name(), inst.model.dim(), plan.seed);
    let out = match args.command {
        Command::Solve => run_solve(&plan, &inst)?,
        Command::ScalingSweep => run_sweep(&plan, &inst)?,
        Command::DroCompare => run_dro(&plan, &inst, args)?,
        Command::CvarRefine => run_cvar(&plan, &inst)?,
        Command::Bonferroni => run_bonferroni(&plan, &inst)?,
        Command::Pareto => run_pareto(&plan, &inst)?,
        Command::Pmodel => run_pmodel(&plan, &inst)?,
        Command::GenerateInstance => run_generate(&plan, &inst)?,
    };
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
    write(&args.out, "results.csv", &out.csv)?;
    write(&args.out, "chart.svg", &out.chart.render())?;
    for (name, text) in &out.extra {
        write(&args.out, name, text)?;
    }
    log::info!("wrote {}", args.out.display());
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RELSCALE_LOG", "error")).init();
    let args = Args::parse();
    if let Err(e) = run(&args) {
        let mut context = json!({ "command": args.command.name(), "config": args.config.display().to_string() });
        if let CliError::Solver(inner) = &e {
            context["kind"] = json!(inner.code());
        }
        let body = json!({ "code": e.code(), "message": e.to_string(), "context": context });
        eprintln!("{body}");
        std::process::exit(if e.code() == "ConfigError" { 2 } else { 1 });
    }
}
