//! TOML experiment plans.

use relscale::ccp::generator::{network_instance, DemandFamily, NetworkSpec};
use relscale::ccp::{CcpInstance, JointMode};
use relscale::dro::{Dispersion, FDivergence};
use relscale::scaling::log_grid;
use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    ScalingSweep,
    DroCompare,
    CvarRefine,
    Bonferroni,
    Pareto,
    Pmodel,
    GenerateInstance,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::ScalingSweep => "scaling-sweep",
            Command::DroCompare => "dro-compare",
            Command::CvarRefine => "cvar-refine",
            Command::Bonferroni => "bonferroni",
            Command::Pareto => "pareto",
            Command::Pmodel => "pmodel",
            Command::GenerateInstance => "generate-instance",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkPlan {
    #[serde(default = "default_factories")]
    pub factories: usize,
    #[serde(default = "default_dcs")]
    pub dcs: usize,
    #[serde(default = "default_net_seed")]
    pub seed: u64,
    #[serde(default = "default_demand")]
    pub demand: DemandFamily,
    #[serde(default = "default_mode")]
    pub mode: JointMode,
}

fn default_factories() -> usize {
    5
}
fn default_dcs() -> usize {
    50
}
fn default_net_seed() -> u64 {
    1
}
fn default_demand() -> DemandFamily {
    DemandFamily::Pareto { index: 3.0 }
}
fn default_mode() -> JointMode {
    JointMode::Individual
}

impl Default for NetworkPlan {
    fn default() -> Self {
        NetworkPlan {
            factories: default_factories(),
            dcs: default_dcs(),
            seed: default_net_seed(),
            demand: default_demand(),
            mode: default_mode(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPlan {
    pub hi: f64,
    pub lo: f64,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
}

fn default_per_decade() -> usize {
    4
}

/// Ambiguity set compared against the nominal problem.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Ambiguity {
    Marginal,
    Wasserstein { p: f64, eta: f64, #[serde(default = "default_eps")] eps: f64 },
    Moment { dispersion: Dispersion, mu: Vec<f64>, #[serde(default = "default_eps")] eps: f64 },
}

fn default_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub seed: u64,
    pub command: Option<String>,
    /// Instance TOML, relative to the plan file.
    pub instance: Option<PathBuf>,
    pub network: Option<NetworkPlan>,
    /// Overrides the instance's joint mode.
    pub mode: Option<JointMode>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub grid: Option<GridPlan>,
    pub divergence: Option<FDivergence>,
    pub ambiguity: Option<Ambiguity>,
    /// Sample count for the sample-average CVaR estimator; analytic when absent.
    pub cvar_samples: Option<usize>,
    /// Sample CSV, relative to the plan file; drawn from the model when absent.
    pub samples: Option<PathBuf>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_base_alpha")]
    pub base_alpha: f64,
    pub t_grid: Option<Vec<f64>>,
    pub budget_multipliers: Option<Vec<f64>>,
    pub replications: Option<usize>,
    #[serde(skip)]
    pub dir: PathBuf,
}

fn default_n_samples() -> usize {
    1000
}
fn default_base_alpha() -> f64 {
    relscale::datadriven::DEFAULT_BASE_LEVEL
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Plan {
    pub fn load(path: &Path, command: Command) -> Result<Plan, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        let mut plan: Plan = toml::from_str(&text).map_err(|e| config(e.to_string()))?;
        plan.dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(c) = &plan.command {
            if c != command.name() {
                return Err(config(format!("plan is for `{c}` but `{}` was invoked", command.name())));
            }
        }
        if plan.instance.is_some() && plan.network.is_some() {
            return Err(config("give either `instance` or `[network]`, not both"));
        }
        for p in [&plan.instance, &plan.samples].into_iter().flatten() {
            if !plan.dir.join(p).exists() {
                return Err(config(format!("referenced path {} does not exist", p.display())));
            }
        }
        Ok(plan)
    }

    pub fn network_plan(&self) -> NetworkPlan {
        self.network.clone().unwrap_or_default()
    }

    pub fn instance(&self) -> Result<CcpInstance, CliError> {
        let inst = match &self.instance {
            Some(p) => {
                let path = self.dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
                CcpInstance::from_toml(&text)?
            }
            None => {
                let n = self.network_plan();
                let spec = NetworkSpec { factories: n.factories, dcs: n.dcs, seed: n.seed };
                network_instance(&spec, n.demand, n.mode)?
            }
        };
        Ok(match self.mode {
            Some(m) => inst.with_mode(m),
            None => inst,
        })
    }

    pub fn alpha(&self) -> Result<f64, CliError> {
        let a = self.alpha.ok_or_else(|| config("missing `alpha`"))?;
        check_alpha(a)?;
        Ok(a)
    }

    /// The α grid, validated nonempty, inside (0, 1) and strictly descending.
    pub fn alphas(&self) -> Result<Vec<f64>, CliError> {
        let grid = match (&self.alphas, &self.grid) {
            (Some(_), Some(_)) => return Err(config("give either `alphas` or `[grid]`, not both")),
            (Some(a), None) => a.clone(),
            (None, Some(g)) => {
                if !(g.hi > g.lo && g.lo > 0.0 && g.per_decade > 0) {
                    return Err(config("grid needs hi > lo > 0 and per_decade > 0"));
                }
                log_grid(g.hi, g.lo, g.per_decade)
            }
            (None, None) => match self.alpha {
                Some(a) => vec![a],
                None => return Err(config("missing `alphas` or `[grid]`")),
            },
        };
        if grid.is_empty() {
            return Err(config("empty α grid"));
        }
        for a in &grid {
            check_alpha(*a)?;
        }
        if grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config("α grid must be strictly descending"));
        }
        Ok(grid)
    }

    pub fn positive_grid(name: &str, v: &Option<Vec<f64>>) -> Result<Vec<f64>, CliError> {
        let v = v.clone().ok_or_else(|| config(format!("missing `{name}`")))?;
        if v.is_empty() {
            return Err(config(format!("empty `{name}`")));
        }
        if v.iter().any(|x| !(*x >= 1.0 && x.is_finite())) {
            return Err(config(format!("`{name}` entries must be finite and ≥ 1")));
        }
        Ok(v)
    }
}

fn check_alpha(a: f64) -> Result<(), CliError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(config(format!("α = {a} must lie in (0, 1)")))
    }
}
