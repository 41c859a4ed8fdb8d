//! Seeded factory/DC transportation instances.
//!
//! DC `j ∈ 1..=N` is joined to factory `i ∈ 0..M` when `⌈j/10⌉ mod M = i` or
//! `⌊j/10⌋ mod M = i`. Capacity costs are U[0,2], transport costs U[0,1] on
//! the first edge of a DC and U[0,0.8] on the second, demand means U[1,2].

use super::{CcpInstance, Family, JointMode, Network};
use crate::distributions::{JointModel, MarginalModel};
use crate::error::Result;
use crate::rng::StreamRng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandFamily {
    /// `P(ξ > x) = (1 + x/s)^{-γ}` with `s = (γ − 1)·mean`.
    Pareto { index: f64 },
    Gamma { shape: f64 },
    Weibull { shape: f64 },
    /// Standard deviation `cv·mean`.
    Gaussian { cv: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default = "default_factories")]
    pub factories: usize,
    #[serde(default = "default_dcs")]
    pub dcs: usize,
    pub seed: u64,
}

fn default_factories() -> usize {
    5
}
fn default_dcs() -> usize {
    50
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec { factories: 5, dcs: 50, seed: 1 }
    }
}

const STREAM_COSTS: u64 = 1;
const STREAM_MEANS: u64 = 2;

pub fn transport_network(spec: &NetworkSpec) -> Network {
    let (m, n) = (spec.factories, spec.dcs);
    let mut rng = StreamRng::new(spec.seed, STREAM_COSTS);
    let capacity_costs: Vec<f64> = (0..m).map(|_| 2.0 * rng.gen::<f64>()).collect();
    let mut edges = Vec::new();
    let mut transport_costs = Vec::new();
    for j in 1..=n {
        let first = j.div_ceil(10) % m;
        let second = (j / 10) % m;
        edges.push([first, j - 1]);
        transport_costs.push(rng.gen::<f64>());
        if second != first {
            edges.push([second, j - 1]);
            transport_costs.push(0.8 * rng.gen::<f64>());
        }
    }
    Network { factories: m, dcs: n, edges, capacity_costs, transport_costs }
}

pub fn demand_means(spec: &NetworkSpec) -> Vec<f64> {
    let mut rng = StreamRng::new(spec.seed, STREAM_MEANS);
    (0..spec.dcs).map(|_| 1.0 + rng.gen::<f64>()).collect()
}

pub fn marginal_with_mean(family: DemandFamily, mean: f64) -> Result<MarginalModel> {
    Ok(match family {
        DemandFamily::Pareto { index } => MarginalModel::pareto(index, (index - 1.0) * mean)?,
        DemandFamily::Gamma { shape } => MarginalModel::gamma_dist(shape, mean / shape)?,
        DemandFamily::Weibull { shape } => MarginalModel::weibull(shape, mean / ln_gamma(1.0 + 1.0 / shape).exp())?,
        DemandFamily::Gaussian { cv } => MarginalModel::gaussian(mean, cv * mean)?,
    })
}

/// Network with independent demands of the given family.
pub fn network_instance(spec: &NetworkSpec, family: DemandFamily, mode: JointMode) -> Result<CcpInstance> {
    let marginals = demand_means(spec).into_iter().map(|m| marginal_with_mean(family, m)).collect::<Result<Vec<_>>>()?;
    CcpInstance::new(Family::RhsNetwork(transport_network(spec)), mode, JointModel::independent(marginals)?)
}
