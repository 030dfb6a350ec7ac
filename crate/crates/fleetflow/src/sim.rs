//! Discrete-time fluid simulation of the ride-hailing market.
//!
//! Drivers are a unit of infinitely divisible mass. Each step a pricing
//! policy quotes a (possibly randomized) price per edge; the induced demand
//! realizes at its expectation, acceptances are capped by the available mass
//! at each origin (scaled proportionally across that origin's edges when
//! rationing), and accepted mass enters the edge's pipeline for its travel
//! time before rejoining the available pool at the destination.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::ironing::PriceMixture;
use crate::solver::PlanMode;
use crate::transform::ContractedPlan;
use crate::{Error, Result};

/// A pricing (and, for the optimized plan, dispatching) policy.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Constant per-minute fare: a trip costs `alpha * minutes`.
    Fixed { alpha: f64 },
    /// Per-minute fare with a per-origin multiplier in `[beta_min, beta_max]`
    /// chosen each step to clear the local market.
    Surge { alpha: f64, beta_min: f64, beta_max: f64 },
    /// Follow a solved plan's flows via their attaining price mixtures
    /// (rejection and zero-fare relocation included).
    Dynam(DynamPolicy),
}

/// Price mixtures per plan step and edge; `None` where the plan moves nothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamPolicy {
    pub mixtures: Vec<Vec<Option<PriceMixture>>>,
}

impl DynamPolicy {
    /// Derive the mixtures that realize a contracted plan on its instance.
    pub fn from_plan(
        instance: &Instance,
        plan: &ContractedPlan,
        grid_size: usize,
        step_minutes: u32,
    ) -> Result<Self> {
        let envelopes = instance.envelopes(grid_size)?;
        let mut mixtures = Vec::with_capacity(plan.flows.len());
        for (step, flows) in plan.flows.iter().enumerate() {
            let mut row = Vec::with_capacity(flows.len());
            for (e, &q) in flows.iter().enumerate() {
                if q <= 1e-12 {
                    row.push(None);
                    continue;
                }
                let period = match plan.mode {
                    PlanMode::Static => 0,
                    PlanMode::Dynamic { .. } => instance.period_of_step(step, step_minutes),
                };
                let envs = &envelopes[e];
                let env = &envs[period % envs.len()];
                row.push(Some(env.price_mixture(instance.curve(e, period), q)?));
            }
            mixtures.push(row);
        }
        Ok(DynamPolicy { mixtures })
    }
}

/// Initial simulation state: available mass per node plus in-transit
/// pipeline cohorts per edge (slot `j` arrives after `j + 1` more steps).
#[derive(Debug, Clone)]
pub struct SimStart {
    pub available: Vec<f64>,
    pub pipelines: Vec<Vec<f64>>,
}

impl SimStart {
    /// Everything parked at the given node distribution, nothing in transit.
    pub fn all_available(instance: &Instance, available: Vec<f64>) -> Self {
        let pipelines =
            instance.graph.edges().iter().map(|e| vec![0.0; e.travel_time as usize]).collect();
        SimStart { available, pipelines }
    }

    /// The steady state of a stationary plan: its node distribution plus the
    /// in-transit cohorts its chain occupancy implies.
    pub fn from_plan(instance: &Instance, plan: &ContractedPlan) -> Self {
        let mut start = SimStart::all_available(instance, plan.available[0].clone());
        for (e, edge) in instance.graph.edges().iter().enumerate() {
            let k = edge.travel_time as usize;
            for pos in 1..k {
                // A cohort that completed `pos` hops arrives after k - pos
                // more steps.
                let mass = plan.pipeline[e].get(pos - 1).copied().unwrap_or(0.0);
                start.pipelines[e][k - pos - 1] = mass;
            }
        }
        start
    }

    pub fn total_mass(&self) -> f64 {
        self.available.iter().sum::<f64>() + self.pipelines.iter().flatten().sum::<f64>()
    }
}

/// Price realization mode: fluid expectation (default, deterministic) or
/// seeded sampling of one price per edge and step.
#[derive(Debug, Clone, Copy)]
pub enum DemandRealization {
    Expectation,
    Sampled { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub steps: usize,
    pub step_minutes: u32,
    pub realization: DemandRealization,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { steps: 96, step_minutes: 15, realization: DemandRealization::Expectation }
    }
}

/// Per-step simulation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub revenue: f64,
    /// Accepted mass per edge (includes zero-fare relocation).
    pub accepted: Vec<f64>,
    /// Available mass per node at the start of the step.
    pub available: Vec<f64>,
    /// Available supply / induced demand per node; `None` with no demand.
    pub supply_ratio: Vec<Option<f64>>,
    /// Available plus in-transit mass (conserved).
    pub total_mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTrace {
    pub steps: Vec<StepRecord>,
    pub step_minutes: u32,
}

impl SimTrace {
    pub fn time_average_revenue(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.revenue).sum::<f64>() / self.steps.len() as f64
    }

    pub fn total_revenue(&self) -> f64 {
        self.steps.iter().map(|s| s.revenue).sum()
    }

    /// Mean absolute deviation of supply ratios from balance (1.0), over all
    /// node/step pairs where demand was present.
    pub fn mean_supply_ratio_deviation(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for step in &self.steps {
            for ratio in step.supply_ratio.iter().flatten() {
                sum += (ratio - 1.0).abs();
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// Smallest multiplier in `[beta_min, beta_max]` whose surged per-minute
/// price keeps the node's induced demand within the available supply;
/// `beta_max` if even that cannot clear the market.
#[allow(clippy::too_many_arguments)]
pub fn surge_multiplier(
    instance: &Instance,
    node: usize,
    available: f64,
    alpha: f64,
    beta_min: f64,
    beta_max: f64,
    period: usize,
    step_minutes: u32,
) -> Result<f64> {
    let demand_at = |beta: f64| -> Result<f64> {
        let mut total = 0.0;
        for &e in instance.graph.out_edges(node) {
            let minutes = instance.graph.edge(e).travel_time as f64 * step_minutes as f64;
            total += instance.curve(e, period).eval(alpha * beta * minutes)?;
        }
        Ok(total)
    };
    if demand_at(beta_min)? <= available {
        return Ok(beta_min);
    }
    if demand_at(beta_max)? > available {
        return Ok(beta_max);
    }
    let (mut lo, mut hi) = (beta_min, beta_max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if demand_at(mid)? <= available {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }
    Ok(hi)
}

/// Run the fluid simulation and record revenue, acceptance and supply-ratio
/// traces.
pub fn run_simulation(
    instance: &Instance,
    policy: &Policy,
    start: &SimStart,
    config: &SimConfig,
) -> Result<SimTrace> {
    let graph = &instance.graph;
    let n_nodes = graph.node_count();
    let n_edges = graph.edge_count();
    if start.available.len() != n_nodes || start.pipelines.len() != n_edges {
        return Err(Error::DimensionMismatch("start state does not match instance".into()));
    }
    if start.available.iter().any(|&w| w < -1e-9) {
        return Err(Error::InvalidInput("negative initial availability".into()));
    }
    let mass0 = start.total_mass();
    if (mass0 - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("initial driver mass is {mass0}, expected 1")));
    }
    if config.steps < 1 {
        return Err(Error::InvalidInput("steps must be >= 1".into()));
    }

    let mut rng = match config.realization {
        DemandRealization::Sampled { seed } => Some(StdRng::seed_from_u64(seed)),
        DemandRealization::Expectation => None,
    };

    let mut available = start.available.clone();
    let mut pipelines = start.pipelines.clone();
    let mut records = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let period = instance.period_of_step(step, config.step_minutes);

        // Quoted mixture per edge: (price, probability) entries.
        let mut quotes: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_edges];
        match policy {
            Policy::Fixed { alpha } => {
                for (e, edge) in graph.edges().iter().enumerate() {
                    let minutes = edge.travel_time as f64 * config.step_minutes as f64;
                    quotes[e].push((alpha * minutes, 1.0));
                }
            }
            Policy::Surge { alpha, beta_min, beta_max } => {
                for v in 0..n_nodes {
                    let beta = surge_multiplier(
                        instance,
                        v,
                        available[v],
                        *alpha,
                        *beta_min,
                        *beta_max,
                        period,
                        config.step_minutes,
                    )?;
                    for &e in graph.out_edges(v) {
                        let minutes = graph.edge(e).travel_time as f64 * config.step_minutes as f64;
                        quotes[e].push((alpha * beta * minutes, 1.0));
                    }
                }
            }
            Policy::Dynam(dynam) => {
                let plan_row = &dynam.mixtures[step % dynam.mixtures.len()];
                if plan_row.len() != n_edges {
                    return Err(Error::DimensionMismatch(
                        "plan mixtures do not match instance edges".into(),
                    ));
                }
                for (e, mix) in plan_row.iter().enumerate() {
                    if let Some(mix) = mix {
                        quotes[e] = mix.entries.clone();
                    }
                    // No mixture: implicit rejection, zero demand.
                }
            }
        }

        // Sampled mode collapses each mixture to one drawn price.
        if let Some(rng) = rng.as_mut() {
            for quote in quotes.iter_mut() {
                if quote.len() > 1 {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut chosen = quote[quote.len() - 1].0;
                    for &(price, prob) in quote.iter() {
                        acc += prob;
                        if u <= acc {
                            chosen = price;
                            break;
                        }
                    }
                    *quote = vec![(chosen, 1.0)];
                }
            }
        }

        // Induced demand and margin-weighted revenue potential per edge.
        let mut induced = vec![0.0; n_edges];
        let mut revenue_per_unit_scale = vec![0.0; n_edges];
        for (e, quote) in quotes.iter().enumerate() {
            let curve = instance.curve(e, period);
            let cost = graph.edge(e).cost;
            for &(price, prob) in quote {
                let d = curve.eval(price)?;
                induced[e] += prob * d;
                revenue_per_unit_scale[e] += prob * d * (price - cost);
            }
        }

        // Ration proportionally where induced demand exceeds availability.
        let mut scale = vec![1.0; n_nodes];
        let mut supply_ratio = vec![None; n_nodes];
        for v in 0..n_nodes {
            let demand_out: f64 = graph.out_edges(v).iter().map(|&e| induced[e]).sum();
            if demand_out > 1e-12 {
                supply_ratio[v] = Some(available[v] / demand_out);
                if demand_out > available[v] {
                    scale[v] = available[v] / demand_out;
                }
            }
        }
        // In expectation mode a feasible plan's flows always fit the supply.
        if matches!(policy, Policy::Dynam(_)) && rng.is_none() {
            for v in 0..n_nodes {
                debug_assert!(
                    scale[v] >= 1.0 - 1e-7,
                    "optimized plan rationed at node {v} step {step}: scale {}",
                    scale[v]
                );
            }
        }

        let available_before = available.clone();
        let mut accepted = vec![0.0; n_edges];
        let mut revenue = 0.0;
        for (e, edge) in graph.edges().iter().enumerate() {
            let s = scale[edge.from];
            accepted[e] = s * induced[e];
            revenue += s * revenue_per_unit_scale[e];
            available[edge.from] -= accepted[e];
            let last = pipelines[e].len() - 1;
            pipelines[e][last] += accepted[e];
        }
        // Advance time: cohorts in slot 0 arrive for the next step.
        for (e, edge) in graph.edges().iter().enumerate() {
            let arriving = pipelines[e].remove(0);
            pipelines[e].push(0.0);
            available[edge.to] += arriving;
        }
        for w in available.iter_mut() {
            if *w < 0.0 {
                debug_assert!(*w > -1e-9, "availability went negative: {w}");
                *w = 0.0;
            }
        }

        let total_mass = available.iter().sum::<f64>() + pipelines.iter().flatten().sum::<f64>();
        records.push(StepRecord {
            revenue,
            accepted,
            available: available_before,
            supply_ratio,
            total_mass,
        });
    }

    Ok(SimTrace { steps: records, step_minutes: config.step_minutes })
}

/// Summary statistics of one policy's trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicySummary {
    pub name: String,
    pub time_average_revenue: f64,
    pub total_revenue: f64,
    pub mean_supply_ratio_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub summaries: Vec<PolicySummary>,
    pub traces: Vec<SimTrace>,
}

/// Run several policies on the same instance, horizon and start state.
pub fn compare_policies(
    instance: &Instance,
    policies: &[(String, Policy)],
    start: &SimStart,
    config: &SimConfig,
) -> Result<Comparison> {
    let mut summaries = Vec::with_capacity(policies.len());
    let mut traces = Vec::with_capacity(policies.len());
    for (name, policy) in policies {
        let trace = run_simulation(instance, policy, start, config)?;
        summaries.push(PolicySummary {
            name: name.clone(),
            time_average_revenue: trace.time_average_revenue(),
            total_revenue: trace.total_revenue(),
            mean_supply_ratio_deviation: trace.mean_supply_ratio_deviation(),
        });
        traces.push(trace);
    }
    Ok(Comparison { summaries, traces })
}
