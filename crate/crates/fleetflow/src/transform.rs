//! Travel-time unification: replace every edge of travel time k > 1 with a
//! chain of k unit-time edges through k - 1 virtual nodes, and map solutions
//! back to the original instance.
//!
//! Chain edges share the original edge's demand curve; the objective and the
//! per-trip cost are split evenly across the chain, so traversing a whole
//! chain is worth exactly the original edge objective.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{CityGraph, Edge};
use crate::instance::{DemandProfile, Instance, NormalizationRecord};
use crate::ironing::{iron_objective, IronedObjective};
use crate::objective::{EdgeObjective, ObjectiveKind};
use crate::solver::{FlowPlan, PlanMode};
use crate::{Error, Result};

/// How an expanded instance maps back to its original.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionMap {
    /// Original edge index -> ordered expanded edge indices (length = travel time).
    pub chain: Vec<Vec<usize>>,
    /// Expanded node index -> Some((original edge, position 1..travel_time-1))
    /// for virtual nodes, None for real ones.
    pub virtual_origin: Vec<Option<(usize, usize)>>,
    /// Real nodes occupy expanded indices `0..n_real_nodes` in original order.
    pub n_real_nodes: usize,
    /// Expanded edge index -> (original edge, chain position).
    pub original_edge: Vec<(usize, usize)>,
}

/// A unit-travel-time instance produced by [`expand`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandedInstance {
    pub graph: CityGraph,
    /// Demand per expanded edge (clone of the original edge's profile).
    pub demand: Vec<DemandProfile>,
    pub objective: ObjectiveKind,
    /// Objective scale per expanded edge (1 / original travel time).
    pub scale: Vec<f64>,
    /// Original-edge cost per expanded edge (the full, unsplit cost; the
    /// expanded graph's edge costs carry the per-hop split).
    pub full_cost: Vec<f64>,
    pub mapping: ExpansionMap,
    pub normalization: NormalizationRecord,
}

impl ExpandedInstance {
    pub fn n_periods(&self) -> usize {
        self.demand.iter().map(|p| p.n_periods()).max().unwrap_or(1)
    }

    pub fn period_of_step(&self, step: usize, step_minutes: u32) -> usize {
        let n = self.n_periods();
        if n <= 1 {
            return 0;
        }
        (step * step_minutes as usize / 60) % n
    }

    pub fn is_virtual_node(&self, node: usize) -> bool {
        self.mapping.virtual_origin[node].is_some()
    }

    /// Objective of one expanded edge: original curve and cost, scaled by the
    /// inverse chain length.
    pub fn edge_objective(&self, edge: usize, period: usize) -> EdgeObjective {
        EdgeObjective::new(
            self.demand[edge].curve(period).clone(),
            self.full_cost[edge],
            self.objective,
        )
        .with_scale(self.scale[edge])
    }

    /// Envelopes indexed `[edge][period]`.
    pub fn envelopes(&self, grid_size: usize) -> Result<Vec<Vec<IronedObjective>>> {
        (0..self.graph.edge_count())
            .map(|e| {
                (0..self.demand[e].n_periods())
                    .map(|p| iron_objective(self.edge_objective(e, p), grid_size))
                    .collect()
            })
            .collect()
    }
}

/// Expand `instance` into an equivalent unit-travel-time instance.
pub fn expand(instance: &Instance) -> ExpandedInstance {
    let graph = &instance.graph;
    let n_real = graph.node_count();
    let mut nodes: Vec<String> = graph.nodes().to_vec();
    let mut virtual_origin: Vec<Option<(usize, usize)>> = vec![None; n_real];
    let mut edges: Vec<Edge> = Vec::new();
    let mut demand = Vec::new();
    let mut scale = Vec::new();
    let mut full_cost = Vec::new();
    let mut chain = Vec::with_capacity(graph.edge_count());
    let mut original_edge = Vec::new();

    for (orig_idx, edge) in graph.edges().iter().enumerate() {
        let k = edge.travel_time.max(1) as usize;
        let mut chain_edges = Vec::with_capacity(k);
        let mut tail = edge.from;
        for pos in 0..k {
            let head = if pos + 1 == k {
                edge.to
            } else {
                let id = format!("{}@{}", edge.id, pos + 1);
                nodes.push(id);
                virtual_origin.push(Some((orig_idx, pos + 1)));
                nodes.len() - 1
            };
            let id = if k == 1 { edge.id.clone() } else { format!("{}#{}", edge.id, pos) };
            chain_edges.push(edges.len());
            original_edge.push((orig_idx, pos));
            edges.push(Edge {
                id,
                from: tail,
                to: head,
                travel_time: 1,
                cost: edge.cost / k as f64,
            });
            demand.push(instance.demand[orig_idx].clone());
            scale.push(1.0 / k as f64);
            full_cost.push(edge.cost);
            tail = head;
        }
        chain.push(chain_edges);
    }

    ExpandedInstance {
        graph: CityGraph::from_parts(nodes, edges),
        demand,
        objective: instance.objective,
        scale,
        full_cost,
        mapping: ExpansionMap { chain, virtual_origin, n_real_nodes: n_real, original_edge },
        normalization: instance.normalization.clone(),
    }
}

/// A plan in original-instance coordinates, including the in-transit pipeline
/// state implied by chain occupancy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractedPlan {
    pub mode: PlanMode,
    /// `flows[step][original edge]`: launches per step (one step when static).
    pub flows: Vec<Vec<f64>>,
    /// `available[step][original node]`.
    pub available: Vec<Vec<f64>>,
    /// In-transit mass per original edge at the first step, indexed by chain
    /// position (length travel_time - 1), from virtual-node occupancy.
    pub pipeline: Vec<Vec<f64>>,
    pub objective_value: f64,
}

/// Map an expanded-instance plan back to the original instance.
///
/// Validates the expanded plan (feasibility residuals) and, in dynamic mode,
/// that chain flows are time-shifted copies of the launch flows; violations
/// are rejected with a residual report.
pub fn contract_solution(plan: &FlowPlan, expanded: &ExpandedInstance) -> Result<ContractedPlan> {
    validate_expanded_plan(plan, expanded)?;
    let map = &expanded.mapping;
    let n_orig_edges = map.chain.len();
    let steps = plan.flows.len();

    // Virtual-node index per (original edge, chain position).
    let mut vnode: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (node, origin) in map.virtual_origin.iter().enumerate() {
        if let Some((orig, pos)) = origin {
            vnode.insert((*orig, *pos), node);
        }
    }

    let mut residuals: Vec<String> = Vec::new();
    match plan.mode {
        // Conservation at degree-(1,1) virtual nodes forces equal flow along
        // every chain; trust but verify.
        PlanMode::Static => {
            for (orig, chain) in map.chain.iter().enumerate() {
                let launch = plan.flows[0][chain[0]];
                for (pos, &ce) in chain.iter().enumerate().skip(1) {
                    let got = plan.flows[0][ce];
                    if (got - launch).abs() > 1e-7 {
                        residuals.push(format!(
                            "edge {orig} chain pos {pos}: flow {got} differs from launch {launch}"
                        ));
                    }
                }
            }
        }
        PlanMode::Dynamic { .. } => {
            for (orig, chain) in map.chain.iter().enumerate() {
                for (pos, &ce) in chain.iter().enumerate().skip(1) {
                    for step in 0..steps {
                        // A chain edge relays either a launch from `pos` steps
                        // ago or a cohort that began the horizon mid-chain.
                        let expect = if step >= pos {
                            plan.flows[step - pos][chain[0]]
                        } else {
                            plan.available[0][vnode[&(orig, pos - step)]]
                        };
                        let got = plan.flows[step][ce];
                        if (got - expect).abs() > 1e-7 {
                            residuals.push(format!(
                                "edge {orig} chain pos {pos} step {step}: flow {got} vs relayed cohort {expect}"
                            ));
                        }
                    }
                }
            }
        }
    }
    if !residuals.is_empty() {
        return Err(Error::Infeasible(format!(
            "expanded plan is not chain-consistent: {}",
            residuals.join("; ")
        )));
    }

    let flows: Vec<Vec<f64>> = (0..steps)
        .map(|s| (0..n_orig_edges).map(|e| plan.flows[s][map.chain[e][0]]).collect())
        .collect();
    let available: Vec<Vec<f64>> =
        (0..steps).map(|s| (0..map.n_real_nodes).map(|v| plan.available[s][v]).collect()).collect();

    // Virtual-node occupancy at the first step becomes the pipeline state.
    let mut pipeline = vec![Vec::new(); n_orig_edges];
    for (node, origin) in map.virtual_origin.iter().enumerate() {
        if let Some((orig, pos)) = origin {
            let p = &mut pipeline[*orig];
            if p.len() < *pos {
                p.resize(*pos, 0.0);
            }
            p[*pos - 1] = plan.available[0][node];
        }
    }

    Ok(ContractedPlan {
        mode: plan.mode,
        flows,
        available,
        pipeline,
        objective_value: plan.objective_value,
    })
}

/// Rebuild the expanded-space plan of a contracted plan (the inverse of
/// [`contract_solution`] on chain-consistent solutions).
pub fn expand_plan(plan: &ContractedPlan, expanded: &ExpandedInstance) -> FlowPlan {
    let map = &expanded.mapping;
    let steps = plan.flows.len();
    let n_exp_edges = expanded.graph.edge_count();
    let n_exp_nodes = expanded.graph.node_count();
    let mut flows = vec![vec![0.0; n_exp_edges]; steps];
    let mut available = vec![vec![0.0; n_exp_nodes]; steps];

    for step in 0..steps {
        for v in 0..map.n_real_nodes {
            available[step][v] = plan.available[step][v];
        }
    }
    let stationary = matches!(plan.mode, PlanMode::Static);
    for (orig, chain) in map.chain.iter().enumerate() {
        for (pos, &ce) in chain.iter().enumerate() {
            for step in 0..steps {
                flows[step][ce] = if stationary || step >= pos {
                    let launch_step = if stationary { step } else { step - pos };
                    plan.flows[launch_step][orig]
                } else {
                    // Pre-horizon launches live in the initial pipeline.
                    plan.pipeline[orig].get(pos - step - 1).copied().unwrap_or(0.0)
                };
            }
        }
    }
    for (node, origin) in map.virtual_origin.iter().enumerate() {
        if let Some((orig, pos)) = origin {
            for step in 0..steps {
                available[step][node] = if stationary || step >= *pos {
                    let launch_step = if stationary { step } else { step - *pos };
                    plan.flows[launch_step][*orig]
                } else {
                    plan.pipeline[*orig].get(*pos - step - 1).copied().unwrap_or(0.0)
                };
            }
        }
    }

    FlowPlan { mode: plan.mode, flows, available, objective_value: plan.objective_value }
}

/// Feasibility residual check of a plan against the expanded instance it was
/// solved on: non-negativity, per-node capacity, and stationarity (static) or
/// the driver-motion transition (dynamic).
pub fn validate_expanded_plan(plan: &FlowPlan, expanded: &ExpandedInstance) -> Result<()> {
    let graph = &expanded.graph;
    let steps = plan.flows.len();
    if steps == 0
        || plan.available.len() != steps
        || plan.flows.iter().any(|f| f.len() != graph.edge_count())
        || plan.available.iter().any(|w| w.len() != graph.node_count())
    {
        return Err(Error::DimensionMismatch(format!(
            "plan has {} steps / {} flow entries, instance has {} edges and {} nodes",
            steps,
            plan.flows.first().map_or(0, Vec::len),
            graph.edge_count(),
            graph.node_count()
        )));
    }
    const TOL: f64 = 1e-7;
    let mut residuals = Vec::new();
    for step in 0..steps {
        for (e, &q) in plan.flows[step].iter().enumerate() {
            if q < -TOL {
                residuals.push(format!("step {step}: negative flow {q} on edge {e}"));
            }
        }
        for v in 0..graph.node_count() {
            let out: f64 = graph.out_edges(v).iter().map(|&e| plan.flows[step][e]).sum();
            let w = plan.available[step][v];
            if w < -TOL {
                residuals.push(format!("step {step}: negative mass {w} at node {v}"));
            }
            if out > w + TOL {
                residuals
                    .push(format!("step {step}: outflow {out} exceeds supply {w} at node {v}"));
            }
            match plan.mode {
                PlanMode::Static => {
                    let inflow: f64 = graph.in_edges(v).iter().map(|&e| plan.flows[step][e]).sum();
                    if (out - inflow).abs() > TOL {
                        residuals.push(format!(
                            "step {step}: node {v} not stationary (out {out}, in {inflow})"
                        ));
                    }
                }
                PlanMode::Dynamic { .. } => {
                    if step + 1 < steps {
                        let inflow: f64 =
                            graph.in_edges(v).iter().map(|&e| plan.flows[step][e]).sum();
                        let next = plan.available[step + 1][v];
                        if (next - (w - out + inflow)).abs() > TOL {
                            residuals.push(format!(
                                "step {step}: node {v} transition violated ({next} vs {})",
                                w - out + inflow
                            ));
                        }
                    }
                }
            }
        }
    }
    if residuals.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible(residuals.join("; ")))
    }
}
