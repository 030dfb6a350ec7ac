//! Convex-program construction and solving.
//!
//! The ironed per-edge objectives are concave piecewise-linear, so both the
//! stationary program and the finite-horizon program reduce exactly to linear
//! programs: each envelope segment becomes a bounded variable whose objective
//! coefficient is the segment's marginal value, and concavity (strictly
//! decreasing marginals) makes greedy segment filling optimal. The LP is
//! solved by the bounded-variable simplex in [`crate::lp`]; dual multipliers
//! for the driver-mass and flow-balance rows form the optimality certificate.

use serde::{Deserialize, Serialize};

use crate::ironing::IronedObjective;
use crate::lp::{LinearProgram, LpOutcome, RowKind};
use crate::transform::ExpandedInstance;
use crate::{Error, Result};

/// Whether a plan is stationary or covers a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Static,
    Dynamic { horizon: usize },
}

/// Primal solution: flows per edge and driver mass per node, per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowPlan {
    pub mode: PlanMode,
    /// `flows[step][edge]`; a single step when static.
    pub flows: Vec<Vec<f64>>,
    /// `available[step][node]`.
    pub available: Vec<Vec<f64>>,
    pub objective_value: f64,
}

impl FlowPlan {
    pub fn steps(&self) -> usize {
        self.flows.len()
    }
}

/// Dual multipliers: the system-wide driver value per step and the per-node
/// flow-balance values.
///
/// In dynamic mode `mu[0]` holds the initial-distribution multipliers and
/// `mu[s]` (s >= 1) the multipliers of the transition defining step `s`'s
/// driver distribution; arrivals past the horizon carry value zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub mode: PlanMode,
    pub supply: SupplyConstraintKind,
    /// One entry (static) or one per step (dynamic).
    pub lambda: Vec<f64>,
    /// `mu[step][node]`; a single step when static.
    pub mu: Vec<Vec<f64>>,
}

/// How driver supply is constrained in the dynamic program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupplyConstraintKind {
    /// Unit driver mass every step, initial distribution given.
    PerStep,
    /// One budget on driver mass accumulated over all steps; the initial
    /// distribution is chosen by the program.
    TotalAccumulated { budget: f64 },
    /// No hard cap: the fleet size is chosen once, paying a convex
    /// piecewise-linear attraction cost (tiers of `(length, marginal)` with
    /// non-decreasing marginals; `tail_marginal` applies beyond the tiers).
    Soft { tiers: Vec<(f64, f64)>, tail_marginal: f64 },
}

/// Solver knobs. Tolerances follow the defaults used across the crate and can
/// be tightened per run.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Ironing grid intervals per envelope.
    pub grid_size: usize,
    /// Cap on piecewise-linear segments per envelope (None = exact).
    pub max_pwl_segments: Option<usize>,
    /// Absolute primal feasibility tolerance.
    pub feasibility_tol: f64,
    /// KKT stationarity tolerance.
    pub stationarity_tol: f64,
    /// Complementary-slackness tolerance.
    pub slackness_tol: f64,
    /// Simplex pivot budget.
    pub max_pivots: usize,
    /// Minutes per step; maps steps onto demand periods in dynamic mode.
    pub step_minutes: u32,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            grid_size: 1000,
            max_pwl_segments: None,
            feasibility_tol: 1e-7,
            stationarity_tol: 1e-5,
            slackness_tol: 1e-6,
            max_pivots: 100_000,
            step_minutes: 15,
        }
    }
}

/// One segment of a concave piecewise-linear objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlSegment {
    pub length: f64,
    pub marginal: f64,
}

/// Split an envelope into consecutive segments with strictly decreasing
/// marginals; filling them greedily reconstructs the envelope exactly at its
/// breakpoints. With more than `max_segments` hull pieces the breakpoints are
/// subsampled (endpoints kept).
pub fn pwl_discretize(envelope: &IronedObjective, max_segments: usize) -> Result<Vec<PwlSegment>> {
    if max_segments < 1 {
        return Err(Error::InvalidInput("max_segments must be >= 1".into()));
    }
    let bp = envelope.breakpoints();
    let pieces = bp.len().saturating_sub(1);
    let keep: Vec<(f64, f64)> = if pieces <= max_segments {
        bp.to_vec()
    } else {
        let mut kept = Vec::with_capacity(max_segments + 1);
        for k in 0..=max_segments {
            let idx = k * (bp.len() - 1) / max_segments;
            kept.push(bp[idx]);
        }
        kept.dedup_by(|b, a| b.0 == a.0);
        kept
    };
    Ok(keep
        .windows(2)
        .map(|w| PwlSegment {
            length: w[1].0 - w[0].0,
            marginal: (w[1].1 - w[0].1) / (w[1].0 - w[0].0),
        })
        .collect())
}

/// A built linear program plus everything needed to extract plans,
/// certificates and run certification.
pub struct Program {
    pub expanded: ExpandedInstance,
    /// `[edge][period]` envelopes the program was built from.
    pub envelopes: Vec<Vec<IronedObjective>>,
    pub mode: PlanMode,
    pub supply: SupplyConstraintKind,
    lp: LinearProgram,
    meta: Meta,
}

struct Meta {
    steps: usize,
    n_nodes: usize,
    n_edges: usize,
    /// `[step][edge]` -> (first LP var, segments).
    seg_vars: Vec<Vec<(usize, Vec<PwlSegment>)>>,
    /// `[step][node]` -> LP var of the driver mass.
    w_vars: Vec<Vec<usize>>,
    /// Per step: the driver-mass row, if the supply kind has one.
    mass_rows: Vec<Option<usize>>,
    /// Dynamic per-step mode: rows pinning the initial distribution.
    pin_rows: Vec<usize>,
    /// `[step][node]` for steps >= 1: row defining that step's distribution.
    transition_rows: Vec<Vec<usize>>,
    /// Static only: flow-balance row per node.
    conservation_rows: Vec<usize>,
    budget_row: Option<usize>,
    fleet_row: Option<usize>,
}

/// Result of a solve: primal plan, dual certificate and solution quality.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub plan: FlowPlan,
    pub certificate: DualCertificate,
    /// Largest absolute constraint/bound violation of the plan.
    pub primal_residual: f64,
    /// LP proved optimal and the residual is within tolerance.
    pub certified: bool,
    pub pivots: usize,
}

fn segment_vars(
    lp: &mut LinearProgram,
    envelope: &IronedObjective,
    max_segments: Option<usize>,
) -> Result<(usize, Vec<PwlSegment>)> {
    let segs = pwl_discretize(envelope, max_segments.unwrap_or(usize::MAX))?;
    let first = lp.n_vars();
    for s in &segs {
        lp.add_var(s.marginal, s.length);
    }
    Ok((first, segs))
}

/// Build the stationary program: maximize the summed envelopes subject to
/// unit driver mass, per-node capacity, and per-node flow balance.
pub fn build_static_program(
    expanded: &ExpandedInstance,
    envelopes: &[Vec<IronedObjective>],
    config: &SolveConfig,
) -> Result<Program> {
    let graph = &expanded.graph;
    let n_nodes = graph.node_count();
    let n_edges = graph.edge_count();
    if envelopes.len() != n_edges {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {} edges",
            envelopes.len(),
            n_edges
        )));
    }
    let mut lp = LinearProgram::new();
    let w_vars: Vec<usize> = (0..n_nodes).map(|_| lp.add_var(0.0, f64::INFINITY)).collect();
    let mut seg_vars = Vec::with_capacity(n_edges);
    for env in envelopes {
        seg_vars.push(segment_vars(&mut lp, &env[0], config.max_pwl_segments)?);
    }

    // Total driver mass.
    let mass_row = lp.n_rows();
    lp.add_row(RowKind::Le, 1.0, &w_vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>());

    // Capacity: outgoing flow cannot exceed the node's driver mass. Virtual
    // nodes must forward everything, so their capacity is an equality.
    for v in 0..n_nodes {
        let mut coeffs = vec![(w_vars[v], -1.0)];
        for &e in graph.out_edges(v) {
            let (first, segs) = &seg_vars[e];
            coeffs.extend((0..segs.len()).map(|k| (first + k, 1.0)));
        }
        let kind = if expanded.is_virtual_node(v) { RowKind::Eq } else { RowKind::Le };
        lp.add_row(kind, 0.0, &coeffs);
    }

    // Flow balance: stationary distributions need outflow = inflow.
    let mut conservation_rows = Vec::with_capacity(n_nodes);
    for v in 0..n_nodes {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for &e in graph.out_edges(v) {
            let (first, segs) = &seg_vars[e];
            coeffs.extend((0..segs.len()).map(|k| (first + k, 1.0)));
        }
        for &e in graph.in_edges(v) {
            let (first, segs) = &seg_vars[e];
            coeffs.extend((0..segs.len()).map(|k| (first + k, -1.0)));
        }
        conservation_rows.push(lp.n_rows());
        lp.add_row(RowKind::Eq, 0.0, &coeffs);
    }

    Ok(Program {
        expanded: expanded.clone(),
        envelopes: envelopes.to_vec(),
        mode: PlanMode::Static,
        supply: SupplyConstraintKind::PerStep,
        lp,
        meta: Meta {
            steps: 1,
            n_nodes,
            n_edges,
            seg_vars: vec![seg_vars],
            w_vars: vec![w_vars],
            mass_rows: vec![Some(mass_row)],
            pin_rows: Vec::new(),
            transition_rows: Vec::new(),
            conservation_rows,
            budget_row: None,
            fleet_row: None,
        },
    })
}

/// Build the finite-horizon program over `horizon` steps.
///
/// `w_init` is required (and must sum to 1) for the per-step supply kind and
/// is indexed by expanded node (virtual entries normally 0); the other supply
/// kinds choose the initial distribution themselves.
pub fn build_dynamic_program(
    expanded: &ExpandedInstance,
    envelopes: &[Vec<IronedObjective>],
    horizon: usize,
    w_init: Option<&[f64]>,
    supply: SupplyConstraintKind,
    config: &SolveConfig,
) -> Result<Program> {
    let graph = &expanded.graph;
    let n_nodes = graph.node_count();
    let n_edges = graph.edge_count();
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be >= 1".into()));
    }
    if envelopes.len() != n_edges {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {} edges",
            envelopes.len(),
            n_edges
        )));
    }
    let w1 = match (&supply, w_init) {
        (SupplyConstraintKind::PerStep, None) => {
            return Err(Error::InvalidInput(
                "per-step supply requires an initial driver distribution".into(),
            ))
        }
        (SupplyConstraintKind::PerStep, Some(w)) => {
            if w.len() != n_nodes {
                return Err(Error::DimensionMismatch(format!(
                    "w_init has {} entries for {} nodes",
                    w.len(),
                    n_nodes
                )));
            }
            if w.iter().any(|&x| x < -1e-12) {
                return Err(Error::InvalidInput("w_init has negative entries".into()));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("w_init sums to {total}, expected 1")));
            }
            Some(w.iter().map(|&x| x.max(0.0) / total).collect::<Vec<f64>>())
        }
        _ => None,
    };
    match &supply {
        SupplyConstraintKind::TotalAccumulated { budget } => {
            if !(*budget > 0.0) {
                return Err(Error::OutOfRange { what: "supply budget", value: *budget });
            }
        }
        SupplyConstraintKind::Soft { tiers, tail_marginal } => {
            let mut last = 0.0;
            for &(len, marginal) in tiers {
                if !(len > 0.0) || marginal < last - 1e-12 {
                    return Err(Error::InvalidInput(
                        "soft supply tiers need positive lengths and non-decreasing marginals"
                            .into(),
                    ));
                }
                last = marginal;
            }
            if *tail_marginal < last - 1e-12 {
                return Err(Error::InvalidInput(
                    "soft supply tail marginal below the last tier".into(),
                ));
            }
        }
        SupplyConstraintKind::PerStep => {}
    }

    let mut lp = LinearProgram::new();
    let w_vars: Vec<Vec<usize>> = (0..horizon)
        .map(|_| (0..n_nodes).map(|_| lp.add_var(0.0, f64::INFINITY)).collect())
        .collect();
    let mut seg_vars: Vec<Vec<(usize, Vec<PwlSegment>)>> = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let period = expanded.period_of_step(step, config.step_minutes);
        let mut per_edge = Vec::with_capacity(n_edges);
        for env in envelopes {
            let env = &env[period % env.len()];
            per_edge.push(segment_vars(&mut lp, env, config.max_pwl_segments)?);
        }
        seg_vars.push(per_edge);
    }

    let out_coeffs = |seg_vars: &[(usize, Vec<PwlSegment>)], v: usize| -> Vec<(usize, f64)> {
        let mut coeffs = Vec::new();
        for &e in graph.out_edges(v) {
            let (first, segs) = &seg_vars[e];
            coeffs.extend((0..segs.len()).map(|k| (first + k, 1.0)));
        }
        coeffs
    };
    let in_coeffs = |seg_vars: &[(usize, Vec<PwlSegment>)], v: usize| -> Vec<(usize, f64)> {
        let mut coeffs = Vec::new();
        for &e in graph.in_edges(v) {
            let (first, segs) = &seg_vars[e];
            coeffs.extend((0..segs.len()).map(|k| (first + k, -1.0)));
        }
        coeffs
    };

    // Initial distribution pins (per-step supply only).
    let mut pin_rows = Vec::new();
    if let Some(w1) = &w1 {
        for v in 0..n_nodes {
            pin_rows.push(lp.n_rows());
            lp.add_row(RowKind::Eq, w1[v], &[(w_vars[0][v], 1.0)]);
        }
    }

    // Per-step driver mass.
    let mut mass_rows = vec![None; horizon];
    match &supply {
        SupplyConstraintKind::PerStep => {
            for step in 0..horizon {
                let coeffs: Vec<(usize, f64)> = w_vars[step].iter().map(|&v| (v, 1.0)).collect();
                mass_rows[step] = Some(lp.n_rows());
                lp.add_row(RowKind::Le, 1.0, &coeffs);
            }
        }
        SupplyConstraintKind::TotalAccumulated { .. } | SupplyConstraintKind::Soft { .. } => {}
    }

    // Capacity (equality at virtual nodes: in-transit drivers must move on).
    for step in 0..horizon {
        for v in 0..n_nodes {
            let mut coeffs = out_coeffs(&seg_vars[step], v);
            coeffs.push((w_vars[step][v], -1.0));
            let kind = if expanded.is_virtual_node(v) { RowKind::Eq } else { RowKind::Le };
            lp.add_row(kind, 0.0, &coeffs);
        }
    }

    // Driver motion transition: w_{s+1} = w_s - out_s + in_s.
    let mut transition_rows: Vec<Vec<usize>> = vec![Vec::new(); horizon];
    for step in 1..horizon {
        let mut rows = Vec::with_capacity(n_nodes);
        for v in 0..n_nodes {
            let mut coeffs = vec![(w_vars[step][v], 1.0), (w_vars[step - 1][v], -1.0)];
            coeffs.extend(out_coeffs(&seg_vars[step - 1], v));
            coeffs.extend(in_coeffs(&seg_vars[step - 1], v));
            rows.push(lp.n_rows());
            lp.add_row(RowKind::Eq, 0.0, &coeffs);
        }
        transition_rows[step] = rows;
    }

    // Supply-kind extras.
    let mut budget_row = None;
    let mut fleet_row = None;
    match &supply {
        SupplyConstraintKind::TotalAccumulated { budget } => {
            let coeffs: Vec<(usize, f64)> = w_vars.iter().flatten().map(|&v| (v, 1.0)).collect();
            budget_row = Some(lp.n_rows());
            lp.add_row(RowKind::Le, *budget, &coeffs);
        }
        SupplyConstraintKind::Soft { tiers, tail_marginal } => {
            let mut coeffs: Vec<(usize, f64)> = w_vars[0].iter().map(|&v| (v, 1.0)).collect();
            for &(len, marginal) in tiers {
                let t = lp.add_var(-marginal, len);
                coeffs.push((t, -1.0));
            }
            let tail = lp.add_var(-tail_marginal, f64::INFINITY);
            coeffs.push((tail, -1.0));
            fleet_row = Some(lp.n_rows());
            lp.add_row(RowKind::Eq, 0.0, &coeffs);
        }
        SupplyConstraintKind::PerStep => {}
    }

    Ok(Program {
        expanded: expanded.clone(),
        envelopes: envelopes.to_vec(),
        mode: PlanMode::Dynamic { horizon },
        supply,
        lp,
        meta: Meta {
            steps: horizon,
            n_nodes,
            n_edges,
            seg_vars,
            w_vars,
            mass_rows,
            pin_rows,
            transition_rows,
            conservation_rows: Vec::new(),
            budget_row,
            fleet_row,
        },
    })
}

impl Program {
    pub fn n_lp_vars(&self) -> usize {
        self.lp.n_vars()
    }

    pub fn n_lp_rows(&self) -> usize {
        self.lp.n_rows()
    }

    /// Pre-fill segment variables toward a hinted plan (warm start).
    pub fn warm_start(&mut self, hint: &FlowPlan) {
        if hint.flows.len() != self.meta.steps {
            return;
        }
        for step in 0..self.meta.steps {
            if hint.flows[step].len() != self.meta.n_edges {
                return;
            }
            for e in 0..self.meta.n_edges {
                let target = hint.flows[step][e];
                let (first, segs) = &self.meta.seg_vars[step][e];
                let mut cum = 0.0;
                for (k, seg) in segs.iter().enumerate() {
                    if cum + seg.length <= target + 1e-12 {
                        self.lp.set_initial_at_upper(first + k);
                        cum += seg.length;
                    } else {
                        break;
                    }
                }
            }
        }
    }

    /// Solve the program and extract the primal plan and dual certificate.
    pub fn solve(&self, config: &SolveConfig) -> Result<SolveResult> {
        let (solution, optimal) = match self.lp.solve(config.max_pivots) {
            LpOutcome::Optimal(s) => (s, true),
            LpOutcome::IterationLimit(s) => (s, false),
            LpOutcome::Infeasible => {
                return Err(Error::Internal(
                    "program infeasible; the construction should make this impossible".into(),
                ))
            }
            LpOutcome::Unbounded => {
                return Err(Error::Internal(
                    "program unbounded; envelopes should bound every flow".into(),
                ))
            }
        };

        let meta = &self.meta;
        let mut flows = vec![vec![0.0; meta.n_edges]; meta.steps];
        for step in 0..meta.steps {
            for e in 0..meta.n_edges {
                let (first, segs) = &meta.seg_vars[step][e];
                flows[step][e] = (0..segs.len()).map(|k| solution.x[first + k]).sum();
            }
        }
        let available: Vec<Vec<f64>> =
            meta.w_vars.iter().map(|ws| ws.iter().map(|&v| solution.x[v]).collect()).collect();

        let plan =
            FlowPlan { mode: self.mode, flows, available, objective_value: solution.objective };

        let lambda: Vec<f64> = match (&self.mode, &self.supply) {
            (PlanMode::Static, _) => {
                vec![solution.duals[meta.mass_rows[0].unwrap()].max(0.0)]
            }
            (PlanMode::Dynamic { .. }, SupplyConstraintKind::PerStep) => {
                meta.mass_rows.iter().map(|r| solution.duals[r.unwrap()].max(0.0)).collect()
            }
            (PlanMode::Dynamic { .. }, SupplyConstraintKind::TotalAccumulated { .. }) => {
                let l = solution.duals[meta.budget_row.unwrap()].max(0.0);
                vec![l; meta.steps]
            }
            (PlanMode::Dynamic { .. }, SupplyConstraintKind::Soft { .. }) => {
                let mut l = vec![0.0; meta.steps];
                l[0] = solution.duals[meta.fleet_row.unwrap()].max(0.0);
                l
            }
        };

        let mu: Vec<Vec<f64>> = match self.mode {
            PlanMode::Static => {
                vec![meta.conservation_rows.iter().map(|&r| solution.duals[r]).collect()]
            }
            PlanMode::Dynamic { .. } => (0..meta.steps)
                .map(|step| {
                    if step == 0 {
                        if meta.pin_rows.is_empty() {
                            vec![0.0; meta.n_nodes]
                        } else {
                            meta.pin_rows.iter().map(|&r| solution.duals[r]).collect()
                        }
                    } else {
                        meta.transition_rows[step].iter().map(|&r| solution.duals[r]).collect()
                    }
                })
                .collect(),
        };

        let certificate =
            DualCertificate { mode: self.mode, supply: self.supply.clone(), lambda, mu };

        let primal_residual = self.lp.max_violation(&solution.x);
        Ok(SolveResult {
            plan,
            certificate,
            primal_residual,
            certified: optimal && primal_residual <= config.feasibility_tol,
            pivots: solution.pivots,
        })
    }
}
