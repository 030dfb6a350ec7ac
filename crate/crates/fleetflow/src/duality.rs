//! Independent first-order certification of solver output.
//!
//! A plan/certificate pair is optimal iff the plan is feasible, the envelope
//! slope condition holds on every edge (with subgradient intervals at kinks
//! and one-sided conditions at the flow bounds), and complementary slackness
//! ties the driver-value multiplier to the total-mass constraint. Launching a
//! trip at step s consumes a driver at the origin at step s and delivers one
//! at the destination at step s+1, so the dynamic slope condition compares
//! against `lambda_s + mu[s][origin] - mu[s+1][destination]`, with arrivals
//! past the horizon worth zero.

use serde::{Deserialize, Serialize};

use crate::graph::CityGraph;
use crate::ironing::IronedObjective;
use crate::solver::{DualCertificate, FlowPlan, PlanMode, SupplyConstraintKind};
use crate::transform::ExpandedInstance;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct KktConfig {
    pub stationarity_tol: f64,
    pub slackness_tol: f64,
    pub feasibility_tol: f64,
    pub step_minutes: u32,
}

impl Default for KktConfig {
    fn default() -> Self {
        KktConfig {
            stationarity_tol: 1e-5,
            slackness_tol: 1e-6,
            feasibility_tol: 1e-7,
            step_minutes: 15,
        }
    }
}

/// Residuals of the optimality conditions; all non-negative, and the pair is
/// certified iff every block is within its tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktReport {
    /// `[step][edge]` slope-condition residuals.
    pub stationarity: Vec<Vec<f64>>,
    pub max_stationarity: f64,
    pub complementary_slackness: f64,
    pub primal_feasibility: f64,
    /// How far below zero any driver-value multiplier sits.
    pub lambda_negativity: f64,
    /// `|primal + h(lambda, mu)|` with `h` the dual function (static plans).
    pub duality_gap: Option<f64>,
    pub passes: bool,
}

/// Largest feasibility violation of `plan` on `expanded`.
fn primal_residual(plan: &FlowPlan, expanded: &ExpandedInstance) -> f64 {
    let graph = &expanded.graph;
    let steps = plan.flows.len();
    let mut worst = 0.0f64;
    for step in 0..steps {
        for &q in &plan.flows[step] {
            worst = worst.max(-q);
        }
        for v in 0..graph.node_count() {
            let w = plan.available[step][v];
            worst = worst.max(-w);
            let out: f64 = graph.out_edges(v).iter().map(|&e| plan.flows[step][e]).sum();
            worst = worst.max(out - w);
            let inflow: f64 = graph.in_edges(v).iter().map(|&e| plan.flows[step][e]).sum();
            match plan.mode {
                PlanMode::Static => worst = worst.max((out - inflow).abs()),
                PlanMode::Dynamic { .. } => {
                    if step + 1 < steps {
                        let next = plan.available[step + 1][v];
                        worst = worst.max((next - (w - out + inflow)).abs());
                    }
                }
            }
        }
    }
    if matches!(plan.mode, PlanMode::Static) {
        let mass: f64 = plan.available[0].iter().sum();
        worst = worst.max(mass - 1.0);
    }
    worst
}

/// `sup_q (envelope(q) - x q)`, exact for piecewise-linear envelopes.
fn conjugate(env: &IronedObjective, x: f64) -> f64 {
    env.breakpoints().iter().map(|&(q, v)| v - x * q).fold(f64::NEG_INFINITY, f64::max)
}

/// Verify the optimality conditions of `(plan, cert)` for the program the
/// envelopes describe. `envelopes` is indexed `[edge][period]`.
pub fn kkt_check(
    expanded: &ExpandedInstance,
    envelopes: &[Vec<IronedObjective>],
    plan: &FlowPlan,
    cert: &DualCertificate,
    config: &KktConfig,
) -> Result<KktReport> {
    let graph = &expanded.graph;
    let n_edges = graph.edge_count();
    let n_nodes = graph.node_count();
    let steps = plan.flows.len();
    if envelopes.len() != n_edges {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {} edges",
            envelopes.len(),
            n_edges
        )));
    }
    if steps == 0
        || plan.flows.iter().any(|f| f.len() != n_edges)
        || plan.available.len() != steps
        || plan.available.iter().any(|w| w.len() != n_nodes)
        || cert.lambda.len() != steps
        || cert.mu.len() != steps
        || cert.mu.iter().any(|m| m.len() != n_nodes)
    {
        return Err(Error::DimensionMismatch(format!(
            "plan/certificate shapes do not match instance ({} nodes, {} edges): \
             plan steps {}, lambda {}, mu {}",
            n_nodes,
            n_edges,
            steps,
            cert.lambda.len(),
            cert.mu.len()
        )));
    }
    if plan.mode != cert.mode {
        return Err(Error::DimensionMismatch("plan and certificate modes differ".into()));
    }

    let dynamic = matches!(plan.mode, PlanMode::Dynamic { .. });
    let q_eps = 1e-9;
    let w_eps = 1e-9;

    let mut stationarity = vec![vec![0.0; n_edges]; steps];
    let mut max_stat = 0.0f64;
    for step in 0..steps {
        let period = expanded.period_of_step(step, config.step_minutes);
        for e in 0..n_edges {
            let edge = graph.edge(e);
            let env = &envelopes[e][period % envelopes[e].len()];
            let q = plan.flows[step][e];
            // Dual price of the launch: driver spent at the origin now,
            // recovered at the destination next step.
            let x = if dynamic {
                let mu_dest = if step + 1 < steps { cert.mu[step + 1][edge.to] } else { 0.0 };
                cert.lambda[step] + cert.mu[step][edge.from] - mu_dest
            } else {
                cert.lambda[0] + cert.mu[0][edge.from] - cert.mu[0][edge.to]
            };
            if dynamic && plan.available[step][edge.from] <= w_eps {
                // Nothing can launch from an empty node; the capacity
                // multiplier absorbs any slope gap.
                continue;
            }
            let (left, right) = env.derivative(q)?;
            let max_q = env.max_throughput();
            let r = if q <= q_eps {
                (right - x).max(0.0)
            } else if q >= max_q - q_eps {
                (x - left).max(0.0)
            } else {
                (x - left).max(right - x).max(0.0)
            };
            stationarity[step][e] = r;
            max_stat = max_stat.max(r);
        }
    }

    // Complementary slackness.
    let mut cs = 0.0f64;
    match (&plan.mode, &cert.supply) {
        (PlanMode::Static, _) => {
            let total_flow: f64 = plan.flows[0].iter().sum();
            cs = (cert.lambda[0] * (total_flow - 1.0)).abs();
        }
        (PlanMode::Dynamic { .. }, SupplyConstraintKind::PerStep) => {
            for step in 0..steps {
                let mass: f64 = plan.available[step].iter().sum();
                cs = cs.max((cert.lambda[step] * (mass - 1.0)).abs());
            }
        }
        (PlanMode::Dynamic { .. }, SupplyConstraintKind::TotalAccumulated { budget }) => {
            let mass: f64 = plan.available.iter().flatten().sum();
            cs = (cert.lambda[0] * (mass - budget)).abs();
        }
        (PlanMode::Dynamic { .. }, SupplyConstraintKind::Soft { .. }) => {}
    }
    // Unused capacity at a populated node must carry zero marginal value.
    if dynamic {
        for step in 0..steps {
            for v in 0..n_nodes {
                if expanded.is_virtual_node(v) {
                    continue;
                }
                let w = plan.available[step][v];
                let out: f64 = graph.out_edges(v).iter().map(|&e| plan.flows[step][e]).sum();
                if w > w_eps && w - out > config.slackness_tol.max(1e-7) {
                    let mu_next = if step + 1 < steps { cert.mu[step + 1][v] } else { 0.0 };
                    let eta = cert.lambda[step] + cert.mu[step][v] - mu_next;
                    cs = cs.max(eta.abs() * (w - out));
                }
            }
        }
    }

    let lambda_negativity = cert.lambda.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let primal_feasibility = primal_residual(plan, expanded);

    let duality_gap = if dynamic {
        None
    } else {
        let lambda = cert.lambda[0];
        let mut h = -lambda;
        for e in 0..n_edges {
            let edge = graph.edge(e);
            let x = lambda + cert.mu[0][edge.from] - cert.mu[0][edge.to];
            h -= conjugate(&envelopes[e][0], x);
        }
        Some((plan.objective_value + h).abs())
    };

    let passes = max_stat <= config.stationarity_tol
        && cs <= config.slackness_tol
        && primal_feasibility <= config.feasibility_tol
        && lambda_negativity <= config.slackness_tol;

    Ok(KktReport {
        stationarity,
        max_stationarity: max_stat,
        complementary_slackness: cs,
        primal_feasibility,
        lambda_negativity,
        duality_gap,
        passes,
    })
}

/// Value of the static dual function at `(lambda, mu)`; any feasible plan's
/// objective is bounded above by `-h`.
pub fn dual_function(
    expanded: &ExpandedInstance,
    envelopes: &[Vec<IronedObjective>],
    lambda: f64,
    mu: &[f64],
) -> f64 {
    let graph = &expanded.graph;
    let mut h = -lambda;
    for e in 0..graph.edge_count() {
        let edge = graph.edge(e);
        let x = lambda + mu[edge.from] - mu[edge.to];
        h -= conjugate(&envelopes[e][0], x);
    }
    h
}

/// Human-readable summary of what the multipliers say about driver supply.
pub fn marginal_report(cert: &DualCertificate, graph: &CityGraph) -> String {
    let mut out = String::new();
    let lambda = cert.lambda[0];
    match cert.mode {
        PlanMode::Static => {
            out.push_str(&format!(
                "system-wide driver value: {lambda:.6} per unit of driver mass per step\n"
            ));
            if lambda <= 1e-9 {
                out.push_str(
                    "  drivers are not scarce: some sit idle, and adding more cannot raise \
                     the objective\n",
                );
            } else {
                out.push_str(&format!(
                    "  every driver is busy; one extra unit of driver mass is worth {lambda:.6} \
                     per step\n"
                ));
            }
        }
        PlanMode::Dynamic { horizon } => {
            let lo = cert.lambda.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = cert.lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.push_str(&format!(
                "per-step driver value over {horizon} steps: min {lo:.6}, max {hi:.6}\n"
            ));
        }
    }
    let mu0 = &cert.mu[0];
    let mut ranked: Vec<(usize, f64)> = mu0.iter().cloned().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let spread =
        ranked.first().map(|x| x.1).unwrap_or(0.0) - ranked.last().map(|x| x.1).unwrap_or(0.0);
    if spread.abs() <= 1e-9 {
        out.push_str("node values are uniform: every region is equally supply-starved\n");
    } else {
        out.push_str("marginal value of an extra driver appearing at each node:\n");
        for (v, m) in ranked {
            out.push_str(&format!("  {:<12} {m:+.6}\n", graph.node_id(v)));
        }
    }
    out
}
