//! On-disk artifact formats (plans, certificates, traces, manifests) and
//! their conversions to the library's index-based types.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use fleetflow::graph::CityGraph;
use fleetflow::instance::Instance;
use fleetflow::ironing::PriceMixture;
use fleetflow::sim::{DynamPolicy, SimTrace};
use fleetflow::solver::{DualCertificate, PlanMode, SupplyConstraintKind};
use fleetflow::transform::ContractedPlan;

/// One entry of a randomized price quote; `price: null` means rejection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureEntryFile {
    pub price: Option<f64>,
    pub probability: f64,
}

/// Plan document: flows and driver distribution in original-instance
/// coordinates, keyed by edge/node ids, plus the price mixtures realizing
/// each flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub mode: PlanMode,
    pub objective_value: f64,
    /// Per-step flow per edge id (single entry when static).
    pub flows: BTreeMap<String, Vec<f64>>,
    /// Per-step available driver mass per node id.
    pub available: BTreeMap<String, Vec<f64>>,
    /// In-transit mass by remaining-chain position at the first step.
    pub pipeline: BTreeMap<String, Vec<f64>>,
    /// Per-step price mixtures per edge id; empty list = no flow quoted.
    pub mixtures: BTreeMap<String, Vec<Vec<MixtureEntryFile>>>,
}

impl PlanFile {
    pub fn from_parts(plan: &ContractedPlan, policy: &DynamPolicy, graph: &CityGraph) -> Self {
        let steps = plan.flows.len();
        let mut flows = BTreeMap::new();
        let mut pipeline = BTreeMap::new();
        let mut mixtures = BTreeMap::new();
        for (e, edge) in graph.edges().iter().enumerate() {
            flows.insert(edge.id.clone(), (0..steps).map(|s| plan.flows[s][e]).collect());
            pipeline.insert(edge.id.clone(), plan.pipeline[e].clone());
            let per_step: Vec<Vec<MixtureEntryFile>> = (0..steps)
                .map(|s| match &policy.mixtures[s][e] {
                    None => Vec::new(),
                    Some(mix) => mix
                        .entries
                        .iter()
                        .map(|&(price, probability)| MixtureEntryFile {
                            price: price.is_finite().then_some(price),
                            probability,
                        })
                        .collect(),
                })
                .collect();
            mixtures.insert(edge.id.clone(), per_step);
        }
        let mut available = BTreeMap::new();
        for (v, node) in graph.nodes().iter().enumerate() {
            available.insert(node.clone(), (0..steps).map(|s| plan.available[s][v]).collect());
        }
        PlanFile {
            mode: plan.mode,
            objective_value: plan.objective_value,
            flows,
            available,
            pipeline,
            mixtures,
        }
    }

    pub fn into_parts(self, instance: &Instance) -> anyhow::Result<(ContractedPlan, DynamPolicy)> {
        let graph = &instance.graph;
        let steps = match self.mode {
            PlanMode::Static => 1,
            PlanMode::Dynamic { horizon } => horizon,
        };
        let mut flows = vec![vec![0.0; graph.edge_count()]; steps];
        let mut pipeline = vec![Vec::new(); graph.edge_count()];
        let mut mixtures: Vec<Vec<Option<PriceMixture>>> =
            vec![vec![None; graph.edge_count()]; steps];
        for (e, edge) in graph.edges().iter().enumerate() {
            let per_step = self
                .flows
                .get(&edge.id)
                .with_context(|| format!("plan has no flows for edge {}", edge.id))?;
            if per_step.len() != steps {
                bail!("edge {}: {} flow steps, expected {steps}", edge.id, per_step.len());
            }
            for (s, &q) in per_step.iter().enumerate() {
                flows[s][e] = q;
            }
            pipeline[e] = self.pipeline.get(&edge.id).cloned().unwrap_or_default();
            if let Some(mix_steps) = self.mixtures.get(&edge.id) {
                if mix_steps.len() != steps {
                    bail!("edge {}: {} mixture steps, expected {steps}", edge.id, mix_steps.len());
                }
                for (s, entries) in mix_steps.iter().enumerate() {
                    if entries.is_empty() {
                        continue;
                    }
                    mixtures[s][e] = Some(PriceMixture {
                        entries: entries
                            .iter()
                            .map(|m| (m.price.unwrap_or(f64::INFINITY), m.probability))
                            .collect(),
                        target_throughput: flows[s][e],
                    });
                }
            }
        }
        let mut available = vec![vec![0.0; graph.node_count()]; steps];
        for (v, node) in graph.nodes().iter().enumerate() {
            let per_step = self
                .available
                .get(node)
                .with_context(|| format!("plan has no availability for node {node}"))?;
            if per_step.len() != steps {
                bail!("node {node}: {} steps, expected {steps}", per_step.len());
            }
            for (s, &w) in per_step.iter().enumerate() {
                available[s][v] = w;
            }
        }
        Ok((
            ContractedPlan {
                mode: self.mode,
                flows,
                available,
                pipeline,
                objective_value: self.objective_value,
            },
            DynamPolicy { mixtures },
        ))
    }
}

/// Certificate document keyed by (expanded) node ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertFile {
    pub mode: PlanMode,
    pub supply: SupplyConstraintKind,
    pub lambda: Vec<f64>,
    pub mu: BTreeMap<String, Vec<f64>>,
}

impl CertFile {
    pub fn from_certificate(cert: &DualCertificate, expanded_graph: &CityGraph) -> Self {
        let steps = cert.mu.len();
        let mut mu = BTreeMap::new();
        for (v, node) in expanded_graph.nodes().iter().enumerate() {
            mu.insert(node.clone(), (0..steps).map(|s| cert.mu[s][v]).collect());
        }
        CertFile { mode: cert.mode, supply: cert.supply.clone(), lambda: cert.lambda.clone(), mu }
    }

    pub fn into_certificate(self, expanded_graph: &CityGraph) -> anyhow::Result<DualCertificate> {
        let steps = self.lambda.len();
        let mut mu = vec![vec![0.0; expanded_graph.node_count()]; steps];
        for (v, node) in expanded_graph.nodes().iter().enumerate() {
            let series = self
                .mu
                .get(node)
                .with_context(|| format!("certificate has no multipliers for node {node}"))?;
            if series.len() != steps {
                bail!("node {node}: {} multiplier steps, expected {steps}", series.len());
            }
            for (s, &m) in series.iter().enumerate() {
                mu[s][v] = m;
            }
        }
        Ok(DualCertificate { mode: self.mode, supply: self.supply, lambda: self.lambda, mu })
    }
}

/// Write a simulation trace as CSV: one row per step, wide columns per node
/// and edge. This file is the plotting interface.
pub fn write_trace_csv(trace: &SimTrace, instance: &Instance, path: &Path) -> anyhow::Result<()> {
    let graph = &instance.graph;
    let mut out = String::new();
    out.push_str("step,revenue,total_mass");
    for node in graph.nodes() {
        out.push_str(&format!(",node:{node}:available,node:{node}:supply_ratio"));
    }
    for edge in graph.edges() {
        out.push_str(&format!(",edge:{}:accepted", edge.id));
    }
    out.push('\n');
    for (i, step) in trace.steps.iter().enumerate() {
        out.push_str(&format!("{},{:.12},{:.12}", i + 1, step.revenue, step.total_mass));
        for v in 0..graph.node_count() {
            out.push_str(&format!(",{:.12}", step.available[v]));
            match step.supply_ratio[v] {
                Some(r) => out.push_str(&format!(",{r:.12}")),
                None => out.push(','),
            }
        }
        for e in 0..graph.edge_count() {
            out.push_str(&format!(",{:.12}", step.accepted[e]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Revenue and supply-ratio series parsed back from a trace CSV.
pub struct ParsedTrace {
    pub name: String,
    pub revenue: Vec<f64>,
    pub ratio_deviation_sum: f64,
    pub ratio_count: usize,
}

impl ParsedTrace {
    pub fn time_average_revenue(&self) -> f64 {
        if self.revenue.is_empty() {
            0.0
        } else {
            self.revenue.iter().sum::<f64>() / self.revenue.len() as f64
        }
    }

    pub fn mean_ratio_deviation(&self) -> Option<f64> {
        (self.ratio_count > 0).then(|| self.ratio_deviation_sum / self.ratio_count as f64)
    }
}

pub fn read_trace_csv(path: &Path) -> anyhow::Result<ParsedTrace> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty trace file")?;
    let columns: Vec<&str> = header.split(',').collect();
    let revenue_col =
        columns.iter().position(|c| *c == "revenue").context("trace has no revenue column")?;
    let ratio_cols: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.ends_with(":supply_ratio"))
        .map(|(i, _)| i)
        .collect();
    let mut revenue = Vec::new();
    let mut dev_sum = 0.0;
    let mut dev_n = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        revenue.push(fields[revenue_col].parse::<f64>()?);
        for &c in &ratio_cols {
            if let Some(field) = fields.get(c) {
                if !field.is_empty() {
                    let r: f64 = field.parse()?;
                    dev_sum += (r - 1.0).abs();
                    dev_n += 1;
                }
            }
        }
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    // Traces are conventionally named trace.csv inside a per-run directory;
    // the directory is the distinguishing name then.
    let name = if stem == "trace" {
        path.parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(stem)
    } else {
        stem
    };
    Ok(ParsedTrace { name, revenue, ratio_deviation_sum: dev_sum, ratio_count: dev_n })
}

/// FNV-1a content digest used in run manifests.
pub fn digest_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Ok(format!("fnv1a64:{hash:016x}"))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            tool: "fleetflow",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.insert(path.display().to_string(), digest_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
