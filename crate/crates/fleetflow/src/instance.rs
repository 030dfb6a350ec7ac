//! Problem instances and their JSON file format.
//!
//! An instance pairs a city graph with per-edge demand (optionally indexed by
//! period for time-varying environments) and an objective. Loading normalizes
//! the instance: request volumes are divided by the driver supply so the total
//! driver mass is 1, and every curve is padded/capped so its throughput at
//! price zero is exactly 1. The applied scale factors are recorded so reports
//! can be mapped back to raw units.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::graph::CityGraph;
use crate::ironing::{iron_objective, IronedObjective};
use crate::objective::{EdgeObjective, ObjectiveKind};
use crate::{Error, Result};

/// Demand attached to one edge: one curve, or one curve per period.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DemandProfile {
    PerPeriod { per_period: Vec<DemandCurve> },
    Single(DemandCurve),
}

impl DemandProfile {
    pub fn n_periods(&self) -> usize {
        match self {
            DemandProfile::Single(_) => 1,
            DemandProfile::PerPeriod { per_period } => per_period.len(),
        }
    }

    pub fn curve(&self, period: usize) -> &DemandCurve {
        match self {
            DemandProfile::Single(c) => c,
            DemandProfile::PerPeriod { per_period } => &per_period[period % per_period.len()],
        }
    }

    fn map_curves(&self, f: impl Fn(&DemandCurve) -> Result<DemandCurve>) -> Result<Self> {
        Ok(match self {
            DemandProfile::Single(c) => DemandProfile::Single(f(c)?),
            DemandProfile::PerPeriod { per_period } => DemandProfile::PerPeriod {
                per_period: per_period.iter().map(f).collect::<Result<_>>()?,
            },
        })
    }
}

/// Scale factors applied at load time, kept for denormalizing reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationRecord {
    /// Absolute driver supply the instance was normalized by.
    pub driver_mass: f64,
    /// Raw (pre-normalization, post-supply-scaling) throughput at price zero
    /// per edge id.
    pub raw_max_throughput: BTreeMap<String, f64>,
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    /// Keyed by edge id.
    pub demand: BTreeMap<String, DemandProfile>,
    pub objective: ObjectiveKind,
    /// Absolute driver supply; request volumes are relative to it. Default 1.
    #[serde(default = "default_driver_mass")]
    pub driver_mass: f64,
}

fn default_driver_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Travel time in whole steps (>= 1).
    pub travel_time: u32,
    /// Per-trip platform cost, same money unit as prices.
    #[serde(default)]
    pub cost: f64,
}

/// A validated, normalized problem instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    pub graph: CityGraph,
    /// Aligned with `graph.edges()`.
    pub demand: Vec<DemandProfile>,
    pub objective: ObjectiveKind,
    pub normalization: NormalizationRecord,
}

impl Instance {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Instance> {
        let text = std::fs::read_to_string(path)?;
        Instance::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::from_spec(file)
    }

    /// Build directly from in-memory parts (curves given in normalized units,
    /// driver mass 1).
    pub fn new(
        graph: CityGraph,
        demand: Vec<DemandProfile>,
        objective: ObjectiveKind,
    ) -> Result<Instance> {
        let mut file_demand = BTreeMap::new();
        for (e, profile) in graph.edges().iter().zip(demand) {
            file_demand.insert(e.id.clone(), profile);
        }
        let edges = graph
            .edges()
            .iter()
            .map(|e| EdgeSpec {
                id: e.id.clone(),
                from: graph.node_id(e.from).to_string(),
                to: graph.node_id(e.to).to_string(),
                travel_time: e.travel_time,
                cost: e.cost,
            })
            .collect();
        Instance::from_spec(InstanceFile {
            nodes: graph.nodes().to_vec(),
            edges,
            demand: file_demand,
            objective,
            driver_mass: 1.0,
        })
    }

    pub fn from_spec(file: InstanceFile) -> Result<Instance> {
        if !(file.driver_mass > 0.0) || !file.driver_mass.is_finite() {
            return Err(Error::OutOfRange { what: "driver_mass", value: file.driver_mass });
        }
        file.objective.validate()?;
        let graph = CityGraph::new(
            file.nodes,
            file.edges.into_iter().map(|e| (e.id, e.from, e.to, e.travel_time, e.cost)).collect(),
        )?;
        let report = graph.validate();
        if !report.is_valid() {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidInput(format!("invalid graph: {}", msgs.join("; "))));
        }

        let mut n_periods = 1usize;
        let mut demand = Vec::with_capacity(graph.edge_count());
        let mut raw_max_throughput = BTreeMap::new();
        for edge in graph.edges() {
            let profile = file.demand.get(&edge.id).ok_or_else(|| {
                Error::InvalidInput(format!("no demand entry for edge {}", edge.id))
            })?;
            let scaled = profile.map_curves(|c| {
                c.validate()?;
                c.scale_volume(1.0 / file.driver_mass)
            })?;
            let raw_volume = (0..scaled.n_periods())
                .map(|p| scaled.curve(p).max_throughput())
                .fold(0.0f64, f64::max);
            raw_max_throughput.insert(edge.id.clone(), raw_volume);
            let normalized = scaled.map_curves(|c| Ok(c.normalize()))?;
            match normalized.n_periods() {
                1 => {}
                p if n_periods == 1 || n_periods == p => n_periods = p,
                p => {
                    return Err(Error::InvalidInput(format!(
                        "edge {} has {} periods, other edges have {}",
                        edge.id, p, n_periods
                    )))
                }
            }
            demand.push(normalized);
        }

        Ok(Instance {
            graph,
            demand,
            objective: file.objective,
            normalization: NormalizationRecord {
                driver_mass: file.driver_mass,
                raw_max_throughput,
            },
        })
    }

    /// Number of distinct demand periods (1 for a static environment).
    pub fn n_periods(&self) -> usize {
        self.demand.iter().map(|p| p.n_periods()).max().unwrap_or(1)
    }

    pub fn is_dynamic(&self) -> bool {
        self.n_periods() > 1
    }

    /// Period index for a zero-based simulation/solver step. Periods are
    /// hour-like buckets: with 24 periods and 15-minute steps, steps map 4 per
    /// period, wrapping around the day.
    pub fn period_of_step(&self, step: usize, step_minutes: u32) -> usize {
        let n = self.n_periods();
        if n <= 1 {
            return 0;
        }
        (step * step_minutes as usize / 60) % n
    }

    pub fn curve(&self, edge: usize, period: usize) -> &DemandCurve {
        self.demand[edge].curve(period)
    }

    pub fn edge_objective(&self, edge: usize, period: usize) -> EdgeObjective {
        EdgeObjective::new(
            self.curve(edge, period).clone(),
            self.graph.edge(edge).cost,
            self.objective,
        )
    }

    /// Iron every edge (and period) on a `grid_size`-interval grid;
    /// result is indexed `[edge][period]`.
    pub fn envelopes(&self, grid_size: usize) -> Result<Vec<Vec<IronedObjective>>> {
        (0..self.graph.edge_count())
            .map(|e| {
                (0..self.demand[e].n_periods())
                    .map(|p| iron_objective(self.edge_objective(e, p), grid_size))
                    .collect()
            })
            .collect()
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            nodes: self.graph.nodes().to_vec(),
            edges: self
                .graph
                .edges()
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    from: self.graph.node_id(e.from).to_string(),
                    to: self.graph.node_id(e.to).to_string(),
                    travel_time: e.travel_time,
                    cost: e.cost,
                })
                .collect(),
            demand: self
                .graph
                .edges()
                .iter()
                .zip(&self.demand)
                .map(|(e, d)| (e.id.clone(), d.clone()))
                .collect(),
            objective: self.objective,
            driver_mass: 1.0,
        }
    }
}
