//! Ironing: least concave majorants of per-edge objectives and the
//! randomized two-point price mixtures that attain them.
//!
//! The objective of a deterministic price is generally non-concave in the
//! induced throughput (step demand makes it piecewise linear through the
//! origin, for instance). Sampling it on a grid and taking the upper convex
//! hull in the (throughput, value) plane yields its concave envelope; inside
//! any interval where the envelope sits strictly above the raw objective, the
//! envelope value is attained exactly by randomizing the posted price over the
//! interval endpoints' prices.

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::objective::{EdgeObjective, ObjectiveKind};
use crate::{Error, Result};

/// Tolerance below which a mixture collapses to a deterministic price.
const TOUCH_TOL: f64 = 1e-9;

/// Grid-sampled objective together with its upper concave envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IronedObjective {
    objective: EdgeObjective,
    grid: Vec<f64>,
    raw_values: Vec<f64>,
    /// Hull vertices `(q, value)`; a subset of the grid points, value equal to
    /// the raw objective there, slopes strictly decreasing.
    breakpoints: Vec<(f64, f64)>,
}

/// A randomized posted price: at most two `(price, probability)` entries.
/// `f64::INFINITY` encodes rejecting all requests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceMixture {
    pub entries: Vec<(f64, f64)>,
    pub target_throughput: f64,
}

impl PriceMixture {
    pub fn deterministic(price: f64, target: f64) -> Self {
        PriceMixture { entries: vec![(price, 1.0)], target_throughput: target }
    }

    /// Expected throughput induced by quoting this mixture against `curve`.
    pub fn expected_demand(&self, curve: &DemandCurve) -> Result<f64> {
        let mut total = 0.0;
        for &(price, prob) in &self.entries {
            total += prob * curve.eval(price)?;
        }
        Ok(total)
    }

    /// Expected objective value of quoting this mixture.
    pub fn expected_objective(&self, objective: &EdgeObjective) -> Result<f64> {
        let mut total = 0.0;
        for &(price, prob) in &self.entries {
            if price.is_infinite() {
                continue;
            }
            total += prob * objective.value_at_price(price)?;
        }
        Ok(total)
    }
}

/// Iron the objective of `(curve, cost, kind)` on a `grid_size`-interval grid.
pub fn iron(
    curve: &DemandCurve,
    cost: f64,
    kind: ObjectiveKind,
    grid_size: usize,
) -> Result<IronedObjective> {
    iron_objective(EdgeObjective::new(curve.clone(), cost, kind), grid_size)
}

/// Iron an [`EdgeObjective`] (including its scale factor).
pub fn iron_objective(objective: EdgeObjective, grid_size: usize) -> Result<IronedObjective> {
    if grid_size < 2 {
        return Err(Error::InvalidInput(format!("grid_size must be >= 2, got {grid_size}")));
    }
    let max_q = objective.curve.max_throughput();
    let threshold = 1e-12 * max_q.max(1.0);

    // Uniform grid plus the throughputs where step-curve inverse demand
    // jumps, so hulls of finite-atom curves are exact.
    let mut grid: Vec<f64> = objective.curve.kink_throughputs();
    grid.push(0.0);
    grid.push(max_q);
    for i in 1..grid_size {
        grid.push(max_q * i as f64 / grid_size as f64);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|b, a| (*b - *a).abs() <= threshold);

    let raw_values: Vec<f64> = grid.iter().map(|&q| objective.value(q)).collect::<Result<_>>()?;

    let breakpoints = upper_hull(&grid, &raw_values);
    Ok(IronedObjective { objective, grid, raw_values, breakpoints })
}

/// Monotone scan building the upper convex hull of `(q, v)` samples sorted by
/// `q`. Collinear runs keep only their endpoints (relative tolerance 1e-12).
fn upper_hull(qs: &[f64], vs: &[f64]) -> Vec<(f64, f64)> {
    debug_assert_eq!(qs.len(), vs.len());
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (&q, &v) in qs.iter().zip(vs) {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // b must lie strictly above the chord a -> (q, v) to survive.
            let cross = (b.1 - a.1) * (q - a.0) - (v - a.1) * (b.0 - a.0);
            let tol = 1e-12 * (q - a.0) * (1.0 + a.1.abs().max(b.1.abs()).max(v.abs()));
            if cross <= tol {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((q, v));
    }
    hull
}

impl IronedObjective {
    pub fn edge_objective(&self) -> &EdgeObjective {
        &self.objective
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.raw_values
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn max_throughput(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    fn check_range(&self, q: f64) -> Result<f64> {
        let max_q = self.max_throughput();
        if q.is_nan() || q < -1e-12 || q > max_q * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutOfRange { what: "throughput", value: q });
        }
        Ok(q.clamp(0.0, max_q))
    }

    /// Index of the hull segment whose span contains `q`.
    fn segment_of(&self, q: f64) -> usize {
        let bp = &self.breakpoints;
        match bp.binary_search_by(|probe| probe.0.total_cmp(&q)) {
            Ok(i) => i.min(bp.len() - 2),
            Err(i) => i.saturating_sub(1).min(bp.len().saturating_sub(2)),
        }
    }

    /// Envelope value at `q` (piecewise-linear interpolation between hull
    /// vertices).
    pub fn value(&self, q: f64) -> Result<f64> {
        let q = self.check_range(q)?;
        if self.breakpoints.len() == 1 {
            return Ok(self.breakpoints[0].1);
        }
        let j = self.segment_of(q);
        let (q0, v0) = self.breakpoints[j];
        let (q1, v1) = self.breakpoints[j + 1];
        Ok(v0 + (v1 - v0) * (q - q0) / (q1 - q0))
    }

    /// Raw (un-ironed) objective value at `q`.
    pub fn raw_value(&self, q: f64) -> Result<f64> {
        let q = self.check_range(q)?;
        self.objective.value(q)
    }

    fn slope(&self, segment: usize) -> f64 {
        let (q0, v0) = self.breakpoints[segment];
        let (q1, v1) = self.breakpoints[segment + 1];
        (v1 - v0) / (q1 - q0)
    }

    /// `(left, right)` slopes of the envelope at `q`. One-sided at the domain
    /// ends; the two differ exactly at hull vertices.
    pub fn derivative(&self, q: f64) -> Result<(f64, f64)> {
        let q = self.check_range(q)?;
        let bp = &self.breakpoints;
        if bp.len() < 2 {
            return Ok((0.0, 0.0));
        }
        let last = bp.len() - 1;
        let vertex_tol = 1e-12 * self.max_throughput().max(1.0);
        // At a vertex the subgradient interval is [right slope, left slope].
        for (i, &(bq, _)) in bp.iter().enumerate() {
            if (q - bq).abs() <= vertex_tol {
                let left = if i == 0 { self.slope(0) } else { self.slope(i - 1) };
                let right = if i == last { self.slope(last - 1) } else { self.slope(i) };
                return Ok((left, right));
            }
        }
        let s = self.slope(self.segment_of(q));
        Ok((s, s))
    }

    /// A throughput that maximizes the envelope (ties resolved leftward).
    pub fn argmax(&self) -> f64 {
        let mut best = self.breakpoints[0];
        for &(q, v) in &self.breakpoints[1..] {
            if v > best.1 + 1e-15 {
                best = (q, v);
            }
        }
        best.0
    }

    /// Price mixture attaining the envelope value at expected throughput `q`.
    ///
    /// Deterministic when the single price `D^-1(q)` honestly induces `q` and
    /// the envelope touches the raw objective there; otherwise the two hull
    /// vertices bracketing `q` are mixed so the expected demand is exactly `q`
    /// and the expected objective is the (linear) envelope value.
    pub fn price_mixture(&self, curve: &DemandCurve, q: f64) -> Result<PriceMixture> {
        let max_q = self.max_throughput();
        if q.is_nan() || q <= 0.0 || q > max_q * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutOfRange { what: "throughput", value: q });
        }
        let q = q.min(max_q);

        let single = curve.inverse(q)?;
        let honest = (curve.eval(single)? - q).abs() <= TOUCH_TOL;
        let touching = self.value(q)? - self.raw_value(q)? <= TOUCH_TOL;
        if honest && touching {
            return Ok(PriceMixture::deterministic(single, q));
        }

        let j = self.segment_of(q);
        let (q_lo, _) = self.breakpoints[j];
        let (q_hi, _) = self.breakpoints[j + 1];
        let vertex_tol = 1e-12 * max_q.max(1.0);
        if (q - q_lo).abs() <= vertex_tol && q_lo > 0.0 {
            return Ok(PriceMixture::deterministic(curve.inverse(q_lo)?, q));
        }
        if (q - q_hi).abs() <= vertex_tol {
            return Ok(PriceMixture::deterministic(curve.inverse(q_hi)?, q));
        }

        let price_lo = if q_lo <= vertex_tol { f64::INFINITY } else { curve.inverse(q_lo)? };
        let price_hi = curve.inverse(q_hi)?;
        let weight_lo = ((q_hi - q) / (q_hi - q_lo)).clamp(0.0, 1.0);
        let mut entries = Vec::with_capacity(2);
        if weight_lo > 0.0 {
            entries.push((price_lo, weight_lo));
        }
        if weight_lo < 1.0 {
            entries.push((price_hi, 1.0 - weight_lo));
        }
        Ok(PriceMixture { entries, target_throughput: q })
    }
}
