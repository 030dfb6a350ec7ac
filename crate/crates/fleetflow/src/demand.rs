//! Demand curves: price -> throughput maps per trip edge.
//!
//! A curve reports, for any posted price `p`, the mass of ride requests whose
//! private value is at least `p`. Instance loading normalizes curves so that
//! the throughput at price zero is exactly the total driver mass 1: curves
//! with less raw demand are padded with zero-value relocation demand, curves
//! with more are capped to the highest-value unit of mass.

use serde::{Deserialize, Serialize};

use crate::stats::{adaptive_simpson, norm_cdf, norm_quantile};
use crate::{Error, Result};

/// Quadrature tolerance for welfare integrals that lack a closed form.
const WELFARE_QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    /// `D(p) = volume * max(0, 1 - p / max_price)`.
    Linear { max_price: f64, volume: f64 },
    /// Finitely many value atoms; `D(p)` is the mass with value >= p.
    Step { atoms: Vec<(f64, f64)> },
    /// Values lognormally distributed: `D(p) = volume * (1 - Phi((ln p - mu)/sigma))`.
    Lognormal { mu_log: f64, sigma_log: f64, volume: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandCurve {
    #[serde(flatten)]
    kind: CurveKind,
    /// Set once at instance load; see module docs.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    normalized: bool,
}

impl DemandCurve {
    pub fn linear(max_price: f64, volume: f64) -> Result<Self> {
        if !(max_price > 0.0) || !max_price.is_finite() {
            return Err(Error::OutOfRange { what: "linear max_price", value: max_price });
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::OutOfRange { what: "linear volume", value: volume });
        }
        Ok(DemandCurve { kind: CurveKind::Linear { max_price, volume }, normalized: false })
    }

    /// The unit test curve `D(p) = max(0, 1 - p)`.
    pub fn linear_test() -> Self {
        DemandCurve::linear(1.0, 1.0).unwrap()
    }

    /// Atoms are `(value, mass)` pairs in any order.
    pub fn step(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("step curve needs at least one atom".into()));
        }
        for &(value, mass) in &atoms {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::OutOfRange { what: "step atom value", value });
            }
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::OutOfRange { what: "step atom mass", value: mass });
            }
        }
        let mut atoms = atoms;
        // Descending by value; ties merged so inverse demand is well defined.
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        atoms.dedup_by(|hi, lo| {
            if hi.0 == lo.0 {
                lo.1 += hi.1;
                true
            } else {
                false
            }
        });
        Ok(DemandCurve { kind: CurveKind::Step { atoms }, normalized: false })
    }

    pub fn lognormal(mu_log: f64, sigma_log: f64, volume: f64) -> Result<Self> {
        if !(sigma_log > 0.0) || !sigma_log.is_finite() {
            return Err(Error::OutOfRange { what: "lognormal sigma_log", value: sigma_log });
        }
        if !mu_log.is_finite() {
            return Err(Error::OutOfRange { what: "lognormal mu_log", value: mu_log });
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::OutOfRange { what: "lognormal volume", value: volume });
        }
        Ok(DemandCurve {
            kind: CurveKind::Lognormal { mu_log, sigma_log, volume },
            normalized: false,
        })
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Normalize so that the throughput at price zero is exactly 1: demand
    /// beyond one unit of mass is dropped lowest-value-first, and a shortfall
    /// is padded with zero-value relocation requests.
    pub fn normalize(&self) -> DemandCurve {
        DemandCurve { kind: self.kind.clone(), normalized: true }
    }

    /// Throughput at price zero; the upper end of the valid flow range.
    pub fn max_throughput(&self) -> f64 {
        if self.normalized {
            return 1.0;
        }
        match &self.kind {
            CurveKind::Linear { volume, .. } => *volume,
            CurveKind::Step { atoms } => atoms.iter().map(|a| a.1).sum(),
            CurveKind::Lognormal { volume, .. } => *volume,
        }
    }

    fn raw_eval(&self, p: f64) -> f64 {
        match &self.kind {
            CurveKind::Linear { max_price, volume } => {
                if p.is_infinite() {
                    0.0
                } else {
                    volume * (1.0 - p / max_price).max(0.0)
                }
            }
            CurveKind::Step { atoms } => atoms.iter().filter(|a| a.0 >= p).map(|a| a.1).sum(),
            CurveKind::Lognormal { mu_log, sigma_log, volume } => {
                if p <= 0.0 {
                    *volume
                } else if p.is_infinite() {
                    0.0
                } else {
                    volume * (1.0 - norm_cdf((p.ln() - mu_log) / sigma_log))
                }
            }
        }
    }

    /// Throughput induced by price `p` (>= 0; `f64::INFINITY` means rejection).
    pub fn eval(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 0.0 {
            return Err(Error::OutOfRange { what: "price", value: p });
        }
        if self.normalized {
            if p == 0.0 {
                Ok(1.0)
            } else {
                Ok(self.raw_eval(p).min(1.0))
            }
        } else {
            Ok(self.raw_eval(p))
        }
    }

    /// The largest price inducing throughput at least `q`, for `q` in
    /// `(0, max_throughput]`. Flat segments resolve to their supremum price.
    pub fn inverse(&self, q: f64) -> Result<f64> {
        let max_q = self.max_throughput();
        if q.is_nan() || q <= 0.0 || q > max_q * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutOfRange { what: "throughput", value: q });
        }
        let q = q.min(max_q);
        if self.normalized {
            // Padding serves any residual demand at price zero.
            let sup_positive = match &self.kind {
                CurveKind::Linear { volume, .. } => *volume,
                CurveKind::Step { atoms } => atoms.iter().filter(|a| a.0 > 0.0).map(|a| a.1).sum(),
                CurveKind::Lognormal { volume, .. } => *volume,
            };
            if q > sup_positive {
                return Ok(0.0);
            }
        }
        Ok(match &self.kind {
            CurveKind::Linear { max_price, volume } => (max_price * (1.0 - q / volume)).max(0.0),
            CurveKind::Step { atoms } => {
                let mut cum = 0.0;
                let mut price = 0.0;
                for &(value, mass) in atoms {
                    cum += mass;
                    if cum >= q - 1e-15 {
                        price = value;
                        break;
                    }
                }
                price
            }
            CurveKind::Lognormal { mu_log, sigma_log, volume } => {
                let tail = (1.0 - q / volume).clamp(0.0, 1.0);
                let z = norm_quantile(tail);
                let p = (mu_log + sigma_log * z).exp();
                if p.is_nan() {
                    0.0
                } else {
                    p
                }
            }
        })
    }

    /// Gross passenger value of serving the `q` highest-value requests:
    /// the integral of inverse demand from 0 to `q`.
    ///
    /// Closed form for linear and step curves; adaptive quadrature on the
    /// complementary (price-space) integral for lognormal, which avoids the
    /// singularity of inverse demand at zero throughput.
    pub fn gross_value(&self, q: f64) -> Result<f64> {
        let max_q = self.max_throughput();
        if q.is_nan() || q < 0.0 || q > max_q * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutOfRange { what: "throughput", value: q });
        }
        let q = q.min(max_q);
        if q == 0.0 {
            return Ok(0.0);
        }
        // Beyond the raw positive-price demand, normalized curves serve
        // zero-value padding, which contributes nothing.
        let q_eff = match (&self.kind, self.normalized) {
            (CurveKind::Linear { volume, .. }, true)
            | (CurveKind::Lognormal { volume, .. }, true) => q.min(*volume),
            _ => q,
        };
        Ok(match &self.kind {
            CurveKind::Linear { max_price, volume } => {
                max_price * (q_eff - q_eff * q_eff / (2.0 * volume))
            }
            CurveKind::Step { atoms } => {
                let mut remaining = q_eff;
                let mut total = 0.0;
                for &(value, mass) in atoms {
                    let take = remaining.min(mass);
                    total += value * take;
                    remaining -= take;
                    if remaining <= 0.0 {
                        break;
                    }
                }
                total
            }
            CurveKind::Lognormal { mu_log, sigma_log, volume } => {
                // integral_0^q D^-1(u) du = q p* + integral_{p*}^inf D(p) dp.
                let p_star = self.inverse(q_eff)?;
                let p_max = (mu_log + 12.0 * sigma_log).exp().max(p_star * 2.0);
                let tail = adaptive_simpson(
                    |p| volume * (1.0 - norm_cdf((p.ln() - mu_log) / sigma_log)),
                    p_star.max(1e-300),
                    p_max,
                    WELFARE_QUAD_TOL,
                );
                q_eff * p_star + tail
            }
        })
    }

    /// Multiply the curve's request volume by `factor` (used when normalizing
    /// absolute request counts by the driver supply).
    pub fn scale_volume(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::OutOfRange { what: "volume scale factor", value: factor });
        }
        let kind = match &self.kind {
            CurveKind::Linear { max_price, volume } => {
                CurveKind::Linear { max_price: *max_price, volume: volume * factor }
            }
            CurveKind::Step { atoms } => {
                CurveKind::Step { atoms: atoms.iter().map(|&(v, m)| (v, m * factor)).collect() }
            }
            CurveKind::Lognormal { mu_log, sigma_log, volume } => CurveKind::Lognormal {
                mu_log: *mu_log,
                sigma_log: *sigma_log,
                volume: volume * factor,
            },
        };
        Ok(DemandCurve { kind, normalized: self.normalized })
    }

    /// Re-check constructor invariants (deserialized curves skip them).
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            CurveKind::Linear { max_price, volume } => {
                DemandCurve::linear(*max_price, *volume).map(|_| ())
            }
            CurveKind::Step { atoms } => DemandCurve::step(atoms.clone()).map(|_| ()),
            CurveKind::Lognormal { mu_log, sigma_log, volume } => {
                DemandCurve::lognormal(*mu_log, *sigma_log, *volume).map(|_| ())
            }
        }
    }

    /// Throughputs at which inverse demand jumps; inserted into ironing grids
    /// so envelopes of finite-atom curves are exact.
    pub fn kink_throughputs(&self) -> Vec<f64> {
        match &self.kind {
            CurveKind::Step { atoms } => {
                let cap = self.max_throughput();
                let mut cum = 0.0;
                let mut kinks = Vec::with_capacity(atoms.len());
                for &(_, mass) in atoms {
                    cum += mass;
                    if cum < cap - 1e-15 {
                        kinks.push(cum);
                    }
                }
                kinks
            }
            _ => Vec::new(),
        }
    }
}
