//! Per-edge design objectives evaluated at a throughput level.

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::{Error, Result};

/// What the platform maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    Revenue,
    Welfare,
    /// `theta * REVENUE + (1 - theta) * WELFARE`, `theta` in [0, 1].
    Mix {
        theta: f64,
    },
}

impl ObjectiveKind {
    pub fn mix(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::OutOfRange { what: "mix theta", value: theta });
        }
        Ok(ObjectiveKind::Mix { theta })
    }

    pub fn validate(&self) -> Result<()> {
        if let ObjectiveKind::Mix { theta } = self {
            if !(0.0..=1.0).contains(theta) {
                return Err(Error::OutOfRange { what: "mix theta", value: *theta });
            }
        }
        Ok(())
    }
}

/// Objective of serving throughput `q` on an edge at the deterministic price
/// `D^-1(q)`: revenue is `(D^-1(q) - cost) * q`, welfare integrates the margin
/// over the `q` highest-value requests. Zero throughput is always worth zero.
pub fn raw_edge_objective(
    curve: &DemandCurve,
    cost: f64,
    kind: ObjectiveKind,
    q: f64,
) -> Result<f64> {
    let max_q = curve.max_throughput();
    if q.is_nan() || q < 0.0 || q > max_q * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::OutOfRange { what: "throughput", value: q });
    }
    let q = q.min(max_q);
    if q == 0.0 {
        return Ok(0.0);
    }
    let revenue = || -> Result<f64> { Ok((curve.inverse(q)? - cost) * q) };
    let welfare = || -> Result<f64> { Ok(curve.gross_value(q)? - cost * q) };
    match kind {
        ObjectiveKind::Revenue => revenue(),
        ObjectiveKind::Welfare => welfare(),
        ObjectiveKind::Mix { theta } => Ok(theta * revenue()? + (1.0 - theta) * welfare()?),
    }
}

/// A fully specified edge objective: curve, cost, kind and a linear scale.
///
/// The scale is 1 for original edges; travel-time unification divides each
/// chain edge's objective by the chain length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeObjective {
    pub curve: DemandCurve,
    pub cost: f64,
    pub kind: ObjectiveKind,
    pub scale: f64,
}

impl EdgeObjective {
    pub fn new(curve: DemandCurve, cost: f64, kind: ObjectiveKind) -> Self {
        EdgeObjective { curve, cost, kind, scale: 1.0 }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn value(&self, q: f64) -> Result<f64> {
        Ok(self.scale * raw_edge_objective(&self.curve, self.cost, self.kind, q)?)
    }

    /// Objective realized by posting price `p`: the induced throughput is
    /// served in full at that price.
    pub fn value_at_price(&self, p: f64) -> Result<f64> {
        let q = self.curve.eval(p)?;
        if q == 0.0 {
            return Ok(0.0);
        }
        let v = match self.kind {
            ObjectiveKind::Revenue => (p - self.cost) * q,
            ObjectiveKind::Welfare => self.curve.gross_value(q)? - self.cost * q,
            ObjectiveKind::Mix { theta } => {
                theta * (p - self.cost) * q
                    + (1.0 - theta) * (self.curve.gross_value(q)? - self.cost * q)
            }
        };
        Ok(self.scale * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_curve() -> DemandCurve {
        DemandCurve::step(vec![(3.0, 0.3), (1.0, 0.7)]).unwrap()
    }

    #[test]
    fn revenue_linear() {
        let c = DemandCurve::linear_test();
        let got = raw_edge_objective(&c, 0.0, ObjectiveKind::Revenue, 0.5).unwrap();
        assert!((got - 0.25).abs() < 1e-12);
    }

    #[test]
    fn revenue_step_is_non_concave_across_atom_boundary() {
        let c = step_curve();
        let at_boundary = raw_edge_objective(&c, 0.0, ObjectiveKind::Revenue, 0.3).unwrap();
        let past_boundary = raw_edge_objective(&c, 0.0, ObjectiveKind::Revenue, 0.35).unwrap();
        assert!((at_boundary - 0.9).abs() < 1e-12);
        assert!((past_boundary - 0.35).abs() < 1e-12);
    }

    #[test]
    fn welfare_linear_full_throughput() {
        let c = DemandCurve::linear_test();
        let got = raw_edge_objective(&c, 0.0, ObjectiveKind::Welfare, 1.0).unwrap();
        assert!((got - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_throughput_is_free() {
        for kind in
            [ObjectiveKind::Revenue, ObjectiveKind::Welfare, ObjectiveKind::Mix { theta: 0.3 }]
        {
            let got = raw_edge_objective(&step_curve(), 2.0, kind, 0.0).unwrap();
            assert_eq!(got, 0.0);
        }
    }

    #[test]
    fn mix_interpolates() {
        let c = DemandCurve::linear_test();
        let rev = raw_edge_objective(&c, 0.1, ObjectiveKind::Revenue, 0.4).unwrap();
        let wel = raw_edge_objective(&c, 0.1, ObjectiveKind::Welfare, 0.4).unwrap();
        let mix = raw_edge_objective(&c, 0.1, ObjectiveKind::mix(0.25).unwrap(), 0.4).unwrap();
        assert!((mix - (0.25 * rev + 0.75 * wel)).abs() < 1e-12);
    }

    #[test]
    fn welfare_concave_when_inverse_demand_non_increasing() {
        // Discrete second differences of the welfare objective must be <= 0
        // (up to tolerance) on a grid.
        for curve in [
            DemandCurve::linear_test(),
            step_curve(),
            DemandCurve::lognormal(0.3, 0.7, 1.0).unwrap(),
        ] {
            let n = 200;
            let max_q = curve.max_throughput();
            let vals: Vec<f64> = (0..=n)
                .map(|i| {
                    let q = max_q * i as f64 / n as f64;
                    raw_edge_objective(&curve, 0.2, ObjectiveKind::Welfare, q).unwrap()
                })
                .collect();
            for w in vals.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9, "welfare not concave");
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let c = DemandCurve::linear_test();
        assert!(raw_edge_objective(&c, 0.0, ObjectiveKind::Revenue, 1.5).is_err());
        assert!(raw_edge_objective(&c, 0.0, ObjectiveKind::Revenue, -0.1).is_err());
    }

    #[test]
    fn theta_validated() {
        assert!(ObjectiveKind::mix(1.2).is_err());
        assert!(ObjectiveKind::mix(0.0).is_ok());
        assert!(ObjectiveKind::Mix { theta: -0.5 }.validate().is_err());
    }

    #[test]
    fn scaled_objective_divides_value() {
        let obj = EdgeObjective::new(step_curve(), 0.0, ObjectiveKind::Revenue);
        let scaled = obj.clone().with_scale(1.0 / 3.0);
        let q = 0.3;
        assert!((scaled.value(q).unwrap() - obj.value(q).unwrap() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn value_at_price_matches_throughput_value_on_continuum() {
        let obj = EdgeObjective::new(DemandCurve::linear_test(), 0.0, ObjectiveKind::Revenue);
        let p = 0.4;
        let q = obj.curve.eval(p).unwrap();
        assert!((obj.value_at_price(p).unwrap() - obj.value(q).unwrap()).abs() < 1e-12);
    }
}
