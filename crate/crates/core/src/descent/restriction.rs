//! Keeping the search inside the region: projection onto the box, a
//! log-barrier on the nearest wall, or a logistic change of variables.

use serde::{Deserialize, Serialize};

use crate::gradient::{Direction, Objective, ObjectiveError, SolveCounts};
use crate::model::{Interval, ModelError, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    #[default]
    Projection,
    Barrier,
    Logistic,
}

impl std::str::FromStr for Restriction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "projection" => Ok(Restriction::Projection),
            "barrier" => Ok(Restriction::Barrier),
            "logistic" => Ok(Restriction::Logistic),
            _ => Err(format!(
                "unknown restriction `{s}` (projection, barrier, logistic)"
            )),
        }
    }
}

impl std::fmt::Display for Restriction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Restriction::Projection => "projection",
            Restriction::Barrier => "barrier",
            Restriction::Logistic => "logistic",
        })
    }
}

/// True if `u` lies strictly inside the interval.
pub fn in_open(iv: &Interval, u: f64) -> bool {
    iv.lb < u && u < iv.ub
}

/// `log` of the distance to the nearest wall; the upper wall wins ties.
pub fn barrier_term(iv: &Interval, u: f64) -> f64 {
    if !in_open(iv, u) {
        return f64::NEG_INFINITY;
    }
    (u - iv.lb).min(iv.ub - u).ln()
}

/// Derivative of [`barrier_term`], signed to push away from the nearest
/// wall.
pub fn barrier_derivative(iv: &Interval, u: f64) -> f64 {
    let (to_lb, to_ub) = (u - iv.lb, iv.ub - u);
    if to_lb < to_ub {
        1.0 / to_lb
    } else {
        -1.0 / to_ub
    }
}

/// An objective plus `mu` times the barrier terms of every coordinate.
pub struct BarrierObjective<'a, O: ?Sized> {
    pub inner: &'a mut O,
    pub region: &'a Region,
    pub mu: f64,
}

impl<O: Objective + ?Sized> BarrierObjective<'_, O> {
    fn check_open(&self, u: &[f64]) -> Result<(), ObjectiveError> {
        for (i, (iv, &x)) in self.region.bounds().iter().zip(u).enumerate() {
            if !in_open(iv, x) {
                return Err(ModelError::OutsideRegion {
                    param: self.region.params().name(i).to_string(),
                    value: x,
                    lb: iv.lb,
                    ub: iv.ub,
                }
                .into());
            }
        }
        Ok(())
    }
}

impl<O: Objective + ?Sized> Objective for BarrierObjective<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&mut self, u: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_open(u)?;
        let bar: f64 = self
            .region
            .bounds()
            .iter()
            .zip(u)
            .map(|(iv, &x)| barrier_term(iv, x))
            .sum();
        Ok(self.inner.value(u)? + self.mu * bar)
    }

    fn gradient(&mut self, u: &[f64], subset: &[usize]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_open(u)?;
        let g = self.inner.gradient(u, subset)?;
        Ok(subset
            .iter()
            .zip(g)
            .map(|(&i, gi)| gi + self.mu * barrier_derivative(&self.region.interval(i), u[i]))
            .collect())
    }

    fn direction(&self) -> Direction {
        self.inner.direction()
    }

    fn solves(&self) -> SolveCounts {
        self.inner.solves()
    }
}

/// The logistic map between an unconstrained coordinate `q` and the open
/// interval, centred so that `q = (ub - lb) / 2` maps to the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    pub iv: Interval,
    /// Use the gradient factor `e^q / (1 + e^q)^2` without the shift and
    /// scale of the exact chain rule.
    pub compat: bool,
}

impl Logistic {
    pub fn q0(&self) -> f64 {
        0.5 * self.iv.width()
    }

    pub fn to_u(&self, q: f64) -> f64 {
        self.iv.width() / (1.0 + (-(q - self.q0())).exp()) + self.iv.lb
    }

    /// Inverse of [`Logistic::to_u`]; points on the walls are pulled
    /// slightly inside.
    pub fn to_q(&self, u: f64) -> f64 {
        let frac = ((u - self.iv.lb) / self.iv.width()).clamp(1e-12, 1.0 - 1e-12);
        self.q0() + (frac / (1.0 - frac)).ln()
    }

    /// Factor turning `df/du` into the search gradient in `q`.
    pub fn gradient_factor(&self, q: f64) -> f64 {
        if self.compat {
            let e = q.exp();
            e / ((1.0 + e) * (1.0 + e))
        } else {
            let e = (-(q - self.q0())).exp();
            self.iv.width() * e / ((1.0 + e) * (1.0 + e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradient::tests::quartic;
    use crate::polynomial::ParameterSet;

    fn iv() -> Interval {
        Interval::new(0.5, 1.5)
    }

    #[test]
    fn barrier_repels_from_nearest_wall() {
        assert_eq!(barrier_derivative(&iv(), 1.0), -2.0);
        assert!((barrier_derivative(&iv(), 0.6) - 10.0).abs() < 1e-12);
        assert!((barrier_derivative(&iv(), 1.38) + 1.0 / 0.12).abs() < 1e-9);
        assert_eq!(barrier_term(&iv(), 1.6), f64::NEG_INFINITY);
        assert!((barrier_term(&iv(), 1.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn barrier_wraps_gradient() {
        let ps = ParameterSet::new(["p"]).unwrap();
        let region = Region::uniform(&ps, 0.5, 1.5).unwrap();
        let mut q = quartic();
        let mut b = BarrierObjective {
            inner: &mut q,
            region: &region,
            mu: 0.1,
        };
        assert!((b.gradient(&[1.0], &[0]).unwrap()[0] - 3.8).abs() < 1e-12);
        assert!((b.gradient(&[1.38], &[0]).unwrap()[0] - 2.41).abs() < 1e-2);
        assert!(b.value(&[1.62]).is_err());
        assert!((b.value(&[1.0]).unwrap() - (3.5 + 0.1 * 0.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn logistic_map() {
        let exact = Logistic {
            iv: iv(),
            compat: false,
        };
        assert_eq!(exact.to_u(0.5), 1.0);
        assert!((exact.to_q(exact.to_u(1.7)) - 1.7).abs() < 1e-12);
        assert_eq!(exact.gradient_factor(0.5) * 4.0, 1.0);
        let compat = Logistic {
            compat: true,
            ..exact
        };
        let g = compat.gradient_factor(0.5) * 4.0;
        assert!((g - 0.94).abs() < 1e-3);
        let q = 0.5 + 0.1 * g;
        assert!((q - 0.594).abs() < 1e-3);
        assert!((compat.to_u(q) - 1.0235).abs() < 1e-3);
        for q in [-50.0, 0.0, 50.0] {
            let u = exact.to_u(q);
            assert!(iv().contains(u));
        }
    }
}
