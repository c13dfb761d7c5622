use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Chain, ModelError};
use crate::polynomial::ParameterSet;

/// Default lower bound for parameters the user leaves unconstrained.
pub const DEFAULT_LOWER: f64 = 1e-6;
/// Default upper bound for parameters the user leaves unconstrained.
pub const DEFAULT_UPPER: f64 = 1.0 - 1e-6;

/// Offset added to interval midpoints for the initial point, so searches do
/// not start on a saddle at the exact center.
pub const START_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lb: f64,
    pub ub: f64,
}

impl Interval {
    pub fn new(lb: f64, ub: f64) -> Self {
        Interval { lb, ub }
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn midpoint(&self) -> f64 {
        self.lb + 0.5 * (self.ub - self.lb)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lb <= x && x <= self.ub
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lb).min(self.ub)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::new(DEFAULT_LOWER, DEFAULT_UPPER)
    }
}

/// A parameter instantiation, one value per parameter in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instantiation(pub Vec<f64>);

impl Instantiation {
    /// Builds an instantiation from `(name, value)` pairs; every parameter
    /// must be assigned exactly once.
    pub fn from_named(params: &ParameterSet, values: &[(String, f64)]) -> Result<Self, ModelError> {
        let mut out = vec![f64::NAN; params.len()];
        for (name, v) in values {
            out[params.lookup(name)?] = *v;
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::OutsideRegion {
                param: params.name(i).to_string(),
                value: out[i],
                lb: f64::NEG_INFINITY,
                ub: f64::INFINITY,
            });
        }
        Ok(Instantiation(out))
    }
}

impl Deref for Instantiation {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Axis-aligned box of admissible parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    params: Arc<ParameterSet>,
    bounds: Vec<Interval>,
}

impl Region {
    pub fn new(params: &Arc<ParameterSet>, bounds: Vec<Interval>) -> Result<Self, ModelError> {
        if bounds.len() != params.len() {
            return Err(ModelError::Dimension {
                expected: params.len(),
                got: bounds.len(),
            });
        }
        for (i, iv) in bounds.iter().enumerate() {
            if !(iv.lb.is_finite() && iv.ub.is_finite() && iv.lb < iv.ub) {
                return Err(ModelError::InvalidInterval {
                    param: params.name(i).to_string(),
                    lb: iv.lb,
                    ub: iv.ub,
                });
            }
        }
        Ok(Region {
            params: params.clone(),
            bounds,
        })
    }

    /// `[1e-6, 1 - 1e-6]` for every parameter.
    pub fn default_for(params: &Arc<ParameterSet>) -> Self {
        Region {
            params: params.clone(),
            bounds: vec![Interval::default(); params.len()],
        }
    }

    /// Same interval for every parameter.
    pub fn uniform(params: &Arc<ParameterSet>, lb: f64, ub: f64) -> Result<Self, ModelError> {
        Self::new(params, vec![Interval::new(lb, ub); params.len()])
    }

    pub fn params(&self) -> &Arc<ParameterSet> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn interval(&self, i: usize) -> Interval {
        self.bounds[i]
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim() && self.bounds.iter().zip(u).all(|(iv, &x)| iv.contains(x))
    }

    pub fn check_contains(&self, u: &[f64]) -> Result<(), ModelError> {
        if u.len() != self.dim() {
            return Err(ModelError::Dimension {
                expected: self.dim(),
                got: u.len(),
            });
        }
        for (i, (iv, &x)) in self.bounds.iter().zip(u).enumerate() {
            if !iv.contains(x) {
                return Err(ModelError::OutsideRegion {
                    param: self.params.name(i).to_string(),
                    value: x,
                    lb: iv.lb,
                    ub: iv.ub,
                });
            }
        }
        Ok(())
    }

    /// Midpoint of each interval shifted by a small offset, clamped inside.
    pub fn start_point(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|iv| iv.clamp(iv.midpoint() + START_OFFSET))
            .collect()
    }

    /// Independent uniform draw per coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|iv| iv.lb + rng.random::<f64>() * iv.width())
            .collect()
    }

    /// Checks graph preservation by evaluating every transition at the
    /// corners of the sub-box spanned by the parameters it mentions, and at
    /// the region center. This is a sampling check, not a proof.
    pub fn check_graph_preserving(&self, chain: &Chain) -> Result<(), ModelError> {
        if **chain.params() != *self.params {
            return Err(ModelError::RegionMismatch);
        }
        const MAX_CORNER_VARS: usize = 12;
        let center: Vec<f64> = self.bounds.iter().map(Interval::midpoint).collect();
        for s in 0..chain.num_states() {
            for (t, w) in chain.row(s) {
                let vars: Vec<usize> = w.variables().into_iter().collect();
                let k = vars.len().min(MAX_CORNER_VARS);
                let mut point = center.clone();
                for mask in 0..(1u64 << k) {
                    for (bit, &v) in vars.iter().take(k).enumerate() {
                        let iv = self.bounds[v];
                        point[v] = if mask >> bit & 1 == 1 { iv.ub } else { iv.lb };
                    }
                    for p in [&point, &center] {
                        let value = w.eval(p)?;
                        if value == 0.0 || !(0.0..=1.0).contains(&value) {
                            return Err(ModelError::NotGraphPreserving {
                                from: chain.name(s).to_string(),
                                to: chain.name(*t).to_string(),
                                value,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::running_example;
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn interval_validation() {
        let ps = ParameterSet::new(["p"]).unwrap();
        assert!(Region::new(&ps, vec![Interval::new(0.9, 0.1)]).is_err());
        assert!(Region::new(&ps, vec![Interval::new(0.5, 0.5)]).is_err());
        assert!(Region::new(&ps, vec![]).is_err());
        let r = Region::new(&ps, vec![Interval::new(0.1, 0.9)]).unwrap();
        assert!(r.contains(&[0.1]) && r.contains(&[0.9]) && !r.contains(&[0.95]));
    }

    #[test]
    fn start_point_is_offset_midpoint() {
        let ps = ParameterSet::new(["p", "q"]).unwrap();
        let r = Region::new(&ps, vec![Interval::new(0.0, 1.0), Interval::new(0.5, 1.5)]).unwrap();
        assert_eq!(r.start_point(), vec![0.5 + 1e-6, 1.0 + 1e-6]);
    }

    #[test]
    fn samples_stay_inside() {
        let ps = ParameterSet::new(["p", "q", "r"]).unwrap();
        let r = Region::uniform(&ps, 0.2, 0.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(r.contains(&r.sample(&mut rng)));
        }
    }

    #[test]
    fn corner_check_on_running_example() {
        let pmc = running_example();
        let ok = Region::uniform(pmc.params(), 0.1, 0.9).unwrap();
        ok.check_graph_preserving(&pmc).unwrap();
        let bad = Region::uniform(pmc.params(), 0.0, 0.9).unwrap();
        assert!(bad.check_graph_preserving(&pmc).is_err());
    }
}
