//! Seeded synthetic pMCs with observation-style parameter tying.
//!
//! Every transient state either picks a parameter `p_i` shared with other
//! states and splits its mass as `p_i` / `(1 - p_i)`, or uses constant
//! weights. One forward edge per state guarantees that `good` is reachable.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelError, Pmc, Region};
use crate::polynomial::{ratio, ParameterSet, Polynomial, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    /// Total number of states, including `good` and the optional `bad`.
    pub states: usize,
    /// Outgoing transitions per transient state (at least 2).
    pub branching: usize,
    /// Number of distinct parameters; each is used at least once.
    pub params: usize,
    /// Probability that an edge leads directly to `good`.
    pub target_density: f64,
    /// Probability that a non-forward edge leads to `bad`; zero omits `bad`.
    pub sink_density: f64,
    /// Fraction of transient states with constant rows.
    pub constant_fraction: f64,
    /// Rewards are drawn uniformly from `0..=max_reward`.
    pub max_reward: u32,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            states: 100,
            branching: 2,
            params: 10,
            target_density: 0.05,
            sink_density: 0.0,
            constant_fraction: 0.1,
            max_reward: 3,
        }
    }
}

impl GeneratorSpec {
    pub fn new(states: usize, params: usize) -> Self {
        GeneratorSpec {
            states,
            params,
            ..Default::default()
        }
    }
}

/// Generates a pMC in normal form and the default region for it.
pub fn generate_synthetic(spec: &GeneratorSpec, seed: u64) -> Result<(Pmc, Region), ModelError> {
    let has_bad = spec.sink_density > 0.0;
    let absorbing = 1 + usize::from(has_bad);
    if spec.states <= absorbing {
        return Err(ModelError::Generator(format!(
            "need more than {absorbing} states, got {}",
            spec.states
        )));
    }
    if spec.branching < 2 {
        return Err(ModelError::Generator("branching must be at least 2".into()));
    }
    let m = spec.states - absorbing;
    if spec.params > m {
        return Err(ModelError::Generator(format!(
            "{} parameters need at least as many transient states, got {m}",
            spec.params
        )));
    }
    for (what, v) in [
        ("target_density", spec.target_density),
        ("sink_density", spec.sink_density),
        ("constant_fraction", spec.constant_fraction),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(ModelError::Generator(format!("{what} must lie in [0, 1]")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let good = m;
    let bad = has_bad.then_some(m + 1);
    let ps = ParameterSet::new((0..spec.params).map(|i| format!("p{i}")))
        .expect("generated names are distinct");

    // Parameter per transient state; the first `params` shuffled states
    // cover every parameter once.
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut assignment: Vec<Option<usize>> = vec![None; m];
    for (k, &s) in order.iter().enumerate() {
        assignment[s] = if k < spec.params {
            Some(k)
        } else if spec.params == 0 || rng.random::<f64>() < spec.constant_fraction {
            None
        } else {
            Some(rng.random_range(0..spec.params))
        };
    }

    let one = Polynomial::one(&ps);
    let mut rows = Vec::with_capacity(spec.states);
    let mut rewards = Vec::with_capacity(spec.states);
    for (s, param) in assignment.iter().enumerate() {
        let forward = if s + 1 == m || rng.random::<f64>() < spec.target_density {
            good
        } else {
            rng.random_range(s + 1..m)
        };
        let mut targets = vec![forward];
        for _ in 1..spec.branching {
            let mut pick = None;
            for _ in 0..64 {
                let r: f64 = rng.random();
                let t = match bad {
                    Some(b) if r < spec.sink_density => b,
                    _ if rng.random::<f64>() < spec.target_density => good,
                    _ => rng.random_range(0..m),
                };
                if !targets.contains(&t) {
                    pick = Some(t);
                    break;
                }
            }
            // Small models may run out of distinct random picks.
            let t = pick.unwrap_or_else(|| {
                (0..spec.states - usize::from(has_bad))
                    .find(|t| !targets.contains(t))
                    .unwrap_or(forward)
            });
            targets.push(t);
        }
        let rest = (spec.branching - 1) as i64;
        let row = match param {
            Some(i) => {
                let p = Polynomial::var(&ps, *i).expect("index in range");
                let share = one
                    .checked_sub(&p)
                    .expect("same set")
                    .scale(&ratio(1, rest));
                std::iter::once((forward, p))
                    .chain(targets[1..].iter().map(|&t| (t, share.clone())))
                    .collect()
            }
            None => {
                let w = Polynomial::constant(&ps, ratio(1, spec.branching as i64));
                targets.iter().map(|&t| (t, w.clone())).collect()
            }
        };
        rows.push(row);
        rewards.push(Rational::from_integer(
            rng.random_range(0..=spec.max_reward).into(),
        ));
    }
    let mut names: Vec<String> = (0..m).map(|s| format!("s{s}")).collect();
    names.push("good".into());
    rows.push(vec![(good, one.clone())]);
    rewards.push(ratio(0, 1));
    if let Some(b) = bad {
        names.push("bad".into());
        rows.push(vec![(b, one)]);
        rewards.push(ratio(0, 1));
    }
    let pmc = Pmc::new(ps.clone(), names, 0, good, bad, rows, rewards)?;
    Ok((pmc, Region::default_for(&ps)))
}
