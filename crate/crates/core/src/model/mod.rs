//! Parametric Markov chains, weighted automata and their preprocessing.
//!
//! A [`Pmc`] is always in normal form: a single absorbing `good` state, at
//! most one absorbing `bad` state, and every other row summing symbolically
//! to one. [`RawModel`] is what the parser produces before that
//! normalization.

mod generator;
mod region;

pub use generator::{generate_synthetic, GeneratorSpec};
pub use region::{Instantiation, Interval, Region, DEFAULT_LOWER, DEFAULT_UPPER};

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use num_traits::Zero;

use crate::polynomial::{
    rational_to_f64, CompiledPoly, ParameterSet, PolyError, Polynomial, Rational,
};

/// Numerical slack for the `[0, 1]` range check on instantiated entries.
const RANGE_SLACK: f64 = 1e-12;
/// Row-sum tolerance after instantiation.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("target set is empty")]
    EmptyTargets,
    #[error("state index {0} is out of range")]
    StateIndex(usize),
    #[error("row of state `{state}` sums to {sum} instead of 1")]
    RowSum { state: String, sum: String },
    #[error("state `{0}` must be absorbing")]
    NotAbsorbing(String),
    #[error("state `{0}` has no outgoing transitions and is not absorbing")]
    EmptyRow(String),
    #[error("duplicate transition {from} -> {to}")]
    DuplicateTransition { from: String, to: String },
    #[error(
        "`bad` state `{0}` is reachable from the initial state; expected rewards are unbounded"
    )]
    BadReachable(String),
    #[error("instantiation has {got} values but the model has {expected} parameters")]
    Dimension { expected: usize, got: usize },
    #[error("parameter `{param}` = {value} lies outside its interval [{lb}, {ub}]")]
    OutsideRegion {
        param: String,
        value: f64,
        lb: f64,
        ub: f64,
    },
    #[error("transition {from} -> {to} evaluates to {value}, breaking graph preservation")]
    NotGraphPreserving {
        from: String,
        to: String,
        value: f64,
    },
    #[error("row of state `{state}` sums to {sum} after instantiation")]
    NumericRowSum { state: String, sum: f64 },
    #[error("invalid interval for `{param}`: [{lb}, {ub}]")]
    InvalidInterval { param: String, lb: f64, ub: f64 },
    #[error("region is defined over a different parameter set than the model")]
    RegionMismatch,
    #[error("infeasible generator spec: {0}")]
    Generator(String),
}

/// Sparse transition structure shared by [`Pmc`] and [`WeightedAutomaton`].
///
/// Rows are sorted by target index and never contain zero polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    params: Arc<ParameterSet>,
    names: Vec<String>,
    initial: usize,
    good: usize,
    bad: Option<usize>,
    rows: Vec<Vec<(usize, Polynomial)>>,
    rewards: Vec<Rational>,
}

impl Chain {
    pub fn params(&self) -> &Arc<ParameterSet> {
        &self.params
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn good(&self) -> usize {
        self.good
    }

    pub fn bad(&self) -> Option<usize> {
        self.bad
    }

    pub fn row(&self, s: usize) -> &[(usize, Polynomial)] {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Vec<(usize, Polynomial)>] {
        &self.rows
    }

    pub fn reward(&self, s: usize) -> &Rational {
        &self.rewards[s]
    }

    pub fn rewards(&self) -> &[Rational] {
        &self.rewards
    }

    /// A state whose only transition is a constant self-loop of weight one.
    pub fn is_absorbing(&self, s: usize) -> bool {
        matches!(self.rows[s].as_slice(), [(t, w)] if *t == s && w.is_one())
    }

    fn row_sum(&self, s: usize) -> Result<Polynomial, PolyError> {
        self.rows[s]
            .iter()
            .try_fold(Polynomial::zero(&self.params), |acc, (_, w)| {
                acc.checked_add(w)
            })
    }

    /// Checks that every row sums to the constant polynomial one.
    pub fn check_row_sums(&self) -> Result<(), ModelError> {
        for s in 0..self.num_states() {
            let sum = self.row_sum(s)?;
            if !sum.is_one() {
                return Err(ModelError::RowSum {
                    state: self.names[s].clone(),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Forward graph reachability on the structural support.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(s) = queue.pop_front() {
            for &(t, _) in &self.rows[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    pub fn compile(&self) -> CompiledChain {
        CompiledChain {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(t, w)| (*t, w.compile())).collect())
                .collect(),
            rewards: self.rewards.iter().map(rational_to_f64).collect(),
            absorbing: (0..self.num_states())
                .map(|s| self.is_absorbing(s))
                .collect(),
            initial: self.initial,
            n_params: self.params.len(),
        }
    }
}

/// A parametric Markov chain in normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmc {
    chain: Chain,
}

impl std::ops::Deref for Pmc {
    type Target = Chain;
    fn deref(&self) -> &Chain {
        &self.chain
    }
}

impl Pmc {
    /// Builds a pMC that is already in normal form, validating the invariants.
    pub fn new(
        params: Arc<ParameterSet>,
        names: Vec<String>,
        initial: usize,
        good: usize,
        bad: Option<usize>,
        rows: Vec<Vec<(usize, Polynomial)>>,
        rewards: Vec<Rational>,
    ) -> Result<Self, ModelError> {
        let n = names.len();
        for &s in [initial, good].iter().chain(bad.iter()) {
            if s >= n {
                return Err(ModelError::StateIndex(s));
            }
        }
        let chain = Chain {
            params,
            names,
            initial,
            good,
            bad,
            rows: normalize_rows(rows, n)?,
            rewards,
        };
        chain.check_row_sums()?;
        for s in std::iter::once(good).chain(bad) {
            if !chain.is_absorbing(s) {
                return Err(ModelError::NotAbsorbing(chain.names[s].clone()));
            }
        }
        let mut pmc = Pmc { chain };
        pmc.chain.rewards[good] = Rational::zero();
        Ok(pmc)
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    /// Errors if `bad` is graph-reachable from the initial state, i.e. if the
    /// good state is not reached almost surely.
    pub fn ensure_almost_sure_target(&self) -> Result<(), ModelError> {
        if let Some(b) = self.bad {
            if self.reachable_from(self.initial)[b] {
                return Err(ModelError::BadReachable(self.names[b].clone()));
            }
        }
        Ok(())
    }

    /// Replaces the reward structure so that the expected reward to reach a
    /// fresh sink equals the probability of reaching `good`.
    pub fn reachability_to_reward(&self) -> Pmc {
        let c = &self.chain;
        let n = c.num_states();
        let sink = n;
        let mut sink_name = String::from("sink");
        while c.names.contains(&sink_name) {
            sink_name.push('_');
        }
        let mut names = c.names.clone();
        names.push(sink_name);
        let mut rows = c.rows.clone();
        let one = Polynomial::one(&c.params);
        for s in std::iter::once(c.good).chain(c.bad) {
            rows[s] = vec![(sink, one.clone())];
        }
        rows.push(vec![(sink, one)]);
        let mut rewards = vec![Rational::zero(); n + 1];
        rewards[c.good] = Rational::from_integer(1.into());
        Pmc {
            chain: Chain {
                params: c.params.clone(),
                names,
                initial: c.initial,
                good: sink,
                bad: None,
                rows,
                rewards,
            },
        }
    }

    /// Derived weighted automaton with respect to parameter `p`: the state
    /// space is duplicated, copies keep the original weights and each copied
    /// state `d s` gets cross edges `d s -> t` weighted by `dP(s,t)/dp`.
    pub fn derived_automaton(&self, p: usize) -> Result<WeightedAutomaton, ModelError> {
        let c = &self.chain;
        if p >= c.params.len() {
            return Err(PolyError::ParameterIndex(p).into());
        }
        let n = c.num_states();
        let pname = c.params.name(p).to_string();
        let mut names = c.names.clone();
        names.extend(c.names.iter().map(|s| format!("d{pname}_{s}")));
        let mut rows = c.rows.clone();
        let mut rewards = c.rewards.clone();
        for s in 0..n {
            let mut row: Vec<(usize, Polynomial)> = Vec::new();
            for (t, w) in &c.rows[s] {
                let dw = w.derivative(p)?;
                if !dw.is_zero() {
                    row.push((*t, dw));
                }
            }
            row.extend(c.rows[s].iter().map(|(t, w)| (t + n, w.clone())));
            rows.push(row);
            rewards.push(Rational::zero());
        }
        Ok(WeightedAutomaton {
            chain: Chain {
                params: c.params.clone(),
                names,
                initial: c.initial + n,
                good: c.good,
                bad: c.bad,
                rows,
                rewards,
            },
            base_states: n,
            param: p,
        })
    }

    pub fn derived_automaton_named(&self, p: &str) -> Result<WeightedAutomaton, ModelError> {
        self.derived_automaton(self.params.lookup(p)?)
    }

    /// Evaluates the model at `u`, checking region membership and graph
    /// preservation.
    pub fn instantiate(&self, u: &[f64], region: &Region) -> Result<ConcreteChain, ModelError> {
        region.check_contains(u)?;
        self.compile().instantiate(u, &self.names, true)
    }
}

/// Weighted automaton whose rows are quasi-distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAutomaton {
    chain: Chain,
    base_states: usize,
    param: usize,
}

impl std::ops::Deref for WeightedAutomaton {
    type Target = Chain;
    fn deref(&self) -> &Chain {
        &self.chain
    }
}

impl WeightedAutomaton {
    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    /// Number of states of the pMC this automaton was derived from.
    pub fn base_states(&self) -> usize {
        self.base_states
    }

    pub fn param(&self) -> usize {
        self.param
    }

    /// True for states of the derivative copy.
    pub fn is_derivative_state(&self, s: usize) -> bool {
        s >= self.base_states
    }

    /// Edges from the derivative copy back into the original states.
    pub fn cross_edges(&self) -> impl Iterator<Item = (usize, usize, &Polynomial)> {
        (self.base_states..self.num_states()).flat_map(move |s| {
            self.rows[s]
                .iter()
                .filter(move |(t, _)| *t < self.base_states)
                .map(move |(t, w)| (s, *t, w))
        })
    }
}

/// A model as written in a file, before target merging.
#[derive(Debug, Clone, PartialEq)]
pub struct RawModel {
    pub params: Arc<ParameterSet>,
    pub names: Vec<String>,
    pub initial: usize,
    pub absorbing: Vec<bool>,
    pub rewards: Vec<Rational>,
    pub rows: Vec<Vec<(usize, Polynomial)>>,
    pub targets: Vec<usize>,
}

impl RawModel {
    /// Checks symbolic row-stochasticity and structural well-formedness.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.names.len();
        if self.initial >= n {
            return Err(ModelError::StateIndex(self.initial));
        }
        for s in 0..n {
            let row = &self.rows[s];
            if row.is_empty() {
                return Err(ModelError::EmptyRow(self.names[s].clone()));
            }
            let mut sum = Polynomial::zero(&self.params);
            for (t, w) in row {
                if *t >= n {
                    return Err(ModelError::StateIndex(*t));
                }
                sum = sum.checked_add(w)?;
            }
            if !sum.is_one() {
                return Err(ModelError::RowSum {
                    state: self.names[s].clone(),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }
}

fn normalize_rows(
    rows: Vec<Vec<(usize, Polynomial)>>,
    n: usize,
) -> Result<Vec<Vec<(usize, Polynomial)>>, ModelError> {
    if rows.len() != n {
        return Err(ModelError::StateIndex(rows.len()));
    }
    rows.into_iter()
        .map(|row| {
            let mut merged: BTreeMap<usize, Polynomial> = BTreeMap::new();
            for (t, w) in row {
                if t >= n {
                    return Err(ModelError::StateIndex(t));
                }
                match merged.remove(&t) {
                    Some(prev) => {
                        merged.insert(t, prev.checked_add(&w)?);
                    }
                    None => {
                        merged.insert(t, w);
                    }
                }
            }
            Ok(merged.into_iter().filter(|(_, w)| !w.is_zero()).collect())
        })
        .collect()
}

/// Merges all target states into one absorbing `good` state and all states
/// that cannot reach it into one absorbing `bad` state.
///
/// State order is preserved; the merged states take the position and name of
/// the lowest-indexed member of their class. Applying this to a model that
/// is already in normal form is the identity.
pub fn preprocess(raw: &RawModel, targets: &[usize]) -> Result<Pmc, ModelError> {
    raw.validate()?;
    let n = raw.names.len();
    if targets.is_empty() {
        return Err(ModelError::EmptyTargets);
    }
    let mut is_target = vec![false; n];
    for &t in targets {
        if t >= n {
            return Err(ModelError::StateIndex(t));
        }
        is_target[t] = true;
    }

    // Backward reachability to the targets; targets keep no outgoing edges.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in (0..n).filter(|&s| !is_target[s]) {
        for (t, w) in &raw.rows[s] {
            if !w.is_zero() {
                preds[*t].push(s);
            }
        }
    }
    let mut reaches = is_target.clone();
    let mut queue: VecDeque<usize> = targets.iter().copied().collect();
    while let Some(t) = queue.pop_front() {
        for &s in &preds[t] {
            if !reaches[s] {
                reaches[s] = true;
                queue.push_back(s);
            }
        }
    }

    // New indices: good/bad at the first member of their class.
    let mut map = vec![0usize; n];
    let mut names = Vec::new();
    let mut kept = Vec::new();
    let (mut good, mut bad) = (None, None);
    for s in 0..n {
        let slot = if is_target[s] {
            &mut good
        } else if !reaches[s] {
            &mut bad
        } else {
            map[s] = names.len();
            names.push(raw.names[s].clone());
            kept.push(s);
            continue;
        };
        match *slot {
            Some(idx) => map[s] = idx,
            None => {
                *slot = Some(names.len());
                map[s] = names.len();
                names.push(raw.names[s].clone());
                kept.push(s);
            }
        }
    }
    let good = good.expect("targets are nonempty");
    let one = Polynomial::one(&raw.params);
    let mut rows = Vec::with_capacity(kept.len());
    let mut rewards = Vec::with_capacity(kept.len());
    for (new, &old) in kept.iter().enumerate() {
        if new == good || Some(new) == bad {
            rows.push(vec![(new, one.clone())]);
            rewards.push(Rational::zero());
        } else {
            rows.push(
                raw.rows[old]
                    .iter()
                    .map(|(t, w)| (map[*t], w.clone()))
                    .collect(),
            );
            rewards.push(raw.rewards[old].clone());
        }
    }
    Pmc::new(
        raw.params.clone(),
        names,
        map[raw.initial],
        good,
        bad,
        rows,
        rewards,
    )
}

/// Preprocessing for expected-reward queries: additionally requires that the
/// good state is reached almost surely from the initial state.
pub fn preprocess_for_reward(raw: &RawModel, targets: &[usize]) -> Result<Pmc, ModelError> {
    let pmc = preprocess(raw, targets)?;
    pmc.ensure_almost_sure_target()?;
    Ok(pmc)
}

/// Double-precision form of a [`Chain`] for repeated instantiation.
#[derive(Debug, Clone)]
pub struct CompiledChain {
    rows: Vec<Vec<(usize, CompiledPoly)>>,
    rewards: Vec<f64>,
    absorbing: Vec<bool>,
    initial: usize,
    n_params: usize,
}

impl CompiledChain {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    /// Evaluates every entry at `u`. With `probabilistic` set, entries must
    /// be nonzero and within `[0, 1]` (graph preservation); rows must always
    /// sum to one within [`ROW_SUM_TOL`].
    pub fn instantiate(
        &self,
        u: &[f64],
        names: &[String],
        probabilistic: bool,
    ) -> Result<ConcreteChain, ModelError> {
        if u.len() != self.n_params {
            return Err(ModelError::Dimension {
                expected: self.n_params,
                got: u.len(),
            });
        }
        let mut rows = Vec::with_capacity(self.rows.len());
        for (s, row) in self.rows.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            let mut sum = 0.0;
            for (t, w) in row {
                let v = w.eval(u);
                if probabilistic && (v == 0.0 || !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v))
                    || !v.is_finite()
                {
                    return Err(ModelError::NotGraphPreserving {
                        from: names[s].clone(),
                        to: names[*t].clone(),
                        value: v,
                    });
                }
                sum += v;
                out.push((*t, v));
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ModelError::NumericRowSum {
                    state: names[s].clone(),
                    sum,
                });
            }
            rows.push(out);
        }
        Ok(ConcreteChain {
            rows,
            rewards: self.rewards.clone(),
            absorbing: self.absorbing.clone(),
            initial: self.initial,
        })
    }
}

/// A numeric instantiation of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteChain {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rewards: Vec<f64>,
    pub absorbing: Vec<bool>,
    pub initial: usize,
}

impl ConcreteChain {
    pub fn entry(&self, s: usize, t: usize) -> f64 {
        self.rows[s]
            .iter()
            .find(|(u, _)| *u == t)
            .map_or(0.0, |(_, w)| *w)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::polynomial::ratio;

    #[test]
    fn running_example_is_already_normal() {
        let raw = running_example_raw();
        let pmc = preprocess(&raw, &raw.targets).unwrap();
        assert_eq!(pmc.num_states(), 5);
        assert_eq!(pmc.num_transitions(), 7);
        assert_eq!(pmc.bad(), None);
        assert_eq!(pmc.good(), 4);
        assert_eq!(pmc.names(), raw.names.as_slice());
        assert_eq!(pmc.rows(), raw.rows.as_slice());
        pmc.ensure_almost_sure_target().unwrap();
    }

    #[test]
    fn unreachable_target_is_rejected_for_rewards() {
        let mut raw = running_example_raw();
        // s0 loops forever between s0 and s1, never reaching s2/s3.
        let ps = raw.params.clone();
        raw.rows[0] = vec![(1, Polynomial::one(&ps))];
        raw.rows[1] = vec![(0, Polynomial::one(&ps))];
        let pmc = preprocess(&raw, &raw.targets).unwrap();
        assert!(pmc.bad().is_some());
        assert!(matches!(
            preprocess_for_reward(&raw, &raw.targets),
            Err(ModelError::BadReachable(_))
        ));
        assert_eq!(preprocess(&raw, &[]), Err(ModelError::EmptyTargets));
    }

    #[test]
    fn two_targets_are_merged() {
        // s0 -> t1 (p), s0 -> t2 (1-p); s1 -> t1 (1/2), s1 -> t2 (1/2)
        let ps = ParameterSet::new(["p"]).unwrap();
        let one = Polynomial::one(&ps);
        let half = Polynomial::constant(&ps, ratio(1, 2));
        let raw = RawModel {
            params: ps.clone(),
            names: ["s0", "t1", "s1", "t2"].map(String::from).to_vec(),
            initial: 0,
            absorbing: vec![false, true, false, true],
            rewards: vec![ratio(1, 1), ratio(0, 1), ratio(2, 1), ratio(5, 1)],
            rows: vec![
                vec![
                    (1, poly(&ps, &[(1, 1, 1)])),
                    (2, poly(&ps, &[(1, 1, 0), (-1, 1, 1)])),
                ],
                vec![(1, one.clone())],
                vec![(1, half.clone()), (3, half)],
                vec![(3, one.clone())],
            ],
            targets: vec![1, 3],
        };
        let pmc = preprocess(&raw, &raw.targets).unwrap();
        assert_eq!(pmc.num_states(), 3);
        assert_eq!(pmc.names(), &["s0", "t1", "s1"]);
        assert_eq!(pmc.good(), 1);
        // s1's two halves now point at the same state and merge to 1.
        assert_eq!(pmc.row(2), &[(1, one)]);
        assert_eq!(pmc.reward(1), &ratio(0, 1));
        pmc.check_row_sums().unwrap();
    }

    #[test]
    fn reachability_to_reward_on_running_example() {
        let pmc = running_example().reachability_to_reward();
        assert_eq!(pmc.num_states(), 6);
        assert_eq!(pmc.good(), 5);
        assert_eq!(pmc.reward(4), &ratio(1, 1));
        assert_eq!(pmc.params().len(), 1);
        pmc.check_row_sums().unwrap();
    }

    #[test]
    fn instantiate_running_example() {
        let pmc = running_example();
        let region = Region::default_for(pmc.params());
        let a = pmc.instantiate(&[0.5], &region).unwrap();
        assert_eq!(a.rows[0], vec![(1, 0.5), (2, 0.5)]);
        let a = pmc.instantiate(&[0.9], &region).unwrap();
        assert_eq!(a.entry(1, 2), 0.9);
        assert!((a.entry(1, 3) - 0.1).abs() < 1e-15);

        let wide = Region::new(pmc.params(), vec![Interval::new(0.0, 0.9)]).unwrap();
        assert!(matches!(
            pmc.instantiate(&[0.0], &wide),
            Err(ModelError::NotGraphPreserving { .. })
        ));
        assert!(matches!(
            pmc.instantiate(&[0.95], &wide),
            Err(ModelError::OutsideRegion { .. })
        ));
    }

    #[test]
    fn derived_automaton_of_running_example() {
        let pmc = running_example();
        let wfa = pmc.derived_automaton(0).unwrap();
        assert_eq!(wfa.num_states(), 10);
        assert_eq!(wfa.initial(), 5);
        let cross: Vec<(usize, usize, String)> = wfa
            .cross_edges()
            .map(|(s, t, w)| (s, t, w.to_string()))
            .collect();
        assert_eq!(
            cross,
            vec![
                (5, 1, "1".to_string()),
                (5, 2, "-1".to_string()),
                (6, 2, "1".to_string()),
                (6, 3, "-1".to_string()),
            ]
        );
        wfa.check_row_sums().unwrap();
        assert_eq!(wfa.num_transitions(), 18);
        for s in 5..10 {
            assert_eq!(wfa.reward(s), &ratio(0, 1));
        }
    }

    #[test]
    fn derivative_wrt_unused_parameter_has_no_cross_edges() {
        let raw = running_example_raw();
        let ps = ParameterSet::new(["p", "q"]).unwrap();
        let lift = |w: &Polynomial| {
            Polynomial::from_terms(&ps, w.terms().map(|(m, c)| (m.clone(), c.clone()))).unwrap()
        };
        let rows = raw
            .rows
            .iter()
            .map(|r| r.iter().map(|(t, w)| (*t, lift(w))).collect())
            .collect();
        let pmc = Pmc::new(
            ps.clone(),
            raw.names.clone(),
            0,
            4,
            None,
            rows,
            raw.rewards.clone(),
        )
        .unwrap();
        let wfa = pmc.derived_automaton_named("q").unwrap();
        assert_eq!(wfa.cross_edges().count(), 0);
        assert!(pmc.derived_automaton_named("r").is_err());
    }
}
