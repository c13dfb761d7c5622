//! Differentiable objectives: expected rewards of a pMC and their exact
//! partial derivatives.
//!
//! The derivative of `x = (I - A)^{-1} rew` with respect to `p` solves
//! `(I - A) dx = (dA/dp) x`, so a gradient over a parameter subset costs
//! one linear solve per parameter plus the shared value solve.

use serde::{Deserialize, Serialize};

use crate::linsolve::{Backend, SolveError, SolverOptions, SparseSystem};
use crate::model::{CompiledChain, ModelError, Pmc, Region};
use crate::polynomial::{CompiledPoly, Polynomial};
use crate::textio::{MeasureKind, PropertyQuery};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("finite-difference step {h} around {value} leaves the region for `{param}`")]
    StepOutsideRegion { param: String, value: f64, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    pub fn of(query: &PropertyQuery) -> Self {
        if query.cmp.is_lower_bound() {
            Direction::Maximize
        } else {
            Direction::Minimize
        }
    }

    /// Converts between the measured value and the value the search
    /// maximizes; the map is its own inverse.
    pub fn orient(self, v: f64) -> f64 {
        match self {
            Direction::Maximize => v,
            Direction::Minimize => -v,
        }
    }
}

/// What the search engine sees: a function to maximize and its gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Engine-facing value, already oriented so that larger is better.
    fn value(&mut self, u: &[f64]) -> Result<f64, ObjectiveError>;

    /// Partial derivatives of [`Objective::value`] for the given parameter
    /// indices, in the same order.
    fn gradient(&mut self, u: &[f64], subset: &[usize]) -> Result<Vec<f64>, ObjectiveError>;

    fn direction(&self) -> Direction {
        Direction::Maximize
    }

    /// The measured quantity at `u`, before orientation.
    fn raw_value(&mut self, u: &[f64]) -> Result<f64, ObjectiveError> {
        let v = self.value(u)?;
        Ok(self.direction().orient(v))
    }

    /// Linear solves performed so far.
    fn solves(&self) -> SolveCounts {
        SolveCounts::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveCounts {
    /// Solves of `(I - A) x = rew`.
    pub value: usize,
    /// One per parameter per gradient request.
    pub gradient: usize,
}

impl SolveCounts {
    pub fn total(&self) -> usize {
        self.value + self.gradient
    }
}

struct Cached {
    u: Vec<f64>,
    system: SparseSystem,
    x: Vec<f64>,
}

/// Expected reward (or reachability probability) of a pMC as an objective.
pub struct PmcObjective {
    pmc: Pmc,
    region: Region,
    compiled: CompiledChain,
    /// Nonzero entries of `dP/dp` for each parameter.
    derivatives: Vec<Vec<(usize, usize, CompiledPoly)>>,
    direction: Direction,
    opts: SolverOptions,
    cache: Option<Cached>,
    solves: SolveCounts,
}

impl PmcObjective {
    /// Objective maximizing the expected reward of `pmc`, which must reach
    /// its target almost surely.
    pub fn new(pmc: Pmc, region: Region, opts: SolverOptions) -> Result<Self, ObjectiveError> {
        pmc.ensure_almost_sure_target()?;
        if **region.params() != **pmc.params() {
            return Err(ModelError::RegionMismatch.into());
        }
        let derivatives = (0..pmc.params().len())
            .map(|p| {
                let mut out = Vec::new();
                for s in 0..pmc.num_states() {
                    for (t, w) in pmc.row(s) {
                        let d = w.derivative(p).map_err(ModelError::from)?;
                        if !d.is_zero() {
                            out.push((s, *t, d.compile()));
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, ObjectiveError>>()?;
        Ok(PmcObjective {
            compiled: pmc.compile(),
            pmc,
            region,
            derivatives,
            direction: Direction::Maximize,
            opts,
            cache: None,
            solves: SolveCounts::default(),
        })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn pmc(&self) -> &Pmc {
        &self.pmc
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    fn ensure_solved(&mut self, u: &[f64]) -> Result<&Cached, ObjectiveError> {
        if self.cache.as_ref().is_none_or(|c| c.u != u) {
            self.cache = None;
            self.region.check_contains(u)?;
            let chain = self.compiled.instantiate(u, self.pmc.names(), true)?;
            let system = SparseSystem::assemble(&chain);
            let x = with_fallback(&self.opts, |o| system.solve(system.rewards(), o))?;
            self.solves.value += 1;
            self.cache = Some(Cached {
                u: u.to_vec(),
                system,
                x,
            });
        }
        Ok(self.cache.as_ref().expect("just filled"))
    }

    /// Expected reward from every state at `u`, indexed by chain state.
    pub fn state_values(&mut self, u: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let n = self.pmc.num_states();
        let c = self.ensure_solved(u)?;
        Ok((0..n).map(|s| c.system.value_at(&c.x, s)).collect())
    }

    /// Unoriented gradient of the measured quantity.
    pub fn raw_gradient(
        &mut self,
        u: &[f64],
        subset: &[usize],
    ) -> Result<Vec<f64>, ObjectiveError> {
        if let Some(&p) = subset.iter().find(|&&p| p >= self.derivatives.len()) {
            return Err(ModelError::from(crate::polynomial::PolyError::ParameterIndex(p)).into());
        }
        let initial = self.pmc.initial();
        let opts = self.opts;
        self.ensure_solved(u)?;
        let c = self.cache.as_ref().expect("solved above");
        let rhs: Vec<Vec<f64>> = subset
            .iter()
            .map(|&p| {
                let mut b = vec![0.0; c.system.dim()];
                for (s, t, d) in &self.derivatives[p] {
                    if let Some(i) = c.system.row_of(*s) {
                        b[i] += d.eval(u) * c.system.value_at(&c.x, *t);
                    }
                }
                b
            })
            .collect();
        let sols = with_fallback(&opts, |o| c.system.solve_multi(&rhs, o))?;
        self.solves.gradient += sols.len();
        let c = self.cache.as_ref().expect("solved above");
        Ok(sols
            .iter()
            .map(|dx| c.system.value_at(dx, initial))
            .collect())
    }
}

impl Objective for PmcObjective {
    fn dim(&self) -> usize {
        self.region.dim()
    }

    fn value(&mut self, u: &[f64]) -> Result<f64, ObjectiveError> {
        let initial = self.pmc.initial();
        let c = self.ensure_solved(u)?;
        let v = c.system.value_at(&c.x, initial);
        Ok(self.direction.orient(v))
    }

    fn gradient(&mut self, u: &[f64], subset: &[usize]) -> Result<Vec<f64>, ObjectiveError> {
        let d = self.direction;
        Ok(self
            .raw_gradient(u, subset)?
            .into_iter()
            .map(|g| d.orient(g))
            .collect())
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn solves(&self) -> SolveCounts {
        self.solves
    }
}

/// Runs `solve`, retrying with the direct backend when the iterative solver
/// stalls; near the region boundary the systems become ill-conditioned.
fn with_fallback<T>(
    opts: &SolverOptions,
    solve: impl Fn(&SolverOptions) -> Result<T, SolveError>,
) -> Result<T, SolveError> {
    match solve(opts) {
        Err(SolveError::NonConvergence { .. })
            if opts.fallback && opts.backend != Backend::Direct =>
        {
            solve(&SolverOptions {
                backend: Backend::Direct,
                ..*opts
            })
        }
        other => other,
    }
}

/// Builds the objective for a property query: reachability queries go
/// through the reward transformation, and `<`/`<=` queries minimize.
pub fn make_pmc_objective(
    pmc: &Pmc,
    query: &PropertyQuery,
    region: &Region,
    opts: SolverOptions,
) -> Result<PmcObjective, ObjectiveError> {
    let model = match query.kind {
        MeasureKind::Reachability => pmc.reachability_to_reward(),
        MeasureKind::ExpectedReward => pmc.clone(),
    };
    Ok(PmcObjective::new(model, region.clone(), opts)?.with_direction(Direction::of(query)))
}

/// Expected reward from the initial state at `u`.
pub fn expected_reward(
    pmc: &Pmc,
    u: &[f64],
    region: &Region,
    opts: &SolverOptions,
) -> Result<f64, ObjectiveError> {
    PmcObjective::new(pmc.clone(), region.clone(), *opts)?.value(u)
}

/// Exact partial derivatives of the expected reward for `subset`.
pub fn gradient_eqsys(
    pmc: &Pmc,
    u: &[f64],
    region: &Region,
    subset: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<f64>, ObjectiveError> {
    PmcObjective::new(pmc.clone(), region.clone(), *opts)?.raw_gradient(u, subset)
}

/// Partial derivative as the expected reward of the derived automaton,
/// computed on its `2|S|`-state linear system.
pub fn gradient_via_derived(
    pmc: &Pmc,
    p: usize,
    u: &[f64],
    region: &Region,
    opts: &SolverOptions,
) -> Result<f64, ObjectiveError> {
    pmc.ensure_almost_sure_target()?;
    region.check_contains(u)?;
    // Graph preservation of the original model, then the weighted rows.
    pmc.compile().instantiate(u, pmc.names(), true)?;
    let wfa = pmc.derived_automaton(p)?;
    let chain = wfa.compile().instantiate(u, wfa.names(), false)?;
    let system = SparseSystem::assemble(&chain);
    let x = with_fallback(opts, |o| system.solve(system.rewards(), o))?;
    Ok(system.value_at(&x, wfa.initial()))
}

/// Central difference `(f(u + h e_p) - f(u - h e_p)) / 2h` of the
/// engine-facing value.
pub fn finite_difference<O: Objective + ?Sized>(
    obj: &mut O,
    u: &[f64],
    p: usize,
    h: f64,
    region: &Region,
) -> Result<f64, ObjectiveError> {
    let iv = region.interval(p);
    if !(iv.contains(u[p] - h) && iv.contains(u[p] + h)) {
        return Err(ObjectiveError::StepOutsideRegion {
            param: region.params().name(p).to_string(),
            value: u[p],
            h,
        });
    }
    let mut v = u.to_vec();
    v[p] = u[p] + h;
    let hi = obj.value(&v)?;
    v[p] = u[p] - h;
    let lo = obj.value(&v)?;
    Ok((hi - lo) / (2.0 * h))
}

/// A polynomial in the parameters as an objective, maximized as is.
pub struct PolynomialObjective {
    f: CompiledPoly,
    grad: Vec<CompiledPoly>,
    direction: Direction,
}

impl PolynomialObjective {
    pub fn new(f: &Polynomial) -> Self {
        let grad = (0..f.params().len())
            .map(|i| f.derivative(i).expect("index in range").compile())
            .collect();
        PolynomialObjective {
            f: f.compile(),
            grad,
            direction: Direction::Maximize,
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

impl Objective for PolynomialObjective {
    fn dim(&self) -> usize {
        self.grad.len()
    }

    fn value(&mut self, u: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(self.direction.orient(self.f.eval(u)))
    }

    fn gradient(&mut self, u: &[f64], subset: &[usize]) -> Result<Vec<f64>, ObjectiveError> {
        Ok(subset
            .iter()
            .map(|&i| self.direction.orient(self.grad[i].eval(u)))
            .collect())
    }

    fn direction(&self) -> Direction {
        self.direction
    }
}
