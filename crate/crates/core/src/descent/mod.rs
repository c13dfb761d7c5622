//! First-order feasibility search over a parameter region.
//!
//! The engine always ascends: objectives for `<`/`<=` queries are negated
//! before they reach it. Parameters are updated in round-robin mini-batches;
//! a run restarts from a random point once every parameter's last step
//! falls below `delta_stop`.

mod restriction;
mod update;

pub use restriction::{
    barrier_derivative, barrier_term, in_open, BarrierObjective, Logistic, Restriction,
};
pub use update::{apply_sign, batch_indices, Method, OptimizerState};

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gradient::{Direction, Objective, ObjectiveError};
use crate::model::Region;
use crate::textio::{Comparator, PropertyQuery};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DescentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub method: Method,
    /// Replace gradients by their signs (plain, momentum and NAG only).
    pub sign: bool,
    pub restriction: Restriction,
    pub lr: f64,
    /// Average decay; also Adam's first-moment decay.
    pub gamma: f64,
    /// Squared-average decay.
    pub beta: f64,
    /// Division guard for adaptive methods.
    pub eps: f64,
    pub batch_size: usize,
    pub delta_stop: f64,
    pub comparator: Comparator,
    pub bound: f64,
    pub mu0: f64,
    /// The barrier weight is divided by this factor at each local optimum.
    pub mu_factor: f64,
    pub mu_floor: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    pub logistic_compat: bool,
    /// Initial point; defaults to the region's start point.
    pub start: Option<Vec<f64>>,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            method: Method::Momentum,
            sign: true,
            restriction: Restriction::Projection,
            lr: 0.1,
            gamma: 0.9,
            beta: 0.999,
            eps: 1e-8,
            batch_size: 32,
            delta_stop: 1e-6,
            comparator: Comparator::Ge,
            bound: 0.0,
            mu0: 0.1,
            mu_factor: 10.0,
            mu_floor: 1e-6,
            seed: 0,
            max_iterations: 10_000,
            time_limit: None,
            logistic_compat: false,
            start: None,
        }
    }
}

impl DescentConfig {
    pub fn for_query(query: &PropertyQuery) -> Self {
        DescentConfig {
            comparator: query.cmp,
            bound: query.bound,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), DescentError> {
        let bad = |m: &str| Err(DescentError::Config(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1)");
        }
        if self.eps.is_nan() || self.eps < 0.0 {
            return bad("eps must be nonnegative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.delta_stop.is_nan() || self.delta_stop <= 0.0 {
            return bad("delta_stop must be positive");
        }
        if self.sign && !self.method.supports_sign() {
            return bad("sign updates only apply to plain, momentum and nag");
        }
        if self.restriction == Restriction::Barrier
            && !(self.mu0 > 0.0
                && self.mu_floor > 0.0
                && self.mu_floor <= self.mu0
                && self.mu_factor > 1.0)
        {
            return bad("barrier schedule needs 0 < mu_floor <= mu0 and factor > 1");
        }
        if !self.bound.is_finite() {
            return bad("bound must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Feasible,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: Status,
    /// The feasible point, or the best point seen when exhausted.
    pub u_found: Vec<f64>,
    /// Measured value at `u_found`, in the query's own orientation.
    pub value: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub value_solves: usize,
    pub gradient_solves: usize,
    /// Seconds spent in the search loop.
    pub wall_time: f64,
    /// Barrier weight in effect when the run ended.
    pub final_mu: Option<f64>,
}

/// Outcome of a single update step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Moved,
    /// A barrier step landed on or outside a wall.
    LeftRegion,
}

/// Step-level driver: optimizer state, restriction and restart stream.
pub struct Search<'r> {
    cfg: DescentConfig,
    region: &'r Region,
    logistic: Vec<Logistic>,
    pub state: OptimizerState,
    pub mu: f64,
    rng: ChaCha8Rng,
}

impl<'r> Search<'r> {
    pub fn new(cfg: &DescentConfig, region: &'r Region) -> Result<Self, DescentError> {
        cfg.validate()?;
        let n = region.dim();
        let start = match &cfg.start {
            Some(s) if s.len() != n => {
                return Err(DescentError::Config(format!(
                    "start point has {} coordinates, region has {n}",
                    s.len()
                )))
            }
            Some(s) if !region.contains(s) => {
                return Err(DescentError::Config(
                    "start point outside the region".into(),
                ))
            }
            Some(s) => s.clone(),
            None => region.start_point(),
        };
        let logistic = region
            .bounds()
            .iter()
            .map(|&iv| Logistic {
                iv,
                compat: cfg.logistic_compat,
            })
            .collect();
        let mut search = Search {
            cfg: cfg.clone(),
            region,
            logistic,
            state: OptimizerState::new(Vec::new()),
            mu: cfg.mu0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        };
        search.state = OptimizerState::new(search.to_search_coords(start));
        Ok(search)
    }

    pub fn config(&self) -> &DescentConfig {
        &self.cfg
    }

    fn to_search_coords(&self, mut u: Vec<f64>) -> Vec<f64> {
        match self.cfg.restriction {
            Restriction::Logistic => {
                for (x, l) in u.iter_mut().zip(&self.logistic) {
                    *x = l.to_q(*x);
                }
            }
            Restriction::Barrier => {
                for (x, iv) in u.iter_mut().zip(self.region.bounds()) {
                    *x = pull_inside(iv, *x);
                }
            }
            Restriction::Projection => {}
        }
        u
    }

    fn to_region(&self, x: &[f64]) -> Vec<f64> {
        match self.cfg.restriction {
            Restriction::Logistic => x
                .iter()
                .zip(&self.logistic)
                .map(|(&q, l)| l.to_u(q))
                .collect(),
            _ => x.to_vec(),
        }
    }

    /// Current point in region coordinates.
    pub fn point(&self) -> Vec<f64> {
        self.to_region(&self.state.x)
    }

    /// Gradient in search coordinates for the batch at search point `x`.
    fn search_gradient<O: Objective + ?Sized>(
        &self,
        obj: &mut O,
        x: &[f64],
        batch: &[usize],
    ) -> Result<Vec<f64>, ObjectiveError> {
        let u = self.to_region(x);
        match self.cfg.restriction {
            Restriction::Projection => obj.gradient(&u, batch),
            Restriction::Barrier => BarrierObjective {
                inner: obj,
                region: self.region,
                mu: self.mu,
            }
            .gradient(&u, batch),
            Restriction::Logistic => {
                let g = obj.gradient(&u, batch)?;
                Ok(batch
                    .iter()
                    .zip(g)
                    .map(|(&i, gi)| gi * self.logistic[i].gradient_factor(x[i]))
                    .collect())
            }
        }
    }

    /// One update of the current batch.
    pub fn step<O: Objective + ?Sized>(
        &mut self,
        obj: &mut O,
    ) -> Result<StepOutcome, ObjectiveError> {
        let n = self.state.x.len();
        let batch = batch_indices(self.state.t, n, self.cfg.batch_size);
        let mut grads = if self.cfg.method == Method::Nag {
            let mut look = self.state.x.clone();
            for &i in &batch {
                look[i] += self.cfg.gamma * self.state.v[i];
                let iv = self.region.interval(i);
                look[i] = match self.cfg.restriction {
                    Restriction::Projection => iv.clamp(look[i]),
                    Restriction::Barrier => pull_inside(&iv, look[i]),
                    Restriction::Logistic => look[i],
                };
            }
            self.search_gradient(obj, &look, &batch)?
        } else {
            self.search_gradient(obj, &self.state.x.clone(), &batch)?
        };
        if self.cfg.sign {
            apply_sign(&mut grads);
        }
        let old: Vec<f64> = batch.iter().map(|&i| self.state.x[i]).collect();
        for (&i, &g) in batch.iter().zip(&grads) {
            let d = self.state.delta(i, g, &self.cfg);
            self.state.x[i] += d;
        }
        let mut outcome = StepOutcome::Moved;
        for &i in &batch {
            let iv = self.region.interval(i);
            match self.cfg.restriction {
                Restriction::Projection => {
                    let clamped = iv.clamp(self.state.x[i]);
                    if clamped != self.state.x[i] {
                        self.state.x[i] = clamped;
                        self.state.forget(i);
                    }
                }
                Restriction::Barrier => {
                    if !in_open(&iv, self.state.x[i]) {
                        outcome = StepOutcome::LeftRegion;
                    }
                }
                Restriction::Logistic => {}
            }
        }
        for (&i, o) in batch.iter().zip(old) {
            self.state.last_step[i] = Some((self.state.x[i] - o).abs());
        }
        self.state.t += 1;
        Ok(outcome)
    }

    pub fn local_optimum(&self) -> bool {
        self.state.local_optimum(self.cfg.delta_stop)
    }

    /// Fresh uniform point and cleared optimizer memory.
    pub fn restart(&mut self) {
        let u = self.region.sample(&mut self.rng);
        let x = self.to_search_coords(u);
        self.state.reset(x);
        self.state.restarts += 1;
        self.mu = self.cfg.mu0;
    }
}

/// Moves a point onto the open interval, a hair away from the walls.
fn pull_inside(iv: &crate::model::Interval, x: f64) -> f64 {
    let pad = 1e-9 * iv.width();
    x.max(iv.lb + pad).min(iv.ub - pad)
}

/// Searches the region for a point where the objective's measured value
/// satisfies `cfg.comparator` against `cfg.bound`.
pub fn feasibility_search<O: Objective + ?Sized>(
    obj: &mut O,
    region: &Region,
    cfg: &DescentConfig,
) -> Result<RunResult, DescentError> {
    if obj.dim() != region.dim() {
        return Err(DescentError::Config(format!(
            "objective has {} parameters, region has {}",
            obj.dim(),
            region.dim()
        )));
    }
    let wanted = if cfg.comparator.is_lower_bound() {
        Direction::Maximize
    } else {
        Direction::Minimize
    };
    if obj.direction() != wanted {
        return Err(DescentError::Config(format!(
            "comparator `{}` does not match the objective direction",
            cfg.comparator.symbol()
        )));
    }
    let started = Instant::now();
    let base = obj.solves();
    let mut search = Search::new(cfg, region)?;
    let barrier = cfg.restriction == Restriction::Barrier;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let status = loop {
        let u = search.point();
        let engine = obj.value(&u)?;
        if best.as_ref().is_none_or(|(b, _)| engine > *b) {
            best = Some((engine, u.clone()));
        }
        if cfg
            .comparator
            .holds(obj.direction().orient(engine), cfg.bound)
        {
            best = Some((engine, u));
            break Status::Feasible;
        }
        let out_of_time = cfg.time_limit.is_some_and(|l| started.elapsed() >= l);
        if iterations >= cfg.max_iterations || out_of_time || region.dim() == 0 {
            break Status::Exhausted;
        }
        if search.local_optimum() {
            if barrier && search.mu > cfg.mu_floor * (1.0 + 1e-9) {
                search.mu = (search.mu / cfg.mu_factor).max(cfg.mu_floor);
                let x = search.state.x.clone();
                search.state.reset(x);
            } else {
                search.restart();
            }
            continue;
        }
        iterations += 1;
        if search.step(obj)? == StepOutcome::LeftRegion {
            search.restart();
        }
    };
    let (engine, u_found) = best.expect("at least one evaluation");
    let solves = obj.solves();
    Ok(RunResult {
        status,
        value: obj.direction().orient(engine),
        u_found,
        iterations,
        restarts: search.state.restarts,
        value_solves: solves.value - base.value,
        gradient_solves: solves.gradient - base.gradient,
        wall_time: started.elapsed().as_secs_f64(),
        final_mu: barrier.then_some(search.mu),
    })
}
