//! Gradient-based feasibility synthesis for parametric Markov chains.
//!
//! The crate evaluates expected rewards of pMCs and their exact partial
//! derivatives through sparse linear systems, and searches a parameter
//! region for an instantiation meeting a bound using first-order update
//! methods.

pub mod descent;
pub mod gradient;
pub mod linsolve;
pub mod model;
pub mod polynomial;
pub mod textio;

pub use descent::{
    feasibility_search, DescentConfig, DescentError, Method, Restriction, RunResult, Status,
};
pub use gradient::{make_pmc_objective, Direction, Objective, ObjectiveError, PmcObjective};
pub use linsolve::{Backend, SolveError, SolverOptions};
pub use model::{
    generate_synthetic, preprocess, preprocess_for_reward, Chain, GeneratorSpec, Instantiation,
    Interval, ModelError, Pmc, RawModel, Region, WeightedAutomaton,
};
pub use polynomial::{ParameterSet, PolyError, Polynomial, Rational};
pub use textio::{
    parse_model, parse_property, parse_region, Comparator, MeasureKind, PropertyQuery, TextError,
};
