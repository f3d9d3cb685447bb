//! Optimization near non-isolated minima.
//!
//! `singopt` collects the pieces needed to study local convergence of
//! second-order methods when the minimizers of a cost function form a
//! continuum rather than isolated points:
//!
//! - [`geometry`]: Euclidean space and the unit sphere, with exponential and
//!   logarithm maps, retractions and parallel transport.
//! - [`problems`]: a catalog of benchmark costs (the circle, the Newton trap,
//!   over-parameterized regression, Burer–Monteiro factorization, C¹
//!   counterexamples, ...) with analytic derivatives and solution-set oracles.
//! - [`conditions`]: sampled estimators for the Polyak–Łojasiewicz, error
//!   bound, quadratic growth and Łojasiewicz inequalities, a Morse–Bott
//!   structure checker, and an implication-graph cross-check.
//! - [`subsolvers`]: Newton (pseudo-inverse), Cauchy, exact trust-region,
//!   truncated CG and cubic-regularized subproblem solvers.
//! - [`solvers`]: gradient descent, Newton, adaptive cubic regularization
//!   (ARC) and Riemannian trust-region (RTR) outer loops emitting a [`Trace`].
//! - [`analysis`]: convergence-order fitting, decrease constants and path
//!   length bounds computed from traces.
//! - [`experiment`]: TOML-configured batch runs writing CSV traces and a JSON
//!   summary, used by the `singopt` binary.
//!
//! ```
//! use singopt::problems::{build_problem, ProblemSpec};
//! use singopt::solvers::{run_arc, ArcConfig, StopCriteria};
//! use nalgebra::DVector;
//!
//! let p = build_problem(&ProblemSpec::Circle).unwrap();
//! let x0 = DVector::from_vec(vec![1.3, 0.4]);
//! let trace = run_arc(&p, &x0, &ArcConfig::default(), &StopCriteria::default()).unwrap();
//! let r = trace.final_point.norm();
//! assert!((r - 1.0).abs() < 1e-10);
//! ```

pub mod analysis;
pub mod conditions;
mod error;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod problems;
pub mod solvers;
pub mod subsolvers;

pub use error::{Error, Result};
pub use geometry::{Manifold, Point, Tangent};
pub use problems::{Problem, ProblemSpec};
pub use solvers::{SolverConfig, Termination, Trace};
