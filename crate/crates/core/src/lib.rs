//! Numerics for degenerate fully nonlinear elliptic equations
//! `H(X, grad u) F(X, D^2 u) = f` on uniform grids: operators, closed-form
//! solutions, a relaxation solver, regularity measurement and rescaling.

pub mod error;
mod fit;
pub mod grid;
pub mod operators;
pub mod oracle;
pub mod regularity;
pub mod scaling;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{make_grid, sample, sup_norm_on_ball, AffineFn, Grid, Jet, Point, ScalarField, SymMat};
pub use operators::{DegeneracySpec, OperatorSpec, ScalarFn};
pub use solver::{solve_dirichlet, solve_ode_bvp, ProblemSpec, SolveConfig, SolveDiagnostics};
