//! Numerical toolkit for positive solutions of `u'' + a(x) g(u) = 0`,
//! `u(0) = u(L) = 0`, with a sign-changing weight `a`.
//!
//! * [`problem`]: weights, nonlinearities, sign partitions and descriptors.
//! * [`ode`]: adaptive integration of the extended initial value problem.
//! * [`eigen`]: weighted first Dirichlet eigenvalues by the Prüfer angle.
//! * [`hypotheses`]: verdicts for the existence hypotheses.
//! * [`shooting`]: Poincaré-map sampling and the positive-solution finder.
//! * [`green`]: the Green-operator fixed-point residual.
//! * [`radial`]: the annulus reduction.
//! * [`families`]: config-describable weights and nonlinearities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod families;
pub mod green;
pub mod hypotheses;
pub mod ode;
pub mod problem;
pub mod radial;
mod rk;
pub mod shooting;

pub use eigen::{eigenfunction, first_eigenvalue, EigenError, EigenResult, WeightKind};
pub use green::{apply_operator, operator_residual, GreenKernel, GridFunction};
pub use hypotheses::{
    check_all, check_h3, check_h4, lambda_threshold_scan, CheckOptions, HypothesisReport, Verdict,
};
pub use ode::{integrate, IntegrateError, Outcome, StateSample, Trajectory};
pub use problem::{
    detect_sign_partition, Descriptors, Interval, Limit, NearZeroClass, Nonlinearity, ProblemSpec,
    SignPartition, Weight,
};
pub use radial::{reduce, solve_radial, RadialProblem, RadialSolution, TransformedProblem};
pub use shooting::{
    find_positive_solutions, sample_poincare, small_amplitude_scan, PoincarePoint, ShootError,
    ShootingOptions, SolutionProfile,
};
