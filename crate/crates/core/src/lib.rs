//! Samplers and estimators for integer lattice fibers
//! `F_A(b) = { x in Z^n, x >= 0 : Ax = b }`.
//!
//! A design matrix `A` maps a nonnegative integer table `x` to its vector of
//! sufficient statistics `Ax` (the margins of a log-linear model).  The fiber
//! of a margin vector `b` is the set of all tables with those margins.  This
//! crate samples fibers by random walks along move bases, estimates the
//! density of a scalar statistic over the fiber with a multilevel correction
//! scheme, and scores sample quality against reference samples.
//!
//! The pieces:
//!
//! - [`fiber`]: design matrices with checked integer arithmetic, sufficient
//!   statistics, feasibility, expected tables by iterative proportional
//!   fitting, and the Pearson chi-square statistic;
//! - [`moves`]: move bases (lattice kernel bases, generated Markov bases for
//!   the bundled models), validation, and file I/O;
//! - [`samplers`]: the weighted-step-size fiber walk and its inverted
//!   variant, the accept-all walk with scaled moves, per-level chain runs,
//!   and a Brownian walker over the real polytope of a fiber;
//! - [`multilevel`]: kernel density estimation on a uniform grid with
//!   coupled coarse-level corrections and Gaussian post-smoothing;
//! - [`metrics`]: energy-kernel squared maximum mean discrepancy and the
//!   Voronoi fiber coverage score;
//! - [`bench`]: bundled benchmark fibers plus exact enumeration, counting,
//!   and distribution oracles;
//! - [`textio`]: the plain-text matrix format shared by all tools.

pub mod bench;
pub mod error;
pub mod fiber;
pub mod metrics;
pub mod moves;
pub mod multilevel;
pub mod samplers;
pub mod seeding;
pub mod textio;

mod linalg;

pub use error::{FiberError, Result};
