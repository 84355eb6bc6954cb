//! Entropic-regularized optimal transport between discrete measures.
//!
//! Four solvers for the regularized problem — Sinkhorn, Greenkhorn, APDAMD
//! and APDAGD — plus the ε-approximation pipeline (reweight marginals, solve
//! to ε′/2, round onto the transportation polytope), an exact LP oracle at
//! desk scale, instance generators (synthetic square images, MNIST IDX
//! files), and a benchmark harness with CSV/JSON emission.
//!
//! ```
//! use ot_core::solvers::{approx_ot, Method};
//! use ot_core::types::{CostMatrix, Histogram};
//!
//! let cost = CostMatrix::new(vec![0.0, 1.0, 1.0, 0.0], 2).unwrap();
//! let r = Histogram::uniform(2);
//! let c = Histogram::uniform(2);
//! let res = approx_ot(&cost, &r, &c, 0.5, Method::Greenkhorn).unwrap();
//! assert!(res.plan.is_feasible_for(&r, &c, 1e-9));
//! assert!(res.cost <= 0.5); // the zero-cost diagonal is optimal
//! ```

// dense kernels index several parallel arrays; iterator-chain rewrites of
// these loops read worse
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod harness;
pub mod instances;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod rounding;
pub mod scaling;
pub mod semidual;
pub mod solvers;
pub mod types;

pub use error::{OtError, Result};
pub use solvers::{approx_ot, ApproxResult, Method, SolverStatus, SolverTrace};
pub use types::{
    ConstraintOperator, CostMatrix, DualPotentials, Histogram, RegularizedInstance, TransportPlan,
};
