//! The four iterative solvers and the ε-approximation wrappers.

mod accel;
mod approx;
mod greenkhorn;
mod sinkhorn;

pub use accel::{
    apdagd, apdagd_with_budget, apdamd, apdamd_with_budget, MirrorMap, PrimalDualSolution,
    ScaledSqEuclidean,
};
pub use approx::{approx_ot, approx_ot_custom, approx_ot_with_budget, ApproxResult, Method};
pub use greenkhorn::{greenkhorn, greenkhorn_with_budget};
pub use sinkhorn::{sinkhorn, sinkhorn_with_budget};

pub(crate) use sinkhorn::sinkhorn_quiet;

use crate::error::{OtError, Result};
use crate::types::RegularizedInstance;

/// Safeguard for coordinate solvers (Sinkhorn sweeps, Greenkhorn steps).
pub const DEFAULT_MAX_COORD_ITERS: usize = 1_000_000;

/// Safeguard for the accelerated solvers' outer iterations.
pub const DEFAULT_MAX_ACCEL_ITERS: usize = 100_000;

/// Terminal state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIterations => "max-iterations",
            SolverStatus::NumericalFailure => "numerical-failure",
        }
    }
}

/// One per-iteration diagnostic row.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub iter: usize,
    /// E_t for the Sinkhorn family, ‖Ax − b‖₁ for the accelerated solvers.
    pub residual: f64,
    pub dual_value: f64,
    /// Line-search doublings this iteration (0 for Sinkhorn/Greenkhorn).
    pub ls_doublings: u32,
    /// Cumulative gradient-oracle calls (0 for Sinkhorn/Greenkhorn).
    pub oracle_calls: u64,
    /// Accepted line-search constant M^t (0 for Sinkhorn/Greenkhorn).
    pub ls_m: f64,
    /// Stepsize accumulator ᾱ^t after this iteration (0 for Sinkhorn/Greenkhorn).
    pub accum: f64,
    /// Seconds since the solver started.
    pub elapsed: f64,
}

/// Per-iteration diagnostics plus the terminal status.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub status: SolverStatus,
}

impl SolverTrace {
    pub(crate) fn new() -> Self {
        SolverTrace {
            records: Vec::new(),
            status: SolverStatus::MaxIterations,
        }
    }

    pub(crate) fn push(&mut self, rec: TraceRecord) {
        if let Some(last) = self.records.last() {
            debug_assert!(rec.iter > last.iter, "iteration indices must increase");
            debug_assert!(rec.oracle_calls >= last.oracle_calls);
            debug_assert!(rec.elapsed >= last.elapsed);
        }
        self.records.push(rec);
    }

    /// Number of iterations the solver performed.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }

    pub fn oracle_calls(&self) -> u64 {
        self.records.last().map_or(0, |r| r.oracle_calls)
    }

    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }
}

pub(crate) fn require_positive_marginals(inst: &RegularizedInstance) -> Result<()> {
    if inst.row_marginal.min_entry() <= 0.0 || inst.col_marginal.min_entry() <= 0.0 {
        return Err(OtError::Domain(
            "marginals must be strictly positive; reweight first".into(),
        ));
    }
    Ok(())
}
