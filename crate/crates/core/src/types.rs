//! Domain types for discrete optimal transport.
//!
//! Constructors validate the type invariants and hand back `OtError::Invalid`
//! on violation; once built, values are immutable and safe to share.

use crate::error::{OtError, Result};
use crate::numeric::l1_diff;

/// Absolute tolerance on Σ weights = 1 for [`Histogram`].
pub const HISTOGRAM_SUM_TOL: f64 = 1e-12;

/// Per-marginal ℓ1 tolerance of the feasibility predicate.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Probability vector on n atoms (a marginal r or c).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    weights: Vec<f64>,
}

impl Histogram {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(OtError::invalid("histogram", "no atoms"));
        }
        if let Some((i, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(OtError::invalid(
                "histogram",
                format!("entry {i} is {w}; entries must be finite and >= 0"),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > HISTOGRAM_SUM_TOL {
            return Err(OtError::invalid(
                "histogram",
                format!("weights sum to {sum}, expected 1 within {HISTOGRAM_SUM_TOL:e}"),
            ));
        }
        Ok(Histogram { weights })
    }

    /// Uniform distribution on n atoms.
    pub fn uniform(n: usize) -> Self {
        Histogram {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes an arbitrary nonnegative mass vector with positive total.
    pub fn normalized(mut mass: Vec<f64>) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(OtError::invalid(
                "histogram",
                format!("total mass {total} is not positive and finite"),
            ));
        }
        for w in &mut mass {
            *w /= total;
        }
        Histogram::new(mass)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Smallest entry (used by the dual bound R).
    pub fn min_entry(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Nonnegative n×n cost matrix with its max entry cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: Vec<f64>, // row-major
    n: usize,
    max_abs: f64,
}

impl CostMatrix {
    /// Builds from a row-major flat vector of length n².
    pub fn new(entries: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(OtError::DimensionMismatch(format!(
                "cost matrix: got {} entries for n = {n}",
                entries.len()
            )));
        }
        let mut max_abs = 0.0f64;
        for (k, &c) in entries.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(OtError::invalid(
                    "cost matrix",
                    format!(
                        "entry ({}, {}) is {c}; must be finite and >= 0",
                        k / n,
                        k % n
                    ),
                ));
            }
            max_abs = max_abs.max(c);
        }
        Ok(CostMatrix {
            entries,
            n,
            max_abs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(OtError::DimensionMismatch(
                "cost matrix is not square".into(),
            ));
        }
        CostMatrix::new(rows.concat(), n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cached ‖C‖_∞ (max entry; all entries are nonnegative).
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }
}

/// Dual pair (u, v) of the scaled potentials, or stacked λ = (α, β).
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl DualPotentials {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() || u.is_empty() {
            return Err(OtError::DimensionMismatch(format!(
                "dual potentials: |u| = {}, |v| = {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(OtError::invalid("dual potentials", "non-finite entry"));
        }
        Ok(DualPotentials { u, v })
    }

    pub fn zeros(n: usize) -> Self {
        DualPotentials {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// Splits a stacked 2n-vector (α; β).
    pub fn from_stacked(lambda: &[f64]) -> Result<Self> {
        if !lambda.len().is_multiple_of(2) {
            return Err(OtError::DimensionMismatch(format!(
                "stacked duals must have even length, got {}",
                lambda.len()
            )));
        }
        let n = lambda.len() / 2;
        DualPotentials::new(lambda[..n].to_vec(), lambda[n..].to_vec())
    }

    pub fn to_stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.u.len());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.v);
        out
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }
}

/// Nonnegative n×n transport plan (mass units).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    entries: Vec<f64>, // row-major
    n: usize,
}

impl TransportPlan {
    pub fn new(entries: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(OtError::DimensionMismatch(format!(
                "transport plan: got {} entries for n = {n}",
                entries.len()
            )));
        }
        if let Some((k, &x)) = entries
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0)
        {
            return Err(OtError::invalid(
                "transport plan",
                format!(
                    "entry ({}, {}) is {x}; must be finite and >= 0",
                    k / n,
                    k % n
                ),
            ));
        }
        Ok(TransportPlan { entries, n })
    }

    pub fn zeros(n: usize) -> Self {
        TransportPlan {
            entries: vec![0.0; n * n],
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| self.entries[i * n..(i + 1) * n].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.n;
        let mut sums = vec![0.0; n];
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            for (s, &x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        sums
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// ⟨C, X⟩.
    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        debug_assert_eq!(self.n, cost.n());
        self.entries
            .iter()
            .zip(cost.as_slice())
            .map(|(x, c)| x * c)
            .sum()
    }

    /// Row and column sums each match the marginals within `tol` in ℓ1.
    pub fn is_feasible_for(&self, r: &Histogram, c: &Histogram, tol: f64) -> bool {
        if r.len() != self.n || c.len() != self.n {
            return false;
        }
        l1_diff(&self.row_sums(), r.weights()) <= tol
            && l1_diff(&self.col_sums(), c.weights()) <= tol
    }

    /// Entrywise ℓ1 distance to another plan of the same size.
    pub fn l1_distance(&self, other: &TransportPlan) -> f64 {
        debug_assert_eq!(self.n, other.n);
        l1_diff(&self.entries, &other.entries)
    }
}

/// Entropic-regularized OT instance: cost, marginals and η > 0.
#[derive(Debug, Clone)]
pub struct RegularizedInstance {
    pub cost: CostMatrix,
    pub row_marginal: Histogram,
    pub col_marginal: Histogram,
    pub eta: f64,
}

impl RegularizedInstance {
    pub fn new(
        cost: CostMatrix,
        row_marginal: Histogram,
        col_marginal: Histogram,
        eta: f64,
    ) -> Result<Self> {
        if row_marginal.len() != cost.n() || col_marginal.len() != cost.n() {
            return Err(OtError::DimensionMismatch(format!(
                "instance: cost is {0}x{0} but marginals have {1} and {2} atoms",
                cost.n(),
                row_marginal.len(),
                col_marginal.len()
            )));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(OtError::invalid(
                "regularized instance",
                format!("eta = {eta}, must be positive and finite"),
            ));
        }
        Ok(RegularizedInstance {
            cost,
            row_marginal,
            col_marginal,
            eta,
        })
    }

    pub fn n(&self) -> usize {
        self.cost.n()
    }
}

/// The marginal constraint map A: vec(X) ↦ (X·1; Xᵀ·1) and its target b.
///
/// A is never materialized; each column of the implied 2n×n² matrix has two
/// unit entries, so ‖A‖_{1→1} = 2.
#[derive(Debug, Clone)]
pub struct ConstraintOperator {
    b: Vec<f64>, // (r; c)
    n: usize,
}

impl ConstraintOperator {
    pub const NORM_1TO1: f64 = 2.0;

    pub fn for_marginals(r: &Histogram, c: &Histogram) -> Result<Self> {
        if r.len() != c.len() {
            return Err(OtError::DimensionMismatch(format!(
                "constraint operator: |r| = {}, |c| = {}",
                r.len(),
                c.len()
            )));
        }
        let mut b = Vec::with_capacity(2 * r.len());
        b.extend_from_slice(r.weights());
        b.extend_from_slice(c.weights());
        Ok(ConstraintOperator { b, n: r.len() })
    }

    pub fn for_instance(inst: &RegularizedInstance) -> Self {
        // marginal lengths already validated by the instance
        ConstraintOperator::for_marginals(&inst.row_marginal, &inst.col_marginal).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Target vector b = (r; c).
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// A·x for a row-major flattened n×n matrix x: stacked row sums then column sums.
    pub fn apply_flat(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(x.len(), n * n);
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let row = &x[i * n..(i + 1) * n];
            out[i] = row.iter().sum();
            for (j, &v) in row.iter().enumerate() {
                out[n + j] += v;
            }
        }
        out
    }

    pub fn apply(&self, plan: &TransportPlan) -> Vec<f64> {
        self.apply_flat(plan.as_slice())
    }

    /// b − A·x, the marginal defect of a flattened plan.
    pub fn residual_flat(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.apply_flat(x);
        ax.iter().zip(&self.b).map(|(a, b)| b - a).collect()
    }
}
