//! Metrics, benchmark orchestration and result records.

mod emit;

pub use emit::{emit_outputs, records_csv, records_json, EmitFormat};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::instances::{build_instance, Instance, InstanceSpec};
use crate::oracle::{exact_ot, EXACT_SIZE_LIMIT};
use crate::rng::GENERATOR_NAME;
use crate::scaling::scaling_matrix;
use crate::solvers::{
    apdagd_with_budget, apdamd_with_budget, approx_ot_with_budget, greenkhorn_with_budget,
    sinkhorn_with_budget, Method, ScaledSqEuclidean, SolverTrace,
};
use crate::types::{ConstraintOperator, Histogram, RegularizedInstance, TransportPlan};

/// Distance to the transportation polytope:
/// d(X) = ‖r(X) − r‖₁ + ‖c(X) − c‖₁.
pub fn metric_d(x: &TransportPlan, r: &Histogram, c: &Histogram) -> f64 {
    assert_eq!(x.n(), r.len(), "metric_d: dimension mismatch");
    assert_eq!(x.n(), c.len(), "metric_d: dimension mismatch");
    let row: f64 = x
        .row_sums()
        .iter()
        .zip(r.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let col: f64 = x
        .col_sums()
        .iter()
        .zip(c.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    row + col
}

/// Competitive ratio log(d₁/d₂), natural logarithm.
pub fn competitive_ratio(d1: f64, d2: f64) -> Result<f64> {
    if d1.is_nan() || d2.is_nan() || d1 <= 0.0 || d2 <= 0.0 {
        return Err(OtError::Domain(format!(
            "competitive_ratio needs positive distances, got {d1} and {d2}"
        )));
    }
    Ok((d1 / d2).ln())
}

/// Residual-vs-update-count curve of one run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesPoint {
    /// Row/column updates so far: one Sinkhorn sweep counts as n updates,
    /// one Greenkhorn step as one; accelerated solvers count outer iterations.
    pub update_count: usize,
    pub d: f64,
}

/// min/median/max of competitive ratios over pooled matched points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RatioStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub count: usize,
}

/// Update-count-aligned d-value pairs of two algorithms, pooled across seeds.
#[derive(Debug, Clone, Default)]
pub struct ComparisonSeries {
    pairs: Vec<(f64, f64)>,
}

impl ComparisonSeries {
    pub fn new() -> Self {
        ComparisonSeries::default()
    }

    /// Aligns two curves on shared update counts and pools the d-pairs.
    pub fn add_aligned(&mut self, a: &[SeriesPoint], b: &[SeriesPoint]) {
        let lookup: HashMap<usize, f64> = b.iter().map(|p| (p.update_count, p.d)).collect();
        for p in a {
            if let Some(&db) = lookup.get(&p.update_count) {
                self.pairs.push((p.d, db));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Ratio statistics over the pairs where both distances are positive.
    pub fn stats(&self) -> Option<RatioStats> {
        let mut ratios: Vec<f64> = self
            .pairs
            .iter()
            .filter(|(a, b)| *a > 0.0 && *b > 0.0)
            .map(|(a, b)| (a / b).ln())
            .collect();
        if ratios.is_empty() {
            return None;
        }
        ratios.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let k = ratios.len();
        let median = if k % 2 == 1 {
            ratios[k / 2]
        } else {
            0.5 * (ratios[k / 2 - 1] + ratios[k / 2])
        };
        Some(RatioStats {
            min: ratios[0],
            median,
            max: ratios[k - 1],
            count: k,
        })
    }
}

/// Iteration and time budgets of a benchmark cell.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Budgets {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_seconds: Option<f64>,
}

/// Benchmark configuration document (bench.json).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub instances: Vec<InstanceSpec>,
    pub methods: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub eps_grid: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub eta_grid: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budgets: Budgets,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<Vec<Method>> {
        if self.instances.is_empty() {
            return Err(OtError::Domain("bench config: no instances".into()));
        }
        if self.eps_grid.is_empty() == self.eta_grid.is_empty() {
            return Err(OtError::Domain(
                "bench config: exactly one of eps_grid and eta_grid must be non-empty".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(OtError::Domain("bench config: no methods".into()));
        }
        self.methods.iter().map(|m| m.parse()).collect()
    }
}

/// One benchmark cell: the summary record and the residual curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub record: RunRecord,
    pub series: Vec<SeriesPoint>,
}

/// Summary of one (instance, seed, method, grid-value) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fg_fraction: Option<f64>,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_prime: Option<f64>,
    pub iterations: usize,
    pub oracle_calls: u64,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_value: Option<f64>,
    pub status: String,
    pub generator: String,
}

/// Raw-solver stopping tolerance of eta-grid cells; runs are effectively
/// budget-bound (documented in the README).
const ETA_GRID_TOL: f64 = 1e-9;

/// Exchange rate onto the "row/col updates" axis: one Sinkhorn sweep counts
/// as n single-coordinate updates, everything else as one per iteration.
pub fn update_scale(method: Method, n: usize) -> usize {
    match method {
        Method::Sinkhorn => n,
        _ => 1,
    }
}

fn series_from_trace(trace: &SolverTrace, scale: usize) -> Vec<SeriesPoint> {
    trace
        .records
        .iter()
        .map(|r| SeriesPoint {
            update_count: r.iter * scale,
            d: r.residual,
        })
        .collect()
}

struct CellOutcome {
    trace: SolverTrace,
    plan: TransportPlan,
    eta: f64,
    eps_prime: Option<f64>,
}

fn run_eps_cell(
    inst: &Instance,
    method: Method,
    eps: f64,
    budgets: Budgets,
) -> Result<CellOutcome> {
    let res = approx_ot_with_budget(
        &inst.cost,
        &inst.r,
        &inst.c,
        eps,
        method,
        budgets.max_iter,
        budgets.max_seconds,
    )?;
    Ok(CellOutcome {
        trace: res.trace,
        plan: res.plan,
        eta: res.eta,
        eps_prime: Some(res.eps_prime),
    })
}

fn run_eta_cell(
    inst: &Instance,
    method: Method,
    eta: f64,
    budgets: Budgets,
) -> Result<CellOutcome> {
    let reg = RegularizedInstance::new(inst.cost.clone(), inst.r.clone(), inst.c.clone(), eta)?;
    let max_coord = budgets
        .max_iter
        .unwrap_or(crate::solvers::DEFAULT_MAX_COORD_ITERS);
    let max_accel = budgets
        .max_iter
        .unwrap_or(crate::solvers::DEFAULT_MAX_ACCEL_ITERS);
    let (plan, trace) = match method {
        Method::Sinkhorn => {
            let (pots, trace) =
                sinkhorn_with_budget(&reg, ETA_GRID_TOL, max_coord, budgets.max_seconds)?;
            (scaling_matrix(&pots, &reg)?, trace)
        }
        Method::Greenkhorn => {
            let (pots, trace) =
                greenkhorn_with_budget(&reg, ETA_GRID_TOL, max_coord, budgets.max_seconds)?;
            (scaling_matrix(&pots, &reg)?, trace)
        }
        Method::Apdamd => {
            let cons = ConstraintOperator::for_instance(&reg);
            let mirror = ScaledSqEuclidean::standard(reg.n());
            let sol = apdamd_with_budget(
                &reg,
                &cons,
                &mirror,
                ETA_GRID_TOL,
                max_accel,
                budgets.max_seconds,
            )?;
            (sol.plan, sol.trace)
        }
        Method::Apdagd => {
            let cons = ConstraintOperator::for_instance(&reg);
            let sol =
                apdagd_with_budget(&reg, &cons, ETA_GRID_TOL, max_accel, budgets.max_seconds)?;
            (sol.plan, sol.trace)
        }
    };
    Ok(CellOutcome {
        trace,
        plan,
        eta,
        eps_prime: None,
    })
}

/// Executes the instances × seeds × methods × grid cross product.
///
/// `on_cell` fires as each cell finishes so callers can persist results
/// incrementally; a crash loses at most the in-flight cell. Per-cell solver
/// failures are captured in the record's status, never aborting the sweep.
pub fn run_benchmark(
    config: &BenchConfig,
    mut on_cell: impl FnMut(&BenchCell) -> Result<()>,
) -> Result<Vec<BenchCell>> {
    let methods = config.validate()?;
    let seeds: Vec<Option<u64>> = if config.seeds.is_empty() {
        vec![None]
    } else {
        config.seeds.iter().copied().map(Some).collect()
    };
    let grid: Vec<(bool, f64)> = if config.eps_grid.is_empty() {
        config.eta_grid.iter().map(|&v| (false, v)).collect()
    } else {
        config.eps_grid.iter().map(|&v| (true, v)).collect()
    };

    let mut oracle_cache: HashMap<String, Option<f64>> = HashMap::new();
    let mut cells = Vec::new();

    for spec in &config.instances {
        for &seed in &seeds {
            let spec = match seed {
                Some(s) => spec.with_seed(s),
                None => spec.clone(),
            };
            let fg_of_spec = match &spec {
                InstanceSpec::SyntheticPair { fg_fraction, .. } => Some(*fg_fraction),
                _ => None,
            };
            let inst = match build_instance(&spec) {
                Ok(inst) => inst,
                Err(err) => {
                    // an unbuildable instance fails its cells, not the sweep
                    for &method in &methods {
                        for &(is_eps, value) in &grid {
                            let cell = BenchCell {
                                record: RunRecord {
                                    instance_kind: spec.kind_name().to_string(),
                                    seed: spec.seed(),
                                    n: 0,
                                    fg_fraction: fg_of_spec,
                                    algorithm: method.name().to_string(),
                                    eta: (!is_eps).then_some(value),
                                    eps: is_eps.then_some(value),
                                    eps_prime: None,
                                    iterations: 0,
                                    oracle_calls: 0,
                                    wall_seconds: 0.0,
                                    final_d: None,
                                    final_cost: None,
                                    oracle_value: None,
                                    status: format!("error: {err}"),
                                    generator: GENERATOR_NAME.to_string(),
                                },
                                series: Vec::new(),
                            };
                            on_cell(&cell)?;
                            cells.push(cell);
                        }
                    }
                    continue;
                }
            };
            let cache_key = serde_json::to_string(&spec).unwrap_or_default();
            let oracle_value = *oracle_cache.entry(cache_key).or_insert_with(|| {
                if inst.n() <= EXACT_SIZE_LIMIT {
                    exact_ot(&inst.cost, &inst.r, &inst.c).ok().map(|s| s.value)
                } else {
                    None
                }
            });
            for &method in &methods {
                for &(is_eps, value) in &grid {
                    let started = std::time::Instant::now();
                    let outcome = if is_eps {
                        run_eps_cell(&inst, method, value, config.budgets)
                    } else {
                        run_eta_cell(&inst, method, value, config.budgets)
                    };
                    let wall_seconds = started.elapsed().as_secs_f64();
                    let mut record = RunRecord {
                        instance_kind: spec.kind_name().to_string(),
                        seed: spec.seed(),
                        n: inst.n(),
                        fg_fraction: fg_of_spec,
                        algorithm: method.name().to_string(),
                        eta: None,
                        eps: is_eps.then_some(value),
                        eps_prime: None,
                        iterations: 0,
                        oracle_calls: 0,
                        wall_seconds,
                        final_d: None,
                        final_cost: None,
                        oracle_value,
                        status: String::new(),
                        generator: GENERATOR_NAME.to_string(),
                    };
                    let series = match outcome {
                        Ok(out) => {
                            record.eta = Some(out.eta);
                            record.eps_prime = out.eps_prime;
                            record.iterations = out.trace.iterations();
                            record.oracle_calls = out.trace.oracle_calls();
                            record.final_d = Some(metric_d(&out.plan, &inst.r, &inst.c));
                            record.final_cost = Some(out.plan.cost(&inst.cost));
                            record.status = out.trace.status.as_str().to_string();
                            series_from_trace(&out.trace, update_scale(method, inst.n()))
                        }
                        Err(err) => {
                            if !is_eps {
                                record.eta = Some(value);
                            }
                            record.status = format!("error: {err}");
                            Vec::new()
                        }
                    };
                    let cell = BenchCell { record, series };
                    on_cell(&cell)?;
                    cells.push(cell);
                }
            }
        }
    }
    Ok(cells)
}
