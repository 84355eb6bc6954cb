//! Dense transportation simplex on the complete bipartite graph.
//!
//! Nodes 0..n are the row (supply) side, n..2n the column (demand) side; the
//! basis is a spanning tree of 2n − 1 cells. Pivoting uses the most-negative
//! reduced cost with a Bland fallback after a stall window. Once the optimal
//! basis is found, flows are re-derived from the marginals by leaf
//! elimination, so pivot arithmetic never accumulates into the answer.

use crate::error::{OtError, Result};
use crate::types::{CostMatrix, Histogram};

pub(crate) struct SimplexSolution {
    pub flow: Vec<f64>, // row-major n×n, nonzero only on basic cells
    pub value: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

struct Basis {
    n: usize,
    is_basic: Vec<bool>,
    // adjacency over tree nodes: rows are 0..n, cols are n..2n
    adj: Vec<Vec<(usize, usize)>>, // (neighbor node, cell = i*n + j)
}

impl Basis {
    fn new(n: usize) -> Self {
        Basis {
            n,
            is_basic: vec![false; n * n],
            adj: vec![Vec::new(); 2 * n],
        }
    }

    fn insert(&mut self, cell: usize) {
        let (i, j) = (cell / self.n, cell % self.n);
        self.is_basic[cell] = true;
        self.adj[i].push((self.n + j, cell));
        self.adj[self.n + j].push((i, cell));
    }

    fn remove(&mut self, cell: usize) {
        let (i, j) = (cell / self.n, cell % self.n);
        self.is_basic[cell] = false;
        self.adj[i].retain(|&(_, c)| c != cell);
        self.adj[self.n + j].retain(|&(_, c)| c != cell);
    }

    /// Unique tree path between two nodes as a list of cells.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[from] = true;
        queue.push_back(from);
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &(next, cell) in &self.adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = to;
        while let Some((prev, cell)) = parent[node] {
            cells.push(cell);
            node = prev;
        }
        debug_assert_eq!(node, from, "basis is not a spanning tree");
        cells.reverse();
        cells
    }
}

/// Northwest-corner start: a staircase of exactly 2n − 1 basic cells.
fn northwest_corner(r: &[f64], c: &[f64], basis: &mut Basis, flow: &mut [f64]) {
    let n = r.len();
    let mut a = r.to_vec();
    let mut b = c.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let t = a[i].min(b[j]).max(0.0);
        flow[i * n + j] = t;
        basis.insert(i * n + j);
        a[i] -= t;
        b[j] -= t;
        if i == n - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < n - 1 && a[i] <= b[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
}

/// Potentials from the basis tree: u_i + v_j = C_ij on basic cells, u_0 = 0.
fn compute_potentials(cost: &CostMatrix, basis: &Basis, u: &mut [f64], v: &mut [f64]) {
    let n = basis.n;
    let mut seen = vec![false; 2 * n];
    let mut stack = vec![0usize];
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = stack.pop() {
        for &(next, cell) in &basis.adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let (i, j) = (cell / n, cell % n);
            if next >= n {
                v[j] = cost.at(i, j) - u[i];
            } else {
                u[i] = cost.at(i, j) - v[j];
            }
            stack.push(next);
        }
    }
}

/// Flows on a given basis, solved exactly from the marginals by repeatedly
/// fixing the unique arc of a leaf node.
fn flows_from_basis(basis: &Basis, r: &[f64], c: &[f64], flow: &mut [f64]) {
    let n = basis.n;
    for f in flow.iter_mut() {
        *f = 0.0;
    }
    let mut rem: Vec<f64> = r.iter().copied().chain(c.iter().copied()).collect();
    let mut degree: Vec<usize> = basis.adj.iter().map(|a| a.len()).collect();
    let mut removed = vec![false; n * n];
    let mut leaves: Vec<usize> = (0..2 * n).filter(|&x| degree[x] == 1).collect();
    while let Some(node) = leaves.pop() {
        let Some(&(other, cell)) = basis.adj[node].iter().find(|&&(_, c)| !removed[c]) else {
            continue;
        };
        let f = rem[node].max(0.0);
        flow[cell] = f;
        rem[other] -= f;
        rem[node] = 0.0;
        removed[cell] = true;
        degree[node] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
}

pub(crate) fn solve_transportation(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
) -> Result<SimplexSolution> {
    let n = cost.n();
    let mut basis = Basis::new(n);
    let mut flow = vec![0.0; n * n];
    northwest_corner(r.weights(), c.weights(), &mut basis, &mut flow);

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let tol = 1e-11 * cost.max_abs().max(1.0);
    let max_pivots = 2000 * n + 10_000;
    let stall_window = 10 * n + 64;

    let mut stalled = 0usize;
    let mut bland = false;

    for _pivot in 0..max_pivots {
        compute_potentials(cost, &basis, &mut u, &mut v);

        // entering arc
        let mut entering = None;
        if bland {
            'scan: for i in 0..n {
                for j in 0..n {
                    let cell = i * n + j;
                    if !basis.is_basic[cell] && cost.at(i, j) - u[i] - v[j] < -tol {
                        entering = Some(cell);
                        break 'scan;
                    }
                }
            }
        } else {
            let mut best = -tol;
            for i in 0..n {
                for j in 0..n {
                    let cell = i * n + j;
                    if basis.is_basic[cell] {
                        continue;
                    }
                    let w = cost.at(i, j) - u[i] - v[j];
                    if w < best {
                        best = w;
                        entering = Some(cell);
                    }
                }
            }
        }
        let Some(enter) = entering else {
            // optimal basis: rebuild flows exactly and report
            flows_from_basis(&basis, r.weights(), c.weights(), &mut flow);
            let value = basis
                .is_basic
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(cell, _)| flow[cell] * cost.at(cell / n, cell % n))
                .sum();
            return Ok(SimplexSolution { flow, value, u, v });
        };

        // cycle: tree path between the entering arc's endpoints; cells at even
        // positions from the row end take the opposite sign of the entering arc
        let (ei, ej) = (enter / n, enter % n);
        let path = basis.path(ei, n + ej);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 && (flow[cell] < theta || (flow[cell] == theta && cell < leaving)) {
                theta = flow[cell];
                leaving = cell;
            }
        }
        debug_assert!(leaving != usize::MAX);
        let theta = theta.max(0.0);
        flow[enter] = theta;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[cell] = (flow[cell] - theta).max(0.0);
            } else {
                flow[cell] += theta;
            }
        }
        basis.remove(leaving);
        basis.insert(enter);

        // degenerate pivots are the cycling risk; a long run of them flips
        // the pivot rule to Bland's, which terminates
        if theta > tol {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > stall_window {
                bland = true;
            }
        }
    }
    Err(OtError::SolverFailed {
        solver: "transportation simplex",
        reason: format!("no optimal basis within {max_pivots} pivots"),
    })
}
