//! The Dantzig selector
//!
//! ```text
//! min ||beta||_1   s.t.   ||X^T (y - X beta)||_inf <= delta
//! ```
//!
//! posed as a linear program over `beta = u - v` with `u, v >= 0`. With
//! `G = X^T X` and `b = X^T y` the split program has `2p` variables and `2p`
//! inequality rows:
//!
//! ```text
//! min 1^T (u + v)   s.t.   G u - G v <= b + delta,   -G u + G v <= delta - b.
//! ```
//!
//! The origin is infeasible for it whenever `delta < ||b||_inf`, so instead
//! the simplex runs on its LP dual
//!
//! ```text
//! min (delta - b)^T m + (delta + b)^T l   s.t.   G (m - l) <= 1,   -G (m - l) <= 1,
//! ```
//!
//! whose feasible region contains the origin and does not depend on `delta`.
//! `u` and `v` are read off as the reduced costs of the dual's slack columns.
//! Because only the costs change with `delta`, one tableau is re-priced and
//! re-optimized along a whole grid of bounds.

use crate::design::ModelMatrix;
use crate::error::{Result, ScreeningError};
use crate::lp::{LinearProgram, Outcome, Tableau};

/// Coefficients smaller than this in magnitude are set to exactly zero.
pub const ZERO_SNAP: f64 = 1e-9;
/// Allowed violation of the correlation bound.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DantzigStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DantzigSolution {
    pub beta: Vec<f64>,
    pub delta: f64,
    pub status: DantzigStatus,
    pub pivots: usize,
}

impl DantzigSolution {
    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }
}

/// The ten interior points `k * delta_max / 11`, `k = 1..=10`, of twelve
/// equidistant values spanning `[0, ||X^T y||_inf]`.
pub fn delta_grid(matrix: &ModelMatrix) -> Result<Vec<f64>> {
    let dmax = matrix.xty().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if dmax.is_nan() || dmax <= 0.0 {
        return Err(ScreeningError::ConstantResponse);
    }
    Ok((1..=10).map(|k| k as f64 * dmax / 11.0).collect())
}

/// The split-variable primal program for one `delta`, in the form accepted
/// by [`crate::lp::lp_solve`]. Variables are `[u_0..u_p, v_0..v_p]`.
pub fn dantzig_lp(matrix: &ModelMatrix, delta: f64) -> LinearProgram {
    let p = matrix.n_effects();
    let g = matrix.gram();
    let b = matrix.xty();
    let mut a = Vec::with_capacity(2 * p);
    let mut rhs = Vec::with_capacity(2 * p);
    for i in 0..p {
        let gi = &g[i * p..(i + 1) * p];
        a.push(gi.iter().copied().chain(gi.iter().map(|v| -v)).collect());
        rhs.push(b[i] + delta);
    }
    for i in 0..p {
        let gi = &g[i * p..(i + 1) * p];
        a.push(gi.iter().map(|v| -v).chain(gi.iter().copied()).collect());
        rhs.push(delta - b[i]);
    }
    LinearProgram {
        c: vec![1.0; 2 * p],
        a,
        b: rhs,
    }
}

/// Warm-startable Dantzig selector over one model matrix.
pub struct DantzigSolver {
    p: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
    tableau: Tableau,
    max_pivots: usize,
}

impl DantzigSolver {
    pub fn new(matrix: &ModelMatrix) -> DantzigSolver {
        let p = matrix.n_effects();
        let gram = matrix.gram();
        let xty = matrix.xty();
        let tableau = Self::fresh_tableau(p, &gram);
        DantzigSolver {
            p,
            gram,
            xty,
            tableau,
            max_pivots: 50 * 2 * p.max(1),
        }
    }

    fn fresh_tableau(p: usize, gram: &[f64]) -> Tableau {
        let mut rows = Vec::with_capacity(2 * p);
        for i in 0..p {
            let gi = &gram[i * p..(i + 1) * p];
            rows.push(gi.iter().copied().chain(gi.iter().map(|v| -v)).collect::<Vec<_>>());
        }
        for i in 0..p {
            let gi = &gram[i * p..(i + 1) * p];
            rows.push(gi.iter().map(|v| -v).chain(gi.iter().copied()).collect::<Vec<_>>());
        }
        Tableau::new(&rows, &vec![1.0; 2 * p])
    }

    pub fn with_max_pivots(mut self, max_pivots: usize) -> Self {
        self.max_pivots = max_pivots;
        self
    }

    /// Largest absolute violation of `|X^T (y - X beta)| <= delta`.
    pub fn violation(&self, beta: &[f64], delta: f64) -> f64 {
        let p = self.p;
        (0..p)
            .map(|i| {
                let gb: f64 = self.gram[i * p..(i + 1) * p]
                    .iter()
                    .zip(beta)
                    .map(|(g, b)| g * b)
                    .sum();
                (self.xty[i] - gb).abs() - delta
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Solves for one bound, continuing from the current basis.
    pub fn solve(&mut self, delta: f64) -> Result<DantzigSolution> {
        if delta.is_nan() || delta < 0.0 {
            return Err(ScreeningError::NegativeDelta(delta));
        }
        let mut sol = self.solve_from_current(delta);
        if sol.status == DantzigStatus::Optimal && self.violation(&sol.beta, delta) > FEASIBILITY_TOL {
            // Accumulated rounding in a long warm-started run; start over.
            self.tableau = Self::fresh_tableau(self.p, &self.gram);
            sol = self.solve_from_current(delta);
            if sol.status == DantzigStatus::Optimal
                && self.violation(&sol.beta, delta) > FEASIBILITY_TOL
            {
                sol.status = DantzigStatus::Infeasible;
            }
        }
        Ok(sol)
    }

    fn solve_from_current(&mut self, delta: f64) -> DantzigSolution {
        let p = self.p;
        let mut cost = vec![0.0; 4 * p];
        for j in 0..p {
            cost[j] = delta - self.xty[j];
            cost[p + j] = delta + self.xty[j];
        }
        self.tableau.set_costs(&cost);
        self.tableau.pivots = 0;
        let outcome = self.tableau.optimize(self.max_pivots);
        let pivots = self.tableau.pivots;
        let status = match outcome {
            Outcome::Optimal => DantzigStatus::Optimal,
            Outcome::IterationLimit => DantzigStatus::IterationLimit,
            // The dual is unbounded exactly when the primal is infeasible.
            Outcome::Unbounded => DantzigStatus::Infeasible,
        };
        let rc = self.tableau.slack_reduced_costs();
        let beta = (0..p)
            .map(|j| {
                let b = rc[j].max(0.0) - rc[p + j].max(0.0);
                if b.abs() < ZERO_SNAP {
                    0.0
                } else {
                    b
                }
            })
            .collect();
        DantzigSolution {
            beta,
            delta,
            status,
            pivots,
        }
    }

    /// Objective of the last solve (the optimal `||beta||_1` by duality).
    pub fn last_objective(&self) -> f64 {
        -self.tableau.objective()
    }
}

/// Dantzig selector for a single bound.
pub fn dantzig_select(matrix: &ModelMatrix, delta: f64) -> Result<DantzigSolution> {
    if delta.is_nan() || delta < 0.0 {
        return Err(ScreeningError::NegativeDelta(delta));
    }
    DantzigSolver::new(matrix).solve(delta)
}

/// Solutions for several bounds, returned in input order. Bounds are
/// visited from largest to smallest so each solve starts from the previous
/// optimal basis.
pub fn dantzig_path(matrix: &ModelMatrix, deltas: &[f64]) -> Vec<Result<DantzigSolution>> {
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let mut solver = DantzigSolver::new(matrix);
    let mut out: Vec<Option<Result<DantzigSolution>>> = vec![None; deltas.len()];
    for k in order {
        out[k] = Some(solver.solve(deltas[k]));
    }
    out.into_iter().map(|s| s.expect("every delta visited")).collect()
}

/// Closed-form Dantzig selector for a matrix with `X^T X = (n-1) I`:
/// coordinate-wise soft thresholding of `X^T y` scaled by `1/(n-1)`.
pub fn orthogonal_dantzig_oracle(matrix: &ModelMatrix, delta: f64) -> Result<Vec<f64>> {
    let p = matrix.n_effects();
    let scale = (matrix.runs() - 1) as f64;
    let g = matrix.gram();
    let mut dev = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            let target = if i == j { scale } else { 0.0 };
            dev = dev.max((g[i * p + j] - target).abs());
        }
    }
    if dev > 1e-8 {
        return Err(ScreeningError::NotOrthogonal(dev));
    }
    Ok(matrix
        .xty()
        .iter()
        .map(|&b| b.signum() * (b.abs() - delta).max(0.0) / scale)
        .collect())
}
