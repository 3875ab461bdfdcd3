//! Dense tableau simplex for `min c^T x  s.t.  A x <= b, x >= 0`.
//!
//! Pricing uses the most-negative reduced cost. After a run of degenerate
//! pivots the solver switches to Bland's least-index rule until the
//! objective moves again, which rules out cycling. The tableau can be
//! re-priced with a new cost vector and re-optimized from its current basis;
//! the Dantzig selector uses this to warm-start across a grid of bounds.

use crate::error::{Result, ScreeningError};

/// Degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 30;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    /// Constraint rows, each of length `c.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// Pivot budget exhausted; the point is feasible but not proven optimal.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Nonnegative row multipliers `y` with `c + A^T y >= 0` at optimality
    /// and `objective = -b^T y`.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexOptions {
    /// `None` means `50 * (number of structural variables)`.
    pub max_pivots: Option<usize>,
}

/// Solves `min c^T x` over `{x >= 0 : A x <= b}` with a two-phase simplex.
pub fn lp_solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    let nvars = lp.c.len();
    let nrows = lp.a.len();
    if lp.b.len() != nrows {
        return Err(ScreeningError::LengthMismatch {
            expected: nrows,
            found: lp.b.len(),
        });
    }
    for row in &lp.a {
        if row.len() != nvars {
            return Err(ScreeningError::LengthMismatch {
                expected: nvars,
                found: row.len(),
            });
        }
    }
    let finite = lp.c.iter().chain(&lp.b).chain(lp.a.iter().flatten());
    if finite.into_iter().any(|v| !v.is_finite()) {
        return Err(ScreeningError::InvalidConfig(
            "linear program has non-finite coefficients".into(),
        ));
    }
    let max_pivots = opts.max_pivots.unwrap_or(50 * nvars.max(1));

    let mut tab = Tableau::new(&lp.a, &lp.b);
    let mut pivots = 0;
    if tab.n_artificial > 0 {
        let mut phase1 = vec![0.0; tab.cols];
        phase1[tab.artificial_start..].fill(1.0);
        tab.set_costs(&phase1);
        match tab.optimize(max_pivots) {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase one objective is bounded below"),
            Outcome::IterationLimit => return Err(ScreeningError::IterationLimit(tab.pivots)),
        }
        let scale = 1.0 + lp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if tab.objective > 1e-9 * scale {
            return Err(ScreeningError::Infeasible);
        }
        tab.evict_artificials();
        pivots = tab.pivots;
        tab.pivots = 0;
    }

    let mut cost = vec![0.0; tab.cols];
    cost[..nvars].copy_from_slice(&lp.c);
    tab.set_costs(&cost);
    let status = match tab.optimize(max_pivots.saturating_sub(pivots)) {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::IterationLimit => LpStatus::IterationLimit,
        Outcome::Unbounded => return Err(ScreeningError::Unbounded),
    };
    Ok(LpSolution {
        status,
        x: tab.primal(nvars),
        objective: tab.objective,
        duals: tab.slack_reduced_costs(),
        pivots: pivots + tab.pivots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Simplex tableau over `[structural | slack | artificial]` columns.
#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    /// Row-major `rows x (cols + 1)`; the last entry of a row is its RHS.
    t: Vec<f64>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    objective: f64,
    basis: Vec<usize>,
    blocked: Vec<bool>,
    slack_start: usize,
    artificial_start: usize,
    n_artificial: usize,
    pub(crate) pivots: usize,
}

impl Tableau {
    /// Tableau for `A x + s = b`; rows with negative `b` are negated and get
    /// an artificial basic variable.
    pub(crate) fn new(a: &[Vec<f64>], b: &[f64]) -> Tableau {
        let rows = a.len();
        let nvars = a.first().map_or(0, |r| r.len());
        let negative: Vec<usize> = (0..rows).filter(|&i| b[i] < 0.0).collect();
        let slack_start = nvars;
        let artificial_start = nvars + rows;
        let cols = artificial_start + negative.len();
        let width = cols + 1;
        let mut t = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut art = artificial_start;
        for i in 0..rows {
            let row = &mut t[i * width..(i + 1) * width];
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            for (dst, src) in row[..nvars].iter_mut().zip(&a[i]) {
                *dst = sign * src;
            }
            row[slack_start + i] = sign;
            row[cols] = sign * b[i];
            if b[i] < 0.0 {
                row[art] = 1.0;
                basis[i] = art;
                art += 1;
            } else {
                basis[i] = slack_start + i;
            }
        }
        Tableau {
            rows,
            cols,
            width,
            t,
            cost: vec![0.0; cols],
            reduced: vec![0.0; cols],
            objective: 0.0,
            basis,
            blocked: vec![false; cols],
            slack_start,
            artificial_start,
            n_artificial: negative.len(),
            pivots: 0,
        }
    }

    /// Replaces the cost vector and re-prices against the current basis.
    pub(crate) fn set_costs(&mut self, cost: &[f64]) {
        self.cost.copy_from_slice(cost);
        self.reduced.copy_from_slice(cost);
        self.objective = 0.0;
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.width..(i + 1) * self.width];
            for (r, v) in self.reduced.iter_mut().zip(&row[..self.cols]) {
                *r -= cb * v;
            }
            self.objective += cb * row[self.cols];
        }
        for &j in &self.basis {
            self.reduced[j] = 0.0;
        }
    }

    pub(crate) fn optimize(&mut self, max_pivots: usize) -> Outcome {
        let scale = 1.0 + self.cost.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-11 * scale;
        let mut degenerate_run = 0usize;
        let mut budget = max_pivots;
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN;
            let Some(enter) = self.price(tol, bland) else {
                return Outcome::Optimal;
            };
            let Some((leave, step)) = self.ratio_test(enter, bland) else {
                return Outcome::Unbounded;
            };
            if budget == 0 {
                return Outcome::IterationLimit;
            }
            budget -= 1;
            self.pivot(leave, enter);
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    fn price(&self, tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut best_val = -tol;
        for (j, &r) in self.reduced.iter().enumerate() {
            if self.blocked[j] || r >= -tol {
                continue;
            }
            if bland {
                return Some(j);
            }
            if r < best_val {
                best_val = r;
                best = Some(j);
            }
        }
        best
    }

    /// Minimum-ratio row for the entering column. Ties go to the larger
    /// pivot element, or under Bland's rule to the smallest basic index.
    fn ratio_test(&self, enter: usize, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.rows {
            let a = self.t[i * self.width + enter];
            if a <= PIVOT_TOL {
                continue;
            }
            let rhs = self.t[i * self.width + self.cols].max(0.0);
            let ratio = rhs / a;
            best = match best {
                None => Some((i, ratio, a)),
                Some((bi, br, ba)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            a > ba
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio, a))
                    } else {
                        Some((bi, br, ba))
                    }
                }
            };
        }
        best.map(|(i, r, _)| (i, r))
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let inv = 1.0 / self.t[r * w + e];
        {
            let prow = &mut self.t[r * w..(r + 1) * w];
            prow.iter_mut().for_each(|v| *v *= inv);
            prow[e] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[e] = 0.0;
            }
        }
        let f = self.reduced[e];
        if f != 0.0 {
            for (x, p) in self.reduced.iter_mut().zip(&prow[..self.cols]) {
                *x -= f * p;
            }
            self.reduced[e] = 0.0;
            self.objective += f * prow[self.cols];
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    /// Pivots zero-level artificials out of the basis and blocks every
    /// artificial column from re-entering.
    fn evict_artificials(&mut self) {
        for i in 0..self.rows {
            if self.basis[i] < self.artificial_start {
                continue;
            }
            let row = &self.t[i * self.width..(i + 1) * self.width];
            let candidate = (0..self.artificial_start)
                .filter(|&j| row[j].abs() > 1e-7)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            // A row with no candidate is redundant; its artificial stays basic at zero.
            if let Some(j) = candidate {
                self.pivot(i, j);
            }
        }
        for j in self.artificial_start..self.cols {
            self.blocked[j] = true;
        }
    }

    /// Values of the first `n` structural variables at the current basis.
    pub(crate) fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < n {
                x[j] = self.t[i * self.width + self.cols].max(0.0);
            }
        }
        x
    }

    /// Reduced costs of the slack columns, one per original row.
    pub(crate) fn slack_reduced_costs(&self) -> Vec<f64> {
        self.reduced[self.slack_start..self.slack_start + self.rows].to_vec()
    }

    pub(crate) fn objective(&self) -> f64 {
        self.objective
    }
}
