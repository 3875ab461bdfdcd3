//! Independent reference computations shared by the integration tests and
//! the acceptance harness. Nothing here calls into the solver code it is
//! used to check.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use screening_core::Design;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` if the matrix is numerically singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least squares through the normal equations `X^T X b = X^T y`.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = columns.len();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let g: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&columns[i], &columns[j])).collect())
        .collect();
    let rhs: Vec<f64> = columns.iter().map(|c| dot(c, y)).collect();
    solve_dense(g, rhs)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Outcome of brute-force vertex enumeration of `min c^T x, A x <= b, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexOptimum {
    Infeasible,
    Optimal { objective: f64, x: Vec<f64> },
}

/// Enumerates every basic solution of the polyhedron and keeps the best
/// feasible one. Valid when the problem is bounded; the nonnegativity
/// constraints make the polyhedron pointed, so an optimum sits at a vertex.
pub fn lp_by_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> VertexOptimum {
    let n = c.len();
    // Constraint rows: A x <= b, then -x <= 0.
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = -1.0;
        rows.push((r, 0.0));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for active in combinations(rows.len(), n) {
        let m: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs: Vec<f64> = active.iter().map(|&i| rows[i].1).collect();
        let Some(x) = solve_dense(m, rhs) else { continue };
        let feasible = rows.iter().all(|(r, bi)| {
            let lhs: f64 = r.iter().zip(&x).map(|(u, v)| u * v).sum();
            lhs <= bi + 1e-9 * (1.0 + bi.abs())
        });
        if feasible {
            let obj: f64 = c.iter().zip(&x).map(|(u, v)| u * v).sum();
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, x));
            }
        }
    }
    match best {
        None => VertexOptimum::Infeasible,
        Some((objective, x)) => VertexOptimum::Optimal { objective, x },
    }
}

/// Minimal within-cluster sum of squares over every split of `values` into
/// two nonempty groups (or one group when all values are equal).
pub fn brute_force_two_means_sse(values: &[f64]) -> f64 {
    let n = values.len();
    let sse = |idx: &[usize]| -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let m = idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (values[i] - m).powi(2)).sum()
    };
    let all: Vec<usize> = (0..n).collect();
    let mut best = sse(&all);
    if n < 2 {
        return best;
    }
    for mask in 1u32..(1 << n) - 1 {
        let (a, b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| mask & (1 << i) != 0);
        best = best.min(sse(&a) + sse(&b));
    }
    best
}

/// Sylvester-type `2^k` full factorial: all `2^k - 1` factorial-effect
/// columns, each balanced and mutually orthogonal.
pub fn full_factorial_effect_columns(k: usize) -> Vec<Vec<i8>> {
    let n = 1usize << k;
    (1..n)
        .map(|mask| {
            (0..n)
                .map(|run| {
                    let ones = (run & mask).count_ones();
                    if ones % 2 == 0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect()
        })
        .collect()
}

/// Random orthogonal design: `p` distinct, randomly sign-flipped columns of
/// an orthogonal array with `n` in {8, 12, 16} runs.
pub fn random_orthogonal_design(rng: &mut impl Rng, n: usize, p: usize) -> Design {
    let mut pool: Vec<Vec<i8>> = match n {
        8 => full_factorial_effect_columns(3),
        16 => full_factorial_effect_columns(4),
        12 => {
            let pb = screening_core::io::plackett_burman_12();
            (0..11).map(|j| (0..12).map(|r| pb.setting(r, j)).collect()).collect()
        }
        _ => panic!("no orthogonal array with {n} runs here"),
    };
    assert!(p <= pool.len());
    pool.shuffle(rng);
    let cols: Vec<Vec<i8>> = pool
        .into_iter()
        .take(p)
        .map(|c| {
            let s: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
            c.into_iter().map(|v| v * s).collect()
        })
        .collect();
    columns_to_design(&cols)
}

pub fn columns_to_design(cols: &[Vec<i8>]) -> Design {
    let n = cols[0].len();
    let rows = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    Design::new(rows, None).unwrap()
}

fn sum_sq_inner_products(cols: &[Vec<i8>]) -> i64 {
    let mut total = 0;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            let s: i64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| i64::from(*a) * i64::from(*b)).sum();
            total += s * s;
        }
    }
    total
}

/// Balanced two-level design with small `E(s^2)`, found by a seeded
/// pairwise-swap exchange search from random balanced columns.
pub fn es2_design(n: usize, m: usize, seed: u64, sweeps: usize) -> (Design, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<i8>> = (0..m)
        .map(|_| {
            let mut c: Vec<i8> = (0..n).map(|r| if r < n / 2 { 1 } else { -1 }).collect();
            c.shuffle(&mut rng);
            c
        })
        .collect();
    let mut current = sum_sq_inner_products(&cols);
    for _ in 0..sweeps {
        let c = rng.random_range(0..m);
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if cols[c][a] == cols[c][b] {
            continue;
        }
        cols[c].swap(a, b);
        let next = sum_sq_inner_products(&cols);
        if next <= current {
            current = next;
        } else {
            cols[c].swap(a, b);
        }
    }
    let pairs = (m * (m - 1) / 2) as f64;
    (columns_to_design(&cols), current as f64 / pairs)
}

/// Simpson's rule on `[a, b]` with `2 * half_steps` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, half_steps: usize) -> f64 {
    let n = 2 * half_steps;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Student-t density with `df` degrees of freedom.
pub fn t_density(t: f64, df: f64) -> f64 {
    fn ln_gamma(x: f64) -> f64 {
        // Lanczos approximation, g = 7.
        const C: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + 7.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + t * t / df).ln()).exp()
}

/// Best-subset OLS by RSS among all subsets of `candidates` of size
/// `1..=max_size`, scored by `n ln(rss/n) + k ln n`.
pub fn best_subset_bic(columns: &[Vec<f64>], y: &[f64], max_size: usize) -> (Vec<usize>, f64) {
    let n = y.len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let mut best = (Vec::new(), f64::INFINITY);
    for k in 1..=max_size {
        for subset in combinations(columns.len(), k) {
            let cols: Vec<Vec<f64>> = subset.iter().map(|&j| centered[j].clone()).collect();
            let Some(b) = normal_equations(&cols, &yc) else { continue };
            let rss: f64 = (0..n)
                .map(|r| {
                    let fit: f64 = cols.iter().zip(&b).map(|(c, bj)| c[r] * bj).sum();
                    (yc[r] - fit).powi(2)
                })
                .sum();
            let score = n as f64 * (rss.max(1e-12) / n as f64).ln() + k as f64 * (n as f64).ln();
            if score < best.1 {
                best = (subset, score);
            }
        }
    }
    best
}
