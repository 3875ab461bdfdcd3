//! Gauss-Dantzig selector with clustering-based thresholding.
//!
//! For each bound on the delta grid the Dantzig estimate is split into a
//! small and a large group by two-cluster k-means on the magnitudes of all
//! its coordinates, exact zeros included. The large group is refit by OLS and
//! scored by BIC; the bound with the smallest BIC wins.

use serde::{Deserialize, Serialize};

use crate::dantzig::{dantzig_path, delta_grid, DantzigStatus};
use crate::design::{all_effects, all_main_effects, build_model_matrix, Design, Effect, ModelMatrix};
use crate::error::{Result, ScreeningError};
use crate::gdsarm::ScreeningResult;
use crate::linreg::{bic, ols_fit, OlsFit};

/// How the Dantzig estimate is thresholded before the refit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Thresholding {
    /// Keep the larger-mean cluster found by [`lloyd_two_means`].
    #[default]
    Clustering,
    /// Keep the larger-mean cluster of the globally optimal split.
    OptimalClustering,
    /// Keep `|beta_j| > fraction * ||beta||_inf`.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeansSplit {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
    /// Within-cluster sum of squares of the chosen split.
    pub sse: f64,
}

/// Optimal 2-means partition of nonnegative values, found by scanning every
/// split point of the sorted values. `high` holds the indices of the cluster
/// with the larger mean. Equal values cannot be split: if they are all zero
/// nothing is high, otherwise everything is.
pub fn split_two_means(values: &[f64]) -> TwoMeansSplit {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let all: Vec<usize> = (0..values.len()).collect();
    if values.is_empty() {
        return TwoMeansSplit {
            low: Vec::new(),
            high: Vec::new(),
            sse: 0.0,
        };
    }
    let lo = values[order[0]];
    let hi = values[order[order.len() - 1]];
    if lo == hi {
        let (low, high) = if hi == 0.0 {
            (all, Vec::new())
        } else {
            (Vec::new(), all)
        };
        return TwoMeansSplit { low, high, sse: 0.0 };
    }

    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let n = sorted.len();
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, v) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let sse = |a: usize, b: usize| {
        let cnt = (b - a) as f64;
        let s = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a] - s * s / cnt).max(0.0)
    };
    let mut best_k = 1;
    let mut best = f64::INFINITY;
    for k in 1..n {
        // Never cut between equal values.
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let total = sse(0, k) + sse(k, n);
        if total < best {
            best = total;
            best_k = k;
        }
    }
    let mut low: Vec<usize> = order[..best_k].to_vec();
    let mut high: Vec<usize> = order[best_k..].to_vec();
    low.sort_unstable();
    high.sort_unstable();
    TwoMeansSplit {
        low,
        high,
        sse: best,
    }
}

/// Lloyd's algorithm with two clusters, started from the split of the sorted
/// values at their median (the smaller half is the initial low cluster).
/// Points are reassigned to the nearer centre, ties going low, until the
/// assignment stops changing. The result is a local optimum of the
/// within-cluster sum of squares and can differ from [`split_two_means`].
/// Equal values follow the same convention as [`split_two_means`].
pub fn lloyd_two_means(values: &[f64]) -> TwoMeansSplit {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if n == 0 || sorted[0] == sorted[n - 1] {
        return split_two_means(values);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let half = n / 2;
    let (mut c_low, mut c_high) = (mean(&sorted[..half]), mean(&sorted[half..]));
    let mut cut = half;
    // Each pass moves the cut in sorted order; a 1-D assignment is a cut, so
    // n passes bound the iteration.
    for _ in 0..=n {
        let mid = 0.5 * (c_low + c_high);
        let next = sorted.partition_point(|&v| v <= mid);
        c_low = mean(&sorted[..next]);
        c_high = mean(&sorted[next..]);
        if next == cut {
            break;
        }
        cut = next;
    }
    let threshold = sorted[cut - 1];
    let (high, low): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| values[i] > threshold);
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (values[i] - m).powi(2)).sum::<f64>()
    };
    TwoMeansSplit {
        sse: sse(&low) + sse(&high),
        low,
        high,
    }
}

/// One GDS outcome: the refit model chosen for a bound `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdsFit {
    pub delta: f64,
    pub selected: Vec<Effect>,
    pub refit: OlsFit,
    pub bic: f64,
    /// `|beta_hat|` of the Dantzig estimate for each selected effect.
    pub magnitudes: Vec<f64>,
}

impl GdsFit {
    /// Model with no effects.
    pub fn null(matrix: &ModelMatrix, delta: f64) -> GdsFit {
        let refit = ols_fit(matrix, &[]).expect("empty fit always succeeds");
        let bic = bic(refit.rss, matrix.runs(), 0);
        GdsFit {
            delta,
            selected: Vec::new(),
            refit,
            bic,
            magnitudes: Vec::new(),
        }
    }

    pub fn magnitude_of(&self, effect: &Effect) -> f64 {
        self.selected
            .iter()
            .position(|e| e == effect)
            .map_or(0.0, |i| self.magnitudes[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdsRun {
    pub best: GdsFit,
    /// Per-bound outcomes in ascending delta order.
    pub candidates: Vec<std::result::Result<GdsFit, String>>,
}

/// Runs the selector over the delta grid of `matrix` and returns the fit with
/// the smallest BIC; ties go to the smaller delta.
pub fn gds_run(matrix: &ModelMatrix, thresholding: Thresholding) -> Result<GdsRun> {
    if matrix.n_effects() == 0 {
        return Err(ScreeningError::InvalidConfig("model matrix has no effects".into()));
    }
    let grid = delta_grid(matrix)?;
    let solutions = dantzig_path(matrix, &grid);
    let mut candidates = Vec::with_capacity(grid.len());
    for (delta, sol) in grid.iter().zip(solutions) {
        let outcome = match sol {
            Ok(s) if s.status == DantzigStatus::Optimal => {
                refit_thresholded(matrix, *delta, &s.beta, thresholding).map_err(|e| e.to_string())
            }
            Ok(s) => Err(format!("delta {delta:.6}: LP status {:?}", s.status)),
            Err(e) => Err(format!("delta {delta:.6}: {e}")),
        };
        candidates.push(outcome);
    }
    let mut best: Option<&GdsFit> = None;
    for fit in candidates.iter().flatten() {
        if best.is_none_or(|b| fit.bic < b.bic) {
            best = Some(fit);
        }
    }
    match best {
        Some(b) => Ok(GdsRun {
            best: b.clone(),
            candidates: candidates.clone(),
        }),
        None => {
            let msgs: Vec<String> = candidates.into_iter().filter_map(|c| c.err()).collect();
            Err(ScreeningError::AllDeltasFailed(msgs.join("; ")))
        }
    }
}

/// Thresholds one Dantzig estimate and refits the survivors.
///
/// At most `n - 1` effects (largest `|beta|` first) are refit, and columns
/// that are linearly dependent on larger ones are dropped.
pub fn refit_thresholded(
    matrix: &ModelMatrix,
    delta: f64,
    beta: &[f64],
    thresholding: Thresholding,
) -> Result<GdsFit> {
    let usable: Vec<usize> = (0..beta.len()).filter(|&j| !matrix.is_degenerate(j)).collect();
    if usable.iter().all(|&j| beta[j] == 0.0) {
        return Ok(GdsFit::null(matrix, delta));
    }
    let mags: Vec<f64> = usable.iter().map(|&j| beta[j].abs()).collect();
    let high = match thresholding {
        Thresholding::Clustering => lloyd_two_means(&mags).high,
        Thresholding::OptimalClustering => split_two_means(&mags).high,
        Thresholding::Fraction(f) => {
            let top = mags.iter().fold(0.0f64, |a, &v| a.max(v));
            (0..mags.len()).filter(|&i| mags[i] > f * top).collect()
        }
    };
    let mut keep: Vec<usize> = high.into_iter().map(|i| usable[i]).collect();
    keep.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    keep.truncate(matrix.runs() - 1);

    let chosen = full_rank_prefix(matrix, keep)?;
    let mut chosen_sorted = chosen;
    chosen_sorted.sort_unstable();
    let refit = ols_fit(matrix, &chosen_sorted)?;
    let k = chosen_sorted.len();
    Ok(GdsFit {
        delta,
        selected: refit.effects.clone(),
        bic: bic(refit.rss, matrix.runs(), k),
        magnitudes: chosen_sorted.iter().map(|&j| beta[j].abs()).collect(),
        refit,
    })
}

/// Drops columns, in the given priority order, that depend on earlier ones.
pub(crate) fn full_rank_prefix(matrix: &ModelMatrix, mut cols: Vec<usize>) -> Result<Vec<usize>> {
    loop {
        match ols_fit(matrix, &cols) {
            Ok(_) => return Ok(cols),
            Err(ScreeningError::RankDeficient(e)) => {
                let pos = cols
                    .iter()
                    .position(|&j| matrix.effects()[j] == e)
                    .expect("dependent column comes from the subset");
                cols.remove(pos);
            }
            Err(other) => return Err(other),
        }
    }
}

fn screen_with(design: &Design, y: &[f64], effects: &[Effect], thresholding: Thresholding) -> Result<ScreeningResult> {
    let matrix = build_model_matrix(design, effects, y)?;
    match gds_run(&matrix, thresholding) {
        Ok(run) => Ok(ScreeningResult::from_effects(
            run.best.selected.clone(),
            run.best.refit,
            None,
        )),
        Err(ScreeningError::ConstantResponse) => Ok(ScreeningResult::from_effects(
            Vec::new(),
            ols_fit(&matrix, &[])?,
            None,
        )),
        Err(e) => Err(e),
    }
}

/// GDS on the `m` main effects.
pub fn gds_main_effects(design: &Design, y: &[f64]) -> Result<ScreeningResult> {
    gds_main_effects_with(design, y, Thresholding::Clustering)
}

pub fn gds_main_effects_with(design: &Design, y: &[f64], thresholding: Thresholding) -> Result<ScreeningResult> {
    screen_with(design, y, &all_main_effects(design.factors()), thresholding)
}

/// GDS on all mains and two-factor interactions.
pub fn gds_all_2fi(design: &Design, y: &[f64]) -> Result<ScreeningResult> {
    gds_all_2fi_with(design, y, Thresholding::Clustering)
}

pub fn gds_all_2fi_with(design: &Design, y: &[f64], thresholding: Thresholding) -> Result<ScreeningResult> {
    screen_with(design, y, &all_effects(design.factors()), thresholding)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_clear_groups() {
        let s = split_two_means(&[0.1, 0.2, 4.9, 5.1]);
        assert_eq!(s.high, vec![2, 3]);
        assert_eq!(s.low, vec![0, 1]);
    }

    #[test]
    fn unsorted_input_returns_original_indices() {
        let s = split_two_means(&[5.0, 0.3, 4.8, 0.1, 0.2]);
        assert_eq!(s.high, vec![0, 2]);
    }

    #[test]
    fn equal_values() {
        assert_eq!(split_two_means(&[2.0, 2.0, 2.0]).high, vec![0, 1, 2]);
        assert!(split_two_means(&[0.0, 0.0]).high.is_empty());
        assert_eq!(split_two_means(&[3.0]).high, vec![0]);
    }

    #[test]
    fn lloyd_can_stop_at_a_local_optimum() {
        let v = [0.127, 0.110, 0.085, 0.226, 0.035, 0.434, 0.052];
        assert_eq!(split_two_means(&v).high, vec![5]);
        let s = lloyd_two_means(&v);
        assert_eq!(s.high, vec![3, 5]);
        assert!(s.sse > split_two_means(&v).sse);
    }

    #[test]
    fn lloyd_edge_cases() {
        assert!(lloyd_two_means(&[]).high.is_empty());
        assert_eq!(lloyd_two_means(&[0.5]).high, vec![0]);
        assert_eq!(lloyd_two_means(&[0.1, 0.1, 9.0]).high, vec![2]);
        assert_eq!(lloyd_two_means(&[1.0, 1.0, 1.0, 1.0, 2.0]).high, vec![4]);
    }

    #[test]
    fn single_outlier_is_high() {
        let s = split_two_means(&[1.0, 1.1, 0.9, 1.05, 10.0]);
        assert_eq!(s.high, vec![4]);
    }
}
