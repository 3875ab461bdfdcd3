//! Least-squares refits, BIC scoring and coefficient p-values.
//!
//! Fits operate on centered data, so the intercept is implicit: a model with
//! `k` effects on `n` runs leaves `n - 1 - k` residual degrees of freedom.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::design::{Design, Effect, ModelMatrix};
use crate::error::{Result, ScreeningError};

/// Relative tolerance on `|R_jj|` for declaring a column dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Floor applied to the residual sum of squares before taking logs.
pub const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub effects: Vec<Effect>,
    /// Coefficients on the normalized scale, one per effect.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    /// Total sum of squares of the centered response.
    pub tss: f64,
    pub df_resid: usize,
    pub n: usize,
    /// Diagonal of `(X_S^T X_S)^{-1}`.
    pub unscaled_variances: Vec<f64>,
}

impl OlsFit {
    pub fn k(&self) -> usize {
        self.effects.len()
    }

    pub fn r_squared(&self) -> f64 {
        if self.tss <= 0.0 {
            return 0.0;
        }
        1.0 - self.rss / self.tss
    }

    pub fn bic(&self) -> f64 {
        bic(self.rss, self.n, self.k())
    }
}

/// OLS of the centered response on the columns `subset` of `matrix`,
/// solved by Householder QR in the given column order.
pub fn ols_fit(matrix: &ModelMatrix, subset: &[usize]) -> Result<OlsFit> {
    let n = matrix.runs();
    let k = subset.len();
    let y = matrix.y();
    let tss: f64 = y.iter().map(|v| v * v).sum();
    let effects: Vec<Effect> = subset.iter().map(|&j| matrix.effects()[j]).collect();
    if k + 1 > n {
        return Err(ScreeningError::SubsetTooLarge { size: k, runs: n });
    }
    if k == 0 {
        return Ok(OlsFit {
            effects,
            coefficients: Vec::new(),
            rss: tss,
            tss,
            df_resid: n - 1,
            n,
            unscaled_variances: Vec::new(),
        });
    }

    let mut a: Vec<Vec<f64>> = subset.iter().map(|&j| matrix.column(j).to_vec()).collect();
    let max_norm = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let tol = RANK_TOL * max_norm;
    let mut qty = y.to_vec();
    // R stored upper-triangular, row-major k x k.
    let mut r = vec![0.0; k * k];

    for j in 0..k {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol || max_norm == 0.0 {
            return Err(ScreeningError::RankDeficient(effects[j]));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq > 0.0 {
            for col in a.iter_mut().skip(j) {
                reflect(&v, vnorm_sq, &mut col[j..]);
            }
            reflect(&v, vnorm_sq, &mut qty[j..]);
        }
        for c in j..k {
            r[j * k + c] = a[c][j];
        }
    }

    let coefficients = back_substitute(&r, k, &qty[..k]);
    let rss: f64 = y
        .iter()
        .enumerate()
        .map(|(i, yi)| {
            let fitted: f64 = subset
                .iter()
                .zip(&coefficients)
                .map(|(&j, b)| matrix.column(j)[i] * b)
                .sum();
            (yi - fitted).powi(2)
        })
        .sum();

    // diag((R^T R)^{-1}) = row sums of squares of R^{-1}.
    let mut unscaled_variances = vec![0.0; k];
    for c in 0..k {
        let mut unit = vec![0.0; k];
        unit[c] = 1.0;
        let col = back_substitute(&r, k, &unit);
        for (i, v) in col.iter().enumerate() {
            unscaled_variances[i] += v * v;
        }
    }

    Ok(OlsFit {
        effects,
        coefficients,
        rss,
        tss,
        df_resid: n - 1 - k,
        n,
        unscaled_variances,
    })
}

/// OLS on effects given by identity rather than column index.
pub fn ols_fit_effects(matrix: &ModelMatrix, effects: &[Effect]) -> Result<OlsFit> {
    let subset = effects
        .iter()
        .map(|e| {
            matrix.position(e).ok_or_else(|| {
                ScreeningError::InvalidConfig(format!("effect {e} not in model matrix"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ols_fit(matrix, &subset)
}

/// Intercept and coefficients of `fit` on the raw `-1/+1` columns of
/// `design`, so that `y_hat = intercept + sum_j beta_j x_j`.
pub fn natural_coefficients(design: &Design, y: &[f64], fit: &OlsFit) -> Result<(f64, Vec<f64>)> {
    if y.len() != design.runs() {
        return Err(ScreeningError::LengthMismatch {
            expected: design.runs(),
            found: y.len(),
        });
    }
    let n = y.len() as f64;
    let target = (n - 1.0).sqrt();
    let mut intercept = y.iter().sum::<f64>() / n;
    let mut betas = Vec::with_capacity(fit.k());
    for (e, b) in fit.effects.iter().zip(&fit.coefficients) {
        let col = design.effect_column(e)?;
        let mean = col.iter().sum::<f64>() / n;
        let norm = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ScreeningError::RankDeficient(*e));
        }
        let raw = b * target / norm;
        intercept -= raw * mean;
        betas.push(raw);
    }
    Ok((intercept, betas))
}

fn reflect(v: &[f64], vnorm_sq: f64, x: &mut [f64]) {
    let s = 2.0 * v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm_sq;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

fn back_substitute(r: &[f64], k: usize, rhs: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for c in (i + 1)..k {
            s -= r[i * k + c] * x[c];
        }
        x[i] = s / r[i * k + i];
    }
    x
}

/// `n ln(rss/n) + k ln(n)` with `rss` floored at [`RSS_FLOOR`].
pub fn bic(rss: f64, n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (rss.max(RSS_FLOOR) / n).ln() + k as f64 * n.ln()
}

/// Two-sided t-test p-values for each coefficient of `fit`.
pub fn coefficient_p_values(fit: &OlsFit) -> Result<Vec<f64>> {
    if fit.df_resid == 0 {
        return Err(ScreeningError::SaturatedModel);
    }
    if fit.tss <= 0.0 {
        return Ok(vec![1.0; fit.k()]);
    }
    // On an exact fit the residual is rounding dust. Flooring it keeps real
    // terms at p near 0 while dust-sized coefficients get p near 1, instead
    // of every term looking significant.
    let sigma2 = fit.rss.max(1e-20 * fit.tss) / fit.df_resid as f64;
    Ok(fit
        .coefficients
        .iter()
        .zip(&fit.unscaled_variances)
        .map(|(b, v)| {
            let t = b / (sigma2 * v).sqrt();
            (2.0 * student_t_sf(t.abs(), fit.df_resid as f64)).min(1.0)
        })
        .collect())
}

/// Upper-tail probability `P(T > t)` of Student's t with `df` degrees of
/// freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, x);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}
