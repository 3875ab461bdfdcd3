//! Two-level designs, effect identities and centered/normalized model matrices.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScreeningError};

/// Tolerance below which a centered column is treated as constant.
const DEGENERATE_TOL: f64 = 1e-12;

/// A main effect or a two-factor interaction.
///
/// The derived ordering puts every main effect before every interaction and
/// then sorts by factor indices, which is the canonical model-term order used
/// for tie-breaking throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Effect {
    Main(usize),
    Interaction(usize, usize),
}

impl Effect {
    /// Canonical interaction `(i, j)` with `i < j`.
    pub fn interaction(i: usize, j: usize) -> Result<Effect> {
        if i >= j {
            return Err(ScreeningError::UnorderedInteraction(i, j));
        }
        Ok(Effect::Interaction(i, j))
    }

    /// Interaction with the indices put in canonical order.
    pub fn interaction_unordered(i: usize, j: usize) -> Result<Effect> {
        Effect::interaction(i.min(j), i.max(j))
    }

    pub fn is_main(&self) -> bool {
        matches!(self, Effect::Main(_))
    }

    pub fn is_interaction(&self) -> bool {
        matches!(self, Effect::Interaction(..))
    }

    /// Factor indices involved in this effect.
    pub fn factors(&self) -> Vec<usize> {
        match *self {
            Effect::Main(i) => vec![i],
            Effect::Interaction(i, j) => vec![i, j],
        }
    }

    fn max_factor(&self) -> usize {
        match *self {
            Effect::Main(i) => i,
            Effect::Interaction(_, j) => j,
        }
    }

    /// Checks the effect against a factor count.
    pub fn validate(&self, factors: usize) -> Result<()> {
        if let Effect::Interaction(i, j) = *self {
            if i >= j {
                return Err(ScreeningError::UnorderedInteraction(i, j));
            }
        }
        let top = self.max_factor();
        if top >= factors {
            return Err(ScreeningError::FactorOutOfRange { index: top, factors });
        }
        Ok(())
    }
}

/// Label in the usual factorial notation: `"F"` for a main effect, `"AE"`
/// for an interaction.
pub fn effect_label(effect: &Effect, names: &[String]) -> String {
    match *effect {
        Effect::Main(i) => names[i].clone(),
        Effect::Interaction(i, j) => format!("{}{}", names[i], names[j]),
    }
}

/// Parses a label produced by [`effect_label`].
pub fn parse_effect(label: &str, names: &[String]) -> Result<Effect> {
    let label = label.trim();
    let bad = || ScreeningError::Parse {
        row: 0,
        col: 0,
        msg: format!("unknown effect label {label:?}"),
    };
    if let Some(i) = names.iter().position(|n| n == label) {
        return Ok(Effect::Main(i));
    }
    for (i, a) in names.iter().enumerate() {
        if let Some(rest) = label.strip_prefix(a.as_str()) {
            if let Some(j) = names.iter().position(|n| n == rest) {
                if i == j {
                    return Err(bad());
                }
                return Effect::interaction_unordered(i, j);
            }
        }
    }
    Err(bad())
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Effect::Main(i) => write!(f, "main({i})"),
            Effect::Interaction(i, j) => write!(f, "int({i},{j})"),
        }
    }
}

/// Default labels: `A`..`Z` for up to 26 factors, otherwise `F1`..`Fm`.
pub fn default_factor_names(m: usize) -> Vec<String> {
    if m <= 26 {
        (0..m).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
    } else {
        (1..=m).map(|k| format!("F{k}")).collect()
    }
}

pub fn all_main_effects(m: usize) -> Vec<Effect> {
    (0..m).map(Effect::Main).collect()
}

/// All `m(m-1)/2` two-factor interactions in canonical order.
pub fn all_interactions(m: usize) -> Vec<Effect> {
    let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(Effect::Interaction(i, j));
        }
    }
    out
}

/// Mains followed by all interactions: `m + m(m-1)/2` terms.
pub fn all_effects(m: usize) -> Vec<Effect> {
    let mut out = all_main_effects(m);
    out.extend(all_interactions(m));
    out
}

/// An `n x m` plan of `-1/+1` factor settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    runs: usize,
    factors: usize,
    /// Row-major settings.
    settings: Vec<i8>,
    names: Vec<String>,
}

impl Design {
    /// Builds a design from rows of settings; `names` defaults to
    /// [`default_factor_names`].
    pub fn new(rows: Vec<Vec<i8>>, names: Option<Vec<String>>) -> Result<Design> {
        let runs = rows.len();
        if runs < 2 {
            return Err(ScreeningError::InvalidDesign(format!(
                "need at least 2 runs, got {runs}"
            )));
        }
        let factors = rows[0].len();
        if factors < 2 {
            return Err(ScreeningError::InvalidDesign(format!(
                "need at least 2 factors, got {factors}"
            )));
        }
        let mut settings = Vec::with_capacity(runs * factors);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != factors {
                return Err(ScreeningError::InvalidDesign(format!(
                    "row {} has {} entries, expected {factors}",
                    r + 1,
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 1 && v != -1 {
                    return Err(ScreeningError::Parse {
                        row: r + 1,
                        col: c + 1,
                        msg: format!("setting {v} is not -1 or +1"),
                    });
                }
            }
            settings.extend_from_slice(row);
        }
        let names = match names {
            Some(n) => {
                if n.len() != factors {
                    return Err(ScreeningError::LengthMismatch {
                        expected: factors,
                        found: n.len(),
                    });
                }
                let unique: HashSet<&String> = n.iter().collect();
                if unique.len() != n.len() {
                    return Err(ScreeningError::InvalidDesign(
                        "factor names must be unique".into(),
                    ));
                }
                n
            }
            None => default_factor_names(factors),
        };
        Ok(Design {
            runs,
            factors,
            settings,
            names,
        })
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn setting(&self, run: usize, factor: usize) -> i8 {
        self.settings[run * self.factors + factor]
    }

    pub fn row(&self, run: usize) -> &[i8] {
        &self.settings[run * self.factors..(run + 1) * self.factors]
    }

    /// Raw settings of one factor as reals.
    pub fn column(&self, factor: usize) -> Result<Vec<f64>> {
        if factor >= self.factors {
            return Err(ScreeningError::FactorOutOfRange {
                index: factor,
                factors: self.factors,
            });
        }
        Ok((0..self.runs)
            .map(|r| f64::from(self.setting(r, factor)))
            .collect())
    }

    /// Element-wise product of the raw columns `i` and `j` (`i < j`).
    pub fn interaction_column(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        Effect::interaction(i, j)?.validate(self.factors)?;
        Ok((0..self.runs)
            .map(|r| f64::from(self.setting(r, i) * self.setting(r, j)))
            .collect())
    }

    /// Raw (uncentered) column of any effect.
    pub fn effect_column(&self, effect: &Effect) -> Result<Vec<f64>> {
        effect.validate(self.factors)?;
        match *effect {
            Effect::Main(i) => self.column(i),
            Effect::Interaction(i, j) => self.interaction_column(i, j),
        }
    }

    pub fn label(&self, effect: &Effect) -> String {
        effect_label(effect, &self.names)
    }

    /// Copy of the design with columns reordered: new column `k` is old
    /// column `perm[k]`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<Design> {
        if perm.len() != self.factors {
            return Err(ScreeningError::LengthMismatch {
                expected: self.factors,
                found: perm.len(),
            });
        }
        let rows = (0..self.runs)
            .map(|r| perm.iter().map(|&c| self.setting(r, c)).collect())
            .collect();
        let names = perm.iter().map(|&c| self.names[c].clone()).collect();
        Design::new(rows, Some(names))
    }
}

/// Centered and normalized model matrix together with the centered response.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix {
    runs: usize,
    /// Column-major storage, one vector per effect.
    columns: Vec<Vec<f64>>,
    effects: Vec<Effect>,
    y: Vec<f64>,
    column_norm: f64,
    degenerate: Vec<usize>,
}

impl ModelMatrix {
    /// Centers every column and scales it to length `sqrt(n-1)`; centers the
    /// response. Columns that are constant are zeroed and reported through
    /// [`ModelMatrix::degenerate`].
    pub fn from_columns(
        raw_columns: Vec<Vec<f64>>,
        effects: Vec<Effect>,
        response: &[f64],
    ) -> Result<ModelMatrix> {
        let runs = response.len();
        if runs < 2 {
            return Err(ScreeningError::InvalidDesign(format!(
                "need at least 2 runs, got {runs}"
            )));
        }
        if raw_columns.len() != effects.len() {
            return Err(ScreeningError::LengthMismatch {
                expected: effects.len(),
                found: raw_columns.len(),
            });
        }
        let mut seen = HashSet::with_capacity(effects.len());
        for e in &effects {
            if !seen.insert(*e) {
                return Err(ScreeningError::DuplicateEffect(*e));
            }
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(ScreeningError::Parse {
                row: 0,
                col: 0,
                msg: "response contains non-finite values".into(),
            });
        }
        let column_norm = ((runs - 1) as f64).sqrt();
        let mut degenerate = Vec::new();
        let mut columns = Vec::with_capacity(raw_columns.len());
        for (k, mut col) in raw_columns.into_iter().enumerate() {
            if col.len() != runs {
                return Err(ScreeningError::LengthMismatch {
                    expected: runs,
                    found: col.len(),
                });
            }
            center(&mut col);
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            if norm <= DEGENERATE_TOL * scale * (runs as f64).sqrt() {
                col.iter_mut().for_each(|v| *v = 0.0);
                degenerate.push(k);
            } else {
                let s = column_norm / norm;
                col.iter_mut().for_each(|v| *v *= s);
            }
            columns.push(col);
        }
        let mut y = response.to_vec();
        center(&mut y);
        Ok(ModelMatrix {
            runs,
            columns,
            effects,
            y,
            column_norm,
            degenerate,
        })
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn n_effects(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Centered response.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column_norm(&self) -> f64 {
        self.column_norm
    }

    /// Indices of columns that were constant after centering.
    pub fn degenerate(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        self.degenerate.contains(&k)
    }

    pub fn position(&self, effect: &Effect) -> Option<usize> {
        self.effects.iter().position(|e| e == effect)
    }

    pub fn y_norm_sq(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum()
    }

    /// `X^T y`.
    pub fn xty(&self) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, &self.y)).collect()
    }

    /// Dense `X^T X`, row-major `p x p`.
    pub fn gram(&self) -> Vec<f64> {
        let p = self.columns.len();
        let mut g = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v = dot(&self.columns[i], &self.columns[j]);
                g[i * p + j] = v;
                g[j * p + i] = v;
            }
        }
        g
    }

    /// Sub-matrix over the given column indices (same response).
    pub fn select(&self, indices: &[usize]) -> ModelMatrix {
        let columns = indices.iter().map(|&k| self.columns[k].clone()).collect();
        let effects = indices.iter().map(|&k| self.effects[k]).collect();
        let degenerate = indices
            .iter()
            .enumerate()
            .filter(|(_, k)| self.degenerate.contains(k))
            .map(|(pos, _)| pos)
            .collect();
        ModelMatrix {
            runs: self.runs,
            columns,
            effects,
            y: self.y.clone(),
            column_norm: self.column_norm,
            degenerate,
        }
    }

    /// Same columns, different response (centered here).
    pub fn with_response(&self, response: &[f64]) -> Result<ModelMatrix> {
        if response.len() != self.runs {
            return Err(ScreeningError::LengthMismatch {
                expected: self.runs,
                found: response.len(),
            });
        }
        let mut y = response.to_vec();
        center(&mut y);
        Ok(ModelMatrix {
            y,
            ..self.clone()
        })
    }
}

/// Model matrix for `effects` on `design`: raw product coding first, then
/// centering and normalization.
pub fn build_model_matrix(
    design: &Design,
    effects: &[Effect],
    response: &[f64],
) -> Result<ModelMatrix> {
    if response.len() != design.runs() {
        return Err(ScreeningError::LengthMismatch {
            expected: design.runs(),
            found: response.len(),
        });
    }
    if effects.is_empty() {
        return Err(ScreeningError::InvalidConfig("effect list is empty".into()));
    }
    let raw = effects
        .iter()
        .map(|e| design.effect_column(e))
        .collect::<Result<Vec<_>>>()?;
    ModelMatrix::from_columns(raw, effects.to_vec(), response)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}
