//! Bidirectional stepwise OLS driven by coefficient p-values.

use serde::{Deserialize, Serialize};

use crate::design::{Effect, ModelMatrix};
use crate::error::{Result, ScreeningError};
use crate::linreg::{coefficient_p_values, ols_fit, OlsFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepwiseConfig {
    pub p_enter: f64,
    pub p_remove: f64,
    pub max_steps: usize,
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        StepwiseConfig {
            p_enter: 0.01,
            p_remove: 0.05,
            max_steps: 100,
        }
    }
}

impl StepwiseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_enter > 0.0
            && self.p_enter <= self.p_remove
            && self.p_remove < 1.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(ScreeningError::InvalidConfig(format!(
                "stepwise thresholds need 0 < p_enter <= p_remove < 1 and max_steps > 0, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseOutcome {
    /// Final effects in canonical order.
    pub effects: Vec<Effect>,
    pub fit: OlsFit,
    pub steps: usize,
    /// Set when `max_steps` ran out before the model settled.
    pub step_limit_hit: bool,
}

/// Stepwise regression starting from `initial`, with additions restricted to
/// `candidates`.
///
/// Each round first removes, one at a time, the effect with the largest
/// p-value while it exceeds `p_remove`, then adds the single candidate with
/// the smallest p-value if it is below `p_enter`. Initial effects that are
/// linearly dependent on earlier ones, or that would push the model beyond
/// `n - 2` terms, are skipped in the order given.
pub fn stepwise_regress(
    matrix: &ModelMatrix,
    initial: &[Effect],
    candidates: &[Effect],
    cfg: &StepwiseConfig,
) -> Result<StepwiseOutcome> {
    cfg.validate()?;
    let n = matrix.runs();
    let cap = n.saturating_sub(2);
    let index_of = |e: &Effect| {
        matrix.position(e).ok_or_else(|| {
            ScreeningError::InvalidConfig(format!("effect {e} not in model matrix"))
        })
    };

    let mut model: Vec<usize> = Vec::new();
    for e in initial {
        let j = index_of(e)?;
        if model.len() >= cap || model.contains(&j) || matrix.is_degenerate(j) {
            continue;
        }
        model.push(j);
        if ols_fit(matrix, &model).is_err() {
            model.pop();
        }
    }
    model.sort_unstable();

    let mut pool: Vec<usize> = candidates.iter().map(index_of).collect::<Result<_>>()?;
    pool.sort_by_key(|&j| matrix.effects()[j]);
    pool.dedup();

    let mut steps = 0;
    let mut step_limit_hit = false;
    'outer: loop {
        let mut changed = false;

        // Removal phase.
        while !model.is_empty() {
            let fit = ols_fit(matrix, &model)?;
            let pvals = coefficient_p_values(&fit)?;
            let (worst, &p) = pvals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("model is nonempty");
            if p <= cfg.p_remove {
                break;
            }
            if steps >= cfg.max_steps {
                step_limit_hit = true;
                break 'outer;
            }
            model.remove(worst);
            steps += 1;
            changed = true;
        }

        // Addition phase.
        if model.len() < cap {
            let mut best: Option<(usize, f64)> = None;
            for &j in &pool {
                if model.contains(&j) || matrix.is_degenerate(j) {
                    continue;
                }
                let mut trial = model.clone();
                trial.push(j);
                let Ok(fit) = ols_fit(matrix, &trial) else {
                    continue;
                };
                let Ok(pvals) = coefficient_p_values(&fit) else {
                    continue;
                };
                let p = pvals[trial.len() - 1];
                if best.is_none_or(|(_, bp)| p < bp) {
                    best = Some((j, p));
                }
            }
            if let Some((j, p)) = best {
                if p < cfg.p_enter {
                    if steps >= cfg.max_steps {
                        step_limit_hit = true;
                        break 'outer;
                    }
                    model.push(j);
                    model.sort_unstable();
                    steps += 1;
                    changed = true;
                }
            }
        }

        if !changed {
            break;
        }
    }

    model.sort_unstable();
    let fit = ols_fit(matrix, &model)?;
    Ok(StepwiseOutcome {
        effects: fit.effects.clone(),
        fit,
        steps,
        step_limit_hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(StepwiseConfig::default().validate().is_ok());
        let bad = StepwiseConfig {
            p_enter: 0.1,
            p_remove: 0.05,
            max_steps: 10,
        };
        assert!(bad.validate().is_err());
        let bad = StepwiseConfig {
            p_enter: 0.0,
            ..StepwiseConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
