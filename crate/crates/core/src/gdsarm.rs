//! GDS aggregated over random interaction subsets (GDS-ARM).
//!
//! 1. Draw `nrep` random subsets of `nint` two-factor interactions.
//! 2. Run GDS on all mains plus each subset.
//! 3. Rank the `nrep` selected models by BIC and keep the best `ntop`.
//! 4. Keep effects present in at least `ceil(pkeep * ntop)` of them.
//! 5. Refine by stepwise regression over the kept effects and all mains.
//!
//! Factors appearing in any surviving effect are declared important. The
//! heredity variants drop interactions without active parents after step 2
//! and again after step 5.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{all_effects, all_interactions, build_model_matrix, Design, Effect, ModelMatrix};
use crate::error::{Result, ScreeningError};
use crate::gds::{gds_run, GdsFit, Thresholding};
use crate::linreg::{bic, ols_fit, ols_fit_effects, OlsFit};
use crate::stepwise::{stepwise_regress, StepwiseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Heredity {
    #[default]
    None,
    Weak,
    Strong,
}

impl std::str::FromStr for Heredity {
    type Err = ScreeningError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Heredity::None),
            "weak" => Ok(Heredity::Weak),
            "strong" => Ok(Heredity::Strong),
            other => Err(ScreeningError::InvalidConfig(format!(
                "unknown heredity mode {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Heredity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Heredity::None => "none",
            Heredity::Weak => "weak",
            Heredity::Strong => "strong",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdsArmConfig {
    pub nrep: usize,
    pub nint: usize,
    pub ntop: usize,
    pub pkeep: f64,
    pub heredity: Heredity,
    pub stepwise: StepwiseConfig,
    pub seed: u64,
}

impl GdsArmConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        let c = m * m.saturating_sub(1) / 2;
        let fail = |msg: String| Err(ScreeningError::InvalidConfig(msg));
        if self.nrep == 0 {
            return fail("nrep must be positive".into());
        }
        if self.nint > c {
            return fail(format!("nint {} exceeds the {c} available interactions", self.nint));
        }
        if self.ntop == 0 || self.ntop > self.nrep {
            return fail(format!("ntop {} must lie in 1..={}", self.ntop, self.nrep));
        }
        if !(self.pkeep > 0.0 && self.pkeep <= 1.0) {
            return fail(format!("pkeep {} must lie in (0, 1]", self.pkeep));
        }
        self.stepwise.validate()
    }

    /// Average number of repetitions in which a given interaction is drawn.
    pub fn expected_inclusions(&self, m: usize) -> f64 {
        let c = (m * (m - 1) / 2) as f64;
        self.nrep as f64 * self.nint as f64 / c
    }
}

/// Recommended tuning for `m` factors: `nrep = C(m,2)`,
/// `nint = ceil(0.2 C(m,2))`, `ntop = max(20, nrep*nint/(2 C(m,2)))` rounded
/// half-up and capped at `nrep`, `pkeep = 0.25`.
pub fn default_config(n: usize, m: usize, seed: u64) -> Result<GdsArmConfig> {
    if m < 3 {
        return Err(ScreeningError::InvalidConfig(format!(
            "need at least 3 factors, got {m}"
        )));
    }
    let _ = n;
    let c = m * (m - 1) / 2;
    let nrep = c;
    // Integer ceil(c/5) avoids 0.2 * c landing just above an integer.
    let nint = c.div_ceil(5);
    let ratio = (nrep * nint) as f64 / (2 * c) as f64;
    let ntop = 20usize.max((ratio + 0.5).floor() as usize).min(nrep);
    Ok(GdsArmConfig {
        nrep,
        nint,
        ntop,
        pkeep: 0.25,
        heredity: Heredity::None,
        stepwise: StepwiseConfig::default(),
        seed,
    })
}

/// `nrep` subsets of `nint` interactions, each drawn uniformly without
/// replacement, sequentially from one seeded stream. Each subset is returned
/// in canonical order.
pub fn sample_interaction_subsets(seed: u64, nrep: usize, nint: usize, m: usize) -> Result<Vec<Vec<Effect>>> {
    let pool = all_interactions(m);
    if nint > pool.len() {
        return Err(ScreeningError::InvalidConfig(format!(
            "nint {nint} exceeds the {} available interactions",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..nrep)
        .map(|_| {
            let mut idx = sample(&mut rng, pool.len(), nint).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pool[i]).collect()
        })
        .collect())
}

/// Drops interactions whose parents are not in the set: weak keeps an
/// interaction if either parent main effect is present, strong only if both
/// are. Main effects are never dropped.
pub fn apply_heredity_filter(effects: &[Effect], mode: Heredity) -> Vec<Effect> {
    if mode == Heredity::None {
        return effects.to_vec();
    }
    let mains: BTreeSet<usize> = effects
        .iter()
        .filter_map(|e| match e {
            Effect::Main(i) => Some(*i),
            _ => None,
        })
        .collect();
    effects
        .iter()
        .copied()
        .filter(|e| match *e {
            Effect::Main(_) => true,
            Effect::Interaction(i, j) => {
                let (a, b) = (mains.contains(&i), mains.contains(&j));
                match mode {
                    Heredity::Weak => a || b,
                    Heredity::Strong => a && b,
                    Heredity::None => true,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    /// Effects meeting the threshold, in canonical order.
    pub effects: Vec<Effect>,
    /// Top-model membership count of every effect seen in a top model.
    pub counts: Vec<(Effect, usize)>,
    /// Minimum count, `ceil(pkeep * ntop)`.
    pub threshold: usize,
    /// Repetition indices of the top models, best first.
    pub top: Vec<usize>,
}

/// Keeps effects that appear in at least `ceil(pkeep * ntop)` of the `ntop`
/// lowest-BIC fits. Ties in BIC go to the earlier repetition; identical
/// models are counted separately.
pub fn aggregate_top_models(fits: &[GdsFit], ntop: usize, pkeep: f64) -> Aggregation {
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| fits[a].bic.total_cmp(&fits[b].bic).then(a.cmp(&b)));
    order.truncate(ntop);
    let mut counts: BTreeMap<Effect, usize> = BTreeMap::new();
    for &r in &order {
        for e in &fits[r].selected {
            *counts.entry(*e).or_default() += 1;
        }
    }
    let threshold = retention_threshold(pkeep, ntop);
    let effects = counts
        .iter()
        .filter(|(_, &c)| c >= threshold)
        .map(|(e, _)| *e)
        .collect();
    Aggregation {
        effects,
        counts: counts.into_iter().collect(),
        threshold,
        top: order,
    }
}

/// `ceil(pkeep * ntop)`, robust to `pkeep * ntop` rounding just above an
/// integer.
pub fn retention_threshold(pkeep: f64, ntop: usize) -> usize {
    let raw = pkeep * ntop as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmDiagnostics {
    /// BIC of each repetition's selected model (`inf` for failed ones).
    pub rep_bics: Vec<f64>,
    pub top_counts: Vec<(Effect, usize)>,
    pub threshold: usize,
    pub aggregated: Vec<Effect>,
    pub failed_reps: usize,
    pub stepwise_steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub active_effects: Vec<Effect>,
    /// Factor indices appearing in any active effect, ascending.
    pub important_factors: Vec<usize>,
    pub final_fit: OlsFit,
    pub diagnostics: Option<ArmDiagnostics>,
}

impl ScreeningResult {
    pub fn from_effects(mut active: Vec<Effect>, final_fit: OlsFit, diagnostics: Option<ArmDiagnostics>) -> Self {
        active.sort_unstable();
        let important_factors = important_factors(&active);
        ScreeningResult {
            active_effects: active,
            important_factors,
            final_fit,
            diagnostics,
        }
    }
}

/// Union of the factors of `effects`, ascending.
pub fn important_factors(effects: &[Effect]) -> Vec<usize> {
    effects
        .iter()
        .flat_map(|e| e.factors())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// One repetition: GDS on all mains plus `subset`, with the optional
/// heredity filter applied to the selected model.
fn run_repetition(full: &ModelMatrix, main_cols: &[usize], subset: &[Effect], heredity: Heredity) -> Option<GdsFit> {
    let mut cols = main_cols.to_vec();
    cols.extend(subset.iter().map(|e| full.position(e).expect("full matrix has every effect")));
    let matrix = full.select(&cols);
    let fit = gds_run(&matrix, Thresholding::Clustering).ok()?.best;
    if heredity == Heredity::None {
        return Some(fit);
    }
    let kept = apply_heredity_filter(&fit.selected, heredity);
    if kept.len() == fit.selected.len() {
        return Some(fit);
    }
    let refit = ols_fit_effects(&matrix, &kept).ok()?;
    let magnitudes = kept.iter().map(|e| fit.magnitude_of(e)).collect();
    Some(GdsFit {
        delta: fit.delta,
        bic: bic(refit.rss, matrix.runs(), kept.len()),
        selected: kept,
        refit,
        magnitudes,
    })
}

/// Runs every repetition in parallel, in repetition order. Failed repetitions
/// become null models with infinite BIC; their number is returned alongside.
fn repetition_fits(full: &ModelMatrix, subsets: &[Vec<Effect>], heredity: Heredity) -> (Vec<GdsFit>, usize) {
    let main_cols: Vec<usize> = (0..full.effects().iter().filter(|e| matches!(e, Effect::Main(_))).count()).collect();
    let outcomes: Vec<Option<GdsFit>> = subsets
        .par_iter()
        .map(|s| run_repetition(full, &main_cols, s, heredity))
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    let fits = outcomes
        .into_iter()
        .map(|o| {
            o.unwrap_or_else(|| GdsFit {
                bic: f64::INFINITY,
                ..GdsFit::null(full, 0.0)
            })
        })
        .collect();
    (fits, failed)
}

/// Full GDS-ARM analysis of one response.
pub fn gds_arm(design: &Design, y: &[f64], config: &GdsArmConfig) -> Result<ScreeningResult> {
    let m = design.factors();
    config.validate(m)?;
    let subsets = sample_interaction_subsets(config.seed, config.nrep, config.nint, m)?;
    let effects = all_effects(m);
    let full = build_model_matrix(design, &effects, y)?;
    if full.y_norm_sq() == 0.0 {
        let diagnostics = ArmDiagnostics {
            rep_bics: Vec::new(),
            top_counts: Vec::new(),
            threshold: retention_threshold(config.pkeep, config.ntop),
            aggregated: Vec::new(),
            failed_reps: 0,
            stepwise_steps: 0,
            warnings: vec!["response is constant; nothing to select".into()],
        };
        return Ok(ScreeningResult::from_effects(Vec::new(), ols_fit(&full, &[])?, Some(diagnostics)));
    }
    let (fits, failed_reps) = repetition_fits(&full, &subsets, config.heredity);

    let agg = aggregate_top_models(&fits, config.ntop, config.pkeep);
    let mut warnings = Vec::new();
    let expected = config.expected_inclusions(m);
    if (config.ntop as f64) > expected {
        warnings.push(format!(
            "ntop = {} exceeds the expected number of repetitions containing a given interaction ({expected:.1})",
            config.ntop
        ));
    }
    if failed_reps > 0 {
        warnings.push(format!("{failed_reps} repetition(s) failed and were scored as null models"));
    }

    // Stepwise start: most frequent first, then larger |beta| in the best top model.
    let best_top = agg.top.first().map(|&r| &fits[r]);
    let count_of = |e: &Effect| agg.counts.iter().find(|(x, _)| x == e).map_or(0, |(_, c)| *c);
    let mut initial = agg.effects.clone();
    initial.sort_by(|a, b| {
        count_of(b)
            .cmp(&count_of(a))
            .then_with(|| {
                let ma = best_top.map_or(0.0, |f| f.magnitude_of(a));
                let mb = best_top.map_or(0.0, |f| f.magnitude_of(b));
                mb.total_cmp(&ma)
            })
            .then(a.cmp(b))
    });
    let mut candidates: BTreeSet<Effect> = agg.effects.iter().copied().collect();
    candidates.extend((0..m).map(Effect::Main));
    let candidates: Vec<Effect> = candidates.into_iter().collect();

    let step = stepwise_regress(&full, &initial, &candidates, &config.stepwise)?;
    if step.step_limit_hit {
        warnings.push(format!(
            "stepwise regression stopped after {} steps without settling",
            step.steps
        ));
    }
    let active = apply_heredity_filter(&step.effects, config.heredity);
    let final_fit = if active.len() == step.effects.len() {
        step.fit.clone()
    } else {
        ols_fit_effects(&full, &active)?
    };

    let diagnostics = ArmDiagnostics {
        rep_bics: fits.iter().map(|f| f.bic).collect(),
        top_counts: agg.counts.clone(),
        threshold: agg.threshold,
        aggregated: agg.effects.clone(),
        failed_reps,
        stepwise_steps: step.steps,
        warnings,
    };
    Ok(ScreeningResult::from_effects(active, final_fit, Some(diagnostics)))
}

/// Pre-stepwise aggregate only; used to relate GDS-ARM to plain GDS.
pub fn gds_arm_aggregate(design: &Design, y: &[f64], config: &GdsArmConfig) -> Result<Aggregation> {
    let m = design.factors();
    config.validate(m)?;
    let subsets = sample_interaction_subsets(config.seed, config.nrep, config.nint, m)?;
    let full = build_model_matrix(design, &all_effects(m), y)?;
    let (fits, _) = repetition_fits(&full, &subsets, config.heredity);
    Ok(aggregate_top_models(&fits, config.ntop, config.pkeep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let c = default_config(12, 7, 0).unwrap();
        assert_eq!((c.nrep, c.nint, c.ntop), (21, 5, 20));
        let c = default_config(12, 8, 0).unwrap();
        assert_eq!((c.nrep, c.nint, c.ntop), (28, 6, 20));
        let c = default_config(24, 16, 0).unwrap();
        assert_eq!((c.nrep, c.nint, c.ntop), (120, 24, 20));
        let c = default_config(18, 22, 0).unwrap();
        assert_eq!((c.nrep, c.nint, c.ntop), (231, 47, 24));
        assert_eq!(c.pkeep, 0.25);
        assert_eq!(c.heredity, Heredity::None);
        assert!(default_config(12, 2, 0).is_err());
        // Few factors: ntop is capped by nrep.
        let c = default_config(8, 4, 0).unwrap();
        assert_eq!((c.nrep, c.ntop), (6, 6));
    }

    #[test]
    fn retention_threshold_is_ceiling() {
        assert_eq!(retention_threshold(0.25, 20), 5);
        assert_eq!(retention_threshold(0.1, 30), 3);
        assert_eq!(retention_threshold(0.25, 24), 6);
        assert_eq!(retention_threshold(0.4, 21), 9);
        assert_eq!(retention_threshold(1.0, 7), 7);
    }

    #[test]
    fn heredity_filter_modes() {
        let a = Effect::Main(0);
        let ab = Effect::Interaction(0, 1);
        assert_eq!(apply_heredity_filter(&[a, ab], Heredity::Weak), vec![a, ab]);
        assert_eq!(apply_heredity_filter(&[a, ab], Heredity::Strong), vec![a]);
        assert_eq!(apply_heredity_filter(&[ab], Heredity::None), vec![ab]);
        assert!(apply_heredity_filter(&[ab], Heredity::Weak).is_empty());
        let b = Effect::Main(1);
        assert_eq!(apply_heredity_filter(&[a, b, ab], Heredity::Strong), vec![a, b, ab]);
    }

    #[test]
    fn full_subsets_when_nint_is_everything() {
        let subsets = sample_interaction_subsets(3, 4, 10, 5).unwrap();
        for s in subsets {
            assert_eq!(s, all_interactions(5));
        }
    }

    #[test]
    fn subsets_are_deterministic() {
        let a = sample_interaction_subsets(42, 30, 6, 8).unwrap();
        let b = sample_interaction_subsets(42, 30, 6, 8).unwrap();
        assert_eq!(a, b);
        let c = sample_interaction_subsets(43, 30, 6, 8).unwrap();
        assert_ne!(a, c);
        for s in &a {
            assert_eq!(s.len(), 6);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn config_validation() {
        let mut c = default_config(12, 7, 1).unwrap();
        assert!(c.validate(7).is_ok());
        c.ntop = 22;
        assert!(c.validate(7).is_err());
        let mut c = default_config(12, 7, 1).unwrap();
        c.nint = 22;
        assert!(c.validate(7).is_err());
        let mut c = default_config(12, 7, 1).unwrap();
        c.pkeep = 0.0;
        assert!(c.validate(7).is_err());
    }

    #[test]
    fn heredity_parses() {
        assert_eq!("weak".parse::<Heredity>().unwrap(), Heredity::Weak);
        assert_eq!("STRONG".parse::<Heredity>().unwrap(), Heredity::Strong);
        assert!("medium".parse::<Heredity>().is_err());
    }
}
