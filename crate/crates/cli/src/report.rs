use serde::Serialize;

use screening_core::design::{effect_label, parse_effect, Design, Effect};
use screening_core::gdsarm::{GdsArmConfig, ScreeningResult};
use screening_core::io::format_sig6;
use screening_core::linreg::{coefficient_p_values, natural_coefficients, ols_fit_effects};
use screening_core::{build_model_matrix, Result, ScreeningError};

/// Machine-readable result of `analyze`. Mirrors
/// `schemas/analysis_report.schema.json`.
#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub method: String,
    pub runs: usize,
    pub factors: usize,
    pub factor_names: Vec<String>,
    pub seed: Option<u64>,
    pub config: Option<ConfigReport>,
    pub active_effects: Vec<String>,
    pub important_factors: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<CoefficientReport>,
    pub r_squared: f64,
    pub bic: f64,
    pub diagnostics: Option<DiagnosticsReport>,
    pub comparisons: Vec<ComparisonReport>,
}

#[derive(Debug, Serialize)]
pub struct ConfigReport {
    pub nrep: usize,
    pub nint: usize,
    pub ntop: usize,
    pub pkeep: f64,
    pub heredity: String,
    pub p_enter: f64,
    pub p_remove: f64,
}

impl From<&GdsArmConfig> for ConfigReport {
    fn from(c: &GdsArmConfig) -> Self {
        ConfigReport {
            nrep: c.nrep,
            nint: c.nint,
            ntop: c.ntop,
            pkeep: c.pkeep,
            heredity: c.heredity.to_string(),
            p_enter: c.stepwise.p_enter,
            p_remove: c.stepwise.p_remove,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CoefficientReport {
    pub effect: String,
    /// Coefficient on the -1/+1 coding.
    pub estimate: f64,
    /// Two-sided t-test p-value; absent when no residual degrees of freedom remain.
    pub p_value: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EffectCount {
    pub effect: String,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsReport {
    pub top_model_counts: Vec<EffectCount>,
    pub threshold: usize,
    pub aggregated: Vec<String>,
    pub failed_repetitions: usize,
    pub stepwise_steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub effects: Vec<String>,
    pub r_squared: f64,
    pub bic: f64,
}

/// Parses a comparison model such as `"F,FG,AE"` into effects.
pub fn parse_model(text: &str, names: &[String]) -> Result<Vec<Effect>> {
    let effects: Vec<Effect> = text
        .split([',', '+', ' '])
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_effect(t.trim(), names))
        .collect::<Result<_>>()?;
    if effects.is_empty() {
        return Err(ScreeningError::InvalidConfig(format!("empty comparison model {text:?}")));
    }
    Ok(effects)
}

pub fn build_report(
    design: &Design,
    y: &[f64],
    method: &str,
    seed: Option<u64>,
    config: Option<&GdsArmConfig>,
    result: &ScreeningResult,
    comparisons: &[Vec<Effect>],
) -> Result<AnalysisReport> {
    let names = design.names();
    let label = |e: &Effect| effect_label(e, names);
    let fit = &result.final_fit;
    let (intercept, estimates) = natural_coefficients(design, y, fit)?;
    let p_values: Vec<Option<f64>> = match coefficient_p_values(fit) {
        Ok(p) => p.into_iter().map(Some).collect(),
        Err(ScreeningError::SaturatedModel) => vec![None; fit.k()],
        Err(e) => return Err(e),
    };
    let coefficients = fit
        .effects
        .iter()
        .zip(estimates)
        .zip(p_values)
        .map(|((e, estimate), p_value)| CoefficientReport {
            effect: label(e),
            estimate,
            p_value,
        })
        .collect();

    let diagnostics = result.diagnostics.as_ref().map(|d| {
        let mut counts: Vec<&(Effect, usize)> = d.top_counts.iter().collect();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        DiagnosticsReport {
            top_model_counts: counts
                .into_iter()
                .map(|(e, c)| EffectCount {
                    effect: label(e),
                    count: *c,
                })
                .collect(),
            threshold: d.threshold,
            aggregated: d.aggregated.iter().map(label).collect(),
            failed_repetitions: d.failed_reps,
            stepwise_steps: d.stepwise_steps,
            warnings: d.warnings.clone(),
        }
    });

    let mut comparison_reports = Vec::with_capacity(comparisons.len());
    if !comparisons.is_empty() {
        let mut effects: Vec<Effect> = comparisons.iter().flatten().copied().collect();
        effects.sort_unstable();
        effects.dedup();
        let matrix = build_model_matrix(design, &effects, y)?;
        for model in comparisons {
            let f = ols_fit_effects(&matrix, model)?;
            comparison_reports.push(ComparisonReport {
                effects: model.iter().map(label).collect(),
                r_squared: f.r_squared(),
                bic: f.bic(),
            });
        }
    }

    Ok(AnalysisReport {
        method: method.to_string(),
        runs: design.runs(),
        factors: design.factors(),
        factor_names: names.to_vec(),
        seed,
        config: config.map(ConfigReport::from),
        active_effects: result.active_effects.iter().map(label).collect(),
        important_factors: result.important_factors.iter().map(|&i| names[i].clone()).collect(),
        intercept,
        coefficients,
        r_squared: fit.r_squared(),
        bic: fit.bic(),
        diagnostics,
        comparisons: comparison_reports,
    })
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "(none)".into()
    } else {
        items.join(", ")
    }
}

pub fn render_human(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("method: {} ({} runs, {} factors)", r.method, r.runs, r.factors));
    if let Some(c) = &r.config {
        line(format!(
            "config: nrep {}, nint {}, ntop {}, pkeep {}, heredity {}, p-enter {}, p-remove {}",
            c.nrep, c.nint, c.ntop, c.pkeep, c.heredity, c.p_enter, c.p_remove
        ));
    }
    if let Some(seed) = r.seed {
        line(format!("seed: {seed}"));
    }
    line(format!("active effects: {}", list(&r.active_effects)));
    line(format!("important factors: {}", list(&r.important_factors)));
    line(format!("R^2: {:.1}%", 100.0 * r.r_squared));
    line("coefficients:".into());
    line(format!("  {:<12} {:>12}", "(intercept)", format_sig6(r.intercept)));
    for c in &r.coefficients {
        let p = c.p_value.map_or_else(|| "-".to_string(), format_sig6);
        line(format!("  {:<12} {:>12}   p = {p}", c.effect, format_sig6(c.estimate)));
    }
    if let Some(d) = &r.diagnostics {
        let counts: Vec<String> = d
            .top_model_counts
            .iter()
            .map(|c| format!("{} {}", c.effect, c.count))
            .collect();
        line(format!("top-model counts (keep at >= {}): {}", d.threshold, list(&counts)));
        line(format!("aggregated before stepwise: {}", list(&d.aggregated)));
        if d.failed_repetitions > 0 {
            line(format!("failed repetitions: {}", d.failed_repetitions));
        }
        for w in &d.warnings {
            line(format!("warning: {w}"));
        }
    }
    if !r.comparisons.is_empty() {
        line("comparison models:".into());
        for c in &r.comparisons {
            line(format!("  {:<20} R^2 {:.1}%", c.effects.join(", "), 100.0 * c.r_squared));
        }
    }
    out
}

/// One row per model term: `term,estimate,p_value`.
pub fn render_csv(r: &AnalysisReport) -> String {
    let mut out = String::from("term,estimate,p_value\n");
    out.push_str(&format!("(intercept),{},\n", format_sig6(r.intercept)));
    for c in &r.coefficients {
        let p = c.p_value.map(format_sig6).unwrap_or_default();
        out.push_str(&format!("{},{},{p}\n", c.effect, format_sig6(c.estimate)));
    }
    out
}
