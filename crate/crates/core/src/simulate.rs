//! Monte-Carlo power/error studies over the seven standard scenarios.
//!
//! Every iteration draws its truth and response from its own generator,
//! seeded from `(master seed, scenario, iteration)`, so results do not depend
//! on how iterations are scheduled across threads.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{all_interactions, Design, Effect};
use crate::error::{Result, ScreeningError};
use crate::gds::{gds_all_2fi, gds_main_effects};
use crate::gdsarm::{gds_arm, important_factors, GdsArmConfig, Heredity, ScreeningResult};
use crate::io::format_sig6;

/// Active (main, interaction) counts of scenarios S1..S7.
pub const SCENARIO_COUNTS: [(usize, usize); 7] = [(3, 0), (4, 0), (5, 0), (3, 1), (4, 1), (3, 2), (4, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// 1-based scenario number.
    pub id: usize,
    pub c1: usize,
    pub c2: usize,
    pub effect_mean: f64,
    pub effect_sd: f64,
    pub noise_sd: f64,
    pub truth_heredity: Heredity,
}

impl Scenario {
    /// Scenario `S<id>` with effects from N(5, 1), unit noise and weak
    /// heredity.
    pub fn standard(id: usize) -> Result<Scenario> {
        if !(1..=7).contains(&id) {
            return Err(ScreeningError::InvalidConfig(format!("unknown scenario S{id}")));
        }
        let (c1, c2) = SCENARIO_COUNTS[id - 1];
        Ok(Scenario {
            id,
            c1,
            c2,
            effect_mean: 5.0,
            effect_sd: 1.0,
            noise_sd: 1.0,
            truth_heredity: Heredity::Weak,
        })
    }

    pub fn name(&self) -> String {
        format!("S{}", self.id)
    }

    /// Parses `"S3"` (or `"3"`).
    pub fn parse(label: &str) -> Result<Scenario> {
        let t = label.trim();
        let digits = t.strip_prefix(['S', 's']).unwrap_or(t);
        let id = digits
            .parse::<usize>()
            .map_err(|_| ScreeningError::InvalidConfig(format!("unknown scenario {label:?}")))?;
        Scenario::standard(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub effects: Vec<(Effect, f64)>,
    pub intercept: f64,
    pub important_factors: Vec<usize>,
}

fn signed_draw<R: Rng + ?Sized>(rng: &mut R, dist: &Normal<f64>) -> f64 {
    let v = dist.sample(rng);
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Draws `c1` mains uniformly, then `c2` interactions uniformly from the
/// pairs allowed by the scenario's heredity, then a signed N(mean, sd)
/// coefficient for each effect in that order and finally the intercept.
pub fn generate_truth<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario, m: usize) -> Result<TrueModel> {
    if scenario.c1 > m {
        return Err(ScreeningError::InfeasibleTruth(format!(
            "{} active mains requested with {m} factors",
            scenario.c1
        )));
    }
    let mut mains = sample(rng, m, scenario.c1).into_vec();
    mains.sort_unstable();
    let active: BTreeSet<usize> = mains.iter().copied().collect();
    let legal: Vec<Effect> = all_interactions(m)
        .into_iter()
        .filter(|e| match (*e, scenario.truth_heredity) {
            (Effect::Interaction(i, j), Heredity::Weak) => active.contains(&i) || active.contains(&j),
            (Effect::Interaction(i, j), Heredity::Strong) => active.contains(&i) && active.contains(&j),
            _ => true,
        })
        .collect();
    if legal.len() < scenario.c2 {
        return Err(ScreeningError::InfeasibleTruth(format!(
            "only {} interactions satisfy {} heredity, need {}",
            legal.len(),
            scenario.truth_heredity,
            scenario.c2
        )));
    }
    let mut picks = sample(rng, legal.len(), scenario.c2).into_vec();
    picks.sort_unstable();

    let dist = Normal::new(scenario.effect_mean, scenario.effect_sd)
        .map_err(|e| ScreeningError::InvalidConfig(e.to_string()))?;
    let mut effects: Vec<(Effect, f64)> = Vec::with_capacity(scenario.c1 + scenario.c2);
    for i in mains {
        effects.push((Effect::Main(i), signed_draw(rng, &dist)));
    }
    for k in picks {
        effects.push((legal[k], signed_draw(rng, &dist)));
    }
    let intercept = signed_draw(rng, &dist);
    let list: Vec<Effect> = effects.iter().map(|(e, _)| *e).collect();
    Ok(TrueModel {
        important_factors: important_factors(&list),
        effects,
        intercept,
    })
}

/// `y = intercept + sum coef * x(effect) + noise` on the raw `-1/+1` coding.
pub fn generate_response<R: Rng + ?Sized>(design: &Design, truth: &TrueModel, noise_sd: f64, rng: &mut R) -> Result<Vec<f64>> {
    let noise = Normal::new(0.0, noise_sd).map_err(|e| ScreeningError::InvalidConfig(e.to_string()))?;
    let cols = truth
        .effects
        .iter()
        .map(|(e, _)| design.effect_column(e))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..design.runs())
        .map(|r| {
            let mean: f64 = truth.intercept
                + truth
                    .effects
                    .iter()
                    .zip(&cols)
                    .map(|((_, c), col)| c * col[r])
                    .sum::<f64>();
            mean + noise.sample(rng)
        })
        .collect())
}

/// Fraction of important factors declared, and fraction of unimportant
/// factors declared. Power is 1 when nothing is important.
pub fn power_error(declared: &[usize], important: &[usize], m: usize) -> (f64, f64) {
    let declared: BTreeSet<usize> = declared.iter().copied().collect();
    let important: BTreeSet<usize> = important.iter().copied().collect();
    let hits = declared.intersection(&important).count();
    let false_pos = declared.difference(&important).count();
    let power = if important.is_empty() {
        1.0
    } else {
        hits as f64 / important.len() as f64
    };
    let inactive = m - important.len();
    let error = if inactive == 0 {
        0.0
    } else {
        false_pos as f64 / inactive as f64
    };
    (power, error)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    GdsMain,
    GdsAll2fi,
    /// GDS-ARM; the seed inside the config is replaced per iteration.
    GdsArm(GdsArmConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::GdsMain => "gds-m",
            Method::GdsAll2fi => "gds-m2fi",
            Method::GdsArm(c) => match c.heredity {
                Heredity::None => "gds-arm",
                Heredity::Weak => "gds-arm-weak",
                Heredity::Strong => "gds-arm-strong",
            },
        }
    }

    /// Runs the method on one response. `seed` drives GDS-ARM's subsets.
    pub fn screen(&self, design: &Design, y: &[f64], seed: u64) -> Result<ScreeningResult> {
        match self {
            Method::GdsMain => gds_main_effects(design, y),
            Method::GdsAll2fi => gds_all_2fi(design, y),
            Method::GdsArm(cfg) => {
                let cfg = GdsArmConfig { seed, ..*cfg };
                gds_arm(design, y, &cfg)
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of iteration `t` of scenario `scenario_id` under `master_seed`.
pub fn iteration_seed(master_seed: u64, scenario_id: usize, t: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ scenario_id as u64) ^ t as u64)
}

/// One simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimInstance {
    pub truth: TrueModel,
    pub y: Vec<f64>,
    /// Seed handed to randomized methods.
    pub method_seed: u64,
}

pub fn simulate_instance(design: &Design, scenario: &Scenario, seed: u64) -> Result<SimInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = generate_truth(&mut rng, scenario, design.factors())?;
    let y = generate_response(design, &truth, scenario.noise_sd, &mut rng)?;
    let method_seed = rng.next_u64();
    Ok(SimInstance { truth, y, method_seed })
}

/// Per-iteration outcome: `(power, error)` or the failure message.
pub type IterationOutcome = std::result::Result<(f64, f64), String>;

/// Runs `method` on `iterations` simulated responses and returns the
/// per-iteration outcomes in iteration order.
pub fn run_iterations(
    design: &Design,
    scenario: &Scenario,
    method: &Method,
    iterations: usize,
    master_seed: u64,
) -> Vec<IterationOutcome> {
    (0..iterations)
        .into_par_iter()
        .map(|t| {
            let inst = simulate_instance(design, scenario, iteration_seed(master_seed, scenario.id, t))
                .map_err(|e| e.to_string())?;
            let res = method
                .screen(design, &inst.y, inst.method_seed)
                .map_err(|e| e.to_string())?;
            Ok(power_error(
                &res.important_factors,
                &inst.truth.important_factors,
                design.factors(),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub scenario: String,
    pub method: String,
    pub power: f64,
    pub error: f64,
    /// Iterations that completed and enter the means.
    pub iterations: usize,
    pub failures: usize,
    pub seed: u64,
}

/// Averages power and error over completed iterations (in iteration order).
pub fn summarize(scenario: &Scenario, method: &Method, outcomes: &[IterationOutcome], seed: u64) -> SimRow {
    let ok: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
    let k = ok.len();
    let (mut ps, mut es) = (0.0, 0.0);
    for (p, e) in &ok {
        ps += p;
        es += e;
    }
    let (power, error) = if k == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (ps / k as f64, es / k as f64)
    };
    SimRow {
        scenario: scenario.name(),
        method: method.name().to_string(),
        power,
        error,
        iterations: k,
        failures: outcomes.len() - k,
        seed,
    }
}

pub fn run_scenario(
    design: &Design,
    scenario: &Scenario,
    method: &Method,
    iterations: usize,
    master_seed: u64,
) -> Result<SimRow> {
    if iterations == 0 {
        return Err(ScreeningError::InvalidConfig("iterations must be at least 1".into()));
    }
    if let Method::GdsArm(cfg) = method {
        cfg.validate(design.factors())?;
    }
    let outcomes = run_iterations(design, scenario, method, iterations, master_seed);
    Ok(summarize(scenario, method, &outcomes, master_seed))
}

/// One row per scenario x method, scenarios outermost.
pub fn run_simulation(
    design: &Design,
    scenarios: &[Scenario],
    methods: &[Method],
    iterations: usize,
    master_seed: u64,
) -> Result<Vec<SimRow>> {
    let mut rows = Vec::with_capacity(scenarios.len() * methods.len());
    for s in scenarios {
        for meth in methods {
            rows.push(run_scenario(design, s, meth, iterations, master_seed)?);
        }
    }
    Ok(rows)
}

/// `scenario,method,power,error,iterations,seed` with a header line.
pub fn sim_rows_to_csv(rows: &[SimRow]) -> String {
    let mut out = String::from("scenario,method,power,error,iterations,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scenario,
            r.method,
            format_sig6(r.power),
            format_sig6(r.error),
            r.iterations,
            r.seed
        ));
    }
    out
}
