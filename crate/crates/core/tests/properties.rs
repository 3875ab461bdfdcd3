mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use screening_core::design::all_main_effects;
use screening_core::gds::lloyd_two_means;
use screening_core::gdsarm::{aggregate_top_models, apply_heredity_filter};
use screening_core::io::{parse_design_csv, plackett_burman_columns, write_design_csv};
use screening_core::simulate::generate_truth;
use screening_core::*;

fn pm1_matrix(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<i8>>> {
    prop::collection::vec(prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), m), n)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn noise(rng: &mut ChaCha8Rng) -> f64 {
    rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, rng)
}

fn non_constant(rows: &[Vec<i8>]) -> bool {
    let m = rows[0].len();
    (0..m).all(|j| rows.iter().any(|r| r[j] != rows[0][j]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_are_orthogonal_to_fitted_columns(
        rows in pm1_matrix(12, 4),
        y in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        prop_assume!(non_constant(&rows));
        let design = Design::new(rows, None).unwrap();
        let matrix = build_model_matrix(&design, &all_main_effects(4), &y).unwrap();
        if let Ok(fit) = ols_fit(&matrix, &[0, 1, 2, 3]) {
            let resid: Vec<f64> = (0..12)
                .map(|r| matrix.y()[r] - (0..4).map(|j| matrix.column(j)[r] * fit.coefficients[j]).sum::<f64>())
                .collect();
            for j in 0..4 {
                prop_assert!(dot(&resid, matrix.column(j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn adding_a_column_never_raises_rss(
        rows in pm1_matrix(10, 5),
        y in prop::collection::vec(-5.0f64..5.0, 10),
        k in 0usize..5,
    ) {
        prop_assume!(non_constant(&rows));
        let design = Design::new(rows, None).unwrap();
        let matrix = build_model_matrix(&design, &all_main_effects(5), &y).unwrap();
        let small: Vec<usize> = (0..k).collect();
        let big: Vec<usize> = (0..=k).collect();
        if let (Ok(a), Ok(b)) = (ols_fit(&matrix, &small), ols_fit(&matrix, &big)) {
            prop_assert!(b.rss <= a.rss + 1e-9 * (1.0 + a.rss));
        }
    }

    #[test]
    fn l1_norm_shrinks_along_the_delta_grid(
        rows in pm1_matrix(10, 6),
        y in prop::collection::vec(-5.0f64..5.0, 10),
    ) {
        prop_assume!(non_constant(&rows));
        let design = Design::new(rows, None).unwrap();
        let matrix = build_model_matrix(&design, &all_main_effects(6), &y).unwrap();
        let grid = delta_grid(&matrix).unwrap();
        let norms: Vec<f64> = screening_core::dantzig::dantzig_path(&matrix, &grid)
            .into_iter()
            .map(|s| s.unwrap().l1_norm())
            .collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-7, "{norms:?}");
        }
    }

    #[test]
    fn two_means_is_optimal(values in prop::collection::vec(0.0f64..10.0, 1..=12)) {
        let s = split_two_means(&values);
        let brute = common::brute_force_two_means_sse(&values);
        prop_assert!((s.sse - brute).abs() < 1e-9);
        let mut all: Vec<usize> = s.low.iter().chain(&s.high).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..values.len()).collect::<Vec<_>>());
    }

    #[test]
    fn lloyd_stops_at_a_fixed_point(values in prop::collection::vec(0.0f64..10.0, 2..=16)) {
        let s = lloyd_two_means(&values);
        prop_assert!(s.sse + 1e-9 >= split_two_means(&values).sse);
        if !s.low.is_empty() && !s.high.is_empty() {
            let mean = |idx: &[usize]| idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64;
            let (cl, ch) = (mean(&s.low), mean(&s.high));
            prop_assert!(cl < ch);
            let mid = 0.5 * (cl + ch);
            prop_assert!(s.low.iter().all(|&i| values[i] <= mid));
            prop_assert!(s.high.iter().all(|&i| values[i] > mid));
        }
    }

    #[test]
    fn gds_selection_follows_factor_permutations(
        seed in 0u64..1000,
        perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let design = plackett_burman_columns(12, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..12)
            .map(|r| 3.0 * design.setting(r, 1) as f64 - 2.0 * design.setting(r, 4) as f64
                + noise(&mut rng) * 0.5)
            .collect();
        let permuted = design.permute_factors(&perm).unwrap();
        let a = gds_main_effects(&design, &y).unwrap();
        let b = gds_main_effects(&permuted, &y).unwrap();
        // Column k of the permuted design is column perm[k] of the original.
        let mut mapped: Vec<usize> = b.important_factors.iter().map(|&k| perm[k]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, a.important_factors);
    }

    #[test]
    fn raising_pkeep_never_enlarges_the_aggregate(
        seed in 0u64..500,
        lo in 0.05f64..1.0,
        hi in 0.05f64..1.0,
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let design = plackett_burman_columns(12, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..12)
            .map(|r| 2.0 * design.setting(r, 0) as f64
                + noise(&mut rng))
            .collect();
        let cfg = GdsArmConfig { nrep: 12, nint: 3, ntop: 8, ..default_config(12, 6, seed).unwrap() };
        let fits = arm_fits(&design, &y, &cfg);
        let small = aggregate_top_models(&fits, cfg.ntop, hi).effects;
        let large = aggregate_top_models(&fits, cfg.ntop, lo).effects;
        prop_assert!(small.iter().all(|e| large.contains(e)));
    }

    #[test]
    fn generated_truth_respects_heredity(seed in 0u64..10_000, id in 1usize..=7, strong in any::<bool>()) {
        let mut sc = Scenario::standard(id).unwrap();
        if strong {
            sc.truth_heredity = Heredity::Strong;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = generate_truth(&mut rng, &sc, 16).unwrap();
        let effects: Vec<Effect> = truth.effects.iter().map(|(e, _)| *e).collect();
        prop_assert_eq!(apply_heredity_filter(&effects, sc.truth_heredity), effects.clone());
        prop_assert_eq!(effects.iter().filter(|e| e.is_main()).count(), sc.c1);
        prop_assert_eq!(effects.iter().filter(|e| e.is_interaction()).count(), sc.c2);
        for (_, b) in &truth.effects {
            prop_assert!(b.abs() > 0.0);
        }
    }

    #[test]
    fn design_csv_round_trips(rows in pm1_matrix(6, 5)) {
        let design = Design::new(rows, None).unwrap();
        let back = parse_design_csv(&write_design_csv(&design), false).unwrap();
        prop_assert_eq!(back, design);
    }
}

/// Per-repetition fits of GDS-ARM, rebuilt from public pieces.
fn arm_fits(design: &Design, y: &[f64], cfg: &GdsArmConfig) -> Vec<GdsFit> {
    use screening_core::design::all_effects;
    use screening_core::gdsarm::sample_interaction_subsets;
    let m = design.factors();
    let subsets = sample_interaction_subsets(cfg.seed, cfg.nrep, cfg.nint, m).unwrap();
    let full = build_model_matrix(design, &all_effects(m), y).unwrap();
    subsets
        .iter()
        .map(|s| {
            let mut cols: Vec<usize> = (0..m).collect();
            cols.extend(s.iter().map(|e| full.position(e).unwrap()));
            gds_run(&full.select(&cols), Thresholding::Clustering).unwrap().best
        })
        .collect()
}

#[test]
fn gds_is_idempotent_on_its_own_refit() {
    // Feeding the fitted values of a GDS(m) model back in selects the same model.
    let design = plackett_burman_columns(12, 7).unwrap();
    let y: Vec<f64> = (0..12)
        .map(|r| 4.0 * design.setting(r, 2) as f64 + 2.5 * design.setting(r, 5) as f64 + 0.1 * ((r * 3 % 5) as f64))
        .collect();
    let first = gds_main_effects(&design, &y).unwrap();
    let (b0, b) = natural_coefficients(&design, &y, &first.final_fit).unwrap();
    let fitted: Vec<f64> = (0..12)
        .map(|r| {
            b0 + first
                .active_effects
                .iter()
                .zip(&b)
                .map(|(e, bj)| bj * design.effect_column(e).unwrap()[r])
                .sum::<f64>()
        })
        .collect();
    let second = gds_main_effects(&design, &fitted).unwrap();
    assert_eq!(first.active_effects, second.active_effects);
    assert_eq!(gds_main_effects(&design, &y).unwrap(), first);
}
