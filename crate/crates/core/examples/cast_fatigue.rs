//! Screens the cast fatigue data with all three methods.
//!
//! Run from the repository root: `cargo run -p screening-core --example cast_fatigue`.

use screening_core::io::{load_design_csv, load_response_csv};
use screening_core::*;

fn main() -> Result<()> {
    let design = load_design_csv("data/cast_fatigue_design.csv", false)?;
    let y = load_response_csv("data/cast_fatigue_response.csv", design.runs())?;
    let show = |name: &str, r: &ScreeningResult| {
        let effects: Vec<String> = r.active_effects.iter().map(|e| design.label(e)).collect();
        println!("{name:<9} {:<16} R2 {:.3}", effects.join(", "), r.final_fit.r_squared());
    };
    show("gds-m", &gds_main_effects(&design, &y)?);
    show("gds-m2fi", &gds_all_2fi(&design, &y)?);
    show("gds-arm", &gds_arm(&design, &y, &default_config(design.runs(), design.factors(), 1)?)?);
    Ok(())
}
