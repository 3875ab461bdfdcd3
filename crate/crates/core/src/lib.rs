//! Factor screening for two-level supersaturated designs with the
//! Gauss-Dantzig selector and its aggregation over random interaction
//! subsets (GDS-ARM).

pub mod dantzig;
pub mod design;
pub mod error;
pub mod gds;
pub mod gdsarm;
pub mod io;
pub mod linreg;
pub mod lp;
pub mod simulate;
pub mod stepwise;

pub use dantzig::{dantzig_select, delta_grid, orthogonal_dantzig_oracle, DantzigSolution};
pub use design::{build_model_matrix, effect_label, Design, Effect, ModelMatrix};
pub use error::{Result, ScreeningError};
pub use gds::{gds_all_2fi, gds_main_effects, gds_run, split_two_means, GdsFit, Thresholding};
pub use gdsarm::{default_config, gds_arm, GdsArmConfig, Heredity, ScreeningResult};
pub use linreg::{bic, natural_coefficients, ols_fit, OlsFit};
pub use simulate::{Method, Scenario, SimRow};
pub use stepwise::{stepwise_regress, StepwiseConfig};
