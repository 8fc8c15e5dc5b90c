//! Sign-perturbation mechanisms, their budget calibration, and an exact
//! privacy-loss oracle.

mod mechanism;
mod normal;
mod privacy;

pub use mechanism::{
    calibrate_gamma, calibrate_sigma, exact_flip_pl, flip_perturb, gauss_perturb, FlipMechanism, Mechanism,
    PrivacyBudget, Sensitivity, SignGaussMechanism,
};
pub use normal::{log_norm_cdf, norm_cdf};
pub use privacy::{exact_gauss_pl, worst_case_gauss_pl, WorstCase, MAX_EXHAUSTIVE_DIM, MIN_RESOLUTION};
