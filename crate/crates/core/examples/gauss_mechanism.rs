// Sign-Gaussian mechanism: calibrate sigma, then search for the worst-case
// privacy loss around a few model differences. Halving sigma breaks the
// guarantee.

use dp_rsa::dp::{calibrate_sigma, worst_case_gauss_pl, PrivacyBudget, Sensitivity};

pub struct GaussSummary {
    pub sigma: f64,
    pub worst_calibrated: f64,
    pub worst_halved: f64,
    pub epsilon: f64,
}

pub fn run_example() -> dp_rsa::Result<GaussSummary> {
    let epsilon = 1.0;
    // alpha = 0.01 and gradients clipped to norm 1.
    let sens = Sensitivity::from_step_and_clip(0.01, 1.0)?;
    let bound = 6.0 * sens.delta_u() / epsilon;
    let sigma = calibrate_sigma(PrivacyBudget::new(epsilon)?, sens, bound, 0.05)?.sigma();
    let us = [vec![0.0, 0.0], vec![bound, -bound], vec![0.3 * bound, bound]];
    let mut worst_calibrated = 0f64;
    let mut worst_halved = 0f64;
    for u in &us {
        worst_calibrated = worst_calibrated.max(worst_case_gauss_pl(u, sens, sigma, 32)?.pl);
        worst_halved = worst_halved.max(worst_case_gauss_pl(u, sens, sigma / 2.0, 32)?.pl);
    }
    Ok(GaussSummary {
        sigma,
        worst_calibrated,
        worst_halved,
        epsilon,
    })
}

fn main() -> dp_rsa::Result<()> {
    let s = run_example()?;
    println!("sigma = {:.6} for epsilon = {}", s.sigma, s.epsilon);
    println!("worst privacy loss, calibrated: {:.4}", s.worst_calibrated);
    println!("worst privacy loss, sigma / 2:  {:.4}", s.worst_halved);
    Ok(())
}
