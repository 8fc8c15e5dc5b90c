//! Executable privacy checks behind `verify-dp`.

use std::fmt::Write;

use rand::Rng;

use super::csv::{fmt_f64, VERIFY_HEADER};
use crate::dp::{calibrate_gamma, calibrate_sigma, exact_flip_pl, worst_case_gauss_pl, PrivacyBudget, Sensitivity};
use crate::error::Result;
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MechanismKind {
    Flip,
    Gauss,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    pub dims: Vec<usize>,
    pub trials: usize,
    /// Multiplies the calibrated σ; below 1 deliberately breaks calibration.
    pub sigma_scale: f64,
    pub delta_u: f64,
    /// Entry bound on `u`; defaults to `6Δu/ε`, where both terms of the
    /// calibration coincide.
    pub u_entry_bound: Option<f64>,
    pub margin: f64,
    pub resolution: usize,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn new(mechanism: MechanismKind, epsilon: f64) -> Self {
        Self {
            mechanism,
            epsilon,
            dims: vec![1, 2, 3],
            trials: 100,
            sigma_scale: 1.0,
            delta_u: 0.02,
            u_entry_bound: None,
            margin: 0.05,
            resolution: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRow {
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    /// γ for flip, σ for gauss.
    pub parameter: f64,
    pub dim: usize,
    pub observed_worst_pl: f64,
    pub pass: bool,
}

/// Flip: one row with the exact loss of the calibrated γ, passing when it
/// equals ε to rounding. Gauss: one row per dimension with the largest loss
/// over `trials` vectors `u` drawn from the entry-bound box (the first trials
/// are the box centre and corners), passing when it stays below ε.
pub fn verify_dp(opts: &VerifyOptions) -> Result<Vec<VerifyRow>> {
    let budget = PrivacyBudget::new(opts.epsilon)?;
    match opts.mechanism {
        MechanismKind::Flip => {
            let mech = calibrate_gamma(budget);
            let pl = exact_flip_pl(mech);
            Ok(vec![VerifyRow {
                mechanism: MechanismKind::Flip,
                epsilon: opts.epsilon,
                parameter: mech.gamma(),
                dim: 1,
                observed_worst_pl: pl,
                pass: (pl - opts.epsilon).abs() <= 1e-12 * opts.epsilon.max(1.0),
            }])
        }
        MechanismKind::Gauss => {
            let sens = Sensitivity::new(opts.delta_u)?;
            let bound = opts.u_entry_bound.unwrap_or(6.0 * opts.delta_u / opts.epsilon);
            let sigma = calibrate_sigma(budget, sens, bound, opts.margin)?.sigma() * opts.sigma_scale;
            let mut rows = Vec::with_capacity(opts.dims.len());
            for &d in &opts.dims {
                let mut rng = stream(opts.seed, Purpose::Verify, d, 0);
                let mut worst = f64::NEG_INFINITY;
                for trial in 0..opts.trials {
                    let u: Vec<f64> = match trial {
                        0 => vec![0.0; d],
                        1 => vec![bound; d],
                        2 => (0..d).map(|i| if i % 2 == 0 { bound } else { -bound }).collect(),
                        _ => (0..d).map(|_| rng.random_range(-bound..=bound)).collect(),
                    };
                    worst = worst.max(worst_case_gauss_pl(&u, sens, sigma, opts.resolution)?.pl);
                }
                rows.push(VerifyRow {
                    mechanism: MechanismKind::Gauss,
                    epsilon: opts.epsilon,
                    parameter: sigma,
                    dim: d,
                    observed_worst_pl: worst,
                    pass: worst < opts.epsilon,
                });
            }
            Ok(rows)
        }
    }
}

pub fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = format!("{VERIFY_HEADER}\n");
    for r in rows {
        let name = match r.mechanism {
            MechanismKind::Flip => "flip",
            MechanismKind::Gauss => "gauss",
        };
        let _ = writeln!(
            out,
            "{name},{},{},{},{}",
            fmt_f64(r.epsilon),
            fmt_f64(r.parameter),
            fmt_f64(r.observed_worst_pl),
            r.pass
        );
    }
    out
}
