//! Fixed-schema CSV emission. Floats carry 17 significant digits so files
//! are byte-reproducible and round-trip exactly.

use std::fmt::Write;

use crate::fedsim::{RoundLog, SimConfig};

pub const RUN_HEADER: &str = "round,loss,accuracy,epsilon_round,algo,attack,seed";
pub const SWEEP_HEADER: &str = "param,value,seed,round,loss,accuracy,epsilon_round,algo,attack";
pub const VERIFY_HEADER: &str = "mechanism,epsilon,parameter,observed_worst_pl,pass";
pub const MOREAU_COLUMN: &str = "moreau_grad_sq";

pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn round_fields(out: &mut String, log: &RoundLog, cfg: &SimConfig) {
    let _ = write!(
        out,
        "{},{},{},{},{},{}",
        log.round,
        fmt_f64(log.train_loss),
        fmt_opt(log.test_accuracy),
        fmt_f64(log.epsilon_round),
        cfg.algorithm.name(),
        cfg.attack_name()
    );
}

/// One row per round.
pub fn run_csv(logs: &[RoundLog], cfg: &SimConfig) -> String {
    let moreau = cfg.moreau.is_some();
    let mut out = String::from(RUN_HEADER);
    if moreau {
        out.push(',');
        out.push_str(MOREAU_COLUMN);
    }
    out.push('\n');
    for log in logs {
        round_fields(&mut out, log, cfg);
        let _ = write!(out, ",{}", cfg.seed);
        if moreau {
            out.push(',');
            out.push_str(&fmt_opt(log.moreau_grad_sq));
        }
        out.push('\n');
    }
    out
}

/// One finished run of a sweep.
pub struct SweepRun<'a> {
    pub value: f64,
    pub cfg: &'a SimConfig,
    pub logs: &'a [RoundLog],
}

/// Long format: one row per (value, seed, round), in the order given.
pub fn sweep_csv(param: &str, runs: &[SweepRun<'_>], moreau: bool) -> String {
    let mut out = String::from(SWEEP_HEADER);
    if moreau {
        out.push(',');
        out.push_str(MOREAU_COLUMN);
    }
    out.push('\n');
    for run in runs {
        for log in run.logs {
            let _ = write!(out, "{param},{},{},", fmt_f64(run.value), run.cfg.seed);
            round_fields(&mut out, log, run.cfg);
            if moreau {
                out.push(',');
                out.push_str(&fmt_opt(log.moreau_grad_sq));
            }
            out.push('\n');
        }
    }
    out
}
