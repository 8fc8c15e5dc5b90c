// Randomized-response sign flipping: calibrate the keep probability for a
// privacy budget and check the flip rate empirically.

use dp_rsa::dp::{calibrate_gamma, exact_flip_pl, flip_perturb, PrivacyBudget};
use dp_rsa::paramcore::SignVector;
use dp_rsa::rng::{stream, Purpose};

pub struct FlipSummary {
    pub gamma: f64,
    pub privacy_loss: f64,
    pub kept_fraction: f64,
}

pub fn run_example() -> dp_rsa::Result<FlipSummary> {
    let mech = calibrate_gamma(PrivacyBudget::new(4f64.ln())?);
    let signs = SignVector::ones(100_000);
    let out = flip_perturb(&signs, mech, &mut stream(0, Purpose::Mechanism, 0, 0));
    let kept = out.signs().iter().filter(|&&s| s == 1).count() as f64 / signs.len() as f64;
    Ok(FlipSummary {
        gamma: mech.gamma(),
        privacy_loss: exact_flip_pl(mech),
        kept_fraction: kept,
    })
}

fn main() -> dp_rsa::Result<()> {
    let s = run_example()?;
    println!("gamma = {:.6}", s.gamma);
    println!("exact privacy loss = {:.16}", s.privacy_loss);
    println!("empirical keep rate = {:.4}", s.kept_fraction);
    Ok(())
}
