// The executable privacy check behind `dp-rsa verify-dp`, as a library call.

use dp_rsa::cli::{verify_csv, verify_dp, MechanismKind, VerifyOptions};

pub fn run_example() -> dp_rsa::Result<String> {
    let flip = verify_dp(&VerifyOptions::new(MechanismKind::Flip, 1.38))?;
    let mut gauss = VerifyOptions::new(MechanismKind::Gauss, 0.4);
    gauss.trials = 20;
    let mut rows = flip;
    rows.extend(verify_dp(&gauss)?);
    Ok(verify_csv(&rows))
}

fn main() -> dp_rsa::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
