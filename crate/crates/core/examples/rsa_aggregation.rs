// One round of sign-based model aggregation by hand: workers step toward
// their gradients and the master moves by a fixed amount per message.

use dp_rsa::aggregation::{rsa_master_update, rsa_worker_update, RsaConfig};
use dp_rsa::paramcore::{reg_grad, sign_vec, ParamVector};

pub struct RoundSummary {
    pub locals: Vec<ParamVector>,
    pub master: ParamVector,
    /// Largest movement of a master coordinate caused by replacing one
    /// message with its negation.
    pub max_swing: f64,
}

pub fn run_example() -> dp_rsa::Result<RoundSummary> {
    let cfg = RsaConfig::new(0.1, 0.5)?;
    let x0 = ParamVector::new(vec![0.0, 1.0, -1.0])?;
    let locals = [vec![0.2, 1.0, -1.5], vec![-0.4, 0.5, -1.0], vec![1.0, 2.0, 0.0]];
    let grads = [vec![1.0, -1.0, 0.5], vec![0.0, 2.0, -2.0], vec![-1.0, 0.0, 1.0]];

    let mut messages = Vec::new();
    let mut next_locals = Vec::new();
    for (xk, gk) in locals.iter().zip(&grads) {
        messages.push(sign_vec(&x0.sub(xk)?)?);
        next_locals.push(rsa_worker_update(xk, gk, &x0, cfg)?);
    }
    let f0 = reg_grad(&x0, 0.002)?;
    let master = rsa_master_update(&x0, &f0, &messages, cfg)?;

    let mut swapped = messages.clone();
    swapped[0] = swapped[0].negated();
    let other = rsa_master_update(&x0, &f0, &swapped, cfg)?;
    let max_swing = master.iter().zip(other.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(RoundSummary {
        locals: next_locals,
        master,
        max_swing,
    })
}

fn main() -> dp_rsa::Result<()> {
    let s = run_example()?;
    for (k, x) in s.locals.iter().enumerate() {
        println!("worker {k}: {:?}", x.values());
    }
    println!("master: {:?}", s.master.values());
    println!("max swing from one replaced message: {:.4}", s.max_swing);
    Ok(())
}
