// Stationarity of the penalized consensus problem, tracked by the squared
// gradient norm of its Moreau envelope.

use dp_rsa::aggregation::RsaConfig;
use dp_rsa::data::{gen_synthetic, gen_synthetic_test, SyntheticSpec};
use dp_rsa::fedsim::{run_training, Algorithm, SimConfig};
use dp_rsa::metrics::MoreauConfig;
use dp_rsa::paramcore::{ClipConfig, LinearModel, Model};

/// `(round, ||grad envelope||²)` at each evaluation round.
pub fn run_example() -> dp_rsa::Result<Vec<(usize, f64)>> {
    let spec = SyntheticSpec {
        num_classes: 3,
        dim: 2,
        samples_per_class: 30,
        class_mean_separation: 3.0,
        noise_std: 0.5,
        seed: 1,
    };
    let train = gen_synthetic(&spec)?;
    let test = gen_synthetic_test(&spec, 20)?;
    let model = Model::Linear(LinearModel::new(spec.dim, spec.num_classes)?);

    let mut cfg = SimConfig::new(Algorithm::Rsa, 4, 0, RsaConfig::new(0.05, 0.1)?, ClipConfig::new(5.0)?);
    cfg.rounds = 200;
    cfg.eval_every = 50;
    cfg.batch_size = 8;
    cfg.moreau = Some(MoreauConfig {
        inner_tol: 1e-8,
        ..MoreauConfig::default()
    });
    let m = run_training(cfg, &model, &train, &test)?;
    Ok(m.logs.iter().filter_map(|l| l.moreau_grad_sq.map(|g| (l.round, g))).collect())
}

fn main() -> dp_rsa::Result<()> {
    for (round, g) in run_example()? {
        println!("round {round:>4}: ||grad h||^2 = {g:.3e}");
    }
    Ok(())
}
