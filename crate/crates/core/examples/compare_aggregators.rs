// Mean SGD, the geometric median and private sign aggregation side by side
// under a Gaussian attack.

use dp_rsa::aggregation::RsaConfig;
use dp_rsa::attacks::{AttackKind, AttackSpec};
use dp_rsa::data::{gen_synthetic, gen_synthetic_test, SyntheticSpec};
use dp_rsa::fedsim::{run_training, Algorithm, PrivacyConfig, SimConfig};
use dp_rsa::paramcore::{ClipConfig, LinearModel, Model};

/// `(algorithm name, final test accuracy)` for each algorithm.
pub fn run_example() -> dp_rsa::Result<Vec<(&'static str, f64)>> {
    let spec = SyntheticSpec {
        num_classes: 4,
        dim: 6,
        samples_per_class: 100,
        class_mean_separation: 4.0,
        noise_std: 1.0,
        seed: 5,
    };
    let train = gen_synthetic(&spec)?;
    let test = gen_synthetic_test(&spec, 50)?;
    let model = Model::Linear(LinearModel::new(spec.dim, spec.num_classes)?);

    let mut results = Vec::new();
    for algo in [Algorithm::Sgd, Algorithm::SgdGm, Algorithm::Rsa, Algorithm::DpRsaGauss] {
        let mut cfg = SimConfig::new(algo, 8, 2, RsaConfig::new(0.01, 0.05)?, ClipConfig::new(1.0)?);
        cfg.rounds = 300;
        cfg.eval_every = 300;
        cfg.attack = Some(AttackSpec::new(AttackKind::Gaussian { sigma_b: 1e4 }));
        cfg.privacy = Some(PrivacyConfig::new(1.0));
        let m = run_training(cfg, &model, &train, &test)?;
        results.push((algo.name(), m.final_test_accuracy));
    }
    Ok(results)
}

fn main() -> dp_rsa::Result<()> {
    for (name, acc) in run_example()? {
        println!("{name:>14}: test accuracy {acc:.3}");
    }
    Ok(())
}
