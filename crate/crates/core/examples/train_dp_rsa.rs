// Private, Byzantine-robust training on a synthetic problem: ten workers,
// two of which send Gaussian noise.

use dp_rsa::aggregation::RsaConfig;
use dp_rsa::attacks::{AttackKind, AttackSpec};
use dp_rsa::data::{gen_synthetic, gen_synthetic_test, SyntheticSpec};
use dp_rsa::fedsim::{run_training, Algorithm, PrivacyConfig, RunMetrics, SimConfig};
use dp_rsa::paramcore::{ClipConfig, LinearModel, Model};

pub fn run_example() -> dp_rsa::Result<RunMetrics> {
    let spec = SyntheticSpec {
        num_classes: 5,
        dim: 8,
        samples_per_class: 100,
        class_mean_separation: 4.0,
        noise_std: 1.0,
        seed: 3,
    };
    let train = gen_synthetic(&spec)?;
    let test = gen_synthetic_test(&spec, 50)?;
    let model = Model::Linear(LinearModel::new(spec.dim, spec.num_classes)?);

    let mut cfg = SimConfig::new(
        Algorithm::DpRsaGauss,
        10,
        2,
        RsaConfig::new(0.01, 0.05)?,
        ClipConfig::new(1.0)?,
    );
    cfg.rounds = 400;
    cfg.eval_every = 100;
    cfg.privacy = Some(PrivacyConfig::new(1.0));
    cfg.attack = Some(AttackSpec::new(AttackKind::Gaussian { sigma_b: 1e4 }));
    run_training(cfg, &model, &train, &test)
}

fn main() -> dp_rsa::Result<()> {
    let m = run_example()?;
    for log in m.logs.iter().filter(|l| l.test_accuracy.is_some()) {
        println!(
            "round {:>4}  minibatch loss {:.4}  test accuracy {:.3}",
            log.round,
            log.train_loss,
            log.test_accuracy.unwrap_or_default()
        );
    }
    println!("final training loss {:.4}", m.final_train_loss);
    println!("per-round epsilon {}, naive total {}", m.mechanism.epsilon(), m.naive_total_epsilon());
    Ok(())
}
