// A TOML run configuration swept over the privacy budget and two seeds.

use dp_rsa::cli::{sweep, RunConfigFile, SweepParam, SweepSpec};

pub const CONFIG: &str = r#"
algorithm = "dp_rsa_flip"
num_workers = 6
num_byzantine = 1
rounds = 40
batch_size = 8
alpha = 0.05
clip = 2.0
eval_every = 20

[privacy]
epsilon = 1.0

[attack]
kind = "sign_flip"
scale = -5.0

[model]
kind = "linear"

[data]
kind = "synthetic"
num_classes = 3
dim = 4
samples_per_class = 30
class_mean_separation = 3.0
noise_std = 1.0
"#;

pub fn run_example() -> dp_rsa::Result<String> {
    let base = RunConfigFile::parse(CONFIG)?;
    let spec = SweepSpec {
        param: SweepParam::Epsilon,
        values: vec![0.4, 1.38],
        seeds: vec![1, 2],
    };
    sweep(&base, &spec, true)
}

fn main() -> dp_rsa::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
