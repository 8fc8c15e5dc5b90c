//! End-to-end runs of the `dp-rsa` binary.

use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
algorithm = "dp_rsa_gauss"
num_workers = 6
num_byzantine = 1
rounds = 25
batch_size = 4
alpha = 0.05
clip = 2.0
eval_every = 10

[privacy]
epsilon = 0.4

[attack]
kind = "gaussian"
sigma_b = 10000.0

[model]
kind = "mlp"
hidden_dim = 6

[data]
kind = "synthetic"
num_classes = 3
dim = 4
samples_per_class = 20
class_mean_separation = 3.0
noise_std = 1.0
"#;

fn dp_rsa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dp-rsa"))
        .args(args)
        .current_dir(dir)
        .env_remove("DP_RSA_SEED")
        .env_remove("DP_RSA_OUT")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_writes_one_row_per_round_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", CONFIG);
    let a = dp_rsa(dir.path(), &["run", &cfg]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let csv = stdout(&a);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "round,loss,accuracy,epsilon_round,algo,attack,seed");
    assert_eq!(lines.len(), 26);
    assert!(lines[10].starts_with("10,") && !lines[10].contains(",,"));
    assert!(lines[1].contains(",,"), "accuracy is blank between evaluations");
    assert!(lines[25].ends_with(",dp_rsa_gauss,gaussian,0"));

    let b = dp_rsa(dir.path(), &["run", &cfg]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_from_environment_and_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", CONFIG);
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_dp-rsa"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("DP_RSA_SEED", "9")
        .env("DP_RSA_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(csv.lines().last().unwrap().ends_with(",9"));
}

#[test]
fn checkpoint_is_written_for_mlp_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("checkpoint = \"model.bin\"\noutput = \"log.csv\"\n{CONFIG}");
    let cfg = write_config(dir.path(), "run.toml", &text);
    let o = dp_rsa(dir.path(), &["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(dir.path().join("model.bin")).unwrap();
    let (model, params) = dp_rsa::paramcore::read_checkpoint(bytes.as_slice()).unwrap();
    assert_eq!((model.input_dim, model.hidden_dim, model.output_dim), (4, 6, 3));
    assert_eq!(bytes.len(), 20 + 8 * params.len());
    assert!(dir.path().join("log.csv").exists());
}

#[test]
fn too_many_byzantine_workers_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &CONFIG.replace("num_byzantine = 1", "num_byzantine = 6"));
    let o = dp_rsa(dir.path(), &["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("num_byzantine"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_keys_and_missing_files_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", &CONFIG.replace("alpha = 0.05", "alpah = 0.05"));
    assert_eq!(dp_rsa(dir.path(), &["run", &cfg]).status.code(), Some(2));

    let mnist = CONFIG.split("[data]").next().unwrap().to_string()
        + "[data]\nkind = \"mnist\"\ntrain_images = \"nope\"\ntrain_labels = \"nope\"\n\
           test_images = \"nope\"\ntest_labels = \"nope\"\n";
    let cfg = write_config(dir.path(), "mnist.toml", &mnist);
    assert_eq!(dp_rsa(dir.path(), &["run", &cfg]).status.code(), Some(3));
    assert_eq!(dp_rsa(dir.path(), &["run", "absent.toml"]).status.code(), Some(2));
}

#[test]
fn sweep_is_identical_serial_and_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", CONFIG);
    let args = ["sweep", &cfg, "--param", "num-byzantine", "--values", "0,1,2", "--seeds", "1,2"];
    let par = dp_rsa(dir.path(), &args);
    assert_eq!(par.status.code(), Some(0), "{}", String::from_utf8_lossy(&par.stderr));
    let mut serial_args = args.to_vec();
    serial_args.push("--serial");
    let ser = dp_rsa(dir.path(), &serial_args);
    assert_eq!(par.stdout, ser.stdout);
    let csv = stdout(&par);
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 25);
    assert!(csv.lines().nth(1).unwrap().starts_with("num_byzantine,0.0000000000000000e0,1,1,"));
}

#[test]
fn sweep_without_seeds_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", CONFIG);
    let o = dp_rsa(dir.path(), &["sweep", &cfg, "--param", "epsilon", "--values", "0.4", "--seeds", ""]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_dp_flags_miscalibration() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dp_rsa(dir.path(), &["verify-dp", "--mechanism", "gauss", "--epsilon", "1", "--trials", "10"]);
    assert_eq!(ok.status.code(), Some(0));
    let csv = stdout(&ok);
    assert!(csv.starts_with("mechanism,epsilon,parameter,observed_worst_pl,pass\n"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 3);

    let bad = dp_rsa(
        dir.path(),
        &["verify-dp", "--mechanism", "gauss", "--epsilon", "1", "--trials", "10", "--sigma-scale", "0.5"],
    );
    assert_eq!(bad.status.code(), Some(4));
    assert!(stdout(&bad).contains(",false"));

    let flip = dp_rsa(dir.path(), &["verify-dp", "--mechanism", "flip", "--epsilon", "1.38"]);
    assert_eq!(flip.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dp_rsa(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(dp_rsa(dir.path(), &["--help"]).status.code(), Some(0));
}
