use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::{partition_iid, partition_noniid, Algorithm, Partition, SimConfig, MAX_DIAGNOSTIC_DIM};
use crate::aggregation::{
    geometric_median, mean_aggregate, rsa_master_update, rsa_worker_update, sign_majority_aggregate, AggregateRule,
};
use crate::attacks::{generate, ByzantineContext, ByzantineOutput, WireMessage};
use crate::data::Dataset;
use crate::dp::Mechanism;
use crate::error::{Error, Result};
use crate::metrics::{eval_accuracy, eval_loss, moreau_grad_norm_sq, ConsensusObjective, StackedPoint};
use crate::paramcore::{clip_grad, reg_grad, sign_vec, Classifier, Model, ParamVector, SignVector};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkerRole {
    Regular,
    Byzantine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkerState {
    pub role: WorkerRole,
    /// Present for regular workers of the RSA family only.
    pub local_model: Option<ParamVector>,
    pub shard: Vec<usize>,
}

/// Everything that changes from one round to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// Number of completed rounds.
    pub round: usize,
    pub x0: ParamVector,
    pub workers: Vec<WorkerState>,
}

impl SimState {
    pub fn regular_models(&self) -> Vec<ParamVector> {
        self.workers.iter().filter_map(|w| w.local_model.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundLog {
    /// 1-based index of the round just completed.
    pub round: usize,
    /// Mean minibatch loss over regular workers.
    pub train_loss: f64,
    pub test_accuracy: Option<f64>,
    /// Calibrated per-message ε; infinite for non-private runs.
    pub epsilon_round: f64,
    pub mechanism_calls: usize,
    /// Entries of `x0 - xk` that exceeded the Gaussian calibration bound.
    pub u_bound_violations: usize,
    pub moreau_grad_sq: Option<f64>,
    /// The geometric median hit its iteration cap and its last iterate was used.
    pub median_unconverged: bool,
    pub wall_ms: f64,
}

/// Immutable inputs of a run.
pub struct SimEnv<'a> {
    cfg: SimConfig,
    model: &'a Model,
    train: &'a Dataset,
    test: &'a Dataset,
    mechanism: Mechanism,
    /// Calibration bound on `|x0 - xk|` entries, for Gaussian runs.
    u_entry_bound: Option<f64>,
}

struct RegularOut {
    message: WireMessage,
    pre_model: ParamVector,
    grad: ParamVector,
    new_model: Option<ParamVector>,
    loss: f64,
    mechanism_calls: usize,
    violations: usize,
}

impl<'a> SimEnv<'a> {
    pub fn new(cfg: SimConfig, model: &'a Model, train: &'a Dataset, test: &'a Dataset) -> Result<Self> {
        cfg.validate()?;
        for ds in [train, test] {
            if ds.dim() != model.input_dim() || ds.num_classes() != model.num_classes() {
                return Err(Error::Config(format!(
                    "model expects {} features and {} classes, data has {} and {}",
                    model.input_dim(),
                    model.num_classes(),
                    ds.dim(),
                    ds.num_classes()
                )));
            }
        }
        if test.is_empty() {
            return Err(Error::Empty("test set"));
        }
        if cfg.moreau.is_some() {
            let stacked = (cfg.num_regular() + 1) * model.num_params();
            if !cfg.algorithm.is_rsa_family() || stacked > MAX_DIAGNOSTIC_DIM {
                return Err(Error::Config(format!(
                    "the Moreau diagnostic needs an RSA-family run with stacked dimension <= {MAX_DIAGNOSTIC_DIM} (got {} with dimension {stacked})",
                    cfg.algorithm.name()
                )));
            }
        }
        let mechanism = cfg.mechanism()?;
        let u_entry_bound = match (mechanism, cfg.privacy) {
            (Mechanism::Gauss { .. }, Some(p)) => Some(p.u_entry_bound(cfg.sensitivity()?)),
            _ => None,
        };
        Ok(Self {
            cfg,
            model,
            train,
            test,
            mechanism,
            u_entry_bound,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    /// Partitions the data and draws the shared initial model.
    pub fn init_state(&self) -> Result<SimState> {
        let cfg = &self.cfg;
        let mut prng = stream(cfg.seed, Purpose::Partition, 0, 0);
        let shards = match cfg.partition {
            Partition::Iid => partition_iid(self.train.len(), cfg.num_workers, &mut prng),
            Partition::NonIid { group_size } => {
                partition_noniid(self.train.labels(), cfg.num_workers, group_size, &mut prng)
            }
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(k) = shards.iter().take(cfg.num_regular()).position(Vec::is_empty) {
            return Err(Error::Config(format!("regular worker {k} received no training samples")));
        }
        let x0 = self.model.init_params(&mut stream(cfg.seed, Purpose::Init, 0, 0));
        let workers = shards
            .into_iter()
            .enumerate()
            .map(|(k, shard)| {
                let regular = k < cfg.num_regular();
                WorkerState {
                    role: if regular { WorkerRole::Regular } else { WorkerRole::Byzantine },
                    local_model: (regular && cfg.algorithm.is_rsa_family()).then(|| x0.clone()),
                    shard,
                }
            })
            .collect();
        Ok(SimState { round: 0, x0, workers })
    }

    fn regular_step(&self, state: &SimState, k: usize) -> Result<RegularOut> {
        let cfg = &self.cfg;
        let t = state.round;
        let worker = &state.workers[k];
        let x0 = &state.x0;

        let mut brng = stream(cfg.seed, Purpose::Minibatch, k, t);
        let batch: Vec<usize> = (0..cfg.batch_size)
            .map(|_| worker.shard[brng.random_range(0..worker.shard.len())])
            .collect();
        let samples = self.train.select(&batch);

        match &worker.local_model {
            Some(xk) => {
                // Send from the pre-update model, then update locally.
                let u = x0.sub(xk)?;
                let mut mrng = stream(cfg.seed, Purpose::Mechanism, k, t);
                let message = self.mechanism.perturb(&u, &mut mrng)?;
                let violations = match self.u_entry_bound {
                    Some(bound) => u.iter().filter(|v| v.abs() > bound).count(),
                    None => 0,
                };
                let (loss, g) = self.model.loss_and_grad(xk, &samples)?;
                let g = clip_grad(&g, cfg.clip)?;
                let new_model = rsa_worker_update(xk, &g, x0, cfg.rsa)?;
                Ok(RegularOut {
                    message: WireMessage::Sign(message),
                    pre_model: xk.clone(),
                    grad: g,
                    new_model: Some(new_model),
                    loss,
                    mechanism_calls: usize::from(self.mechanism.is_private()),
                    violations,
                })
            }
            None => {
                let (loss, g) = self.model.loss_and_grad(x0, &samples)?;
                let g = clip_grad(&g, cfg.clip)?;
                let message = match cfg.algorithm {
                    Algorithm::SignSgd => WireMessage::Sign(sign_vec(&g)?),
                    _ => WireMessage::Vector(g.clone()),
                };
                Ok(RegularOut {
                    message,
                    pre_model: x0.clone(),
                    grad: g,
                    new_model: None,
                    loss,
                    mechanism_calls: 0,
                    violations: 0,
                })
            }
        }
    }

    /// Converts a Byzantine output into this algorithm's wire format.
    fn to_wire(&self, out: ByzantineOutput, x0: &ParamVector) -> Result<WireMessage> {
        match out {
            ByzantineOutput::Wire(w) => Ok(w),
            ByzantineOutput::Raw(z) => match self.cfg.algorithm {
                a if a.is_rsa_family() => Ok(WireMessage::Sign(sign_vec(&x0.sub(&z)?)?)),
                Algorithm::SignSgd => Ok(WireMessage::Sign(sign_vec(&z)?)),
                _ => Ok(WireMessage::Vector(z)),
            },
        }
    }

    /// One synchronous round: broadcast, regular messages and local updates,
    /// Byzantine injection, master update.
    pub fn run_round(&self, state: &SimState) -> Result<(SimState, RoundLog)> {
        let start = Instant::now();
        let cfg = &self.cfg;
        let t = state.round;
        let r = cfg.num_regular();

        let outs: Vec<RegularOut> = if cfg.parallel {
            (0..r).into_par_iter().map(|k| self.regular_step(state, k)).collect::<Result<_>>()?
        } else {
            (0..r).map(|k| self.regular_step(state, k)).collect::<Result<_>>()?
        };

        let mut messages: Vec<WireMessage> = outs.iter().map(|o| o.message.clone()).collect();
        if cfg.num_byzantine > 0 {
            let spec = cfg.attack.as_ref().expect("validated: Byzantine workers have an attack");
            let honest_models: Vec<ParamVector> = outs.iter().map(|o| o.pre_model.clone()).collect();
            let honest_grads: Vec<ParamVector> = outs.iter().map(|o| o.grad.clone()).collect();
            let regular_messages = messages.clone();
            let ctx = ByzantineContext {
                x0: &state.x0,
                regular_messages: &regular_messages,
                honest_models: &honest_models,
                honest_grads: &honest_grads,
            };
            for j in r..cfg.num_workers {
                let mut rng = stream(cfg.seed, Purpose::Byzantine, j, t);
                let out = generate(spec, cfg.algorithm.message_kind(), &ctx, &mut rng)?;
                messages.push(self.to_wire(out, &state.x0)?);
            }
        }

        let x0 = &state.x0;
        let f0_grad = reg_grad(x0, cfg.reg_coeff)?;
        let alpha = cfg.rsa.alpha();
        let mut median_unconverged = false;
        let new_x0 = match cfg.algorithm {
            a if a.is_rsa_family() => rsa_master_update(x0, &f0_grad, &signs(&messages)?, cfg.rsa)?.into_inner(),
            Algorithm::SignSgd => {
                let vote: Vec<f64> = sign_majority_aggregate(&signs(&messages)?)?.iter().collect();
                gradient_step(x0, &vote, &f0_grad, alpha)
            }
            Algorithm::Sgd => gradient_step(x0, &mean_aggregate(&vectors(&messages)?)?, &f0_grad, alpha),
            _ => {
                let AggregateRule::GeometricMedian { tol, max_iter } = AggregateRule::geometric_median() else {
                    unreachable!()
                };
                let points = vectors(&messages)?;
                // Stochastic gradients do not need the median to 1e-8 absolute;
                // scale the tolerance with the typical gradient norm instead.
                let scale = points.iter().map(|p| p.norm()).sum::<f64>() / points.len() as f64;
                let tol = tol.max(GM_RELATIVE_TOL * scale);
                // An unconverged Weiszfeld iterate is still a usable aggregate.
                let median = match geometric_median(&points, tol, max_iter) {
                    Ok(m) => m,
                    Err(Error::MedianNoConvergence { last, .. }) => {
                        median_unconverged = true;
                        last
                    }
                    Err(e) => return Err(e),
                };
                gradient_step(x0, &median, &f0_grad, alpha)
            }
        };
        let new_x0 = ParamVector::new(new_x0).map_err(|_| Error::Diverged { round: t + 1 })?;

        let mut workers = state.workers.clone();
        for (w, o) in workers.iter_mut().zip(outs.iter()) {
            if let Some(m) = &o.new_model {
                w.local_model = Some(m.clone());
            }
        }
        let next = SimState {
            round: t + 1,
            x0: new_x0,
            workers,
        };

        let evaluate = (t + 1).is_multiple_of(cfg.eval_every) || t + 1 == cfg.rounds;
        let test_accuracy = if evaluate {
            Some(eval_accuracy(self.model, &next.x0, self.test)?)
        } else {
            None
        };
        let moreau_grad_sq = match &cfg.moreau {
            Some(mc) if evaluate => Some(self.moreau_diagnostic(&next, mc)?),
            _ => None,
        };

        let log = RoundLog {
            round: t + 1,
            train_loss: outs.iter().map(|o| o.loss).sum::<f64>() / r as f64,
            test_accuracy,
            epsilon_round: self.mechanism.epsilon(),
            mechanism_calls: outs.iter().map(|o| o.mechanism_calls).sum(),
            u_bound_violations: outs.iter().map(|o| o.violations).sum(),
            moreau_grad_sq,
            median_unconverged,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        Ok((next, log))
    }

    fn moreau_diagnostic(&self, state: &SimState, mc: &crate::metrics::MoreauConfig) -> Result<f64> {
        let shards: Vec<Vec<usize>> = state.workers[..self.cfg.num_regular()]
            .iter()
            .map(|w| w.shard.clone())
            .collect();
        let point = StackedPoint::new(&state.regular_models(), &state.x0)?;
        let obj = ConsensusObjective::new(self.model, self.train, &shards, self.cfg.reg_coeff, self.cfg.rsa, mc.gamma_weight)?;
        moreau_grad_norm_sq(point.as_slice(), mc, &obj)
    }
}

fn signs(messages: &[WireMessage]) -> Result<Vec<SignVector>> {
    messages
        .iter()
        .map(|m| match m {
            WireMessage::Sign(s) => Ok(s.clone()),
            WireMessage::Vector(_) => Err(Error::InvalidInput("expected a sign message".into())),
        })
        .collect()
}

/// Weiszfeld stopping distance relative to the mean gradient norm.
pub const GM_RELATIVE_TOL: f64 = 1e-6;

fn vectors(messages: &[WireMessage]) -> Result<Vec<ParamVector>> {
    messages
        .iter()
        .map(|m| match m {
            WireMessage::Vector(v) => Ok(v.clone()),
            WireMessage::Sign(_) => Err(Error::InvalidInput("expected a vector message".into())),
        })
        .collect()
}

/// `x0 - α (agg + ∇f0(x0))`, left unchecked so divergence can be reported.
fn gradient_step(x0: &[f64], agg: &[f64], f0_grad: &[f64], alpha: f64) -> Vec<f64> {
    x0.iter()
        .zip(agg)
        .zip(f0_grad)
        .map(|((x, g), f)| x - alpha * (g + f))
        .collect()
}

/// Per-round logs plus the end state of a run.
#[derive(Clone, Debug)]
pub struct RunMetrics {
    pub logs: Vec<RoundLog>,
    pub final_state: SimState,
    /// Mean cross-entropy of the master model on the full training set.
    pub final_train_loss: f64,
    pub final_test_accuracy: f64,
    pub mechanism: Mechanism,
}

impl RunMetrics {
    pub fn final_model(&self) -> &ParamVector {
        &self.final_state.x0
    }

    /// `T·ε` by basic composition. A loose upper bound, reported as such.
    pub fn naive_total_epsilon(&self) -> f64 {
        self.mechanism.epsilon() * self.logs.len() as f64
    }

    pub fn total_u_bound_violations(&self) -> usize {
        self.logs.iter().map(|l| l.u_bound_violations).sum()
    }
}

pub fn run_training(cfg: SimConfig, model: &Model, train: &Dataset, test: &Dataset) -> Result<RunMetrics> {
    let env = SimEnv::new(cfg, model, train, test)?;
    let mut state = env.init_state()?;
    let mut logs = Vec::with_capacity(env.cfg.rounds);
    for _ in 0..env.cfg.rounds {
        let (next, log) = env.run_round(&state)?;
        state = next;
        logs.push(log);
    }
    let final_train_loss = eval_loss(model, &state.x0, train)?;
    let final_test_accuracy = logs
        .last()
        .and_then(|l| l.test_accuracy)
        .expect("the last round is always evaluated");
    Ok(RunMetrics {
        logs,
        final_state: state,
        final_train_loss,
        final_test_accuracy,
        mechanism: env.mechanism,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::RsaConfig;
    use crate::attacks::{AttackKind, AttackSpec};
    use crate::data::{gen_synthetic, gen_synthetic_test, SyntheticSpec};
    use crate::fedsim::PrivacyConfig;
    use crate::paramcore::{ClipConfig, LinearModel};

    fn data() -> (Model, Dataset, Dataset) {
        let spec = SyntheticSpec {
            num_classes: 4,
            dim: 4,
            samples_per_class: 50,
            class_mean_separation: 4.0,
            noise_std: 0.5,
            seed: 7,
        };
        (
            Model::Linear(LinearModel::new(4, 4).unwrap()),
            gen_synthetic(&spec).unwrap(),
            gen_synthetic_test(&spec, 25).unwrap(),
        )
    }

    fn config(algorithm: Algorithm, b: usize) -> SimConfig {
        let mut cfg = SimConfig::new(
            algorithm,
            5,
            b,
            RsaConfig::new(0.05, 0.05).unwrap(),
            ClipConfig::new(5.0).unwrap(),
        );
        cfg.rounds = 20;
        cfg.batch_size = 4;
        cfg.eval_every = 5;
        cfg.privacy = Some(PrivacyConfig::new(1.0));
        if b > 0 {
            cfg.attack = Some(AttackSpec::new(AttackKind::Gaussian { sigma_b: 100.0 }));
        }
        cfg
    }

    #[test]
    fn rejects_bad_configs() {
        let (model, train, test) = data();
        let mut cfg = config(Algorithm::Rsa, 0);
        cfg.num_byzantine = 5;
        assert!(matches!(SimEnv::new(cfg, &model, &train, &test), Err(Error::Config(m)) if m.contains("num_byzantine")));
        let mut cfg = config(Algorithm::Rsa, 0);
        cfg.rounds = 0;
        assert!(SimEnv::new(cfg, &model, &train, &test).is_err());
        let mut cfg = config(Algorithm::Rsa, 1);
        cfg.attack = None;
        assert!(SimEnv::new(cfg, &model, &train, &test).is_err());
        let mut cfg = config(Algorithm::DpRsaGauss, 0);
        cfg.privacy = None;
        assert!(SimEnv::new(cfg, &model, &train, &test).is_err());
    }

    #[test]
    fn deterministic_across_parallelism() {
        let (model, train, test) = data();
        for algo in [Algorithm::DpRsaGauss, Algorithm::SgdGm, Algorithm::SignSgd] {
            let mut cfg = config(algo, 1);
            let a = run_training(cfg.clone(), &model, &train, &test).unwrap();
            cfg.parallel = false;
            let b = run_training(cfg, &model, &train, &test).unwrap();
            assert_eq!(a.final_state, b.final_state);
            for (x, y) in a.logs.iter().zip(&b.logs) {
                assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
                assert_eq!(x.test_accuracy, y.test_accuracy);
            }
        }
    }

    #[test]
    fn mechanism_invoked_once_per_regular_worker() {
        let (model, train, test) = data();
        let run = run_training(config(Algorithm::DpRsaFlip, 2), &model, &train, &test).unwrap();
        assert!(run.logs.iter().all(|l| l.mechanism_calls == 3));
        assert!(run.logs.iter().all(|l| l.epsilon_round == 1.0));
        let run = run_training(config(Algorithm::Rsa, 0), &model, &train, &test).unwrap();
        assert!(run.logs.iter().all(|l| l.mechanism_calls == 0 && l.epsilon_round.is_infinite()));
    }

    #[test]
    fn plain_rsa_round_matches_hand_update() {
        let (model, train, test) = data();
        let cfg = config(Algorithm::Rsa, 0);
        let env = SimEnv::new(cfg.clone(), &model, &train, &test).unwrap();
        let mut state = env.init_state().unwrap();
        // desynchronize the locals so signs are informative
        for (k, w) in state.workers.iter_mut().enumerate() {
            let m = w.local_model.as_ref().unwrap();
            w.local_model = Some(ParamVector::new(m.iter().map(|v| v + 0.01 * (k as f64 - 2.0)).collect()).unwrap());
        }
        let (next, _) = env.run_round(&state).unwrap();
        let x0 = &state.x0;
        let mut msgs = Vec::new();
        for (k, w) in state.workers.iter().enumerate() {
            let xk = w.local_model.as_ref().unwrap();
            msgs.push(sign_vec(&x0.sub(xk).unwrap()).unwrap());
            let mut rng = stream(cfg.seed, Purpose::Minibatch, k, 0);
            let batch: Vec<usize> = (0..cfg.batch_size).map(|_| w.shard[rng.random_range(0..w.shard.len())]).collect();
            let (_, g) = model.loss_and_grad(xk, &train.select(&batch)).unwrap();
            let g = clip_grad(&g, cfg.clip).unwrap();
            let want: Vec<f64> = (0..xk.len())
                .map(|i| xk[i] - cfg.rsa.alpha() * (g[i] + cfg.rsa.lambda() * f64::from(crate::paramcore::sign_of(xk[i] - x0[i]))))
                .collect();
            assert_eq!(next.workers[k].local_model.as_ref().unwrap().values(), &want[..]);
        }
        let f0 = reg_grad(x0, cfg.reg_coeff).unwrap();
        let want_x0: Vec<f64> = (0..x0.len())
            .map(|i| {
                let s: f64 = msgs.iter().map(|m| f64::from(m.signs()[i])).sum();
                x0[i] - cfg.rsa.alpha() * (f0[i] + cfg.rsa.lambda() * s)
            })
            .collect();
        assert_eq!(next.x0.values(), &want_x0[..]);
    }

    #[test]
    fn regular_workers_ignore_the_attack() {
        let (model, train, test) = data();
        let mut states = Vec::new();
        for kind in [
            AttackKind::Gaussian { sigma_b: 1e4 },
            AttackKind::SignFlip { scale: -3.0 },
            AttackKind::SampleDuplicate { victim_index: 0 },
        ] {
            let mut cfg = config(Algorithm::DpRsaGauss, 2);
            cfg.attack = Some(AttackSpec::new(kind));
            let env = SimEnv::new(cfg, &model, &train, &test).unwrap();
            let (next, _) = env.run_round(&env.init_state().unwrap()).unwrap();
            states.push(next.regular_models());
        }
        assert_eq!(states[0], states[1]);
        assert_eq!(states[1], states[2]);
    }

    #[test]
    fn master_step_bounded() {
        let (model, train, test) = data();
        let cfg = config(Algorithm::DpRsaFlip, 2);
        let env = SimEnv::new(cfg.clone(), &model, &train, &test).unwrap();
        let mut state = env.init_state().unwrap();
        let d = state.x0.len() as f64;
        for _ in 0..10 {
            let (next, _) = env.run_round(&state).unwrap();
            let f0 = reg_grad(&state.x0, cfg.reg_coeff).unwrap();
            let step = next.x0.sub(&state.x0).unwrap().norm();
            let bound = cfg.rsa.alpha() * (f0.norm() + cfg.rsa.lambda() * cfg.num_workers as f64 * d.sqrt());
            assert!(step <= bound * (1.0 + 1e-12));
            state = next;
        }
    }

    #[test]
    fn sgd_learns_separable_data() {
        let (model, train, test) = data();
        let mut cfg = config(Algorithm::Sgd, 0);
        cfg.rounds = 200;
        let run = run_training(cfg, &model, &train, &test).unwrap();
        assert!(run.final_test_accuracy > 0.95, "{}", run.final_test_accuracy);
        assert_eq!(run.logs.iter().filter(|l| l.test_accuracy.is_some()).count(), 40);
    }

    #[test]
    fn moreau_diagnostic_reported_on_eval_rounds() {
        let (model, train, test) = data();
        let mut cfg = config(Algorithm::Rsa, 0);
        cfg.moreau = Some(crate::metrics::MoreauConfig {
            inner_tol: 1e-7,
            ..Default::default()
        });
        let run = run_training(cfg, &model, &train, &test).unwrap();
        for l in &run.logs {
            assert_eq!(l.moreau_grad_sq.is_some(), l.test_accuracy.is_some());
        }
        let mut bad = config(Algorithm::Sgd, 0);
        bad.moreau = Some(Default::default());
        assert!(SimEnv::new(bad, &model, &train, &test).is_err());
    }
}
