//! Parameter-server simulation: configuration, data partitioning and the
//! synchronous round engine.

mod engine;
mod partition;

pub use engine::{run_training, RoundLog, RunMetrics, SimEnv, SimState, WorkerRole, WorkerState};
pub use partition::{partition_iid, partition_noniid};

use serde::{Deserialize, Serialize};

use crate::aggregation::RsaConfig;
use crate::attacks::{AttackSpec, MessageKind};
use crate::dp::{Mechanism, PrivacyBudget, Sensitivity};
use crate::error::{Error, Result};
use crate::metrics::MoreauConfig;
use crate::paramcore::ClipConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Mean of stochastic gradients.
    Sgd,
    /// Coordinate-wise majority vote of gradient signs.
    SignSgd,
    /// Geometric median of stochastic gradients.
    SgdGm,
    /// Model-difference signs without perturbation.
    Rsa,
    DpRsaFlip,
    DpRsaGauss,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::SignSgd => "sign_sgd",
            Algorithm::SgdGm => "sgd_gm",
            Algorithm::Rsa => "rsa",
            Algorithm::DpRsaFlip => "dp_rsa_flip",
            Algorithm::DpRsaGauss => "dp_rsa_gauss",
        }
    }

    /// Workers keep local models and exchange model-difference signs.
    pub fn is_rsa_family(self) -> bool {
        matches!(self, Algorithm::Rsa | Algorithm::DpRsaFlip | Algorithm::DpRsaGauss)
    }

    pub fn message_kind(self) -> MessageKind {
        if self.is_rsa_family() {
            MessageKind::ModelMessage
        } else {
            MessageKind::GradientMessage
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Partition {
    Iid,
    NonIid { group_size: usize },
}

/// Parameters of the per-message privacy mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfig {
    pub epsilon: f64,
    /// Assumed bound on `|x0 - xk|` entries used to calibrate the Gaussian
    /// noise; `6Δu/ε` when absent, where both calibration terms coincide.
    /// Entries that exceed it are counted in the round log.
    #[serde(default)]
    pub u_entry_bound: Option<f64>,
    #[serde(default = "PrivacyConfig::default_margin")]
    pub margin: f64,
}

impl PrivacyConfig {
    fn default_margin() -> f64 {
        0.05
    }

    pub fn u_entry_bound(&self, sens: Sensitivity) -> f64 {
        self.u_entry_bound.unwrap_or(6.0 * sens.delta_u() / self.epsilon)
    }

    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            u_entry_bound: None,
            margin: Self::default_margin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub num_workers: usize,
    pub num_byzantine: usize,
    pub algorithm: Algorithm,
    pub rsa: RsaConfig,
    pub privacy: Option<PrivacyConfig>,
    pub attack: Option<AttackSpec>,
    pub partition: Partition,
    pub batch_size: usize,
    pub rounds: usize,
    pub seed: u64,
    pub clip: ClipConfig,
    pub eval_every: usize,
    /// `c` in the master regularizer `f0(x) = c·||x||²`.
    pub reg_coeff: f64,
    pub moreau: Option<MoreauConfig>,
    /// Evaluate regular workers on the rayon pool.
    pub parallel: bool,
}

/// Largest stacked dimension for which the Moreau diagnostic may be enabled.
pub const MAX_DIAGNOSTIC_DIM: usize = 5000;

impl SimConfig {
    pub fn new(algorithm: Algorithm, num_workers: usize, num_byzantine: usize, rsa: RsaConfig, clip: ClipConfig) -> Self {
        Self {
            num_workers,
            num_byzantine,
            algorithm,
            rsa,
            privacy: None,
            attack: None,
            partition: Partition::Iid,
            batch_size: 32,
            rounds: 100,
            seed: 0,
            clip,
            eval_every: 50,
            reg_coeff: 0.002,
            moreau: None,
            parallel: true,
        }
    }

    pub fn num_regular(&self) -> usize {
        self.num_workers - self.num_byzantine
    }

    /// Checks every invariant that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.num_workers == 0 {
            return Err(Error::Config("num_workers must be at least 1".into()));
        }
        if self.num_byzantine >= self.num_workers {
            return Err(Error::Config(format!(
                "num_byzantine < num_workers violated: b = {} with K = {}",
                self.num_byzantine, self.num_workers
            )));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if !(self.reg_coeff >= 0.0 && self.reg_coeff.is_finite()) {
            return Err(Error::Config(format!("reg_coeff must be nonnegative, got {}", self.reg_coeff)));
        }
        if let Partition::NonIid { group_size } = self.partition {
            if group_size == 0 || !self.num_workers.is_multiple_of(group_size) {
                return Err(Error::Config(format!(
                    "group_size {group_size} must divide num_workers {}",
                    self.num_workers
                )));
            }
        }
        match (&self.attack, self.num_byzantine) {
            (None, b) if b > 0 => {
                return Err(Error::Config(format!("{b} Byzantine workers need an attack")));
            }
            (Some(a), _) => a.validate(self.num_regular())?,
            _ => {}
        }
        if matches!(self.algorithm, Algorithm::DpRsaFlip | Algorithm::DpRsaGauss) && self.privacy.is_none() {
            return Err(Error::Config(format!("{} needs a privacy section", self.algorithm.name())));
        }
        if let Some(m) = &self.moreau {
            m.validate()?;
        }
        self.mechanism().map(|_| ())
    }

    /// The mechanism applied to regular RSA-family messages.
    pub fn mechanism(&self) -> Result<Mechanism> {
        let privacy = || self.privacy.ok_or_else(|| Error::Config("missing privacy section".into()));
        match self.algorithm {
            Algorithm::DpRsaFlip => Ok(Mechanism::flip(PrivacyBudget::new(privacy()?.epsilon)?)),
            Algorithm::DpRsaGauss => {
                let p = privacy()?;
                let sens = self.sensitivity()?;
                Mechanism::gauss(PrivacyBudget::new(p.epsilon)?, sens, p.u_entry_bound(sens), p.margin)
            }
            _ => Ok(Mechanism::None),
        }
    }

    /// `Δu = 2αM`.
    pub fn sensitivity(&self) -> Result<Sensitivity> {
        Sensitivity::from_step_and_clip(self.rsa.alpha(), self.clip.max_norm())
    }

    pub fn attack_name(&self) -> &'static str {
        match (&self.attack, self.num_byzantine) {
            (Some(a), b) if b > 0 => a.name(),
            _ => "none",
        }
    }
}
