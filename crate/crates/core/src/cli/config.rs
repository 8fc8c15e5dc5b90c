//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::aggregation::RsaConfig;
use crate::attacks::{AttackKind, AttackSpec, MessageKind};
use crate::data::{gen_synthetic, gen_synthetic_test, load_idx, Dataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::fedsim::{Algorithm, Partition, PrivacyConfig, SimConfig};
use crate::metrics::MoreauConfig;
use crate::paramcore::{ClipConfig, LinearModel, MlpModel, Model};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub algorithm: Algorithm,
    pub num_workers: usize,
    #[serde(default)]
    pub num_byzantine: usize,
    pub rounds: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::eval_every")]
    pub eval_every: usize,
    pub alpha: f64,
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    /// ℓ2 bound on stochastic gradients.
    pub clip: f64,
    #[serde(default = "defaults::reg_coeff")]
    pub reg_coeff: f64,
    #[serde(default = "defaults::parallel")]
    pub parallel: bool,
    /// CSV destination; stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Where to write the final master model (MLP only).
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub privacy: Option<PrivacyConfig>,
    #[serde(default)]
    pub attack: Option<AttackSection>,
    #[serde(default)]
    pub model: ModelSection,
    pub data: DataSection,
    #[serde(default)]
    pub moreau: Option<MoreauSection>,
}

mod defaults {
    pub fn batch_size() -> usize {
        32
    }
    pub fn eval_every() -> usize {
        50
    }
    pub fn lambda() -> f64 {
        0.01
    }
    pub fn reg_coeff() -> f64 {
        0.002
    }
    pub fn parallel() -> bool {
        true
    }
    pub fn hidden_dim() -> usize {
        50
    }
    pub fn test_samples_per_class() -> usize {
        100
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSection {
    #[default]
    Iid,
    NonIid { group_size: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSection {
    Gaussian {
        sigma_b: f64,
        #[serde(default)]
        applies_to: Option<MessageKind>,
    },
    SignFlip {
        scale: f64,
        #[serde(default)]
        applies_to: Option<MessageKind>,
    },
    SampleDuplicate {
        victim_index: usize,
        #[serde(default)]
        applies_to: Option<MessageKind>,
    },
}

impl AttackSection {
    fn to_spec(self) -> AttackSpec {
        let (kind, applies_to) = match self {
            AttackSection::Gaussian { sigma_b, applies_to } => (AttackKind::Gaussian { sigma_b }, applies_to),
            AttackSection::SignFlip { scale, applies_to } => (AttackKind::SignFlip { scale }, applies_to),
            AttackSection::SampleDuplicate { victim_index, applies_to } => {
                (AttackKind::SampleDuplicate { victim_index }, applies_to)
            }
        };
        AttackSpec { kind, applies_to }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSection {
    Mlp {
        #[serde(default = "defaults::hidden_dim")]
        hidden_dim: usize,
    },
    Linear,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection::Mlp {
            hidden_dim: defaults::hidden_dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSection {
    Synthetic {
        num_classes: usize,
        dim: usize,
        samples_per_class: usize,
        class_mean_separation: f64,
        noise_std: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "defaults::test_samples_per_class")]
        test_samples_per_class: usize,
    },
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoreauSection {
    #[serde(default)]
    pub rho_bar: Option<f64>,
    #[serde(default)]
    pub inner_tol: Option<f64>,
    #[serde(default)]
    pub inner_max_iter: Option<usize>,
    #[serde(default)]
    pub gamma_weight: Option<f64>,
}

impl MoreauSection {
    fn to_config(self) -> MoreauConfig {
        let d = MoreauConfig::default();
        MoreauConfig {
            rho_bar: self.rho_bar.unwrap_or(d.rho_bar),
            inner_tol: self.inner_tol.unwrap_or(d.inner_tol),
            inner_max_iter: self.inner_max_iter.unwrap_or(d.inner_max_iter),
            gamma_weight: self.gamma_weight.unwrap_or(d.gamma_weight),
        }
    }
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds and validates the simulation configuration.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let rsa = RsaConfig::new(self.lambda, self.alpha).map_err(config_error)?;
        let clip = ClipConfig::new(self.clip).map_err(config_error)?;
        let mut cfg = SimConfig::new(self.algorithm, self.num_workers, self.num_byzantine, rsa, clip);
        cfg.rounds = self.rounds;
        cfg.batch_size = self.batch_size;
        cfg.seed = self.seed;
        cfg.eval_every = self.eval_every;
        cfg.reg_coeff = self.reg_coeff;
        cfg.parallel = self.parallel;
        cfg.partition = match self.partition {
            PartitionSection::Iid => Partition::Iid,
            PartitionSection::NonIid { group_size } => Partition::NonIid { group_size },
        };
        cfg.privacy = self.privacy;
        cfg.attack = self.attack.map(AttackSection::to_spec);
        cfg.moreau = self.moreau.map(MoreauSection::to_config);
        cfg.validate().map_err(config_error)?;
        if self.checkpoint.is_some() && !matches!(self.model, ModelSection::Mlp { .. }) {
            return Err(Error::Config("checkpoints are only written for the mlp model".into()));
        }
        Ok(cfg)
    }

    /// Training and test sets.
    pub fn load_data(&self) -> Result<(Dataset, Dataset)> {
        match &self.data {
            DataSection::Synthetic {
                num_classes,
                dim,
                samples_per_class,
                class_mean_separation,
                noise_std,
                seed,
                test_samples_per_class,
            } => {
                let spec = SyntheticSpec {
                    num_classes: *num_classes,
                    dim: *dim,
                    samples_per_class: *samples_per_class,
                    class_mean_separation: *class_mean_separation,
                    noise_std: *noise_std,
                    seed: *seed,
                };
                spec.validate()?;
                Ok((gen_synthetic(&spec)?, gen_synthetic_test(&spec, *test_samples_per_class)?))
            }
            DataSection::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => Ok((load_idx(train_images, train_labels)?, load_idx(test_images, test_labels)?)),
        }
    }

    pub fn model(&self, train: &Dataset) -> Result<Model> {
        match self.model {
            ModelSection::Mlp { hidden_dim } => {
                Ok(Model::Mlp(MlpModel::new(train.dim(), hidden_dim, train.num_classes()).map_err(config_error)?))
            }
            ModelSection::Linear => Ok(Model::Linear(LinearModel::new(train.dim(), train.num_classes())?)),
        }
    }
}

/// Range and input errors raised while building a configuration are
/// configuration errors.
fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::Data(_) | Error::Io(_) => e,
        other => Error::Config(other.to_string()),
    }
}
