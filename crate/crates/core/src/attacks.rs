//! Byzantine message generators.
//!
//! An attack yields either a raw vector, which the engine turns into the
//! algorithm's wire format (`sign(x0 - z)` for RSA, the vector itself for
//! gradient baselines), or a ready-made wire message (duplication).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aggregation::mean_aggregate;
use crate::error::{Error, Result};
use crate::paramcore::{ParamVector, SignVector};

/// What a message carries, which decides what "the true value" means for the
/// sign-flipping attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Model-difference signs (RSA family).
    ModelMessage,
    /// Stochastic gradients or their signs (SGD, SignSGD, SGD+GM).
    GradientMessage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackKind {
    Gaussian { sigma_b: f64 },
    SignFlip { scale: f64 },
    SampleDuplicate { victim_index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// `None` means "whatever the algorithm transmits".
    pub applies_to: Option<MessageKind>,
}

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        Self { kind, applies_to: None }
    }

    pub fn validate(&self, num_regular: usize) -> Result<()> {
        match self.kind {
            AttackKind::Gaussian { sigma_b } if !(sigma_b > 0.0 && sigma_b.is_finite()) => {
                Err(Error::Config(format!("gaussian attack sigma_b must be positive, got {sigma_b}")))
            }
            AttackKind::SignFlip { scale } if !(scale < 0.0 && scale.is_finite()) => {
                Err(Error::Config(format!("sign-flip attack scale must be negative, got {scale}")))
            }
            AttackKind::SampleDuplicate { victim_index } if victim_index >= num_regular => Err(Error::Config(format!(
                "victim_index {victim_index} does not name one of the {num_regular} regular workers"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            AttackKind::Gaussian { .. } => "gaussian",
            AttackKind::SignFlip { .. } => "sign_flip",
            AttackKind::SampleDuplicate { .. } => "sample_duplicate",
        }
    }
}

/// A transmitted message.
#[derive(Clone, Debug, PartialEq)]
pub enum WireMessage {
    Sign(SignVector),
    Vector(ParamVector),
}

/// Read-only snapshot of a round, visible to the (omniscient) attackers.
#[derive(Clone, Copy, Debug)]
pub struct ByzantineContext<'a> {
    pub x0: &'a ParamVector,
    pub regular_messages: &'a [WireMessage],
    pub honest_models: &'a [ParamVector],
    pub honest_grads: &'a [ParamVector],
}

/// What one Byzantine worker produces before wire adaptation.
#[derive(Clone, Debug, PartialEq)]
pub enum ByzantineOutput {
    Raw(ParamVector),
    Wire(WireMessage),
}

/// i.i.d. `N(0, sigma_b²)` entries.
pub fn gaussian_attack<R: Rng + ?Sized>(dim: usize, sigma_b: f64, rng: &mut R) -> Result<ParamVector> {
    if dim == 0 {
        return Err(Error::InvalidInput("attack dimension must be at least 1".into()));
    }
    let normal = Normal::new(0.0, sigma_b)
        .map_err(|_| Error::InvalidInput(format!("invalid sigma_b {sigma_b}")))?;
    ParamVector::new((0..dim).map(|_| normal.sample(rng)).collect())
}

/// `scale · truth`.
pub fn sign_flip_attack(truth: &[f64], scale: f64) -> Result<ParamVector> {
    if !(scale < 0.0) {
        return Err(Error::OutOfRange {
            name: "scale",
            value: scale,
            allowed: "(-inf, 0)",
        });
    }
    ParamVector::new(truth.iter().map(|t| scale * t).collect())
}

/// Exact copy of the victim's wire message.
pub fn sample_duplicate_attack(ctx: &ByzantineContext<'_>, victim: usize) -> Result<WireMessage> {
    ctx.regular_messages.get(victim).cloned().ok_or_else(|| {
        Error::InvalidInput(format!(
            "victim {victim} out of range for {} regular messages",
            ctx.regular_messages.len()
        ))
    })
}

/// Runs one Byzantine worker's attack for this round.
pub fn generate<R: Rng + ?Sized>(
    spec: &AttackSpec,
    transmitted: MessageKind,
    ctx: &ByzantineContext<'_>,
    rng: &mut R,
) -> Result<ByzantineOutput> {
    match spec.kind {
        AttackKind::Gaussian { sigma_b } => Ok(ByzantineOutput::Raw(gaussian_attack(ctx.x0.len(), sigma_b, rng)?)),
        AttackKind::SignFlip { scale } => {
            let source = match spec.applies_to.unwrap_or(transmitted) {
                MessageKind::ModelMessage => ctx.honest_models,
                MessageKind::GradientMessage => ctx.honest_grads,
            };
            let truth = mean_aggregate(source)?;
            Ok(ByzantineOutput::Raw(sign_flip_attack(&truth, scale)?))
        }
        AttackKind::SampleDuplicate { victim_index } => {
            Ok(ByzantineOutput::Wire(sample_duplicate_attack(ctx, victim_index)?))
        }
    }
}
