use std::ops::Deref;

use crate::error::{Error, Result};

/// Flat real-valued model or message vector.
///
/// Constructors reject NaN and infinities, so every `ParamVector` a caller
/// holds is finite.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Self(vec![value; len])
    }

    /// Wraps values already known to be finite. Used on internal hot paths
    /// whose inputs were validated.
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &[f64]) -> Result<ParamVector> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(other).map(|(a, b)| a - b).collect()))
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &[f64]) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scaled(&self, scale: f64) -> ParamVector {
        Self(self.0.iter().map(|v| v * scale).collect())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Element-wise ±1 message.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput(format!("sign entry {bad} is not +1 or -1")));
        }
        Ok(Self(signs))
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub(crate) fn from_valid(signs: Vec<i8>) -> Self {
        debug_assert!(signs.iter().all(|&s| s == 1 || s == -1));
        Self(signs)
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> SignVector {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&s| f64::from(s))
    }
}

/// Gradient clipping bound `M` on the ℓ2 norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipConfig {
    max_norm: f64,
}

impl ClipConfig {
    pub fn new(max_norm: f64) -> Result<Self> {
        if !(max_norm > 0.0 && max_norm.is_finite()) {
            return Err(Error::OutOfRange {
                name: "clip bound M",
                value: max_norm,
                allowed: "(0, inf)",
            });
        }
        Ok(Self { max_norm })
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }
}

/// Element-wise sign with `sign(0) = sign(-0.0) = +1`.
pub fn sign_vec(v: &[f64]) -> Result<SignVector> {
    check_finite(v)?;
    Ok(SignVector(v.iter().map(|&x| sign_of(x)).collect()))
}

/// Scalar sign used throughout: nonnegative (including -0.0) maps to +1.
#[inline]
pub fn sign_of(x: f64) -> i8 {
    // -0.0 >= 0.0 is true under IEEE comparison; NaN never reaches here.
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Rescales `g` onto the ball of radius `M` if it lies outside.
pub fn clip_grad(g: &[f64], clip: ClipConfig) -> Result<ParamVector> {
    check_finite(g)?;
    let norm = norm2(g);
    if norm <= clip.max_norm {
        return Ok(ParamVector(g.to_vec()));
    }
    let scale = clip.max_norm / norm;
    let mut out: Vec<f64> = g.iter().map(|v| v * scale).collect();
    // Rounding can leave the scaled norm a few ulps above M.
    let mut n = norm2(&out);
    while n > clip.max_norm {
        let shrink = clip.max_norm / n;
        out.iter_mut().for_each(|v| *v *= shrink * (1.0 - f64::EPSILON));
        n = norm2(&out);
    }
    Ok(ParamVector(out))
}

/// Gradient of `coeff * ||x||^2`.
pub fn reg_grad(x0: &[f64], coeff: f64) -> Result<ParamVector> {
    if !(coeff >= 0.0 && coeff.is_finite()) {
        return Err(Error::OutOfRange {
            name: "regularization coefficient",
            value: coeff,
            allowed: "[0, inf)",
        });
    }
    Ok(ParamVector(x0.iter().map(|v| 2.0 * coeff * v).collect()))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    // Scaled accumulation so huge attack vectors do not overflow.
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 || !max.is_finite() {
        return max;
    }
    let s: f64 = v.iter().map(|x| (x / max) * (x / max)).sum();
    max * s.sqrt()
}

pub(crate) fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "non-finite value {} at index {i}",
            v[i]
        ))),
        None => Ok(()),
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
