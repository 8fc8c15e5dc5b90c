//! Datasets: the MNIST IDX container and a synthetic Gaussian-mixture generator.

mod idx;
mod synthetic;

pub use idx::{encode_idx_images, encode_idx_labels, load_idx, parse_idx, IMAGES_MAGIC, LABELS_MAGIC};
pub use synthetic::{gen_synthetic, gen_synthetic_test, SyntheticSpec};

use crate::error::{Error, Result};
use crate::paramcore::Sample;

/// Row-major feature matrix with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("feature dimension must be positive".into()));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                actual: features.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&l| l >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {} at index {i} is not below {num_classes}",
                labels[i]
            )));
        }
        crate::paramcore::check_finite(&features)?;
        Ok(Self {
            features,
            dim,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            x: self.row(i),
            label: self.labels[i],
        }
    }

    pub fn samples(&self) -> Vec<Sample<'_>> {
        (0..self.len()).map(|i| self.sample(i)).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Vec<Sample<'_>> {
        indices.iter().map(|&i| self.sample(i)).collect()
    }

    /// Count of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}
