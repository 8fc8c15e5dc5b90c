use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Isotropic Gaussian classes with means on scaled coordinate axes.
///
/// Class `c < dim` has mean `s·e_c`, class `dim + c` has mean `-s·e_c`, with
/// `s = separation/√2`, so every pair of means is at least `separation` apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    pub class_mean_separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config("synthetic data needs at least 2 classes".into()));
        }
        if self.dim == 0 || self.num_classes > 2 * self.dim {
            return Err(Error::Config(format!(
                "synthetic dim {} cannot host {} axis-aligned class means (need dim >= classes/2)",
                self.dim, self.num_classes
            )));
        }
        if self.samples_per_class == 0 {
            return Err(Error::Config("samples_per_class must be positive".into()));
        }
        if !(self.class_mean_separation > 0.0 && self.class_mean_separation.is_finite()) {
            return Err(Error::Config("class_mean_separation must be positive".into()));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config("noise_std must be positive".into()));
        }
        Ok(())
    }

    pub fn class_mean(&self, class: usize) -> Vec<f64> {
        let s = self.class_mean_separation / std::f64::consts::SQRT_2;
        let mut mu = vec![0.0; self.dim];
        if class < self.dim {
            mu[class] = s;
        } else {
            mu[class - self.dim] = -s;
        }
        mu
    }
}

/// Training set: `samples_per_class` draws per class, classes interleaved.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    generate(spec, spec.samples_per_class, 0)
}

/// Held-out set from an independent stream of the same mixture.
pub fn gen_synthetic_test(spec: &SyntheticSpec, samples_per_class: usize) -> Result<Dataset> {
    generate(spec, samples_per_class, 1)
}

fn generate(spec: &SyntheticSpec, per_class: usize, stream_index: usize) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = stream(spec.seed, Purpose::Synthetic, stream_index, 0);
    let means: Vec<Vec<f64>> = (0..spec.num_classes).map(|c| spec.class_mean(c)).collect();
    let mut features = Vec::with_capacity(per_class * spec.num_classes * spec.dim);
    let mut labels = Vec::with_capacity(per_class * spec.num_classes);
    for _ in 0..per_class {
        for (c, mu) in means.iter().enumerate() {
            for &m in mu {
                let e: f64 = rng.sample(StandardNormal);
                features.push(m + spec.noise_std * e);
            }
            labels.push(c);
        }
    }
    Dataset::new(features, spec.dim, labels, spec.num_classes)
}
