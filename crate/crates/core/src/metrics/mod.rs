//! Evaluation and the Moreau-envelope stationarity diagnostic.

mod moreau;

pub use moreau::{
    full_objective_h, moreau_grad_norm_sq, prox_certificate, prox_point, ConsensusObjective, L1Objective,
    MoreauConfig, Objective, QuadraticObjective, StackedPoint, ZeroObjective,
};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::paramcore::Classifier;

/// Index of the largest logit, ties resolved toward the lowest index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn eval_accuracy<C: Classifier + ?Sized>(model: &C, params: &[f64], data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut correct = 0usize;
    for i in 0..data.len() {
        let s = data.sample(i);
        if argmax(&model.logits(params, s.x)?) == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mean cross-entropy over the whole dataset.
pub fn eval_loss<C: Classifier + ?Sized>(model: &C, params: &[f64], data: &Dataset) -> Result<f64> {
    model.loss(params, &data.samples())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramcore::LinearModel;

    fn toy() -> Dataset {
        // four one-hot inputs, label = position
        let mut features = vec![0.0; 16];
        for i in 0..4 {
            features[i * 4 + i] = 1.0;
        }
        Dataset::new(features, 4, vec![0, 1, 2, 3], 4).unwrap()
    }

    #[test]
    fn memorizing_model_is_perfect() {
        let model = LinearModel::new(4, 4).unwrap();
        // identity weights, zero bias
        let mut p = vec![0.0; model.num_params()];
        for i in 0..4 {
            p[i * 4 + i] = 5.0;
        }
        assert_eq!(eval_accuracy(&model, &p, &toy()).unwrap(), 1.0);
    }

    #[test]
    fn constant_logits_score_chance() {
        let model = LinearModel::new(4, 10).unwrap();
        let labels: Vec<usize> = (0..100).map(|i| i % 10).collect();
        let ds = Dataset::new(vec![0.5; 400], 4, labels, 10).unwrap();
        let p = vec![0.0; model.num_params()];
        // every prediction ties, so class 0 wins
        assert_eq!(eval_accuracy(&model, &p, &ds).unwrap(), 0.1);
    }

    #[test]
    fn matches_naive_loop() {
        let model = LinearModel::new(4, 4).unwrap();
        let p: Vec<f64> = (0..model.num_params()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let ds = toy();
        let mut correct = 0;
        for i in 0..ds.len() {
            let z = model.logits(&p, ds.row(i)).unwrap();
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pred = z.iter().position(|&v| v == max).unwrap();
            correct += usize::from(pred == ds.labels()[i]);
        }
        assert_eq!(eval_accuracy(&model, &p, &ds).unwrap(), correct as f64 / 4.0);
    }

    #[test]
    fn argmax_ties_pick_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn empty_set_rejected() {
        let ds = Dataset::new(vec![], 2, vec![], 2).unwrap();
        let model = LinearModel::new(2, 2).unwrap();
        assert!(eval_accuracy(&model, &[0.0; 6], &ds).is_err());
    }
}
