//! Classifiers over flat parameter vectors.
//!
//! Parameters are packed layer-major, weights before biases, with weight
//! matrices stored row-major as `(out_dim, in_dim)`. For the two-hidden-layer
//! network the order is `W1, b1, W2, b2, W3, b3`.

use rand::Rng;

use super::vector::{check_finite, check_len, ParamVector};
use crate::error::{Error, Result};

/// One labeled example borrowed from a dataset.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub label: usize,
}

/// A differentiable multi-class classifier with cross-entropy loss.
pub trait Classifier: Send + Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn num_params(&self) -> usize;

    fn logits(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>>;

    /// Mean cross-entropy over `batch` and its gradient.
    fn loss_and_grad(&self, params: &[f64], batch: &[Sample<'_>]) -> Result<(f64, ParamVector)>;

    fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector
    where
        Self: Sized;

    /// Mean cross-entropy without the gradient.
    fn loss(&self, params: &[f64], batch: &[Sample<'_>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let mut total = 0.0;
        for s in batch {
            let z = self.logits(params, s.x)?;
            total += cross_entropy(&z, s.label);
        }
        Ok(total / batch.len() as f64)
    }
}

/// Two hidden tanh layers of equal width followed by a linear output layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

impl MlpModel {
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidInput("MLP dimensions must be positive".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            output_dim,
        })
    }

    fn offsets(&self) -> MlpOffsets {
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        let w1 = 0;
        let b1 = w1 + h * i;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + o * h;
        MlpOffsets {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            end: b3 + o,
        }
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        check_len(self.num_params(), params.len())?;
        check_len(self.input_dim, x.len())
    }

    /// Forward pass keeping hidden activations for backprop.
    fn forward_cached(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let off = self.offsets();
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        let h1 = affine(&params[off.w1..off.b1], &params[off.b1..off.w2], x, h, i, true);
        let h2 = affine(&params[off.w2..off.b2], &params[off.b2..off.w3], &h1, h, h, true);
        let z = affine(&params[off.w3..off.b3], &params[off.b3..off.end], &h2, o, h, false);
        (h1, h2, z)
    }
}

struct MlpOffsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

impl Classifier for MlpModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn num_classes(&self) -> usize {
        self.output_dim
    }

    fn num_params(&self) -> usize {
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        i * h + h + h * h + h + h * o + o
    }

    fn logits(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check(params, x)?;
        check_finite(x)?;
        Ok(self.forward_cached(params, x).2)
    }

    fn loss_and_grad(&self, params: &[f64], batch: &[Sample<'_>]) -> Result<(f64, ParamVector)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        check_len(self.num_params(), params.len())?;
        let off = self.offsets();
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        let mut grad = vec![0.0; self.num_params()];
        let mut loss = 0.0;
        let mut dz2 = vec![0.0; h];
        let mut dz1 = vec![0.0; h];
        for s in batch {
            check_len(i, s.x.len())?;
            check_label(s.label, o)?;
            let (h1, h2, z) = self.forward_cached(params, s.x);
            let (l, dz) = softmax_xent_grad(&z, s.label);
            loss += l;

            outer_add(&mut grad[off.w3..off.b3], &dz, &h2);
            add(&mut grad[off.b3..off.end], &dz);
            transpose_mul(&params[off.w3..off.b3], &dz, o, h, &mut dz2);
            for (d, a) in dz2.iter_mut().zip(&h2) {
                *d *= 1.0 - a * a;
            }

            outer_add(&mut grad[off.w2..off.b2], &dz2, &h1);
            add(&mut grad[off.b2..off.w3], &dz2);
            transpose_mul(&params[off.w2..off.b2], &dz2, h, h, &mut dz1);
            for (d, a) in dz1.iter_mut().zip(&h1) {
                *d *= 1.0 - a * a;
            }

            outer_add(&mut grad[off.w1..off.b1], &dz1, s.x);
            add(&mut grad[off.b1..off.w2], &dz1);
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        check_finite(&grad)?;
        Ok((loss / n, ParamVector::from_finite(grad)))
    }

    fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let off = self.offsets();
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        let mut p = vec![0.0; self.num_params()];
        glorot(&mut p[off.w1..off.b1], i, h, rng);
        glorot(&mut p[off.w2..off.b2], h, h, rng);
        glorot(&mut p[off.w3..off.b3], h, o, rng);
        ParamVector::from_finite(p)
    }
}

/// Multinomial logistic regression: `logits = W x + b`. Convex in the
/// parameters, which is what the Moreau diagnostic needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearModel {
    pub input_dim: usize,
    pub output_dim: usize,
}

impl LinearModel {
    pub fn new(input_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidInput("linear model dimensions must be positive".into()));
        }
        Ok(Self {
            input_dim,
            output_dim,
        })
    }
}

impl Classifier for LinearModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn num_classes(&self) -> usize {
        self.output_dim
    }

    fn num_params(&self) -> usize {
        self.output_dim * self.input_dim + self.output_dim
    }

    fn logits(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_params(), params.len())?;
        check_len(self.input_dim, x.len())?;
        check_finite(x)?;
        let w_end = self.output_dim * self.input_dim;
        Ok(affine(&params[..w_end], &params[w_end..], x, self.output_dim, self.input_dim, false))
    }

    fn loss_and_grad(&self, params: &[f64], batch: &[Sample<'_>]) -> Result<(f64, ParamVector)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        check_len(self.num_params(), params.len())?;
        let w_end = self.output_dim * self.input_dim;
        let mut grad = vec![0.0; self.num_params()];
        let mut loss = 0.0;
        for s in batch {
            check_len(self.input_dim, s.x.len())?;
            check_label(s.label, self.output_dim)?;
            let z = affine(&params[..w_end], &params[w_end..], s.x, self.output_dim, self.input_dim, false);
            let (l, dz) = softmax_xent_grad(&z, s.label);
            loss += l;
            outer_add(&mut grad[..w_end], &dz, s.x);
            add(&mut grad[w_end..], &dz);
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        check_finite(&grad)?;
        Ok((loss / n, ParamVector::from_finite(grad)))
    }

    fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut p = vec![0.0; self.num_params()];
        let w_end = self.output_dim * self.input_dim;
        glorot(&mut p[..w_end], self.input_dim, self.output_dim, rng);
        ParamVector::from_finite(p)
    }
}

/// Either architecture, chosen at run configuration time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Mlp(MlpModel),
    Linear(LinearModel),
}

impl Classifier for Model {
    fn input_dim(&self) -> usize {
        match self {
            Model::Mlp(m) => m.input_dim(),
            Model::Linear(m) => m.input_dim(),
        }
    }

    fn num_classes(&self) -> usize {
        match self {
            Model::Mlp(m) => m.num_classes(),
            Model::Linear(m) => m.num_classes(),
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Model::Mlp(m) => m.num_params(),
            Model::Linear(m) => m.num_params(),
        }
    }

    fn logits(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Mlp(m) => m.logits(params, x),
            Model::Linear(m) => m.logits(params, x),
        }
    }

    fn loss_and_grad(&self, params: &[f64], batch: &[Sample<'_>]) -> Result<(f64, ParamVector)> {
        match self {
            Model::Mlp(m) => m.loss_and_grad(params, batch),
            Model::Linear(m) => m.loss_and_grad(params, batch),
        }
    }

    fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        match self {
            Model::Mlp(m) => m.init_params(rng),
            Model::Linear(m) => m.init_params(rng),
        }
    }
}

/// `log(sum(exp(z))) - z[label]`, computed with the max shift.
pub fn cross_entropy(z: &[f64], label: usize) -> f64 {
    log_sum_exp(z) - z[label]
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Loss and `d loss / d logits = softmax(z) - onehot(label)`.
fn softmax_xent_grad(z: &[f64], label: usize) -> (f64, Vec<f64>) {
    let lse = log_sum_exp(z);
    let mut dz: Vec<f64> = z.iter().map(|v| (v - lse).exp()).collect();
    dz[label] -= 1.0;
    (lse - z[label], dz)
}

fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(Error::InvalidInput(format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    Ok(())
}

fn affine(w: &[f64], b: &[f64], x: &[f64], rows: usize, cols: usize, tanh: bool) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            let row = &w[r * cols..(r + 1) * cols];
            let v = b[r] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
            if tanh {
                v.tanh()
            } else {
                v
            }
        })
        .collect()
}

fn outer_add(g: &mut [f64], left: &[f64], right: &[f64]) {
    let cols = right.len();
    for (r, &l) in left.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        for (gi, &x) in g[r * cols..(r + 1) * cols].iter_mut().zip(right) {
            *gi += l * x;
        }
    }
}

fn transpose_mul(w: &[f64], v: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for r in 0..rows {
        let vr = v[r];
        for (o, &a) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += a * vr;
        }
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

fn glorot<R: Rng + ?Sized>(w: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in w.iter_mut() {
        *v = rng.random_range(-limit..=limit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    /// Straightforward re-evaluation with explicit index loops.
    fn reference_logits(m: &MlpModel, p: &[f64], x: &[f64]) -> Vec<f64> {
        let (i, h, o) = (m.input_dim, m.hidden_dim, m.output_dim);
        let mut k = 0;
        let mut take = |n: usize| {
            let s = p[k..k + n].to_vec();
            k += n;
            s
        };
        let (w1, b1, w2, b2, w3, b3) = (take(h * i), take(h), take(h * h), take(h), take(o * h), take(o));
        let mut a1 = vec![0.0; h];
        for r in 0..h {
            let mut s = b1[r];
            for c in 0..i {
                s += w1[r * i + c] * x[c];
            }
            a1[r] = s.tanh();
        }
        let mut a2 = vec![0.0; h];
        for r in 0..h {
            let mut s = b2[r];
            for c in 0..h {
                s += w2[r * h + c] * a1[c];
            }
            a2[r] = s.tanh();
        }
        (0..o)
            .map(|r| b3[r] + (0..h).map(|c| w3[r * h + c] * a2[c]).sum::<f64>())
            .collect()
    }

    #[test]
    fn packed_length() {
        let m = MlpModel::new(784, 50, 10).unwrap();
        assert_eq!(m.num_params(), 784 * 50 + 50 + 50 * 50 + 50 + 50 * 10 + 10);
    }

    #[test]
    fn zero_params_give_zero_logits() {
        let m = MlpModel::new(3, 4, 2).unwrap();
        let z = m.logits(&vec![0.0; m.num_params()], &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
    }

    #[test]
    fn one_one_one_net_at_zero_input_returns_b3() {
        let m = MlpModel::new(1, 1, 1).unwrap();
        // W1, b1, W2, b2, W3, b3
        let p = [0.7, 0.0, -1.3, 0.0, 2.0, 0.42];
        assert_eq!(m.logits(&p, &[0.0]).unwrap(), vec![0.42]);
    }

    #[test]
    fn forward_matches_reference() {
        let m = MlpModel::new(5, 7, 3).unwrap();
        let mut rng = stream(11, Purpose::Verify, 0, 0);
        for _ in 0..10 {
            let p: Vec<f64> = (0..m.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = m.logits(&p, &x).unwrap();
            let b = reference_logits(&m, &p, &x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
            assert_eq!(a, m.logits(&p, &x).unwrap(), "forward must be deterministic");
        }
    }

    #[test]
    fn dimension_errors() {
        let m = MlpModel::new(2, 3, 2).unwrap();
        let p = vec![0.0; m.num_params()];
        assert!(matches!(m.logits(&p, &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(m.logits(&p[1..], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(m.loss_and_grad(&p, &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn uniform_logits_loss_is_ln_classes() {
        let m = MlpModel::new(2, 3, 10).unwrap();
        let p = vec![0.0; m.num_params()];
        let x = [0.3, -0.1];
        let (l, _) = m.loss_and_grad(&p, &[Sample { x: &x, label: 4 }]).unwrap();
        assert!((l - 10f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn duplicated_batch_is_mean_invariant() {
        let m = MlpModel::new(4, 5, 3).unwrap();
        let mut rng = stream(3, Purpose::Verify, 0, 0);
        let p = m.init_params(&mut rng);
        let x = [0.1, 0.9, -0.4, 0.2];
        let s = Sample { x: &x, label: 2 };
        let (l1, g1) = m.loss_and_grad(&p, &[s]).unwrap();
        let (l2, g2) = m.loss_and_grad(&p, &[s, s]).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_gradient_matches_finite_differences() {
        let m = LinearModel::new(3, 4).unwrap();
        let mut rng = stream(5, Purpose::Verify, 0, 0);
        let p: Vec<f64> = (0..m.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xs = [[0.5, -1.0, 2.0], [1.5, 0.2, -0.3]];
        let batch = [Sample { x: &xs[0], label: 1 }, Sample { x: &xs[1], label: 3 }];
        let (_, g) = m.loss_and_grad(&p, &batch).unwrap();
        for j in 0..m.num_params() {
            let h = 1e-5;
            let mut pp = p.clone();
            pp[j] += h;
            let up = m.loss(&pp, &batch).unwrap();
            pp[j] -= 2.0 * h;
            let down = m.loss(&pp, &batch).unwrap();
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-8 * (1.0 + g[j].abs()), "coord {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn glorot_bounds_and_zero_biases() {
        let m = MlpModel::new(6, 4, 3).unwrap();
        let p = m.init_params(&mut stream(1, Purpose::Init, 0, 0));
        let off = m.offsets();
        let lim1 = (6.0f64 / 10.0).sqrt();
        assert!(p[off.w1..off.b1].iter().all(|v| v.abs() <= lim1));
        assert!(p[off.b1..off.w2].iter().all(|&v| v == 0.0));
        assert!(p[off.b3..off.end].iter().all(|&v| v == 0.0));
    }
}
