//! RSA worker/master updates and the baseline aggregation rules.
//!
//! Messages on the wire use master-side orientation: worker `k` sends (a
//! perturbation of) `sign(x0 - xk)`, and the master adds them up directly.

use crate::error::{Error, Result};
use crate::paramcore::{check_len, norm2, sign_of, ParamVector, SignVector};

/// Penalty weight `λ` and constant step `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RsaConfig {
    lambda: f64,
    alpha: f64,
}

impl RsaConfig {
    /// `lambda = 0` is accepted and turns the worker update into plain SGD.
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: lambda,
                allowed: "[0, inf)",
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: alpha,
                allowed: "(0, inf)",
            });
        }
        Ok(Self { lambda, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Master-side rule for gradient-message baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AggregateRule {
    Mean,
    SignMajority,
    GeometricMedian { tol: f64, max_iter: usize },
    RsaSignSum,
}

impl AggregateRule {
    pub const DEFAULT_GM_TOL: f64 = 1e-8;
    pub const DEFAULT_GM_MAX_ITER: usize = 1000;

    pub fn geometric_median() -> Self {
        AggregateRule::GeometricMedian {
            tol: Self::DEFAULT_GM_TOL,
            max_iter: Self::DEFAULT_GM_MAX_ITER,
        }
    }
}

/// `xk - α (gk + λ sign(xk - x0))`. Uses the unperturbed sign.
pub fn rsa_worker_update(xk: &[f64], gk: &[f64], x0: &[f64], cfg: RsaConfig) -> Result<ParamVector> {
    check_len(xk.len(), gk.len())?;
    check_len(xk.len(), x0.len())?;
    let out = xk
        .iter()
        .zip(gk)
        .zip(x0)
        .map(|((&x, &g), &m)| x - cfg.alpha * (g + cfg.lambda * f64::from(sign_of(x - m))))
        .collect();
    ParamVector::new(out)
}

/// `x0 - α (∇f0 + λ Σ messages)`.
///
/// Each message moves every coordinate by exactly `±αλ`; the sum is formed in
/// integers so the result does not depend on message order.
pub fn rsa_master_update(x0: &[f64], grad_f0: &[f64], messages: &[SignVector], cfg: RsaConfig) -> Result<ParamVector> {
    if messages.is_empty() {
        return Err(Error::Empty("messages"));
    }
    check_len(x0.len(), grad_f0.len())?;
    let totals = sign_sums(messages, x0.len())?;
    let out = x0
        .iter()
        .zip(grad_f0)
        .zip(&totals)
        .map(|((&x, &g), &s)| x - cfg.alpha * (g + cfg.lambda * f64::from(s)))
        .collect();
    ParamVector::new(out)
}

fn sign_sums(messages: &[SignVector], len: usize) -> Result<Vec<i32>> {
    let mut totals = vec![0i32; len];
    for m in messages {
        check_len(len, m.len())?;
        for (t, &s) in totals.iter_mut().zip(m.signs()) {
            *t += i32::from(s);
        }
    }
    Ok(totals)
}

/// Coordinate-wise arithmetic mean.
pub fn mean_aggregate(vectors: &[ParamVector]) -> Result<ParamVector> {
    let first = vectors.first().ok_or(Error::Empty("vectors"))?;
    let mut acc = vec![0.0; first.len()];
    for v in vectors {
        check_len(first.len(), v.len())?;
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    ParamVector::new(acc.into_iter().map(|a| a / n).collect())
}

/// Majority vote per coordinate; ties go to +1.
pub fn sign_majority_aggregate(messages: &[SignVector]) -> Result<SignVector> {
    let first = messages.first().ok_or(Error::Empty("messages"))?;
    let totals = sign_sums(messages, first.len())?;
    Ok(SignVector::from_valid(totals.iter().map(|&t| if t >= 0 { 1 } else { -1 }).collect()))
}

/// Distance below which an iterate is treated as sitting on a data point.
const ANCHOR_EPS: f64 = 1e-12;
const ANCHOR_DAMPING: f64 = 0.5;
const ANCHOR_CHECK_EVERY: usize = 8;

/// Minimizer of `Σ_k ‖y - p_k‖₂` by Weiszfeld iteration, started at the mean.
///
/// When the iterate lands on data points, their optimality is checked with the
/// subgradient condition `‖Σ_{others} (p_k - y)/‖p_k - y‖‖ ≤ multiplicity`; if it
/// holds the point is returned, otherwise a half-length Weiszfeld step over the
/// remaining points moves off it. For two points the start (midpoint) is
/// already a fixed point, so the midpoint is returned.
pub fn geometric_median(points: &[ParamVector], tol: f64, max_iter: usize) -> Result<ParamVector> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            allowed: "(0, inf)",
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    let mut y = mean_aggregate(points)?.into_inner();
    if points.len() == 1 {
        return Ok(ParamVector::from_finite(y));
    }
    let d = y.len();
    let mut dist = vec![0.0; points.len()];
    for it in 0..max_iter {
        let mut anchored = 0usize;
        for (dk, p) in dist.iter_mut().zip(points) {
            *dk = distance(&y, p);
            if *dk < ANCHOR_EPS {
                anchored += 1;
            }
        }
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for (&dk, p) in dist.iter().zip(points) {
            if dk < ANCHOR_EPS {
                continue;
            }
            let w = 1.0 / dk;
            den += w;
            for (n, x) in num.iter_mut().zip(p.iter()) {
                *n += w * x;
            }
        }
        let next: Vec<f64> = if anchored == 0 {
            num.iter().map(|n| n / den).collect()
        } else {
            if anchored == points.len() {
                return Ok(ParamVector::from_finite(y));
            }
            if data_point_is_optimal(&y, points) {
                return Ok(ParamVector::from_finite(y));
            }
            y.iter()
                .zip(&num)
                .map(|(yi, n)| yi + ANCHOR_DAMPING * (n / den - yi))
                .collect()
        };
        let moved = distance(&y, &next);
        y = next;
        if moved < tol {
            return ParamVector::new(y);
        }
        // Iterates creep toward an optimal data point only sublinearly, so
        // test the nearest one directly.
        if it % ANCHOR_CHECK_EVERY == 0 {
            let p = nearest(&y, points).expect("at least two points");
            if data_point_is_optimal(p, points) {
                return Ok(p.clone());
            }
        }
    }
    Err(Error::MedianNoConvergence {
        iterations: max_iter,
        last: ParamVector::new(y)?,
    })
}

fn nearest<'a>(y: &[f64], points: &'a [ParamVector]) -> Option<&'a ParamVector> {
    points
        .iter()
        .map(|p| (distance(y, p), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

/// Subgradient test at a data point: the unit pulls of the other points must
/// not outweigh the number of points sitting there.
fn data_point_is_optimal(at: &[f64], points: &[ParamVector]) -> bool {
    let mut pull = vec![0.0; at.len()];
    let mut multiplicity = 0usize;
    for p in points {
        let d = distance(at, p);
        if d < ANCHOR_EPS {
            multiplicity += 1;
            continue;
        }
        for ((r, x), a) in pull.iter_mut().zip(p.iter()).zip(at) {
            *r += (x - a) / d;
        }
    }
    norm2(&pull) <= multiplicity as f64
}

/// Sum of Euclidean distances from `y` to every point.
pub fn median_objective(y: &[f64], points: &[ParamVector]) -> f64 {
    points.iter().map(|p| distance(y, p)).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
