//! Proximal point and Moreau-envelope gradient of composite objectives
//! `S(y) + N(y)` with smooth `S` and a separable nonsmooth `N`.

use crate::aggregation::RsaConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::paramcore::{check_len, norm2, Classifier, Model, ParamVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoreauConfig {
    pub rho_bar: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Weight on the consensus penalty, in (0, 1].
    pub gamma_weight: f64,
}

impl Default for MoreauConfig {
    fn default() -> Self {
        Self {
            rho_bar: 1.0,
            inner_tol: 1e-10,
            inner_max_iter: 200_000,
            gamma_weight: 1.0,
        }
    }
}

impl MoreauConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_bar > 0.0 && self.rho_bar.is_finite()) {
            return Err(Error::OutOfRange {
                name: "rho_bar",
                value: self.rho_bar,
                allowed: "(0, inf)",
            });
        }
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return Err(Error::OutOfRange {
                name: "inner_tol",
                value: self.inner_tol,
                allowed: "(0, inf)",
            });
        }
        if !(self.gamma_weight > 0.0 && self.gamma_weight <= 1.0) {
            return Err(Error::OutOfRange {
                name: "gamma_weight",
                value: self.gamma_weight,
                allowed: "(0, 1]",
            });
        }
        if self.inner_max_iter == 0 {
            return Err(Error::Config("inner_max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// `[x_1; ...; x_r; x_0]` laid out contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedPoint {
    flat: Vec<f64>,
    block_dim: usize,
}

impl StackedPoint {
    pub fn new(locals: &[ParamVector], x0: &ParamVector) -> Result<Self> {
        let d = x0.len();
        let mut flat = Vec::with_capacity((locals.len() + 1) * d);
        for x in locals {
            check_len(d, x.len())?;
            flat.extend_from_slice(x);
        }
        flat.extend_from_slice(x0);
        Ok(Self { flat, block_dim: d })
    }

    pub fn from_flat(flat: Vec<f64>, block_dim: usize) -> Result<Self> {
        if block_dim == 0 || flat.is_empty() || !flat.len().is_multiple_of(block_dim) {
            return Err(Error::InvalidInput(format!(
                "{} values do not split into blocks of {block_dim}",
                flat.len()
            )));
        }
        Ok(Self { flat, block_dim })
    }

    pub fn num_regular(&self) -> usize {
        self.flat.len() / self.block_dim - 1
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.flat[k * self.block_dim..(k + 1) * self.block_dim]
    }

    pub fn x0(&self) -> &[f64] {
        self.block(self.num_regular())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }
}

pub trait Objective {
    fn dim(&self) -> usize;
    fn smooth_value(&self, y: &[f64]) -> Result<f64>;
    fn smooth_grad(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn nonsmooth_value(&self, _y: &[f64]) -> f64 {
        0.0
    }

    /// `argmin_y N(y) + ||y - z||² / (2t)`.
    fn prox_nonsmooth(&self, z: &[f64], _t: f64) -> Vec<f64> {
        z.to_vec()
    }

    /// Smallest `||g + v||` over `v` in the subdifferential of `N` at `y`.
    fn min_norm_subgrad(&self, _y: &[f64], g: &[f64]) -> f64 {
        norm2(g)
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        Ok(self.smooth_value(y)? + self.nonsmooth_value(y))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZeroObjective(pub usize);

impl Objective for ZeroObjective {
    fn dim(&self) -> usize {
        self.0
    }

    fn smooth_value(&self, _y: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn smooth_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; y.len()])
    }
}

/// `½||y - a||²`.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    pub anchor: Vec<f64>,
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn smooth_value(&self, y: &[f64]) -> Result<f64> {
        Ok(0.5 * y.iter().zip(&self.anchor).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
    }

    fn smooth_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(y.iter().zip(&self.anchor).map(|(a, b)| a - b).collect())
    }
}

/// `weight·||y||₁`.
#[derive(Clone, Copy, Debug)]
pub struct L1Objective {
    pub dim: usize,
    pub weight: f64,
}

impl Objective for L1Objective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn smooth_value(&self, _y: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn smooth_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; y.len()])
    }

    fn nonsmooth_value(&self, y: &[f64]) -> f64 {
        self.weight * y.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox_nonsmooth(&self, z: &[f64], t: f64) -> Vec<f64> {
        z.iter().map(|&v| soft(v, t * self.weight)).collect()
    }

    fn min_norm_subgrad(&self, y: &[f64], g: &[f64]) -> f64 {
        let c = self.weight;
        let r: Vec<f64> = y
            .iter()
            .zip(g)
            .map(|(&yi, &gi)| if yi == 0.0 { soft(gi, c) } else { gi + c * yi.signum() })
            .collect();
        norm2(&r)
    }
}

fn soft(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// The stacked objective
/// `h(y) = Σ_k F_k(y_k) + c0·||y_0||² + γλ Σ_k ||y_k - y_0||₁`
/// where `F_k` is worker `k`'s full local empirical risk.
pub struct ConsensusObjective<'a> {
    model: &'a Model,
    train: &'a Dataset,
    shards: &'a [Vec<usize>],
    reg_coeff: f64,
    penalty: f64,
    d: usize,
}

impl<'a> ConsensusObjective<'a> {
    pub fn new(
        model: &'a Model,
        train: &'a Dataset,
        shards: &'a [Vec<usize>],
        reg_coeff: f64,
        rsa: RsaConfig,
        gamma_weight: f64,
    ) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::Empty("regular shards"));
        }
        if shards.iter().any(Vec::is_empty) {
            return Err(Error::Empty("worker shard"));
        }
        Ok(Self {
            model,
            train,
            shards,
            reg_coeff,
            penalty: gamma_weight * rsa.lambda(),
            d: model.num_params(),
        })
    }

    fn r(&self) -> usize {
        self.shards.len()
    }
}

impl Objective for ConsensusObjective<'_> {
    fn dim(&self) -> usize {
        (self.r() + 1) * self.d
    }

    fn smooth_value(&self, y: &[f64]) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        let d = self.d;
        let mut total = 0.0;
        for (k, shard) in self.shards.iter().enumerate() {
            total += self.model.loss(&y[k * d..(k + 1) * d], &self.train.select(shard))?;
        }
        let x0 = &y[self.r() * d..];
        Ok(total + self.reg_coeff * x0.iter().map(|v| v * v).sum::<f64>())
    }

    fn smooth_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), y.len())?;
        let d = self.d;
        let mut g = Vec::with_capacity(y.len());
        for (k, shard) in self.shards.iter().enumerate() {
            let (_, gk) = self.model.loss_and_grad(&y[k * d..(k + 1) * d], &self.train.select(shard))?;
            g.extend_from_slice(&gk);
        }
        g.extend(y[self.r() * d..].iter().map(|v| 2.0 * self.reg_coeff * v));
        Ok(g)
    }

    fn nonsmooth_value(&self, y: &[f64]) -> f64 {
        let (d, r) = (self.d, self.r());
        let x0 = &y[r * d..];
        let mut s = 0.0;
        for k in 0..r {
            s += y[k * d..(k + 1) * d].iter().zip(x0).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        self.penalty * s
    }

    fn prox_nonsmooth(&self, z: &[f64], t: f64) -> Vec<f64> {
        let (d, r) = (self.d, self.r());
        let tc = t * self.penalty;
        let mut out = vec![0.0; z.len()];
        let mut column = vec![0.0; r];
        for j in 0..d {
            for k in 0..r {
                column[k] = z[k * d + j];
            }
            let z0 = z[r * d + j];
            let y0 = consensus_center(&column, z0, tc);
            for k in 0..r {
                out[k * d + j] = y0 + soft(column[k] - y0, tc);
            }
            out[r * d + j] = y0;
        }
        out
    }

    fn min_norm_subgrad(&self, y: &[f64], g: &[f64]) -> f64 {
        let (d, r) = (self.d, self.r());
        let c = self.penalty;
        let mut sq = 0.0;
        let mut free = Vec::with_capacity(r);
        for j in 0..d {
            let y0 = y[r * d + j];
            let mut g0 = g[r * d + j];
            free.clear();
            for k in 0..r {
                let (yk, gk) = (y[k * d + j], g[k * d + j]);
                if yk == y0 {
                    free.push(gk);
                } else {
                    let e = c * (yk - y0).signum();
                    sq += (gk + e).powi(2);
                    g0 -= e;
                }
            }
            // Free blocks pick e_k = clamp(w - g_k) where w is the residual of
            // the center block; w solves a monotone scalar equation.
            let phi = |w: f64| w - g0 + free.iter().map(|&gk| (w - gk).clamp(-c, c)).sum::<f64>();
            let span = g0.abs() + c * free.len() as f64 + 1.0;
            let w = bisect(phi, -span, span);
            sq += w * w;
            sq += free.iter().map(|&gk| (gk + (w - gk).clamp(-c, c)).powi(2)).sum::<f64>();
        }
        sq.sqrt()
    }
}

/// Center coordinate of the prox of `c·Σ|y_k - y_0|` (with `c = tc/t`) for
/// one coordinate column: root of
/// `y0 - z0 - Σ clamp(z_k - y0, -tc, tc) = 0`, which is strictly increasing.
fn consensus_center(zk: &[f64], z0: f64, tc: f64) -> f64 {
    if tc == 0.0 {
        return z0;
    }
    let phi = |y0: f64| y0 - z0 - zk.iter().map(|&z| (z - y0).clamp(-tc, tc)).sum::<f64>();
    let spread = zk.len() as f64 * tc;
    let y0 = bisect(phi, z0 - spread, z0 + spread);
    // Polish with the linear equation of the active set at the bracketed root.
    let (mut num, mut den) = (z0, 1.0);
    for &z in zk {
        let w = z - y0;
        if w.abs() < tc {
            num += z;
            den += 1.0;
        } else {
            num += tc * w.signum();
        }
    }
    let polished = num / den;
    if phi(polished).abs() <= phi(y0).abs() {
        polished
    } else {
        y0
    }
}

/// Root of a nondecreasing function on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(hi).abs() < f(lo).abs() {
        hi
    } else {
        lo
    }
}

/// `h` at a stacked point of local models and the master model.
pub fn full_objective_h(
    point: &StackedPoint,
    model: &Model,
    train: &Dataset,
    shards: &[Vec<usize>],
    reg_coeff: f64,
    cfg: &MoreauConfig,
    rsa: RsaConfig,
) -> Result<f64> {
    cfg.validate()?;
    if shards.len() != point.num_regular() {
        return Err(Error::DimensionMismatch {
            expected: point.num_regular(),
            actual: shards.len(),
        });
    }
    check_len(model.num_params(), point.block_dim())?;
    ConsensusObjective::new(model, train, shards, reg_coeff, rsa, cfg.gamma_weight)?.value(point.as_slice())
}

/// Largest curvature of the smooth part near `y`, by power iteration on
/// finite-difference Hessian-vector products.
fn estimate_smoothness<O: Objective + ?Sized>(obj: &O, y: &[f64]) -> Result<f64> {
    let n = y.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let h = 1e-5 * (1.0 + norm2(y));
    let mut lambda = 0.0;
    for _ in 0..20 {
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let plus: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let gp = obj.smooth_grad(&plus)?;
        let gm = obj.smooth_grad(&minus)?;
        v = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        lambda = norm2(&v);
    }
    Ok(lambda)
}

/// `argmin_y h(y) + (ρ̄/2)||y - x||²` by proximal gradient with a
/// backtracking safeguard on the initial step `1/(L + ρ̄)`.
///
/// Stops once the iterate moves less than `inner_tol` and a subgradient of
/// the subproblem with norm below `10·inner_tol·ρ̄` exists.
pub fn prox_point<O: Objective + ?Sized>(x: &[f64], cfg: &MoreauConfig, obj: &O) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_len(obj.dim(), x.len())?;
    let rho = cfg.rho_bar;
    let smooth = |y: &[f64]| -> Result<f64> {
        Ok(obj.smooth_value(y)? + 0.5 * rho * y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
    };
    let grad = |y: &[f64]| -> Result<Vec<f64>> {
        let mut g = obj.smooth_grad(y)?;
        g.iter_mut().zip(y.iter().zip(x)).for_each(|(gi, (a, b))| *gi += rho * (a - b));
        Ok(g)
    };

    let mut t = 1.0 / (estimate_smoothness(obj, x)? + rho);
    let mut y = x.to_vec();
    let mut fy = smooth(&y)?;
    let mut gy = grad(&y)?;
    let mut last_step = f64::INFINITY;
    for _ in 0..cfg.inner_max_iter {
        let (y_new, f_new) = loop {
            let z: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - t * g).collect();
            let cand = obj.prox_nonsmooth(&z, t);
            let f_cand = smooth(&cand)?;
            let diff: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model_bound = fy
                + gy.iter().zip(&diff).map(|(g, dv)| g * dv).sum::<f64>()
                + diff.iter().map(|dv| dv * dv).sum::<f64>() / (2.0 * t);
            if f_cand <= model_bound + 1e-12 * (1.0 + fy.abs()) || t < 1e-300 {
                break (cand, f_cand);
            }
            t *= 0.5;
        };
        last_step = y_new.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        y = y_new;
        fy = f_new;
        gy = grad(&y)?;
        if last_step < cfg.inner_tol && obj.min_norm_subgrad(&y, &gy) < 10.0 * cfg.inner_tol * rho {
            return Ok(y);
        }
    }
    Err(Error::ProxNoConvergence {
        iterations: cfg.inner_max_iter,
        last_step,
    })
}

/// Norm of the smallest subgradient of `h(y) + (ρ̄/2)||y - x||²` at `y`.
pub fn prox_certificate<O: Objective + ?Sized>(x: &[f64], y: &[f64], rho_bar: f64, obj: &O) -> Result<f64> {
    check_len(x.len(), y.len())?;
    let mut g = obj.smooth_grad(y)?;
    g.iter_mut().zip(y.iter().zip(x)).for_each(|(gi, (a, b))| *gi += rho_bar * (a - b));
    Ok(obj.min_norm_subgrad(y, &g))
}

/// `||∇h_{1/ρ̄}(x)||² = ρ̄²·||x - prox(x)||²`.
pub fn moreau_grad_norm_sq<O: Objective + ?Sized>(x: &[f64], cfg: &MoreauConfig, obj: &O) -> Result<f64> {
    let y = prox_point(x, cfg, obj)?;
    let dist_sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(cfg.rho_bar * cfg.rho_bar * dist_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramcore::LinearModel;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    fn cfg(rho_bar: f64) -> MoreauConfig {
        MoreauConfig {
            rho_bar,
            ..MoreauConfig::default()
        }
    }

    #[test]
    fn quadratic_closed_form() {
        let a = vec![1.0, -2.0, 0.5];
        let x = vec![3.0, 0.0, -1.0];
        let obj = QuadraticObjective { anchor: a.clone() };
        for rho in [0.5, 1.0, 4.0] {
            let y = prox_point(&x, &cfg(rho), &obj).unwrap();
            for i in 0..3 {
                let want = (rho * x[i] + a[i]) / (rho + 1.0);
                assert!((y[i] - want).abs() < 1e-8);
            }
        }
        let g = moreau_grad_norm_sq(&x, &cfg(1.0), &obj).unwrap();
        let want: f64 = x.iter().zip(&a).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / 4.0;
        assert!((g - want).abs() < 1e-8);
    }

    #[test]
    fn zero_objective_is_identity() {
        let x = vec![0.3, -7.0];
        assert_eq!(prox_point(&x, &cfg(1.0), &ZeroObjective(2)).unwrap(), x);
        assert_eq!(moreau_grad_norm_sq(&x, &cfg(1.0), &ZeroObjective(2)).unwrap(), 0.0);
    }

    #[test]
    fn l1_soft_threshold_and_grid_scan() {
        let x = vec![2.0, -0.3, 0.05, -5.0];
        let obj = L1Objective { dim: 4, weight: 0.7 };
        for rho in [1.0, 2.0] {
            let y = prox_point(&x, &cfg(rho), &obj).unwrap();
            for i in 0..4 {
                assert!((y[i] - soft(x[i], 0.7 / rho)).abs() < 1e-8);
                // 1-D scan of the separable subproblem
                let f = |v: f64| 0.7 * v.abs() + 0.5 * rho * (v - x[i]).powi(2);
                let best = (-600_000..=600_000)
                    .map(|s| s as f64 * 1e-5)
                    .min_by(|a, b| f(*a).total_cmp(&f(*b)))
                    .unwrap();
                assert!((best - y[i]).abs() <= 1e-5);
            }
        }
    }

    /// Brute-force prox of the consensus penalty on one coordinate column.
    #[test]
    fn consensus_center_matches_scan() {
        let mut rng = stream(9, Purpose::Verify, 0, 0);
        for _ in 0..50 {
            let r = rng.random_range(1..5);
            let zk: Vec<f64> = (0..r).map(|_| rng.random_range(-2.0..2.0)).collect();
            let z0 = rng.random_range(-2.0..2.0);
            let tc = rng.random_range(0.01..1.0);
            let y0 = consensus_center(&zk, z0, tc);
            let obj = |c: f64| {
                0.5 * (c - z0).powi(2)
                    + zk.iter()
                        .map(|&z| {
                            let yk = c + soft(z - c, tc);
                            0.5 * (yk - z).powi(2) + tc * (yk - c).abs()
                        })
                        .sum::<f64>()
            };
            let scan = (-40_000..=40_000)
                .map(|s| s as f64 * 1e-4)
                .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
                .unwrap();
            assert!((scan - y0).abs() < 2e-4, "{scan} vs {y0}");
        }
    }

    fn consensus_fixture() -> (Model, Dataset, Vec<Vec<usize>>) {
        let model = Model::Linear(LinearModel::new(2, 2).unwrap());
        let features = vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 0.5, 0.2, -0.3, 0.9, 0.1];
        let ds = Dataset::new(features, 2, vec![0, 1, 1, 0, 1, 0], 2).unwrap();
        (model, ds, vec![vec![0, 1, 2], vec![3, 4, 5]])
    }

    #[test]
    fn h_hand_computed() {
        let (model, ds, shards) = consensus_fixture();
        let rsa = RsaConfig::new(0.3, 0.1).unwrap();
        let x1 = ParamVector::new(vec![0.5, 0.0, 0.0, -0.5, 0.1, 0.0]).unwrap();
        let x2 = ParamVector::zeros(6);
        let x0 = ParamVector::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.2]).unwrap();
        let point = StackedPoint::new(&[x1.clone(), x2.clone()], &x0).unwrap();
        let c = cfg(1.0);
        let h = full_objective_h(&point, &model, &ds, &shards, 0.01, &c, rsa).unwrap();

        // spelled out sample by sample
        let xent = |p: &[f64], i: usize| {
            let x = ds.row(i);
            let z = [p[0] * x[0] + p[1] * x[1] + p[4], p[2] * x[0] + p[3] * x[1] + p[5]];
            let lse = (z[0].exp() + z[1].exp()).ln();
            lse - z[ds.labels()[i]]
        };
        let f1 = (xent(&x1, 0) + xent(&x1, 1) + xent(&x1, 2)) / 3.0;
        let f2 = (xent(&x2, 3) + xent(&x2, 4) + xent(&x2, 5)) / 3.0;
        let f0 = 0.01 * 0.04;
        let pen = 0.3 * ((0.5 + 0.5 + 0.1 + 0.2) + 0.2);
        assert!((h - (f1 + f2 + f0 + pen)).abs() < 1e-12);

        // consensus point: penalty vanishes
        let same = StackedPoint::new(&[x0.clone(), x0.clone()], &x0).unwrap();
        let h_same = full_objective_h(&same, &model, &ds, &shards, 0.01, &c, rsa).unwrap();
        let f = (0..3).map(|i| xent(&x0, i)).sum::<f64>() / 3.0 + (3..6).map(|i| xent(&x0, i)).sum::<f64>() / 3.0;
        assert!((h_same - f - f0).abs() < 1e-12);
    }

    #[test]
    fn consensus_prox_certificate_and_identity() {
        let (model, ds, shards) = consensus_fixture();
        let rsa = RsaConfig::new(0.2, 0.1).unwrap();
        let c = cfg(1.0);
        let obj = ConsensusObjective::new(&model, &ds, &shards, 0.01, rsa, 1.0).unwrap();
        let mut rng = stream(3, Purpose::Verify, 0, 0);
        let x: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = prox_point(&x, &c, &obj).unwrap();
        let cert = prox_certificate(&x, &y, c.rho_bar, &obj).unwrap();
        assert!(cert < 10.0 * c.inner_tol * c.rho_bar, "{cert}");
        let g = moreau_grad_norm_sq(&x, &c, &obj).unwrap();
        let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert_eq!(dist, g.sqrt() / c.rho_bar);

        // optimality against random perturbations of the subproblem
        let sub = |v: &[f64]| obj.value(v).unwrap() + 0.5 * v.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let base = sub(&y);
        for _ in 0..200 {
            let p: Vec<f64> = y.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect();
            assert!(sub(&p) >= base - 1e-12);
        }
    }

    #[test]
    fn subproblem_is_convex_along_segments() {
        let (model, ds, shards) = consensus_fixture();
        let rsa = RsaConfig::new(0.2, 0.1).unwrap();
        let obj = ConsensusObjective::new(&model, &ds, &shards, 0.01, rsa, 1.0).unwrap();
        let mut rng = stream(4, Purpose::Verify, 0, 0);
        let x: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sub = |v: &[f64]| obj.value(v).unwrap() + 0.5 * v.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for _ in 0..100 {
            let a: Vec<f64> = (0..18).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..18).map(|_| rng.random_range(-2.0..2.0)).collect();
            let m: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            assert!(sub(&m) < 0.5 * (sub(&a) + sub(&b)));
        }
    }

    #[test]
    fn halving_inner_tol_is_stable() {
        let (model, ds, shards) = consensus_fixture();
        let rsa = RsaConfig::new(0.2, 0.1).unwrap();
        let obj = ConsensusObjective::new(&model, &ds, &shards, 0.01, rsa, 1.0).unwrap();
        let x: Vec<f64> = (0..18).map(|i| ((i * 13 % 7) as f64 - 3.0) / 4.0).collect();
        let mut c = MoreauConfig {
            inner_tol: 1e-6,
            ..MoreauConfig::default()
        };
        let coarse = moreau_grad_norm_sq(&x, &c, &obj).unwrap();
        c.inner_tol /= 2.0;
        let fine = moreau_grad_norm_sq(&x, &c, &obj).unwrap();
        assert!((coarse - fine).abs() < 0.05 * fine);
    }

    #[test]
    fn config_and_shape_errors() {
        assert!(MoreauConfig { rho_bar: 0.0, ..MoreauConfig::default() }.validate().is_err());
        assert!(MoreauConfig { gamma_weight: 1.5, ..MoreauConfig::default() }.validate().is_err());
        assert!(prox_point(&[1.0], &MoreauConfig::default(), &ZeroObjective(2)).is_err());
        let tight = MoreauConfig {
            inner_max_iter: 1,
            inner_tol: 1e-15,
            ..MoreauConfig::default()
        };
        let obj = QuadraticObjective { anchor: vec![100.0] };
        assert!(matches!(
            prox_point(&[0.0], &tight, &obj),
            Err(Error::ProxNoConvergence { .. })
        ));
    }
}
