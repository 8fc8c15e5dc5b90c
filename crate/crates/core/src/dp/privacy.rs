//! Exact privacy loss of the sign-Gaussian mechanism.
//!
//! For adjacent differences `u` and `u + v`, the log-ratio of the probability
//! of observing signs `y` is
//!
//! `PL = Σ_i [ ln Φ(y_i u_i / σ) - ln Φ(y_i (u_i + v_i) / σ) ]`.
//!
//! [`worst_case_gauss_pl`] searches the sphere `‖v‖ = Δu` for the largest such
//! loss. Each term grows with `|v_i|` in the direction opposite to `y_i`, so the
//! supremum over the ball lies on its surface, and for fixed `v` the best `y`
//! is chosen coordinate by coordinate.

use std::f64::consts::PI;

use super::mechanism::Sensitivity;
use super::normal::log_norm_cdf;
use crate::error::{Error, Result};
use crate::paramcore::{check_finite, check_len, SignVector};

pub const MAX_EXHAUSTIVE_DIM: usize = 4;
pub const MIN_RESOLUTION: usize = 32;

/// Exact log-probability ratio of outcome `y` between inputs `u` and `u + v`.
pub fn exact_gauss_pl(u: &[f64], v: &[f64], y: &SignVector, sigma: f64) -> Result<f64> {
    check_len(u.len(), v.len())?;
    check_len(u.len(), y.len())?;
    check_finite(u)?;
    check_finite(v)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::OutOfRange {
            name: "sigma",
            value: sigma,
            allowed: "(0, inf)",
        });
    }
    Ok(u.iter()
        .zip(v)
        .zip(y.iter())
        .map(|((&ui, &vi), yi)| coord_pl(ui, vi, yi, sigma))
        .sum())
}

#[inline]
fn coord_pl(u: f64, v: f64, y: f64, sigma: f64) -> f64 {
    log_norm_cdf(y * u / sigma) - log_norm_cdf(y * (u + v) / sigma)
}

/// Largest loss found and where it was attained.
#[derive(Clone, Debug, PartialEq)]
pub struct WorstCase {
    pub pl: f64,
    pub v: Vec<f64>,
    pub y: SignVector,
}

/// Max over `y ∈ {±1}^d` and `v` on the radius-`Δu` sphere of [`exact_gauss_pl`].
///
/// `v` ranges over a hyperspherical angle grid with `resolution` steps around
/// the full circle, the `2d` axis points `±Δu·e_i`, and a pattern-search
/// refinement started from the best grid point. Every candidate is a feasible
/// `v`, so the result never exceeds the true supremum.
pub fn worst_case_gauss_pl(u: &[f64], sens: Sensitivity, sigma: f64, resolution: usize) -> Result<WorstCase> {
    let d = u.len();
    if d == 0 {
        return Err(Error::Empty("u"));
    }
    if d > MAX_EXHAUSTIVE_DIM {
        return Err(Error::InvalidInput(format!(
            "exhaustive privacy search supports d <= {MAX_EXHAUSTIVE_DIM}, got {d}"
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "search resolution {resolution} below minimum {MIN_RESOLUTION}"
        )));
    }
    check_finite(u)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::OutOfRange {
            name: "sigma",
            value: sigma,
            allowed: "(0, inf)",
        });
    }
    let radius = sens.delta_u();
    let search = Search { u, sigma, radius };

    let mut best = Candidate {
        pl: f64::NEG_INFINITY,
        angles: vec![],
        v: vec![],
    };
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = s * radius;
            let pl = search.best_over_y(&v);
            if pl > best.pl {
                best = Candidate { pl, angles: vec![], v };
            }
        }
    }

    if d >= 2 {
        let n_angles = d - 1;
        let polar_steps = resolution / 2;
        let mut idx = vec![0usize; n_angles];
        loop {
            let angles: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(k, &j)| {
                    if k + 1 == n_angles {
                        2.0 * PI * j as f64 / resolution as f64
                    } else {
                        PI * j as f64 / polar_steps as f64
                    }
                })
                .collect();
            let v = search.point(&angles);
            let pl = search.best_over_y(&v);
            if pl > best.pl {
                best = Candidate { pl, angles, v };
            }
            // odometer over the angle grid
            let mut k = 0;
            loop {
                let limit = if k + 1 == n_angles { resolution } else { polar_steps + 1 };
                idx[k] += 1;
                if idx[k] < limit {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == n_angles {
                    break;
                }
            }
            if k == n_angles {
                break;
            }
        }
        if !best.angles.is_empty() {
            best = search.refine(best, 2.0 * PI / resolution as f64);
        }
    }

    let y = search.best_y(&best.v);
    Ok(WorstCase {
        pl: best.pl,
        v: best.v,
        y,
    })
}

struct Candidate {
    pl: f64,
    angles: Vec<f64>,
    v: Vec<f64>,
}

struct Search<'a> {
    u: &'a [f64],
    sigma: f64,
    radius: f64,
}

impl Search<'_> {
    fn point(&self, angles: &[f64]) -> Vec<f64> {
        let d = angles.len() + 1;
        let mut v = vec![0.0; d];
        let mut sin_prod = self.radius;
        for (k, &a) in angles.iter().enumerate() {
            v[k] = sin_prod * a.cos();
            sin_prod *= a.sin();
        }
        v[d - 1] = sin_prod;
        v
    }

    fn best_over_y(&self, v: &[f64]) -> f64 {
        self.u
            .iter()
            .zip(v)
            .map(|(&ui, &vi)| coord_pl(ui, vi, 1.0, self.sigma).max(coord_pl(ui, vi, -1.0, self.sigma)))
            .sum()
    }

    fn best_y(&self, v: &[f64]) -> SignVector {
        let signs = self
            .u
            .iter()
            .zip(v)
            .map(|(&ui, &vi)| {
                if coord_pl(ui, vi, 1.0, self.sigma) >= coord_pl(ui, vi, -1.0, self.sigma) {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SignVector::from_valid(signs)
    }

    /// Coordinate pattern search on the angles; only accepts improvements.
    fn refine(&self, mut best: Candidate, mut step: f64) -> Candidate {
        while step > 1e-9 {
            let mut improved = false;
            for k in 0..best.angles.len() {
                for dir in [1.0, -1.0] {
                    let mut angles = best.angles.clone();
                    angles[k] += dir * step;
                    let v = self.point(&angles);
                    let pl = self.best_over_y(&v);
                    if pl > best.pl {
                        best = Candidate { pl, angles, v };
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    }
}
