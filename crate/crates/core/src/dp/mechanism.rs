use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::paramcore::{check_finite, sign_of, sign_vec, SignVector};

/// Randomized response on each sign: keep with probability `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipMechanism {
    gamma: f64,
}

impl FlipMechanism {
    /// `gamma = 0.5` is accepted as the zero-budget limit. `gamma = 1` is not a
    /// private mechanism; use [`Mechanism::None`] for that.
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&gamma) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: gamma,
                allowed: "[0.5, 1)",
            });
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Adds `N(0, sigma²)` noise to the pre-sign difference before taking signs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignGaussMechanism {
    sigma: f64,
}

impl SignGaussMechanism {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::OutOfRange {
                name: "sigma",
                value: sigma,
                allowed: "(0, inf)",
            });
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Pure (ε, 0) budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                value: epsilon,
                allowed: "(0, inf)",
            });
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        0.0
    }
}

/// ℓ2 sensitivity `Δu` of the model difference `u = x0 - xk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sensitivity {
    delta_u: f64,
}

impl Sensitivity {
    pub fn new(delta_u: f64) -> Result<Self> {
        if !(delta_u > 0.0 && delta_u.is_finite()) {
            return Err(Error::OutOfRange {
                name: "sensitivity",
                value: delta_u,
                allowed: "(0, inf)",
            });
        }
        Ok(Self { delta_u })
    }

    /// `Δu = 2 α M` for constant step `α` and clip bound `M`.
    pub fn from_step_and_clip(alpha: f64, clip_bound: f64) -> Result<Self> {
        Self::new(2.0 * alpha * clip_bound)
    }

    pub fn delta_u(&self) -> f64 {
        self.delta_u
    }
}

/// Independently negates each sign with probability `1 - gamma`.
pub fn flip_perturb<R: Rng + ?Sized>(s: &SignVector, mech: FlipMechanism, rng: &mut R) -> SignVector {
    let out = s
        .signs()
        .iter()
        .map(|&v| if rng.random::<f64>() < mech.gamma { v } else { -v })
        .collect();
    SignVector::from_valid(out)
}

/// `sign(u + e)` with `e ~ N(0, sigma² I)`. Takes the raw difference, not its sign.
pub fn gauss_perturb<R: Rng + ?Sized>(u: &[f64], mech: SignGaussMechanism, rng: &mut R) -> Result<SignVector> {
    check_finite(u)?;
    let out = u
        .iter()
        .map(|&ui| {
            let e: f64 = rng.sample(StandardNormal);
            sign_of(ui + mech.sigma * e)
        })
        .collect();
    Ok(SignVector::from_valid(out))
}

/// `gamma = e^ε / (1 + e^ε)`, the keep probability whose privacy loss is ε.
pub fn calibrate_gamma(budget: PrivacyBudget) -> FlipMechanism {
    FlipMechanism {
        gamma: 1.0 / (1.0 + (-budget.epsilon).exp()),
    }
}

/// Worst-case per-message privacy loss of randomized response, `ln(γ/(1-γ))`.
pub fn exact_flip_pl(mech: FlipMechanism) -> f64 {
    mech.gamma.ln() - (-mech.gamma).ln_1p()
}

/// Smallest noise level (times `1 + margin`) meeting the sufficient condition
/// `σ > max{ (2/3)·max_i u_i, 4Δu/ε }` for (ε, 0)-DP of the sign-Gaussian
/// mechanism. `u_entry_bound` bounds `|u_i|`; the condition needs ε < 8.
pub fn calibrate_sigma(
    budget: PrivacyBudget,
    sens: Sensitivity,
    u_entry_bound: f64,
    margin: f64,
) -> Result<SignGaussMechanism> {
    let eps = budget.epsilon;
    if !(eps > 0.0 && eps < 8.0) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: eps,
            allowed: "(0, 8) for sign-Gaussian calibration",
        });
    }
    if !(u_entry_bound >= 0.0 && u_entry_bound.is_finite()) {
        return Err(Error::OutOfRange {
            name: "u_entry_bound",
            value: u_entry_bound,
            allowed: "[0, inf)",
        });
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::OutOfRange {
            name: "margin",
            value: margin,
            allowed: "(0, inf)",
        });
    }
    let floor = (2.0 / 3.0 * u_entry_bound).max(4.0 * sens.delta_u / eps);
    SignGaussMechanism::new((1.0 + margin) * floor)
}

/// Perturbation applied to a regular worker's outgoing message.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mechanism {
    /// Plain sign, no privacy. Only for the non-private RSA baseline.
    None,
    Flip { mech: FlipMechanism, epsilon: f64 },
    Gauss { mech: SignGaussMechanism, epsilon: f64 },
}

impl Mechanism {
    pub fn flip(budget: PrivacyBudget) -> Self {
        Mechanism::Flip {
            mech: calibrate_gamma(budget),
            epsilon: budget.epsilon,
        }
    }

    pub fn gauss(budget: PrivacyBudget, sens: Sensitivity, u_entry_bound: f64, margin: f64) -> Result<Self> {
        Ok(Mechanism::Gauss {
            mech: calibrate_sigma(budget, sens, u_entry_bound, margin)?,
            epsilon: budget.epsilon,
        })
    }

    /// Per-message privacy budget; infinite when no mechanism is applied.
    pub fn epsilon(&self) -> f64 {
        match self {
            Mechanism::None => f64::INFINITY,
            Mechanism::Flip { epsilon, .. } | Mechanism::Gauss { epsilon, .. } => *epsilon,
        }
    }

    pub fn is_private(&self) -> bool {
        !matches!(self, Mechanism::None)
    }

    /// Turns the difference `u = x0 - xk` into the transmitted sign message.
    pub fn perturb<R: Rng + ?Sized>(&self, u: &[f64], rng: &mut R) -> Result<SignVector> {
        match self {
            Mechanism::None => sign_vec(u),
            Mechanism::Flip { mech, .. } => Ok(flip_perturb(&sign_vec(u)?, *mech, rng)),
            Mechanism::Gauss { mech, .. } => gauss_perturb(u, *mech, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::normal::norm_cdf;
    use crate::rng::{stream, Purpose};

    const N: usize = 1_000_000;

    fn three_sigma(p: f64) -> f64 {
        3.0 * (p * (1.0 - p) / N as f64).sqrt()
    }

    fn keep_rate(gamma: f64, seed: u64) -> f64 {
        let mech = FlipMechanism::new(gamma).unwrap();
        let s = SignVector::ones(N);
        let out = flip_perturb(&s, mech, &mut stream(seed, Purpose::Verify, 0, 0));
        out.signs().iter().filter(|&&v| v == 1).count() as f64 / N as f64
    }

    #[test]
    fn flip_keep_rates() {
        assert!((keep_rate(0.5, 1) - 0.5).abs() <= 0.0016);
        assert!((keep_rate(0.8, 2) - 0.8).abs() <= 0.0012);
        let s = SignVector::ones(10_000);
        let out = flip_perturb(&s, FlipMechanism::new(1.0 - 1e-12).unwrap(), &mut stream(3, Purpose::Verify, 0, 0));
        assert_eq!(out, s);
    }

    #[test]
    fn gauss_marginals() {
        let mut rng = stream(4, Purpose::Verify, 0, 0);
        let mech = SignGaussMechanism::new(1.0).unwrap();
        for (u, want) in [(0.0, 0.5), (1.0, 0.8413447460685429)] {
            let out = gauss_perturb(&vec![u; N], mech, &mut rng).unwrap();
            let p = out.signs().iter().filter(|&&v| v == 1).count() as f64 / N as f64;
            assert!((p - want).abs() <= three_sigma(want), "u = {u}: {p}");
        }
        let tiny = SignGaussMechanism::new(1e-300).unwrap();
        let out = gauss_perturb(&vec![1.0; 10_000], tiny, &mut rng).unwrap();
        assert!(out.signs().iter().all(|&v| v == 1));
    }

    #[test]
    fn expectation_identities() {
        let bound = 4.0 / (N as f64).sqrt();
        let mut rng = stream(5, Purpose::Verify, 0, 0);
        // flip: E = (2γ - 1) sign(u)
        let mech = FlipMechanism::new(0.7).unwrap();
        let s = SignVector::new(vec![-1; N]).unwrap();
        let mean = flip_perturb(&s, mech, &mut rng).iter().sum::<f64>() / N as f64;
        assert!((mean - (2.0 * 0.7 - 1.0) * -1.0).abs() <= bound);
        // gauss: E = (2Φ(|u|/σ) - 1) sign(u)
        let g = SignGaussMechanism::new(0.5).unwrap();
        let u = -0.3;
        let mean = gauss_perturb(&vec![u; N], g, &mut rng).unwrap().iter().sum::<f64>() / N as f64;
        let want = (2.0 * norm_cdf(u.abs() / 0.5) - 1.0) * -1.0;
        assert!((mean - want).abs() <= bound, "{mean} vs {want}");
    }

    #[test]
    fn gamma_calibration() {
        let m = calibrate_gamma(PrivacyBudget::new(4f64.ln()).unwrap());
        assert!((m.gamma() - 0.8).abs() < 1e-15);
        let m = calibrate_gamma(PrivacyBudget::new(1e-9).unwrap());
        assert!((m.gamma() - 0.5).abs() < 1e-9);
        for eps in [0.2, 0.4, 1.38] {
            let m = calibrate_gamma(PrivacyBudget::new(eps).unwrap());
            assert!((m.gamma() - eps.exp() / (1.0 + eps.exp())).abs() < 1e-15);
            assert!((exact_flip_pl(m) - eps).abs() < 1e-12);
        }
        assert!(PrivacyBudget::new(0.0).is_err());
        assert!(PrivacyBudget::new(-1.0).is_err());
    }

    #[test]
    fn flip_pl_values() {
        assert_eq!(exact_flip_pl(FlipMechanism::new(0.5).unwrap()), 0.0);
        assert!((exact_flip_pl(FlipMechanism::new(0.8).unwrap()) - 4f64.ln()).abs() < 1e-15);
        assert!(FlipMechanism::new(1.0).is_err());
        assert!(FlipMechanism::new(0.49).is_err());
    }

    #[test]
    fn sigma_calibration() {
        let b = |e| PrivacyBudget::new(e).unwrap();
        let s = Sensitivity::from_step_and_clip(0.01, 1.0).unwrap();
        assert!((s.delta_u() - 0.02).abs() < 1e-18);
        let m = calibrate_sigma(b(0.4), s, 0.01, 0.05).unwrap();
        assert!((m.sigma() - 0.21).abs() < 1e-14);

        let one = Sensitivity::new(1.0).unwrap();
        let m = calibrate_sigma(b(7.999), one, 0.0, 0.05).unwrap();
        assert!(m.sigma() > 4.0 / 7.999);
        assert!((m.sigma() - 1.05 * 4.0 / 7.999).abs() < 1e-14);

        // the entry-bound term dominates when u is large
        let m = calibrate_sigma(b(1.0), Sensitivity::new(0.01).unwrap(), 3.0, 0.1).unwrap();
        assert!((m.sigma() - 2.2).abs() < 1e-14);

        assert!(matches!(calibrate_sigma(b(8.0), one, 0.0, 0.05), Err(Error::OutOfRange { .. })));
        assert!(calibrate_sigma(b(0.4), one, -1.0, 0.05).is_err());
        assert!(calibrate_sigma(b(0.4), one, 0.0, 0.0).is_err());
    }

    #[test]
    fn mechanism_dispatch() {
        let mut rng = stream(6, Purpose::Verify, 0, 0);
        let u = [0.5, -0.5, 0.0];
        assert_eq!(Mechanism::None.perturb(&u, &mut rng).unwrap().signs(), &[1, -1, 1]);
        assert!(Mechanism::None.epsilon().is_infinite());
        let f = Mechanism::flip(PrivacyBudget::new(1.38).unwrap());
        assert_eq!(f.epsilon(), 1.38);
        assert_eq!(f.perturb(&u, &mut rng).unwrap().len(), 3);
    }
}
