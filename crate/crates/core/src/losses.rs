//! Cost functions `c(z, f(x))` written in terms of the residual `y - f(x)`,
//! their subgradients in the prediction, gauge functions dominating them on
//! the RKHS ball, and local Lipschitz data for the squared loss.

use serde::{Deserialize, Serialize};

use crate::distributions::Point;
use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    Squared,
    EpsInsensitive,
    Hinge,
    LogLoss,
    /// Misclassification indicator; evaluation only.
    ZeroOne,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Squared => "squared",
            LossFamily::EpsInsensitive => "eps_insensitive",
            LossFamily::Hinge => "hinge",
            LossFamily::LogLoss => "log_loss",
            LossFamily::ZeroOne => "zero_one",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub family: LossFamily,
    #[serde(default)]
    pub epsilon: f64,
}

impl LossSpec {
    pub fn squared() -> Self {
        LossSpec {
            family: LossFamily::Squared,
            epsilon: 0.0,
        }
    }

    pub fn eps_insensitive(epsilon: f64) -> Self {
        LossSpec {
            family: LossFamily::EpsInsensitive,
            epsilon,
        }
    }

    pub fn hinge() -> Self {
        LossSpec {
            family: LossFamily::Hinge,
            epsilon: 0.0,
        }
    }

    pub fn log_loss() -> Self {
        LossSpec {
            family: LossFamily::LogLoss,
            epsilon: 0.0,
        }
    }

    pub fn zero_one() -> Self {
        LossSpec {
            family: LossFamily::ZeroOne,
            epsilon: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(invalid(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        self.family != LossFamily::ZeroOne
    }

    /// Differentiable in the prediction everywhere.
    pub fn is_smooth(&self) -> bool {
        matches!(self.family, LossFamily::Squared | LossFamily::LogLoss)
    }

    pub fn eval(&self, y: f64, fx: f64) -> f64 {
        let t = y - fx;
        match self.family {
            LossFamily::Squared => 0.5 * t * t,
            LossFamily::EpsInsensitive => (t.abs() - self.epsilon).max(0.0),
            LossFamily::Hinge => (1.0 - t).max(0.0),
            LossFamily::LogLoss => softplus(-t),
            LossFamily::ZeroOne => {
                let predicted = fx >= 0.5;
                let label = y >= 0.5;
                if predicted == label {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Element of the subdifferential in `fx`; the midpoint of the interval at kinks.
    pub fn subgradient(&self, y: f64, fx: f64) -> Result<f64> {
        let t = y - fx;
        let g = match self.family {
            LossFamily::Squared => fx - y,
            LossFamily::EpsInsensitive => {
                let eps = self.epsilon;
                if t.abs() < eps {
                    0.0
                } else if t > eps {
                    -1.0
                } else if t < -eps {
                    1.0
                } else if eps == 0.0 {
                    0.0
                } else if t > 0.0 {
                    -0.5
                } else {
                    0.5
                }
            }
            LossFamily::Hinge => {
                if t < 1.0 {
                    1.0
                } else if t > 1.0 {
                    0.0
                } else {
                    0.5
                }
            }
            LossFamily::LogLoss => logistic(-t),
            LossFamily::ZeroOne => {
                return Err(Error::UnsupportedLoss(
                    "zero_one loss has no useful subgradient".into(),
                ))
            }
        };
        Ok(g)
    }
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn check_finite(y: f64, fx: f64) -> Result<()> {
    if y.is_finite() && fx.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "non-finite loss input (y = {y}, f(x) = {fx})"
        )))
    }
}

pub fn loss_eval(loss: &LossSpec, y: f64, fx: f64) -> Result<f64> {
    check_finite(y, fx)?;
    Ok(loss.eval(y, fx))
}

pub fn loss_subgradient(loss: &LossSpec, y: f64, fx: f64) -> Result<f64> {
    check_finite(y, fx)?;
    loss.subgradient(y, fx)
}

/// A loss, a kernel and the radius `beta` of the RKHS ball of admissible hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub loss: LossSpec,
    pub kernel: KernelSpec,
    pub beta: f64,
}

impl GaugeSpec {
    pub fn new(loss: LossSpec, kernel: KernelSpec, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(invalid(format!(
                "gauge radius beta must be positive, got {beta}"
            )));
        }
        Ok(GaugeSpec { loss, kernel, beta })
    }

    /// `phi(z)` with `c(z, f(x)) <= phi(z)` whenever `|f|_k <= beta`.
    ///
    /// Uses `|f(x)| <= beta sqrt(k(x, x))`. Squared loss:
    /// `y^2 + beta^2 k(x, x)`. The residual-Lipschitz losses (hinge,
    /// eps-insensitive, log-loss): `1 + |y| + beta sqrt(k(x, x))`. Zero-one: 1.
    pub fn phi(&self, z: &Point) -> f64 {
        let diag = self.kernel.eval_unchecked(&z.x, &z.x).max(0.0);
        match self.loss.family {
            LossFamily::Squared => z.y * z.y + self.beta * self.beta * diag,
            LossFamily::EpsInsensitive | LossFamily::Hinge | LossFamily::LogLoss => {
                1.0 + z.y.abs() + self.beta * diag.sqrt()
            }
            LossFamily::ZeroOne => 1.0,
        }
    }
}

/// Anything that assigns a nonnegative gauge value to a point.
pub trait Gauge {
    fn phi(&self, z: &Point) -> f64;
}

impl Gauge for GaugeSpec {
    fn phi(&self, z: &Point) -> f64 {
        GaugeSpec::phi(self, z)
    }
}

impl<F: Fn(&Point) -> f64> Gauge for F {
    fn phi(&self, z: &Point) -> f64 {
        self(z)
    }
}

pub fn gauge_phi(g: &GaugeSpec, z: &Point) -> Result<f64> {
    if z.x.len() != g.kernel.input_dim {
        return Err(Error::DimensionMismatch {
            expected: g.kernel.input_dim,
            got: z.x.len(),
        });
    }
    Ok(g.phi(z))
}

/// Order `p` and constant `C` with
/// `|c(z, f(x)) - c(z', f(x'))| <= C max(1, |z|, |z'|)^(p-1) |z - z'|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzProfile {
    pub order: f64,
    pub constant: f64,
    pub note: String,
}

/// Local Lipschitz profile of the squared loss over the RKHS ball of radius
/// `beta`, with the constants of the least-squares worked example:
/// linear `(2, max(1, beta)^2)`, Gaussian `(2, max(sqrt(2 gamma), 1))`,
/// polynomial `(2d, A1)` for even `d` and `(3d + 1, A2)` for odd `d`.
///
/// Other (loss, kernel) pairs have no closed-form profile and are reported as
/// unsupported.
pub fn lipschitz_profile(
    loss: &LossSpec,
    kernel: &KernelSpec,
    beta: f64,
) -> Result<LipschitzProfile> {
    if loss.family != LossFamily::Squared {
        return Err(Error::UnsupportedCombination(format!(
            "no Lipschitz profile for {} loss",
            loss.family.name()
        )));
    }
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let gamma = kernel.gamma;
    match kernel.family {
        KernelFamily::Linear => Ok(LipschitzProfile {
            order: 2.0,
            constant: beta.max(1.0).powi(2),
            note: "linear kernel".into(),
        }),
        KernelFamily::Gaussian => Ok(LipschitzProfile {
            order: 2.0,
            constant: (2.0 * gamma).sqrt().max(1.0),
            note: "gaussian kernel".into(),
        }),
        KernelFamily::Polynomial => {
            let d = kernel.degree as f64;
            let lead = 1.0 + beta * (gamma + 1.0).powf(d / 2.0);
            let half = ((1.0 + gamma) / 2.0).powf(d / 2.0);
            if kernel.degree.is_multiple_of(2) {
                Ok(LipschitzProfile {
                    order: 2.0 * d,
                    constant: lead * (beta * half).max(beta).max(1.0),
                    note: "polynomial kernel, even degree".into(),
                })
            } else {
                let inner = (2.0 * beta * half)
                    .max(4.0 * beta)
                    .max(4.0 * beta * gamma.powf(d))
                    .max(1.0);
                Ok(LipschitzProfile {
                    order: 3.0 * d + 1.0,
                    constant: lead * inner,
                    note: "polynomial kernel, odd degree".into(),
                })
            }
        }
        other => Err(Error::UnsupportedCombination(format!(
            "no Lipschitz profile for squared loss with {} kernel",
            other.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{function_eval, growth_profile, rkhs_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn convex_losses() -> Vec<LossSpec> {
        vec![
            LossSpec::squared(),
            LossSpec::eps_insensitive(0.1),
            LossSpec::eps_insensitive(0.0),
            LossSpec::hinge(),
            LossSpec::log_loss(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(loss_eval(&LossSpec::squared(), 1.0, 0.5).unwrap(), 0.125);
        assert_eq!(loss_eval(&LossSpec::hinge(), 2.0, 0.5).unwrap(), 0.0);
        assert_eq!(
            loss_eval(&LossSpec::eps_insensitive(0.1), 1.0, 0.95).unwrap(),
            0.0
        );
        assert!((loss_eval(&LossSpec::log_loss(), 0.0, 0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(loss_eval(&LossSpec::zero_one(), 1.0, 0.2).unwrap(), 1.0);
        assert_eq!(loss_eval(&LossSpec::zero_one(), 1.0, 0.9).unwrap(), 0.0);
        assert!(loss_eval(&LossSpec::squared(), f64::NAN, 0.0).is_err());
        assert!(LossSpec::eps_insensitive(-0.1).validate().is_err());
    }

    #[test]
    fn log_loss_is_stable_for_large_residuals() {
        let l = LossSpec::log_loss();
        assert!((l.eval(0.0, 800.0) - 800.0).abs() < 1e-9);
        assert!(l.eval(800.0, 0.0) >= 0.0);
        assert!(l.subgradient(0.0, 800.0).unwrap() <= 1.0);
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(
            loss_subgradient(&LossSpec::squared(), 1.0, 0.5).unwrap(),
            -0.5
        );
        // hinge kink at y - fx = 1
        let h = LossSpec::hinge();
        let g = loss_subgradient(&h, 1.5, 0.5).unwrap();
        assert_eq!(g, 0.5);
        let step = 1e-7;
        let right = (h.eval(1.5, 0.5 + step) - h.eval(1.5, 0.5)) / step;
        let left = (h.eval(1.5, 0.5) - h.eval(1.5, 0.5 - step)) / step;
        assert!(left - 1e-9 <= g && g <= right + 1e-9);
        assert_eq!(
            loss_subgradient(&LossSpec::log_loss(), 0.3, 0.3).unwrap(),
            0.5
        );
        assert!(matches!(
            loss_subgradient(&LossSpec::zero_one(), 1.0, 0.0),
            Err(Error::UnsupportedLoss(_))
        ));
    }

    #[test]
    fn eps_insensitive_kinks_use_midpoints() {
        let l = LossSpec::eps_insensitive(0.25);
        assert_eq!(l.subgradient(1.25, 1.0).unwrap(), -0.5);
        assert_eq!(l.subgradient(0.75, 1.0).unwrap(), 0.5);
        assert_eq!(
            LossSpec::eps_insensitive(0.0)
                .subgradient(1.0, 1.0)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn gauge_examples() {
        let z = |x: Vec<f64>, y: f64| Point::new(x, y);
        let lin = GaugeSpec::new(LossSpec::squared(), KernelSpec::linear(2), 1.0).unwrap();
        assert_eq!(gauge_phi(&lin, &z(vec![3.0, 4.0], 1.0)).unwrap(), 26.0);
        let poly =
            GaugeSpec::new(LossSpec::squared(), KernelSpec::polynomial(1.0, 2, 2), 1.0).unwrap();
        assert_eq!(gauge_phi(&poly, &z(vec![1.0, 0.0], 0.0)).unwrap(), 4.0);
        // k(x, x) = 1 for the Gaussian kernel, so the ball term is beta^2
        let gau = GaugeSpec::new(LossSpec::squared(), KernelSpec::gaussian(0.5, 1), 1.0).unwrap();
        assert_eq!(gauge_phi(&gau, &z(vec![0.3], 2.0)).unwrap(), 5.0);
        assert!(gauge_phi(&gau, &z(vec![0.3, 1.0], 2.0)).is_err());
        assert!(GaugeSpec::new(LossSpec::squared(), KernelSpec::linear(1), 0.0).is_err());
    }

    fn random_ball_function(
        rng: &mut ChaCha8Rng,
        kernel: &KernelSpec,
        beta: f64,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let dim = kernel.input_dim;
        let m = rng.random_range(1..6);
        let anchors: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let mut alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let norm = rkhs_norm(kernel, &anchors, &alpha).unwrap();
        let target = beta * rng.random_range(0.0..=1.0f64);
        if norm > 0.0 {
            for a in &mut alpha {
                *a *= target / norm;
            }
        }
        (anchors, alpha)
    }

    #[test]
    fn gauge_dominates_loss_on_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let kernels = vec![
            KernelSpec::linear(2),
            KernelSpec::gaussian(0.8, 2),
            KernelSpec::laplacian(0.6, 2),
            KernelSpec::polynomial(0.7, 2, 2),
        ];
        for loss in convex_losses().into_iter().chain([LossSpec::zero_one()]) {
            for kernel in &kernels {
                let beta = 1.7;
                let g = GaugeSpec::new(loss, kernel.clone(), beta).unwrap();
                for _ in 0..1000 {
                    let (anchors, alpha) = random_ball_function(&mut rng, kernel, beta);
                    let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let y = rng.random_range(-3.0..3.0);
                    let fx = function_eval(kernel, &anchors, &alpha, &x).unwrap();
                    let z = Point::new(x, y);
                    assert!(loss.eval(y, fx) <= g.phi(&z) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn convex_combination_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for loss in convex_losses() {
            for _ in 0..2000 {
                let y = rng.random_range(-3.0..3.0);
                let a = rng.random_range(-4.0..4.0);
                let b = rng.random_range(-4.0..4.0);
                let th: f64 = rng.random_range(0.0..=1.0);
                let mid = loss.eval(y, th * a + (1.0 - th) * b);
                let comb = th * loss.eval(y, a) + (1.0 - th) * loss.eval(y, b);
                assert!(mid <= comb + 1e-12, "{:?}", loss.family);
            }
        }
    }

    #[test]
    fn subgradient_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for loss in convex_losses() {
            for i in 0..2000 {
                let y = rng.random_range(-3.0..3.0);
                // hit the kinks regularly
                let a = match i % 4 {
                    0 => y - 1.0,
                    1 => y - loss.epsilon,
                    2 => y + loss.epsilon,
                    _ => rng.random_range(-4.0..4.0),
                };
                let b = rng.random_range(-4.0..4.0);
                let g = loss.subgradient(y, a).unwrap();
                assert!(loss.eval(y, b) >= loss.eval(y, a) + g * (b - a) - 1e-9);
            }
        }
    }

    #[test]
    fn lipschitz_profile_examples() {
        let sq = LossSpec::squared();
        let p = lipschitz_profile(&sq, &KernelSpec::linear(1), 2.0).unwrap();
        assert_eq!((p.order, p.constant), (2.0, 4.0));
        let p = lipschitz_profile(&sq, &KernelSpec::gaussian(0.125, 1), 10.0).unwrap();
        assert_eq!((p.order, p.constant), (2.0, 1.0));
        let p = lipschitz_profile(&sq, &KernelSpec::polynomial(1.0, 2, 1), 1.0).unwrap();
        assert_eq!(p.order, 4.0);
        // A1 = (1 + beta (gamma + 1)^(d/2)) max(beta ((1 + gamma)/2)^(d/2), beta, 1) = 3 * 1
        assert!((p.constant - 3.0).abs() < 1e-12);
        let p = lipschitz_profile(&sq, &KernelSpec::polynomial(1.0, 3, 1), 1.0).unwrap();
        assert_eq!(p.order, 10.0);
        // A2 = (1 + 2^(3/2)) max(2, 4, 4, 1)
        assert!((p.constant - (1.0 + 2f64.powf(1.5)) * 4.0).abs() < 1e-12);
        assert!(matches!(
            lipschitz_profile(&LossSpec::hinge(), &KernelSpec::linear(1), 1.0),
            Err(Error::UnsupportedCombination(_))
        ));
        assert!(matches!(
            lipschitz_profile(&sq, &KernelSpec::laplacian(1.0, 1), 1.0),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    /// The envelope `max(eta(z), eta(z')) (|y - y'| + beta g(|x - x'|))` with
    /// `eta(z) = |y| + beta sqrt(k(x, x))` bounds squared-loss differences.
    #[test]
    fn squared_loss_envelope_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let beta = 1.3;
        for kernel in [
            KernelSpec::linear(1),
            KernelSpec::gaussian(0.125, 1),
            KernelSpec::gaussian(3.0, 1),
        ] {
            let growth = growth_profile(&kernel, None);
            for _ in 0..1000 {
                let (anchors, alpha) = random_ball_function(&mut rng, &kernel, beta);
                let (x1, y1) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let (x2, y2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let f1 = function_eval(&kernel, &anchors, &alpha, &[x1]).unwrap();
                let f2 = function_eval(&kernel, &anchors, &alpha, &[x2]).unwrap();
                let eta = |x: f64, y: f64| y.abs() + beta * kernel.eval(&[x], &[x]).unwrap().sqrt();
                let bound = eta(x1, y1).max(eta(x2, y2))
                    * ((y1 - y2).abs() + beta * growth.eval((x1 - x2).abs()).unwrap());
                let lhs =
                    (LossSpec::squared().eval(y1, f1) - LossSpec::squared().eval(y2, f2)).abs();
                assert!(lhs <= bound + 1e-9);
            }
        }
    }
}
