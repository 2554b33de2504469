//! Kernel families, Gram matrices and RKHS quantities computed through the
//! reproducing property.
//!
//! Distances between inputs use the Euclidean norm, except for the Laplacian
//! kernel whose exponent (and calmness argument) uses the 1-norm. The choice
//! is fixed per family and is not configurable.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `<x1, x2>`
    Linear,
    /// `exp(-gamma * |x1 - x2|_2^2)`
    Gaussian,
    /// `exp(-gamma * |x1 - x2|_1)`
    Laplacian,
    /// `(gamma * <x1, x2> + 1)^degree`
    Polynomial,
    /// `tanh(a * <x1, x2> + b)`; not positive definite in general, evaluation only.
    Sigmoid,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
            KernelFamily::Polynomial => "polynomial",
            KernelFamily::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelFamily::Linear),
            "gaussian" => Ok(KernelFamily::Gaussian),
            "laplacian" => Ok(KernelFamily::Laplacian),
            "polynomial" => Ok(KernelFamily::Polynomial),
            "sigmoid" => Ok(KernelFamily::Sigmoid),
            other => Err(invalid(format!("unknown kernel family `{other}`"))),
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_degree() -> u32 {
    1
}

/// A kernel family together with its parameters and the input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_one")]
    pub gamma: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default = "default_one")]
    pub a: f64,
    #[serde(default = "default_one")]
    pub b: f64,
    pub input_dim: usize,
}

impl KernelSpec {
    fn with_family(family: KernelFamily, input_dim: usize) -> Self {
        KernelSpec {
            family,
            gamma: 1.0,
            degree: 1,
            a: 1.0,
            b: 1.0,
            input_dim,
        }
    }

    pub fn linear(input_dim: usize) -> Self {
        Self::with_family(KernelFamily::Linear, input_dim)
    }

    pub fn gaussian(gamma: f64, input_dim: usize) -> Self {
        KernelSpec {
            gamma,
            ..Self::with_family(KernelFamily::Gaussian, input_dim)
        }
    }

    pub fn laplacian(gamma: f64, input_dim: usize) -> Self {
        KernelSpec {
            gamma,
            ..Self::with_family(KernelFamily::Laplacian, input_dim)
        }
    }

    pub fn polynomial(gamma: f64, degree: u32, input_dim: usize) -> Self {
        KernelSpec {
            gamma,
            degree,
            ..Self::with_family(KernelFamily::Polynomial, input_dim)
        }
    }

    pub fn sigmoid(a: f64, b: f64, input_dim: usize) -> Self {
        KernelSpec {
            a,
            b,
            ..Self::with_family(KernelFamily::Sigmoid, input_dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!(
                "kernel gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.degree < 1 {
            return Err(invalid("polynomial degree must be at least 1"));
        }
        if self.input_dim < 1 {
            return Err(invalid("kernel input dimension must be at least 1"));
        }
        if self.family == KernelFamily::Sigmoid && !(self.a > 0.0 && self.b > 0.0) {
            return Err(invalid("sigmoid parameters a and b must be positive"));
        }
        Ok(())
    }

    /// Whether the family is positive definite symmetric, i.e. usable for ERM
    /// and covered by the PSD guarantees.
    pub fn is_pds(&self) -> bool {
        self.family != KernelFamily::Sigmoid
    }

    pub fn require_pds(&self) -> Result<()> {
        if self.is_pds() {
            Ok(())
        } else {
            Err(Error::UnsupportedCombination(format!(
                "{} kernel is evaluation-only",
                self.family.name()
            )))
        }
    }

    /// Distance between two inputs in the norm this family uses.
    pub fn input_distance(&self, x1: &[f64], x2: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Laplacian => x1.iter().zip(x2).map(|(a, b)| (a - b).abs()).sum(),
            _ => squared_distance(x1, x2).sqrt(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Kernel value without dimension checks.
    pub(crate) fn eval_unchecked(&self, x1: &[f64], x2: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => dot(x1, x2),
            KernelFamily::Gaussian => (-self.gamma * squared_distance(x1, x2)).exp(),
            KernelFamily::Laplacian => {
                let l1: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b).abs()).sum();
                (-self.gamma * l1).exp()
            }
            KernelFamily::Polynomial => (self.gamma * dot(x1, x2) + 1.0).powi(self.degree as i32),
            KernelFamily::Sigmoid => (self.a * dot(x1, x2) + self.b).tanh(),
        }
    }

    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        self.check_dim(x1)?;
        self.check_dim(x2)?;
        Ok(self.eval_unchecked(x1, x2))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    spec.eval(x1, x2)
}

/// Row-major square Gram matrix `[k(x_i, x_j)]`.
///
/// Only the upper triangle is evaluated; the lower triangle is mirrored so the
/// result is exactly symmetric.
pub fn gram_matrix<P: AsRef<[f64]>>(spec: &KernelSpec, points: &[P]) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(invalid("gram matrix needs at least one point"));
    }
    for p in points {
        spec.check_dim(p.as_ref())?;
    }
    let n = points.len();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(points[i].as_ref(), points[j].as_ref());
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    Ok(gram)
}

/// Shape of a calmness growth function `g` with `g(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthKind {
    /// `g(t) = slope * t`
    LinearRate { slope: f64 },
    /// `g(t) = sqrt(4 * knee * t)` for `t <= knee`, `t + knee` beyond.
    Piecewise { knee: f64 },
    /// No calm growth function exists on the declared domain.
    Uncalm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub kind: GrowthKind,
    /// Radius of the input ball the profile is valid on; `None` means all of R^n.
    pub valid_radius: Option<f64>,
}

impl GrowthProfile {
    pub fn is_calm(&self) -> bool {
        !matches!(self.kind, GrowthKind::Uncalm)
    }

    /// `g(t)`, or `None` for the uncalm profile.
    pub fn eval(&self, t: f64) -> Option<f64> {
        match self.kind {
            GrowthKind::LinearRate { slope } => Some(slope * t),
            GrowthKind::Piecewise { knee } => Some(if t <= knee {
                (4.0 * knee * t).sqrt()
            } else {
                t + knee
            }),
            GrowthKind::Uncalm => None,
        }
    }
}

/// Calmness growth profile of a kernel.
///
/// Linear: `g(t) = t`. Gaussian: `g(t) = max(sqrt(2 gamma), 1) t`. Laplacian
/// (argument in the 1-norm): `sqrt(2 gamma t sqrt(n))` up to
/// `t = gamma sqrt(n) / 2`, then `t + gamma sqrt(n) / 2`.
///
/// Polynomial kernels of degree `d > 1` are uncalm on unbounded domains. On the
/// ball of radius `R` the feature map is Lipschitz with constant
/// `sqrt(d gamma s^(d-2) (s + (d-1) gamma R^2))`, `s = gamma R^2 + 1`, which is
/// the slope used here (floored at 1). Degree 1 is calm everywhere with slope
/// `max(sqrt(gamma), 1)`.
pub fn growth_profile(spec: &KernelSpec, domain_radius: Option<f64>) -> GrowthProfile {
    let kind = match spec.family {
        KernelFamily::Linear => GrowthKind::LinearRate { slope: 1.0 },
        KernelFamily::Gaussian => GrowthKind::LinearRate {
            slope: (2.0 * spec.gamma).sqrt().max(1.0),
        },
        KernelFamily::Laplacian => GrowthKind::Piecewise {
            knee: spec.gamma * (spec.input_dim as f64).sqrt() / 2.0,
        },
        KernelFamily::Polynomial if spec.degree == 1 => GrowthKind::LinearRate {
            slope: spec.gamma.sqrt().max(1.0),
        },
        KernelFamily::Polynomial => match domain_radius {
            Some(r) if r > 0.0 && r.is_finite() => {
                let d = spec.degree as f64;
                let s = spec.gamma * r * r + 1.0;
                let lip = (d * spec.gamma * s.powf(d - 2.0) * (s + (d - 1.0) * spec.gamma * r * r))
                    .sqrt();
                GrowthKind::LinearRate {
                    slope: lip.max(1.0),
                }
            }
            _ => GrowthKind::Uncalm,
        },
        KernelFamily::Sigmoid => GrowthKind::Uncalm,
    };
    let valid_radius = match (spec.family, kind) {
        (KernelFamily::Polynomial, GrowthKind::LinearRate { .. }) if spec.degree > 1 => {
            domain_radius
        }
        _ => None,
    };
    GrowthProfile { kind, valid_radius }
}

/// Evaluates the growth function; `None` signals an uncalm kernel.
pub fn growth_function(
    spec: &KernelSpec,
    t: f64,
    domain_radius: Option<f64>,
) -> Result<Option<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!(
            "growth argument must be a nonnegative real, got {t}"
        )));
    }
    Ok(growth_profile(spec, domain_radius).eval(t))
}

/// `sqrt(alpha^T K alpha)` for the expansion `sum_j alpha_j k(x_j, .)`.
///
/// Small negative quadratic forms from rounding are clamped to zero; a
/// materially negative one for a PDS family is reported as an inconsistency.
pub fn rkhs_norm<P: AsRef<[f64]>>(
    spec: &KernelSpec,
    anchors: &[P],
    coefficients: &[f64],
) -> Result<f64> {
    if anchors.len() != coefficients.len() {
        return Err(invalid(format!(
            "{} anchors but {} coefficients",
            anchors.len(),
            coefficients.len()
        )));
    }
    if anchors.is_empty() {
        return Ok(0.0);
    }
    let gram = gram_matrix(spec, anchors)?;
    quadratic_form_norm(&gram, coefficients, spec.is_pds())
}

pub(crate) fn quadratic_form_norm(
    gram: &[Vec<f64>],
    coefficients: &[f64],
    pds: bool,
) -> Result<f64> {
    let q: f64 = gram
        .iter()
        .zip(coefficients)
        .map(|(row, ai)| ai * dot(row, coefficients))
        .sum();
    if q >= 0.0 {
        return Ok(q.sqrt());
    }
    let trace: f64 = gram.iter().enumerate().map(|(i, r)| r[i].abs()).sum();
    let alpha_sq: f64 = coefficients.iter().map(|a| a * a).sum();
    let floor = (1e-10 * alpha_sq * trace).max(1e-12);
    if -q <= floor || !pds {
        Ok(0.0)
    } else {
        Err(Error::Inconsistent(format!(
            "negative RKHS quadratic form {q}"
        )))
    }
}

/// `f(x) = sum_j alpha_j k(x_j, x)`.
pub fn function_eval<P: AsRef<[f64]>>(
    spec: &KernelSpec,
    anchors: &[P],
    coefficients: &[f64],
    x: &[f64],
) -> Result<f64> {
    if anchors.len() != coefficients.len() {
        return Err(invalid(format!(
            "{} anchors but {} coefficients",
            anchors.len(),
            coefficients.len()
        )));
    }
    spec.check_dim(x)?;
    let mut acc = 0.0;
    for (anchor, alpha) in anchors.iter().zip(coefficients) {
        spec.check_dim(anchor.as_ref())?;
        acc += alpha * spec.eval_unchecked(anchor.as_ref(), x);
    }
    Ok(acc)
}
