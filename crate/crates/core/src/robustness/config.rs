//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{load_csv, mix, perturb, DiscreteDistribution, PerturbMode, Point};
use crate::erm::ErmConfig;
use crate::error::{invalid, Error, Result};

/// A distribution given inline as rows `[x_0, ..., x_{d-1}, y]` or as a CSV path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    Inline {
        atoms: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Csv {
        csv: PathBuf,
    },
}

impl DistSpec {
    pub fn from_distribution(d: &DiscreteDistribution) -> Self {
        DistSpec::Inline {
            atoms: d
                .atoms()
                .iter()
                .map(|z| z.x.iter().copied().chain(std::iter::once(z.y)).collect())
                .collect(),
            weights: Some(d.weights().to_vec()),
        }
    }

    pub fn resolve(&self) -> Result<DiscreteDistribution> {
        match self {
            DistSpec::Inline { atoms, weights } => {
                let points = atoms
                    .iter()
                    .map(|row| match row.split_last() {
                        Some((y, x)) => Ok(Point::new(x.to_vec(), *y)),
                        None => Err(Error::Config(
                            "distribution atoms must have at least one coordinate".into(),
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?;
                match weights {
                    Some(w) => DiscreteDistribution::new(points, w.clone()),
                    None => DiscreteDistribution::uniform(points),
                }
            }
            DistSpec::Csv { csv } => load_csv(csv),
        }
    }

    fn rebase(&mut self, dir: &Path) {
        if let DistSpec::Csv { csv } = self {
            if csv.is_relative() {
                *csv = dir.join(&*csv);
            }
        }
    }
}

/// How the perceived distribution is obtained from the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Contamination {
    #[default]
    None,
    /// Every atom moved by `(dx, dy)`.
    Translate {
        dx: Vec<f64>,
        dy: f64,
    },
    /// Seeded bounded displacement, see [`perturb`].
    Perturb {
        kind: PerturbMode,
        magnitude: f64,
    },
    /// `(1 - t) P + t H`.
    Mixture {
        with: DistSpec,
        t: f64,
    },
    Explicit {
        dist: DistSpec,
    },
}

impl Contamination {
    pub fn apply(&self, p: &DiscreteDistribution, seed: u64) -> Result<DiscreteDistribution> {
        match self {
            Contamination::None => Ok(p.clone()),
            Contamination::Translate { dx, dy } => p.translate(dx, *dy),
            Contamination::Perturb { kind, magnitude } => perturb(p, *kind, *magnitude, seed),
            Contamination::Mixture { with, t } => mix(p, &with.resolve()?, *t),
            Contamination::Explicit { dist } => dist.resolve(),
        }
    }

    fn rebase(&mut self, dir: &Path) {
        match self {
            Contamination::Mixture { with, .. } => with.rebase(dir),
            Contamination::Explicit { dist } => dist.rebase(dir),
            _ => {}
        }
    }
}

/// Regularization parameter as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSchedule {
    Constant {
        value: f64,
    },
    /// `scale * N^(-exponent)`.
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Power {
            scale: 0.5,
            exponent: 0.5,
        }
    }
}

impl LambdaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            LambdaSchedule::Constant { value } => value,
            LambdaSchedule::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Quantitative,
    Qualitative,
    Stability,
    Consistency,
    SolutionStability,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Quantitative,
        ExperimentKind::Qualitative,
        ExperimentKind::Stability,
        ExperimentKind::Consistency,
        ExperimentKind::SolutionStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Quantitative => "quantitative",
            ExperimentKind::Qualitative => "qualitative",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::SolutionStability => "solution_stability",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown experiment `{s}`")))
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn default_n() -> usize {
    20
}
fn default_n_grid() -> Vec<usize> {
    vec![10, 100, 1000, 10000]
}
fn default_replications() -> usize {
    2000
}
fn default_consistency_replications() -> usize {
    500
}
fn default_solution_replications() -> usize {
    200
}
fn default_t_grid() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.01, 0.0]
}
fn default_delta() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_deviation() -> f64 {
    0.01
}
fn default_one() -> f64 {
    1.0
}
fn default_bootstrap() -> usize {
    200
}
fn default_experiments() -> Vec<ExperimentKind> {
    ExperimentKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub ground_truth: DistSpec,
    /// Produces the perceived distribution `Q`.
    #[serde(default)]
    pub contamination: Contamination,
    /// Produces the mixing target `H` of the stability curve; defaults to `contamination`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_target: Option<Contamination>,
    /// `erm.lambda` is used by `solve` and when `lambda` is absent.
    pub erm: ErmConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaSchedule>,
    #[serde(default)]
    pub consistency_lambda: LambdaSchedule,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_consistency_replications")]
    pub consistency_replications: usize,
    #[serde(default = "default_solution_replications")]
    pub solution_replications: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Power of the gauge in `d_phi` and in the moment class.
    #[serde(default = "default_one")]
    pub gauge_power: f64,
    /// Moment bound of the admissible class; unchecked when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    /// Input radius of the qualitative check.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Output radius of the qualitative check.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Deviation threshold whose frequency is fitted in the consistency curve.
    #[serde(default = "default_deviation")]
    pub deviation_delta: f64,
    /// Further ground truths for the worst-case consistency curve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<DistSpec>,
    #[serde(default = "default_experiments")]
    pub experiments: Vec<ExperimentKind>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative CSV paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        self.ground_truth.rebase(dir);
        self.contamination.rebase(dir);
        if let Some(c) = &mut self.stability_target {
            c.rebase(dir);
        }
        self.family.iter_mut().for_each(|d| d.rebase(dir));
    }

    pub fn validate(&self) -> Result<()> {
        self.erm.validate()?;
        if self.n == 0 || self.n_grid.contains(&0) {
            return Err(Error::Config("sample sizes must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "n_grid must be nonempty and strictly increasing".into(),
            ));
        }
        if self.replications == 0
            || self.consistency_replications == 0
            || self.solution_replications == 0
        {
            return Err(Error::Config(
                "replication counts must be at least 1".into(),
            ));
        }
        let lambdas = std::iter::once(self.lambda_at(self.n))
            .chain(self.n_grid.iter().map(|&n| self.consistency_lambda.at(n)));
        for l in lambdas {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Config(format!(
                    "lambda schedule yields invalid value {l}"
                )));
            }
        }
        if self.t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("t_grid entries must lie in [0, 1]".into()));
        }
        if !(self.gauge_power >= 1.0) {
            return Err(Error::Config("gauge_power must be at least 1".into()));
        }
        if !(self.delta >= 0.0) || !(self.epsilon >= 0.0) || !(self.deviation_delta > 0.0) {
            return Err(Error::Config(
                "delta, epsilon must be nonnegative and deviation_delta positive".into(),
            ));
        }
        Ok(())
    }

    pub fn lambda_at(&self, n: usize) -> f64 {
        match self.lambda {
            Some(s) => s.at(n),
            None => self.erm.lambda,
        }
    }

    pub fn ground_truth(&self) -> Result<DiscreteDistribution> {
        self.ground_truth.resolve()
    }

    pub fn perceived(&self) -> Result<DiscreteDistribution> {
        self.contamination.apply(&self.ground_truth()?, self.seed)
    }

    pub fn stability_target(&self) -> Result<DiscreteDistribution> {
        self.stability_target
            .as_ref()
            .unwrap_or(&self.contamination)
            .apply(&self.ground_truth()?, self.seed)
    }

    pub fn family(&self) -> Result<Vec<DiscreteDistribution>> {
        self.family.iter().map(DistSpec::resolve).collect()
    }
}
