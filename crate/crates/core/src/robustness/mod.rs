//! Monte Carlo experiments on the law of the optimal-value estimator.
//!
//! Every replication `j` draws its sample from the counter-based stream
//! `(seed, j)`, so results do not depend on the order in which rayon
//! schedules replications. Samples of `P` and `Q` with the same index use the
//! same stream and are therefore coupled.

mod config;
mod report;

pub use config::{Contamination, DistSpec, ExperimentConfig, ExperimentKind, LambdaSchedule};
pub use report::{format_float, run_experiment, ExperimentOutput, CURVES_HEADER, REPORT_HEADER};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{moment, sample_empirical, stream_rng, DiscreteDistribution};
use crate::erm::{optimal_value, solution_distance, solve, ErmConfig};
use crate::error::{Error, Result};
use crate::losses::{lipschitz_profile, GaugeSpec, LossFamily};
use crate::metrics::{
    d_phi, product_coupling_cost, prokhorov, wasserstein1_1d, zeta_p, ZetaEstimate, PROKHOROV_TOL,
};

/// Bootstrap streams start here so they never collide with replication streams.
const BOOTSTRAP_STREAM_OFFSET: u64 = 1 << 40;
/// Number of bootstrap standard errors in the verdict rule.
pub const SE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Fail dominates inconclusive, which dominates pass.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Empirical law of the optimal value over `M` replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawEstimate {
    /// Estimator values in replication order; failed replications are omitted.
    pub values: Vec<f64>,
    pub law: DiscreteDistribution,
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    pub replications: usize,
    pub failures: usize,
}

fn collect_law(results: Vec<Result<f64>>, n: usize, lambda: f64, seed: u64) -> Result<LawEstimate> {
    let replications = results.len();
    let mut values = Vec::with_capacity(replications);
    let mut failures = 0;
    let mut last_error = None;
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                log::warn!("replication failed: {e}");
                failures += 1;
                last_error = Some(e);
            }
        }
    }
    if values.is_empty() {
        return Err(last_error.unwrap_or_else(|| Error::InvalidInput("no replications".into())));
    }
    let law = DiscreteDistribution::uniform_scalars(&values)?;
    Ok(LawEstimate {
        values,
        law,
        n,
        lambda,
        seed,
        replications,
        failures,
    })
}

/// Law of the optimal value of the regularized problem on `n`-samples of
/// `dist`, using streams `stream_base + j` for `j < replications`.
pub fn law_on_streams(
    dist: &DiscreteDistribution,
    erm: &ErmConfig,
    n: usize,
    lambda: f64,
    seed: u64,
    replications: usize,
    stream_base: u64,
) -> Result<LawEstimate> {
    let erm = erm.clone().with_lambda(lambda);
    let results: Vec<Result<f64>> = (0..replications as u64)
        .into_par_iter()
        .map(|j| {
            let sample = sample_empirical(dist, n, seed, stream_base + j)?;
            optimal_value(&sample, &erm)
        })
        .collect();
    collect_law(results, n, lambda, seed)
}

/// Law of the estimator on `cfg.replications` replications of size `n`.
pub fn law_of_estimator(
    dist: &DiscreteDistribution,
    cfg: &ExperimentConfig,
    n: usize,
    lambda: f64,
) -> Result<LawEstimate> {
    law_on_streams(dist, &cfg.erm, n, lambda, cfg.seed, cfg.replications, 0)
}

/// Bootstrap standard error of a statistic of two samples, resampling both independently.
fn bootstrap_se(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    seed: u64,
    stat: impl Fn(&[f64], &[f64]) -> f64 + Sync,
) -> f64 {
    if resamples < 2 {
        return 0.0;
    }
    let stats: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, BOOTSTRAP_STREAM_OFFSET + r);
            let ra: Vec<f64> = (0..a.len())
                .map(|_| a[rng.random_range(0..a.len())])
                .collect();
            let rb: Vec<f64> = (0..b.len())
                .map(|_| b[rng.random_range(0..b.len())])
                .collect();
            stat(&ra, &rb)
        })
        .collect();
    if stats.iter().all(|s| s.to_bits() == stats[0].to_bits()) {
        return 0.0;
    }
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64;
    var.sqrt()
}

fn w1_values(a: &[f64], b: &[f64]) -> f64 {
    match (
        DiscreteDistribution::uniform_scalars(a),
        DiscreteDistribution::uniform_scalars(b),
    ) {
        (Ok(pa), Ok(pb)) => wasserstein1_1d(&pa, &pb).unwrap_or(f64::NAN),
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub experiment: String,
    pub n: usize,
    pub lambda: f64,
    pub replications: usize,
    pub seed: u64,
    pub failures: usize,
    /// Distance between the two estimator laws.
    pub measured: f64,
    pub standard_error: f64,
    /// Bound compared against for a pass.
    pub lower_bound: f64,
    /// Bound compared against for a fail.
    pub upper_bound: f64,
    /// `exact` when the two bounds coincide, else `bracket`.
    pub bound_channel: String,
    pub order: Option<f64>,
    pub constant: Option<f64>,
    pub zeta: Option<ZetaEstimate>,
    pub input_distance: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    /// Whether `lambda <= epsilon / (6 beta^2)` holds.
    pub side_condition: Option<bool>,
    pub verdict: Verdict,
}

/// Compares the Wasserstein-1 distance of the estimator laws under `P` and
/// `Q` with `C * zeta_p(P, Q)` for the Lipschitz profile `(p, C)` of the
/// loss and kernel.
///
/// Verdict: `fail` if `measured > C * upper + 3 SE`, `pass` if
/// `measured <= C * lower + 3 SE`, otherwise `inconclusive`.
pub fn check_quantitative(cfg: &ExperimentConfig) -> Result<RobustnessReport> {
    let p = cfg.ground_truth()?;
    let q = cfg.perceived()?;
    let profile = lipschitz_profile(&cfg.erm.loss, &cfg.erm.kernel, cfg.erm.beta)?;
    check_moment_class(cfg, &[&p, &q], profile.order)?;
    let n = cfg.n;
    let lambda = cfg.lambda_at(n);
    let lp = law_of_estimator(&p, cfg, n, lambda)?;
    let lq = law_of_estimator(&q, cfg, n, lambda)?;
    let measured = wasserstein1_1d(&lp.law, &lq.law)?;
    let se = bootstrap_se(
        &lp.values,
        &lq.values,
        cfg.bootstrap_resamples,
        cfg.seed,
        w1_values,
    );
    let zeta = zeta_p(&p, &q, profile.order)?;
    let upper = profile.constant * zeta.best_upper();
    let lower = profile.constant * zeta.best_lower();
    let verdict = if measured > upper + SE_MULTIPLIER * se {
        Verdict::Fail
    } else if measured <= lower + SE_MULTIPLIER * se {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(RobustnessReport {
        experiment: ExperimentKind::Quantitative.name().into(),
        n,
        lambda,
        replications: cfg.replications,
        seed: cfg.seed,
        failures: lp.failures + lq.failures,
        measured,
        standard_error: se,
        lower_bound: lower,
        upper_bound: upper,
        bound_channel: if zeta.exact.is_some() {
            "exact"
        } else {
            "bracket"
        }
        .into(),
        order: Some(profile.order),
        constant: Some(profile.constant),
        zeta: Some(zeta),
        input_distance: None,
        delta: None,
        epsilon: None,
        side_condition: None,
        verdict,
    })
}

fn check_moment_class(
    cfg: &ExperimentConfig,
    dists: &[&DiscreteDistribution],
    power: f64,
) -> Result<()> {
    let Some(kappa) = cfg.kappa else {
        return Ok(());
    };
    let gauge = GaugeSpec::new(cfg.erm.loss, cfg.erm.kernel.clone(), cfg.erm.beta)?;
    for d in dists {
        let m = moment(d, &gauge, power)?;
        if m > kappa {
            return Err(Error::InvalidInput(format!(
                "distribution outside the moment class: moment {m} exceeds kappa {kappa}"
            )));
        }
    }
    Ok(())
}

/// Empirical form of the robustness implication: if `d_phi(P, Q) <= delta`,
/// is the Prokhorov distance of the estimator laws at most `epsilon`?
///
/// The implication is existential in `delta`, so a large law distance does
/// not refute it: the verdict is `pass` or `inconclusive`, never `fail`.
pub fn check_qualitative(
    cfg: &ExperimentConfig,
    delta: f64,
    epsilon: f64,
) -> Result<RobustnessReport> {
    let p = cfg.ground_truth()?;
    let q = cfg.perceived()?;
    check_moment_class(cfg, &[&p, &q], cfg.gauge_power)?;
    let gauge = GaugeSpec::new(cfg.erm.loss, cfg.erm.kernel.clone(), cfg.erm.beta)?;
    let input = d_phi(&p, &q, &gauge, cfg.gauge_power, PROKHOROV_TOL)?;
    let n = cfg.n;
    let lambda = cfg.lambda_at(n);
    let beta = cfg.erm.beta;
    let side_condition = lambda <= epsilon / (6.0 * beta * beta);
    if !side_condition {
        log::info!(
            "lambda {lambda} exceeds epsilon / (6 beta^2) = {}",
            epsilon / (6.0 * beta * beta)
        );
    }
    let (measured, se, failures, verdict) = if input > delta {
        (f64::NAN, f64::NAN, 0, Verdict::Inconclusive)
    } else {
        let lp = law_of_estimator(&p, cfg, n, lambda)?;
        let lq = law_of_estimator(&q, cfg, n, lambda)?;
        let measured = prokhorov(&lp.law, &lq.law, PROKHOROV_TOL)?;
        let se = bootstrap_se(
            &lp.values,
            &lq.values,
            cfg.bootstrap_resamples,
            cfg.seed,
            |a, b| match (
                DiscreteDistribution::uniform_scalars(a),
                DiscreteDistribution::uniform_scalars(b),
            ) {
                (Ok(pa), Ok(pb)) => prokhorov(&pa, &pb, 1e-9).unwrap_or(f64::NAN),
                _ => f64::NAN,
            },
        );
        let verdict = if measured <= epsilon {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        (measured, se, lp.failures + lq.failures, verdict)
    };
    Ok(RobustnessReport {
        experiment: ExperimentKind::Qualitative.name().into(),
        n,
        lambda,
        replications: cfg.replications,
        seed: cfg.seed,
        failures,
        measured,
        standard_error: se,
        lower_bound: epsilon,
        upper_bound: epsilon,
        bound_channel: "exact".into(),
        order: Some(cfg.gauge_power),
        constant: None,
        zeta: None,
        input_distance: Some(input),
        delta: Some(delta),
        epsilon: Some(epsilon),
        side_condition: Some(side_condition),
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub t: f64,
    pub theta: f64,
    pub d_phi: f64,
    pub deviation: f64,
    /// `t * (int phi dP + int phi dH)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub theta_p: f64,
    /// Sorted by increasing `t`.
    pub rows: Vec<StabilityRow>,
    pub verdict: Verdict,
}

/// Ball-constrained optimal risk `theta(Q_t)` along `Q_t = (1 - t) P + t H`.
///
/// Since `phi` dominates the cost over the ball, `|theta(Q_t) - theta(P)|`
/// never exceeds `t (int phi dP + int phi dH)`; a violation is a `fail`.
pub fn stability_curve(
    p: &DiscreteDistribution,
    h: &DiscreteDistribution,
    t_grid: &[f64],
    cfg: &ExperimentConfig,
) -> Result<StabilityReport> {
    let erm = cfg.erm.clone().with_lambda(0.0);
    let gauge = GaugeSpec::new(cfg.erm.loss, cfg.erm.kernel.clone(), cfg.erm.beta)?;
    let theta_p = optimal_value(p, &erm)?;
    let mass = moment(p, &gauge, 1.0)? + moment(h, &gauge, 1.0)?;
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let rows = ts
        .iter()
        .map(|&t| {
            let qt = crate::distributions::mix(p, h, t)?;
            let theta = optimal_value(&qt, &erm)?;
            Ok(StabilityRow {
                t,
                theta,
                d_phi: d_phi(&qt, p, &gauge, cfg.gauge_power, PROKHOROV_TOL)?,
                deviation: (theta - theta_p).abs(),
                bound: t * mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = rows
        .iter()
        .all(|r| r.deviation <= r.bound + 1e-12 * (1.0 + theta_p.abs()));
    Ok(StabilityReport {
        theta_p,
        rows,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub lambda: f64,
    pub median: f64,
    pub p90: f64,
    /// Fraction of replications with deviation at least `delta`.
    pub exceed_freq: f64,
    /// Largest median over the ground truth and the family.
    pub worst_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub theta_p: f64,
    pub delta: f64,
    pub replications: usize,
    pub rows: Vec<ConsistencyRow>,
    /// Fitted `gamma` of `P(deviation >= delta) ~ alpha exp(-N gamma)`.
    pub rate: Option<f64>,
    pub prefactor: Option<f64>,
    /// Root mean square residual of the log-frequency regression.
    pub residual: Option<f64>,
    /// Number of increases of the median along the grid.
    pub inversions: usize,
    pub verdict: Verdict,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn deviations(
    dist: &DiscreteDistribution,
    cfg: &ExperimentConfig,
    k: usize,
    n: usize,
    theta: f64,
) -> Result<Vec<f64>> {
    let lambda = cfg.consistency_lambda.at(n);
    let law = law_on_streams(
        dist,
        &cfg.erm,
        n,
        lambda,
        cfg.seed,
        cfg.consistency_replications,
        (k as u64) << 32,
    )?;
    let mut dev: Vec<f64> = law.values.iter().map(|v| (v - theta).abs()).collect();
    dev.sort_by(f64::total_cmp);
    Ok(dev)
}

/// Deviations `|theta_hat(P_N, lambda_N) - theta(P)|` along `cfg.n_grid`.
pub fn consistency_curve(
    p: &DiscreteDistribution,
    cfg: &ExperimentConfig,
) -> Result<ConsistencyReport> {
    let exact = cfg.erm.clone().with_lambda(0.0);
    let theta_p = optimal_value(p, &exact)?;
    let family = cfg.family()?;
    let family_theta = family
        .iter()
        .map(|d| optimal_value(d, &exact))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for (k, &n) in cfg.n_grid.iter().enumerate() {
        let dev = deviations(p, cfg, k, n, theta_p)?;
        let median = quantile(&dev, 0.5);
        let exceed =
            dev.iter().filter(|d| **d >= cfg.deviation_delta).count() as f64 / dev.len() as f64;
        let worst_median = if family.is_empty() {
            None
        } else {
            let mut worst = median;
            for (d, th) in family.iter().zip(&family_theta) {
                worst = worst.max(quantile(&deviations(d, cfg, k, n, *th)?, 0.5));
            }
            Some(worst)
        };
        rows.push(ConsistencyRow {
            n,
            lambda: cfg.consistency_lambda.at(n),
            median,
            p90: quantile(&dev, 0.9),
            exceed_freq: exceed,
            worst_median,
        });
    }

    let (rate, prefactor, residual) = match fit_exponential_tail(&rows) {
        Some((g, a, r)) => (Some(g), Some(a), Some(r)),
        None => (None, None, None),
    };
    let inversions = rows
        .windows(2)
        .filter(|w| w[1].median > w[0].median)
        .count();
    Ok(ConsistencyReport {
        theta_p,
        delta: cfg.deviation_delta,
        replications: cfg.consistency_replications,
        rows,
        rate,
        prefactor,
        residual,
        inversions,
        verdict: if inversions <= 1 {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        },
    })
}

/// Least squares fit of `log freq = log alpha - gamma N` over rows with positive frequency.
fn fit_exponential_tail(rows: &[ConsistencyRow]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.exceed_freq > 0.0)
        .map(|r| (r.n as f64, r.exceed_freq.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Some((-slope, intercept.exp(), (rss / m).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionStabilityReport {
    pub n: usize,
    pub lambda: f64,
    pub replications: usize,
    pub failures: usize,
    pub fraction_satisfied: f64,
    pub max_distance: f64,
    pub mean_distance: f64,
    pub min_bound: f64,
    pub mean_bound: f64,
    pub verdict: Verdict,
}

/// Per replication, compares `|f(P_N) - f(Q_N)|_k` on coupled samples with
/// `sqrt((3 / alpha) E_{P_N x Q_N}[c_p |z - z'|])`, `alpha = 2 lambda_N`.
pub fn solution_stability(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cfg: &ExperimentConfig,
) -> Result<SolutionStabilityReport> {
    if cfg.erm.loss.family != LossFamily::Squared {
        return Err(Error::UnsupportedLoss(format!(
            "solution stability needs a strongly convex loss, got {}",
            cfg.erm.loss.family.name()
        )));
    }
    let n = cfg.n;
    let lambda = cfg.lambda_at(n);
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(
            "solution stability needs lambda > 0".into(),
        ));
    }
    let order = lipschitz_profile(&cfg.erm.loss, &cfg.erm.kernel, cfg.erm.beta)?.order;
    let erm = cfg.erm.clone().with_lambda(lambda);
    let results: Vec<Result<(f64, f64)>> = (0..cfg.solution_replications as u64)
        .into_par_iter()
        .map(|j| {
            let pn = sample_empirical(p, n, cfg.seed, j)?;
            let qn = sample_empirical(q, n, cfg.seed, j)?;
            let a = solve(&pn, &erm)?;
            let b = solve(&qn, &erm)?;
            let dist = solution_distance(&a, &b, &erm.kernel)?;
            let bound = (3.0 / (2.0 * lambda) * product_coupling_cost(&pn, &qn, order)?).sqrt();
            Ok((dist, bound))
        })
        .collect();
    let mut pairs = Vec::with_capacity(results.len());
    let mut failures = 0;
    for r in results {
        match r {
            Ok(v) => pairs.push(v),
            Err(e) => {
                log::warn!("replication failed: {e}");
                failures += 1;
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("every replication failed".into()));
    }
    let m = pairs.len() as f64;
    let satisfied = pairs.iter().filter(|(d, b)| d <= b).count() as f64 / m;
    Ok(SolutionStabilityReport {
        n,
        lambda,
        replications: cfg.solution_replications,
        failures,
        fraction_satisfied: satisfied,
        max_distance: pairs.iter().map(|p| p.0).fold(0.0, f64::max),
        mean_distance: pairs.iter().map(|p| p.0).sum::<f64>() / m,
        min_bound: pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        mean_bound: pairs.iter().map(|p| p.1).sum::<f64>() / m,
        verdict: if satisfied == 1.0 && failures == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}
