//! Regularized empirical risk minimization over a ball of the RKHS.
//!
//! Minimizes `sum_i w_i c(z_i, f(x_i)) + lambda |f|_k^2` subject to
//! `|f|_k <= beta` over `f = sum_a alpha_a k(x_a, .)`, where the anchors
//! `x_a` are the distinct inputs of the measure. For a finitely supported
//! measure this span contains a minimizer (representer theorem).

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{stream_rng, DiscreteDistribution};
use crate::error::{invalid, Error, Result};
use crate::kernels::{dot, gram_matrix, quadratic_form_norm, KernelSpec};
use crate::linalg::{cholesky_solve, mat_vec, norm2, solve_spd};
use crate::losses::{LossFamily, LossSpec};

pub const DEFAULT_BETA: f64 = 10.0;
/// Deterministic restart seeds of the iterative solver.
pub const RESTART_SEEDS: [u64; 3] = [0, 1, 2];

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    50_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmConfig {
    pub kernel: KernelSpec,
    pub loss: LossSpec,
    pub lambda: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Gradient-norm tolerance of the iterative solver.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl ErmConfig {
    pub fn new(kernel: KernelSpec, loss: LossSpec, lambda: f64) -> Self {
        ErmConfig {
            kernel,
            loss,
            lambda,
            beta: DEFAULT_BETA,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.loss.validate()?;
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(invalid(format!(
                "beta must be a finite nonnegative radius, got {}",
                self.beta
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(invalid(
                "solver tolerance and iteration budget must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErmSolution {
    pub anchors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub rkhs_norm: f64,
    pub objective: f64,
    pub risk_term: f64,
    pub reg_term: f64,
    pub iterations: usize,
    /// Stationarity residual (closed form) or last projected-gradient norm.
    pub grad_norm: f64,
    pub converged: bool,
}

impl ErmSolution {
    pub fn eval(&self, kernel: &KernelSpec, x: &[f64]) -> f64 {
        self.anchors
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * kernel.eval_unchecked(a, x))
            .sum()
    }
}

/// A measure reduced to its distinct inputs.
struct Problem {
    anchors: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    /// Per atom: (anchor index, y, weight).
    terms: Vec<(usize, f64, f64)>,
}

impl Problem {
    fn new(dist: &DiscreteDistribution, kernel: &KernelSpec) -> Result<Self> {
        if dist.dim() != kernel.input_dim {
            return Err(Error::DimensionMismatch {
                expected: kernel.input_dim,
                got: dist.dim(),
            });
        }
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut anchors: Vec<Vec<f64>> = Vec::new();
        let mut terms = Vec::with_capacity(dist.len());
        for (z, w) in dist.iter() {
            let key: Vec<u64> = z.x.iter().map(|v| (v + 0.0).to_bits()).collect();
            let a = *index.entry(key).or_insert_with(|| {
                anchors.push(z.x.clone());
                anchors.len() - 1
            });
            terms.push((a, z.y, w));
        }
        let gram = gram_matrix(kernel, &anchors)?;
        Ok(Problem {
            anchors,
            gram,
            terms,
        })
    }

    fn size(&self) -> usize {
        self.anchors.len()
    }

    /// Total weight and weighted mean output per anchor.
    fn anchor_means(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.size();
        let mut w = vec![0.0; n];
        let mut s = vec![0.0; n];
        for &(a, y, wi) in &self.terms {
            w[a] += wi;
            s[a] += wi * y;
        }
        let mean = s.iter().zip(&w).map(|(s, w)| s / w).collect();
        (w, mean)
    }

    fn risk(&self, loss: &LossSpec, fitted: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(a, y, w)| w * loss.eval(y, fitted[a]))
            .sum()
    }

    fn norm(&self, alpha: &[f64]) -> Result<f64> {
        quadratic_form_norm(&self.gram, alpha, true)
    }

    fn finish(
        &self,
        cfg: &ErmConfig,
        alpha: Vec<f64>,
        iterations: usize,
        grad_norm: f64,
        converged: bool,
    ) -> Result<ErmSolution> {
        let fitted = mat_vec(&self.gram, &alpha);
        let risk_term = self.risk(&cfg.loss, &fitted);
        let norm = self.norm(&alpha)?;
        let reg_term = cfg.lambda * dot(&alpha, &fitted).max(0.0);
        Ok(ErmSolution {
            anchors: self.anchors.clone(),
            coefficients: alpha,
            rkhs_norm: norm,
            objective: risk_term + reg_term,
            risk_term,
            reg_term,
            iterations,
            grad_norm,
            converged,
        })
    }
}

fn ridge_system(gram: &[Vec<f64>], weights: &[f64], shift: f64) -> DMatrix<f64> {
    let n = gram.len();
    DMatrix::from_fn(n, n, |i, j| {
        gram[i][j]
            + if i == j {
                2.0 * shift / weights[i]
            } else {
                0.0
            }
    })
}

/// Closed-form solver for the squared loss.
///
/// Grouping atoms by input, stationarity reads
/// `(K + 2 lambda W^-1) alpha = ybar` with `W` the anchor weights and `ybar`
/// the weighted mean outputs. When the solution leaves the ball the
/// multiplier `mu` of the norm constraint is found by bisection so that
/// `(K + 2 (lambda + mu) W^-1) alpha = ybar` lands on the sphere.
pub fn solve_ridge(dist: &DiscreteDistribution, cfg: &ErmConfig) -> Result<ErmSolution> {
    cfg.validate()?;
    if cfg.loss.family != LossFamily::Squared {
        return Err(Error::UnsupportedLoss(format!(
            "closed-form solver needs the squared loss, got {}",
            cfg.loss.family.name()
        )));
    }
    cfg.kernel.require_pds()?;
    let prob = Problem::new(dist, &cfg.kernel)?;
    let (weights, means) = prob.anchor_means();
    if cfg.beta == 0.0 {
        let n = prob.size();
        return prob.finish(cfg, vec![0.0; n], 0, 0.0, true);
    }

    let solve = |shift: f64| solve_spd(&ridge_system(&prob.gram, &weights, shift), &means);
    let trace = prob
        .gram
        .iter()
        .enumerate()
        .map(|(i, r)| r[i])
        .sum::<f64>()
        .max(1e-12);

    // With lambda = 0 the unconstrained system may be singular. Probe a tiny
    // positive multiplier first: if the ball already binds there, the exact
    // solution lies on the sphere and only regular systems are needed.
    let floor = if cfg.lambda > 0.0 { 0.0 } else { 1e-10 * trace };
    let mut alpha = solve(cfg.lambda + floor)?;
    let mut shift = cfg.lambda + floor;
    if prob.norm(&alpha)? <= cfg.beta && cfg.lambda == 0.0 {
        let system = ridge_system(&prob.gram, &weights, 0.0);
        let exact = cholesky_solve(&system, &means)
            .ok_or_else(|| Error::IllConditioned("singular Gram matrix with lambda = 0".into()))?;
        let fitted = mat_vec(&prob.gram, &exact);
        let scale = 1.0 + means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let accurate = fitted
            .iter()
            .zip(&means)
            .all(|(f, y)| (f - y).abs() <= 1e-8 * scale);
        if !accurate || prob.norm(&exact)? > cfg.beta * (1.0 + 1e-9) {
            return Err(Error::IllConditioned(
                "Gram matrix too ill-conditioned for lambda = 0".into(),
            ));
        }
        alpha = exact;
        shift = 0.0;
    } else if prob.norm(&alpha)? > cfg.beta {
        let mut lo = floor;
        let mut hi = floor.max(1e-8 * trace);
        let mut at_hi = solve(cfg.lambda + hi)?;
        while prob.norm(&at_hi)? > cfg.beta {
            lo = hi;
            hi *= 2.0;
            at_hi = solve(cfg.lambda + hi)?;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let at_mid = solve(cfg.lambda + mid)?;
            if prob.norm(&at_mid)? > cfg.beta {
                lo = mid;
            } else {
                hi = mid;
                at_hi = at_mid;
            }
        }
        alpha = at_hi;
        shift = cfg.lambda + hi;
    }

    // KKT residual: K W (K alpha - ybar) + 2 shift K alpha
    let fitted = mat_vec(&prob.gram, &alpha);
    let inner: Vec<f64> = (0..prob.size())
        .map(|a| weights[a] * (fitted[a] - means[a]) + 2.0 * shift * alpha[a])
        .collect();
    let residual = norm2(&mat_vec(&prob.gram, &inner));
    prob.finish(cfg, alpha, 1, residual, true)
}

/// Projected subgradient descent for convex losses.
///
/// Steps are taken in the RKHS: the subgradient of the objective at
/// `f = sum alpha_a k(x_a, .)` has coefficients `d + 2 lambda alpha`, with
/// `d_a` the weighted loss subgradients at anchor `a`. Projection onto the
/// ball is radial scaling. The step is `c / sqrt(t)` with `c` set by a
/// backtracking warmup. The best iterate over the restarts in
/// [`RESTART_SEEDS`] is returned.
pub fn solve_convex(dist: &DiscreteDistribution, cfg: &ErmConfig) -> Result<ErmSolution> {
    cfg.validate()?;
    if !cfg.loss.is_convex() {
        return Err(Error::UnsupportedLoss(format!(
            "{} loss is not convex",
            cfg.loss.family.name()
        )));
    }
    cfg.kernel.require_pds()?;
    let prob = Problem::new(dist, &cfg.kernel)?;
    let n = prob.size();
    if cfg.beta == 0.0 {
        return prob.finish(cfg, vec![0.0; n], 0, 0.0, true);
    }

    let mut best: Option<(f64, Vec<f64>, usize, f64, bool)> = None;
    for seed in RESTART_SEEDS {
        let start = if seed == 0 {
            vec![0.0; n]
        } else {
            let mut rng = stream_rng(seed, 0);
            let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = prob.norm(&a)?;
            if norm > 0.0 {
                let s = 0.5 * cfg.beta / norm;
                a.iter_mut().for_each(|v| *v *= s);
            }
            a
        };
        let (obj, alpha, iters, gnorm, conv) = descend(&prob, cfg, start)?;
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, alpha, iters, gnorm, conv));
        }
    }
    let (_, alpha, iters, gnorm, conv) = best.expect("at least one restart");
    prob.finish(cfg, alpha, iters, gnorm, conv)
}

fn objective(prob: &Problem, cfg: &ErmConfig, alpha: &[f64]) -> (f64, Vec<f64>) {
    let fitted = mat_vec(&prob.gram, alpha);
    let obj = prob.risk(&cfg.loss, &fitted) + cfg.lambda * dot(alpha, &fitted);
    (obj, fitted)
}

fn subgradient(prob: &Problem, cfg: &ErmConfig, alpha: &[f64], fitted: &[f64]) -> Result<Vec<f64>> {
    let mut g: Vec<f64> = alpha.iter().map(|a| 2.0 * cfg.lambda * a).collect();
    for &(a, y, w) in &prob.terms {
        g[a] += w * cfg.loss.subgradient(y, fitted[a])?;
    }
    Ok(g)
}

fn project(prob: &Problem, beta: f64, alpha: &mut [f64]) -> Result<()> {
    let norm = prob.norm(alpha)?;
    if norm > beta {
        let s = beta / norm;
        alpha.iter_mut().for_each(|v| *v *= s);
    }
    Ok(())
}

fn k_norm(prob: &Problem, v: &[f64]) -> f64 {
    dot(v, &mat_vec(&prob.gram, v)).max(0.0).sqrt()
}

type Descent = (f64, Vec<f64>, usize, f64, bool);

fn descend(prob: &Problem, cfg: &ErmConfig, mut alpha: Vec<f64>) -> Result<Descent> {
    project(prob, cfg.beta, &mut alpha)?;
    let (mut obj, mut fitted) = objective(prob, cfg, &alpha);
    let mut best_obj = obj;
    let mut best_alpha = alpha.clone();

    // warmup: largest c = 2^-k with sufficient decrease on the first step
    let g0 = subgradient(prob, cfg, &alpha, &fitted)?;
    let g0_norm = k_norm(prob, &g0);
    if g0_norm == 0.0 {
        return Ok((obj, alpha, 0, 0.0, true));
    }
    let mut c = 1.0;
    for _ in 0..60 {
        let mut trial: Vec<f64> = alpha.iter().zip(&g0).map(|(a, g)| a - c * g).collect();
        project(prob, cfg.beta, &mut trial)?;
        let (t_obj, _) = objective(prob, cfg, &trial);
        if t_obj <= obj - 1e-4 * c * g0_norm * g0_norm {
            break;
        }
        c *= 0.5;
    }

    let smooth = cfg.loss.is_smooth();
    let mut last_step_norm = g0_norm;
    let mut stall_ref = best_obj;
    for t in 1..=cfg.max_iter {
        let g = subgradient(prob, cfg, &alpha, &fitted)?;
        let step = c / (t as f64).sqrt();
        let mut next: Vec<f64> = alpha.iter().zip(&g).map(|(a, gi)| a - step * gi).collect();
        project(prob, cfg.beta, &mut next)?;
        let delta: Vec<f64> = next.iter().zip(&alpha).map(|(a, b)| a - b).collect();
        last_step_norm = k_norm(prob, &delta) / step;
        alpha = next;
        (obj, fitted) = objective(prob, cfg, &alpha);
        if obj < best_obj {
            best_obj = obj;
            best_alpha.copy_from_slice(&alpha);
        }
        if smooth && last_step_norm <= cfg.tol {
            return Ok((best_obj, best_alpha, t, last_step_norm, true));
        }
        if !smooth && t % 2000 == 0 {
            if stall_ref - best_obj <= 1e-13 * (1.0 + best_obj.abs()) {
                return Ok((best_obj, best_alpha, t, last_step_norm, true));
            }
            stall_ref = best_obj;
        }
    }
    Ok((best_obj, best_alpha, cfg.max_iter, last_step_norm, false))
}

/// Dispatches to the closed form for the squared loss and to the iterative
/// solver for the other convex losses.
pub fn solve(dist: &DiscreteDistribution, cfg: &ErmConfig) -> Result<ErmSolution> {
    match cfg.loss.family {
        LossFamily::Squared => solve_ridge(dist, cfg),
        _ => solve_convex(dist, cfg),
    }
}

/// Optimal value of the regularized problem; with `lambda = 0` the
/// ball-constrained optimal risk.
pub fn optimal_value(dist: &DiscreteDistribution, cfg: &ErmConfig) -> Result<f64> {
    Ok(solve(dist, cfg)?.objective)
}

/// `sum_i w_i c(z_i, f(x_i))` with no regularization term.
pub fn risk_true(
    dist: &DiscreteDistribution,
    sol: &ErmSolution,
    loss: &LossSpec,
    kernel: &KernelSpec,
) -> Result<f64> {
    if dist.dim() != kernel.input_dim {
        return Err(Error::DimensionMismatch {
            expected: kernel.input_dim,
            got: dist.dim(),
        });
    }
    Ok(dist.expect(|z| loss.eval(z.y, sol.eval(kernel, &z.x))))
}

/// RKHS norm of the difference of two expansions.
pub fn solution_distance(a: &ErmSolution, b: &ErmSolution, kernel: &KernelSpec) -> Result<f64> {
    // shared anchors are merged so identical solutions cancel exactly
    let mut anchors: Vec<&[f64]> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let signed = a.anchors.iter().zip(a.coefficients.iter().copied());
    let signed = signed.chain(b.anchors.iter().zip(b.coefficients.iter().map(|c| -c)));
    for (x, c) in signed {
        let key: Vec<u64> = x.iter().map(|v| (v + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => coeffs[i] += c,
            None => {
                index.insert(key, anchors.len());
                anchors.push(x);
                coeffs.push(c);
            }
        }
    }
    if anchors.is_empty() {
        return Ok(0.0);
    }
    let gram = gram_matrix(kernel, &anchors)?;
    quadratic_form_norm(&gram, &coeffs, kernel.is_pds())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_atom() -> DiscreteDistribution {
        DiscreteDistribution::dirac(Point::new(vec![0.3], 1.0))
    }

    fn gauss_cfg(lambda: f64) -> ErmConfig {
        ErmConfig::new(KernelSpec::gaussian(1.0, 1), LossSpec::squared(), lambda)
    }

    #[test]
    fn ridge_one_atom() {
        let sol = solve_ridge(&one_atom(), &gauss_cfg(0.5)).unwrap();
        assert_eq!(sol.coefficients[0], 0.5);
        assert_eq!(sol.objective, 0.25);
        assert!(sol.grad_norm <= 1e-8);
    }

    #[test]
    fn ridge_zero_outputs() {
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], 0.0),
            Point::new(vec![1.0], 0.0),
        ])
        .unwrap();
        let sol = solve_ridge(&d, &gauss_cfg(0.1)).unwrap();
        assert!(sol.coefficients.iter().all(|a| *a == 0.0));
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn ridge_interpolates_as_lambda_vanishes() {
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![-1.0], 0.3),
            Point::new(vec![0.0], -0.2),
            Point::new(vec![1.5], 0.6),
        ])
        .unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [1e-1, 1e-3, 1e-5, 1e-7] {
            let sol = solve_ridge(&d, &gauss_cfg(lambda).with_beta(1e6)).unwrap();
            assert!(sol.objective < prev);
            prev = sol.objective;
        }
        assert!(prev < 1e-5);
        let exact = solve_ridge(&d, &gauss_cfg(0.0).with_beta(1e6)).unwrap();
        assert!(exact.objective < 1e-12);
    }

    #[test]
    fn ridge_rejects_other_losses_and_kernels() {
        let cfg = ErmConfig::new(KernelSpec::gaussian(1.0, 1), LossSpec::hinge(), 0.1);
        assert!(matches!(
            solve_ridge(&one_atom(), &cfg),
            Err(Error::UnsupportedLoss(_))
        ));
        let cfg = ErmConfig::new(KernelSpec::sigmoid(1.0, 1.0, 1), LossSpec::squared(), 0.1);
        assert!(solve_ridge(&one_atom(), &cfg).is_err());
        let cfg = gauss_cfg(-1.0);
        assert!(solve_ridge(&one_atom(), &cfg).is_err());
    }

    #[test]
    fn ridge_singular_without_regularization() {
        // linear kernel in one dimension, two distinct inputs: rank one Gram
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![1.0], 1.0),
            Point::new(vec![2.0], 0.0),
        ])
        .unwrap();
        let cfg = ErmConfig::new(KernelSpec::linear(1), LossSpec::squared(), 0.0);
        assert!(matches!(
            solve_ridge(&d, &cfg),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn ridge_respects_the_ball() {
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], 3.0),
            Point::new(vec![0.2], -3.0),
        ])
        .unwrap();
        let cfg = gauss_cfg(1e-4).with_beta(1.0);
        let sol = solve_ridge(&d, &cfg).unwrap();
        assert!(sol.rkhs_norm <= 1.0 + 1e-9);
        assert!(sol.rkhs_norm >= 1.0 - 1e-6);
        assert!(sol.grad_norm <= 1e-8);
        let it = solve_convex(&d, &cfg).unwrap();
        assert!((it.objective - sol.objective).abs() <= 1e-6);
    }

    #[test]
    fn convex_matches_ridge_on_one_atom() {
        let sol = solve_convex(&one_atom(), &gauss_cfg(0.5)).unwrap();
        assert!((sol.objective - 0.25).abs() <= 1e-6);
        assert!(sol.converged);
    }

    #[test]
    fn convex_hinge_feasible_zero_loss() {
        // y - f(x0) >= 1 is achieved by f = 0 when y = 2; objective is lambda |f|^2 = 0
        let d = DiscreteDistribution::dirac(Point::new(vec![0.0], 2.0));
        let cfg =
            ErmConfig::new(KernelSpec::gaussian(1.0, 1), LossSpec::hinge(), 0.3).with_beta(2.0);
        let sol = solve_convex(&d, &cfg).unwrap();
        assert!(sol.risk_term <= 1e-9);
        assert!(sol.objective <= cfg.lambda * cfg.beta * cfg.beta);
    }

    #[test]
    fn convex_zero_ball() {
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], 2.0),
            Point::new(vec![1.0], -1.0),
        ])
        .unwrap();
        let cfg =
            ErmConfig::new(KernelSpec::gaussian(1.0, 1), LossSpec::hinge(), 0.3).with_beta(0.0);
        let sol = solve_convex(&d, &cfg).unwrap();
        let expected =
            0.5 * LossSpec::hinge().eval(2.0, 0.0) + 0.5 * LossSpec::hinge().eval(-1.0, 0.0);
        assert_eq!(sol.objective, expected);
        assert!(matches!(
            solve_convex(
                &d,
                &ErmConfig::new(KernelSpec::gaussian(1.0, 1), LossSpec::zero_one(), 0.1)
            ),
            Err(Error::UnsupportedLoss(_))
        ));
    }

    #[test]
    fn convex_losses_match_grid_search_on_one_coefficient() {
        // single anchor: f = a k(x0, .), |f| = |a|, objective is a function of a alone
        let d = DiscreteDistribution::new(
            vec![
                Point::new(vec![0.5], 0.8),
                Point::new(vec![0.5], -0.4),
                Point::new(vec![0.5], 2.0),
            ],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        for loss in [
            LossSpec::hinge(),
            LossSpec::eps_insensitive(0.3),
            LossSpec::log_loss(),
            LossSpec::squared(),
        ] {
            let cfg = ErmConfig::new(KernelSpec::gaussian(1.0, 1), loss, 0.2).with_beta(1.5);
            let sol = solve_convex(&d, &cfg).unwrap();
            let grid_best = (0..=300_000)
                .map(|i| -1.5 + 3.0 * i as f64 / 300_000.0)
                .map(|a| d.expect(|z| loss.eval(z.y, a)) + 0.2 * a * a)
                .fold(f64::INFINITY, f64::min);
            assert!(
                sol.objective <= grid_best + 1e-6,
                "{:?}: {} vs {grid_best}",
                loss.family,
                sol.objective
            );
            assert!(sol.objective >= grid_best - 1e-6);
        }
    }

    #[test]
    fn risk_true_examples() {
        let d = DiscreteDistribution::dirac(Point::new(vec![0.0], 2.0));
        let zero = ErmSolution {
            anchors: vec![vec![0.0]],
            coefficients: vec![0.0],
            rkhs_norm: 0.0,
            objective: 0.0,
            risk_term: 0.0,
            reg_term: 0.0,
            iterations: 0,
            grad_norm: 0.0,
            converged: true,
        };
        let k = KernelSpec::gaussian(1.0, 1);
        assert_eq!(risk_true(&d, &zero, &LossSpec::squared(), &k).unwrap(), 2.0);

        let interp = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], 0.5),
            Point::new(vec![2.0], -0.5),
        ])
        .unwrap();
        let sol = solve_ridge(
            &interp,
            &ErmConfig::new(k.clone(), LossSpec::squared(), 0.0),
        )
        .unwrap();
        assert!(risk_true(&interp, &sol, &LossSpec::squared(), &k).unwrap() < 1e-20);

        // per-atom losses 0.2 and 0.4 under f = 0: y^2 / 2
        let mixd = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], 0.4f64.sqrt()),
            Point::new(vec![1.0], 0.8f64.sqrt()),
        ])
        .unwrap();
        let r = risk_true(&mixd, &zero, &LossSpec::squared(), &k).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn optimal_value_examples() {
        assert!((optimal_value(&one_atom(), &gauss_cfg(0.5)).unwrap() - 0.25).abs() < 1e-15);
        // outputs produced by a feasible function
        let k = KernelSpec::gaussian(1.0, 1);
        let f = |x: f64| 0.7 * k.eval(&[0.0], &[x]).unwrap() - 0.2 * k.eval(&[1.0], &[x]).unwrap();
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], f(0.0)),
            Point::new(vec![1.0], f(1.0)),
            Point::new(vec![0.0], f(0.0)),
        ])
        .unwrap();
        assert!(optimal_value(&d, &gauss_cfg(0.0)).unwrap() < 1e-20);
        let v1 = optimal_value(&d, &gauss_cfg(0.1)).unwrap();
        let v2 = optimal_value(&d, &gauss_cfg(0.2)).unwrap();
        assert!(v1 <= v2);
    }

    #[test]
    fn solution_distance_examples() {
        let k = KernelSpec::gaussian(1.0, 1);
        let d = DiscreteDistribution::uniform(vec![
            Point::new(vec![0.0], 0.5),
            Point::new(vec![2.0], -0.5),
        ])
        .unwrap();
        let a = solve_ridge(&d, &ErmConfig::new(k.clone(), LossSpec::squared(), 0.1)).unwrap();
        assert_eq!(solution_distance(&a, &a, &k).unwrap(), 0.0);

        let mk = |x: f64| ErmSolution {
            anchors: vec![vec![x]],
            coefficients: vec![1.0],
            rkhs_norm: 1.0,
            objective: 0.0,
            risk_term: 0.0,
            reg_term: 0.0,
            iterations: 0,
            grad_norm: 0.0,
            converged: true,
        };
        let v = solution_distance(&mk(0.0), &mk(40.0), &k).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);

        let mut doubled = a.clone();
        doubled.coefficients.iter_mut().for_each(|c| *c *= 2.0);
        let v = solution_distance(&doubled, &a, &k).unwrap();
        assert!((v - a.rkhs_norm).abs() < 1e-12);
    }

    #[test]
    fn permuting_atoms_keeps_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let atoms: Vec<Point> = (0..12)
            .map(|_| {
                Point::new(
                    vec![rng.random_range(-1.0..1.0)],
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let weights: Vec<f64> = (0..12).map(|_| rng.random_range(0.1..1.0)).collect();
        let (d, _) =
            DiscreteDistribution::from_unnormalized(atoms.clone(), weights.clone()).unwrap();
        let mut order: Vec<usize> = (0..12).collect();
        order.reverse();
        order.swap(2, 7);
        let (pd, _) = DiscreteDistribution::from_unnormalized(
            order.iter().map(|&i| atoms[i].clone()).collect(),
            order.iter().map(|&i| weights[i]).collect(),
        )
        .unwrap();
        let cfg = gauss_cfg(0.05);
        let a = solve_ridge(&d, &cfg).unwrap().objective;
        let b = solve_ridge(&pd, &cfg).unwrap().objective;
        assert!((a - b).abs() <= 1e-10);
    }
}
