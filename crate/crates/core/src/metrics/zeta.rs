//! Fortet-Mourier distances `zeta_p` and the gauge-weighted distance `d_phi`.
//!
//! Admissible test functions satisfy
//! `|psi(z) - psi(z')| <= c_p(z, z') |z - z'|` with
//! `c_p(z, z') = max(1, |z|, |z'|)^(p-1)`.
//!
//! On the real line these are exactly the 1-Lipschitz functions of
//! `h(t) = int_0^t max(1, |s|)^(p-1) ds`, so `zeta_p` is the Wasserstein-1
//! distance between the pushforwards through `h`. When every atom lies in the
//! closed unit ball the weight is identically one and `zeta_p` is the
//! Euclidean Wasserstein-1 distance. Elsewhere only bounds are returned.

use serde::Serialize;

use crate::distributions::{moment, DiscreteDistribution, Point};
use crate::error::{invalid, Error, Result};
use crate::losses::Gauge;

use super::ot::discrete_ot;
use super::prokhorov::prokhorov;
use super::wasserstein1_1d;

/// Slack on the ordering of the bracketing channels.
pub const ZETA_ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaEstimate {
    pub exact: Option<f64>,
    /// Optimal transport under the direct cost `c_p(z, z') |z - z'|`.
    pub upper_ot: f64,
    /// The same cost under the product coupling `P x Q`.
    pub upper_product: f64,
    /// Best mean gap over a fixed family of admissible test functions.
    pub lower_testfn: f64,
}

impl ZetaEstimate {
    /// Exact value when known, else the transport upper bound.
    pub fn best_upper(&self) -> f64 {
        self.exact.unwrap_or(self.upper_ot)
    }

    /// Exact value when known, else the test-function lower bound.
    pub fn best_lower(&self) -> f64 {
        self.exact.unwrap_or(self.lower_testfn)
    }

    pub fn is_ordered(&self, tol: f64) -> bool {
        let mid = self.exact.unwrap_or(self.lower_testfn);
        self.lower_testfn <= mid + tol
            && mid <= self.upper_ot + tol
            && self.upper_ot <= self.upper_product + tol
    }
}

/// `c_p(z, z') = max(1, |z|, |z'|)^(p - 1)`.
pub fn growth_weight(z: &Point, w: &Point, p: f64) -> f64 {
    z.norm().max(w.norm()).max(1.0).powf(p - 1.0)
}

/// `h(t) = int_0^t max(1, |s|)^(p-1) ds`.
pub fn fm_transform(t: f64, p: f64) -> f64 {
    let a = t.abs();
    let v = if a <= 1.0 {
        a
    } else {
        1.0 + (a.powf(p) - 1.0) / p
    };
    v.copysign(t)
}

fn fm_cost(z: &Point, w: &Point, p: f64) -> f64 {
    growth_weight(z, w, p) * z.distance(w)
}

/// `E_{P x Q}[c_p(z, z') |z - z'|]`: the growth-weighted cost under the
/// independent coupling.
pub fn product_coupling_cost(
    pm: &DiscreteDistribution,
    qm: &DiscreteDistribution,
    p: f64,
) -> Result<f64> {
    if pm.dim() != qm.dim() {
        return Err(Error::DimensionMismatch {
            expected: pm.dim(),
            got: qm.dim(),
        });
    }
    Ok(pm
        .iter()
        .map(|(a, wa)| wa * qm.iter().map(|(b, wb)| wb * fm_cost(a, b, p)).sum::<f64>())
        .sum())
}

/// Fortet-Mourier distance of order `p` with bracketing bounds.
pub fn zeta_p(
    pm: &DiscreteDistribution,
    qm: &DiscreteDistribution,
    p: f64,
) -> Result<ZetaEstimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("zeta order must be at least 1, got {p}")));
    }
    if pm.dim() != qm.dim() {
        return Err(Error::DimensionMismatch {
            expected: pm.dim(),
            got: qm.dim(),
        });
    }
    let direct: Vec<Vec<f64>> = pm
        .atoms()
        .iter()
        .map(|a| qm.atoms().iter().map(|b| fm_cost(a, b, p)).collect())
        .collect();
    let upper_ot = discrete_ot(&direct, pm.weights(), qm.weights())?.value;
    let upper_product = product_coupling_cost(pm, qm, p)?;

    let euclid: Vec<Vec<f64>> = pm
        .atoms()
        .iter()
        .map(|a| qm.atoms().iter().map(|b| a.distance(b)).collect())
        .collect();
    let w1 = discrete_ot(&euclid, pm.weights(), qm.weights())?;

    let in_unit_ball = pm.max_atom_norm() <= 1.0 && qm.max_atom_norm() <= 1.0;
    let exact = if pm.is_scalar() {
        let push = |d: &DiscreteDistribution| -> Result<DiscreteDistribution> {
            DiscreteDistribution::from_scalars(
                &d.atoms()
                    .iter()
                    .map(|z| fm_transform(z.y, p))
                    .collect::<Vec<_>>(),
                d.weights(),
            )
        };
        Some(wasserstein1_1d(&push(pm)?, &push(qm)?)?)
    } else if in_unit_ball {
        Some(w1.value)
    } else {
        None
    };

    let lower_testfn = lower_bound(pm, qm, p, &w1.target_dual);
    Ok(ZetaEstimate {
        exact,
        upper_ot,
        upper_product,
        lower_testfn,
    })
}

fn mean_gap(
    pm: &DiscreteDistribution,
    qm: &DiscreteDistribution,
    psi: impl Fn(&Point) -> f64,
) -> f64 {
    (pm.expect(&psi) - qm.expect(&psi)).abs()
}

/// Maximum mean gap over admissible test functions:
/// the c-transform of the Euclidean transport duals (1-Lipschitz),
/// coordinate and radial pushforwards through `h`, clipped distances to each
/// atom, and on the line the optimal 1-Lipschitz function of `h`.
fn lower_bound(
    pm: &DiscreteDistribution,
    qm: &DiscreteDistribution,
    p: f64,
    target_dual: &[f64],
) -> f64 {
    let mut best: f64 = 0.0;
    let targets = qm.atoms();
    best = best.max(mean_gap(pm, qm, |z| {
        targets
            .iter()
            .zip(target_dual)
            .map(|(t, v)| z.distance(t) - v)
            .fold(f64::INFINITY, f64::min)
    }));

    let dim = pm.dim();
    for k in 0..=dim {
        let coord = |z: &Point| if k < dim { z.x[k] } else { z.y };
        best = best.max(mean_gap(pm, qm, |z| fm_transform(coord(z), p)));
    }
    best = best.max(mean_gap(pm, qm, |z| fm_transform(z.norm(), p)));

    let all: Vec<&Point> = pm.atoms().iter().chain(qm.atoms()).collect();
    for c in &all {
        let mut radii: Vec<f64> = all
            .iter()
            .map(|o| c.distance(o))
            .filter(|r| *r > 0.0)
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        radii.push(f64::INFINITY);
        for r in radii {
            best = best.max(mean_gap(pm, qm, |z| z.distance(c).min(r)));
        }
    }

    if pm.is_scalar() {
        best = best.max(line_dual_gap(pm, qm, p));
    }
    best
}

/// Gap of `G(h(t))` where `G' = sign(F_Q - F_P)` on the pushforward line.
fn line_dual_gap(pm: &DiscreteDistribution, qm: &DiscreteDistribution, p: f64) -> f64 {
    let mut knots: Vec<f64> = pm
        .atoms()
        .iter()
        .chain(qm.atoms())
        .map(|z| fm_transform(z.y, p))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let cdf = |d: &DiscreteDistribution, s: f64| -> f64 {
        d.iter()
            .filter(|(z, _)| fm_transform(z.y, p) <= s)
            .map(|(_, w)| w)
            .sum()
    };
    // G at each knot, G(knots[0]) = 0
    let mut g = vec![0.0; knots.len()];
    for i in 1..knots.len() {
        let s = knots[i - 1];
        let slope = (cdf(qm, s) - cdf(pm, s)).signum();
        g[i] = g[i - 1] + slope * (knots[i] - knots[i - 1]);
    }
    let psi = |z: &Point| {
        let s = fm_transform(z.y, p);
        let i = knots.partition_point(|&k| k < s);
        g[i.min(knots.len() - 1)]
    };
    mean_gap(pm, qm, psi)
}

/// `prokhorov(P, Q) + |int phi^power dP - int phi^power dQ|`.
pub fn d_phi<G: Gauge + ?Sized>(
    pm: &DiscreteDistribution,
    qm: &DiscreteDistribution,
    gauge: &G,
    power: f64,
    tol: f64,
) -> Result<f64> {
    let prok = prokhorov(pm, qm, tol)?;
    let gap = (moment(pm, gauge, power)? - moment(qm, gauge, power)?).abs();
    Ok(prok + gap)
}
