use crate::distributions::DiscreteDistribution;
use crate::error::{invalid, Error, Result};

use super::flow::{max_matched_mass, max_matched_mass_sorted_1d};

/// Default bisection tolerance: 40 halvings of the `[0, 1]` bracket.
pub const PROKHOROV_TOL: f64 = 1e-12;
/// Slack allowed when comparing matched mass against `1 - eps`.
pub const FLOW_FEASIBILITY_TOL: f64 = 1e-13;

/// Prokhorov distance between two finite measures.
///
/// By Strassen's theorem the distance is at most `eps` iff some coupling puts
/// mass at least `1 - eps` on pairs at distance `<= eps`. That mass is a
/// bipartite max-flow; the smallest feasible `eps` is found by bisection.
/// The returned value is the upper end of the final bracket, within `tol` of
/// the true distance (and never below it, up to the flow tolerance).
pub fn prokhorov(p: &DiscreteDistribution, q: &DiscreteDistribution, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid(format!(
            "prokhorov tolerance must be positive, got {tol}"
        )));
    }
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let matched: Box<dyn Fn(f64) -> f64> = if p.is_scalar() {
        let (xs, a) = sorted_scalars(p);
        let (ys, b) = sorted_scalars(q);
        Box::new(move |eps| max_matched_mass_sorted_1d(&xs, &a, &ys, &b, eps))
    } else {
        let dist: Vec<Vec<f64>> = p
            .atoms()
            .iter()
            .map(|a| q.atoms().iter().map(|b| a.distance(b)).collect())
            .collect();
        let a = p.weights().to_vec();
        let b = q.weights().to_vec();
        Box::new(move |eps| max_matched_mass(&a, &b, |i, j| dist[i][j] <= eps))
    };
    let feasible = |eps: f64| matched(eps) >= 1.0 - eps - FLOW_FEASIBILITY_TOL;

    if feasible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = 0;
    while hi - lo > tol && steps < 64 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(hi)
}

/// Atoms sorted by value with equal values merged.
pub(crate) fn sorted_scalars(d: &DiscreteDistribution) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = d.iter().map(|(z, w)| (z.y, w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
    for (x, w) in pairs {
        if xs.last() == Some(&x) {
            *ws.last_mut().unwrap() += w;
        } else {
            xs.push(x);
            ws.push(w);
        }
    }
    (xs, ws)
}
