//! Distances between finitely supported probability measures.
//!
//! Points are compared with the Euclidean norm of the concatenated `(x, y)`
//! vector.

mod flow;
pub mod ot;
pub mod prokhorov;
pub mod zeta;

pub use ot::{discrete_ot, TransportPlan};
pub use prokhorov::{prokhorov, PROKHOROV_TOL};
pub use zeta::{
    d_phi, fm_transform, growth_weight, product_coupling_cost, zeta_p, ZetaEstimate, ZETA_ORDER_TOL,
};

use crate::distributions::DiscreteDistribution;
use crate::error::{invalid, Result};

/// Exact Wasserstein-1 distance between scalar laws: the area between the
/// two step CDFs.
pub fn wasserstein1_1d(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if !p.is_scalar() || !q.is_scalar() {
        return Err(invalid("wasserstein1_1d needs scalar laws"));
    }
    let (xs, a) = prokhorov::sorted_scalars(p);
    let (ys, b) = prokhorov::sorted_scalars(q);
    let mut i = 0;
    let mut j = 0;
    let mut fp = 0.0f64;
    let mut fq = 0.0;
    let mut area = 0.0;
    let mut prev: Option<f64> = None;
    while i < xs.len() || j < ys.len() {
        let next = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        if let Some(t) = prev {
            area += (fp - fq).abs() * (next - t);
        }
        while i < xs.len() && xs[i] == next {
            fp += a[i];
            i += 1;
        }
        while j < ys.len() && ys[j] == next {
            fq += b[j];
            j += 1;
        }
        prev = Some(next);
    }
    Ok(area)
}

/// Wasserstein-1 distance with Euclidean ground cost, via exact transport.
pub fn wasserstein1(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.is_scalar() && q.is_scalar() {
        return wasserstein1_1d(p, q);
    }
    let cost: Vec<Vec<f64>> = p
        .atoms()
        .iter()
        .map(|a| q.atoms().iter().map(|b| a.distance(b)).collect())
        .collect();
    Ok(discrete_ot(&cost, p.weights(), q.weights())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(values: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::uniform_scalars(values).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(
            wasserstein1_1d(&scalar(&[0.0]), &scalar(&[1.0])).unwrap(),
            1.0
        );
        assert_eq!(
            wasserstein1_1d(&scalar(&[0.0, 2.0]), &scalar(&[1.0, 3.0])).unwrap(),
            1.0
        );
        let p = scalar(&[0.3, -1.0, 0.3]);
        assert_eq!(wasserstein1_1d(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn agrees_with_transport() {
        let p = DiscreteDistribution::from_scalars(&[0.0, 1.0, 4.0], &[0.2, 0.5, 0.3]).unwrap();
        let q = DiscreteDistribution::from_scalars(&[-1.0, 2.5], &[0.6, 0.4]).unwrap();
        let cost: Vec<Vec<f64>> = p
            .values()
            .iter()
            .map(|a| q.values().iter().map(|b| (a - b).abs()).collect())
            .collect();
        let ot = discrete_ot(&cost, p.weights(), q.weights()).unwrap().value;
        assert!((wasserstein1_1d(&p, &q).unwrap() - ot).abs() < 1e-12);
    }
}
