//! Exact discrete optimal transport by successive shortest paths.
//!
//! The transportation problem is solved as a min-cost flow on the bipartite
//! graph rows -> columns. Each phase runs a dense Dijkstra on reduced costs
//! from every row with remaining supply to the nearest column with remaining
//! demand and augments along that path. Node potentials are kept so reduced
//! costs stay nonnegative; at termination they form a dual certificate
//! `u_i + v_j <= c_ij` with equality on the support of the plan.
//!
//! Ties are broken by lowest index, so results are deterministic.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Residual mass below this (relative to the total) counts as zero.
const MASS_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    pub source_weights: Vec<f64>,
    pub target_weights: Vec<f64>,
    /// `plan[i][j]` is the mass moved from source `i` to target `j`.
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
    /// Dual potentials: `source_dual[i] + target_dual[j] <= cost[i][j]`.
    pub source_dual: Vec<f64>,
    pub target_dual: Vec<f64>,
}

impl TransportPlan {
    pub fn dual_value(&self) -> f64 {
        let a: f64 = self
            .source_weights
            .iter()
            .zip(&self.source_dual)
            .map(|(w, u)| w * u)
            .sum();
        let b: f64 = self
            .target_weights
            .iter()
            .zip(&self.target_dual)
            .map(|(w, v)| w * v)
            .sum();
        a + b
    }
}

/// Solves `min sum_ij plan_ij cost_ij` over couplings of `w_src` and `w_dst`.
pub fn discrete_ot(cost: &[Vec<f64>], w_src: &[f64], w_dst: &[f64]) -> Result<TransportPlan> {
    let n = w_src.len();
    let m = w_dst.len();
    if n == 0 || m == 0 {
        return Err(invalid("transport needs nonempty marginals"));
    }
    if cost.len() != n || cost.iter().any(|r| r.len() != m) {
        return Err(invalid(format!("cost matrix must be {n} x {m}")));
    }
    if cost
        .iter()
        .flatten()
        .any(|c| !(*c >= 0.0) || !c.is_finite())
    {
        return Err(invalid("transport costs must be finite and nonnegative"));
    }
    if w_src
        .iter()
        .chain(w_dst)
        .any(|w| !(*w >= 0.0) || !w.is_finite())
    {
        return Err(invalid("transport weights must be finite and nonnegative"));
    }
    let total_src: f64 = w_src.iter().sum();
    let total_dst: f64 = w_dst.iter().sum();
    if (total_src - total_dst).abs() > 1e-9 * total_src.max(1.0) || total_src <= 0.0 {
        return Err(Error::MarginalMismatch {
            source_mass: total_src,
            target_mass: total_dst,
        });
    }

    let scale = total_src / total_dst;
    let mut supply: Vec<f64> = w_src.to_vec();
    let mut demand: Vec<f64> = w_dst.iter().map(|w| w * scale).collect();
    let eps = MASS_EPS * total_src;
    let mut plan = vec![vec![0.0; m]; n];

    // Potentials: reduced cost of row i -> column j is cost + pot_row[i] - pot_col[j].
    let mut pot_row = vec![0.0; n];
    let mut pot_col: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| cost[i][j]).fold(f64::INFINITY, f64::min))
        .collect();

    let mut dist_row = vec![0.0; n];
    let mut dist_col = vec![0.0; m];
    let mut done_row = vec![false; n];
    let mut done_col = vec![false; m];
    let mut pred_col = vec![usize::MAX; m]; // row preceding column on the path
    let mut pred_row = vec![usize::MAX; n]; // column preceding row (reverse arc)

    loop {
        if !supply.iter().any(|&s| s > eps) || !demand.iter().any(|&d| d > eps) {
            break;
        }
        for i in 0..n {
            dist_row[i] = if supply[i] > eps { 0.0 } else { f64::INFINITY };
            done_row[i] = false;
            pred_row[i] = usize::MAX;
        }
        for j in 0..m {
            dist_col[j] = f64::INFINITY;
            done_col[j] = false;
            pred_col[j] = usize::MAX;
        }

        // Dense Dijkstra over rows and columns.
        let target = loop {
            let mut best = f64::INFINITY;
            let mut pick: Option<(bool, usize)> = None;
            for i in 0..n {
                if !done_row[i] && dist_row[i] < best {
                    best = dist_row[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_col[j] && dist_col[j] < best {
                    best = dist_col[j];
                    pick = Some((false, j));
                }
            }
            match pick {
                None => break None,
                Some((true, i)) => {
                    done_row[i] = true;
                    let row = &cost[i];
                    for j in 0..m {
                        if done_col[j] {
                            continue;
                        }
                        let rc = (row[j] + pot_row[i] - pot_col[j]).max(0.0);
                        let nd = best + rc;
                        if nd < dist_col[j] {
                            dist_col[j] = nd;
                            pred_col[j] = i;
                        }
                    }
                }
                Some((false, j)) => {
                    done_col[j] = true;
                    if demand[j] > eps {
                        break Some(j);
                    }
                    for i in 0..n {
                        if done_row[i] || plan[i][j] <= 0.0 {
                            continue;
                        }
                        let rc = (-cost[i][j] + pot_col[j] - pot_row[i]).max(0.0);
                        let nd = best + rc;
                        if nd < dist_row[i] {
                            dist_row[i] = nd;
                            pred_row[i] = j;
                        }
                    }
                }
            }
        };
        let Some(target) = target else {
            return Err(Error::Inconsistent(
                "transport augmenting path not found".into(),
            ));
        };
        let reach = dist_col[target];
        for i in 0..n {
            pot_row[i] += dist_row[i].min(reach);
        }
        for j in 0..m {
            pot_col[j] += dist_col[j].min(reach);
        }

        // Walk back to find the bottleneck.
        let mut bottleneck = demand[target];
        let mut j = target;
        let source = loop {
            let i = pred_col[j];
            let prev = pred_row[i];
            if prev == usize::MAX {
                bottleneck = bottleneck.min(supply[i]);
                break i;
            }
            bottleneck = bottleneck.min(plan[i][prev]);
            j = prev;
        };

        let mut j = target;
        loop {
            let i = pred_col[j];
            plan[i][j] += bottleneck;
            let prev = pred_row[i];
            if prev == usize::MAX {
                break;
            }
            plan[i][prev] -= bottleneck;
            if plan[i][prev] <= eps * 1e-3 {
                plan[i][prev] = 0.0;
            }
            j = prev;
        }
        supply[source] -= bottleneck;
        demand[target] -= bottleneck;
        if supply[source] <= eps {
            supply[source] = 0.0;
        }
        if demand[target] <= eps {
            demand[target] = 0.0;
        }
    }

    let value = plan
        .iter()
        .zip(cost)
        .map(|(pr, cr)| pr.iter().zip(cr).map(|(p, c)| p * c).sum::<f64>())
        .sum();
    Ok(TransportPlan {
        source_weights: w_src.to_vec(),
        target_weights: w_dst.to_vec(),
        plan,
        value,
        source_dual: pot_row.iter().map(|p| -p).collect(),
        target_dual: pot_col,
    })
}
