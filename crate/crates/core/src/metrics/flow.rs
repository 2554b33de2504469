//! Maximum transportable mass over a bipartite "allowed pairs" graph.

/// Dinic's algorithm with real capacities.
struct FlowNetwork {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    next: Vec<usize>,
    level: Vec<i32>,
    iter: Vec<usize>,
    eps: f64,
}

const NIL: usize = usize::MAX;

impl FlowNetwork {
    fn new(nodes: usize, eps: f64) -> Self {
        FlowNetwork {
            head: vec![NIL; nodes],
            to: Vec::new(),
            cap: Vec::new(),
            next: Vec::new(),
            level: vec![0; nodes],
            iter: vec![0; nodes],
            eps,
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        for (a, b, cap) in [(u, v, c), (v, u, 0.0)] {
            self.to.push(b);
            self.cap.push(cap);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > self.eps && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.iter[u] != NIL {
            let e = self.iter[u];
            let v = self.to[e];
            if self.cap[e] > self.eps && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[e]));
                if got > 0.0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.iter[u] = self.next[e];
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.iter.copy_from_slice(&self.head);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// Largest mass of a sub-coupling of `a` and `b` supported on pairs with `allowed(i, j)`.
pub(crate) fn max_matched_mass(
    a: &[f64],
    b: &[f64],
    allowed: impl Fn(usize, usize) -> bool,
) -> f64 {
    let n = a.len();
    let m = b.len();
    let s = n + m;
    let t = s + 1;
    let mut net = FlowNetwork::new(n + m + 2, 1e-15);
    for (i, &w) in a.iter().enumerate() {
        net.add_edge(s, i, w);
    }
    for (j, &w) in b.iter().enumerate() {
        net.add_edge(n + j, t, w);
    }
    for i in 0..n {
        for j in 0..m {
            if allowed(i, j) {
                net.add_edge(i, n + j, f64::INFINITY);
            }
        }
    }
    net.max_flow(s, t)
}

/// Same quantity for scalar atoms with `allowed = |x_i - y_j| <= radius`.
///
/// Both inputs must be sorted ascending. Neighbourhoods are intervals whose
/// endpoints move monotonically with `x`, so filling the leftmost reachable
/// target first is optimal.
pub(crate) fn max_matched_mass_sorted_1d(
    xs: &[f64],
    a: &[f64],
    ys: &[f64],
    b: &[f64],
    radius: f64,
) -> f64 {
    let mut remaining: Vec<f64> = b.to_vec();
    let mut start = 0;
    let mut total = 0.0;
    for (&x, &w) in xs.iter().zip(a) {
        while start < ys.len()
            && ((ys[start] < x && x - ys[start] > radius) || remaining[start] <= 0.0)
        {
            start += 1;
        }
        let mut left = w;
        let mut j = start;
        while left > 0.0 && j < ys.len() && (ys[j] <= x || ys[j] - x <= radius) {
            let take = left.min(remaining[j]);
            remaining[j] -= take;
            left -= take;
            total += take;
            j += 1;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dinic_matches_greedy_on_scalars() {
        let xs = [0.0, 0.2, 0.5, 0.9, 1.4];
        let a = [0.1, 0.3, 0.2, 0.25, 0.15];
        let ys = [0.1, 0.3, 0.35, 1.0, 2.0];
        let b = [0.3, 0.1, 0.2, 0.2, 0.2];
        for r in [0.0, 0.05, 0.1, 0.15, 0.3, 0.5, 0.7, 1.0, 2.5] {
            let g = max_matched_mass_sorted_1d(&xs, &a, &ys, &b, r);
            let f = max_matched_mass(&a, &b, |i, j| (xs[i] - ys[j]).abs() <= r);
            assert!((g - f).abs() < 1e-12, "radius {r}: greedy {g} vs flow {f}");
        }
    }

    #[test]
    fn full_graph_moves_everything() {
        let f = max_matched_mass(&[0.5, 0.5], &[0.25, 0.75], |_, _| true);
        assert!((f - 1.0).abs() < 1e-15);
        assert_eq!(
            max_matched_mass(&[0.5, 0.5], &[0.25, 0.75], |_, _| false),
            0.0
        );
    }
}
