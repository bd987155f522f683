//! Exact transportation solver: successive shortest augmenting paths with
//! Johnson potentials on the complete bipartite network.
//!
//! Supplies and demands are real masses. Every augmentation saturates a
//! supply, a demand or a reverse residual arc, so the number of Dijkstra
//! passes is bounded by roughly `n + m` on non-degenerate inputs.

/// Masses below this are treated as exhausted.
const MASS_EPS: f64 = 1e-15;

/// Returns `(i, j, mass)` triples of an optimal plan between `a` and `b`
/// under the row-major cost matrix `cost` (`a.len() × b.len()`).
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = a.len();
    let m = b.len();
    debug_assert_eq!(cost.len(), n * m);
    let c = |i: usize, j: usize| cost[i * m + j];

    let mut rem_a: Vec<f64> = a.iter().map(|&v| if v > MASS_EPS { v } else { 0.0 }).collect();
    let mut rem_b: Vec<f64> = b.iter().map(|&v| if v > MASS_EPS { v } else { 0.0 }).collect();
    let mut flow = vec![0.0f64; n * m];

    // node layout: sources 0..n, sinks n..n+m, super-source S, super-sink T
    let s_node = n + m;
    let t_node = n + m + 1;
    let v_count = n + m + 2;
    let mut pot = vec![0.0f64; v_count];
    for j in 0..m {
        pot[n + j] = (0..n).map(|i| c(i, j)).fold(f64::INFINITY, f64::min);
    }
    pot[t_node] = (0..m).map(|j| pot[n + j]).fold(f64::INFINITY, f64::min);

    let mut dist = vec![f64::INFINITY; v_count];
    let mut prev = vec![usize::MAX; v_count];
    let mut done = vec![false; v_count];

    loop {
        let supply: f64 = rem_a.iter().sum();
        let demand: f64 = rem_b.iter().sum();
        if supply <= MASS_EPS || demand <= MASS_EPS {
            break;
        }

        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[s_node] = 0.0;

        loop {
            // dense selection; the graph is complete bipartite
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (v, (&d, &fin)) in dist.iter().zip(&done).enumerate() {
                if !fin && d < best {
                    best = d;
                    u = v;
                }
            }
            if u == usize::MAX || u == t_node {
                break;
            }
            done[u] = true;
            let du = dist[u];
            let relax = |v: usize, cost_uv: f64, dist: &mut Vec<f64>, prev: &mut Vec<usize>| {
                let rc = (cost_uv + pot[u] - pot[v]).max(0.0);
                if du + rc < dist[v] {
                    dist[v] = du + rc;
                    prev[v] = u;
                }
            };
            if u == s_node {
                for i in 0..n {
                    if rem_a[i] > 0.0 {
                        relax(i, 0.0, &mut dist, &mut prev);
                    }
                }
            } else if u < n {
                for j in 0..m {
                    if !done[n + j] {
                        relax(n + j, c(u, j), &mut dist, &mut prev);
                    }
                }
            } else if u < n + m {
                let j = u - n;
                for i in 0..n {
                    if !done[i] && flow[i * m + j] > 0.0 {
                        relax(i, -c(i, j), &mut dist, &mut prev);
                    }
                }
                if rem_b[j] > 0.0 {
                    relax(t_node, 0.0, &mut dist, &mut prev);
                }
            }
        }

        if !dist[t_node].is_finite() {
            break;
        }
        let dt = dist[t_node];
        for v in 0..v_count {
            pot[v] += dist[v].min(dt);
        }

        // bottleneck along T <- j_last <- ... <- i_first <- S
        let mut bottleneck = f64::INFINITY;
        let mut v = t_node;
        while v != s_node {
            let u = prev[v];
            if u == s_node {
                bottleneck = bottleneck.min(rem_a[v]);
            } else if v == t_node {
                bottleneck = bottleneck.min(rem_b[u - n]);
            } else if u >= n {
                // reverse arc sink u -> source v
                bottleneck = bottleneck.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        if !(bottleneck > 0.0) {
            break;
        }

        let mut v = t_node;
        while v != s_node {
            let u = prev[v];
            if u == s_node {
                rem_a[v] -= bottleneck;
                if rem_a[v] <= MASS_EPS {
                    rem_a[v] = 0.0;
                }
            } else if v == t_node {
                rem_b[u - n] -= bottleneck;
                if rem_b[u - n] <= MASS_EPS {
                    rem_b[u - n] = 0.0;
                }
            } else if u < n {
                flow[u * m + (v - n)] += bottleneck;
            } else {
                let f = &mut flow[v * m + (u - n)];
                *f -= bottleneck;
                if *f <= MASS_EPS {
                    *f = 0.0;
                }
            }
            v = u;
        }
    }

    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let f = flow[i * m + j];
            if f > 0.0 {
                out.push((i, j, f));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_picks_cheaper_vertex() {
        // vertex plans of the 2×2 polytope with equal masses
        let cost = [0.0, 4.0, 1.0, 1.0];
        let plan = solve(&[0.5, 0.5], &[0.5, 0.5], &cost);
        let total: f64 = plan.iter().map(|&(i, j, f)| f * cost[i * 2 + j]).sum();
        assert!((total - 0.5).abs() < 1e-15);
    }

    #[test]
    fn respects_unequal_marginals() {
        let a = [0.2, 0.3, 0.5];
        let b = [0.6, 0.4];
        let cost = [1.0, 2.0, 0.5, 3.0, 2.0, 0.1];
        let plan = solve(&a, &b, &cost);
        let mut ra = [0.0; 3];
        let mut rb = [0.0; 2];
        for &(i, j, f) in &plan {
            ra[i] += f;
            rb[j] += f;
        }
        for (x, y) in ra.iter().zip(&a) {
            assert!((x - y).abs() < 1e-14);
        }
        for (x, y) in rb.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        // optimum by hand: row 2 sends 0.4 to col 1 and 0.1 to col 0
        let total: f64 = plan.iter().map(|&(i, j, f)| f * cost[i * 2 + j]).sum();
        assert!((total - (0.2 + 0.15 + 0.2 + 0.04)).abs() < 1e-12, "{total}");
    }
}
