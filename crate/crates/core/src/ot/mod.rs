//! Optimal transport between discrete measures.
//!
//! Exact plans come from one of four solvers picked by the shape of the
//! input: a product plan when either side is a single atom, the Hungarian
//! method for equal-cardinality uniform measures, the monotone rearrangement
//! on the line, and successive shortest paths otherwise. Ties among optimal
//! plans are broken by input order, so the plan returned is one element of
//! `Γ0(μ,ν)`; callers should only rely on properties shared by all of them.

mod assignment;
mod flow;
mod sinkhorn;

use crate::error::{Error, Result};
use crate::measure::{dist_sq, Coupling, DiscreteMeasure};

pub use sinkhorn::{MAX_ITER as ENTROPIC_MAX_ITER, TOL as ENTROPIC_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OtMethod {
    Exact,
    Entropic { reg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Exact,
    Entropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtSolution {
    pub distance: f64,
    pub plan: Coupling,
    pub method: MethodTag,
    /// Primal-dual gap of the regularised problem; zero for exact solves.
    pub dual_gap: f64,
    /// L1 violation of the first marginal; zero for exact solves.
    pub marginal_violation: f64,
    pub iterations: usize,
}

/// Index triples `(i, j, mass)` of a plan between two weight vectors.
pub(crate) type IndexPlan = Vec<(usize, usize, f64)>;

fn uniform(w: &[f64]) -> bool {
    let first = w[0];
    w.iter().all(|&v| (v - first).abs() <= 1e-15 * first.max(1.0))
}

/// Exact plan for a ground cost that is a convex function of `y - x`.
///
/// The convexity is what makes the monotone rearrangement optimal on the
/// line; every other branch is exact for any cost matrix.
pub(crate) fn exact_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<IndexPlan> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let (n, m) = (mu.len(), nu.len());
    if n == 1 {
        return Ok((0..m).map(|j| (0, j, nu.weight(j))).collect());
    }
    if m == 1 {
        return Ok((0..n).map(|i| (i, 0, mu.weight(i))).collect());
    }
    if mu.dim() == 1 && !(n == m && uniform(mu.weights()) && uniform(nu.weights())) {
        return Ok(monotone_plan(mu, nu));
    }
    let matrix: Vec<f64> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| cost(mu.point(i), nu.point(j)))
        .collect();
    if let Some(v) = matrix.iter().find(|v| !v.is_finite()) {
        return Err(Error::SolverFailure(format!("non-finite ground cost {v}")));
    }
    if n == m && uniform(mu.weights()) && uniform(nu.weights()) {
        let assign = assignment::solve(n, &matrix);
        let w = 1.0 / n as f64;
        return Ok(assign.into_iter().enumerate().map(|(i, j)| (i, j, w)).collect());
    }
    let plan = flow::solve(mu.weights(), nu.weights(), &matrix);
    let moved: f64 = plan.iter().map(|t| t.2).sum();
    if (moved - 1.0).abs() > 1e-9 {
        return Err(Error::SolverFailure(format!("transported mass {moved} instead of 1")));
    }
    Ok(plan)
}

/// North-west corner rule on the sorted supports.
fn monotone_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> IndexPlan {
    let order = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).filter(|&i| m.weight(i) > 0.0).collect();
        idx.sort_by(|&a, &b| m.point(a)[0].total_cmp(&m.point(b)[0]).then(a.cmp(&b)));
        idx
    };
    let (ix, jx) = (order(mu), order(nu));
    let mut plan = Vec::with_capacity(ix.len() + jx.len());
    let (mut p, mut q) = (0, 0);
    let mut ra = ix.first().map_or(0.0, |&i| mu.weight(i));
    let mut rb = jx.first().map_or(0.0, |&j| nu.weight(j));
    while p < ix.len() && q < jx.len() {
        let mass = ra.min(rb);
        if mass > 0.0 {
            plan.push((ix[p], jx[q], mass));
        }
        ra -= mass;
        rb -= mass;
        if ra <= 1e-15 {
            p += 1;
            ra = ix.get(p).map_or(0.0, |&i| mu.weight(i));
        }
        if rb <= 1e-15 {
            q += 1;
            rb = jx.get(q).map_or(0.0, |&j| nu.weight(j));
        }
    }
    plan.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    plan
}

fn coupling_from(mu: &DiscreteMeasure, nu: &DiscreteMeasure, plan: &IndexPlan) -> Result<Coupling> {
    let dim = mu.dim();
    let mut xs = Vec::with_capacity(plan.len() * dim);
    let mut ys = Vec::with_capacity(plan.len() * dim);
    let mut w = Vec::with_capacity(plan.len());
    for &(i, j, m) in plan {
        xs.extend_from_slice(mu.point(i));
        ys.extend_from_slice(nu.point(j));
        w.push(m);
    }
    Coupling::from_flat(dim, xs, ys, w)
}

/// Quadratic Wasserstein distance and an optimal (or regularised) plan.
pub fn w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure, method: OtMethod) -> Result<OtSolution> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    match method {
        OtMethod::Exact => {
            let plan = exact_plan(mu, nu, dist_sq)?;
            let cost: f64 = plan.iter().map(|&(i, j, m)| m * dist_sq(mu.point(i), nu.point(j))).sum();
            Ok(OtSolution {
                distance: cost.max(0.0).sqrt(),
                plan: coupling_from(mu, nu, &plan)?,
                method: MethodTag::Exact,
                dual_gap: 0.0,
                marginal_violation: 0.0,
                iterations: 0,
            })
        }
        OtMethod::Entropic { reg } => {
            let (n, m) = (mu.len(), nu.len());
            let matrix: Vec<f64> = (0..n)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .map(|(i, j)| dist_sq(mu.point(i), nu.point(j)))
                .collect();
            let out = sinkhorn::solve(mu.weights(), nu.weights(), &matrix, reg)?;
            let mut plan = Vec::new();
            let mut cost = 0.0;
            for i in 0..n {
                for j in 0..m {
                    let p = out.plan[i * m + j];
                    if p > 0.0 {
                        plan.push((i, j, p));
                        cost += p * matrix[i * m + j];
                    }
                }
            }
            Ok(OtSolution {
                distance: cost.max(0.0).sqrt(),
                plan: coupling_from(mu, nu, &plan)?,
                method: MethodTag::Entropic,
                dual_gap: out.dual_gap,
                marginal_violation: out.violation,
                iterations: out.iterations,
            })
        }
    }
}

/// Regularised plan for an arbitrary cost matrix, used where fibers get large.
pub(crate) fn entropic_plan(a: &[f64], b: &[f64], cost: &[f64], reg: f64) -> Result<Vec<f64>> {
    sinkhorn::solve(a, b, cost, reg).map(|e| e.plan)
}

/// Exact plan for an arbitrary cost matrix between weight vectors.
pub(crate) fn exact_plan_matrix(a: &[f64], b: &[f64], cost: &[f64]) -> IndexPlan {
    let (n, m) = (a.len(), b.len());
    if n == 1 {
        return (0..m).map(|j| (0, j, b[j])).collect();
    }
    if m == 1 {
        return (0..n).map(|i| (i, 0, a[i])).collect();
    }
    if n == m && uniform(a) && uniform(b) {
        let w = 1.0 / n as f64;
        return assignment::solve(n, cost).into_iter().enumerate().map(|(i, j)| (i, j, w)).collect();
    }
    flow::solve(a, b, cost)
}

/// `(∫|x−y|² dγ)^½`.
pub fn transport_cost(plan: &Coupling) -> f64 {
    plan.iter().map(|(x, y, w)| w * dist_sq(x, y)).sum::<f64>().sqrt()
}
