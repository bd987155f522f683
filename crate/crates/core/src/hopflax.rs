//! Hopf-Lax evaluation `V(t,μ) = inf_ν 𝒢(ν) + (T−t)·𝓛_{T−t}(μ,ν)` on
//! discrete measures.
//!
//! The infimum runs over clouds with the cardinality and weights of `μ`.
//! A *chain* of segments with durations `s_1..s_K` is optimised jointly:
//! `J = 𝒢(Y_K) + Σ_k s_k Σ_j w_j L(V_k[j])`, `Y_k = Y_{k−1} + s_k V_k`,
//! `Y_0 = μ`. One segment gives the Hopf-Lax value; two segments give the
//! inner problem of the dynamic programming principle.
//!
//! Descent is on the velocities `V_k`, preconditioned by `1/(s_k w_j)`, with
//! Armijo backtracking. After each accepted step the pairing between
//! consecutive clouds is re-solved by exact transport and the clouds are
//! relabelled when the optimal plan is a different permutation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::functional::{FunctionalKind, FunctionalSpec};
use crate::measure::{norm_sq, Coupling, DiscreteMeasure};
use crate::ot::{self, OtMethod};
use crate::tangent::tangent_norm;

/// Smallest tolerance ever reported for an optimised value.
pub const TOLERANCE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HopfLaxProblem {
    terminal: FunctionalSpec,
    lagrangian: CostModel,
    horizon: f64,
    lipschitz: f64,
    lower_bound: f64,
}

impl HopfLaxProblem {
    /// The terminal functional must expose a Lipschitz constant and a lower
    /// bound, either from its kind or declared on the spec.
    pub fn new(terminal: FunctionalSpec, lagrangian: CostModel, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        if matches!(terminal.kind, FunctionalKind::Entropy) {
            return Err(Error::UnsupportedFunctional("entropy has no gradient on point clouds".into()));
        }
        let lipschitz = terminal.lipschitz_constant().ok_or_else(|| {
            Error::InvalidParameter("terminal functional needs a declared Lipschitz constant".into())
        })?;
        let lower_bound = terminal
            .lower_bound_value()
            .ok_or_else(|| Error::InvalidParameter("terminal functional needs a declared lower bound".into()))?;
        Ok(Self { terminal, lagrangian, horizon, lipschitz, lower_bound })
    }

    pub fn terminal(&self) -> &FunctionalSpec {
        &self.terminal
    }

    pub fn lagrangian(&self) -> &CostModel {
        &self.lagrangian
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub step_tol: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 500, step_tol: 1e-7, starts: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_step_norm: f64,
    pub restarts: usize,
    pub best_start: usize,
    pub converged: bool,
    /// Estimated distance of the reported value above the restricted infimum.
    pub tolerance: f64,
}

impl SolverReport {
    fn exact() -> Self {
        Self { iterations: 0, final_step_norm: 0.0, restarts: 0, best_start: 0, converged: true, tolerance: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfLaxSolution {
    pub value: f64,
    pub optimizer_measure: DiscreteMeasure,
    /// Displacement plan `(x, y − x)` from `μ` to the optimizer.
    pub optimizer_plan: Coupling,
    pub report: SolverReport,
}

/// `min_γ Σ γ L((y − x)/s)` over couplings of `μ` and `ν`, with the plan.
pub fn lagrangian_ot_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, s: f64, l: &CostModel) -> Result<(f64, Coupling)> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("time step {s} must be positive")));
    }
    let cost = |x: &[f64], y: &[f64]| {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| (b - a) / s).collect();
        l.lagrangian(&z)
    };
    let plan = ot::exact_plan(mu, nu, cost)?;
    let value = plan.iter().map(|&(i, j, m)| m * cost(mu.point(i), nu.point(j))).sum();
    let dim = mu.dim();
    let (mut xs, mut ys, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for &(i, j, m) in &plan {
        xs.extend_from_slice(mu.point(i));
        ys.extend_from_slice(nu.point(j));
        w.push(m);
    }
    Ok((value, Coupling::from_flat(dim, xs, ys, w)?))
}

struct Chain<'a> {
    mu: &'a DiscreteMeasure,
    durations: Vec<f64>,
    terminal: &'a FunctionalSpec,
    l: &'a CostModel,
}

struct StartResult {
    value: f64,
    velocities: Vec<Vec<f64>>,
    iterations: usize,
    step_norm: f64,
    converged: bool,
    tolerance: f64,
}

impl Chain<'_> {
    fn n_coords(&self) -> usize {
        self.mu.points_flat().len()
    }

    fn clouds(&self, vel: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(vel.len());
        let mut y = self.mu.points_flat().to_vec();
        for (v, s) in vel.iter().zip(&self.durations) {
            for (yk, vk) in y.iter_mut().zip(v) {
                *yk += s * vk;
            }
            out.push(y.clone());
        }
        out
    }

    fn cloud_measure(&self, pts: Vec<f64>) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_flat(self.mu.dim(), pts, self.mu.weights().to_vec())
    }

    fn objective(&self, vel: &[Vec<f64>]) -> Result<f64> {
        let d = self.mu.dim();
        let mut action = 0.0;
        for (v, s) in vel.iter().zip(&self.durations) {
            let seg: f64 = v.chunks_exact(d).zip(self.mu.weights()).map(|(z, w)| w * self.l.lagrangian(z)).sum();
            action += s * seg;
        }
        let end = self.clouds(vel).pop().expect("at least one segment");
        Ok(self.terminal.evaluate(&self.cloud_measure(end)?)? + action)
    }

    /// Preconditioned gradient `∇L(V_k[j]) + ∇_jG / w_j` and the plain
    /// gradient, per segment.
    fn gradients(&self, vel: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let d = self.mu.dim();
        let end = self.clouds(vel).pop().expect("at least one segment");
        let g_term = self.terminal.gradient(&self.cloud_measure(end)?)?;
        let w = self.mu.weights();
        let mut pre = Vec::with_capacity(vel.len());
        let mut plain = Vec::with_capacity(vel.len());
        for (v, &s) in vel.iter().zip(&self.durations) {
            let mut p = vec![0.0; v.len()];
            let mut g = vec![0.0; v.len()];
            for (j, z) in v.chunks_exact(d).enumerate() {
                let gl = self.l.lagrangian_grad(z);
                for k in 0..d {
                    let gt = g_term[j * d + k];
                    g[j * d + k] = s * (w[j] * gl[k] + gt);
                    p[j * d + k] = gl[k] + if w[j] > 0.0 { gt / w[j] } else { 0.0 };
                }
            }
            pre.push(p);
            plain.push(g);
        }
        Ok((pre, plain))
    }

    /// Re-solves the pairing of every segment and relabels downstream clouds
    /// when the optimal plan is a different permutation.
    fn repair(&self, vel: &mut [Vec<f64>]) -> Result<bool> {
        let d = self.mu.dim();
        let n = self.mu.len();
        let mut changed = false;
        let mut clouds = self.clouds(vel);
        for k in 0..vel.len() {
            let prev = if k == 0 { self.mu.points_flat().to_vec() } else { clouds[k - 1].clone() };
            let (a, b) = (self.cloud_measure(prev.clone())?, self.cloud_measure(clouds[k].clone())?);
            let s = self.durations[k];
            let plan = ot::exact_plan(&a, &b, |x, y| {
                let z: Vec<f64> = x.iter().zip(y).map(|(p, q)| (q - p) / s).collect();
                self.l.lagrangian(&z)
            })?;
            let mut perm = vec![usize::MAX; n];
            let mut is_perm = plan.len() == n;
            for &(i, j, m) in &plan {
                if perm[i] != usize::MAX || (m - self.mu.weight(i)).abs() > 1e-12 * m.max(1.0) {
                    is_perm = false;
                    break;
                }
                perm[i] = j;
            }
            if !is_perm || perm.iter().enumerate().all(|(i, &j)| i == j) {
                continue;
            }
            // keep the identity pairing unless the new one is strictly cheaper
            let id_cost: f64 = (0..n)
                .map(|i| {
                    let z: Vec<f64> = (0..d).map(|c| (clouds[k][i * d + c] - prev[i * d + c]) / s).collect();
                    self.mu.weight(i) * self.l.lagrangian(&z)
                })
                .sum();
            let new_cost: f64 = plan
                .iter()
                .map(|&(i, j, m)| {
                    let z: Vec<f64> = (0..d).map(|c| (clouds[k][j * d + c] - prev[i * d + c]) / s).collect();
                    m * self.l.lagrangian(&z)
                })
                .sum();
            if new_cost >= id_cost - 1e-14 * id_cost.abs().max(1.0) {
                continue;
            }
            for cloud in clouds.iter_mut().skip(k) {
                let old = cloud.clone();
                for i in 0..n {
                    cloud[i * d..(i + 1) * d].copy_from_slice(&old[perm[i] * d..(perm[i] + 1) * d]);
                }
            }
            changed = true;
        }
        if changed {
            let mut prev = self.mu.points_flat().to_vec();
            for (k, cloud) in clouds.iter().enumerate() {
                let s = self.durations[k];
                vel[k] = cloud.iter().zip(&prev).map(|(y, x)| (y - x) / s).collect();
                prev = cloud.clone();
            }
        }
        Ok(changed)
    }

    fn descend(&self, mut vel: Vec<Vec<f64>>, opts: &SolverOptions) -> Result<StartResult> {
        let w = self.mu.weights();
        let d = self.mu.dim();
        let wnorm = |v: &[Vec<f64>]| -> f64 {
            v.iter()
                .map(|seg| seg.chunks_exact(d).zip(w).map(|(z, wj)| wj * norm_sq(z)).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        };
        self.repair(&mut vel)?;
        let mut value = self.objective(&vel)?;
        let mut history = vec![value];
        let mut iterations = 0;
        let mut step_norm = f64::INFINITY;
        let mut converged = false;
        while iterations < opts.max_iterations {
            iterations += 1;
            let (dir, grad) = self.gradients(&vel)?;
            let slope: f64 = dir.iter().zip(&grad).map(|(p, g)| p.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()).sum();
            if !(slope > 0.0) {
                step_norm = 0.0;
                converged = true;
                break;
            }
            let dir_norm = wnorm(&dir);
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha * dir_norm > 1e-3 * opts.step_tol {
                let trial: Vec<Vec<f64>> = vel
                    .iter()
                    .zip(&dir)
                    .map(|(v, p)| v.iter().zip(p).map(|(a, b)| a - alpha * b).collect())
                    .collect();
                let tv = self.objective(&trial)?;
                if tv <= value - 1e-4 * alpha * slope {
                    accepted = Some((trial, tv));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((trial, tv)) = accepted else {
                step_norm = alpha * dir_norm;
                converged = true;
                break;
            };
            step_norm = alpha * dir_norm;
            vel = trial;
            value = tv;
            if self.repair(&mut vel)? {
                value = self.objective(&vel)?;
            }
            history.push(value);
            if step_norm < opts.step_tol {
                converged = true;
                break;
            }
        }
        let k = history.len();
        // the opening steps say nothing about the remaining gap
        let recent = history[k.saturating_sub(6).max(1).min(k - 1)] - history[k - 1];
        let mut tolerance = (10.0 * recent).max(TOLERANCE_FLOOR);
        if !converged {
            tolerance = tolerance.max(100.0 * recent);
        }
        Ok(StartResult { value, velocities: vel, iterations, step_norm, converged, tolerance })
    }

    fn solve(&self, opts: &SolverOptions) -> Result<(StartResult, SolverReport)> {
        let spread = {
            let m = self.mu.mean();
            self.mu.iter().map(|(x, w)| w * x.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>().sqrt()
        };
        let sigma = 0.5 * spread.max(1.0);
        let k = self.durations.len();
        let n = self.n_coords();
        let starts: Vec<Vec<Vec<f64>>> = (0..opts.starts.max(1))
            .map(|start| {
                if start == 0 {
                    return vec![vec![0.0; n]; k];
                }
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ start as u64);
                let normal = Normal::new(0.0, sigma).expect("positive sigma");
                let v: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                vec![v; k]
            })
            .collect();
        let results: Vec<Result<StartResult>> = starts.into_par_iter().map(|v| self.descend(v, opts)).collect();
        let mut best: Option<(usize, StartResult)> = None;
        for (i, r) in results.into_iter().enumerate() {
            let r = r?;
            let better = match &best {
                None => true,
                Some((_, b)) => r.value < b.value,
            };
            if better {
                best = Some((i, r));
            }
        }
        let (best_start, res) = best.expect("at least one start");
        let report = SolverReport {
            iterations: res.iterations,
            final_step_norm: res.step_norm,
            restarts: opts.starts.max(1),
            best_start,
            converged: res.converged,
            tolerance: res.tolerance,
        };
        Ok((res, report))
    }
}

fn displacement_plan(mu: &DiscreteMeasure, end: &[f64]) -> Result<Coupling> {
    let disp: Vec<f64> = end.iter().zip(mu.points_flat()).map(|(y, x)| y - x).collect();
    Coupling::from_flat(mu.dim(), mu.points_flat().to_vec(), disp, mu.weights().to_vec())
}

/// `V(t, μ)` with its optimizer.
pub fn hopflax_value(t: f64, mu: &DiscreteMeasure, prob: &HopfLaxProblem, opts: &SolverOptions) -> Result<HopfLaxSolution> {
    let horizon = prob.horizon;
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::InvalidParameter(format!("time {t} outside [0, {horizon}]")));
    }
    let s = horizon - t;
    if s == 0.0 {
        return Ok(HopfLaxSolution {
            value: prob.terminal.evaluate(mu)?,
            optimizer_measure: mu.clone(),
            optimizer_plan: Coupling::zero_velocity(mu),
            report: SolverReport::exact(),
        });
    }
    let chain = Chain { mu, durations: vec![s], terminal: &prob.terminal, l: &prob.lagrangian };
    let (res, report) = chain.solve(opts)?;
    let end = chain.clouds(&res.velocities).pop().expect("one segment");
    Ok(HopfLaxSolution {
        value: res.value,
        optimizer_measure: chain.cloud_measure(end.clone())?,
        optimizer_plan: displacement_plan(mu, &end)?,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DppResult {
    pub value: f64,
    pub inner: f64,
    pub residual: f64,
    /// Sum of the tolerances of both solves.
    pub tolerance: f64,
    /// Displacement over `[t, s]` of the inner optimizer.
    pub first_step: Coupling,
}

/// `inf_γ V(s, exp_μ γ) + (s−t) 𝓛(γ/(s−t))`, solved jointly with the inner `V`.
pub fn dpp_inner(t: f64, s: f64, mu: &DiscreteMeasure, prob: &HopfLaxProblem, opts: &SolverOptions) -> Result<(f64, SolverReport, Coupling)> {
    let horizon = prob.horizon;
    if !(0.0 <= t && t < s && s < horizon) {
        return Err(Error::InvalidParameter(format!("need 0 ≤ t < s < T, got t={t}, s={s}, T={horizon}")));
    }
    let chain = Chain { mu, durations: vec![s - t, horizon - s], terminal: &prob.terminal, l: &prob.lagrangian };
    let (res, report) = chain.solve(opts)?;
    let first = chain.clouds(&res.velocities).swap_remove(0);
    Ok((res.value, report, displacement_plan(mu, &first)?))
}

/// `V(t,μ) − inf_γ [V(s, exp_μ γ) + (s−t)𝓛(γ/(s−t))]`.
pub fn dpp_residual(t: f64, s: f64, mu: &DiscreteMeasure, prob: &HopfLaxProblem, opts: &SolverOptions) -> Result<DppResult> {
    let v = hopflax_value(t, mu, prob, opts)?;
    let (inner, report, first_step) = dpp_inner(t, s, mu, prob, opts)?;
    Ok(DppResult {
        value: v.value,
        inner,
        residual: v.value - inner,
        tolerance: v.report.tolerance + report.tolerance,
        first_step,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFinding {
    pub name: String,
    pub computed: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzAudit {
    pub findings: Vec<AuditFinding>,
}

impl LipschitzAudit {
    pub fn all_pass(&self) -> bool {
        self.findings.iter().all(|f| f.pass)
    }
}

/// Spatial Lipschitz and time-monotonicity checks of `V(t, ·)`.
///
/// For each pair: `|V(t,μ)−V(t,ν)| ≤ Lip·W2(μ,ν) + 2·tol`, and for the
/// first measure of each pair `V(t,μ) ≤ V(t+h,μ) + tol` with `h = (T−t)/2`.
pub fn lipschitz_audit(
    t: f64,
    prob: &HopfLaxProblem,
    samples: &[(DiscreteMeasure, DiscreteMeasure)],
    opts: &SolverOptions,
) -> Result<LipschitzAudit> {
    if !(t < prob.horizon) {
        return Err(Error::InvalidParameter(format!("audit time {t} must be below the horizon")));
    }
    let h = 0.5 * (prob.horizon - t);
    let mut findings = Vec::new();
    for (k, (mu, nu)) in samples.iter().enumerate() {
        let a = hopflax_value(t, mu, prob, opts)?;
        let b = hopflax_value(t, nu, prob, opts)?;
        let dist = ot::w2(mu, nu, OtMethod::Exact)?.distance;
        let tol = a.report.tolerance.max(b.report.tolerance);
        let gap = (a.value - b.value).abs();
        let bound = prob.lipschitz * dist + 2.0 * tol;
        findings.push(AuditFinding { name: format!("lipschitz[{k}]"), computed: gap, bound, pass: gap <= bound });
        let later = hopflax_value(t + h, mu, prob, opts)?;
        let bound = later.value + a.report.tolerance.max(later.report.tolerance);
        findings.push(AuditFinding {
            name: format!("monotone[{k}]"),
            computed: a.value,
            bound,
            pass: a.value <= bound,
        });
    }
    Ok(LipschitzAudit { findings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormScaling {
    pub h: Vec<f64>,
    pub norms: Vec<f64>,
    pub tolerances: Vec<f64>,
    /// `C(h + √(tol·h))` per entry.
    pub bounds: Vec<f64>,
    pub constant: f64,
    pub slope: f64,
}

impl NormScaling {
    pub fn bounds_hold(&self) -> bool {
        self.norms.iter().zip(&self.bounds).all(|(n, b)| n <= b)
    }
}

/// Constant `K` with `‖γ_h‖ ≤ K(h + √(tol·h))` for `tol`-optimizers of the
/// DPP step over `[t, t+h]`.
///
/// From `h𝓛(γ/h) ≤ Lip‖γ‖ + tol` and `𝓛(γ/h) ≥ c‖γ‖²/h² − C` one gets
/// `‖γ‖ ≤ (Lip/c)h + √(C/c)·h + √(tol·h/c)`.
pub fn infinitesimal_constant(prob: &HopfLaxProblem) -> f64 {
    let co = prob.lagrangian.coercivity();
    (prob.lipschitz / co.c + (co.big_c / co.c).sqrt()).max(1.0 / co.c.sqrt())
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Norms of the first-step displacement of DPP inner optimizers over
/// `[t, t+h]` for each `h`, with their log-log slope.
pub fn optimizer_norm_scaling(
    mu: &DiscreteMeasure,
    prob: &HopfLaxProblem,
    t: f64,
    h_list: &[f64],
    opts: &SolverOptions,
) -> Result<NormScaling> {
    if h_list.len() < 3 {
        return Err(Error::InvalidParameter("need at least three step sizes".into()));
    }
    let max_h = h_list.iter().copied().fold(0.0, f64::max);
    if !(t + max_h < prob.horizon) {
        return Err(Error::InvalidParameter(format!("t + max(h) = {} must stay below T", t + max_h)));
    }
    let constant = infinitesimal_constant(prob);
    let mut norms = Vec::new();
    let mut tolerances = Vec::new();
    let mut bounds = Vec::new();
    for &h in h_list {
        let (_, report, step) = dpp_inner(t, t + h, mu, prob, opts)?;
        norms.push(tangent_norm(&step));
        tolerances.push(report.tolerance);
        bounds.push(constant * (h + (report.tolerance * h).sqrt()));
    }
    let slope = log_log_slope(h_list, &norms);
    Ok(NormScaling { h: h_list.to_vec(), norms, tolerances, bounds, constant, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::ScalarField;

    fn quadratic_problem(horizon: f64) -> HopfLaxProblem {
        let g = FunctionalSpec::half_second_moment().with_lipschitz(4.0);
        HopfLaxProblem::new(g, CostModel::quadratic(1.0).unwrap(), horizon).unwrap()
    }

    #[test]
    fn terminal_time_is_exact() {
        let prob = quadratic_problem(1.0);
        let mu = DiscreteMeasure::uniform(&[vec![0.3], vec![-1.2]]).unwrap();
        let sol = hopflax_value(1.0, &mu, &prob, &SolverOptions::default()).unwrap();
        assert_eq!(sol.value, prob.terminal().evaluate(&mu).unwrap());
        assert_eq!(sol.report.iterations, 0);
    }

    #[test]
    fn dirac_quadratic_closed_form() {
        let prob = quadratic_problem(1.0);
        for (x, t) in [(1.0, 0.0), (-2.0, 0.5), (0.7, 0.9)] {
            let mu = DiscreteMeasure::dirac(&[x]).unwrap();
            let sol = hopflax_value(t, &mu, &prob, &SolverOptions::default()).unwrap();
            let s = 1.0 - t;
            // oracle: minimise ½y² + (y−x)²/(2s) in closed form
            let y = x / (1.0 + s);
            let oracle = 0.5 * y * y + (y - x) * (y - x) / (2.0 * s);
            assert!((sol.value - oracle).abs() < 1e-8, "{} vs {oracle}", sol.value);
            assert!((sol.optimizer_measure.point(0)[0] - y).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_terminal() {
        let prob = HopfLaxProblem::new(FunctionalSpec::constant(2.5), CostModel::power(1.5).unwrap(), 1.0).unwrap();
        let mu = DiscreteMeasure::uniform(&[vec![0.0, 1.0], vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let sol = hopflax_value(0.2, &mu, &prob, &SolverOptions::default()).unwrap();
        assert_eq!(sol.value, 2.5);
        assert!(sol.optimizer_measure.approx_eq(&mu, 1e-9));
        let r = dpp_residual(0.2, 0.6, &mu, &prob, &SolverOptions::default()).unwrap();
        assert!(r.residual.abs() < 1e-9);
    }

    #[test]
    fn lagrangian_cost_examples() {
        let mu = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(&[1.0]).unwrap();
        let (c, _) = lagrangian_ot_cost(&mu, &nu, 2.0, &CostModel::power(1.5).unwrap()).unwrap();
        assert!((c - 0.5f64.powf(1.5) / 1.5).abs() < 1e-15);
        let a = DiscreteMeasure::uniform(&[vec![0.0], vec![1.0]]).unwrap();
        let b = DiscreteMeasure::uniform(&[vec![0.0], vec![2.0]]).unwrap();
        let (c, _) = lagrangian_ot_cost(&a, &b, 0.5, &CostModel::quadratic(1.0).unwrap()).unwrap();
        assert!((c - 0.5 / (2.0 * 0.25)).abs() < 1e-14);
        let (c, plan) = lagrangian_ot_cost(&a, &a, 0.5, &CostModel::quadratic(1.0).unwrap()).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(plan, Coupling::identity(&a));
    }

    #[test]
    fn problem_requires_lipschitz_and_lower_bound() {
        let l = CostModel::quadratic(1.0).unwrap();
        assert!(HopfLaxProblem::new(FunctionalSpec::half_second_moment(), l.clone(), 1.0).is_err());
        assert!(HopfLaxProblem::new(FunctionalSpec::entropy(), l.clone(), 1.0).is_err());
        let lin = FunctionalSpec::potential(ScalarField::Linear { slope: vec![1.0] });
        assert!(HopfLaxProblem::new(lin.clone(), l.clone(), 1.0).is_err());
        assert!(HopfLaxProblem::new(lin.with_lower_bound(-10.0), l, 1.0).is_ok());
    }

    #[test]
    fn optimizers_relabel_crossing_atoms() {
        // pulled toward far-apart anchors in reversed order
        let anchor = DiscreteMeasure::uniform(&[vec![-3.0], vec![3.0]]).unwrap();
        let g = FunctionalSpec::half_w2_to(anchor).with_lipschitz(10.0);
        let prob = HopfLaxProblem::new(g, CostModel::quadratic(1.0).unwrap(), 1.0).unwrap();
        let mu = DiscreteMeasure::uniform(&[vec![1.0], vec![-1.0]]).unwrap();
        let sol = hopflax_value(0.0, &mu, &prob, &SolverOptions::default()).unwrap();
        // monotone pairing: each atom moves halfway to its anchor
        let oracle = 2.0 * 0.5 * (2.0f64 * 2.0) / 4.0;
        assert!((sol.value - oracle).abs() < 1e-7, "{} vs {oracle}", sol.value);
    }
}
