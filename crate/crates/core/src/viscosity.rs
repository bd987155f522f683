//! Monotone finite-difference solvers for one-dimensional terminal-value
//! Hamilton-Jacobi equations, with and without viscosity, and the
//! vanishing-viscosity rate experiments built on them.
//!
//! Everything is solved in the time-to-go `τ = T − t`, where the equations
//! read `∂τ w + H(∂x w) = ε ∂xx w` with `w(0, ·) = g`. Advection uses the
//! Godunov flux when `H` is convex and local Lax-Friedrichs otherwise, both
//! explicit under a CFL bound; diffusion is backward Euler.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const CFL: f64 = 0.9;
pub const MIN_GRID: usize = 64;
/// Errors within this multiple of the scheme floor are left out of slope fits.
pub const FLOOR_MULTIPLE: f64 = 3.0;
/// Largest relative change of the errors under grid halving for which the
/// fitted slope is considered trustworthy.
pub const REFINEMENT_TOL: f64 = 0.1;
const MAX_NODES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Hamiltonian {
    /// `|p|`.
    Abs,
    /// `p²/2`.
    Quadratic,
    /// Piecewise linear through `(p_k, h_k)`, extended by the end slopes.
    Tabulated { p: Vec<f64>, h: Vec<f64> },
}

impl Hamiltonian {
    pub fn tabulated(p: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if p.len() < 2 || p.len() != h.len() {
            return Err(Error::InvalidParameter("tabulated Hamiltonian needs at least two matching nodes".into()));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) || p.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulated Hamiltonian nodes must be finite and increasing".into()));
        }
        Ok(Self::Tabulated { p, h })
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            Self::Abs => q.abs(),
            Self::Quadratic => 0.5 * q * q,
            Self::Tabulated { p, h } => {
                let n = p.len();
                let k = p.partition_point(|&v| v <= q).clamp(1, n - 1);
                let s = (h[k] - h[k - 1]) / (p[k] - p[k - 1]);
                h[k - 1] + s * (q - p[k - 1])
            }
        }
    }

    fn slopes<'a>(p: &'a [f64], h: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        p.windows(2).zip(h.windows(2)).map(|(a, b)| (b[1] - b[0]) / (a[1] - a[0]))
    }

    /// `sup |H'|` over `[lo, hi]`.
    pub fn speed_bound(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Self::Abs => 1.0,
            Self::Quadratic => lo.abs().max(hi.abs()),
            Self::Tabulated { p, h } => {
                let n = p.len();
                let mut s: f64 = 0.0;
                for (k, slope) in Self::slopes(p, h).enumerate() {
                    // segment k covers [p_k, p_{k+1}], the end ones extend to infinity
                    let left = if k == 0 { f64::NEG_INFINITY } else { p[k] };
                    let right = if k + 2 == n { f64::INFINITY } else { p[k + 1] };
                    if right >= lo && left <= hi {
                        s = s.max(slope.abs());
                    }
                }
                s
            }
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Self::Abs | Self::Quadratic => true,
            Self::Tabulated { p, h } => {
                let s: Vec<f64> = Self::slopes(p, h).collect();
                s.windows(2).all(|w| w[1] >= w[0] - 1e-12)
            }
        }
    }

    fn argmin(&self) -> f64 {
        match self {
            Self::Abs | Self::Quadratic => 0.0,
            Self::Tabulated { p, h } => {
                let k = (0..h.len()).min_by(|&a, &b| h[a].total_cmp(&h[b])).expect("nonempty table");
                p[k]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Constant(f64),
    /// `|x|`.
    Abs,
    /// `x²/2`.
    HalfSquare,
    /// `a·exp(−x²/(2w²))`.
    Gaussian { amplitude: f64, width: f64 },
    /// `−½x²/(1 + (x/R)²)`, smooth, semiconcave and globally Lipschitz.
    Semiconcave { radius: f64 },
}

impl Terminal {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Abs => x.abs(),
            Self::HalfSquare => 0.5 * x * x,
            Self::Gaussian { amplitude, width } => amplitude * (-0.5 * (x / width).powi(2)).exp(),
            Self::Semiconcave { radius } => -0.5 * x * x / (1.0 + (x / radius).powi(2)),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant(c) => c.is_finite(),
            Self::Abs | Self::HalfSquare => true,
            Self::Gaussian { amplitude, width } => amplitude.is_finite() && *width > 0.0,
            Self::Semiconcave { radius } => *radius > 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid terminal {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HjProblem1d {
    pub domain: (f64, f64),
    pub grid_n: usize,
    pub terminal: Terminal,
    pub hamiltonian: Hamiltonian,
    pub horizon: f64,
}

impl HjProblem1d {
    pub fn new(domain: (f64, f64), grid_n: usize, terminal: Terminal, hamiltonian: Hamiltonian, horizon: f64) -> Result<Self> {
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::InvalidParameter(format!("domain {domain:?} is not a bounded interval")));
        }
        if grid_n < MIN_GRID {
            return Err(Error::InvalidParameter(format!("grid_n {grid_n} below {MIN_GRID}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        terminal.validate()?;
        if let Hamiltonian::Tabulated { p, h } = &hamiltonian {
            Hamiltonian::tabulated(p.clone(), h.clone())?;
        }
        Ok(Self { domain, grid_n, terminal, hamiltonian, horizon })
    }

    fn dx(&self, refine: usize) -> f64 {
        (self.domain.1 - self.domain.0) / ((self.grid_n - 1) * refine) as f64
    }

    /// Pad width `T·sup|H'| + 6√(εT)`, the speed taken over the slopes of
    /// `g` on the domain.
    pub fn pad_width(&self, eps: f64) -> f64 {
        let l = self.terminal_lipschitz(self.domain.0, self.domain.1);
        self.horizon * self.hamiltonian.speed_bound(-l, l) + 6.0 * (eps.max(0.0) * self.horizon).sqrt()
    }

    fn terminal_lipschitz(&self, lo: f64, hi: f64) -> f64 {
        let n = 4096;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|i| {
                let x = lo + i as f64 * h;
                ((self.terminal.eval(x + h) - self.terminal.eval(x)) / h).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Values of `u(t, ·)` on the problem grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HjSolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub dx: f64,
    pub pad: f64,
    pub steps: usize,
}

impl HjSolution {
    pub fn window(&self) -> std::ops::Range<usize> {
        let n = self.x.len();
        (n - 1).div_ceil(4)..(3 * (n - 1)) / 4 + 1
    }
}

fn check_time(prob: &HjProblem1d, t: f64) -> Result<f64> {
    if !(0.0..=prob.horizon).contains(&t) {
        return Err(Error::InvalidParameter(format!("time {t} outside [0, {}]", prob.horizon)));
    }
    Ok(prob.horizon - t)
}

/// Solves `−∂t u + H(∂x u) = 0`, `u(T, ·) = g`.
pub fn solve_hj_first_order(prob: &HjProblem1d, t: f64) -> Result<HjSolution> {
    let tau = check_time(prob, t)?;
    let pad = prob.pad_width(0.0);
    solve(prob, tau, 0.0, pad, 1)
}

/// Solves `−∂t u + H(∂x u) − ε ∂xx u = 0`, `u(T, ·) = g`.
pub fn solve_hj_viscous(prob: &HjProblem1d, t: f64, eps: f64) -> Result<HjSolution> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("viscosity {eps} must be positive")));
    }
    let tau = check_time(prob, t)?;
    let pad = prob.pad_width(eps);
    solve(prob, tau, eps, pad, 1)
}

fn solve(prob: &HjProblem1d, tau: f64, eps: f64, pad: f64, refine: usize) -> Result<HjSolution> {
    let dx = prob.dx(refine);
    let inner = (prob.grid_n - 1) * refine + 1;
    let np = (pad / dx).ceil() as usize + 2;
    let n = inner + 2 * np;
    if n > MAX_NODES {
        return Err(Error::PadInsufficient(format!("padded grid would need {n} nodes")));
    }
    let origin = prob.domain.0 - np as f64 * dx;
    let mut w: Vec<f64> = (0..n).map(|i| prob.terminal.eval(origin + i as f64 * dx)).collect();
    let steps = evolve(&mut w, dx, tau, eps, &prob.hamiltonian);
    let x = (0..inner).map(|i| prob.domain.0 + i as f64 * dx).collect();
    Ok(HjSolution { x, u: w[np..np + inner].to_vec(), dx, pad, steps })
}

fn evolve(w: &mut [f64], dx: f64, tau: f64, eps: f64, ham: &Hamiltonian) -> usize {
    let n = w.len();
    let convex = ham.is_convex();
    let pstar = ham.argmin();
    let mut next = vec![0.0; n];
    let mut scratch = Tridiag::new(n);
    let mut elapsed = 0.0;
    let mut steps = 0;
    while elapsed < tau * (1.0 - 1e-14) {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for k in 1..n {
            let p = (w[k] - w[k - 1]) / dx;
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let alpha = ham.speed_bound(lo, hi);
        let dt = (CFL * dx / alpha.max(1.0)).min(tau - elapsed);
        for k in 0..n {
            // constant extrapolation: zero slope across the ends
            let pm = if k == 0 { 0.0 } else { (w[k] - w[k - 1]) / dx };
            let pp = if k + 1 == n { 0.0 } else { (w[k + 1] - w[k]) / dx };
            let flux = if convex {
                if pm <= pp {
                    ham.eval(pstar.clamp(pm, pp))
                } else {
                    ham.eval(pm).max(ham.eval(pp))
                }
            } else {
                ham.eval(0.5 * (pm + pp)) - 0.5 * alpha * (pp - pm)
            };
            next[k] = w[k] - dt * flux;
        }
        if eps > 0.0 {
            scratch.backward_euler(&next, w, eps * dt / (dx * dx));
        } else {
            w.copy_from_slice(&next);
        }
        elapsed += dt;
        steps += 1;
    }
    steps
}

/// Thomas solver for `(I − r·D2) w = rhs` with reflecting ends.
struct Tridiag {
    c: Vec<f64>,
    d: Vec<f64>,
}

impl Tridiag {
    fn new(n: usize) -> Self {
        Self { c: vec![0.0; n], d: vec![0.0; n] }
    }

    fn backward_euler(&mut self, rhs: &[f64], out: &mut [f64], r: f64) {
        let n = rhs.len();
        let diag = |k: usize| if k == 0 || k + 1 == n { 1.0 + r } else { 1.0 + 2.0 * r };
        self.c[0] = -r / diag(0);
        self.d[0] = rhs[0] / diag(0);
        for k in 1..n {
            let m = diag(k) + r * self.c[k - 1];
            self.c[k] = -r / m;
            self.d[k] = (rhs[k] + r * self.d[k - 1]) / m;
        }
        out[n - 1] = self.d[n - 1];
        for k in (0..n - 1).rev() {
            out[k] = self.d[k] - self.c[k] * out[k + 1];
        }
    }
}

/// Largest difference quotient of grid values.
pub fn discrete_lipschitz(u: &[f64], dx: f64) -> f64 {
    u.windows(2).map(|w| ((w[1] - w[0]) / dx).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub eps_list: Vec<f64>,
    pub errors: Vec<f64>,
    /// The same errors recomputed on the grid with half the spacing.
    pub refined_errors: Vec<f64>,
    /// Fitted exponent of error against `ε`; `None` when fewer than two
    /// errors clear the floor.
    pub slope: Option<f64>,
    /// Root-mean-square residual of the log-log fit.
    pub slope_ci: f64,
    /// `max_i errors[i]/√ε_i`.
    pub constant: f64,
    /// Sup gap between first-order solutions at `Δx` and `Δx/2`.
    pub floor: f64,
    /// Which errors entered the fit.
    pub fitted: Vec<bool>,
    /// Largest relative change of fitted errors under grid halving.
    pub refinement_change: f64,
    pub resolvable: bool,
    pub one_sided: bool,
    pub runtime_s: Vec<f64>,
}

impl RateReport {
    pub fn consistent(&self) -> bool {
        self.refinement_change < REFINEMENT_TOL
    }
}

fn validate_eps(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 4 {
        return Err(Error::InvalidParameter("a rate experiment needs at least four viscosities".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("viscosities must be positive".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("viscosities must be strictly decreasing".into()));
    }
    if eps_list[0] / eps_list[eps_list.len() - 1] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("viscosities must span at least two decades".into()));
    }
    Ok(())
}

fn window_gap(a: &HjSolution, b: &HjSolution, one_sided: bool) -> f64 {
    a.window()
        .map(|k| {
            let d = a.u[k] - b.u[k];
            if one_sided { d } else { d.abs() }
        })
        .fold(0.0, f64::max)
}

/// Sup gap on the reporting window between a coarse solution and a fine
/// one with twice the resolution, compared at shared nodes.
fn refinement_gap(coarse: &HjSolution, fine: &HjSolution) -> f64 {
    coarse.window().map(|k| (coarse.u[k] - fine.u[2 * k]).abs()).fold(0.0, f64::max)
}

/// Least squares of `ln y` on `ln x`: slope and RMS residual.
fn fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

fn run_rate(prob: &HjProblem1d, eps_list: &[f64], t_probe: f64, one_sided: bool) -> Result<RateReport> {
    validate_eps(eps_list)?;
    let tau = check_time(prob, t_probe)?;
    // one pad for the whole sweep so every solve sees the same grid
    let pad = prob.pad_width(eps_list[0]);
    let base = [1usize, 2]
        .par_iter()
        .map(|&r| solve(prob, tau, 0.0, pad, r))
        .collect::<Result<Vec<_>>>()?;
    let floor = refinement_gap(&base[0], &base[1]);
    let runs = eps_list
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let coarse = solve(prob, tau, eps, pad, 1)?;
            let fine = solve(prob, tau, eps, pad, 2)?;
            let e = window_gap(&coarse, &base[0], one_sided).max(0.0);
            let ef = window_gap(&fine, &base[1], one_sided).max(0.0);
            Ok((e, ef, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let refined_errors: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let runtime_s = runs.iter().map(|r| r.2).collect();
    let fitted: Vec<bool> = errors.iter().map(|&e| e > FLOOR_MULTIPLE * floor && e > 1e-12).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        eps_list.iter().zip(&errors).zip(&fitted).filter(|(_, &f)| f).map(|((&x, &y), _)| (x, y)).unzip();
    let resolvable = xs.len() >= 2;
    let (slope, slope_ci) = if resolvable {
        let (s, r) = fit(&xs, &ys);
        (Some(s), r)
    } else {
        (None, 0.0)
    };
    let refinement_change = errors
        .iter()
        .zip(&refined_errors)
        .zip(&fitted)
        .filter(|(_, &f)| f)
        .map(|((e, ef), _)| (e - ef).abs() / e)
        .fold(0.0, f64::max);
    let constant = eps_list.iter().zip(&errors).map(|(e, err)| err / e.sqrt()).fold(0.0, f64::max);
    Ok(RateReport {
        eps_list: eps_list.to_vec(),
        errors,
        refined_errors,
        slope,
        slope_ci,
        constant,
        floor,
        fitted,
        refinement_change,
        resolvable,
        one_sided,
        runtime_s,
    })
}

/// Sup-norm gap between viscous and inviscid solutions at `t_probe` over
/// the reporting window, for each `ε`, and its fitted exponent.
pub fn rate_experiment(prob: &HjProblem1d, eps_list: &[f64], t_probe: f64) -> Result<RateReport> {
    run_rate(prob, eps_list, t_probe, false)
}

/// As [`rate_experiment`] with the signed gap `max(0, sup(u^ε − u))`.
pub fn one_sided_semiconcave_rate(prob: &HjProblem1d, eps_list: &[f64], t_probe: f64) -> Result<RateReport> {
    if !prob.hamiltonian.is_convex() {
        return Err(Error::InvalidParameter("one-sided rate needs a convex Hamiltonian".into()));
    }
    run_rate(prob, eps_list, t_probe, true)
}

/// The absolute-value fixture: `H = |p|`, `g = |x|` on `[−1, 1]`, `T = ½`.
pub fn abs_fixture(grid_n: usize) -> Result<HjProblem1d> {
    HjProblem1d::new((-1.0, 1.0), grid_n, Terminal::Abs, Hamiltonian::Abs, 0.5)
}

/// The semiconcave fixture: `H = p²/2`, `g = −½x²/(1 + x²)` on `[−2, 2]`, `T = 1`.
pub fn semiconcave_fixture(grid_n: usize) -> Result<HjProblem1d> {
    HjProblem1d::new((-2.0, 2.0), grid_n, Terminal::Semiconcave { radius: 1.0 }, Hamiltonian::Quadratic, 1.0)
}

pub const FIXTURE_EPS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
