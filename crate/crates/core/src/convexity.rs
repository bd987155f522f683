//! Numerical checks of geodesic, mixture and flat-derivative convexity, and
//! of the divergence and weak-action bounds on grid densities.

use crate::error::{Error, Result};
use crate::functional::{FlatDerivative, FunctionalKind, FunctionalSpec, MeasureRef};
use crate::grid::GridDensity;
use crate::measure::{dist_sq, dot, DiscreteMeasure};
use crate::ot::{self, OtMethod};
use crate::tangent::geodesic_interpolate;

/// Residual tolerance for functionals evaluated on discrete measures.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Relative slack granted to bound margins for grid quadrature.
pub const BOUND_SLACK: f64 = 0.05;
/// Mixture step used when probing flat derivatives.
pub const FLAT_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ConvexityCheck {
    pub functional: FunctionalSpec,
    pub lambda: f64,
    pub t_grid: Vec<f64>,
    pub tolerance: f64,
}

impl ConvexityCheck {
    pub fn new(functional: FunctionalSpec, lambda: f64, t_grid: Vec<f64>, tolerance: f64) -> Result<Self> {
        validate_t_grid(&t_grid)?;
        if !(tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {tolerance} must be positive")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("modulus must be finite".into()));
        }
        Ok(Self { functional, lambda, t_grid, tolerance })
    }

    /// Eleven equispaced times and [`RESIDUAL_TOL`].
    pub fn standard(functional: FunctionalSpec, lambda: f64) -> Self {
        Self::new(functional, lambda, default_t_grid(), RESIDUAL_TOL).expect("valid defaults")
    }
}

pub fn default_t_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn validate_t_grid(t: &[f64]) -> Result<()> {
    if t.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter("interpolation times must lie in [0,1]".into()));
    }
    if !t.contains(&0.0) || !t.contains(&1.0) {
        return Err(Error::InvalidParameter("interpolation times must contain 0 and 1".into()));
    }
    Ok(())
}

/// Worst residual along a path and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub worst: f64,
    pub at_t: f64,
    pub residuals: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub in_theorem_scope: bool,
}

impl Residual {
    fn collect(t_grid: &[f64], residuals: Vec<f64>, tolerance: f64, in_theorem_scope: bool) -> Self {
        let (mut worst, mut at_t) = (f64::NEG_INFINITY, 0.0);
        for (&t, &r) in t_grid.iter().zip(&residuals) {
            if r > worst {
                worst = r;
                at_t = t;
            }
        }
        Self { worst, at_t, residuals, tolerance, pass: worst <= tolerance, in_theorem_scope }
    }
}

/// `max_t F(μ_t) − [(1−t)F(μ0) + tF(μ1) − (Λ/2)t(1−t)W2²]` along the
/// interpolation of an exact optimal plan.
pub fn geodesic_convexity_residual(check: &ConvexityCheck, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> Result<Residual> {
    let sol = ot::w2(mu0, mu1, OtMethod::Exact)?;
    let w2sq = sol.distance * sol.distance;
    let f = &check.functional;
    let (f0, f1) = (f.evaluate(mu0)?, f.evaluate(mu1)?);
    let mut out = Vec::with_capacity(check.t_grid.len());
    for &t in &check.t_grid {
        let ft = f.evaluate(&geodesic_interpolate(&sol.plan, t)?)?;
        out.push(ft - ((1.0 - t) * f0 + t * f1 - 0.5 * check.lambda * t * (1.0 - t) * w2sq));
    }
    Ok(Residual::collect(&check.t_grid, out, check.tolerance, true))
}

/// Worst `hΛ`-convexity residual of `F` along `τ_t = (1−h)μ + hν_t`, with
/// `ν_t` the optimal interpolation from `ν0` to `ν1` and the squared length
/// taken as `W2²(ν0, ν1)`.
pub fn mixture_convexity_residual(
    f: &FunctionalSpec,
    lambda: f64,
    mu: &DiscreteMeasure,
    nu0: &DiscreteMeasure,
    nu1: &DiscreteMeasure,
    h: f64,
    t_grid: &[f64],
    tolerance: f64,
) -> Result<Residual> {
    validate_t_grid(t_grid)?;
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidParameter(format!("mixture weight {h} outside [0,1]")));
    }
    if mu.dim() != nu0.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu0.dim() });
    }
    let sol = ot::w2(nu0, nu1, OtMethod::Exact)?;
    let w2sq = sol.distance * sol.distance;
    let tau = |t: f64| -> Result<f64> { f.evaluate(&mu.mixture(&geodesic_interpolate(&sol.plan, t)?, h)?) };
    let (f0, f1) = (tau(0.0)?, tau(1.0)?);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let ft = if t == 0.0 {
            f0
        } else if t == 1.0 {
            f1
        } else {
            tau(t)?
        };
        out.push(ft - ((1.0 - t) * f0 + t * f1 - 0.5 * h * lambda * t * (1.0 - t) * w2sq));
    }
    Ok(Residual::collect(t_grid, out, tolerance, mu.dim() >= 2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MidpointViolation {
    pub segment: usize,
    /// `D(m) − ½(D(y0) + D(y1))`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatConvexityReport {
    pub checked: usize,
    pub violations: Vec<MidpointViolation>,
    pub worst_excess: f64,
    pub tolerance: f64,
    pub in_theorem_scope: bool,
}

impl FlatConvexityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Midpoint convexity of `x ↦ D_μF(μ, x)` on each probe segment.
pub fn flat_derivative_convexity_check(
    f: &FunctionalSpec,
    mu: MeasureRef<'_>,
    segments: &[(Vec<f64>, Vec<f64>)],
    tolerance: f64,
) -> Result<FlatConvexityReport> {
    let dim = mu.dim();
    for (y0, y1) in segments {
        for y in [y0, y1] {
            if y.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: y.len() });
            }
            if !mu.in_support(y) {
                return Err(Error::OutsideSupport(format!("probe endpoint {y:?}")));
            }
        }
    }
    let d = FlatDerivative::new(f, mu, FLAT_STEP)?;
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for (k, (y0, y1)) in segments.iter().enumerate() {
        let mid: Vec<f64> = y0.iter().zip(y1).map(|(a, b)| 0.5 * (a + b)).collect();
        let excess = d.eval(&mid)? - 0.5 * (d.eval(y0)? + d.eval(y1)?);
        worst = worst.max(excess);
        if excess > tolerance {
            violations.push(MidpointViolation { segment: k, excess });
        }
    }
    Ok(FlatConvexityReport {
        checked: segments.len(),
        violations,
        worst_excess: worst,
        tolerance,
        in_theorem_scope: dim >= 2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub computed: f64,
    pub bound: f64,
    /// `bound − computed`.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub in_theorem_scope: bool,
}

impl BoundReport {
    pub fn new(computed: f64, bound: f64, tolerance: f64, in_theorem_scope: bool) -> Self {
        let margin = bound - computed;
        Self { computed, bound, margin, tolerance, pass: margin >= -tolerance, in_theorem_scope }
    }
}

/// Above-floor nodes of `ρ` in atomisation order, paired with the
/// barycentric image of each under an exact plan to `ν`.
fn grid_transport_map(rho: &GridDensity, nu: &DiscreteMeasure) -> Result<Vec<(usize, Vec<f64>)>> {
    if rho.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: nu.dim() });
    }
    let atoms = rho.atomize();
    let plan = ot::exact_plan(&atoms, nu, dist_sq)?;
    let dim = rho.dim();
    let mut image = vec![0.0; atoms.len() * dim];
    let mut mass = vec![0.0; atoms.len()];
    for (i, j, m) in plan {
        mass[i] += m;
        for (o, y) in image[i * dim..(i + 1) * dim].iter_mut().zip(nu.point(j)) {
            *o += m * y;
        }
    }
    let floor = rho.floor();
    let live = (0..rho.len()).filter(|&k| rho.values()[k] > floor);
    Ok(live
        .enumerate()
        .map(|(i, k)| {
            let t = image[i * dim..(i + 1) * dim].iter().map(|v| v / mass[i]).collect();
            (k, t)
        })
        .collect())
}

fn require_fisher(rho: &GridDensity) -> Result<()> {
    let fi = rho.fisher_information()?;
    if !fi.is_finite() {
        return Err(Error::DegenerateDensity("infinite Fisher information".into()));
    }
    Ok(())
}

/// `−∫⟨∇ρ, x − T(x)⟩dx` with `T` the barycentric projection of an exact plan
/// from the atomised grid to `ν`; bounded above by `d`.
pub fn div_bound(rho: &GridDensity, nu: MeasureRef<'_>) -> Result<BoundReport> {
    require_fisher(rho)?;
    let target = nu.to_discrete();
    let map = grid_transport_map(rho, &target)?;
    let mut s = 0.0;
    for (k, t) in &map {
        let x = rho.node(*k);
        let disp: Vec<f64> = x.iter().zip(t).map(|(a, b)| a - b).collect();
        s -= dot(&rho.gradient(*k), &disp);
    }
    let d = rho.dim() as f64;
    Ok(BoundReport::new(s * rho.cell_volume(), d, BOUND_SLACK * d, true))
}

/// `−∫⟨∇ρ, ∇D_μF(ρ, x)⟩dx` against the bound `dΛ`.
pub fn weak_action_bound(f: &FunctionalSpec, rho: &GridDensity) -> Result<BoundReport> {
    let lambda = f
        .lambda_geo()
        .ok_or_else(|| Error::UnsupportedFunctional("no concavity modulus declared".into()))?;
    require_fisher(rho)?;
    let floor = rho.floor();
    let mut s = 0.0;
    match &f.kind {
        FunctionalKind::HalfW2To(anchor) => {
            for (k, t) in grid_transport_map(rho, anchor)? {
                let x = rho.node(k);
                let grad: Vec<f64> = x.iter().zip(&t).map(|(a, b)| f.scale * (a - b)).collect();
                s -= dot(&rho.gradient(k), &grad);
            }
        }
        _ => {
            let mu = MeasureRef::Grid(rho);
            for k in (0..rho.len()).filter(|&k| rho.values()[k] > floor) {
                let x = rho.node(k);
                let grad = f
                    .flat_gradient(mu, &x)
                    .ok_or_else(|| Error::UnsupportedFunctional("flat derivative gradient unavailable".into()))?;
                s -= dot(&rho.gradient(k), &grad);
            }
        }
    }
    let bound = rho.dim() as f64 * lambda;
    Ok(BoundReport::new(s * rho.cell_volume(), bound, BOUND_SLACK * bound.abs(), rho.dim() >= 2))
}
