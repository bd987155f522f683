//! Tangent calculus over discrete measures: velocity plans, the exponential
//! map, fiberwise scalar products and the superdifferential plan of `½W2²`.

use crate::error::{Error, Result};
use crate::measure::{dist_sq, dot, norm_sq, Coupling, DiscreteMeasure, FiberFamily, MERGE_TOL};
use crate::ot::{self, OtMethod};

/// Fibers up to this size are paired exactly in scalar products.
pub const EXACT_FIBER_LIMIT: usize = 64;
/// Regularisation used for larger fibers.
pub const FIBER_REG: f64 = 1e-3;

/// `(Id × Pr(γ))#μ`, where `Pr(γ)(x)` is the mean of the fiber `γ_x`.
pub fn barycentric_projection(plan: &Coupling) -> Coupling {
    let fam = plan.fibers();
    let dim = plan.dim();
    let mut ys = Vec::with_capacity(fam.base.points_flat().len());
    for fiber in &fam.fibers {
        ys.extend(fiber.mean());
    }
    Coupling::from_flat(dim, fam.base.points_flat().to_vec(), ys, fam.base.weights().to_vec())
        .expect("fiber family of a valid coupling")
}

/// `(π1 + π2)#γ`, coincident atoms merged.
pub fn exp_map(velocity: &Coupling) -> DiscreteMeasure {
    displace(velocity, |x, v, out| {
        for ((o, a), b) in out.iter_mut().zip(x).zip(v) {
            *o = a + b;
        }
    })
}

/// `(π1 + t(π2 − π1))#γ`.
pub fn geodesic_interpolate(plan: &Coupling, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("interpolation time {t} outside [0,1]")));
    }
    Ok(displace(plan, |x, y, out| {
        for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
            *o = a + t * (b - a);
        }
    }))
}

fn displace(plan: &Coupling, f: impl Fn(&[f64], &[f64], &mut [f64])) -> DiscreteMeasure {
    let dim = plan.dim();
    let mut pts = vec![0.0; plan.len() * dim];
    for (i, (x, y, _)) in plan.iter().enumerate() {
        f(x, y, &mut pts[i * dim..(i + 1) * dim]);
    }
    DiscreteMeasure::from_flat(dim, pts, plan.weights().to_vec())
        .expect("pushforward of a valid coupling")
        .merged(MERGE_TOL)
}

/// `(∫|v|² dγ)^½`.
pub fn tangent_norm(g: &Coupling) -> f64 {
    g.iter().map(|(_, v, w)| w * norm_sq(v)).sum::<f64>().sqrt()
}

/// `(π1, λπ2)#γ`.
pub fn scale_velocity_plan(lambda: f64, g: &Coupling) -> Coupling {
    g.map_second(|_, v| v.iter().map(|c| lambda * c).collect())
}

/// Pairs the fibers of two plans over a common base measure.
fn paired_fibers<'a>(a: &'a FiberFamily, b: &'a FiberFamily) -> Result<Vec<(f64, &'a DiscreteMeasure, &'a DiscreteMeasure)>> {
    if a.base.dim() != b.base.dim() {
        return Err(Error::DimensionMismatch { expected: a.base.dim(), found: b.base.dim() });
    }
    if a.base.len() != b.base.len() {
        return Err(Error::MarginalMismatch(format!(
            "{} base atoms against {}",
            a.base.len(),
            b.base.len()
        )));
    }
    let mut out = Vec::with_capacity(a.base.len());
    for (k, (x, w)) in a.base.iter().enumerate() {
        let j = b.base.find_atom(x, MERGE_TOL).ok_or_else(|| {
            Error::MarginalMismatch(format!("base atom {x:?} missing from the second plan"))
        })?;
        if (b.base.weight(j) - w).abs() > 1e-12 {
            return Err(Error::MarginalMismatch(format!(
                "base atom {x:?} carries {w} and {}",
                b.base.weight(j)
            )));
        }
        out.push((w, &a.fibers[k], &b.fibers[j]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentProduct {
    pub value: f64,
    /// Set when some fiber exceeded [`EXACT_FIBER_LIMIT`] and was paired
    /// with regularised transport.
    pub approximate: bool,
}

/// `max_θ ∫⟨y,z⟩ dθ` over couplings of the fibers of `g1` and `g2`.
pub fn tangent_scalar_product(g1: &Coupling, g2: &Coupling) -> Result<TangentProduct> {
    let (f1, f2) = (g1.fibers(), g2.fibers());
    let mut value = 0.0;
    let mut approximate = false;
    for (w, a, b) in paired_fibers(&f1, &f2)? {
        let (n, m) = (a.len(), b.len());
        let cost: Vec<f64> = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| -dot(a.point(i), b.point(j)))
            .collect();
        let inner = if n.max(m) <= EXACT_FIBER_LIMIT {
            ot::exact_plan_matrix(a.weights(), b.weights(), &cost)
                .iter()
                .map(|&(i, j, p)| -p * cost[i * m + j])
                .sum::<f64>()
        } else {
            approximate = true;
            let plan = ot::entropic_plan(a.weights(), b.weights(), &cost, FIBER_REG)?;
            -plan.iter().zip(&cost).map(|(p, c)| p * c).sum::<f64>()
        };
        value += w * inner;
    }
    Ok(TangentProduct { value, approximate })
}

/// `W_μ(γ1, γ2)`: fiberwise quadratic transport between plans over `μ`.
pub fn tangent_distance(g1: &Coupling, g2: &Coupling) -> Result<f64> {
    let (f1, f2) = (g1.fibers(), g2.fibers());
    let mut total = 0.0;
    for (w, a, b) in paired_fibers(&f1, &f2)? {
        total += w * ot::w2(a, b, OtMethod::Exact)?.distance.powi(2);
    }
    Ok(total.sqrt())
}

/// `(π1, π1 − π2)#σ` for an optimal plan `σ` between `μ` and `ν`.
pub fn distance_superdiff_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Coupling> {
    let sol = ot::w2(mu, nu, OtMethod::Exact)?;
    Ok(sol.plan.map_second(|x, y| x.iter().zip(y).map(|(a, b)| a - b).collect()))
}

/// `‖Pr(γ1) − Pr(γ2)‖_{L²_μ}`.
pub fn projection_distance(g1: &Coupling, g2: &Coupling) -> Result<f64> {
    let (p1, p2) = (barycentric_projection(g1).fibers(), barycentric_projection(g2).fibers());
    let mut total = 0.0;
    for (w, a, b) in paired_fibers(&p1, &p2)? {
        total += w * dist_sq(a.point(0), b.point(0));
    }
    Ok(total.sqrt())
}
