//! Plan-averaged Lagrangian and Hamiltonian and the Fenchel gap between them.

use crate::cost::{CostFamily, CostModel};
use crate::error::Result;
use crate::measure::{norm_sq, Coupling, DiscreteMeasure};
use crate::tangent::{scale_velocity_plan, tangent_scalar_product};

/// `𝓛(γ) = ∫ L(v) dγ(x, v)`.
pub fn relaxed_lagrangian(g: &Coupling, l: &CostModel) -> f64 {
    g.iter().map(|(_, v, w)| w * l.lagrangian(v)).sum()
}

/// `𝓗(γ) = ∫ H(p) dγ(x, p)` with `H` the conjugate of `L`.
pub fn relaxed_hamiltonian(g: &Coupling, l: &CostModel) -> Result<f64> {
    let mut s = 0.0;
    for (_, p, w) in g.iter() {
        s += w * l.hamiltonian(p)?;
    }
    Ok(s)
}

/// `∫ H(x, p, μ) dγ(x, p)` for an explicit Hamiltonian, `μ` the first marginal.
pub fn relaxed_hamiltonian_with(g: &Coupling, h: impl Fn(&[f64], &[f64], &DiscreteMeasure) -> f64) -> f64 {
    let mu = g.first_marginal();
    g.iter().map(|(x, p, w)| w * h(x, p, &mu)).sum()
}

/// `𝓗(g) + 𝓛(ξ) − ⟨−ξ, g⟩_μ`, nonnegative by the Fenchel inequality.
pub fn fenchel_gap(g: &Coupling, xi: &Coupling, l: &CostModel) -> Result<f64> {
    let pairing = tangent_scalar_product(&scale_velocity_plan(-1.0, xi), g)?.value;
    Ok(relaxed_hamiltonian(g, l)? + relaxed_lagrangian(xi, l) - pairing)
}

/// The velocity plan `(x, −∇H(p))` attaining equality in [`fenchel_gap`].
pub fn optimal_velocity(g: &Coupling, l: &CostModel) -> Result<Coupling> {
    // radial costs: v = −h'(|p|) p/|p|, with h' by central differences for tables
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (x, p, _) in g.iter() {
        xs.extend_from_slice(x);
        let q = norm_sq(p).sqrt();
        if q == 0.0 {
            vs.extend(std::iter::repeat_n(0.0, p.len()));
            continue;
        }
        let slope = match l.family() {
            CostFamily::Quadratic { a } => q / a,
            CostFamily::Power { p: e } => q.powf(1.0 / (e - 1.0)),
            CostFamily::Tabulated { .. } => {
                let step = 1e-6 * q.max(1.0);
                let lo = (q - step).max(0.0);
                (l.hamiltonian_profile(q + step)? - l.hamiltonian_profile(lo)?) / (q + step - lo)
            }
        };
        vs.extend(p.iter().map(|v| -slope * v / q));
    }
    Coupling::from_flat(g.dim(), xs, vs, g.weights().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_flat(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn lagrangian_examples() {
        let q = CostModel::quadratic(1.0).unwrap();
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(relaxed_lagrangian(&Coupling::zero_velocity(&mu), &q), 0.0);
        let g = Coupling::from_map(&mu, |x| vec![x[0] + 1.0]).unwrap();
        assert!((relaxed_lagrangian(&g, &q) - 0.5 * (0.5 * 1.0 + 0.5 * 4.0)).abs() < 1e-15);
        let split = Coupling::new(&[(vec![0.0], vec![-2.0]), (vec![0.0], vec![2.0])], vec![0.5, 0.5]).unwrap();
        assert_eq!(relaxed_lagrangian(&split, &q), 2.0);
    }

    #[test]
    fn hamiltonian_examples() {
        let q = CostModel::quadratic(1.0).unwrap();
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(relaxed_hamiltonian(&Coupling::zero_velocity(&mu), &q).unwrap(), 0.0);
        let g = Coupling::from_map(&mu, |_| vec![3.0]).unwrap();
        assert_eq!(relaxed_hamiltonian(&g, &q).unwrap(), 4.5);
        let explicit = relaxed_hamiltonian_with(&g, |x, p, m| x[0] * p[0] + m.second_moment());
        assert!((explicit - (1.5 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn fenchel_gap_examples() {
        let q = CostModel::quadratic(1.0).unwrap();
        let mu = line(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        let g = Coupling::from_map(&mu, |x| vec![x[0] - 0.5]).unwrap();
        let xi = scale_velocity_plan(-1.0, &g);
        assert!(fenchel_gap(&g, &xi, &q).unwrap().abs() < 1e-15);
        let g = Coupling::from_map(&mu, |_| vec![2.0]).unwrap();
        let zero = Coupling::zero_velocity(&mu);
        assert_eq!(fenchel_gap(&g, &zero, &q).unwrap(), 2.0);
    }

    #[test]
    fn optimal_velocities_close_the_gap() {
        let g = Coupling::new(
            &[(vec![0.0], vec![-2.0]), (vec![0.0], vec![1.0]), (vec![1.0], vec![0.5])],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap();
        for l in [
            CostModel::quadratic(2.0).unwrap(),
            CostModel::power(1.5).unwrap(),
            CostModel::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 2.0], None).unwrap(),
        ] {
            let xi = optimal_velocity(&g, &l).unwrap();
            let gap = fenchel_gap(&g, &xi, &l).unwrap();
            assert!(gap.abs() < 1e-6, "{l:?}: {gap}");
        }
    }
}
