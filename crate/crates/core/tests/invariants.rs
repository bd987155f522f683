use proptest::prelude::*;

use wass_hj::convexity::{div_bound, geodesic_convexity_residual, mixture_convexity_residual, ConvexityCheck};
use wass_hj::cost::{radial_sup, CostModel};
use wass_hj::functional::{FunctionalSpec, MeasureRef, ScalarField};
use wass_hj::grid::GridDensity;
use wass_hj::relaxed::fenchel_gap;
use wass_hj::tangent::{
    distance_superdiff_plan, exp_map, projection_distance, scale_velocity_plan, tangent_distance, tangent_norm,
    tangent_scalar_product,
};
use wass_hj::viscosity::{discrete_lipschitz, solve_hj_first_order, solve_hj_viscous, Hamiltonian, HjProblem1d, Terminal};
use wass_hj::{transport_cost, w2, Coupling, DiscreteMeasure, OtMethod};

fn measure(dim: usize, max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((prop::collection::vec(-3.0..3.0f64, dim), 0.1..1.0f64), 1..=max_atoms).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let pts: Vec<Vec<f64>> = atoms.iter().map(|a| a.0.clone()).collect();
        DiscreteMeasure::new(&pts, atoms.iter().map(|a| a.1 / total).collect()).unwrap()
    })
}

fn uniform_cloud(dim: usize, n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), n).prop_map(|p| DiscreteMeasure::uniform(&p).unwrap())
}

/// Velocity plan over a base measure with up to three velocities per atom.
fn plan_over(base: DiscreteMeasure) -> impl Strategy<Value = Coupling> {
    let dim = base.dim();
    let n = base.len();
    prop::collection::vec(prop::collection::vec((prop::collection::vec(-2.0..2.0f64, dim), 0.1..1.0f64), 1..=3), n)
        .prop_map(move |fibers| {
            let (mut xs, mut vs, mut w) = (Vec::new(), Vec::new(), Vec::new());
            for (k, fiber) in fibers.iter().enumerate() {
                let total: f64 = fiber.iter().map(|f| f.1).sum();
                for (v, r) in fiber {
                    xs.extend_from_slice(base.point(k));
                    vs.extend_from_slice(v);
                    w.push(base.weight(k) * r / total);
                }
            }
            Coupling::from_flat(dim, xs, vs, w).unwrap()
        })
}

fn two_plans() -> impl Strategy<Value = (Coupling, Coupling)> {
    measure(2, 4).prop_flat_map(|base| (plan_over(base.clone()), plan_over(base)))
}

fn all_assignments(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_assignments(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w2_is_a_metric(a in measure(2, 6), b in measure(2, 6), c in measure(2, 6)) {
        let d = |x: &DiscreteMeasure, y: &DiscreteMeasure| w2(x, y, OtMethod::Exact).unwrap().distance;
        let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(d(&a, &a) <= 1e-9);
    }

    #[test]
    fn exact_matches_assignment_brute_force(n in 1usize..=5, dim in 1usize..=3, seed in any::<u64>()) {
        let pts: Vec<f64> = (0..2 * n * dim).map(|k| ((seed.wrapping_mul(2654435761).wrapping_add(k as u64 * 97)) % 1000) as f64 / 100.0).collect();
        let xs: Vec<Vec<f64>> = pts[..n * dim].chunks(dim).map(|c| c.to_vec()).collect();
        let ys: Vec<Vec<f64>> = pts[n * dim..].chunks(dim).map(|c| c.to_vec()).collect();
        let brute = all_assignments(n)
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| xs[i].iter().zip(&ys[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let got = w2(&DiscreteMeasure::uniform(&xs).unwrap(), &DiscreteMeasure::uniform(&ys).unwrap(), OtMethod::Exact).unwrap().distance;
        prop_assert!((got - brute).abs() <= 1e-9, "{got} vs {brute}");
    }

    #[test]
    fn plans_have_the_right_marginals_and_cost(a in measure(2, 7), b in measure(2, 7)) {
        let sol = w2(&a, &b, OtMethod::Exact).unwrap();
        prop_assert!(sol.plan.first_marginal().approx_eq(&a, 1e-9));
        prop_assert!(sol.plan.second_marginal().approx_eq(&b, 1e-9));
        prop_assert!((transport_cost(&sol.plan) - sol.distance).abs() <= 1e-9);
        let product = Coupling::product(&a, &b).unwrap();
        prop_assert!(transport_cost(&product) >= sol.distance - 1e-9);
        let ent = w2(&a, &b, OtMethod::Entropic { reg: 1.0 }).unwrap();
        prop_assert!(transport_cost(&ent.plan) >= sol.distance - 1e-6);
    }

    #[test]
    fn reversed_superdifferential_plan_reaches_the_target(a in uniform_cloud(2, 5), b in uniform_cloud(2, 5)) {
        let plan = distance_superdiff_plan(&a, &b).unwrap();
        let dist = w2(&a, &b, OtMethod::Exact).unwrap().distance;
        prop_assert!((tangent_norm(&plan) - dist).abs() <= 1e-9);
        prop_assert!(exp_map(&scale_velocity_plan(-1.0, &plan)).approx_eq(&b.merged(1e-12), 1e-9));
    }

    #[test]
    fn tangent_geometry((g1, g2) in two_plans()) {
        let p = tangent_scalar_product(&g1, &g2).unwrap().value;
        prop_assert!(p.abs() <= tangent_norm(&g1) * tangent_norm(&g2) + 1e-9);
        let self_product = tangent_scalar_product(&g1, &g1).unwrap().value;
        prop_assert!((self_product - tangent_norm(&g1).powi(2)).abs() <= 1e-9);
        let dist = tangent_distance(&g1, &g2).unwrap();
        prop_assert!(projection_distance(&g1, &g2).unwrap() <= dist + 1e-9);
        prop_assert!((tangent_distance(&g1, &g1).unwrap()).abs() <= 1e-7);
        prop_assert!((dist * dist - (tangent_norm(&g1).powi(2) + tangent_norm(&g2).powi(2) - 2.0 * p)).abs() <= 1e-7);
    }

    #[test]
    fn fenchel_gap_is_nonnegative((g, xi) in two_plans(), quadratic in any::<bool>(), e in 1.1..2.0f64) {
        let l = if quadratic { CostModel::quadratic(e).unwrap() } else { CostModel::power(e).unwrap() };
        prop_assert!(fenchel_gap(&g, &xi, &l).unwrap() >= -1e-9);
    }

    #[test]
    fn numeric_conjugate_is_involutive(increments in prop::collection::vec(0.0..1.5f64, 3..6), r in 0.0..3.0f64) {
        // convex table: slopes are cumulative sums of increments
        let mut radii = vec![0.0];
        let mut values = vec![0.0];
        let mut slope = 0.0;
        for (k, inc) in increments.iter().enumerate() {
            slope += inc;
            radii.push((k + 1) as f64);
            values.push(values[k] + slope);
        }
        let l = CostModel::tabulated(radii, values, None).unwrap();
        let h = |q: f64| l.numeric_hamiltonian_profile(q);
        let back = radial_sup(h, r, 64.0);
        prop_assert!((back - l.profile(r)).abs() <= 1e-3, "{back} vs {}", l.profile(r));
    }

    #[test]
    fn entropy_star_is_nonnegative(centers in prop::collection::vec((-2.0..2.0f64, 0.3..1.5f64), 1..4)) {
        let n = 257;
        let h = 16.0 / (n - 1) as f64;
        let g = GridDensity::from_fn(vec![n], vec![-8.0], vec![h], |x| {
            centers.iter().map(|(c, s)| (-(x[0] - c).powi(2) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt()).sum::<f64>() / centers.len() as f64
        }).unwrap();
        prop_assert!(g.entropy_star() >= -1e-6);
    }

    #[test]
    fn mixture_at_full_weight_is_geodesic(mu in uniform_cloud(2, 3), nu0 in uniform_cloud(2, 4), nu1 in uniform_cloud(2, 4), alpha in 0.1..3.0f64) {
        let f = FunctionalSpec::potential(ScalarField::Quadratic { alpha, center: vec![0.2, -0.1] });
        let check = ConvexityCheck::standard(f.clone(), alpha);
        let geo = geodesic_convexity_residual(&check, &nu0, &nu1).unwrap();
        let mix = mixture_convexity_residual(&f, alpha, &mu, &nu0, &nu1, 1.0, &check.t_grid, check.tolerance).unwrap();
        for (a, b) in geo.residuals.iter().zip(&mix.residuals) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn div_bound_is_translation_invariant(shift in -2.0..2.0f64, sigma in 0.5..2.5f64) {
        let rho = GridDensity::gaussian(&[0.0], 1.0, 200).unwrap();
        let nu = GridDensity::gaussian(&[0.3], sigma, 200).unwrap();
        let base = div_bound(&rho, MeasureRef::Grid(&nu)).unwrap().computed;
        let moved = div_bound(&rho.translated(&[shift]).unwrap(), MeasureRef::Grid(&nu.translated(&[shift]).unwrap())).unwrap().computed;
        prop_assert!((base - moved).abs() <= 1e-6, "{base} vs {moved}");
    }

    #[test]
    fn hj_solvers_preserve_lipschitz_bounds(amplitude in -1.5..1.5f64, width in 0.2..1.0f64, quadratic in any::<bool>(), eps in 1e-3..0.1f64) {
        let h = if quadratic { Hamiltonian::Quadratic } else { Hamiltonian::Abs };
        let prob = HjProblem1d::new((-1.0, 1.0), 200, Terminal::Gaussian { amplitude, width }, h, 0.5).unwrap();
        let terminal = solve_hj_first_order(&prob, prob.horizon).unwrap();
        let lip = discrete_lipschitz(&terminal.u, terminal.dx);
        let inviscid = solve_hj_first_order(&prob, 0.0).unwrap();
        prop_assert!(discrete_lipschitz(&inviscid.u, inviscid.dx) <= lip + 1e-9);
        let viscous = solve_hj_viscous(&prob, 0.0, eps).unwrap();
        let start = solve_hj_viscous(&prob, prob.horizon, eps).unwrap();
        prop_assert!(discrete_lipschitz(&viscous.u, viscous.dx) <= discrete_lipschitz(&start.u, start.dx) + 1e-9);
    }
}
