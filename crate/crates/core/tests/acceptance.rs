//! End-to-end acceptance run. One line per criterion; exits non-zero when any fails.
//!
//! Run with `cargo test -p wass-hj --test acceptance`.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use wass_hj::convexity::{
    div_bound, flat_derivative_convexity_check, geodesic_convexity_residual, mixture_convexity_residual,
    weak_action_bound, ConvexityCheck, RESIDUAL_TOL,
};
use wass_hj::cost::CostModel;
use wass_hj::functional::{FunctionalSpec, Kernel, MeasureRef, ScalarField};
use wass_hj::grid::GridDensity;
use wass_hj::hopflax::{
    dpp_residual, hopflax_value, lipschitz_audit, optimizer_norm_scaling, HopfLaxProblem, SolverOptions,
};
use wass_hj::relaxed::{fenchel_gap, optimal_velocity};
use wass_hj::viscosity::{abs_fixture, one_sided_semiconcave_rate, rate_experiment, semiconcave_fixture, FIXTURE_EPS};
use wass_hj::{w2, Coupling, DiscreteMeasure, OtMethod};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force_w2(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let n = xs.len() as f64;
    permutations(xs.len())
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, &j)| xs[i].iter().zip(&ys[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum::<f64>()
                / n
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

fn sym2_sqrt(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let s = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).sqrt();
    let t = (m[0][0] + m[1][1] + 2.0 * s).sqrt();
    [[(m[0][0] + s) / t, m[0][1] / t], [m[1][0] / t, (m[1][1] + s) / t]]
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn bures_sq(m0: [f64; 2], a: [[f64; 2]; 2], m1: [f64; 2], b: [[f64; 2]; 2]) -> f64 {
    let ra = sym2_sqrt(a);
    let cross = sym2_sqrt(mat_mul(mat_mul(ra, b), ra));
    let dm = (m0[0] - m1[0]).powi(2) + (m0[1] - m1[1]).powi(2);
    dm + a[0][0] + a[1][1] + b[0][0] + b[1][1] - 2.0 * (cross[0][0] + cross[1][1])
}

// Bisection on the error function; only used to place quantile atoms.
fn normal_quantile(p: f64) -> f64 {
    let cdf = |z: f64| 0.5 * (1.0 + erf(z / 2f64.sqrt()));
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn erf(x: f64) -> f64 {
    // series for small |x|, continued fraction tail otherwise
    if x.abs() < 3.0 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    } else {
        let mut f = 0.0;
        for k in (1..60).rev() {
            f = k as f64 / 2.0 / (x.abs() + f);
        }
        let tail = (-x * x).exp() / PI.sqrt() / (x.abs() + f);
        x.signum() * (1.0 - tail)
    }
}

fn quantile_gaussian(mean: [f64; 2], factor: [[f64; 2]; 2], side: usize) -> DiscreteMeasure {
    let q: Vec<f64> = (0..side).map(|i| normal_quantile((i as f64 + 0.5) / side as f64)).collect();
    let mut pts = Vec::new();
    for &z0 in &q {
        for &z1 in &q {
            pts.push(vec![
                mean[0] + factor[0][0] * z0 + factor[0][1] * z1,
                mean[1] + factor[1][0] * z0 + factor[1][1] * z1,
            ]);
        }
    }
    DiscreteMeasure::uniform(&pts).unwrap()
}

fn ot_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    let mut count = 0;
    for dim in 1..=3 {
        for n in 1..=6 {
            for _ in 0..8 {
                let xs = gaussian_cloud(&mut rng, n, dim, 1.5);
                let ys = gaussian_cloud(&mut rng, n, dim, 1.0);
                let start = Instant::now();
                let got = w2(&DiscreteMeasure::uniform(&xs).unwrap(), &DiscreteMeasure::uniform(&ys).unwrap(), OtMethod::Exact)
                    .map_err(|e| e.to_string())?
                    .distance;
                slowest = slowest.max(start.elapsed().as_secs_f64());
                worst = worst.max((got - brute_force_w2(&xs, &ys)).abs());
                count += 1;
            }
        }
    }

    // factors L with covariance L Lᵀ
    let (m0, l0) = ([0.0, 0.0], [[1.0, 0.0], [0.3, 0.6]]);
    let (m1, l1) = ([2.0, -1.0], [[1.4, -0.5], [0.0, 0.8]]);
    let cov = |l: [[f64; 2]; 2]| mat_mul(l, [[l[0][0], l[1][0]], [l[0][1], l[1][1]]]);
    let oracle = bures_sq(m0, cov(l0), m1, cov(l1)).sqrt();
    let start = Instant::now();
    let got = w2(&quantile_gaussian(m0, l0, 20), &quantile_gaussian(m1, l1, 20), OtMethod::Exact)
        .map_err(|e| e.to_string())?
        .distance;
    let bures_time = start.elapsed().as_secs_f64();
    slowest = slowest.max(bures_time);
    let rel = (got - oracle).abs() / oracle;
    check(
        worst <= 1e-9 && rel <= 0.02 && slowest < 5.0,
        format!("{count} brute-force instances, worst gap {worst:.2e}; Bures rel err {rel:.2e} at 400 atoms; slowest {slowest:.2}s"),
    )
}

fn mixture_grid(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> GridDensity {
    let k = rng.random_range(1..=3);
    let comps: Vec<(Vec<f64>, f64, f64)> = (0..k)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            (c, rng.random_range(0.4..1.2), rng.random_range(0.2..1.0))
        })
        .collect();
    let half = 6.0;
    let h = 2.0 * half / (n as f64 - 1.0);
    let g = GridDensity::from_fn(vec![n; dim], vec![-half; dim], vec![h; dim], |x| {
        comps
            .iter()
            .map(|(c, s, w)| {
                let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                w * (-r2 / (2.0 * s * s)).exp() / (2.0 * PI * s * s).powf(dim as f64 / 2.0)
            })
            .sum()
    })
    .unwrap();
    let mass = g.mass();
    GridDensity::new(g.shape().to_vec(), g.origin().to_vec(), g.spacing().to_vec(), g.values().iter().map(|v| v / mass).collect())
        .unwrap()
}

fn entropy_fisher() -> Outcome {
    let mut worst_h = 0.0f64;
    let mut worst_i = 0.0f64;
    for (dim, n) in [(1usize, 512usize), (2, 128)] {
        for sigma in [0.5, 1.0, 2.0] {
            let g = GridDensity::gaussian(&vec![0.3; dim], sigma, n).map_err(|e| e.to_string())?;
            let d = dim as f64;
            let h = -0.5 * d * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln();
            let i = d / (sigma * sigma);
            worst_h = worst_h.max((g.entropy() - h).abs() / h.abs());
            worst_i = worst_i.max((g.fisher_information().map_err(|e| e.to_string())? - i).abs() / i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut min_star = f64::INFINITY;
    for k in 0..40 {
        let g = mixture_grid(&mut rng, 1 + k % 2, if k % 2 == 0 { 256 } else { 64 });
        min_star = min_star.min(g.entropy_star());
    }
    check(
        worst_h <= 0.01 && worst_i <= 0.02 && min_star >= -1e-6,
        format!("entropy rel err {worst_h:.2e}, Fisher rel err {worst_i:.2e}, min entropy_star {min_star:.3e} over 40 grids"),
    )
}

fn random_velocity_pair(rng: &mut ChaCha8Rng, atoms: usize, dim: usize) -> (Coupling, Coupling) {
    let spread = Normal::new(0.0, 2.0).unwrap();
    let (mut xs, mut ps, mut vs, mut w) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..atoms {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let split = rng.random_range(1..=3);
        let raw: Vec<f64> = (0..split).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for r in raw {
            xs.extend_from_slice(&x);
            ps.extend((0..dim).map(|_| spread.sample(rng)));
            vs.extend((0..dim).map(|_| spread.sample(rng)));
            w.push(r / total / atoms as f64);
        }
    }
    (Coupling::from_flat(dim, xs.clone(), ps, w.clone()).unwrap(), Coupling::from_flat(dim, xs, vs, w).unwrap())
}

fn fenchel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut min_gap = f64::INFINITY;
    let mut max_opt = 0.0f64;
    for l in [CostModel::quadratic(1.0).unwrap(), CostModel::quadratic(2.5).unwrap(), CostModel::power(1.5).unwrap(), CostModel::power(1.2).unwrap()] {
        for _ in 0..500 {
            let (g, xi) = random_velocity_pair(&mut rng, 4, 2);
            min_gap = min_gap.min(fenchel_gap(&g, &xi, &l).map_err(|e| e.to_string())?);
            let opt = optimal_velocity(&g, &l).map_err(|e| e.to_string())?;
            max_opt = max_opt.max(fenchel_gap(&g, &opt, &l).map_err(|e| e.to_string())?.abs());
            let near = opt.map_second(|_, v| v.iter().map(|c| 0.999 * c).collect());
            min_gap = min_gap.min(fenchel_gap(&g, &near, &l).map_err(|e| e.to_string())?);
        }
    }
    check(min_gap >= -1e-9 && max_opt <= 1e-6, format!("min gap {min_gap:.3e} over 4000 pairs, worst optimal gap {max_opt:.3e}"))
}

fn hopf_lax() -> Outcome {
    let opts = SolverOptions::default();
    let quad = CostModel::quadratic(1.0).unwrap();
    let power = CostModel::power(1.5).unwrap();
    let horizon = 1.0;
    let half_m2 = HopfLaxProblem::new(FunctionalSpec::half_second_moment().with_lipschitz(8.0), quad.clone(), horizon).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut notes = Vec::new();

    let mu = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, 5, 2, 1.0)).unwrap();
    let at_t = hopflax_value(horizon, &mu, &half_m2, &opts).map_err(|e| e.to_string())?.value;
    let terminal_ok = at_t == half_m2.terminal().evaluate(&mu).unwrap();

    let mut closed = 0.0f64;
    for x in [-2.0, -0.5, 0.7, 1.5] {
        for t in [0.0, 0.25, 0.5, 0.9] {
            let v = hopflax_value(t, &DiscreteMeasure::dirac(&[x]).unwrap(), &half_m2, &opts).map_err(|e| e.to_string())?.value;
            closed = closed.max((v - x * x / (2.0 * (1.0 + horizon - t))).abs());
        }
    }
    notes.push(format!("closed form {closed:.1e}"));

    let smooth = FunctionalSpec::potential(ScalarField::SmoothNorm { delta: 0.5 });
    let anchor = DiscreteMeasure::uniform(&[vec![-1.0, 0.5], vec![1.0, -0.5]]).unwrap();
    let pulled = FunctionalSpec::half_w2_to(anchor).with_lipschitz(10.0);
    let problems = [
        HopfLaxProblem::new(smooth.clone(), quad.clone(), horizon).unwrap(),
        HopfLaxProblem::new(smooth.clone(), power.clone(), horizon).unwrap(),
        HopfLaxProblem::new(pulled.clone(), quad.clone(), horizon).unwrap(),
        HopfLaxProblem::new(pulled, power.clone(), horizon).unwrap(),
    ];
    let mut corpus = vec![DiscreteMeasure::dirac(&[0.8, -0.3]).unwrap(), DiscreteMeasure::dirac(&[-1.5, 2.0]).unwrap()];
    for n in [2, 4, 7, 10] {
        corpus.push(DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, n, 2, 1.2)).unwrap());
    }
    let mut dpp = 0.0f64;
    for prob in &problems {
        for mu in &corpus {
            let r = dpp_residual(0.2, 0.6, mu, prob, &opts).map_err(|e| e.to_string())?;
            dpp = dpp.max(r.residual.abs());
        }
    }
    notes.push(format!("DPP {dpp:.1e}"));

    let mut audit_ok = true;
    let mut audited = 0;
    for prob in &problems[..2] {
        let pairs: Vec<(DiscreteMeasure, DiscreteMeasure)> = (0..50)
            .map(|_| {
                let n = rng.random_range(1..=3);
                (
                    DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, n, 2, 1.5)).unwrap(),
                    DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, n, 2, 1.5)).unwrap(),
                )
            })
            .collect();
        let audit = lipschitz_audit(0.2, prob, &pairs, &opts).map_err(|e| e.to_string())?;
        audit_ok &= audit.all_pass();
        audited += pairs.len();
    }
    let mut monotone_ok = true;
    for prob in &problems {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=10 {
            let v = hopflax_value(0.1 * k as f64, &corpus[3], prob, &opts).map_err(|e| e.to_string())?;
            monotone_ok &= v.value >= prev - v.report.tolerance.max(1e-8);
            prev = v.value;
        }
    }
    notes.push(format!("{audited} audited pairs"));

    let scaling = optimizer_norm_scaling(&corpus[4], &problems[2], 0.1, &[0.025, 0.05, 0.1, 0.2, 0.4], &opts).map_err(|e| e.to_string())?;
    notes.push(format!("norm slope {:.2}", scaling.slope));

    check(
        terminal_ok && closed <= 1e-4 && dpp <= 1e-3 && audit_ok && monotone_ok && scaling.bounds_hold(),
        format!(
            "terminal exact {terminal_ok}; {}; audit {audit_ok}; monotone {monotone_ok}; norm bounds {}",
            notes.join(", "),
            scaling.bounds_hold()
        ),
    )
}

fn convexity_estimates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let m2 = FunctionalSpec::second_moment();
    let identity = ConvexityCheck::standard(m2.clone(), m2.lambda_geo().unwrap());
    let mut identity_gap = 0.0f64;
    for dim in 1..=3 {
        for n in [1, 3, 6] {
            let a = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, n, dim, 1.0)).unwrap();
            let b = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, n + 1, dim, 2.0)).unwrap();
            let r = geodesic_convexity_residual(&identity, &a, &b).map_err(|e| e.to_string())?;
            identity_gap = identity_gap.max(r.residuals.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }

    let t_grid = wass_hj::convexity::default_t_grid();
    let quadratic_pot = FunctionalSpec::potential(ScalarField::Quadratic { alpha: 1.5, center: vec![0.5, -0.5] });
    let fixtures = [(m2.clone(), 2.0), (quadratic_pot.clone(), 1.5), (FunctionalSpec::half_second_moment(), 1.0)];
    let mut mixture_worst = f64::NEG_INFINITY;
    let mut mixture_ok = true;
    for (f, lambda) in &fixtures {
        for h in [0.1, 0.5, 0.9] {
            let mu = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, 4, 2, 1.0)).unwrap();
            let nu0 = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, 3, 2, 1.0)).unwrap();
            let nu1 = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, 5, 2, 1.5)).unwrap();
            let r = mixture_convexity_residual(f, *lambda, &mu, &nu0, &nu1, h, &t_grid, RESIDUAL_TOL).map_err(|e| e.to_string())?;
            mixture_worst = mixture_worst.max(r.worst);
            mixture_ok &= r.pass && r.in_theorem_scope;
        }
    }

    let rho = GridDensity::gaussian(&[0.0, 0.0], 1.0, 48).unwrap();
    let segments: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
        .map(|_| {
            let p = |r: &mut ChaCha8Rng| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
            (p(&mut rng), p(&mut rng))
        })
        .collect();
    let convex = [
        m2,
        quadratic_pot,
        FunctionalSpec::potential(ScalarField::SmoothNorm { delta: 0.3 }),
        FunctionalSpec::interaction(Kernel::Quadratic { scale: 0.5 }),
    ];
    let mut false_alarms = 0;
    for f in &convex {
        let r = flat_derivative_convexity_check(f, MeasureRef::Grid(&rho), &segments, 1e-6).map_err(|e| e.to_string())?;
        false_alarms += r.violations.len();
    }
    let witness = FunctionalSpec::potential(ScalarField::Quadratic { alpha: -1.0, center: vec![0.0, 0.0] });
    let flagged = !flat_derivative_convexity_check(&witness, MeasureRef::Grid(&rho), &segments, 1e-6)
        .map_err(|e| e.to_string())?
        .pass();

    check(
        identity_gap <= 1e-9 && mixture_ok && false_alarms == 0 && flagged,
        format!(
            "identity gap {identity_gap:.1e}; mixture worst {mixture_worst:.1e}; flat detector: {false_alarms} flags on convex fixtures, concave witness flagged {flagged}"
        ),
    )
}

fn divergence_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut bound_ok = true;
    let mut worst_ratio = f64::NEG_INFINITY;
    for k in 0..6 {
        let dim = 1 + k % 2;
        let n = if dim == 1 { 200 } else { 20 };
        let rho = mixture_grid(&mut rng, dim, n);
        let nu = DiscreteMeasure::uniform(&gaussian_cloud(&mut rng, 2 * n, dim, 1.5)).unwrap();
        let r = div_bound(&rho, MeasureRef::Discrete(&nu)).map_err(|e| e.to_string())?;
        bound_ok &= r.pass;
        worst_ratio = worst_ratio.max(r.computed / r.bound);
    }

    let mut sigma_err = 0.0f64;
    for (dim, n) in [(1usize, 400usize), (2, 24)] {
        let rho = GridDensity::gaussian(&vec![0.0; dim], 1.0, n).unwrap();
        let nu = GridDensity::gaussian(&vec![0.0; dim], 2.0, n).unwrap();
        let r = div_bound(&rho, MeasureRef::Grid(&nu)).map_err(|e| e.to_string())?;
        let d = dim as f64;
        sigma_err = sigma_err.max((r.computed - (1.0 - 2.0) * d).abs() / d);
    }

    let rho = GridDensity::gaussian(&[0.0, 0.0], 1.0, 24).unwrap();
    let f = FunctionalSpec::half_w2_to(DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap());
    let wa = weak_action_bound(&f, &rho).map_err(|e| e.to_string())?;
    let wa_err = (wa.computed - 2.0).abs() / 2.0;

    check(
        bound_ok && sigma_err <= 0.05 && wa_err <= 0.02,
        format!("max computed/d {worst_ratio:.3} over 6 grids; sigma=2 rel err {sigma_err:.2e}; weak action rel err {wa_err:.2e}"),
    )
}

fn vanishing_viscosity() -> Outcome {
    let start = Instant::now();
    let prob = abs_fixture(2000).map_err(|e| e.to_string())?;
    let r = rate_experiment(&prob, &FIXTURE_EPS, 0.5 * prob.horizon).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let slope = r.slope.unwrap_or(f64::NAN);
    let under_c = r.eps_list.iter().zip(&r.errors).all(|(e, err)| *err <= r.constant * e.sqrt() * (1.0 + 1e-12));

    let semi = semiconcave_fixture(2000).map_err(|e| e.to_string())?;
    let s = one_sided_semiconcave_rate(&semi, &FIXTURE_EPS, 0.5 * semi.horizon).map_err(|e| e.to_string())?;
    let one_sided = s.slope.unwrap_or(f64::NAN);
    check(
        (0.45..=1.05).contains(&slope) && under_c && elapsed < 60.0 && (0.85..=1.15).contains(&one_sided),
        format!("slope {slope:.3} (C = {:.3}) in {elapsed:.1}s; one-sided slope {one_sided:.3}", r.constant),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 6] = [
        &["w2", "--mu", "cloud:dim=2;n=12;sigma=1;mean=0,0", "--nu", "cloud:dim=2;n=12;sigma=2;mean=1,0"],
        &["functional", "--mu", "gaussian:mean=0,0;sigma=1;n=32", "--set", "functional.kind=entropy"],
        &["fenchel-check", "--set", "fenchel.pairs=50"],
        &[
            "hopflax",
            "--mu",
            "cloud:dim=2;n=3;sigma=1;mean=0,0",
            "--set",
            "terminal.kind=potential",
            "--set",
            "terminal.field=smooth-norm",
        ],
        &["convexity-check", "divbound", "--set", "input.rho=gaussian:mean=0;sigma=1;n=200", "--set", "input.nu=gaussian:mean=0;sigma=2;n=200"],
        &["vv-rate", "--eps", "1e-1,3e-2,1e-2,3e-3,1e-3", "--set", "vv.grid=400"],
    ];
    let mut identical = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("run{k}_{rep}.tsv"));
            let status = Command::new(env!("CARGO_BIN_EXE_wass-hj"))
                .args(*args)
                .args(["--seed", "7", "--out"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if status.code() != Some(0) && status.code() != Some(1) {
                return Err(format!("`{}` exited with {status}", args.join(" ")));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Err(format!("`{}` is not byte-reproducible", args.join(" ")));
        }
        identical += 1;
    }
    check(identical == runs.len(), format!("{identical} commands byte-identical across repeated runs"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("ot_exactness", ot_exactness),
        ("entropy_fisher", entropy_fisher),
        ("fenchel", fenchel),
        ("hopf_lax", hopf_lax),
        ("convexity_estimates", convexity_estimates),
        ("divergence_bounds", divergence_bounds),
        ("vanishing_viscosity", vanishing_viscosity),
        ("cli_determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
