use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{parse_f64, parse_list, RunConfig};
use super::fixtures::{derived_seed, Input};
use super::report::{Report, Row};
use super::{CliError, Command, ConvexityKind};
use crate::convexity::{
    default_t_grid, div_bound, flat_derivative_convexity_check, geodesic_convexity_residual, mixture_convexity_residual,
    weak_action_bound, BoundReport, ConvexityCheck, RESIDUAL_TOL,
};
use crate::cost::CostModel;
use crate::functional::{FunctionalSpec, Kernel, ScalarField};
use crate::hopflax::{dpp_residual, hopflax_value, HopfLaxProblem, SolverOptions};
use crate::io;
use crate::measure::{Coupling, DiscreteMeasure};
use crate::ot::{w2, OtMethod};
use crate::relaxed::{fenchel_gap, optimal_velocity};
use crate::viscosity::{one_sided_semiconcave_rate, rate_experiment, Hamiltonian, HjProblem1d, Terminal};

const FUNCTIONAL_FIELDS: [&str; 14] = [
    "kind",
    "field",
    "alpha",
    "center",
    "delta",
    "slope",
    "value",
    "kernel",
    "kernel_param",
    "anchor",
    "scale",
    "lambda",
    "lipschitz",
    "lower_bound",
];
const COST_KEYS: [&str; 5] = ["cost.family", "cost.a", "cost.p", "cost.radii", "cost.values"];
const SOLVER_KEYS: [&str; 3] = ["solver.starts", "solver.max_iter", "solver.step_tol"];

fn functional_keys(prefix: &str) -> Vec<String> {
    FUNCTIONAL_FIELDS.iter().map(|f| format!("{prefix}.{f}")).collect()
}

pub(super) fn allowed_keys(cmd: &Command) -> Vec<String> {
    let mut keys: Vec<String> = Vec::new();
    let mut add = |ks: &[&str]| keys.extend(ks.iter().map(|s| s.to_string()));
    match cmd {
        Command::W2 { .. } => add(&["input.mu", "input.nu", "ot.method", "ot.reg", "check.expected", "output.plan"]),
        Command::Functional { .. } => {
            add(&["input.mu", "check.expected"]);
            keys.extend(functional_keys("functional"));
        }
        Command::Hopflax { .. } | Command::DppCheck { .. } => {
            add(&["input.mu", "problem.horizon", "problem.times", "problem.t", "problem.s", "dpp.tol", "check.expected", "output.optimizer"]);
            add(&COST_KEYS);
            add(&SOLVER_KEYS);
            keys.extend(functional_keys("terminal"));
        }
        Command::ConvexityCheck { kind } => {
            match kind {
                ConvexityKind::Geodesic => add(&["input.mu0", "input.mu1", "convexity.lambda", "convexity.t_grid"]),
                ConvexityKind::Mixture => {
                    add(&["input.mu", "input.nu0", "input.nu1", "convexity.lambda", "convexity.t_grid", "convexity.h"])
                }
                ConvexityKind::Flat => add(&["input.mu", "convexity.segments"]),
                ConvexityKind::Divbound => add(&["input.rho", "input.nu"]),
                ConvexityKind::Weakaction => add(&["input.rho"]),
            }
            if *kind != ConvexityKind::Divbound {
                keys.extend(functional_keys("functional"));
            }
        }
        Command::VvRate { .. } => add(&[
            "vv.hamiltonian",
            "vv.terminal",
            "vv.grid",
            "vv.eps",
            "vv.t_probe",
            "vv.one_sided",
            "vv.domain",
            "vv.horizon",
            "vv.slope_min",
            "vv.slope_max",
        ]),
        Command::FenchelCheck => {
            add(&["fenchel.pairs", "fenchel.atoms", "fenchel.dim", "fenchel.spread"]);
            add(&COST_KEYS);
        }
    }
    keys
}

pub(super) fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new(&cmd.name(), cfg.hash());
    report.note("seed", cfg.seed);
    match cmd {
        Command::W2 { .. } => run_w2(cfg, &mut rng, &mut report)?,
        Command::Functional { .. } => run_functional(cfg, &mut rng, &mut report)?,
        Command::Hopflax { .. } => run_hopflax(cfg, &mut rng, &mut report)?,
        Command::DppCheck { .. } => run_dpp(cfg, &mut rng, &mut report)?,
        Command::ConvexityCheck { kind } => run_convexity(*kind, cfg, &mut rng, &mut report)?,
        Command::VvRate { .. } => run_vv(cfg, &mut report)?,
        Command::FenchelCheck => run_fenchel(cfg, &mut rng, &mut report)?,
    }
    Ok(report)
}

fn measure(cfg: &RunConfig, key: &str, flag: &str, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure, CliError> {
    Ok(Input::load(cfg.require(key, flag)?, rng)?.into_measure())
}

fn functional(cfg: &RunConfig, prefix: &str, rng: &mut ChaCha8Rng) -> Result<FunctionalSpec, CliError> {
    let key = |f: &str| format!("{prefix}.{f}");
    let get = |f: &str| cfg.get(&key(f));
    let num = |f: &str, d: f64| cfg.f64_or(&key(f), d);
    let kind = cfg.require(&key("kind"), &key("kind"))?;
    let vec_or_empty = |f: &str| get(f).map_or(Ok(Vec::new()), |s| parse_list(&key(f), s));
    let mut spec = match kind {
        "potential" => {
            let field = match get("field").unwrap_or("quadratic") {
                "quadratic" => ScalarField::Quadratic { alpha: num("alpha", 1.0)?, center: vec_or_empty("center")? },
                "norm" => ScalarField::Norm { center: vec_or_empty("center")? },
                "smooth-norm" => ScalarField::SmoothNorm { delta: num("delta", 1.0)? },
                "linear" => ScalarField::Linear { slope: vec_or_empty("slope")? },
                "constant" => ScalarField::Constant(num("value", 0.0)?),
                other => return Err(CliError::Usage(format!("unknown potential field `{other}`"))),
            };
            FunctionalSpec::potential(field)
        }
        "constant" => FunctionalSpec::constant(num("value", 0.0)?),
        "second-moment" => FunctionalSpec::second_moment(),
        "half-second-moment" => FunctionalSpec::half_second_moment(),
        "entropy" => FunctionalSpec::entropy(),
        "interaction" => {
            let param = num("kernel_param", 1.0)?;
            let k = match get("kernel").unwrap_or("quadratic") {
                "quadratic" => Kernel::Quadratic { scale: param },
                "gaussian" => Kernel::Gaussian { width: param },
                other => return Err(CliError::Usage(format!("unknown kernel `{other}`"))),
            };
            FunctionalSpec::interaction(k)
        }
        "half-w2" | "neg-half-w2" => {
            let anchor = measure(cfg, &key("anchor"), &key("anchor"), rng)?;
            if kind == "half-w2" {
                FunctionalSpec::half_w2_to(anchor)
            } else {
                FunctionalSpec::neg_half_w2_to(anchor)
            }
        }
        other => return Err(CliError::Usage(format!("unknown functional kind `{other}`"))),
    };
    if let Some(s) = cfg.f64_opt(&key("scale"))? {
        spec = spec.scaled(s);
    }
    if let Some(l) = cfg.f64_opt(&key("lambda"))? {
        spec = spec.with_lambda(l);
    }
    if let Some(l) = cfg.f64_opt(&key("lipschitz"))? {
        spec = spec.with_lipschitz(l);
    }
    if let Some(b) = cfg.f64_opt(&key("lower_bound"))? {
        spec = spec.with_lower_bound(b);
    }
    Ok(spec)
}

fn cost_model(cfg: &RunConfig) -> Result<CostModel, CliError> {
    let model = match cfg.get("cost.family").unwrap_or("quadratic") {
        "quadratic" => CostModel::quadratic(cfg.f64_or("cost.a", 1.0)?)?,
        "power" => CostModel::power(cfg.f64_or("cost.p", 1.5)?)?,
        "tabulated" => CostModel::tabulated(
            parse_list("cost.radii", cfg.require("cost.radii", "cost.radii")?)?,
            parse_list("cost.values", cfg.require("cost.values", "cost.values")?)?,
            None,
        )?,
        other => return Err(CliError::Usage(format!("unknown cost family `{other}`"))),
    };
    Ok(model)
}

fn solver_options(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<SolverOptions, CliError> {
    let d = SolverOptions::default();
    Ok(SolverOptions {
        max_iterations: cfg.usize_or("solver.max_iter", d.max_iterations)?,
        step_tol: cfg.f64_or("solver.step_tol", d.step_tol)?,
        starts: cfg.usize_or("solver.starts", d.starts)?.max(1),
        seed: derived_seed(rng),
    })
}

fn run_w2(cfg: &RunConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let mu = measure(cfg, "input.mu", "--mu", rng)?;
    let nu = measure(cfg, "input.nu", "--nu", rng)?;
    let method = match cfg.get("ot.method").unwrap_or("exact") {
        "exact" => OtMethod::Exact,
        "entropic" => OtMethod::Entropic { reg: cfg.f64_or("ot.reg", 1e-2)? },
        other => return Err(CliError::Usage(format!("unknown ot.method `{other}`"))),
    };
    let sol = w2(&mu, &nu, method)?;
    match cfg.f64_opt("check.expected")? {
        Some(e) => report.push(Row::equal("distance", sol.distance, e, cfg.tol.unwrap_or(1e-9))),
        None => report.push(Row::info("distance", sol.distance)),
    }
    report.push(Row::info("dual_gap", sol.dual_gap));
    report.note("iterations", sol.iterations);
    report.note("plan_pairs", sol.plan.len());
    if let Some(path) = cfg.get("output.plan") {
        io::write_text(path.as_ref(), &io::format_coupling(&sol.plan))?;
    }
    Ok(())
}

fn run_functional(cfg: &RunConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let input = Input::load(cfg.require("input.mu", "--mu")?, rng)?;
    let f = functional(cfg, "functional", rng)?;
    let value = f.evaluate_on(input.as_ref())?;
    match cfg.f64_opt("check.expected")? {
        Some(e) => report.push(Row::equal("value", value, e, cfg.tol.unwrap_or(1e-9))),
        None => report.push(Row::info("value", value)),
    }
    if let Input::Grid(g) = &input {
        report.push(Row::info("entropy", g.entropy()));
        report.push(Row::info("fisher_information", g.fisher_information()?));
        report.push(Row::lower("entropy_star", g.entropy_star(), 0.0, cfg.tol.unwrap_or(1e-6)));
    }
    report.push(Row::info("second_moment", input.as_ref().second_moment()));
    Ok(())
}

fn hopflax_problem(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<HopfLaxProblem, CliError> {
    let g = functional(cfg, "terminal", rng)?;
    Ok(HopfLaxProblem::new(g, cost_model(cfg)?, cfg.f64_or("problem.horizon", 1.0)?)?)
}

fn run_hopflax(cfg: &RunConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let mu = measure(cfg, "input.mu", "--mu", rng)?;
    let prob = hopflax_problem(cfg, rng)?;
    let opts = solver_options(cfg, rng)?;
    let times = cfg.list_or("problem.times", &[0.0])?;
    for (k, &t) in times.iter().enumerate() {
        let sol = hopflax_value(t, &mu, &prob, &opts)?;
        let name = format!("value[t={t}]");
        match (k, cfg.f64_opt("check.expected")?) {
            (0, Some(e)) => report.push(Row::equal(name, sol.value, e, cfg.tol.unwrap_or(1e-4))),
            _ => report.push(Row::info(name, sol.value)),
        }
        report.push(Row::info(format!("tolerance[t={t}]"), sol.report.tolerance));
        report.note(&format!("converged[t={t}]"), sol.report.converged);
        if k == 0 {
            if let Some(path) = cfg.get("output.optimizer") {
                io::write_text(path.as_ref(), &io::format_measure(&sol.optimizer_measure))?;
            }
        }
    }
    let at_horizon = hopflax_value(prob.horizon(), &mu, &prob, &opts)?.value;
    report.push(Row::equal("terminal_identity", at_horizon, prob.terminal().evaluate(&mu)?, 0.0));
    Ok(())
}

fn run_dpp(cfg: &RunConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let mu = measure(cfg, "input.mu", "--mu", rng)?;
    let prob = hopflax_problem(cfg, rng)?;
    let opts = solver_options(cfg, rng)?;
    let t = cfg.f64_or("problem.t", 0.0)?;
    let s_list = cfg.list_or("problem.s", &[0.5 * (t + prob.horizon())])?;
    let tol = cfg.tol.unwrap_or(cfg.f64_or("dpp.tol", 1e-3)?);
    for s in s_list {
        let r = dpp_residual(t, s, &mu, &prob, &opts)?;
        report.push(Row::info(format!("value[t={t}]"), r.value));
        report.push(Row::info(format!("inner[t={t},s={s}]"), r.inner));
        report.push(Row::upper(format!("residual[t={t},s={s}]"), r.residual.abs(), tol, 0.0));
    }
    Ok(())
}

fn push_bound(report: &mut Report, name: &str, b: &BoundReport) {
    report.push(Row::upper(name, b.computed, b.bound, b.tolerance));
    report.note("in_theorem_scope", b.in_theorem_scope);
}

fn run_convexity(kind: ConvexityKind, cfg: &RunConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let t_grid = cfg.list_or("convexity.t_grid", &default_t_grid())?;
    let tol = cfg.tol.unwrap_or(RESIDUAL_TOL);
    let modulus = |f: &FunctionalSpec| -> Result<f64, CliError> {
        match cfg.f64_opt("convexity.lambda")? {
            Some(l) => Ok(l),
            None => f
                .lambda_geo()
                .ok_or_else(|| CliError::Usage("no modulus known for this functional; set convexity.lambda".into())),
        }
    };
    match kind {
        ConvexityKind::Geodesic => {
            let mu0 = measure(cfg, "input.mu0", "input.mu0", rng)?;
            let mu1 = measure(cfg, "input.mu1", "input.mu1", rng)?;
            let f = functional(cfg, "functional", rng)?;
            let lambda = modulus(&f)?;
            let check = ConvexityCheck::new(f, lambda, t_grid, tol)?;
            let r = geodesic_convexity_residual(&check, &mu0, &mu1)?;
            report.push(Row::info("lambda", lambda));
            report.push(Row::upper("geodesic_residual", r.worst, 0.0, tol));
            report.note("worst_t", r.at_t);
        }
        ConvexityKind::Mixture => {
            let mu = measure(cfg, "input.mu", "input.mu", rng)?;
            let nu0 = measure(cfg, "input.nu0", "input.nu0", rng)?;
            let nu1 = measure(cfg, "input.nu1", "input.nu1", rng)?;
            let f = functional(cfg, "functional", rng)?;
            let lambda = modulus(&f)?;
            let h = cfg.f64_or("convexity.h", 0.5)?;
            let r = mixture_convexity_residual(&f, lambda, &mu, &nu0, &nu1, h, &t_grid, tol)?;
            report.push(Row::info("lambda", lambda));
            report.push(Row::upper("mixture_residual", r.worst, 0.0, tol));
            report.note("worst_t", r.at_t);
            report.note("in_theorem_scope", r.in_theorem_scope);
        }
        ConvexityKind::Flat => {
            let input = Input::load(cfg.require("input.mu", "input.mu")?, rng)?;
            let f = functional(cfg, "functional", rng)?;
            let segments = parse_segments(cfg.require("convexity.segments", "convexity.segments")?)?;
            let r = flat_derivative_convexity_check(&f, input.as_ref(), &segments, tol)?;
            report.push(Row::upper("worst_midpoint_excess", r.worst_excess, 0.0, tol));
            report.push(Row::info("violations", r.violations.len() as f64));
            report.note("segments", r.checked);
            report.note("in_theorem_scope", r.in_theorem_scope);
        }
        ConvexityKind::Divbound => {
            let spec = cfg.require("input.rho", "input.rho")?;
            let rho = Input::load(spec, rng)?.into_grid(spec)?;
            let nu = Input::load(cfg.require("input.nu", "input.nu")?, rng)?;
            let b = div_bound(&rho, nu.as_ref())?;
            push_bound(report, "div_bound", &b);
        }
        ConvexityKind::Weakaction => {
            let spec = cfg.require("input.rho", "input.rho")?;
            let rho = Input::load(spec, rng)?.into_grid(spec)?;
            let f = functional(cfg, "functional", rng)?;
            let b = weak_action_bound(&f, &rho)?;
            push_bound(report, "weak_action", &b);
        }
    }
    Ok(())
}

/// `x0,y0:x1,y1; ...`, each side a point.
fn parse_segments(s: &str) -> Result<Vec<(Vec<f64>, Vec<f64>)>, CliError> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("segment `{p}` is not `a:b`")))?;
            Ok((parse_list("convexity.segments", a)?, parse_list("convexity.segments", b)?))
        })
        .collect()
}

fn parse_terminal(s: &str) -> Result<Terminal, CliError> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let args = || parse_list("vv.terminal", arg);
    Ok(match kind {
        "abs" => Terminal::Abs,
        "half-square" => Terminal::HalfSquare,
        "constant" => Terminal::Constant(parse_f64("vv.terminal", arg)?),
        "semiconcave" => Terminal::Semiconcave { radius: parse_f64("vv.terminal", arg)? },
        "gaussian" => match args()?.as_slice() {
            [a, w] => Terminal::Gaussian { amplitude: *a, width: *w },
            _ => return Err(CliError::Usage("gaussian terminal takes `gaussian:<amplitude>,<width>`".into())),
        },
        other => return Err(CliError::Usage(format!("unknown terminal `{other}`"))),
    })
}

fn parse_hamiltonian(s: &str) -> Result<Hamiltonian, CliError> {
    match s.split_once(':') {
        None if s == "abs" => Ok(Hamiltonian::Abs),
        None if s == "quadratic" => Ok(Hamiltonian::Quadratic),
        Some(("tabulated", body)) => {
            let (p, h) = body
                .split_once(';')
                .ok_or_else(|| CliError::Usage("tabulated Hamiltonian takes `tabulated:p1,p2,..;h1,h2,..`".into()))?;
            Ok(Hamiltonian::tabulated(parse_list("vv.hamiltonian", p)?, parse_list("vv.hamiltonian", h)?)?)
        }
        _ => Err(CliError::Usage(format!("unknown Hamiltonian `{s}`"))),
    }
}

fn run_vv(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let eps = parse_list("vv.eps", cfg.require("vv.eps", "--eps")?)?;
    let terminal = parse_terminal(cfg.get("vv.terminal").unwrap_or("abs"))?;
    let hamiltonian = parse_hamiltonian(cfg.get("vv.hamiltonian").unwrap_or("abs"))?;
    let domain = match cfg.list_or("vv.domain", &[-1.0, 1.0])?.as_slice() {
        [a, b] => (*a, *b),
        _ => return Err(CliError::Usage("vv.domain takes two numbers `a,b`".into())),
    };
    let horizon = cfg.f64_or("vv.horizon", 0.5)?;
    let prob = HjProblem1d::new(domain, cfg.usize_or("vv.grid", 2000)?, terminal, hamiltonian, horizon)?;
    let t_probe = cfg.f64_or("vv.t_probe", 0.5 * horizon)?;
    let one_sided = cfg.bool_or("vv.one_sided", false)?;
    let r = if one_sided {
        one_sided_semiconcave_rate(&prob, &eps, t_probe)?
    } else {
        rate_experiment(&prob, &eps, t_probe)?
    };
    let (lo, hi) = if one_sided { (0.85, 1.15) } else { (0.45, 1.05) };
    let lo = cfg.f64_or("vv.slope_min", lo)?;
    let hi = cfg.f64_or("vv.slope_max", hi)?;
    for (k, (e, err)) in r.eps_list.iter().zip(&r.errors).enumerate() {
        let name = format!("error[eps={e:e}]");
        let bound = r.constant * e.sqrt();
        report.push(Row::upper(name, *err, bound, 1e-12 * bound));
        report.note(&format!("fitted[eps={e:e}]"), r.fitted[k]);
    }
    report.push(Row::info("scheme_floor", r.floor));
    report.push(Row::info("constant", r.constant));
    report.push(Row::info("refinement_change", r.refinement_change));
    let slope = r.slope.unwrap_or(f64::NAN);
    report.push(Row::lower("slope_min", slope, lo, 0.0));
    report.push(Row::upper("slope_max", slope, hi, 0.0));
    report.note("slope_rms_residual", r.slope_ci);
    report.note("resolvable", r.resolvable);
    if !r.resolvable {
        report.note("message", "rate not resolvable at this resolution");
    }
    report.note("one_sided", one_sided);
    Ok(())
}

/// Two velocity plans over the same base: each atom split into `split`
/// pairs with shared random weights and independent Gaussian velocities.
fn random_pair(base: &[Vec<f64>], split: usize, spread: f64, rng: &mut ChaCha8Rng) -> Result<(Coupling, Coupling), CliError> {
    let normal = Normal::new(0.0, spread).map_err(|e| CliError::Usage(e.to_string()))?;
    let dim = base[0].len();
    let (mut xs, mut ps, mut vs, mut w) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for x in base {
        let raw: Vec<f64> = (0..split).map(|_| 0.5 + normal.sample(rng).abs()).collect();
        let total: f64 = raw.iter().sum();
        for r in raw {
            xs.extend_from_slice(x);
            ps.extend((0..dim).map(|_| normal.sample(rng)));
            vs.extend((0..dim).map(|_| normal.sample(rng)));
            w.push(r / total / base.len() as f64);
        }
    }
    Ok((Coupling::from_flat(dim, xs.clone(), ps, w.clone())?, Coupling::from_flat(dim, xs, vs, w)?))
}

fn run_fenchel(cfg: &RunConfig, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let pairs = cfg.usize_or("fenchel.pairs", 500)?;
    let atoms = cfg.usize_or("fenchel.atoms", 4)?.max(1);
    let dim = cfg.usize_or("fenchel.dim", 2)?.max(1);
    let spread = cfg.f64_or("fenchel.spread", 2.0)?;
    let models: Vec<(String, CostModel)> = if cfg.get("cost.family").is_some() {
        vec![(cfg.get("cost.family").unwrap_or_default().to_string(), cost_model(cfg)?)]
    } else {
        vec![("quadratic".into(), CostModel::quadratic(1.0)?), ("power".into(), CostModel::power(1.5)?)]
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for (name, l) in &models {
        let mut worst = f64::INFINITY;
        let mut optimal = 0.0f64;
        for _ in 0..pairs {
            let base: Vec<Vec<f64>> = (0..atoms).map(|_| (0..dim).map(|_| normal.sample(rng)).collect()).collect();
            let (g, xi) = random_pair(&base, 2, spread, rng)?;
            worst = worst.min(fenchel_gap(&g, &xi, l)?);
            optimal = optimal.max(fenchel_gap(&g, &optimal_velocity(&g, l)?, l)?.abs());
        }
        report.push(Row::lower(format!("min_gap[{name}]"), worst, 0.0, cfg.tol.unwrap_or(1e-9)));
        report.push(Row::upper(format!("optimal_gap[{name}]"), optimal, 1e-6, 0.0));
    }
    report.note("pairs", pairs);
    Ok(())
}
