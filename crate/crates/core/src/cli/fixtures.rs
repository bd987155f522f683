//! Inputs given as files or inline generators.
//!
//! ```text
//! dirac:0,0                           single atom
//! points:0,0;1,0;0,1                  equal weights on listed points
//! cloud:dim=2;n=30;sigma=1;mean=0,0   seeded Gaussian sample, equal weights
//! gaussian:mean=0,0;sigma=1;n=24      grid density on ±6σ
//! uniform:dim=1;lo=-1;hi=1;n=64       cell-centred grid density
//! ```
//!
//! Anything else is read as a path.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::CliError;
use crate::functional::MeasureRef;
use crate::grid::GridDensity;
use crate::io::{self, Loaded};
use crate::measure::DiscreteMeasure;

fn kv(body: &str) -> Result<BTreeMap<&str, &str>, CliError> {
    body.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::Usage(format!("generator field `{p}` is not key=value")))
        })
        .collect()
}

fn need<'a>(m: &BTreeMap<&str, &'a str>, key: &str, spec: &str) -> Result<&'a str, CliError> {
    m.get(key).copied().ok_or_else(|| CliError::Usage(format!("generator `{spec}` lacks `{key}`")))
}

fn list(s: &str) -> Result<Vec<f64>, CliError> {
    io::parse_list(s).map_err(CliError::from)
}

fn num<T: std::str::FromStr>(s: &str, spec: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("generator `{spec}`: bad number `{s}`")))
}

/// Resolves a generator spec or file path.
pub fn load(spec: &str, rng: &mut ChaCha8Rng) -> Result<Loaded, CliError> {
    let Some((kind, body)) = spec.split_once(':') else {
        return io::read_any(Path::new(spec)).map_err(CliError::from);
    };
    match kind {
        "dirac" => Ok(Loaded::Measure(DiscreteMeasure::dirac(&list(body)?)?)),
        "points" => {
            let pts = body.split(';').map(list).collect::<Result<Vec<_>, _>>()?;
            Ok(Loaded::Measure(DiscreteMeasure::uniform(&pts)?))
        }
        "cloud" => {
            let m = kv(body)?;
            let dim: usize = num(need(&m, "dim", spec)?, spec)?;
            let n: usize = num(need(&m, "n", spec)?, spec)?;
            let sigma: f64 = m.get("sigma").map_or(Ok(1.0), |s| num(s, spec))?;
            let mean = m.get("mean").map_or(Ok(vec![0.0; dim]), |s| list(s))?;
            if mean.len() != dim || n == 0 || !(sigma > 0.0) {
                return Err(CliError::Usage(format!("generator `{spec}` has inconsistent fields")));
            }
            let normal = Normal::new(0.0, sigma).map_err(|e| CliError::Usage(e.to_string()))?;
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| mean.iter().map(|c| c + normal.sample(rng)).collect()).collect();
            Ok(Loaded::Measure(DiscreteMeasure::uniform(&pts)?))
        }
        "gaussian" => {
            let m = kv(body)?;
            let mean = list(need(&m, "mean", spec)?)?;
            let sigma: f64 = num(need(&m, "sigma", spec)?, spec)?;
            let n: usize = num(need(&m, "n", spec)?, spec)?;
            Ok(Loaded::Grid(GridDensity::gaussian(&mean, sigma, n)?))
        }
        "uniform" => {
            let m = kv(body)?;
            let dim: usize = num(need(&m, "dim", spec)?, spec)?;
            let lo: f64 = num(need(&m, "lo", spec)?, spec)?;
            let hi: f64 = num(need(&m, "hi", spec)?, spec)?;
            let n: usize = num(need(&m, "n", spec)?, spec)?;
            Ok(Loaded::Grid(GridDensity::uniform(dim, lo, hi, n)?))
        }
        _ => io::read_any(Path::new(spec)).map_err(CliError::from),
    }
}

/// An input viewed as a measure or a grid density.
#[derive(Debug, Clone)]
pub enum Input {
    Measure(DiscreteMeasure),
    Grid(GridDensity),
}

impl Input {
    pub fn load(spec: &str, rng: &mut ChaCha8Rng) -> Result<Self, CliError> {
        match load(spec, rng)? {
            Loaded::Measure(m) => Ok(Self::Measure(m)),
            Loaded::Grid(g) => Ok(Self::Grid(g)),
            Loaded::Coupling(_) => Err(CliError::Usage(format!("`{spec}` is a coupling, expected a measure or grid"))),
        }
    }

    pub fn as_ref(&self) -> MeasureRef<'_> {
        match self {
            Self::Measure(m) => MeasureRef::Discrete(m),
            Self::Grid(g) => MeasureRef::Grid(g),
        }
    }

    /// Grids are atomised.
    pub fn into_measure(self) -> DiscreteMeasure {
        match self {
            Self::Measure(m) => m,
            Self::Grid(g) => g.atomize(),
        }
    }

    pub fn into_grid(self, spec: &str) -> Result<GridDensity, CliError> {
        match self {
            Self::Grid(g) => Ok(g),
            Self::Measure(_) => Err(CliError::Usage(format!("`{spec}` must be a grid density"))),
        }
    }
}

/// A fresh draw for seeding per-start solver randomness.
pub fn derived_seed(rng: &mut ChaCha8Rng) -> u64 {
    rng.random()
}
