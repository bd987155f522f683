//! Radial Lagrangians `L(z) = ℓ(|z|)` and their Hamiltonians
//! `H(p) = sup_v ⟨−v, p⟩ − L(v)`.
//!
//! Every family is radial, so conjugation reduces to the one-dimensional
//! problem `H(p) = sup_{r ≥ 0} r|p| − ℓ(r)`.

use crate::error::{Error, Result};
use crate::measure::norm_sq;

/// Samples used by the numeric conjugate before golden-section refinement.
pub const CONJUGATE_SAMPLES: usize = 2048;

/// Velocity radius on which power-family coercivity constants are stated.
pub const POWER_VELOCITY_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum CostFamily {
    /// `ℓ(r) = a r²/2`.
    Quadratic { a: f64 },
    /// `ℓ(r) = r^p/p`, `1 < p ≤ 2`.
    Power { p: f64 },
    /// Piecewise-linear `ℓ` through `(radii[k], values[k])` with `radii[0] = 0`,
    /// continued by `ℓ(r_K) + s_K(r − r_K) + (r − r_K)²/2` past the last node.
    /// `conjugate` optionally tabulates `h(|p|)` the same way.
    Tabulated {
        radii: Vec<f64>,
        values: Vec<f64>,
        conjugate: Option<(Vec<f64>, Vec<f64>)>,
    },
}

/// Lower bound `L(z) ≥ c|z|² − C`, valid for `|z| ≤ radius`
/// (`radius = ∞` when global).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    pub c: f64,
    pub big_c: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    family: CostFamily,
    numeric_conjugation: bool,
    coercivity: Coercivity,
}

fn check_table(radii: &[f64], values: &[f64], what: &str) -> Result<()> {
    if radii.len() < 2 || radii.len() != values.len() {
        return Err(Error::InvalidParameter(format!("{what}: need matching node lists of length ≥ 2")));
    }
    if radii[0] != 0.0 || values[0] != 0.0 {
        return Err(Error::InvalidParameter(format!("{what}: table must start at (0, 0)")));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(format!("{what}: radii must increase")));
    }
    let slopes: Vec<f64> = (1..radii.len())
        .map(|k| (values[k] - values[k - 1]) / (radii[k] - radii[k - 1]))
        .collect();
    if slopes[0] < 0.0 || slopes.windows(2).any(|w| w[1] < w[0] - 1e-12) {
        return Err(Error::InvalidParameter(format!("{what}: profile must be convex and nondecreasing")));
    }
    Ok(())
}

fn table_eval(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let k = radii.len() - 1;
    if r >= radii[k] {
        let s = (values[k] - values[k - 1]) / (radii[k] - radii[k - 1]);
        let d = r - radii[k];
        return values[k] + s * d + 0.5 * d * d;
    }
    let j = radii.partition_point(|&x| x <= r).max(1);
    let t = (r - radii[j - 1]) / (radii[j] - radii[j - 1]);
    values[j - 1] + t * (values[j] - values[j - 1])
}

fn table_slope(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let k = radii.len() - 1;
    if r >= radii[k] {
        let s = (values[k] - values[k - 1]) / (radii[k] - radii[k - 1]);
        return s + (r - radii[k]);
    }
    let j = radii.partition_point(|&x| x <= r).max(1);
    (values[j] - values[j - 1]) / (radii[j] - radii[j - 1])
}

impl CostModel {
    pub fn quadratic(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("quadratic coefficient {a} must be positive")));
        }
        Ok(Self {
            family: CostFamily::Quadratic { a },
            numeric_conjugation: true,
            coercivity: Coercivity { c: a / 2.0, big_c: a / 2.0, radius: f64::INFINITY },
        })
    }

    /// `|z|^p/p`. For `p < 2` no global quadratic lower bound exists, so
    /// the recorded constants hold on the ball of radius
    /// [`POWER_VELOCITY_RADIUS`].
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!("power exponent {p} outside (1, 2]")));
        }
        let coercivity = if p == 2.0 {
            Coercivity { c: 0.5, big_c: 0.5, radius: f64::INFINITY }
        } else {
            let c = POWER_VELOCITY_RADIUS.powf(p - 2.0) / p;
            Coercivity { c, big_c: c, radius: POWER_VELOCITY_RADIUS }
        };
        Ok(Self { family: CostFamily::Power { p }, numeric_conjugation: true, coercivity })
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>, conjugate: Option<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        check_table(&radii, &values, "lagrangian table")?;
        if let Some((q, h)) = &conjugate {
            check_table(q, h, "conjugate table")?;
        }
        // c r² − ℓ(r) is convex between nodes, so its maximum over the table
        // sits at a node; past the last node it peaks at r = 2 r_K.
        let c = 0.25;
        let k = radii.len() - 1;
        let nodes = radii.iter().zip(&values).map(|(r, l)| c * r * r - l).fold(0.0, f64::max);
        let tail = 0.5 * radii[k] * radii[k] - values[k];
        let big_c = nodes.max(tail).max(0.0) + 1e-12;
        Ok(Self {
            family: CostFamily::Tabulated { radii, values, conjugate },
            numeric_conjugation: true,
            coercivity: Coercivity { c, big_c, radius: f64::INFINITY },
        })
    }

    /// Disables the numeric conjugate; tables without conjugate data then
    /// cannot evaluate `H`.
    pub fn without_numeric_conjugation(mut self) -> Self {
        self.numeric_conjugation = false;
        self
    }

    pub fn family(&self) -> &CostFamily {
        &self.family
    }

    pub fn coercivity(&self) -> Coercivity {
        self.coercivity
    }

    pub fn has_conjugate(&self) -> bool {
        match &self.family {
            CostFamily::Tabulated { conjugate, .. } => conjugate.is_some() || self.numeric_conjugation,
            _ => true,
        }
    }

    /// `ℓ(r)`.
    pub fn profile(&self, r: f64) -> f64 {
        match &self.family {
            CostFamily::Quadratic { a } => 0.5 * a * r * r,
            CostFamily::Power { p } => r.powf(*p) / p,
            CostFamily::Tabulated { radii, values, .. } => table_eval(radii, values, r),
        }
    }

    /// `ℓ'(r)` (right derivative at table nodes).
    pub fn profile_slope(&self, r: f64) -> f64 {
        match &self.family {
            CostFamily::Quadratic { a } => a * r,
            CostFamily::Power { p } => r.powf(p - 1.0),
            CostFamily::Tabulated { radii, values, .. } => table_slope(radii, values, r),
        }
    }

    pub fn lagrangian(&self, z: &[f64]) -> f64 {
        self.profile(norm_sq(z).sqrt())
    }

    /// `∇L(z)`, zero at the origin.
    pub fn lagrangian_grad(&self, z: &[f64]) -> Vec<f64> {
        let r = norm_sq(z).sqrt();
        if r == 0.0 {
            return vec![0.0; z.len()];
        }
        let s = self.profile_slope(r) / r;
        z.iter().map(|v| s * v).collect()
    }

    /// `h(|p|)` where `H(p) = h(|p|)`.
    pub fn hamiltonian_profile(&self, q: f64) -> Result<f64> {
        match &self.family {
            CostFamily::Quadratic { a } => Ok(q * q / (2.0 * a)),
            CostFamily::Power { p } => {
                let ps = p / (p - 1.0);
                Ok(q.powf(ps) / ps)
            }
            CostFamily::Tabulated { conjugate: Some((qs, hs)), .. } => Ok(table_eval(qs, hs, q)),
            CostFamily::Tabulated { .. } if self.numeric_conjugation => Ok(self.numeric_hamiltonian_profile(q)),
            CostFamily::Tabulated { .. } => Err(Error::ConjugateUnavailable(
                "tabulated lagrangian has no conjugate table and numeric conjugation is off".into(),
            )),
        }
    }

    pub fn hamiltonian(&self, p: &[f64]) -> Result<f64> {
        self.hamiltonian_profile(norm_sq(p).sqrt())
    }

    /// `sup_{r ≥ 0} r q − ℓ(r)` by sampling and golden-section refinement.
    pub fn numeric_hamiltonian_profile(&self, q: f64) -> f64 {
        let radius = if self.coercivity.radius.is_finite() {
            search_radius(|r| self.profile(r), q)
        } else {
            let Coercivity { c, big_c, .. } = self.coercivity;
            ((q + (q * q + 4.0 * c * big_c).sqrt()) / (2.0 * c) * 1.05).max(1e-12)
        };
        radial_sup(|r| self.profile(r), q, radius)
    }
}

/// Doubles `R` until `r q − f(r)` stops increasing between `R` and `2R`;
/// by concavity the supremum then lies in `[0, 2R]`.
pub(crate) fn search_radius(f: impl Fn(f64) -> f64, q: f64) -> f64 {
    let phi = |r: f64| r * q - f(r);
    let mut r = 1.0f64;
    while phi(2.0 * r) >= phi(r) && r < 1e12 {
        r *= 2.0;
    }
    2.0 * r
}

/// `sup_{r ∈ [0, radius]} r q − f(r)` for convex `f`.
pub fn radial_sup(f: impl Fn(f64) -> f64, q: f64, radius: f64) -> f64 {
    let n = CONJUGATE_SAMPLES;
    let phi = |r: f64| r * q - f(r);
    let step = radius / (n - 1) as f64;
    let (mut best_k, mut best) = (0, phi(0.0));
    for k in 1..n {
        let v = phi(k as f64 * step);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut lo = (best_k.saturating_sub(1)) as f64 * step;
    let mut hi = ((best_k + 1).min(n - 1)) as f64 * step;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (phi(a), phi(b));
    for _ in 0..100 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = phi(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = phi(b);
        }
    }
    best.max(fa).max(fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_hamiltonians() {
        let q = CostModel::quadratic(1.0).unwrap();
        assert_eq!(q.hamiltonian(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(q.hamiltonian(&[3.0, 4.0]).unwrap(), 12.5);
        let p = CostModel::power(1.5).unwrap();
        // oracle: brute sup over a fine velocity grid on [0, 10]
        let brute = (0..=200_000)
            .map(|k| k as f64 * 5e-5)
            .map(|r| 2.0 * r - r.powf(1.5) / 1.5)
            .fold(f64::NEG_INFINITY, f64::max);
        let h = p.hamiltonian(&[2.0]).unwrap();
        assert!((h - 8.0 / 3.0).abs() < 1e-12);
        assert!((h - brute).abs() < 1e-4);
    }

    #[test]
    fn numeric_conjugate_matches_closed_forms() {
        for model in [CostModel::quadratic(2.0).unwrap(), CostModel::power(1.5).unwrap(), CostModel::power(1.2).unwrap()] {
            for q in [0.0, 0.3, 1.0, 2.5] {
                let exact = model.hamiltonian_profile(q).unwrap();
                let numeric = model.numeric_hamiltonian_profile(q);
                assert!((exact - numeric).abs() < 1e-8 * (1.0 + exact), "{model:?} {q}: {exact} vs {numeric}");
            }
        }
    }

    #[test]
    fn tabulated_without_conjugate_data() {
        let t = CostModel::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 2.0], None).unwrap();
        assert!(t.hamiltonian(&[1.0]).is_ok());
        let off = t.clone().without_numeric_conjugation();
        assert!(matches!(off.hamiltonian(&[1.0]), Err(Error::ConjugateUnavailable(_))));
        let with = CostModel::tabulated(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 0.5, 2.0],
            Some((vec![0.0, 1.0], vec![0.0, 0.5])),
        )
        .unwrap()
        .without_numeric_conjugation();
        assert_eq!(with.hamiltonian(&[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn tables_must_be_convex_and_anchored() {
        assert!(CostModel::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 2.5], None).is_err());
        assert!(CostModel::tabulated(vec![0.5, 1.0], vec![0.0, 1.0], None).is_err());
        assert!(CostModel::power(2.5).is_err());
        assert!(CostModel::quadratic(0.0).is_err());
    }

    #[test]
    fn coercivity_holds_on_samples() {
        let models = [
            CostModel::quadratic(0.7).unwrap(),
            CostModel::power(1.5).unwrap(),
            CostModel::tabulated(vec![0.0, 1.0, 3.0], vec![0.0, 0.1, 1.0], None).unwrap(),
        ];
        for m in models {
            let Coercivity { c, big_c, radius } = m.coercivity();
            assert!(c > 0.0 && big_c > 0.0);
            let top = radius.min(50.0);
            for k in 0..=5000 {
                let r = top * k as f64 / 5000.0;
                assert!(m.profile(r) >= c * r * r - big_c - 1e-12, "{m:?} at {r}");
            }
        }
    }
}
