//! Functionals `F: P2(R^d) → R` on discrete and grid measures, their
//! position gradients and numeric flat derivatives.

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::measure::{norm_sq, DiscreteMeasure, MERGE_TOL};
use crate::ot::{self, OtMethod};
use crate::tangent::barycentric_projection;

/// Potentials `V: R^d → R` with gradient and Laplacian oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// `α|x − c|²/2`.
    Quadratic { alpha: f64, center: Vec<f64> },
    /// `|x − c|`.
    Norm { center: Vec<f64> },
    /// `√(|x|² + δ²) − δ`.
    SmoothNorm { delta: f64 },
    /// `⟨s, x⟩`.
    Linear { slope: Vec<f64> },
}

fn offset(x: &[f64], c: &[f64]) -> Vec<f64> {
    x.iter().enumerate().map(|(k, v)| v - c.get(k).copied().unwrap_or(0.0)).collect()
}

impl ScalarField {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Quadratic { alpha, center } => 0.5 * alpha * norm_sq(&offset(x, center)),
            Self::Norm { center } => norm_sq(&offset(x, center)).sqrt(),
            Self::SmoothNorm { delta } => (norm_sq(x) + delta * delta).sqrt() - delta,
            Self::Linear { slope } => x.iter().zip(slope).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Constant(_) => vec![0.0; x.len()],
            Self::Quadratic { alpha, center } => offset(x, center).into_iter().map(|v| alpha * v).collect(),
            Self::Norm { center } => {
                let z = offset(x, center);
                let r = norm_sq(&z).sqrt();
                if r == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    z.into_iter().map(|v| v / r).collect()
                }
            }
            Self::SmoothNorm { delta } => {
                let s = (norm_sq(x) + delta * delta).sqrt();
                x.iter().map(|v| v / s).collect()
            }
            Self::Linear { slope } => (0..x.len()).map(|k| slope.get(k).copied().unwrap_or(0.0)).collect(),
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            Self::Constant(_) | Self::Linear { .. } => 0.0,
            Self::Quadratic { alpha, .. } => alpha * d,
            Self::Norm { center } => {
                let r = norm_sq(&offset(x, center)).sqrt();
                if r == 0.0 { f64::INFINITY } else { (d - 1.0) / r }
            }
            Self::SmoothNorm { delta } => {
                let s = (norm_sq(x) + delta * delta).sqrt();
                (d - 1.0) / s + delta * delta / (s * s * s)
            }
        }
    }

    /// Global Lipschitz constant, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Self::Constant(_) => Some(0.0),
            Self::Quadratic { alpha, .. } => (*alpha == 0.0).then_some(0.0),
            Self::Norm { .. } | Self::SmoothNorm { .. } => Some(1.0),
            Self::Linear { slope } => Some(norm_sq(slope).sqrt()),
        }
    }

    pub fn lower_bound(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Quadratic { alpha, .. } => (*alpha >= 0.0).then_some(0.0),
            Self::Norm { .. } | Self::SmoothNorm { .. } => Some(0.0),
            Self::Linear { slope } => slope.iter().all(|&s| s == 0.0).then_some(0.0),
        }
    }

    /// Classical convexity modulus (`D²V ≥ Λ`), when constant.
    pub fn convexity_modulus(&self) -> Option<f64> {
        match self {
            Self::Constant(_) | Self::Linear { .. } => Some(0.0),
            Self::Quadratic { alpha, .. } => Some(*alpha),
            Self::Norm { .. } | Self::SmoothNorm { .. } => Some(0.0),
        }
    }
}

/// Interaction kernels `W(z)`, even in `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `k|z|²`.
    Quadratic { scale: f64 },
    /// `exp(−|z|²/(2w²))`.
    Gaussian { width: f64 },
}

impl Kernel {
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            Self::Quadratic { scale } => scale * norm_sq(z),
            Self::Gaussian { width } => (-norm_sq(z) / (2.0 * width * width)).exp(),
        }
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Self::Quadratic { scale } => z.iter().map(|v| 2.0 * scale * v).collect(),
            Self::Gaussian { width } => {
                let w = self.value(z) / (width * width);
                z.iter().map(|v| -w * v).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalKind {
    /// `∫ V dμ`.
    Potential(ScalarField),
    /// `½ ∬ W(x − y) dμ dμ`.
    Interaction(Kernel),
    /// `∫ |x|² dμ`.
    SecondMoment,
    /// `∫ ρ log ρ` (grid densities only).
    Entropy,
    /// `½ W2²(μ, anchor)`.
    HalfW2To(DiscreteMeasure),
}

/// A functional kind times a scale, with optional declared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    pub scale: f64,
    /// Declared geodesic modulus Λ.
    pub lambda: Option<f64>,
    /// Declared Lipschitz constant with respect to W2.
    pub lipschitz: Option<f64>,
    pub lower_bound: Option<f64>,
}

/// Either kind of measure a functional can be evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a> {
    Discrete(&'a DiscreteMeasure),
    Grid(&'a GridDensity),
}

impl MeasureRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Discrete(m) => m.dim(),
            Self::Grid(g) => g.dim(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Discrete(m) => m.second_moment(),
            Self::Grid(g) => g.second_moment(),
        }
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        match self {
            Self::Discrete(m) => m.find_atom(x, MERGE_TOL).is_some(),
            Self::Grid(g) => g.in_support(x),
        }
    }

    pub fn to_discrete(&self) -> DiscreteMeasure {
        match self {
            Self::Discrete(m) => (*m).clone(),
            Self::Grid(g) => g.atomize(),
        }
    }
}

/// Maximum number of grid nodes averaged when normalising flat derivatives.
pub const FLAT_SUPPORT_SAMPLE: usize = 256;

impl FunctionalSpec {
    fn of(kind: FunctionalKind) -> Self {
        Self { kind, scale: 1.0, lambda: None, lipschitz: None, lower_bound: None }
    }

    pub fn potential(v: ScalarField) -> Self {
        Self::of(FunctionalKind::Potential(v))
    }

    pub fn constant(c: f64) -> Self {
        Self::potential(ScalarField::Constant(c))
    }

    pub fn interaction(w: Kernel) -> Self {
        Self::of(FunctionalKind::Interaction(w))
    }

    pub fn second_moment() -> Self {
        Self::of(FunctionalKind::SecondMoment)
    }

    /// `½ ∫ |x|² dμ`.
    pub fn half_second_moment() -> Self {
        Self::second_moment().scaled(0.5)
    }

    pub fn entropy() -> Self {
        Self::of(FunctionalKind::Entropy)
    }

    pub fn half_w2_to(anchor: DiscreteMeasure) -> Self {
        Self::of(FunctionalKind::HalfW2To(anchor))
    }

    pub fn neg_half_w2_to(anchor: DiscreteMeasure) -> Self {
        Self::half_w2_to(anchor).scaled(-1.0)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self
    }

    pub fn with_lambda(mut self, l: f64) -> Self {
        self.lambda = Some(l);
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_lower_bound(mut self, b: f64) -> Self {
        self.lower_bound = Some(b);
        self
    }

    /// Geodesic modulus: the declared one, else the value known for the kind.
    ///
    /// Potentials and moments are Λ-convex with the stated Λ. `½W2²(·,ν)`
    /// is 1-concave, reported as `Λ = scale`.
    pub fn lambda_geo(&self) -> Option<f64> {
        self.lambda.or_else(|| match &self.kind {
            FunctionalKind::SecondMoment => Some(2.0 * self.scale),
            FunctionalKind::Potential(v) => v.convexity_modulus().map(|m| m * self.scale),
            FunctionalKind::HalfW2To(_) => Some(self.scale),
            FunctionalKind::Entropy => (self.scale >= 0.0).then_some(0.0),
            FunctionalKind::Interaction(_) => None,
        })
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.lipschitz.or_else(|| match &self.kind {
            FunctionalKind::Potential(v) => v.lipschitz().map(|l| l * self.scale.abs()),
            _ => None,
        })
    }

    pub fn lower_bound_value(&self) -> Option<f64> {
        self.lower_bound.or_else(|| {
            let base = match &self.kind {
                FunctionalKind::Potential(v) => v.lower_bound(),
                FunctionalKind::SecondMoment | FunctionalKind::HalfW2To(_) => Some(0.0),
                FunctionalKind::Interaction(Kernel::Gaussian { .. }) => Some(0.0),
                FunctionalKind::Interaction(Kernel::Quadratic { scale }) => (*scale >= 0.0).then_some(0.0),
                FunctionalKind::Entropy => None,
            }?;
            if self.scale >= 0.0 {
                Some(self.scale * base)
            } else if let FunctionalKind::Potential(ScalarField::Constant(c)) = &self.kind {
                Some(self.scale * c)
            } else {
                None
            }
        })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, FunctionalKind::Potential(_))
    }

    pub fn evaluate(&self, mu: &DiscreteMeasure) -> Result<f64> {
        let raw = match &self.kind {
            FunctionalKind::Potential(v) => mu.iter().map(|(x, w)| w * v.value(x)).sum(),
            FunctionalKind::SecondMoment => mu.second_moment(),
            FunctionalKind::Interaction(k) => {
                let mut s = 0.0;
                let mut z = vec![0.0; mu.dim()];
                for (x, a) in mu.iter() {
                    for (y, b) in mu.iter() {
                        for ((zk, xk), yk) in z.iter_mut().zip(x).zip(y) {
                            *zk = xk - yk;
                        }
                        s += a * b * k.value(&z);
                    }
                }
                0.5 * s
            }
            FunctionalKind::Entropy => {
                return Err(Error::UnsupportedFunctional("entropy is infinite on atomic measures".into()))
            }
            FunctionalKind::HalfW2To(anchor) => 0.5 * ot::w2(mu, anchor, OtMethod::Exact)?.distance.powi(2),
        };
        Ok(self.scale * raw)
    }

    pub fn evaluate_grid(&self, rho: &GridDensity) -> Result<f64> {
        let raw = match &self.kind {
            FunctionalKind::Potential(v) => rho.integrate(|x| v.value(x)),
            FunctionalKind::SecondMoment => rho.second_moment(),
            FunctionalKind::Entropy => rho.entropy(),
            _ => return self.evaluate(&rho.atomize()),
        };
        Ok(self.scale * raw)
    }

    pub fn evaluate_on(&self, mu: MeasureRef<'_>) -> Result<f64> {
        match mu {
            MeasureRef::Discrete(m) => self.evaluate(m),
            MeasureRef::Grid(g) => self.evaluate_grid(g),
        }
    }

    /// Gradient of `y ↦ F(Σ w_j δ_{y_j})` with respect to the atom
    /// positions, flattened like the point buffer.
    pub fn gradient(&self, mu: &DiscreteMeasure) -> Result<Vec<f64>> {
        let d = mu.dim();
        let mut g = vec![0.0; mu.points_flat().len()];
        match &self.kind {
            FunctionalKind::Potential(v) => {
                for (j, (x, w)) in mu.iter().enumerate() {
                    for (gk, vk) in g[j * d..(j + 1) * d].iter_mut().zip(v.gradient(x)) {
                        *gk = w * vk;
                    }
                }
            }
            FunctionalKind::SecondMoment => {
                for (j, (x, w)) in mu.iter().enumerate() {
                    for (gk, xk) in g[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *gk = 2.0 * w * xk;
                    }
                }
            }
            FunctionalKind::Interaction(k) => {
                let mut z = vec![0.0; d];
                for (j, (x, a)) in mu.iter().enumerate() {
                    for (y, b) in mu.iter() {
                        for ((zk, xk), yk) in z.iter_mut().zip(x).zip(y) {
                            *zk = xk - yk;
                        }
                        for (gk, dk) in g[j * d..(j + 1) * d].iter_mut().zip(k.gradient(&z)) {
                            *gk += a * b * dk;
                        }
                    }
                }
            }
            FunctionalKind::HalfW2To(anchor) => {
                // envelope: w_j (y_j − T(y_j)) with T the barycentric map;
                // atoms are matched by position to survive merging
                let plan = ot::w2(mu, anchor, OtMethod::Exact)?.plan;
                let proj = barycentric_projection(&plan).fibers();
                for (j, (x, w)) in mu.iter().enumerate() {
                    let t = proj.fiber_at(x).map(|f| f.point(0).to_vec()).unwrap_or_else(|| x.to_vec());
                    for (k, gk) in g[j * d..(j + 1) * d].iter_mut().enumerate() {
                        *gk = w * (x[k] - t[k]);
                    }
                }
            }
            FunctionalKind::Entropy => {
                return Err(Error::UnsupportedFunctional("entropy has no position gradient on atoms".into()))
            }
        }
        for v in &mut g {
            *v *= self.scale;
        }
        Ok(g)
    }

    /// Central finite differences of `F` in the atom positions.
    pub fn gradient_fd(&self, mu: &DiscreteMeasure, h: f64) -> Result<Vec<f64>> {
        let d = mu.dim();
        let mut pts = mu.points_flat().to_vec();
        let mut g = vec![0.0; pts.len()];
        for k in 0..pts.len() {
            let orig = pts[k];
            pts[k] = orig + h;
            let up = self.evaluate(&DiscreteMeasure::from_flat(d, pts.clone(), mu.weights().to_vec())?)?;
            pts[k] = orig - h;
            let down = self.evaluate(&DiscreteMeasure::from_flat(d, pts.clone(), mu.weights().to_vec())?)?;
            pts[k] = orig;
            g[k] = (up - down) / (2.0 * h);
        }
        Ok(g)
    }

    /// `∇_x D_μF(μ, x)` where a closed form exists.
    pub fn flat_gradient(&self, mu: MeasureRef<'_>, x: &[f64]) -> Option<Vec<f64>> {
        let raw = match &self.kind {
            FunctionalKind::Potential(v) => v.gradient(x),
            FunctionalKind::SecondMoment => x.iter().map(|v| 2.0 * v).collect(),
            FunctionalKind::Interaction(k) => {
                let m = mu.to_discrete();
                let mut g = vec![0.0; x.len()];
                for (y, w) in m.iter() {
                    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                    for (gk, dk) in g.iter_mut().zip(k.gradient(&z)) {
                        *gk += w * dk;
                    }
                }
                g
            }
            _ => return None,
        };
        Some(raw.into_iter().map(|v| self.scale * v).collect())
    }
}

/// Flat derivative `D_μF(μ, ·)` by Richardson-extrapolated mixture
/// quotients `(F((1−h)μ + hδ_x) − F(μ))/h`, shifted to zero mean over a
/// support sample of `μ`. The shift is computed once per evaluator.
pub struct FlatDerivative<'a> {
    f: &'a FunctionalSpec,
    mu: MeasureRef<'a>,
    base: DiscreteMeasure,
    f0: f64,
    h: f64,
    mean: f64,
}

impl<'a> FlatDerivative<'a> {
    pub fn new(f: &'a FunctionalSpec, mu: MeasureRef<'a>, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.1) {
            return Err(Error::InvalidParameter(format!("mixture step {h} outside (0, 0.1]")));
        }
        if matches!(f.kind, FunctionalKind::Entropy) {
            return Err(Error::UnsupportedFunctional("entropy is not defined on mixtures with atoms".into()));
        }
        let base = mu.to_discrete();
        let f0 = f.evaluate(&base)?;
        let mut out = Self { f, mu, base, f0, h, mean: 0.0 };
        let sample: Vec<(Vec<f64>, f64)> = match mu {
            MeasureRef::Discrete(m) => m.iter().map(|(y, w)| (y.to_vec(), w)).collect(),
            MeasureRef::Grid(g) => g.support_sample(FLAT_SUPPORT_SAMPLE),
        };
        let mut mean = 0.0;
        for (y, w) in &sample {
            mean += w * out.raw(y)?;
        }
        out.mean = mean;
        Ok(out)
    }

    fn quotient(&self, x: &[f64], h: f64) -> Result<f64> {
        let mixed = self.base.mixture(&DiscreteMeasure::dirac(x)?, h)?;
        Ok((self.f.evaluate(&mixed)? - self.f0) / h)
    }

    fn raw(&self, x: &[f64]) -> Result<f64> {
        Ok(2.0 * self.quotient(x, self.h / 2.0)? - self.quotient(x, self.h)?)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.mu.dim() {
            return Err(Error::DimensionMismatch { expected: self.mu.dim(), found: x.len() });
        }
        if !self.mu.in_support(x) {
            return Err(Error::OutsideSupport(format!("{x:?}")));
        }
        Ok(self.raw(x)? - self.mean)
    }
}

/// One-shot [`FlatDerivative`] evaluation.
pub fn flat_derivative_numeric(f: &FunctionalSpec, mu: MeasureRef<'_>, x: &[f64], h: f64) -> Result<f64> {
    if x.len() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: x.len() });
    }
    if !(h > 0.0 && h <= 0.1) {
        return Err(Error::InvalidParameter(format!("mixture step {h} outside (0, 0.1]")));
    }
    if !matches!(f.kind, FunctionalKind::Entropy) && !mu.in_support(x) {
        return Err(Error::OutsideSupport(format!("{x:?}")));
    }
    FlatDerivative::new(f, mu, h)?.eval(x)
}
