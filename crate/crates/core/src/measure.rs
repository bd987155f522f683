//! Discrete probability measures and couplings over `R^d`.
//!
//! Points are stored row-major in flat `Vec<f64>` buffers, `dim` coordinates
//! per atom. Couplings keep their pairs in input order; marginals and fibers
//! are derived by merging coordinates that agree within [`MERGE_TOL`].

use crate::error::{Error, Result};

/// Coordinates closer than this (per axis) are treated as the same atom.
pub const MERGE_TOL: f64 = 1e-12;

/// Accepted deviation of a weight vector's sum from 1 before renormalisation.
pub const MASS_TOL: f64 = 1e-9;

fn check_weights(weights: &[f64], what: &str) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidMeasure(format!("{what} has no atoms")));
    }
    let mut sum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidMeasure(format!("{what} weight {i} is {w}")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidMeasure(format!(
            "{what} weights sum to {sum}, expected 1"
        )));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

/// Groups rows of a flat coordinate buffer that coincide within `tol`.
///
/// Returns the group id of every row and, per group, the index of its first
/// row. Groups are numbered in order of first appearance.
pub(crate) fn group_rows(dim: usize, coords: &[f64], tol: f64) -> (Vec<usize>, Vec<usize>) {
    let n = coords.len().checked_div(dim).unwrap_or(0);
    let row = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        for (u, v) in row(a).iter().zip(row(b)) {
            match u.total_cmp(v) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        a.cmp(&b)
    });

    let mut raw_group = vec![usize::MAX; n];
    let mut raw_first: Vec<usize> = Vec::new();
    let mut current_rep: Option<usize> = None;
    for &i in &order {
        let same = current_rep.is_some_and(|r| {
            row(r)
                .iter()
                .zip(row(i))
                .all(|(a, b)| (a - b).abs() <= tol)
        });
        if !same {
            raw_first.push(i);
            current_rep = Some(i);
        }
        raw_group[i] = raw_first.len() - 1;
        let g = raw_group[i];
        if i < raw_first[g] {
            raw_first[g] = i;
        }
    }

    // renumber by first appearance
    let mut by_first: Vec<usize> = (0..raw_first.len()).collect();
    by_first.sort_by_key(|&g| raw_first[g]);
    let mut relabel = vec![0; raw_first.len()];
    for (new, &old) in by_first.iter().enumerate() {
        relabel[old] = new;
    }
    let groups = raw_group.iter().map(|&g| relabel[g]).collect();
    let firsts = by_first.iter().map(|&g| raw_first[g]).collect();
    (groups, firsts)
}

/// A finitely supported probability measure on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from a flat row-major point buffer.
    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates for {} atoms of dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite coordinate {x}")));
        }
        let weights = check_weights(&weights, "measure")?;
        Ok(Self { dim, points, weights })
    }

    pub fn new(points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        Self::from_flat(dim, points.concat(), weights)
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; points.len()])
    }

    pub fn dirac(x: &[f64]) -> Result<Self> {
        Self::from_flat(x.len(), x.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// `∫ |x|² dμ`.
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(x, w)| w * norm_sq(x)).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, w) in self.iter() {
            for (mk, xk) in m.iter_mut().zip(x) {
                *mk += w * xk;
            }
        }
        m
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: shift.len() });
        }
        let points = self
            .points
            .chunks_exact(self.dim)
            .flat_map(|x| x.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        Ok(Self { dim: self.dim, points, weights: self.weights.clone() })
    }

    /// Merges atoms closer than `tol` and drops zero-mass atoms.
    pub fn merged(&self, tol: f64) -> Self {
        let (groups, firsts) = group_rows(self.dim, &self.points, tol);
        let mut weights = vec![0.0; firsts.len()];
        for (g, w) in groups.iter().zip(&self.weights) {
            weights[*g] += w;
        }
        let mut points = Vec::with_capacity(firsts.len() * self.dim);
        let mut kept = Vec::with_capacity(firsts.len());
        for (g, &first) in firsts.iter().enumerate() {
            if weights[g] > 0.0 {
                points.extend_from_slice(self.point(first));
                kept.push(weights[g]);
            }
        }
        Self { dim: self.dim, points, weights: kept }
    }

    /// Convex combination `(1-h)·self + h·other`, atoms concatenated.
    pub fn mixture(&self, other: &Self, h: f64) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::InvalidParameter(format!("mixture weight {h} outside [0,1]")));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let weights = self
            .weights
            .iter()
            .map(|w| (1.0 - h) * w)
            .chain(other.weights.iter().map(|w| h * w))
            .collect();
        Ok(Self { dim: self.dim, points, weights })
    }

    /// Index of an atom that coincides with `x` within `tol`.
    pub fn find_atom(&self, x: &[f64], tol: f64) -> Option<usize> {
        (0..self.len()).find(|&i| {
            self.weights[i] > 0.0
                && self.point(i).iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    /// Same atoms and weights after merging, up to coordinate/weight tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let a = self.merged(tol);
        let b = other.merged(tol);
        if a.len() != b.len() {
            return false;
        }
        let mut used = vec![false; b.len()];
        for (x, w) in a.iter() {
            let hit = (0..b.len()).find(|&j| {
                !used[j]
                    && (b.weights[j] - w).abs() <= tol
                    && b.point(j).iter().zip(x).all(|(p, q)| (p - q).abs() <= tol)
            });
            match hit {
                Some(j) => used[j] = true,
                None => return false,
            }
        }
        true
    }
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// A probability measure on `R^d × R^d` with finitely many atoms.
///
/// Used for transport plans `γ ∈ Γ(μ,ν)` as well as for velocity plans, where
/// the second coordinate is read as a tangent vector attached to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
}

impl Coupling {
    pub fn from_flat(dim: usize, xs: Vec<f64>, ys: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCoupling("dimension must be positive".into()));
        }
        if xs.len() != dim * weights.len() || ys.len() != xs.len() {
            return Err(Error::InvalidCoupling(format!(
                "coordinate buffers of length {}/{} for {} pairs of dimension {dim}",
                xs.len(),
                ys.len(),
                weights.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoupling("non-finite coordinate".into()));
        }
        let weights = check_weights(&weights, "coupling")
            .map_err(|e| Error::InvalidCoupling(e.to_string()))?;
        Ok(Self { dim, xs, ys, weights })
    }

    pub fn new(pairs: &[(Vec<f64>, Vec<f64>)], weights: Vec<f64>) -> Result<Self> {
        let dim = pairs.first().map_or(0, |p| p.0.len());
        let mut xs = Vec::with_capacity(dim * pairs.len());
        let mut ys = Vec::with_capacity(dim * pairs.len());
        for (x, y) in pairs {
            if x.len() != dim || y.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.len().max(y.len()) });
            }
            xs.extend_from_slice(x);
            ys.extend_from_slice(y);
        }
        Self::from_flat(dim, xs, ys, weights)
    }

    /// `μ ⊗ ν`.
    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        if mu.dim != nu.dim {
            return Err(Error::DimensionMismatch { expected: mu.dim, found: nu.dim });
        }
        let n = mu.len() * nu.len();
        let mut xs = Vec::with_capacity(n * mu.dim);
        let mut ys = Vec::with_capacity(n * mu.dim);
        let mut weights = Vec::with_capacity(n);
        for (x, a) in mu.iter() {
            for (y, b) in nu.iter() {
                xs.extend_from_slice(x);
                ys.extend_from_slice(y);
                weights.push(a * b);
            }
        }
        Self::from_flat(mu.dim, xs, ys, weights)
    }

    /// `(Id × f)#μ`.
    pub fn from_map(mu: &DiscreteMeasure, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut ys = Vec::with_capacity(mu.points.len());
        for x in mu.points.chunks_exact(mu.dim) {
            let y = f(x);
            if y.len() != mu.dim {
                return Err(Error::DimensionMismatch { expected: mu.dim, found: y.len() });
            }
            ys.extend(y);
        }
        Self::from_flat(mu.dim, mu.points.clone(), ys, mu.weights.clone())
    }

    /// `(Id × Id)#μ`.
    pub fn identity(mu: &DiscreteMeasure) -> Self {
        Self { dim: mu.dim, xs: mu.points.clone(), ys: mu.points.clone(), weights: mu.weights.clone() }
    }

    /// The zero velocity plan `μ ⊗ δ_0`.
    pub fn zero_velocity(mu: &DiscreteMeasure) -> Self {
        Self {
            dim: mu.dim,
            xs: mu.points.clone(),
            ys: vec![0.0; mu.points.len()],
            weights: mu.weights.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64], f64)> + '_ {
        self.xs
            .chunks_exact(self.dim)
            .zip(self.ys.chunks_exact(self.dim))
            .zip(self.weights.iter().copied())
            .map(|((x, y), w)| (x, y, w))
    }

    fn marginal(&self, coords: &[f64]) -> DiscreteMeasure {
        let (groups, firsts) = group_rows(self.dim, coords, MERGE_TOL);
        let mut weights = vec![0.0; firsts.len()];
        for (g, w) in groups.iter().zip(&self.weights) {
            weights[*g] += w;
        }
        let points = firsts
            .iter()
            .flat_map(|&i| coords[i * self.dim..(i + 1) * self.dim].iter().copied())
            .collect();
        DiscreteMeasure { dim: self.dim, points, weights }
    }

    pub fn first_marginal(&self) -> DiscreteMeasure {
        self.marginal(&self.xs)
    }

    pub fn second_marginal(&self) -> DiscreteMeasure {
        self.marginal(&self.ys)
    }

    /// Disintegration with respect to the first marginal.
    pub fn fibers(&self) -> FiberFamily {
        let (groups, firsts) = group_rows(self.dim, &self.xs, MERGE_TOL);
        let mut base_w = vec![0.0; firsts.len()];
        for (g, w) in groups.iter().zip(&self.weights) {
            base_w[*g] += w;
        }
        let mut fib_pts: Vec<Vec<f64>> = vec![Vec::new(); firsts.len()];
        let mut fib_w: Vec<Vec<f64>> = vec![Vec::new(); firsts.len()];
        for (i, &g) in groups.iter().enumerate() {
            if base_w[g] > 0.0 {
                fib_pts[g].extend_from_slice(self.y(i));
                fib_w[g].push(self.weights[i] / base_w[g]);
            }
        }
        let mut base_pts = Vec::new();
        let mut base_weights = Vec::new();
        let mut fibers = Vec::new();
        for (g, &first) in firsts.iter().enumerate() {
            if base_w[g] <= 0.0 {
                continue;
            }
            base_pts.extend_from_slice(self.x(first));
            base_weights.push(base_w[g]);
            let s: f64 = fib_w[g].iter().sum();
            let w = fib_w[g].iter().map(|v| v / s).collect();
            fibers.push(DiscreteMeasure { dim: self.dim, points: std::mem::take(&mut fib_pts[g]), weights: w });
        }
        FiberFamily {
            base: DiscreteMeasure { dim: self.dim, points: base_pts, weights: base_weights },
            fibers,
        }
    }

    /// Applies `(x, y) ↦ (x, f(x, y))` to every pair.
    pub fn map_second(&self, f: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> Self {
        let ys = self.iter().flat_map(|(x, y, _)| f(x, y)).collect();
        Self { dim: self.dim, xs: self.xs.clone(), ys, weights: self.weights.clone() }
    }

    /// Swaps the two coordinates.
    pub fn transposed(&self) -> Self {
        Self { dim: self.dim, xs: self.ys.clone(), ys: self.xs.clone(), weights: self.weights.clone() }
    }
}

/// Disintegration `γ = γ_x(dy) μ(dx)` of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberFamily {
    pub base: DiscreteMeasure,
    pub fibers: Vec<DiscreteMeasure>,
}

impl FiberFamily {
    /// Reassembles the coupling `Σ_x μ(x) δ_x ⊗ γ_x`.
    pub fn recombine(&self) -> Result<Coupling> {
        let dim = self.base.dim;
        let (mut xs, mut ys, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for ((x, m), fiber) in self.base.iter().zip(&self.fibers) {
            for (y, w) in fiber.iter() {
                xs.extend_from_slice(x);
                ys.extend_from_slice(y);
                weights.push(m * w);
            }
        }
        Coupling::from_flat(dim, xs, ys, weights)
    }

    /// Fiber attached to the base atom at `x`, if any.
    pub fn fiber_at(&self, x: &[f64]) -> Option<&DiscreteMeasure> {
        self.base.find_atom(x, MERGE_TOL).map(|i| &self.fibers[i])
    }
}
