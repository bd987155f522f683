//! Densities sampled on regular 1-D and 2-D grids.
//!
//! Values are point samples at the nodes; integrals are Riemann sums with
//! the node as the cell center. Values below [`FLOOR_REL`] times the maximum
//! are left out of logarithmic and Fisher integrands.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measure::{norm_sq, DiscreteMeasure};

/// Relative density floor for `log ρ` and `|∇ρ|²/ρ`.
pub const FLOOR_REL: f64 = 1e-12;

/// Half-width of library Gaussians in standard deviations.
const GAUSSIAN_HALF_WIDTH: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    values: Vec<f64>,
}

impl GridDensity {
    /// Builds a grid density and normalises its Riemann mass to one.
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not supported (1 or 2)")));
        }
        if origin.len() != dim || spacing.len() != dim {
            return Err(Error::InvalidGrid("origin/spacing length differs from the dimension".into()));
        }
        if shape.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid(format!("need at least two nodes per axis, got {shape:?}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {spacing:?} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        let count: usize = shape.iter().product();
        if values.len() != count {
            return Err(Error::InvalidGrid(format!("{} values for {count} nodes", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidGrid(format!("density value {v}")));
        }
        let cell: f64 = spacing.iter().product();
        let mass: f64 = values.iter().sum::<f64>() * cell;
        if !(mass > 0.0) {
            return Err(Error::InvalidGrid("zero total mass".into()));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(Self { shape, origin, spacing, values })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let count: usize = shape.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut x = vec![0.0; shape.len()];
        for k in 0..count {
            node_into(&shape, &origin, &spacing, k, &mut x);
            values.push(f(&x));
        }
        Self::new(shape, origin, spacing, values)
    }

    /// Isotropic Gaussian `N(mean, σ²I)` on `n` nodes per axis covering ±6σ.
    pub fn gaussian(mean: &[f64], sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma {sigma} must be positive")));
        }
        let dim = mean.len();
        let h = 2.0 * GAUSSIAN_HALF_WIDTH * sigma / (n as f64 - 1.0);
        let origin: Vec<f64> = mean.iter().map(|m| m - GAUSSIAN_HALF_WIDTH * sigma).collect();
        let norm = (2.0 * PI * sigma * sigma).powf(-(dim as f64) / 2.0);
        Self::from_fn(vec![n; dim], origin, vec![h; dim], |x| {
            let r2: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
            norm * (-r2 / (2.0 * sigma * sigma)).exp()
        })
    }

    /// Uniform density on `[lo, hi]^d` sampled at `n` cell centers per axis.
    pub fn uniform(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / n as f64;
        Self::from_fn(vec![n; dim], vec![lo + h / 2.0; dim], vec![h; dim], |_| 1.0)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        node_into(&self.shape, &self.origin, &self.spacing, k, &mut x);
        x
    }

    pub fn floor(&self) -> f64 {
        FLOOR_REL * self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: shift.len() });
        }
        let mut out = self.clone();
        for (o, s) in out.origin.iter_mut().zip(shift) {
            *o += s;
        }
        Ok(out)
    }

    /// Cell centers with cell masses; cells below the floor are dropped.
    pub fn atomize(&self) -> DiscreteMeasure {
        let floor = self.floor();
        let cell = self.cell_volume();
        let mut pts = Vec::new();
        let mut w = Vec::new();
        let mut x = vec![0.0; self.dim()];
        for (k, &v) in self.values.iter().enumerate() {
            if v > floor {
                node_into(&self.shape, &self.origin, &self.spacing, k, &mut x);
                pts.extend_from_slice(&x);
                w.push(v * cell);
            }
        }
        let total: f64 = w.iter().sum();
        let w = w.into_iter().map(|v| v / total).collect();
        DiscreteMeasure::from_flat(self.dim(), pts, w).expect("positive-mass grid")
    }

    /// Riemann sum of `f·ρ`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut x = vec![0.0; self.dim()];
        let mut s = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > 0.0 {
                node_into(&self.shape, &self.origin, &self.spacing, k, &mut x);
                s += v * f(&x);
            }
        }
        s * self.cell_volume()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn second_moment(&self) -> f64 {
        self.integrate(norm_sq)
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.integrate(|x| x[a])).collect()
    }

    /// `∫ ρ log ρ`, with sub-floor cells contributing zero.
    pub fn entropy(&self) -> f64 {
        let floor = self.floor();
        self.values
            .iter()
            .filter(|&&v| v > floor)
            .map(|&v| v * v.ln())
            .sum::<f64>()
            * self.cell_volume()
    }

    /// `entropy + π·M2`, the relative entropy against `e^{−π|x|²}`.
    pub fn entropy_star(&self) -> f64 {
        self.entropy() + PI * self.second_moment()
    }

    /// Central-difference gradient of `ρ` at node `k`, one-sided on the boundary.
    pub fn gradient(&self, k: usize) -> Vec<f64> {
        let idx = self.unravel(k);
        let mut g = vec![0.0; self.dim()];
        for a in 0..self.dim() {
            let n = self.shape[a];
            let step = self.stride(a);
            let h = self.spacing[a];
            let i = idx[a];
            g[a] = if i == 0 {
                (self.values[k + step] - self.values[k]) / h
            } else if i + 1 == n {
                (self.values[k] - self.values[k - step]) / h
            } else {
                (self.values[k + step] - self.values[k - step]) / (2.0 * h)
            };
        }
        g
    }

    /// `∫ |∇ρ|²/ρ` over cells above the floor.
    pub fn fisher_information(&self) -> Result<f64> {
        let floor = self.floor();
        let mut total = 0.0;
        let mut counted = 0usize;
        for (k, &v) in self.values.iter().enumerate() {
            if v > floor {
                total += norm_sq(&self.gradient(k)) / v;
                counted += 1;
            }
        }
        if counted == 0 {
            return Err(Error::DegenerateDensity("no cell above the density floor".into()));
        }
        Ok(total * self.cell_volume())
    }

    /// Whether `x` lies inside the grid extent at a cell above the floor.
    pub fn in_support(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let mut k = 0;
        for a in 0..self.dim() {
            let r = (x[a] - self.origin[a]) / self.spacing[a];
            let n = self.shape[a];
            if r < -0.5 || r > n as f64 - 0.5 {
                return false;
            }
            let i = (r.round().max(0.0) as usize).min(n - 1);
            k += i * self.stride(a);
        }
        self.values[k] > self.floor()
    }

    /// Nodes used as the support sample for normalising flat derivatives:
    /// every above-floor node if there are at most `max` of them, otherwise a
    /// regular stride through them.
    pub fn support_sample(&self, max: usize) -> Vec<(Vec<f64>, f64)> {
        let floor = self.floor();
        let live: Vec<usize> = (0..self.len()).filter(|&k| self.values[k] > floor).collect();
        let stride = live.len().div_ceil(max.max(1)).max(1);
        let picked: Vec<usize> = live.iter().copied().step_by(stride).collect();
        let total: f64 = picked.iter().map(|&k| self.values[k]).sum();
        picked.into_iter().map(|k| (self.node(k), self.values[k] / total)).collect()
    }

    fn stride(&self, axis: usize) -> usize {
        // row-major: last axis fastest
        self.shape[axis + 1..].iter().product()
    }

    fn unravel(&self, k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        let mut rem = k;
        for a in (0..self.dim()).rev() {
            idx[a] = rem % self.shape[a];
            rem /= self.shape[a];
        }
        idx
    }
}

fn node_into(shape: &[usize], origin: &[f64], spacing: &[f64], k: usize, out: &mut [f64]) {
    let mut rem = k;
    for a in (0..shape.len()).rev() {
        let i = rem % shape[a];
        rem /= shape[a];
        out[a] = origin[a] + i as f64 * spacing[a];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_closed_forms_in_one_dimension() {
        for sigma in [0.5, 1.0, 2.0] {
            let g = GridDensity::gaussian(&[0.3], sigma, 512).unwrap();
            let h = -0.5 * (2.0 * PI * sigma * sigma).ln() - 0.5;
            assert!((g.entropy() - h).abs() < 0.01 * h.abs(), "{} vs {h}", g.entropy());
            let fisher = g.fisher_information().unwrap();
            assert!((fisher - 1.0 / (sigma * sigma)).abs() < 0.02 / (sigma * sigma));
            assert!((g.second_moment() - (0.09 + sigma * sigma)).abs() < 0.01 * (0.09 + sigma * sigma));
        }
    }

    #[test]
    fn uniform_unit_interval() {
        let u = GridDensity::uniform(1, 0.0, 1.0, 400).unwrap();
        assert!(u.entropy().abs() < 1e-12);
        assert!((u.second_moment() - 1.0 / 3.0).abs() < 1e-3 / 3.0);
        assert!((u.entropy_star() - PI / 3.0).abs() < 0.01 * PI / 3.0);
    }

    #[test]
    fn translation_invariance() {
        let g = GridDensity::gaussian(&[0.0, 0.0], 1.0, 64).unwrap();
        let t = g.translated(&[1.5, -0.25]).unwrap();
        assert!((g.entropy() - t.entropy()).abs() < 1e-9);
        assert!((g.fisher_information().unwrap() - t.fisher_information().unwrap()).abs() < 1e-6);
    }

    #[test]
    fn atomize_keeps_mass_and_mean() {
        let g = GridDensity::gaussian(&[1.0, -2.0], 0.7, 40).unwrap();
        let a = g.atomize();
        let s: f64 = a.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let m = a.mean();
        assert!((m[0] - 1.0).abs() < 1e-9 && (m[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn support_test_uses_floor_and_extent() {
        let g = GridDensity::gaussian(&[0.0], 1.0, 101).unwrap();
        assert!(g.in_support(&[0.0]));
        assert!(g.in_support(&[5.9]));
        assert!(!g.in_support(&[7.0]));
        let step = GridDensity::new(vec![4], vec![0.0], vec![1.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(!step.in_support(&[0.1]));
        assert!(step.in_support(&[1.2]));
    }

    #[test]
    fn rejects_malformed_grids() {
        assert!(GridDensity::new(vec![3], vec![0.0], vec![1.0], vec![1.0, -1.0, 1.0]).is_err());
        assert!(GridDensity::new(vec![3], vec![0.0], vec![0.0], vec![1.0; 3]).is_err());
        assert!(GridDensity::new(vec![2, 2, 2], vec![0.0; 3], vec![1.0; 3], vec![1.0; 8]).is_err());
        assert!(GridDensity::new(vec![3], vec![0.0], vec![1.0], vec![0.0; 3]).is_err());
    }
}
