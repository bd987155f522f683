//! Log-domain Sinkhorn iterations with a geometric regularisation schedule.

use crate::error::{Error, Result};

pub const MAX_ITER: usize = 10_000;
pub const TOL: f64 = 1e-9;

pub(crate) struct Entropic {
    /// Row-major plan over the input index set.
    pub plan: Vec<f64>,
    pub iterations: usize,
    pub violation: f64,
    pub dual_gap: f64,
}

fn log_sum_exp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vals.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Solves `min <P,C> + reg·KL(P | a⊗b)` over couplings of `a` and `b`.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64], reg: f64) -> Result<Entropic> {
    if !(reg > 0.0) || !reg.is_finite() {
        return Err(Error::InvalidParameter(format!("entropic regularisation {reg} must be positive")));
    }
    let n_full = a.len();
    let m_full = b.len();
    let rows: Vec<usize> = (0..n_full).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m_full).filter(|&j| b[j] > 0.0).collect();
    let n = rows.len();
    let m = cols.len();
    let la: Vec<f64> = rows.iter().map(|&i| a[i].ln()).collect();
    let lb: Vec<f64> = cols.iter().map(|&j| b[j].ln()).collect();
    let c: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * m_full + j]))
        .collect();

    let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (c_max - c_min).max(reg);

    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut iterations = 0;
    let mut violation = f64::INFINITY;

    let mut stage_reg = spread;
    loop {
        let last = stage_reg <= reg;
        let r = if last { reg } else { stage_reg };
        let stage_tol = if last { TOL } else { 1e-6 };
        let stage_cap = if last { MAX_ITER } else { 200 };
        let mut it = 0;
        while it < stage_cap && iterations < MAX_ITER {
            for i in 0..n {
                let row = &c[i * m..(i + 1) * m];
                f[i] = -r * log_sum_exp((0..m).map(|j| lb[j] + (g[j] - row[j]) / r));
            }
            for j in 0..m {
                g[j] = -r * log_sum_exp((0..n).map(|i| la[i] + (f[i] - c[i * m + j]) / r));
            }
            it += 1;
            iterations += 1;
            // columns are exact after the g-update; check rows
            violation = 0.0;
            for i in 0..n {
                let row = &c[i * m..(i + 1) * m];
                let s: f64 = (0..m).map(|j| (lb[j] + (f[i] + g[j] - row[j]) / r).exp()).sum();
                violation += (a[rows[i]] * s - a[rows[i]]).abs();
            }
            if violation < stage_tol {
                break;
            }
        }
        if last {
            break;
        }
        if iterations >= MAX_ITER {
            break;
        }
        stage_reg = (stage_reg * 0.5).max(reg);
    }
    if !(violation < TOL) {
        return Err(Error::NonConvergence { iterations, violation });
    }

    let mut plan = vec![0.0; n_full * m_full];
    let mut linear = 0.0;
    let mut kl = 0.0;
    let mut total = 0.0;
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            let z = (f[ii] + g[jj] - c[ii * m + jj]) / reg;
            let p = a[i] * b[j] * z.exp();
            plan[i * m_full + j] = p;
            linear += p * c[ii * m + jj];
            if p > 0.0 {
                kl += p * z;
            }
            total += p;
        }
    }
    let kl = kl - total + 1.0;
    let primal = linear + reg * kl;
    let dual = rows.iter().enumerate().map(|(ii, &i)| f[ii] * a[i]).sum::<f64>()
        + cols.iter().enumerate().map(|(jj, &j)| g[jj] * b[j]).sum::<f64>()
        - reg * (total - 1.0);
    Ok(Entropic { plan, iterations, violation, dual_gap: (primal - dual).abs() })
}
