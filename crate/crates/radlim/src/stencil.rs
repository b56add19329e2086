//! Second-order finite-difference stencils for the diagnostics layer.
//!
//! Spatial derivatives are central in the interior; on walled axes the
//! boundary ring uses one-sided second-order formulas, so every field
//! remains defined on the full domain. Norm routines accept an interior
//! ring width so boundary-polluted cells can be excluded separately.
//! Time derivatives act on uniformly spaced field histories with the same
//! central/one-sided policy.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// First derivative along `axis`.
pub fn grad_axis(grid: &SpatialGrid, f: &[f64], axis: usize) -> Result<Vec<f64>> {
    let n = grid.cells()[axis];
    if axis >= 3 || (axis < grid.dim() && !grid.periodic()[axis] && n < 3) {
        return Err(Error::Diagnostics(format!(
            "axis {axis} too coarse for one-sided gradient"
        )));
    }
    let h = grid.dx()[axis];
    let mut out = vec![0.0; f.len()];
    for idx in 0..grid.n_cells() {
        let lo = grid.neighbor(idx, axis, -1);
        let hi = grid.neighbor(idx, axis, 1);
        out[idx] = match (lo, hi) {
            (Some(l), Some(r)) => (f[r] - f[l]) / (2.0 * h),
            (None, Some(_)) => {
                let f1 = f[grid.neighbor(idx, axis, 1).unwrap()];
                let f2 = f[grid.neighbor(idx, axis, 2).unwrap()];
                (-3.0 * f[idx] + 4.0 * f1 - f2) / (2.0 * h)
            }
            (Some(_), None) => {
                let f1 = f[grid.neighbor(idx, axis, -1).unwrap()];
                let f2 = f[grid.neighbor(idx, axis, -2).unwrap()];
                (3.0 * f[idx] - 4.0 * f1 + f2) / (2.0 * h)
            }
            (None, None) => 0.0,
        };
    }
    Ok(out)
}

/// Second derivative along `axis`.
pub fn second_axis(grid: &SpatialGrid, f: &[f64], axis: usize) -> Result<Vec<f64>> {
    let n = grid.cells()[axis];
    if axis < grid.dim() && !grid.periodic()[axis] && n < 4 {
        return Err(Error::Diagnostics(format!(
            "axis {axis} too coarse for one-sided second derivative"
        )));
    }
    let h2 = grid.dx()[axis] * grid.dx()[axis];
    let mut out = vec![0.0; f.len()];
    for idx in 0..grid.n_cells() {
        let lo = grid.neighbor(idx, axis, -1);
        let hi = grid.neighbor(idx, axis, 1);
        out[idx] = match (lo, hi) {
            (Some(l), Some(r)) => (f[l] - 2.0 * f[idx] + f[r]) / h2,
            (None, Some(_)) => {
                let f1 = f[grid.neighbor(idx, axis, 1).unwrap()];
                let f2 = f[grid.neighbor(idx, axis, 2).unwrap()];
                let f3 = f[grid.neighbor(idx, axis, 3).unwrap()];
                (2.0 * f[idx] - 5.0 * f1 + 4.0 * f2 - f3) / h2
            }
            (Some(_), None) => {
                let f1 = f[grid.neighbor(idx, axis, -1).unwrap()];
                let f2 = f[grid.neighbor(idx, axis, -2).unwrap()];
                let f3 = f[grid.neighbor(idx, axis, -3).unwrap()];
                (2.0 * f[idx] - 5.0 * f1 + 4.0 * f2 - f3) / h2
            }
            (None, None) => 0.0,
        };
    }
    Ok(out)
}

/// Mixed second derivative `∂a ∂b` (composition of first derivatives).
pub fn mixed_second(grid: &SpatialGrid, f: &[f64], a: usize, b: usize) -> Result<Vec<f64>> {
    if a == b {
        return second_axis(grid, f, a);
    }
    let ga = grad_axis(grid, f, a)?;
    grad_axis(grid, &ga, b)
}

/// All active-axis first derivatives.
pub fn gradient(grid: &SpatialGrid, f: &[f64]) -> Result<Vec<Vec<f64>>> {
    (0..grid.dim()).map(|a| grad_axis(grid, f, a)).collect()
}

/// Hessian entries for active axes, `hess[a][b]` with `b ≤ a` filled and
/// mirrored.
pub fn hessian(grid: &SpatialGrid, f: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = grid.dim();
    let mut h: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); d]; d];
    for a in 0..d {
        for b in 0..=a {
            let e = mixed_second(grid, f, a, b)?;
            h[a][b] = e.clone();
            if a != b {
                h[b][a] = e;
            }
        }
    }
    Ok(h)
}

/// Uniformly spaced history of a scalar field, oldest first.
#[derive(Debug, Clone)]
pub struct FieldHistory {
    times: Vec<f64>,
    fields: Vec<Vec<f64>>,
    dt: f64,
}

impl FieldHistory {
    pub fn new(times: Vec<f64>, fields: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != fields.len() || times.len() < 2 {
            return Err(Error::Diagnostics(
                "field history needs two or more aligned levels".into(),
            ));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::Diagnostics("history times must increase".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1e-12) {
                return Err(Error::Diagnostics(
                    "field history must be uniformly spaced".into(),
                ));
            }
        }
        let n = fields[0].len();
        if fields.iter().any(|f| f.len() != n) {
            return Err(Error::Diagnostics("history fields differ in length".into()));
        }
        Ok(Self { times, fields, dt })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn field(&self, idx: usize) -> &[f64] {
        &self.fields[idx]
    }

    /// Index of the level closest to `t`; errors if no level is within a
    /// tenth of the spacing.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let pos = (t - self.times[0]) / self.dt;
        let idx = pos.round() as i64;
        if idx < 0
            || idx as usize >= self.len()
            || (self.times[idx as usize] - t).abs() > 0.1 * self.dt
        {
            return Err(Error::Diagnostics(format!(
                "history has no level near t = {t:.6e}"
            )));
        }
        Ok(idx as usize)
    }

    /// Applies `f` pointwise to every level.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            times: self.times.clone(),
            fields: self
                .fields
                .iter()
                .map(|lvl| lvl.iter().map(|&v| f(v)).collect())
                .collect(),
            dt: self.dt,
        }
    }

    /// Time derivative at level `idx`: central in the interior, one-sided
    /// second-order at the endpoints.
    pub fn d_dt(&self, idx: usize) -> Result<Vec<f64>> {
        if self.len() < 3 {
            return Err(Error::Diagnostics(
                "time derivative needs at least 3 history levels".into(),
            ));
        }
        let n = self.fields[0].len();
        let h = self.dt;
        let get = |k: usize| &self.fields[k];
        let out = if idx == 0 {
            let (f0, f1, f2) = (get(0), get(1), get(2));
            (0..n)
                .map(|i| (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * h))
                .collect()
        } else if idx + 1 == self.len() {
            let (f0, f1, f2) = (get(idx), get(idx - 1), get(idx - 2));
            (0..n)
                .map(|i| (3.0 * f0[i] - 4.0 * f1[i] + f2[i]) / (2.0 * h))
                .collect()
        } else {
            let (fm, fp) = (get(idx - 1), get(idx + 1));
            (0..n).map(|i| (fp[i] - fm[i]) / (2.0 * h)).collect()
        };
        Ok(out)
    }

    /// Second time derivative at level `idx` (central; 4-point one-sided at
    /// the endpoints).
    pub fn d2_dt2(&self, idx: usize) -> Result<Vec<f64>> {
        if self.len() < 4 {
            return Err(Error::Diagnostics(
                "second time derivative needs at least 4 history levels".into(),
            ));
        }
        let n = self.fields[0].len();
        let h2 = self.dt * self.dt;
        let get = |k: usize| &self.fields[k];
        let out = if idx == 0 {
            let (f0, f1, f2, f3) = (get(0), get(1), get(2), get(3));
            (0..n)
                .map(|i| (2.0 * f0[i] - 5.0 * f1[i] + 4.0 * f2[i] - f3[i]) / h2)
                .collect()
        } else if idx + 1 == self.len() {
            let (f0, f1, f2, f3) = (get(idx), get(idx - 1), get(idx - 2), get(idx - 3));
            (0..n)
                .map(|i| (2.0 * f0[i] - 5.0 * f1[i] + 4.0 * f2[i] - f3[i]) / h2)
                .collect()
        } else {
            let (fm, f0, fp) = (get(idx - 1), get(idx), get(idx + 1));
            (0..n)
                .map(|i| (fm[i] - 2.0 * f0[i] + fp[i]) / h2)
                .collect()
        };
        Ok(out)
    }
}
