//! Fourier truncation on the torus for the Galerkin solver mode.
//!
//! `FourierProjector::new(grid, m)` realises the orthogonal projection of a
//! grid field onto the span of the discrete Fourier modes with integer
//! wavevector `|k|₂ ≤ m`. The projector is represented by an orthonormal
//! real basis (constant, cosines and sines sampled at cell centers), so
//! projection costs `O(K·n)` for `K` retained modes. When every discrete
//! mode is retained the projector short-circuits to the identity.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

#[derive(Debug, Clone)]
pub struct FourierProjector {
    basis: Vec<Vec<f64>>,
    identity: bool,
    max_mode: usize,
}

impl FourierProjector {
    pub fn new(grid: &SpatialGrid, m: usize) -> Result<Self> {
        if !grid.fully_periodic() {
            return Err(Error::Solver(
                "Fourier truncation requires a fully periodic grid".into(),
            ));
        }
        // All representable modes have |k_a| <= floor(N_a/2); if m covers the
        // largest possible |k| the truncation keeps everything.
        let mut max_sq = 0usize;
        for a in 0..grid.dim() {
            let half = grid.cells()[a] / 2;
            max_sq += half * half;
        }
        if m * m >= max_sq {
            return Ok(Self {
                basis: Vec::new(),
                identity: true,
                max_mode: m,
            });
        }

        let n = grid.n_cells();
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for k in enumerate_modes(grid, m) {
            let mut cos_vec = Vec::with_capacity(n);
            let mut sin_vec = Vec::with_capacity(n);
            for idx in 0..n {
                let x = grid.center(idx);
                let mut phase = 0.0;
                for a in 0..grid.dim() {
                    phase += 2.0 * std::f64::consts::PI * k[a] as f64 * x[a] / grid.extent()[a];
                }
                cos_vec.push(phase.cos());
                sin_vec.push(phase.sin());
            }
            candidates.push(cos_vec);
            if k.iter().any(|&ki| ki != 0) {
                candidates.push(sin_vec);
            }
        }

        // Gram-Schmidt with drop tolerance; cell-centered sampling makes a
        // few candidate vectors vanish (e.g. Nyquist cosines), which is fine.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for mut v in candidates {
            for b in &basis {
                let c = dot(&v, b);
                for i in 0..n {
                    v[i] -= c * b[i];
                }
            }
            // Second pass for numerical orthogonality.
            for b in &basis {
                let c = dot(&v, b);
                for i in 0..n {
                    v[i] -= c * b[i];
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-8 * (n as f64).sqrt() {
                for vi in &mut v {
                    *vi /= norm;
                }
                basis.push(v);
            }
        }
        let identity = basis.len() == n;
        Ok(Self {
            basis,
            identity,
            max_mode: m,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// Number of retained orthonormal basis vectors (0 when identity).
    pub fn retained(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Orthogonal projection of `f` onto the retained span.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        if self.identity {
            return f.to_vec();
        }
        let mut out = vec![0.0; f.len()];
        for b in &self.basis {
            let c = dot(f, b);
            for i in 0..f.len() {
                out[i] += c * b[i];
            }
        }
        out
    }

    /// In-place variant writing into `out`.
    pub fn project_into(&self, f: &[f64], out: &mut [f64]) {
        if self.identity {
            out.copy_from_slice(f);
            return;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for b in &self.basis {
            let c = dot(f, b);
            for i in 0..f.len() {
                out[i] += c * b[i];
            }
        }
    }
}

/// Integer wavevectors with `|k|₂ ≤ m`, one representative per ±k pair,
/// restricted to per-axis representable ranges.
fn enumerate_modes(grid: &SpatialGrid, m: usize) -> Vec<[i64; 3]> {
    let mut half = [0i64; 3];
    for a in 0..grid.dim() {
        half[a] = (grid.cells()[a] / 2) as i64;
    }
    let mi = m as i64;
    let mut out = Vec::new();
    for kx in -half[0].min(mi)..=half[0].min(mi) {
        for ky in -half[1].min(mi)..=half[1].min(mi) {
            for kz in -half[2].min(mi)..=half[2].min(mi) {
                let k = [kx, ky, kz];
                if kx * kx + ky * ky + kz * kz > mi * mi {
                    continue;
                }
                // Keep one representative of {k, -k}.
                let first_nonzero = k.iter().find(|&&v| v != 0).copied().unwrap_or(0);
                if first_nonzero < 0 {
                    continue;
                }
                out.push(k);
            }
        }
    }
    out
}

/// Dense Gaussian elimination with partial pivoting for the small systems
/// arising in the Galerkin relaxation solve.
pub fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::Solver("singular small system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for row in (col + 1)..n {
            let f = a[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for c2 in col..n {
                a[row][c2] -= f * a[col][c2];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c2 in (col + 1)..n {
            s -= a[col][c2] * x[c2];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}
