//! Shared discrete Laplacian with ghost-cell wall handling, plus a
//! matrix-free conjugate-gradient solver.
//!
//! The stencil is the standard second-order `2·dim+1`-point Laplacian on the
//! cell-centered grid. Walls are realised through ghost values that are
//! affine in the adjacent interior value,
//!
//! ```text
//! ghost = coeff · T_in + constant,
//! ```
//!
//! with `coeff`/`constant` chosen per regime:
//!
//! * Dirichlet (face value `g`): `ghost = 2g − T_in`.
//! * Robin (`κ n·∇T = g − T_face`, face-centered): solving
//!   `κ (ghost − T_in)/Δx = g − (ghost + T_in)/2` for the ghost gives
//!   `coeff = (κ/Δx − 1/2)/(κ/Δx + 1/2)` and `constant = g/(κ/Δx + 1/2)`.
//!
//! Both kinds only modify the diagonal of the operator, so `I − dt Δ_h`
//! stays symmetric positive definite and CG applies. The kinetic diffusion
//! step and the limit solver build on exactly this module so that error
//! comparisons between them are not polluted by differing spatial operators.

use crate::error::{Error, Result};
use crate::grid::{Side, SpatialGrid};

/// Wall treatment for one solve.
#[derive(Debug, Clone, Copy)]
pub enum WallRule {
    /// `ghost = 2g − T_in` (face value pinned to `g`).
    Dirichlet,
    /// `κ n·∇T = g − T_face` with face-centred `T_face`.
    Robin { kappa: f64 },
}

/// Precomputed ghost algebra: a diagonal adjustment plus an affine constant
/// per cell, both already divided by the squared spacing of their axis.
#[derive(Debug, Clone)]
pub struct GhostStencil {
    diag: Vec<f64>,
    constant: Vec<f64>,
}

impl GhostStencil {
    /// No walls (torus): the stencil is empty.
    pub fn periodic(grid: &SpatialGrid) -> Self {
        Self {
            diag: vec![0.0; grid.n_cells()],
            constant: vec![0.0; grid.n_cells()],
        }
    }

    /// Builds the ghost algebra for every non-periodic face.
    ///
    /// `face_value` supplies the wall datum `g` at a face center (the wall
    /// temperature for the kinetic solver, `v(T_b)` for the limit solver).
    pub fn walls(
        grid: &SpatialGrid,
        rule: WallRule,
        mut face_value: impl FnMut(usize, Side, [f64; 3]) -> f64,
    ) -> Self {
        let mut diag = vec![0.0; grid.n_cells()];
        let mut constant = vec![0.0; grid.n_cells()];
        for (axis, side) in grid.wall_faces() {
            let dx = grid.dx()[axis];
            let inv2 = 1.0 / (dx * dx);
            let (coeff, scale) = match rule {
                WallRule::Dirichlet => (-1.0, 2.0),
                WallRule::Robin { kappa } => {
                    let k = kappa / dx;
                    ((k - 0.5) / (k + 0.5), 1.0 / (k + 0.5))
                }
            };
            for cell in grid.face_cells(axis, side) {
                let x = grid.face_center(cell, axis, side);
                let g = face_value(axis, side, x);
                diag[cell] += coeff * inv2;
                constant[cell] += scale * g * inv2;
            }
        }
        Self { diag, constant }
    }

    pub fn constant(&self) -> &[f64] {
        &self.constant
    }

    /// Ghost value next to `cell` across the wall `(axis, side)` for the
    /// interior value `t_in`, reconstructed from the stored algebra.
    pub fn ghost_value(&self, grid: &SpatialGrid, cell: usize, axis: usize, t_in: f64) -> f64 {
        // diag/constant were accumulated per face with the 1/dx² factor; for
        // a cell touching a single wall along `axis` this inverts exactly.
        let dx2 = grid.dx()[axis] * grid.dx()[axis];
        self.diag[cell] * dx2 * t_in + self.constant[cell] * dx2
    }
}

/// Applies the discrete Laplacian with the given ghost stencil.
///
/// With `homogeneous` set, the affine constants are dropped (the linear part
/// used inside CG); the full affine operator is `apply(...) = apply_hom(...)
/// + ghost.constant()`.
pub fn apply_laplacian(
    grid: &SpatialGrid,
    f: &[f64],
    ghost: &GhostStencil,
    homogeneous: bool,
) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    let dx = grid.dx();
    for idx in 0..grid.n_cells() {
        let mut acc = 0.0;
        for a in 0..grid.dim() {
            let inv2 = 1.0 / (dx[a] * dx[a]);
            let center = f[idx];
            let lo = grid.neighbor(idx, a, -1);
            let hi = grid.neighbor(idx, a, 1);
            let mut local = -2.0 * center;
            if let Some(n) = lo {
                local += f[n];
            }
            if let Some(n) = hi {
                local += f[n];
            }
            acc += local * inv2;
        }
        acc += ghost.diag[idx] * f[idx];
        if !homogeneous {
            acc += ghost.constant[idx];
        }
        out[idx] = acc;
    }
    out
}

/// Matrix-free conjugate gradients for SPD systems.
///
/// Terminates when `‖r‖₂ ≤ rel_tol · max(‖b‖₂, tiny)`; reductions run in a
/// fixed sequential order so results are bit-reproducible.
pub fn conjugate_gradient(
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Vec<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = x0;
    let ax = apply_a(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let target = rel_tol * b_norm;
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok((x, 0));
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        let ap = apply_a(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::LinearSolver(format!(
                "CG hit non-positive curvature {pap:.3e} at iteration {it}"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok((x, it));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver(format!(
        "CG did not reach {rel_tol:e} in {max_iter} iterations (residual {:.3e})",
        rr.sqrt() / b_norm
    )))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}
