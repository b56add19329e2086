//! Time integration of the scaled coupled system
//!
//! ```text
//! ∂t T = ΔT + (1/ε²) ∫ (ψ − T⁴) dβ,
//! ∂t ψ + (1/ε) β·∇ψ = −(1/ε²)(ψ − T⁴),
//! ```
//!
//! by first-order Lie splitting: explicit upwind transport, implicit
//! (backward-Euler) diffusion, implicit pointwise relaxation. The stiff
//! `1/ε²` relaxation is reduced per cell to one scalar root-find: eliminating
//! the ordinates from the backward-Euler system leaves
//!
//! ```text
//! T' + 4π μ T'⁴ = Tⁿ + μ ⟨ψⁿ⟩,   μ = λ/(1+λ),   λ = dt/ε²,
//! ψ'_q = (ψⁿ_q + λ T'⁴) / (1 + λ),
//! ```
//!
//! which conserves `T + ⟨ψ⟩` per cell up to the root-find residual for any
//! `dt` and `ε`. Transport is explicit with `dt ∝ ε·Δx`; walls impose the
//! reflecting/absorbing mixed condition through ghost ordinate values.

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::fields::{IntensityField, KineticState, TemperatureField};
use crate::grid::{Side, SpatialGrid};
use crate::laplacian::{apply_laplacian, conjugate_gradient, GhostStencil, WallRule};
use crate::params::{BcMode, Params};
use crate::quadrature::{AngularQuadrature, ReflectionMap};
use crate::spectral::{solve_small, FourierProjector};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Transport CFL number in (0, 1].
    pub cfl: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub dt_override: Option<f64>,
    /// Fourier truncation index for [`KineticSolver::galerkin_advance`].
    pub galerkin_modes: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            dt_override: None,
            galerkin_modes: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Params(format!(
                "cfl must lie in (0,1], got {}",
                self.cfl
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Params(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        Ok(())
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    pub dt_used: f64,
    pub newton_iters_max: usize,
    pub clamped_cells: usize,
}

pub struct KineticSolver {
    grid: SpatialGrid,
    quad: AngularQuadrature,
    params: Params,
    config: SolverConfig,
    boundary: BoundaryData,
    reflections: Vec<Option<ReflectionMap>>,
}

impl KineticSolver {
    pub fn new(
        grid: SpatialGrid,
        quad: AngularQuadrature,
        params: Params,
        config: SolverConfig,
        boundary: BoundaryData,
    ) -> Result<Self> {
        params.validate()?;
        params.check_grid(&grid)?;
        config.validate()?;
        let mut reflections = vec![None, None, None];
        for a in 0..grid.dim() {
            if !grid.periodic()[a] {
                reflections[a] = Some(ReflectionMap::new(&quad, a)?);
            }
        }
        Ok(Self {
            grid,
            quad,
            params,
            config,
            boundary,
            reflections,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn quad(&self) -> &AngularQuadrature {
        &self.quad
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    /// Stable step size: the transport CFL bound `cfl · ε · Δx_min` (axis
    /// projections of unit directions never exceed one) capped by the
    /// explicit diffusion margin `Δx_min²/(2·dim)`, which is kept as a
    /// safety bound even though diffusion is solved implicitly.
    ///
    /// In more than one dimension the per-ordinate convex-combination
    /// condition sums the axis Courant numbers, so keep `cfl ≤ 1/√dim`
    /// when the transport term is the binding one; the transport step
    /// checks the exact condition and refuses to run on violation.
    pub fn stable_dt(&self) -> f64 {
        if let Some(dt) = self.config.dt_override {
            return dt;
        }
        let dxm = self.grid.min_dx();
        let transport = self.config.cfl * self.params.epsilon * dxm;
        let diffusion_cap = dxm * dxm / (2.0 * self.grid.dim() as f64);
        transport.min(diffusion_cap)
    }

    /// Ghost intensity values on a wall face for incoming ordinates.
    ///
    /// For each boundary cell of the face and each ordinate with `n·β < 0`
    /// the ghost is `α ψ_b + (1−α) ψ(x, β′)` where `β′` is the reflected
    /// (outgoing) ordinate of the same cell. Entries for outgoing ordinates
    /// are unused and left zero. Layout: `[face_pos * n_ord + q]`.
    pub fn apply_psi_boundary(
        &self,
        state: &KineticState,
        t: f64,
        axis: usize,
        side: Side,
    ) -> Result<Vec<f64>> {
        if axis >= self.grid.dim() || self.grid.periodic()[axis] {
            return Err(Error::Boundary(format!(
                "axis {axis} has no wall faces"
            )));
        }
        let map = self.reflections[axis]
            .as_ref()
            .expect("reflection map exists for walled axis");
        let n_ord = self.quad.len();
        let normal = side.normal(axis);
        let alpha = self.params.alpha;
        let cells = self.grid.face_cells(axis, side);
        let mut ghost = vec![0.0; cells.len() * n_ord];
        for (pos, &cell) in cells.iter().enumerate() {
            let x_face = self.grid.face_center(cell, axis, side);
            for q in 0..n_ord {
                let beta = self.quad.node(q);
                let ndb = normal[0] * beta[0] + normal[1] * beta[1] + normal[2] * beta[2];
                if ndb < 0.0 {
                    let reflected = state.intensity.at(cell, map.apply(q));
                    let psib = self.boundary.psib(t, x_face, beta);
                    ghost[pos * n_ord + q] = alpha * psib + (1.0 - alpha) * reflected;
                }
            }
        }
        Ok(ghost)
    }

    /// One explicit upwind transport sub-step; returns the updated intensity.
    ///
    /// Refuses to run (hard error, never silent) if any ordinate violates the
    /// convex-combination CFL condition `Σ_a |β_a| dt / (ε Δx_a) ≤ 1`.
    pub fn step_transport(&self, state: &KineticState, dt: f64) -> Result<IntensityField> {
        let eps = self.params.epsilon;
        let dx = self.grid.dx();
        let dim = self.grid.dim();
        let n_ord = self.quad.len();

        for q in 0..n_ord {
            let beta = self.quad.node(q);
            let mut nu = 0.0;
            for a in 0..dim {
                nu += beta[a].abs() * dt / (eps * dx[a]);
            }
            if nu > 1.0 + 1e-9 {
                return Err(Error::Cfl(format!(
                    "ordinate {q} has CFL number {nu:.6} > 1 at dt={dt:.3e}"
                )));
            }
        }

        // Wall ghosts from the pre-step state.
        let mut ghosts: Vec<((usize, Side), Vec<f64>)> = Vec::new();
        for (axis, side) in self.grid.wall_faces() {
            ghosts.push((
                (axis, side),
                self.apply_psi_boundary(state, state.time, axis, side)?,
            ));
        }
        let ghost_for = |axis: usize, side: Side| -> &[f64] {
            ghosts
                .iter()
                .find(|((a, s), _)| *a == axis && *s == side)
                .map(|(_, g)| g.as_slice())
                .expect("ghost prepared for every wall face")
        };

        let psi = &state.intensity;
        let mut out = psi.values().to_vec();
        let n_cells = self.grid.n_cells();
        for q in 0..n_ord {
            let beta = self.quad.node(q);
            for cell in 0..n_cells {
                let here = psi.at(cell, q);
                let mut upd = here;
                for a in 0..dim {
                    let v = beta[a] / eps;
                    if v == 0.0 {
                        // Exactly tangential ordinate: no transport on this axis.
                        continue;
                    }
                    let courant = v * dt / dx[a];
                    if v > 0.0 {
                        let upwind = match self.grid.neighbor(cell, a, -1) {
                            Some(n) => psi.at(n, q),
                            None => {
                                let pos = face_pos(&self.grid, cell, a);
                                ghost_for(a, Side::Lower)[pos * n_ord + q]
                            }
                        };
                        upd -= courant * (here - upwind);
                    } else {
                        let upwind = match self.grid.neighbor(cell, a, 1) {
                            Some(n) => psi.at(n, q),
                            None => {
                                let pos = face_pos(&self.grid, cell, a);
                                ghost_for(a, Side::Upper)[pos * n_ord + q]
                            }
                        };
                        upd -= courant * (upwind - here);
                    }
                }
                out[cell * n_ord + q] = upd;
            }
        }
        IntensityField::new(out, n_ord)
    }

    /// Implicit pointwise relaxation sub-step (in place).
    pub fn step_relaxation(&self, state: &mut KineticState, dt: f64) -> Result<StepReport> {
        self.relaxation_impl(state, dt, None)
    }

    /// Relaxation with the black-body source replaced by its Fourier
    /// truncation `P_m(T⁴)` (in place); used by the Galerkin mode.
    pub fn step_relaxation_projected(
        &self,
        state: &mut KineticState,
        dt: f64,
        projector: &FourierProjector,
    ) -> Result<StepReport> {
        self.relaxation_impl(state, dt, Some(projector))
    }

    fn relaxation_impl(
        &self,
        state: &mut KineticState,
        dt: f64,
        projector: Option<&FourierProjector>,
    ) -> Result<StepReport> {
        let eps = self.params.epsilon;
        let lambda = dt / (eps * eps);
        let mu = lambda / (1.0 + lambda);
        let n_cells = self.grid.n_cells();
        let tol = self.config.newton_tol;
        let max_iter = self.config.newton_max_iter;

        let use_projector = projector.map(|p| !p.is_identity()).unwrap_or(false);

        let mut iters_max = 0usize;
        let mut clamped = 0usize;

        if !use_projector {
            for cell in 0..n_cells {
                let t_old = state.temperature.values()[cell];
                let rho = self.quad.integrate_unchecked(state.intensity.cell(cell));
                let rhs = t_old + mu * rho;
                let (t_new, iters, was_clamped) =
                    solve_relaxation_scalar(rhs, t_old, mu, tol, max_iter).map_err(|e| {
                        Error::NewtonDiverged(format!("relaxation in cell {cell}: {e}"))
                    })?;
                iters_max = iters_max.max(iters);
                if was_clamped {
                    clamped += 1;
                }
                let t4 = t_new.powi(4);
                for v in state.intensity.cell_mut(cell) {
                    *v = (*v + lambda * t4) / (1.0 + lambda);
                }
                state.temperature.values_mut()[cell] = t_new;
            }
        } else {
            let proj = projector.unwrap();
            // Field-coupled solve: T' + 4π μ P(T'⁴) = Tⁿ + μ⟨ψⁿ⟩.
            let mut rhs = vec![0.0; n_cells];
            for cell in 0..n_cells {
                let rho = self.quad.integrate_unchecked(state.intensity.cell(cell));
                rhs[cell] = state.temperature.values()[cell] + mu * rho;
            }
            let (t_new, iters) = solve_relaxation_projected(
                &rhs,
                state.temperature.values(),
                mu,
                proj,
                tol,
                max_iter,
            )?;
            iters_max = iters;
            let mut t4: Vec<f64> = t_new.iter().map(|t| t.powi(4)).collect();
            t4 = proj.project(&t4);
            for cell in 0..n_cells {
                let s = t4[cell];
                for v in state.intensity.cell_mut(cell) {
                    *v = (*v + lambda * s) / (1.0 + lambda);
                }
                // Truncation wiggles may produce small negatives; these are
                // legitimate Galerkin states, so no clamping here.
                state.temperature.values_mut()[cell] = t_new[cell];
            }
        }

        Ok(StepReport {
            dt_used: dt,
            newton_iters_max: iters_max,
            clamped_cells: clamped,
        })
    }

    /// Implicit diffusion sub-step `(I − dt Δ_h) T' = Tⁿ`; wall ghosts are
    /// evaluated at the target time `t_new`.
    pub fn step_diffusion(
        &self,
        temperature: &TemperatureField,
        dt: f64,
        t_new: f64,
    ) -> Result<TemperatureField> {
        let ghost = self.diffusion_ghosts(t_new);
        let grid = &self.grid;
        let apply = |x: &[f64]| -> Vec<f64> {
            let lap = apply_laplacian(grid, x, &ghost, true);
            x.iter().zip(&lap).map(|(xi, li)| xi - dt * li).collect()
        };
        let b: Vec<f64> = temperature
            .values()
            .iter()
            .zip(ghost.constant())
            .map(|(t, c)| t + dt * c)
            .collect();
        let max_iter = 20 * grid.n_cells() + 100;
        let (x, _iters) = conjugate_gradient(apply, &b, temperature.values().to_vec(), 1e-12, max_iter)?;
        TemperatureField::new(x)
    }

    /// Ghost algebra for the temperature walls at time `t`.
    pub fn diffusion_ghosts(&self, t: f64) -> GhostStencil {
        match self.params.bc_mode {
            BcMode::Torus => GhostStencil::periodic(&self.grid),
            BcMode::Dirichlet => GhostStencil::walls(&self.grid, WallRule::Dirichlet, |_, _, x| {
                self.boundary.tb(t, x)
            }),
            BcMode::Robin => GhostStencil::walls(
                &self.grid,
                WallRule::Robin {
                    kappa: self.params.robin_coefficient(),
                },
                |_, _, x| self.boundary.tb(t, x),
            ),
        }
    }

    /// Advances the state to `t_end` with the splitting
    /// transport → diffusion → relaxation, calling `observer` after each
    /// full step. The final step is truncated to land on `t_end` exactly.
    pub fn advance(
        &self,
        state: KineticState,
        t_end: f64,
        mut observer: impl FnMut(&KineticState, &StepReport),
    ) -> Result<KineticState> {
        self.advance_impl(state, t_end, None, &mut observer)
    }

    /// Galerkin variant: identical splitting with the relaxation source
    /// `T⁴` replaced by its Fourier truncation. Torus only. The initial
    /// state is projected onto the retained modes, matching the truncated
    /// system's own initial data; with `m` at or above the grid Nyquist
    /// index the projection is the identity and this coincides with
    /// [`advance`](Self::advance).
    pub fn galerkin_advance(
        &self,
        mut state: KineticState,
        t_end: f64,
        mut observer: impl FnMut(&KineticState, &StepReport),
    ) -> Result<KineticState> {
        if self.params.bc_mode != BcMode::Torus {
            return Err(Error::Solver(
                "galerkin_advance requires torus boundary mode".into(),
            ));
        }
        let m = self.config.galerkin_modes.ok_or_else(|| {
            Error::Solver("galerkin_advance requires galerkin_modes to be set".into())
        })?;
        let projector = FourierProjector::new(&self.grid, m)?;
        if !projector.is_identity() {
            let t_proj = projector.project(state.temperature.values());
            state.temperature = TemperatureField::new(t_proj)?;
            let n_ord = state.intensity.n_ord();
            let n_cells = self.grid.n_cells();
            let mut slice = vec![0.0; n_cells];
            let mut new_vals = state.intensity.values().to_vec();
            for q in 0..n_ord {
                for c in 0..n_cells {
                    slice[c] = state.intensity.at(c, q);
                }
                let p = projector.project(&slice);
                for c in 0..n_cells {
                    new_vals[c * n_ord + q] = p[c];
                }
            }
            state.intensity = IntensityField::new(new_vals, n_ord)?;
        }
        self.advance_impl(state, t_end, Some(&projector), &mut observer)
    }

    fn advance_impl(
        &self,
        mut state: KineticState,
        t_end: f64,
        projector: Option<&FourierProjector>,
        observer: &mut impl FnMut(&KineticState, &StepReport),
    ) -> Result<KineticState> {
        if t_end < state.time {
            return Err(Error::Solver(format!(
                "t_end {t_end} lies before state time {}",
                state.time
            )));
        }
        if t_end == state.time {
            return Ok(state);
        }
        let dt = self.stable_dt();
        if !(dt > 0.0) {
            return Err(Error::Solver(format!("nonpositive step size {dt}")));
        }
        let t0 = state.time;
        let span = t_end - t0;
        let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        for k in 0..steps {
            let step_dt = if k + 1 == steps {
                t_end - state.time
            } else {
                dt
            };
            let t_new = if k + 1 == steps {
                t_end
            } else {
                t0 + (k + 1) as f64 * dt
            };
            state.intensity = self.step_transport(&state, step_dt)?;
            state.temperature = self.step_diffusion(&state.temperature, step_dt, t_new)?;
            let mut report = match projector {
                Some(p) => self.step_relaxation_projected(&mut state, step_dt, p)?,
                None => self.step_relaxation(&mut state, step_dt)?,
            };
            report.dt_used = step_dt;
            state.time = t_new;
            observer(&state, &report);
        }
        Ok(state)
    }
}

/// Position of a boundary cell within the `face_cells` ordering of its face.
fn face_pos(grid: &SpatialGrid, cell: usize, axis: usize) -> usize {
    let c = grid.coords(cell);
    let n = grid.cells();
    match axis {
        0 => c[2] * n[1] + c[1],
        1 => c[2] * n[0] + c[0],
        _ => c[1] * n[0] + c[0],
    }
}

/// Solves `F(T) = T + 4π μ T⁴ − rhs = 0` for the unique nonnegative root by
/// safeguarded Newton (bisection fallback on the bracket `[0, rhs]`).
///
/// Negative `rhs` cannot arise from nonnegative data; it is clamped to zero
/// and reported, never silently accepted.
fn solve_relaxation_scalar(
    rhs: f64,
    t_guess: f64,
    mu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize, bool)> {
    if rhs < 0.0 {
        return Ok((0.0, 0, true));
    }
    if rhs == 0.0 {
        return Ok((0.0, 0, false));
    }
    let c = FOUR_PI * mu;
    let f = |t: f64| t + c * t.powi(4) - rhs;
    let mut lo = 0.0f64;
    let mut hi = rhs; // F(rhs) = c·rhs⁴ ≥ 0
    let mut x = t_guess.clamp(lo, hi);
    let mut iters = 0usize;
    loop {
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok((x, iters, false));
        }
        if iters >= max_iter {
            return Err(Error::NewtonDiverged(format!(
                "|F|={:.3e} after {max_iter} iterations (rhs={rhs:.6e})",
                fx.abs()
            )));
        }
        iters += 1;
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dfx = 1.0 + 4.0 * c * x.powi(3);
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            // Fixed point at machine resolution; cannot improve further.
            return Ok((x, iters, false));
        }
        x = next;
    }
}

/// Solves the field-coupled relaxation `T + 4π μ P(T⁴) = rhs` by Newton with
/// Woodbury-inverted Jacobians `I + 16π μ P diag(T³)`.
fn solve_relaxation_projected(
    rhs: &[f64],
    t_guess: &[f64],
    mu: f64,
    proj: &FourierProjector,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = rhs.len();
    let gamma = 16.0 * std::f64::consts::PI * mu;
    let mut t: Vec<f64> = t_guess.to_vec();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    let residual = |t: &[f64]| -> Vec<f64> {
        let t4: Vec<f64> = t.iter().map(|v| v.powi(4)).collect();
        let pt4 = proj.project(&t4);
        (0..t.len())
            .map(|i| t[i] + FOUR_PI * mu * pt4[i] - rhs[i])
            .collect()
    };

    let mut g = residual(&t);
    let mut gnorm = g.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut iters = 0usize;
    while gnorm > tol * scale {
        if iters >= max_iter {
            return Err(Error::NewtonDiverged(format!(
                "projected relaxation: |G|={gnorm:.3e} after {max_iter} iterations"
            )));
        }
        iters += 1;
        // Woodbury: (I + γ V Vᵀ D)⁻¹ r = r − V (I_K + γ Vᵀ D V)⁻¹ γ Vᵀ (D r).
        let d: Vec<f64> = t.iter().map(|v| v.powi(3)).collect();
        let basis = proj.basis();
        let k = basis.len();
        let mut small = vec![vec![0.0; k]; k];
        for (j, bj) in basis.iter().enumerate() {
            let dbj: Vec<f64> = (0..n).map(|i| d[i] * bj[i]).collect();
            for (i2, bi) in basis.iter().enumerate() {
                let mut acc = 0.0;
                for idx in 0..n {
                    acc += bi[idx] * dbj[idx];
                }
                small[i2][j] = gamma * acc;
                if i2 == j {
                    small[i2][j] += 1.0;
                }
            }
        }
        let mut srhs = vec![0.0; k];
        for (j, bj) in basis.iter().enumerate() {
            let mut acc = 0.0;
            for idx in 0..n {
                acc += bj[idx] * d[idx] * g[idx];
            }
            srhs[j] = gamma * acc;
        }
        let y = solve_small(small, srhs)?;
        let mut delta = g.clone();
        for (j, bj) in basis.iter().enumerate() {
            for idx in 0..n {
                delta[idx] -= y[j] * bj[idx];
            }
        }
        // Damped update: halve until the residual does not grow.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand: Vec<f64> = (0..n).map(|i| t[i] - step * delta[i]).collect();
            let gc = residual(&cand);
            let gc_norm = gc.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if gc_norm < gnorm {
                t = cand;
                g = gc;
                gnorm = gc_norm;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged(
                "projected relaxation: damping failed to reduce the residual".into(),
            ));
        }
    }
    Ok((t, iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::well_prepared_init;
    use crate::grid::make_grid;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn torus_solver(n: usize, eps: f64) -> KineticSolver {
        let grid = make_grid(1, &[n], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::product_rule(4, 8).unwrap();
        let params = Params::torus(eps).unwrap();
        KineticSolver::new(grid, quad, params, SolverConfig::default(), BoundaryData::uniform(1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        // Diffusion cap binds: min(0.05, 0.005) = 0.005.
        let grid = make_grid(1, &[10], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::product_rule(4, 8).unwrap();
        let cfg = SolverConfig {
            cfl: 0.5,
            ..Default::default()
        };
        let s = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            Params::torus(1.0).unwrap(),
            cfg.clone(),
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        assert!((s.stable_dt() - 0.005).abs() < 1e-15);

        // Transport term dominates at small epsilon: 0.5·0.05·0.1 = 0.0025.
        let s = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            Params::torus(0.05).unwrap(),
            cfg.clone(),
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        assert!((s.stable_dt() - 0.0025).abs() < 1e-15);

        // Override wins regardless.
        let cfg = SolverConfig {
            dt_override: Some(1e-4),
            ..Default::default()
        };
        let s = KineticSolver::new(grid, quad, Params::torus(0.05).unwrap(), cfg, BoundaryData::uniform(1.0).unwrap())
            .unwrap();
        assert!((s.stable_dt() - 1e-4).abs() < 1e-20);
    }

    #[test]
    fn transport_leaves_uniform_field_unchanged() {
        let solver = torus_solver(16, 1.0);
        let t0 = TemperatureField::uniform(solver.grid(), 1.0);
        let state = well_prepared_init(&t0, solver.quad()).unwrap();
        let psi = solver.step_transport(&state, solver.stable_dt()).unwrap();
        for (a, b) in psi.values().iter().zip(state.intensity.values()) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn transport_translates_exactly_at_unit_cfl() {
        // Single ordinate moving along +x with speed 1; dt = Δx shifts the
        // profile by exactly one cell.
        let grid = make_grid(1, &[16], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::from_raw(vec![[1.0, 0.0, 0.0]], vec![FOUR_PI]).unwrap();
        let params = Params::torus(1.0).unwrap();
        let solver = KineticSolver::new(
            grid.clone(),
            quad,
            params,
            SolverConfig::default(),
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        let mut vals = vec![0.0; 16];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = (i as f64 * 0.3).sin().abs() + 0.1;
        }
        let t = TemperatureField::uniform(&grid, 1.0);
        let psi = IntensityField::new(vals.clone(), 1).unwrap();
        let state = KineticState::new(0.0, t, psi).unwrap();
        let dt = grid.dx()[0];
        let out = solver.step_transport(&state, dt).unwrap();
        for i in 0..16 {
            let from = (i + 16 - 1) % 16;
            assert!(
                (out.at(i, 0) - vals[from]).abs() < 1e-14,
                "cell {i} not an exact shift"
            );
        }
    }

    #[test]
    fn transport_matches_dense_upwind_matrix() {
        // Oracle: the same update as an explicit circulant matrix product.
        let n = 24;
        let grid = make_grid(1, &[n], &[1.0], &[true]).unwrap();
        let beta = [0.6, 0.48, 0.64];
        let quad = AngularQuadrature::from_raw(vec![beta], vec![FOUR_PI]).unwrap();
        let eps = 0.7;
        let solver = KineticSolver::new(
            grid.clone(),
            quad,
            Params::torus(eps).unwrap(),
            SolverConfig::default(),
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        let dt = 0.3 * eps * grid.dx()[0];
        let nu = dt * beta[0] / (eps * grid.dx()[0]);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..n)
            .map(|_| 1.0 + 0.5 * (rng.gen::<f64>() - 0.5))
            .collect();
        let state = KineticState::new(
            0.0,
            TemperatureField::uniform(&grid, 1.0),
            IntensityField::new(vals.clone(), 1).unwrap(),
        )
        .unwrap();
        let out = solver.step_transport(&state, dt).unwrap();

        let mut oracle = vec![0.0; n];
        for i in 0..n {
            let prev = (i + n - 1) % n;
            oracle[i] = (1.0 - nu) * vals[i] + nu * vals[prev];
        }
        let mut l2_out = 0.0;
        let mut l2_oracle = 0.0;
        for i in 0..n {
            assert!((out.at(i, 0) - oracle[i]).abs() < 1e-14);
            l2_out += out.at(i, 0).powi(2);
            l2_oracle += oracle[i].powi(2);
        }
        assert!((l2_out - l2_oracle).abs() < 1e-12);
    }

    #[test]
    fn transport_rejects_cfl_violation() {
        let solver = torus_solver(16, 0.1);
        let t0 = TemperatureField::uniform(solver.grid(), 1.0);
        let state = well_prepared_init(&t0, solver.quad()).unwrap();
        let dx = solver.grid().dx()[0];
        let err = solver.step_transport(&state, 10.0 * dx * 0.1);
        assert!(matches!(err, Err(Error::Cfl(_))));
    }

    #[test]
    fn transport_conserves_cell_sums_per_ordinate_on_torus() {
        // The upwind update is in conservation form: fluxes telescope around
        // each periodic axis.
        let solver = torus_solver(24, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let n_ord = solver.quad().len();
        let vals: Vec<f64> = (0..24 * n_ord).map(|_| rng.gen_range(0.0..3.0)).collect();
        let state = KineticState::new(
            0.0,
            TemperatureField::uniform(solver.grid(), 1.0),
            IntensityField::new(vals.clone(), n_ord).unwrap(),
        )
        .unwrap();
        let out = solver.step_transport(&state, solver.stable_dt()).unwrap();
        for q in 0..n_ord {
            let before: f64 = (0..24).map(|c| state.intensity.at(c, q)).sum();
            let after: f64 = (0..24).map(|c| out.at(c, q)).sum();
            assert!(
                (after - before).abs() <= 1e-12 * before.abs().max(1.0),
                "ordinate {q} mass drift"
            );
        }
    }

    #[test]
    fn diffusion_conserves_temperature_mass_on_torus() {
        let solver = torus_solver(48, 0.2);
        let grid = solver.grid().clone();
        let t = TemperatureField::from_fn(&grid, |x| {
            1.0 + 0.4 * (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let before: f64 = t.values().iter().sum();
        let out = solver.step_diffusion(&t, 1e-3, 0.0).unwrap();
        let after: f64 = out.values().iter().sum();
        assert!((after - before).abs() <= 1e-10 * before.abs());
    }

    #[test]
    fn transport_is_sup_stable_on_torus() {
        let solver = torus_solver(32, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n_ord = solver.quad().len();
        let vals: Vec<f64> = (0..32 * n_ord).map(|_| rng.gen_range(0.0..3.0)).collect();
        let state = KineticState::new(
            0.0,
            TemperatureField::uniform(solver.grid(), 1.0),
            IntensityField::new(vals.clone(), n_ord).unwrap(),
        )
        .unwrap();
        let before = vals.iter().cloned().fold(0.0f64, f64::max);
        let out = solver.step_transport(&state, solver.stable_dt()).unwrap();
        let after = out.values().iter().cloned().fold(0.0f64, f64::max);
        assert!(after <= before + 1e-13);
    }

    #[test]
    fn relaxation_fixes_equilibrium() {
        let solver = torus_solver(8, 0.2);
        let t0 = TemperatureField::uniform(solver.grid(), 1.3);
        let mut state = well_prepared_init(&t0, solver.quad()).unwrap();
        let before_t = state.temperature.values().to_vec();
        let before_psi = state.intensity.values().to_vec();
        solver.step_relaxation(&mut state, 0.01).unwrap();
        for (a, b) in state.temperature.values().iter().zip(&before_t) {
            assert!((a - b).abs() <= 1e-13);
        }
        for (a, b) in state.intensity.values().iter().zip(&before_psi) {
            assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn relaxation_conserves_t_plus_radiative_density() {
        let solver = torus_solver(16, 0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n_ord = solver.quad().len();
        let tvals: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..2.0)).collect();
        let pvals: Vec<f64> = (0..16 * n_ord).map(|_| rng.gen_range(0.0..16.0)).collect();
        let mut state = KineticState::new(
            0.0,
            TemperatureField::new(tvals).unwrap(),
            IntensityField::new(pvals, n_ord).unwrap(),
        )
        .unwrap();
        let before: Vec<f64> = (0..16)
            .map(|c| {
                state.temperature.values()[c]
                    + solver.quad().integrate_unchecked(state.intensity.cell(c))
            })
            .collect();
        solver.step_relaxation(&mut state, 0.05).unwrap();
        for c in 0..16 {
            let after = state.temperature.values()[c]
                + solver.quad().integrate_unchecked(state.intensity.cell(c));
            assert!(
                (after - before[c]).abs() <= 1e-11,
                "cell {c}: drift {:.3e}",
                (after - before[c]).abs()
            );
        }
    }

    #[test]
    fn relaxation_matches_reduced_ode_oracle() {
        // Oracle: the reduced system dT/dt = (ρ − 4πT⁴)/ε², dρ/dt = −(ρ − 4πT⁴)/ε²
        // integrated with many RK4 substeps at mild stiffness; backward Euler
        // agrees to O(λ²) per step.
        let solver = torus_solver(4, 1.0);
        let n_ord = solver.quad().len();
        let c = 0.5;
        let state = KineticState::new(
            0.0,
            TemperatureField::uniform(solver.grid(), 0.0),
            IntensityField::new(vec![c; 4 * n_ord], n_ord).unwrap(),
        )
        .unwrap();
        let rho0 = solver.quad().integrate_unchecked(state.intensity.cell(0));

        // RK4 reference on the reduced 2-variable system.
        let ode = |dt: f64| -> f64 {
            let mut t = 0.0f64;
            let mut rho = rho0;
            let steps = 20_000;
            let h = dt / steps as f64;
            for _ in 0..steps {
                let f = |t: f64, rho: f64| -> (f64, f64) {
                    let src = rho - FOUR_PI * t.powi(4);
                    (src, -src)
                };
                let (k1t, k1r) = f(t, rho);
                let (k2t, k2r) = f(t + 0.5 * h * k1t, rho + 0.5 * h * k1r);
                let (k3t, k3r) = f(t + 0.5 * h * k2t, rho + 0.5 * h * k2r);
                let (k4t, k4r) = f(t + h * k3t, rho + h * k3r);
                t += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
                rho += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
            }
            t
        };

        let be = |dt: f64| -> (f64, f64) {
            let mut s = state.clone();
            solver.step_relaxation(&mut s, dt).unwrap();
            (
                s.temperature.values()[0],
                solver.quad().integrate_unchecked(s.intensity.cell(0)),
            )
        };

        let dt = 0.05; // λ = dt/ε² = 0.05
        let (t_be, rho_be) = be(dt);
        assert!(t_be > 0.0 && rho_be < rho0, "T must rise and rho must fall");
        assert!(
            (t_be + rho_be - rho0).abs() <= 1e-12,
            "sum T+rho must be conserved"
        );
        // One implicit step vs the exact flow: local error O(dt²·|T''|),
        // bounded here by dt²·rho0, and shrinking ~4x when dt halves.
        let gap = (t_be - ode(dt)).abs();
        assert!(
            gap <= dt * dt * rho0,
            "backward Euler {t_be} too far from ODE oracle {}",
            ode(dt)
        );
        let (t_be_half, _) = be(dt / 2.0);
        let gap_half = (t_be_half - ode(dt / 2.0)).abs();
        let ratio = gap / gap_half;
        assert!(
            (2.5..8.0).contains(&ratio),
            "one-step error should shrink at second order, got ratio {ratio}"
        );
    }

    #[test]
    fn relaxation_reaches_equilibrium_in_stiff_limit() {
        let solver = torus_solver(4, 1.0);
        let n_ord = solver.quad().len();
        let mut state = KineticState::new(
            0.0,
            TemperatureField::uniform(solver.grid(), 0.3),
            IntensityField::new(vec![5.0; 4 * n_ord], n_ord).unwrap(),
        )
        .unwrap();
        solver.step_relaxation(&mut state, 1e8).unwrap(); // dt/ε² = 1e8
        for c in 0..4 {
            let t4 = state.temperature.values()[c].powi(4);
            for q in 0..n_ord {
                assert!((state.intensity.at(c, q) - t4).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn relaxation_errors_name_the_cell_on_divergence() {
        let grid = make_grid(1, &[4], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::product_rule(2, 4).unwrap();
        let cfg = SolverConfig {
            newton_max_iter: 0,
            ..Default::default()
        };
        let solver = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            Params::torus(0.5).unwrap(),
            cfg,
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        let t0 = TemperatureField::uniform(&grid, 1.0);
        let mut state = well_prepared_init(&t0, &quad).unwrap();
        // Perturb so the residual cannot be zero at the initial guess.
        state.intensity.values_mut()[0] += 1.0;
        let err = solver.step_relaxation(&mut state, 0.5).unwrap_err();
        assert!(format!("{err}").contains("cell 0"), "got: {err}");
    }

    #[test]
    fn relaxation_contracts_isotropic_states() {
        // For per-cell isotropic ψ the reduced update provably contracts the
        // equilibrium gap; check over random states.
        let solver = torus_solver(32, 0.2);
        let n_ord = solver.quad().len();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let tvals: Vec<f64> = (0..32).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mut pvals = vec![0.0; 32 * n_ord];
            for c in 0..32 {
                let v = rng.gen_range(0.0..16.0);
                for q in 0..n_ord {
                    pvals[c * n_ord + q] = v;
                }
            }
            let mut state = KineticState::new(
                0.0,
                TemperatureField::new(tvals).unwrap(),
                IntensityField::new(pvals, n_ord).unwrap(),
            )
            .unwrap();
            let gap_before = equilibrium_gap(&state);
            solver.step_relaxation(&mut state, 0.01).unwrap();
            let gap_after = equilibrium_gap(&state);
            assert!(gap_after <= gap_before + 1e-12);
        }
    }

    #[test]
    fn relaxation_contraction_identity_against_final_equilibrium() {
        // Exact algebra of the implicit step: ψ' − T'⁴ = (ψⁿ − T'⁴)/(1+λ).
        let solver = torus_solver(8, 0.3);
        let n_ord = solver.quad().len();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let tvals: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..2.0)).collect();
        let pvals: Vec<f64> = (0..8 * n_ord).map(|_| rng.gen_range(0.0..16.0)).collect();
        let mut state = KineticState::new(
            0.0,
            TemperatureField::new(tvals).unwrap(),
            IntensityField::new(pvals.clone(), n_ord).unwrap(),
        )
        .unwrap();
        let dt = 0.02;
        let lambda = dt / (0.3f64 * 0.3);
        solver.step_relaxation(&mut state, dt).unwrap();
        for c in 0..8 {
            let t4 = state.temperature.values()[c].powi(4);
            for q in 0..n_ord {
                let expect = (pvals[c * n_ord + q] - t4) / (1.0 + lambda);
                assert!((state.intensity.at(c, q) - t4 - expect).abs() <= 1e-10);
            }
        }
    }

    fn equilibrium_gap(state: &KineticState) -> f64 {
        let mut gap = 0.0f64;
        for c in 0..state.temperature.len() {
            let t4 = state.temperature.values()[c].powi(4);
            for q in 0..state.intensity.n_ord() {
                gap = gap.max((state.intensity.at(c, q) - t4).abs());
            }
        }
        gap
    }

    #[test]
    fn diffusion_preserves_uniform_torus_field() {
        let solver = torus_solver(32, 0.2);
        let t = TemperatureField::uniform(solver.grid(), 2.2);
        let out = solver.step_diffusion(&t, 1e-3, 0.0).unwrap();
        for (a, b) in out.values().iter().zip(t.values()) {
            assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn diffusion_damps_sine_mode_at_discrete_rate() {
        let n = 64;
        let solver = torus_solver(n, 0.2);
        let grid = solver.grid().clone();
        let dx = grid.dx()[0];
        let t = TemperatureField::from_fn(&grid, |x| {
            (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let dt = 2e-4;
        let out = solver.step_diffusion(&t, dt, 0.0).unwrap();
        // Exact eigenvalue of the discrete periodic Laplacian.
        let lam = (2.0 / (dx * dx)) * (1.0 - (2.0 * std::f64::consts::PI * dx).cos());
        let factor = 1.0 / (1.0 + dt * lam);
        for i in 0..n {
            assert!(
                (out.values()[i] - factor * t.values()[i]).abs() <= 1e-11,
                "cell {i}"
            );
        }
    }

    #[test]
    fn diffusion_keeps_dirichlet_equilibrium() {
        let grid = make_grid(1, &[16], &[1.0], &[false]).unwrap();
        let quad = AngularQuadrature::product_rule(2, 4).unwrap();
        let params = Params::new(0.2, 0.5, 0.0, BcMode::Dirichlet).unwrap();
        let solver = KineticSolver::new(
            grid.clone(),
            quad,
            params,
            SolverConfig::default(),
            BoundaryData::uniform(1.7).unwrap(),
        )
        .unwrap();
        let t = TemperatureField::uniform(&grid, 1.7);
        let out = solver.step_diffusion(&t, 1e-3, 0.0).unwrap();
        for v in out.values() {
            assert!((v - 1.7).abs() <= 1e-12);
        }
    }

    #[test]
    fn diffusion_keeps_robin_equilibrium() {
        let grid = make_grid(1, &[16], &[1.0], &[false]).unwrap();
        let quad = AngularQuadrature::product_rule(2, 4).unwrap();
        let params = Params::new(0.2, 0.5, 0.0, BcMode::Robin).unwrap();
        let solver = KineticSolver::new(
            grid.clone(),
            quad,
            params,
            SolverConfig::default(),
            BoundaryData::uniform(0.9).unwrap(),
        )
        .unwrap();
        let t = TemperatureField::uniform(&grid, 0.9);
        let out = solver.step_diffusion(&t, 1e-3, 0.0).unwrap();
        for v in out.values() {
            assert!((v - 0.9).abs() <= 1e-12);
        }
    }

    #[test]
    fn boundary_ghosts_follow_the_mixed_condition() {
        let grid = make_grid(1, &[8], &[1.0], &[false]).unwrap();
        let quad = AngularQuadrature::product_rule(2, 4).unwrap();
        let n_ord = quad.len();

        // Fixed point: outgoing values equal to psi_b give ghost = psi_b.
        let params = Params::new(0.2, 0.37, 0.0, BcMode::Dirichlet).unwrap();
        let bd = BoundaryData::uniform(2.0).unwrap();
        let psib = 16.0;
        let solver = KineticSolver::new(grid.clone(), quad.clone(), params, SolverConfig::default(), bd).unwrap();
        let t0 = TemperatureField::uniform(&grid, 2.0);
        let state = well_prepared_init(&t0, &quad).unwrap();
        let ghost = solver
            .apply_psi_boundary(&state, 0.0, 0, Side::Lower)
            .unwrap();
        for q in 0..n_ord {
            if quad.node(q)[0] > 0.0 {
                assert!((ghost[q] - psib).abs() < 1e-12);
            } else {
                assert_eq!(ghost[q], 0.0);
            }
        }

        // alpha -> 1 pins the ghost to psi_b.
        let params = Params::new(0.2, 0.999999, 0.0, BcMode::Dirichlet).unwrap();
        let solver = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            params,
            SolverConfig::default(),
            BoundaryData::uniform(2.0).unwrap(),
        )
        .unwrap();
        let mut state2 = well_prepared_init(&t0, &quad).unwrap();
        for v in state2.intensity.values_mut() {
            *v = 3.0; // reflected value far from psi_b
        }
        let ghost = solver
            .apply_psi_boundary(&state2, 0.0, 0, Side::Lower)
            .unwrap();
        for q in 0..n_ord {
            if quad.node(q)[0] > 0.0 {
                assert!((ghost[q] - psib).abs() <= 1e-5 * (psib - 3.0f64).abs());
            }
        }

        // alpha = 0.5, psi_b = 16, reflected outgoing value 0 -> ghost = 8.
        let params = Params::new(0.2, 0.5, 0.0, BcMode::Dirichlet).unwrap();
        let solver = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            params,
            SolverConfig::default(),
            BoundaryData::uniform(2.0).unwrap(),
        )
        .unwrap();
        let mut state3 = well_prepared_init(&t0, &quad).unwrap();
        for v in state3.intensity.values_mut() {
            *v = 0.0;
        }
        let ghost = solver
            .apply_psi_boundary(&state3, 0.0, 0, Side::Lower)
            .unwrap();
        for q in 0..n_ord {
            if quad.node(q)[0] > 0.0 {
                assert!((ghost[q] - 8.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_psi_boundary_rejects_periodic_faces() {
        let solver = torus_solver(8, 0.5);
        let t0 = TemperatureField::uniform(solver.grid(), 1.0);
        let state = well_prepared_init(&t0, solver.quad()).unwrap();
        assert!(solver.apply_psi_boundary(&state, 0.0, 0, Side::Lower).is_err());
    }

    #[test]
    fn advance_zero_span_returns_state_unchanged() {
        let solver = torus_solver(8, 0.5);
        let t0 = TemperatureField::uniform(solver.grid(), 1.0);
        let state = well_prepared_init(&t0, solver.quad()).unwrap();
        let before = state.clone();
        let after = solver.advance(state, 0.0, |_, _| {}).unwrap();
        assert_eq!(after.temperature.values(), before.temperature.values());
        assert_eq!(after.intensity.values(), before.intensity.values());
    }

    #[test]
    fn advance_preserves_global_equilibrium() {
        let solver = torus_solver(16, 0.3);
        let t0 = TemperatureField::uniform(solver.grid(), 1.3);
        let state = well_prepared_init(&t0, solver.quad()).unwrap();
        let after = solver.advance(state, 0.01, |_, _| {}).unwrap();
        for v in after.temperature.values() {
            assert!((v - 1.3).abs() <= 1e-12);
        }
        let eq = 1.3f64.powi(4);
        for v in after.intensity.values() {
            assert!((v - eq).abs() <= 1e-12);
        }
    }

    #[test]
    fn galerkin_requires_torus_and_modes() {
        let grid = make_grid(1, &[8], &[1.0], &[false]).unwrap();
        let quad = AngularQuadrature::product_rule(2, 4).unwrap();
        let params = Params::new(0.2, 0.5, 0.0, BcMode::Dirichlet).unwrap();
        let cfg = SolverConfig {
            galerkin_modes: Some(2),
            ..Default::default()
        };
        let solver =
            KineticSolver::new(grid.clone(), quad.clone(), params, cfg, BoundaryData::uniform(1.0).unwrap())
                .unwrap();
        let t0 = TemperatureField::uniform(&grid, 1.0);
        let state = well_prepared_init(&t0, &quad).unwrap();
        assert!(solver.galerkin_advance(state, 0.01, |_, _| {}).is_err());

        let solver = torus_solver(8, 0.3);
        let t0 = TemperatureField::uniform(solver.grid(), 1.0);
        let state = well_prepared_init(&t0, solver.quad()).unwrap();
        assert!(solver.galerkin_advance(state, 0.01, |_, _| {}).is_err());
    }

    #[test]
    fn galerkin_mode_zero_fixes_uniform_data() {
        let grid = make_grid(1, &[8], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::product_rule(4, 8).unwrap();
        let cfg = SolverConfig {
            galerkin_modes: Some(0),
            ..Default::default()
        };
        let solver = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            Params::torus(0.3).unwrap(),
            cfg,
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        let t0 = TemperatureField::uniform(&grid, 1.2);
        let state = well_prepared_init(&t0, &quad).unwrap();
        let plain = solver.advance(state.clone(), 0.005, |_, _| {}).unwrap();
        let galerkin = solver.galerkin_advance(state, 0.005, |_, _| {}).unwrap();
        for (a, b) in plain
            .temperature
            .values()
            .iter()
            .zip(galerkin.temperature.values())
        {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in plain.intensity.values().iter().zip(galerkin.intensity.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn galerkin_at_nyquist_matches_plain_advance() {
        let grid = make_grid(1, &[16], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::product_rule(4, 8).unwrap();
        let cfg = SolverConfig {
            galerkin_modes: Some(8),
            ..Default::default()
        };
        let solver = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            Params::torus(0.25).unwrap(),
            cfg,
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        let t0 = TemperatureField::from_fn(&grid, |x| {
            1.0 + 0.2 * (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let state = well_prepared_init(&t0, &quad).unwrap();
        let plain = solver.advance(state.clone(), 0.01, |_, _| {}).unwrap();
        let galerkin = solver.galerkin_advance(state, 0.01, |_, _| {}).unwrap();
        let mut sup = 0.0f64;
        for (a, b) in plain
            .temperature
            .values()
            .iter()
            .zip(galerkin.temperature.values())
        {
            sup = sup.max((a - b).abs());
        }
        for (a, b) in plain.intensity.values().iter().zip(galerkin.intensity.values()) {
            sup = sup.max((a - b).abs());
        }
        assert!(sup <= 1e-10, "sup deviation {sup:.3e}");
    }

    #[test]
    fn galerkin_truncated_relaxation_conserves_per_cell() {
        let grid = make_grid(1, &[16], &[1.0], &[true]).unwrap();
        let quad = AngularQuadrature::product_rule(4, 8).unwrap();
        let cfg = SolverConfig {
            galerkin_modes: Some(2),
            ..Default::default()
        };
        let solver = KineticSolver::new(
            grid.clone(),
            quad.clone(),
            Params::torus(0.3).unwrap(),
            cfg,
            BoundaryData::uniform(1.0).unwrap(),
        )
        .unwrap();
        let proj = FourierProjector::new(&grid, 2).unwrap();
        let t0 = TemperatureField::from_fn(&grid, |x| {
            1.0 + 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let mut state = well_prepared_init(&t0, &quad).unwrap();
        let before: Vec<f64> = (0..16)
            .map(|c| {
                state.temperature.values()[c]
                    + quad.integrate_unchecked(state.intensity.cell(c))
            })
            .collect();
        solver
            .step_relaxation_projected(&mut state, 0.01, &proj)
            .unwrap();
        for c in 0..16 {
            let after = state.temperature.values()[c]
                + quad.integrate_unchecked(state.intensity.cell(c));
            assert!((after - before[c]).abs() <= 1e-10);
        }
    }
}
