//! The nonlinear diffusion limit equation
//!
//! ```text
//! ∂t (T + 4π T⁴) = Δ (T + (4π/3) T⁴),
//! ```
//!
//! integrated by backward Euler in the conserved variable `u = T + 4πT⁴`
//! (strictly increasing in `T ≥ 0`, so the change of variables is safe and
//! the Jacobian never degenerates at `T = 0`). Each step solves
//!
//! ```text
//! u' − dt Δ_h v(u') = uⁿ,     v(u) = T + (4π/3) T⁴,  T = t_of_u(u),
//! ```
//!
//! by Newton with damping; the Newton linear systems are symmetrised with
//! the diagonal `dv/du` and solved by the same conjugate-gradient Laplacian
//! machinery the kinetic solver uses, so kinetic-vs-limit comparisons see
//! one and the same spatial operator. Walls impose `T = T_b` (the limit
//! boundary condition for every original wall regime), realised as
//! Dirichlet ghosts on the `v`-field.

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::fields::TemperatureField;
use crate::grid::SpatialGrid;
use crate::laplacian::{apply_laplacian, conjugate_gradient, GhostStencil, WallRule};
use crate::params::{BcMode, Params};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Conserved variable `u = T + 4πT⁴`; strictly increasing for `T ≥ 0`.
pub fn u_of_t(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Solver(format!("u_of_t requires T >= 0, got {t}")));
    }
    Ok(t + FOUR_PI * t.powi(4))
}

/// Flux variable `v = T + (4π/3)T⁴`.
pub fn v_of_t(t: f64) -> f64 {
    t + FOUR_PI / 3.0 * t.powi(4)
}

/// Inverse of [`u_of_t`] on `T ≥ 0` by safeguarded Newton, to 1e-13 relative.
pub fn t_of_u(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Solver(format!("t_of_u requires u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let f = |t: f64| t + FOUR_PI * t.powi(4) - u;
    let mut lo = 0.0f64;
    let mut hi = u.min((u / FOUR_PI).powf(0.25) + 1.0);
    if f(hi) < 0.0 {
        hi = u; // f(u) = 4π u⁴ ≥ 0 always brackets
    }
    let mut x = hi.min(u);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= 1e-13 * u.max(1.0) {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dfx = 1.0 + 4.0 * FOUR_PI * x.powi(3);
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::NewtonDiverged(format!(
        "t_of_u stalled for u = {u:.6e}"
    )))
}

/// Derivative `dv/du = (1 + 16πT³/3) / (1 + 16πT³)`, in `(1/3, 1]`.
pub fn dv_du(t: f64) -> f64 {
    let s = 16.0 * std::f64::consts::PI * t.powi(3);
    (1.0 + s / 3.0) / (1.0 + s)
}

#[derive(Debug, Clone)]
pub struct LimitState {
    pub time: f64,
    pub temperature: TemperatureField,
}

impl LimitState {
    pub fn new(time: f64, temperature: TemperatureField) -> Result<Self> {
        if temperature.values().iter().any(|&v| v < 0.0) {
            return Err(Error::Field(
                "limit state requires nonnegative temperature".into(),
            ));
        }
        Ok(Self { time, temperature })
    }
}

pub struct LimitSolver {
    grid: SpatialGrid,
    params: Params,
    boundary: BoundaryData,
    /// Nonlinear residual tolerance (sup-norm, relative to the data scale).
    pub residual_tol: f64,
    pub max_newton: usize,
}

impl LimitSolver {
    pub fn new(grid: SpatialGrid, params: Params, boundary: BoundaryData) -> Result<Self> {
        params.validate()?;
        params.check_grid(&grid)?;
        Ok(Self {
            grid,
            params,
            boundary,
            residual_tol: 1e-11,
            max_newton: 50,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn ghosts(&self, t: f64) -> GhostStencil {
        match self.params.bc_mode {
            BcMode::Torus => GhostStencil::periodic(&self.grid),
            // Every wall regime of the original system collapses to the
            // Dirichlet condition T = T_b in the limit; the ghost acts on v.
            BcMode::Dirichlet | BcMode::Robin => {
                GhostStencil::walls(&self.grid, WallRule::Dirichlet, |_, _, x| {
                    v_of_t(self.boundary.tb(t, x))
                })
            }
        }
    }

    /// One backward-Euler step of size `dt`; wall data evaluated at `t_new`.
    pub fn step(&self, state: &LimitState, dt: f64, t_new: f64) -> Result<LimitState> {
        if !(dt > 0.0) {
            return Err(Error::Solver(format!("step size must be positive, got {dt}")));
        }
        let n = self.grid.n_cells();
        let ghost = self.ghosts(t_new);
        let u_old: Vec<f64> = state
            .temperature
            .values()
            .iter()
            .map(|&t| u_of_t(t))
            .collect::<Result<_>>()?;
        let scale = 1.0 + u_old.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

        let mut u = u_old.clone();
        let mut temps: Vec<f64> = state.temperature.values().to_vec();

        let residual = |u: &[f64], temps: &mut Vec<f64>| -> Result<Vec<f64>> {
            for i in 0..n {
                temps[i] = t_of_u(u[i])?;
            }
            let v: Vec<f64> = temps.iter().map(|&t| v_of_t(t)).collect();
            let lap = apply_laplacian(&self.grid, &v, &ghost, false);
            Ok((0..n).map(|i| u[i] - dt * lap[i] - u_old[i]).collect())
        };

        let mut g = residual(&u, &mut temps)?;
        let mut gnorm = sup(&g);
        let mut newton_iters = 0usize;
        while gnorm > self.residual_tol * scale {
            if newton_iters >= self.max_newton {
                return Err(Error::NewtonDiverged(format!(
                    "limit step: |G| = {gnorm:.3e} after {} iterations",
                    self.max_newton
                )));
            }
            newton_iters += 1;

            // J = I − dt L ∘ diag(dv/du); symmetrise with D^{1/2}.
            let d: Vec<f64> = temps.iter().map(|&t| dv_du(t)).collect();
            let d_sqrt: Vec<f64> = d.iter().map(|&v| v.sqrt()).collect();
            let grid = &self.grid;
            let ghost_ref = &ghost;
            let apply_k = |y: &[f64]| -> Vec<f64> {
                let scaled: Vec<f64> = (0..n).map(|i| d_sqrt[i] * y[i]).collect();
                let lap = apply_laplacian(grid, &scaled, ghost_ref, true);
                (0..n).map(|i| y[i] - dt * d_sqrt[i] * lap[i]).collect()
            };
            let rhs_k: Vec<f64> = (0..n).map(|i| -d_sqrt[i] * g[i]).collect();
            let (y, _) = conjugate_gradient(apply_k, &rhs_k, vec![0.0; n], 1e-13, 20 * n + 100)?;
            let delta: Vec<f64> = (0..n).map(|i| y[i] / d_sqrt[i]).collect();

            // Damped update with projection onto u >= 0.
            let mut step_len = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let cand: Vec<f64> = (0..n)
                    .map(|i| (u[i] + step_len * delta[i]).max(0.0))
                    .collect();
                if let Ok(gc) = residual(&cand, &mut temps) {
                    let gc_norm = sup(&gc);
                    if gc_norm < gnorm {
                        u = cand;
                        g = gc;
                        gnorm = gc_norm;
                        accepted = true;
                        break;
                    }
                }
                step_len *= 0.5;
            }
            if !accepted {
                return Err(Error::NewtonDiverged(
                    "limit step: damping failed to reduce the residual".into(),
                ));
            }
        }

        for i in 0..n {
            temps[i] = t_of_u(u[i])?;
        }
        LimitState::new(t_new, TemperatureField::new(temps)?)
    }

    /// Advances to `t_end` with fixed step `dt` (final step truncated),
    /// invoking `observer` after every step.
    pub fn advance(
        &self,
        mut state: LimitState,
        t_end: f64,
        dt: f64,
        mut observer: impl FnMut(&LimitState),
    ) -> Result<LimitState> {
        if t_end < state.time {
            return Err(Error::Solver(format!(
                "t_end {t_end} lies before state time {}",
                state.time
            )));
        }
        if t_end == state.time {
            return Ok(state);
        }
        if !(dt > 0.0) {
            return Err(Error::Solver(format!("step size must be positive, got {dt}")));
        }
        let t0 = state.time;
        let steps = (((t_end - t0) / dt) - 1e-9).ceil().max(1.0) as usize;
        for k in 0..steps {
            let (step_dt, t_new) = if k + 1 == steps {
                (t_end - state.time, t_end)
            } else {
                (dt, t0 + (k + 1) as f64 * dt)
            };
            state = self.step(&state, step_dt, t_new)?;
            observer(&state);
        }
        Ok(state)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}
