//! Grey radiative heat transfer on a box or torus, its nonlinear diffusion
//! limit, and the diagnostics connecting the two.
//!
//! The crate integrates the scaled coupled system
//!
//! ```text
//! ∂t T = ΔT + (1/ε²) ∫_{S²} (ψ − T⁴) dβ,
//! ∂t ψ + (1/ε) β·∇ψ = −(1/ε²)(ψ − T⁴),
//! ```
//!
//! under three wall regimes for the temperature (periodic torus, Dirichlet,
//! Robin with exponent `r`) and a reflecting/absorbing mixed condition for
//! the intensity, alongside the `ε → 0` limit equation
//! `∂t(T̄ + 4πT̄⁴) = Δ(T̄ + (4π/3)T̄⁴)`. Diagnostics evaluate the energy
//! inequalities, the relative entropy against the corrected profile
//! `ψ̄`, and the observed convergence rates `ε^s` (`s = 2` on the torus,
//! `1` for Dirichlet walls, `min(1, r)` for Robin walls).
//!
//! Start with [`quadrature::AngularQuadrature`] and [`kinetic::KineticSolver`]
//! for the transport side, [`limit::LimitSolver`] for the limit equation,
//! and [`runner`] for config-driven experiment orchestration. The book under
//! `book/` walks through each concept; its code snippets compile and run as
//! doc-tests of this crate (see the `guide` module).

// Validation code uses `!(x > 0.0)` deliberately: unlike `x <= 0.0` it also
// rejects NaN. Indexed loops are kept in the stencil/solver kernels where
// multiple arrays are walked in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod boundary;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod kinetic;
pub mod laplacian;
pub mod limit;
pub mod output;
pub mod params;
pub mod quadrature;
pub mod runner;
pub mod spectral;
pub mod stencil;

pub use boundary::BoundaryData;
pub use error::{Error, Result};
pub use fields::{well_prepared_init, IntensityField, KineticState, TemperatureField};
pub use grid::{make_grid, Side, SpatialGrid};
pub use kinetic::{KineticSolver, SolverConfig, StepReport};
pub use limit::{t_of_u, u_of_t, LimitSolver, LimitState};
pub use params::{BcMode, Params};
pub use quadrature::AngularQuadrature;

/// The book chapters as doc-tested modules.
///
/// Each chapter of the guide in `book/src/` is included verbatim, so every
/// Rust code block in the book compiles and runs under `cargo test --doc`,
/// keeping prose and code in sync.
pub mod guide {
    #[doc = include_str!("../../../book/src/quadrature.md")]
    pub mod quadrature {}
    #[doc = include_str!("../../../book/src/kinetic.md")]
    pub mod kinetic {}
    #[doc = include_str!("../../../book/src/limit.md")]
    pub mod limit {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub mod diagnostics {}
}
