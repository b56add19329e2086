//! Declarative run configuration (TOML).
//!
//! A run file collects grid, quadrature, physical parameters, initial and
//! boundary data, and solver knobs. A sweep file is the same plus a
//! `[sweep]` table listing the `ε` values of a rate study. See
//! `book/src/formats.md` for a complete annotated example.

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::fields::TemperatureField;
use crate::grid::{make_grid, SpatialGrid};
use crate::kinetic::SolverConfig;
use crate::params::{BcMode, Params};
use crate::quadrature::AngularQuadrature;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub extent: Vec<f64>,
    pub periodic: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QuadSpec {
    #[serde(default = "default_n_polar")]
    pub n_polar: usize,
    #[serde(default = "default_n_azimuth")]
    pub n_azimuth: usize,
}

fn default_n_polar() -> usize {
    8
}
fn default_n_azimuth() -> usize {
    8
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            n_polar: 8,
            n_azimuth: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamsSpec {
    pub epsilon: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub robin_r: f64,
    pub bc_mode: BcMode,
}

fn default_alpha() -> f64 {
    0.5
}

/// Named analytic initial profiles, or a snapshot file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "profile", rename_all = "lowercase")]
pub enum InitialSpec {
    Uniform {
        value: f64,
    },
    /// `base + amplitude · sin(2π k x_axis / L_axis)`.
    Sine {
        base: f64,
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: usize,
        #[serde(default)]
        axis: usize,
    },
    /// `base + amplitude · exp(−|x − center|² / (2 width²))`.
    Gaussian {
        base: f64,
        amplitude: f64,
        width: f64,
    },
    /// Temperature loaded from a snapshot file.
    File {
        path: PathBuf,
    },
}

fn default_wavenumber() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundarySpec {
    /// Constant wall temperature, well-prepared intensity `T_b⁴`.
    Uniform { tb: f64 },
    /// Tabulated wall temperature from a JSON file (see `BoundaryData`).
    File { path: PathBuf },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        Self::Uniform { tb: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunSection {
    pub scenario: String,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Snapshot stride in steps; 0 keeps only the initial and final states.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverSpec {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default)]
    pub dt_override: Option<f64>,
    #[serde(default)]
    pub galerkin_modes: Option<usize>,
}

fn default_cfl() -> f64 {
    0.5
}
fn default_newton_tol() -> f64 {
    1e-12
}
fn default_newton_max_iter() -> usize {
    50
}

impl Default for SolverSpec {
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

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub quadrature: QuadSpec,
    pub params: ParamsSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    pub run: RunSection,
    #[serde(default)]
    pub solver: SolverSpec,
}

/// Sweep (rate-study) section appended to a base run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepSection {
    /// Strictly decreasing positive ε values, at least three.
    pub epsilons: Vec<f64>,
    /// When set, bypasses the solvers and injects `coefficient · ε^s`
    /// errors; exercises the fitting and reporting plumbing alone.
    #[serde(default)]
    pub synthetic_exponent: Option<f64>,
    #[serde(default = "default_synthetic_coefficient")]
    pub synthetic_coefficient: f64,
    /// Use the smallest ε's stable step for every member run (default on).
    #[serde(default = "default_true")]
    pub slave_dt: bool,
}

fn default_synthetic_coefficient() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub base: RunConfig,
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    /// Canonical serialized form (stable field order), used for hashing and
    /// the round-trip guarantee.
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialize error: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.run.t_end > 0.0) {
            return Err(Error::Config(format!(
                "t_end must be positive, got {}",
                self.run.t_end
            )));
        }
        if self.run.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        self.build_grid()?;
        self.build_params()?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<SpatialGrid> {
        make_grid(
            self.grid.dim,
            &self.grid.cells,
            &self.grid.extent,
            &self.grid.periodic,
        )
    }

    pub fn build_quadrature(&self) -> Result<AngularQuadrature> {
        AngularQuadrature::product_rule(self.quadrature.n_polar, self.quadrature.n_azimuth)
    }

    pub fn build_params(&self) -> Result<Params> {
        Params::new(
            self.params.epsilon,
            self.params.alpha,
            self.params.robin_r,
            self.params.bc_mode,
        )
    }

    pub fn build_boundary(&self) -> Result<BoundaryData> {
        match &self.boundary {
            BoundarySpec::Uniform { tb } => BoundaryData::uniform(*tb),
            BoundarySpec::File { path } => BoundaryData::from_table_file(path),
        }
    }

    pub fn build_solver_config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.solver.cfl,
            newton_tol: self.solver.newton_tol,
            newton_max_iter: self.solver.newton_max_iter,
            dt_override: self.solver.dt_override,
            galerkin_modes: self.solver.galerkin_modes,
        }
    }

    pub fn build_initial(&self, grid: &SpatialGrid) -> Result<TemperatureField> {
        match &self.initial {
            InitialSpec::Uniform { value } => {
                if *value < 0.0 {
                    return Err(Error::Config("initial temperature must be >= 0".into()));
                }
                Ok(TemperatureField::uniform(grid, *value))
            }
            InitialSpec::Sine {
                base,
                amplitude,
                wavenumber,
                axis,
            } => {
                if *axis >= grid.dim() {
                    return Err(Error::Config(format!(
                        "sine axis {axis} out of range for dim {}",
                        grid.dim()
                    )));
                }
                let (base, amp, k, ax) = (*base, *amplitude, *wavenumber as f64, *axis);
                let len = grid.extent()[ax];
                let field = TemperatureField::from_fn(grid, |x| {
                    base + amp * (2.0 * std::f64::consts::PI * k * x[ax] / len).sin()
                })?;
                if field.min() < 0.0 {
                    return Err(Error::Config(
                        "sine profile dips below zero temperature".into(),
                    ));
                }
                Ok(field)
            }
            InitialSpec::Gaussian {
                base,
                amplitude,
                width,
            } => {
                if !(width > &0.0) {
                    return Err(Error::Config("gaussian width must be positive".into()));
                }
                let (base, amp, w) = (*base, *amplitude, *width);
                let ext = grid.extent();
                let d = grid.dim();
                let field = TemperatureField::from_fn(grid, move |x| {
                    let mut r2 = 0.0;
                    for a in 0..d {
                        let c = x[a] - 0.5 * ext[a];
                        r2 += c * c;
                    }
                    base + amp * (-r2 / (2.0 * w * w)).exp()
                })?;
                if field.min() < 0.0 {
                    return Err(Error::Config(
                        "gaussian profile dips below zero temperature".into(),
                    ));
                }
                Ok(field)
            }
            InitialSpec::File { path } => {
                let snap = crate::output::read_snapshot(path)?;
                if snap.grid != *grid {
                    return Err(Error::Config(format!(
                        "snapshot grid in {} does not match the configured grid",
                        path.display()
                    )));
                }
                TemperatureField::new(snap.temperature)
            }
        }
    }
}

impl SweepConfig {
    /// Canonical serialized form, used for hashing sweep outputs.
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialize error: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let eps = &self.sweep.epsilons;
        if eps.len() < 3 {
            return Err(Error::Config(format!(
                "sweep needs at least 3 epsilons, got {}",
                eps.len()
            )));
        }
        if eps.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("sweep epsilons must be positive".into()));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "sweep epsilons must be strictly decreasing".into(),
            ));
        }
        Ok(())
    }
}
