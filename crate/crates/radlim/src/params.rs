//! Physical and scaling parameters.
//!
//! All unit constants of the underlying model (conductivity, opacity,
//! convective coefficient, light speed) are fixed to one and the radiation
//! constant is chosen so the black-body source is exactly `T^4`; they are
//! never stored. What remains are the scaling parameter `ε`, the wall
//! reflectivity mix `α`, the Robin exponent `r`, and the choice of
//! temperature boundary regime.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Temperature boundary regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    /// Periodic box, no walls.
    Torus,
    /// `T = T_b` on the walls.
    Dirichlet,
    /// `ε^r n·∇T = T_b − T` on the walls.
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Ratio of photon mean free path to domain scale; multiplies transport
    /// by `1/ε` and relaxation by `1/ε²`.
    pub epsilon: f64,
    /// Fraction of the incoming wall intensity supplied from outside; the
    /// remaining `1−α` is specularly reflected.
    pub alpha: f64,
    /// Robin exponent `r ≥ 0`; only meaningful in [`BcMode::Robin`].
    pub robin_r: f64,
    pub bc_mode: BcMode,
}

impl Params {
    pub fn new(epsilon: f64, alpha: f64, robin_r: f64, bc_mode: BcMode) -> Result<Self> {
        let p = Self {
            epsilon,
            alpha,
            robin_r,
            bc_mode,
        };
        p.validate()?;
        Ok(p)
    }

    /// Torus parameters with the given `ε`; `α` is irrelevant without walls
    /// but kept in range.
    pub fn torus(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.5, 0.0, BcMode::Torus)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Params(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Params(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.robin_r >= 0.0) || !self.robin_r.is_finite() {
            return Err(Error::Params(format!(
                "robin_r must be >= 0, got {}",
                self.robin_r
            )));
        }
        Ok(())
    }

    /// `ε^r`, the coefficient of the normal derivative in the Robin wall law.
    pub fn robin_coefficient(&self) -> f64 {
        self.epsilon.powf(self.robin_r)
    }

    /// Checks box/torus consistency against a grid's periodicity.
    pub fn check_grid(&self, grid: &crate::grid::SpatialGrid) -> Result<()> {
        match self.bc_mode {
            BcMode::Torus => {
                if !grid.fully_periodic() {
                    return Err(Error::Params(
                        "torus mode requires all active axes periodic".into(),
                    ));
                }
            }
            BcMode::Dirichlet | BcMode::Robin => {
                if !grid.fully_walled() {
                    return Err(Error::Params(
                        "dirichlet/robin modes require all active axes non-periodic".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn validation() {
        assert!(Params::new(0.1, 0.5, 0.0, BcMode::Torus).is_ok());
        assert!(Params::new(0.0, 0.5, 0.0, BcMode::Torus).is_err());
        assert!(Params::new(0.1, 0.0, 0.0, BcMode::Torus).is_err());
        assert!(Params::new(0.1, 1.0, 0.0, BcMode::Torus).is_err());
        assert!(Params::new(0.1, 0.5, -1.0, BcMode::Robin).is_err());
    }

    #[test]
    fn grid_consistency() {
        let torus = make_grid(1, &[4], &[1.0], &[true]).unwrap();
        let box1 = make_grid(1, &[4], &[1.0], &[false]).unwrap();
        let p = Params::new(0.1, 0.5, 0.0, BcMode::Torus).unwrap();
        assert!(p.check_grid(&torus).is_ok());
        assert!(p.check_grid(&box1).is_err());
        let p = Params::new(0.1, 0.5, 1.0, BcMode::Robin).unwrap();
        assert!(p.check_grid(&box1).is_ok());
        assert!(p.check_grid(&torus).is_err());
    }

    #[test]
    fn robin_coefficient_powers() {
        let p = Params::new(0.25, 0.5, 2.0, BcMode::Robin).unwrap();
        assert!((p.robin_coefficient() - 0.0625).abs() < 1e-15);
        let p = Params::new(0.25, 0.5, 0.0, BcMode::Robin).unwrap();
        assert!((p.robin_coefficient() - 1.0).abs() < 1e-15);
    }
}
