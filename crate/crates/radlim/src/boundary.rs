//! Boundary data for the walls: wall temperature `T_b` and incoming wall
//! intensity `ψ_b`, supplied as callables of time, surface point and (for
//! `ψ_b`) direction. A tabulated form loadable from a JSON file covers the
//! common space-uniform, piecewise-linear-in-time case.

use crate::error::{Error, Result};
use serde::Deserialize;
use std::sync::Arc;

pub type TbFn = Arc<dyn Fn(f64, [f64; 3]) -> f64 + Send + Sync>;
pub type PsibFn = Arc<dyn Fn(f64, [f64; 3], [f64; 3]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct BoundaryData {
    tb: TbFn,
    psib: PsibFn,
    well_prepared: bool,
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryData")
            .field("well_prepared", &self.well_prepared)
            .finish()
    }
}

impl BoundaryData {
    /// General constructor. When `well_prepared` is claimed, the pair is
    /// checked on a deterministic sample so that `ψ_b = T_b^4` really holds.
    pub fn new(tb: TbFn, psib: PsibFn, well_prepared: bool) -> Result<Self> {
        let bd = Self {
            tb,
            psib,
            well_prepared,
        };
        if well_prepared {
            bd.check_well_prepared()?;
        }
        Ok(bd)
    }

    /// Constant wall temperature with the matching equilibrium intensity.
    pub fn uniform(tb: f64) -> Result<Self> {
        if !(tb > 0.0) {
            return Err(Error::Boundary(format!(
                "wall temperature must be positive, got {tb}"
            )));
        }
        let psib = tb.powi(4);
        Self::new(
            Arc::new(move |_, _| tb),
            Arc::new(move |_, _, _| psib),
            true,
        )
    }

    /// Well-prepared data from a wall-temperature function alone.
    pub fn well_prepared_from(tb: TbFn) -> Result<Self> {
        let tb2 = tb.clone();
        Self::new(tb, Arc::new(move |t, x, _| tb2(t, x).powi(4)), true)
    }

    /// Loads a tabulated wall temperature from JSON: `{"times": [...],
    /// "tb": [...]}`, space-uniform and piecewise linear in time, with the
    /// equilibrium intensity attached.
    pub fn from_table_file(path: &std::path::Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Table {
            times: Vec<f64>,
            tb: Vec<f64>,
        }
        let text = std::fs::read_to_string(path)?;
        let table: Table = serde_json::from_str(&text)
            .map_err(|e| Error::Boundary(format!("cannot parse {}: {e}", path.display())))?;
        if table.times.len() != table.tb.len() || table.times.is_empty() {
            return Err(Error::Boundary(
                "boundary table needs equal, nonempty times/tb lists".into(),
            ));
        }
        if table.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Boundary(
                "boundary table times must be strictly increasing".into(),
            ));
        }
        if table.tb.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Boundary(
                "boundary table temperatures must be positive".into(),
            ));
        }
        let times = table.times;
        let tb = table.tb;
        let lookup = move |t: f64| -> f64 {
            if t <= times[0] {
                return tb[0];
            }
            if t >= *times.last().unwrap() {
                return *tb.last().unwrap();
            }
            let k = times.partition_point(|&u| u <= t) - 1;
            let s = (t - times[k]) / (times[k + 1] - times[k]);
            tb[k] + s * (tb[k + 1] - tb[k])
        };
        Self::well_prepared_from(Arc::new(move |t, _| lookup(t)))
    }

    pub fn well_prepared(&self) -> bool {
        self.well_prepared
    }

    /// Wall temperature at `(t, x)`; errors if the supplied data is not
    /// positive there.
    pub fn tb(&self, t: f64, x: [f64; 3]) -> f64 {
        (self.tb)(t, x)
    }

    pub fn psib(&self, t: f64, x: [f64; 3], beta: [f64; 3]) -> f64 {
        (self.psib)(t, x, beta)
    }

    /// Validates positivity of `T_b` and (if claimed) `ψ_b = T_b^4` over a
    /// small deterministic sample of arguments.
    pub fn check_well_prepared(&self) -> Result<()> {
        let dirs = [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 0.6, 0.8],
            [0.36, -0.48, 0.8],
        ];
        for &t in &[0.0, 0.013, 0.5, 1.7] {
            for &xi in &[0.0, 0.25, 1.0] {
                let x = [xi, 0.5 * xi, 0.0];
                let tb = self.tb(t, x);
                if !(tb > 0.0) || !tb.is_finite() {
                    return Err(Error::Boundary(format!(
                        "T_b must be positive; got {tb} at t={t}, x={x:?}"
                    )));
                }
                if self.well_prepared {
                    let eq = tb.powi(4);
                    for d in dirs {
                        let pb = self.psib(t, x, d);
                        if (pb - eq).abs() > 1e-12 * eq.max(1.0) {
                            return Err(Error::Boundary(format!(
                                "well-prepared flag set but psi_b={pb} != T_b^4={eq} at t={t}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
