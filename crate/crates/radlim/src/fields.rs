//! Temperature and radiative-intensity fields and the coupled state.
//!
//! Fields are flat contiguous arrays over cells; the intensity additionally
//! carries one value per ordinate within each cell (ordinate index fastest),
//! which suits streaming transport sweeps.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::quadrature::AngularQuadrature;

/// Scalar temperature per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    values: Vec<f64>,
}

impl TemperatureField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Field("temperature contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn uniform(grid: &SpatialGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.n_cells()],
        }
    }

    /// Evaluates `f` at every cell center.
    pub fn from_fn(grid: &SpatialGrid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.n_cells()).map(|i| f(grid.center(i))).collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Radiative intensity per (cell, ordinate); layout `[cell * n_ord + q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityField {
    values: Vec<f64>,
    n_ord: usize,
}

impl IntensityField {
    pub fn new(values: Vec<f64>, n_ord: usize) -> Result<Self> {
        if n_ord == 0 || !values.len().is_multiple_of(n_ord) {
            return Err(Error::Field(format!(
                "intensity length {} is not a multiple of ordinate count {n_ord}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Field("intensity contains non-finite values".into()));
        }
        Ok(Self { values, n_ord })
    }

    pub fn uniform(grid: &SpatialGrid, quad: &AngularQuadrature, value: f64) -> Self {
        Self {
            values: vec![value; grid.n_cells() * quad.len()],
            n_ord: quad.len(),
        }
    }

    pub fn n_ord(&self) -> usize {
        self.n_ord
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() / self.n_ord
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Per-ordinate slice for one cell.
    #[inline]
    pub fn cell(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.n_ord..(idx + 1) * self.n_ord]
    }

    #[inline]
    pub fn cell_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.n_ord..(idx + 1) * self.n_ord]
    }

    #[inline]
    pub fn at(&self, cell: usize, q: usize) -> f64 {
        self.values[cell * self.n_ord + q]
    }

    #[inline]
    pub fn set(&mut self, cell: usize, q: usize, v: f64) {
        self.values[cell * self.n_ord + q] = v;
    }
}

/// The coupled kinetic state `(T, ψ)` at one instant.
#[derive(Debug, Clone)]
pub struct KineticState {
    pub time: f64,
    pub temperature: TemperatureField,
    pub intensity: IntensityField,
}

impl KineticState {
    pub fn new(time: f64, temperature: TemperatureField, intensity: IntensityField) -> Result<Self> {
        if temperature.len() != intensity.n_cells() {
            return Err(Error::Field(format!(
                "temperature has {} cells but intensity has {}",
                temperature.len(),
                intensity.n_cells()
            )));
        }
        if !(time >= 0.0) {
            return Err(Error::Field(format!("time must be >= 0, got {time}")));
        }
        Ok(Self {
            time,
            temperature,
            intensity,
        })
    }
}

/// Builds the local-equilibrium state `ψ(x, β) = T0(x)^4` for every ordinate.
///
/// The equality is exact: the intensity entries are computed with the same
/// fourth power as the equilibrium checks use, so `ψ − T^4` is identically
/// zero bit for bit.
pub fn well_prepared_init(
    t0: &TemperatureField,
    quad: &AngularQuadrature,
) -> Result<KineticState> {
    if t0.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Field(
            "well-prepared init requires nonnegative temperature".into(),
        ));
    }
    let n_ord = quad.len();
    let mut values = Vec::with_capacity(t0.len() * n_ord);
    for &t in t0.values() {
        let eq = t.powi(4);
        values.extend(std::iter::repeat_n(eq, n_ord));
    }
    KineticState::new(0.0, t0.clone(), IntensityField::new(values, n_ord)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn quad() -> AngularQuadrature {
        AngularQuadrature::product_rule(2, 4).unwrap()
    }

    #[test]
    fn well_prepared_uniform_one() {
        let g = make_grid(1, &[8], &[1.0], &[true]).unwrap();
        let t0 = TemperatureField::uniform(&g, 1.0);
        let s = well_prepared_init(&t0, &quad()).unwrap();
        assert!(s.intensity.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn well_prepared_uniform_two() {
        let g = make_grid(1, &[8], &[1.0], &[true]).unwrap();
        let t0 = TemperatureField::uniform(&g, 2.0);
        let s = well_prepared_init(&t0, &quad()).unwrap();
        assert!(s.intensity.values().iter().all(|&v| v == 16.0));
    }

    #[test]
    fn well_prepared_sine_profile_matches_pointwise_power() {
        let g = make_grid(1, &[32], &[1.0], &[true]).unwrap();
        let t0 = TemperatureField::from_fn(&g, |x| {
            1.0 + 0.1 * (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let s = well_prepared_init(&t0, &quad()).unwrap();
        // Independent pointwise oracle at one interior cell.
        let idx = 7;
        let x = g.center(idx)[0];
        let expect = (1.0 + 0.1 * (2.0 * std::f64::consts::PI * x).sin()).powi(4);
        for q in 0..s.intensity.n_ord() {
            assert_eq!(s.intensity.at(idx, q), expect);
        }
        // The defect is exactly zero everywhere.
        let max_defect = (0..g.n_cells())
            .flat_map(|c| {
                let t4 = s.temperature.values()[c].powi(4);
                (0..s.intensity.n_ord()).map(move |q| (c, q, t4))
            })
            .map(|(c, q, t4)| (s.intensity.at(c, q) - t4).abs())
            .fold(0.0, f64::max);
        assert_eq!(max_defect, 0.0);
    }

    #[test]
    fn well_prepared_rejects_negative_temperature() {
        let t0 = TemperatureField::new(vec![1.0, -0.5, 1.0, 1.0]).unwrap();
        assert!(well_prepared_init(&t0, &quad()).is_err());
    }

    #[test]
    fn state_requires_matching_cell_counts() {
        let g = make_grid(1, &[4], &[1.0], &[true]).unwrap();
        let t = TemperatureField::uniform(&g, 1.0);
        let psi = IntensityField::new(vec![0.0; 3 * 8], 8).unwrap();
        assert!(KineticState::new(0.0, t, psi).is_err());
    }

    #[test]
    fn fields_reject_non_finite_values() {
        assert!(TemperatureField::new(vec![1.0, f64::NAN]).is_err());
        assert!(IntensityField::new(vec![1.0, f64::INFINITY], 2).is_err());
    }
}
