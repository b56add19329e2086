//! Cell-centered spatial grids on a box or torus.
//!
//! The domain is a `dim`-dimensional box (`dim` in 1..=3). Internally every
//! grid is stored as a 3-axis grid; suppressed axes carry a single periodic
//! cell of unit extent, so fields are constant along them and the angular
//! variable still lives on the full sphere. Cell centers sit at
//! `(i + 1/2) Δx` along each axis.

use crate::error::{Error, Result};

/// Side of a boundary face along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    /// Outward unit normal of this face for the given axis.
    pub fn normal(self, axis: usize) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[axis] = match self {
            Side::Lower => -1.0,
            Side::Upper => 1.0,
        };
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    cells: [usize; 3],
    extent: [f64; 3],
    periodic: [bool; 3],
    dx: [f64; 3],
    n_cells: usize,
    cell_volume: f64,
}

/// Builds a grid; list arguments must all have length `dim`.
pub fn make_grid(
    dim: usize,
    cells_per_axis: &[usize],
    extent_per_axis: &[f64],
    periodic_per_axis: &[bool],
) -> Result<SpatialGrid> {
    SpatialGrid::new(dim, cells_per_axis, extent_per_axis, periodic_per_axis)
}

impl SpatialGrid {
    pub fn new(
        dim: usize,
        cells_per_axis: &[usize],
        extent_per_axis: &[f64],
        periodic_per_axis: &[bool],
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Grid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if cells_per_axis.len() != dim
            || extent_per_axis.len() != dim
            || periodic_per_axis.len() != dim
        {
            return Err(Error::Grid(format!(
                "axis lists must have length dim={dim} (got {}, {}, {})",
                cells_per_axis.len(),
                extent_per_axis.len(),
                periodic_per_axis.len()
            )));
        }
        let mut cells = [1usize; 3];
        let mut extent = [1.0f64; 3];
        let mut periodic = [true; 3];
        for a in 0..dim {
            if cells_per_axis[a] < 2 {
                return Err(Error::Grid(format!(
                    "axis {a} needs at least 2 cells, got {}",
                    cells_per_axis[a]
                )));
            }
            if !(extent_per_axis[a] > 0.0) || !extent_per_axis[a].is_finite() {
                return Err(Error::Grid(format!(
                    "axis {a} extent must be positive and finite, got {}",
                    extent_per_axis[a]
                )));
            }
            cells[a] = cells_per_axis[a];
            extent[a] = extent_per_axis[a];
            periodic[a] = periodic_per_axis[a];
        }
        let mut dx = [1.0f64; 3];
        let mut n_cells = 1usize;
        let mut cell_volume = 1.0f64;
        for a in 0..3 {
            dx[a] = extent[a] / cells[a] as f64;
            n_cells *= cells[a];
            if a < dim {
                cell_volume *= dx[a];
            }
        }
        Ok(Self {
            dim,
            cells,
            extent,
            periodic,
            dx,
            n_cells,
            cell_volume,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell counts including the padded single-cell suppressed axes.
    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn extent(&self) -> [f64; 3] {
        self.extent
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn dx(&self) -> [f64; 3] {
        self.dx
    }

    pub fn min_dx(&self) -> f64 {
        (0..self.dim).map(|a| self.dx[a]).fold(f64::INFINITY, f64::min)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// True when every active axis is periodic.
    pub fn fully_periodic(&self) -> bool {
        (0..self.dim).all(|a| self.periodic[a])
    }

    /// True when every active axis is non-periodic.
    pub fn fully_walled(&self) -> bool {
        (0..self.dim).all(|a| !self.periodic[a])
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.cells[1] + iy) * self.cells[0] + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let ix = idx % self.cells[0];
        let iy = (idx / self.cells[0]) % self.cells[1];
        let iz = idx / (self.cells[0] * self.cells[1]);
        [ix, iy, iz]
    }

    /// Center of cell `idx` in physical coordinates.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            (c[0] as f64 + 0.5) * self.dx[0],
            (c[1] as f64 + 0.5) * self.dx[1],
            (c[2] as f64 + 0.5) * self.dx[2],
        ]
    }

    /// Neighbor of `idx` one cell over along `axis` (`step` = ±1).
    ///
    /// Returns `None` when the neighbor would cross a non-periodic wall; on
    /// periodic axes the index wraps.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, step: i64) -> Option<usize> {
        let c = self.coords(idx);
        let n = self.cells[axis] as i64;
        let raw = c[axis] as i64 + step;
        let pos = if self.periodic[axis] {
            raw.rem_euclid(n) as usize
        } else if raw < 0 || raw >= n {
            return None;
        } else {
            raw as usize
        };
        let mut cc = c;
        cc[axis] = pos;
        Some(self.index(cc[0], cc[1], cc[2]))
    }

    /// Indices of the boundary cells on the given face, in index order.
    pub fn face_cells(&self, axis: usize, side: Side) -> Vec<usize> {
        let fixed = match side {
            Side::Lower => 0,
            Side::Upper => self.cells[axis] - 1,
        };
        let mut out = Vec::new();
        for idx in 0..self.n_cells {
            if self.coords(idx)[axis] == fixed {
                out.push(idx);
            }
        }
        out
    }

    /// Area of one boundary face cell orthogonal to `axis`.
    pub fn face_area(&self, axis: usize) -> f64 {
        let mut area = 1.0;
        for a in 0..self.dim {
            if a != axis {
                area *= self.dx[a];
            }
        }
        area
    }

    /// Physical position of the wall-face center adjacent to cell `idx`.
    pub fn face_center(&self, idx: usize, axis: usize, side: Side) -> [f64; 3] {
        let mut x = self.center(idx);
        x[axis] = match side {
            Side::Lower => 0.0,
            Side::Upper => self.extent[axis],
        };
        x
    }

    /// Active (non-suppressed, non-periodic) boundary faces as (axis, side).
    pub fn wall_faces(&self) -> Vec<(usize, Side)> {
        let mut faces = Vec::new();
        for a in 0..self.dim {
            if !self.periodic[a] {
                faces.push((a, Side::Lower));
                faces.push((a, Side::Upper));
            }
        }
        faces
    }

    /// Distance (in cells) from `idx` to the nearest non-periodic wall.
    pub fn ring_distance(&self, idx: usize) -> usize {
        let c = self.coords(idx);
        let mut d = usize::MAX;
        for a in 0..self.dim {
            if !self.periodic[a] {
                d = d.min(c[a]).min(self.cells[a] - 1 - c[a]);
            }
        }
        d
    }
}
