//! Binary occupancy grids over a plane's 2D frame.
//!
//! A cell is occupied when at least one projected point falls in it:
//! column = floor((u - origin.u) / cell_size), row likewise on v, cells
//! stored row-major. The origin is the minimum corner of the bounds.

use thiserror::Error;

use crate::geometry::{
    project_to_plane, to_plane_coords, PlaneBasis, PlaneModel, Point2,
};
use crate::ransac::PointCloud;

/// Guard for near-integer extents: ceil(extent/cell - EXTENT_EPS) keeps an
/// exact 5.0 m / 0.05 m span at 100 cells instead of drifting to 101.
const EXTENT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("no points to rasterize")]
    EmptyInput,
    #[error("invalid bounds: min ({min_u}, {min_v}) must lie strictly below max ({max_u}, {max_v})")]
    InvalidBounds {
        min_u: f64,
        min_v: f64,
        max_u: f64,
        max_v: f64,
    },
    #[error("cell size must be positive and finite, got {cell_size}")]
    InvalidCellSize { cell_size: f64 },
}

/// Axis-aligned bounds in plane-frame meters, min corner inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub min: Point2,
    pub max: Point2,
}

impl Rect2 {
    #[must_use]
    pub const fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    fn validate(&self) -> Result<(), GridError> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.max.u > self.min.u
            && self.max.v > self.min.v;
        if ok {
            Ok(())
        } else {
            Err(GridError::InvalidBounds {
                min_u: self.min.u,
                min_v: self.min.v,
                max_u: self.max.u,
                max_v: self.max.v,
            })
        }
    }
}

/// A binary occupancy grid, tagged with the plane and basis its
/// coordinates live in.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    cell_size: f64,
    origin: Point2,
    width: usize,
    height: usize,
    cells: Vec<bool>,
    plane: PlaneModel,
    basis: PlaneBasis,
}

impl GridMap {
    /// Assembles a grid from parts. `cells` is row-major, `width * height`
    /// long.
    pub fn new(
        cell_size: f64,
        origin: Point2,
        width: usize,
        height: usize,
        cells: Vec<bool>,
        plane: PlaneModel,
        basis: PlaneBasis,
    ) -> Result<Self, GridError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(GridError::InvalidCellSize { cell_size });
        }
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(GridError::InvalidBounds {
                min_u: origin.u,
                min_v: origin.v,
                max_u: origin.u + width as f64 * cell_size,
                max_v: origin.v + height as f64 * cell_size,
            });
        }
        Ok(Self {
            cell_size,
            origin,
            width,
            height,
            cells,
            plane,
            basis,
        })
    }

    #[must_use]
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    #[must_use]
    pub fn origin(&self) -> Point2 {
        self.origin
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    #[must_use]
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[must_use]
    pub fn plane(&self) -> &PlaneModel {
        &self.plane
    }

    #[must_use]
    pub fn basis(&self) -> &PlaneBasis {
        &self.basis
    }

    /// Occupancy of one cell. Panics on out-of-range indices.
    #[must_use]
    pub fn cell(&self, col: usize, row: usize) -> bool {
        assert!(col < self.width && row < self.height, "cell index out of range");
        self.cells[row * self.width + col]
    }

    /// The (col, row) a point maps to, or None when it falls outside.
    #[must_use]
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let col = ((p.u - self.origin.u) / self.cell_size).floor();
        let row = ((p.v - self.origin.v) / self.cell_size).floor();
        if col >= 0.0 && row >= 0.0 && (col as usize) < self.width && (row as usize) < self.height
        {
            Some((col as usize, row as usize))
        } else {
            None
        }
    }

    /// Plane-frame position at fractional cell coordinates (measured from
    /// the origin corner).
    #[must_use]
    pub fn point_at(&self, col: f64, row: f64) -> Point2 {
        Point2::new(
            self.origin.u + col * self.cell_size,
            self.origin.v + row * self.cell_size,
        )
    }

    #[must_use]
    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

/// Projects the selected cloud points onto the plane and expresses them in
/// the plane frame, preserving index order.
#[must_use]
pub fn project_cloud(
    cloud: &PointCloud,
    indices: &[usize],
    plane: &PlaneModel,
    basis: &PlaneBasis,
) -> Vec<Point2> {
    indices
        .iter()
        .map(|&i| {
            let dropped = project_to_plane(cloud.points()[i], plane);
            // A freshly projected point is on the plane by construction.
            to_plane_coords(dropped, plane, basis)
                .expect("projected point lies on its own plane")
        })
        .collect()
}

fn span_cells(extent: f64, cell_size: f64) -> usize {
    ((extent / cell_size - EXTENT_EPS).ceil().max(1.0)) as usize
}

/// Rasterizes plane-frame points into a binary grid.
///
/// With `bounds: None` the grid covers the point bounding box expanded by
/// one cell on every side, which guarantees every input point lands in a
/// valid cell. With explicit bounds, points outside are ignored.
pub fn rasterize(
    points: &[Point2],
    cell_size: f64,
    bounds: Option<Rect2>,
    plane: &PlaneModel,
    basis: &PlaneBasis,
) -> Result<GridMap, GridError> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(GridError::InvalidCellSize { cell_size });
    }
    if points.is_empty() {
        return Err(GridError::EmptyInput);
    }

    let rect = match bounds {
        Some(r) => {
            r.validate()?;
            r
        }
        None => {
            let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
            let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in points {
                min.u = min.u.min(p.u);
                min.v = min.v.min(p.v);
                max.u = max.u.max(p.u);
                max.v = max.v.max(p.v);
            }
            Rect2::new(
                Point2::new(min.u - cell_size, min.v - cell_size),
                Point2::new(max.u + cell_size, max.v + cell_size),
            )
        }
    };

    let width = span_cells(rect.max.u - rect.min.u, cell_size);
    let height = span_cells(rect.max.v - rect.min.v, cell_size);
    let mut cells = vec![false; width * height];
    for p in points {
        let col = ((p.u - rect.min.u) / cell_size).floor();
        let row = ((p.v - rect.min.v) / cell_size).floor();
        if col >= 0.0 && row >= 0.0 {
            let (col, row) = (col as usize, row as usize);
            if col < width && row < height {
                cells[row * width + col] = true;
            }
        }
    }

    GridMap::new(cell_size, rect.min, width, height, cells, *plane, *basis)
}

/// Fraction of cells that are occupied.
#[must_use]
pub fn occupancy_fraction(grid: &GridMap) -> f64 {
    grid.occupied_count() as f64 / (grid.width() * grid.height()) as f64
}
