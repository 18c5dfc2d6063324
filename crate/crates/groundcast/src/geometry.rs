//! Planes, plane-frame bases, and orthogonal projections.
//!
//! Everything downstream of the plane fit works in a 2D frame attached to
//! the ground plane, so the conventions here are load-bearing: normals are
//! unit length with a canonical sign, bases are right-handed, and both are
//! pure functions of their inputs (identical bits in, identical bits out).

use nalgebra::Vector3;
use thiserror::Error;

/// Construction tolerance: unit normals hold to this.
pub const NORMAL_TOL: f64 = 1e-12;
/// Assertion tolerance for derived geometric quantities (basis
/// orthonormality, projection residuals).
pub const GEOM_TOL: f64 = 1e-9;
/// How far off a plane a point may sit before plane-frame coordinates are
/// refused. Loose on purpose: it only guards against pipeline ordering bugs.
pub const ON_PLANE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    /// Three sample points that are collinear or coincident span no plane.
    #[error("sample points span no plane (cross product norm {cross_norm:.3e})")]
    DegenerateSample { cross_norm: f64 },
    /// A point handed to [`to_plane_coords`] that does not lie on the plane.
    /// Seeing this means a projection stage was skipped.
    #[error("point lies {distance:.3e} m off the plane (tolerance 1e-6)")]
    OffPlanePoint { distance: f64 },
    /// A direction too short to normalize into a plane normal.
    #[error("normal vector has near-zero length {norm:.3e}")]
    ZeroNormal { norm: f64 },
}

/// A point in 3D space. Coordinates are meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    #[must_use]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Coordinate vector relative to the frame origin.
    #[must_use]
    pub fn coords(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    #[must_use]
    pub fn from_coords(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// A point in a plane's 2D frame. Coordinates are meters along the u and v
/// basis axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    #[must_use]
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// An oriented plane: a unit normal plus an anchor point on the plane.
///
/// The normal's sign is canonical (the component with the largest absolute
/// value is positive), so two fits of the same surface compare equal no
/// matter which side the samples came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    normal: Vector3<f64>,
    anchor: Point3,
}

impl PlaneModel {
    /// Builds a plane from any non-zero normal direction and an anchor
    /// point. The normal is normalized and sign-canonicalized.
    pub fn new(normal: Vector3<f64>, anchor: Point3) -> Result<Self, GeometryError> {
        let norm = normal.norm();
        if norm < NORMAL_TOL {
            return Err(GeometryError::ZeroNormal { norm });
        }
        let mut n = normal / norm;
        if dominant_component(&n) < 0.0 {
            n = -n;
        }
        Ok(Self { normal: n, anchor })
    }

    /// The horizontal floor through the origin (normal +z). Handy as a
    /// reference frame for synthetic truth.
    #[must_use]
    pub fn floor() -> Self {
        Self {
            normal: Vector3::z(),
            anchor: Point3::default(),
        }
    }

    #[must_use]
    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    #[must_use]
    pub fn anchor(&self) -> Point3 {
        self.anchor
    }
}

/// The normal component with the largest absolute value; first of x, y, z
/// wins ties so canonicalization is deterministic.
fn dominant_component(n: &Vector3<f64>) -> f64 {
    let mut best = n.x;
    for &c in &[n.y, n.z] {
        if c.abs() > best.abs() {
            best = c;
        }
    }
    best
}

/// A right-handed orthonormal 2D frame spanning a plane: (u_axis, v_axis,
/// normal) form a right-handed triad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneBasis {
    pub u_axis: Vector3<f64>,
    pub v_axis: Vector3<f64>,
}

/// Fits the plane through three points. The first point becomes the anchor.
///
/// Fails with [`GeometryError::DegenerateSample`] when the points are
/// collinear or coincident (cross product norm below 1e-12).
pub fn plane_from_three_points(
    p1: Point3,
    p2: Point3,
    p3: Point3,
) -> Result<PlaneModel, GeometryError> {
    let cross = (p2.coords() - p1.coords()).cross(&(p3.coords() - p1.coords()));
    let cross_norm = cross.norm();
    if cross_norm < NORMAL_TOL {
        return Err(GeometryError::DegenerateSample { cross_norm });
    }
    PlaneModel::new(cross, p1)
}

/// Unsigned distance from a point to a plane.
#[must_use]
pub fn distance_to_plane(p: Point3, plane: &PlaneModel) -> f64 {
    plane
        .normal()
        .dot(&(p.coords() - plane.anchor().coords()))
        .abs()
}

/// Drops a point orthogonally onto a plane.
///
/// With a unit normal n the step length is t = n . (anchor - p) and the
/// image is p + t n: the unique closest on-plane point.
#[must_use]
pub fn project_to_plane(p: Point3, plane: &PlaneModel) -> Point3 {
    let n = plane.normal();
    let t = n.dot(&(plane.anchor().coords() - p.coords()));
    Point3::from_coords(p.coords() + t * n)
}

/// Builds the canonical 2D frame for a plane.
///
/// The u axis seeds from the world axis least aligned with the normal
/// (preferring x, then y, then z on ties), made orthogonal to the normal
/// and normalized; the v axis is normal x u_axis. A pure function: the same
/// plane always yields the same basis bits.
#[must_use]
pub fn plane_basis(plane: &PlaneModel) -> PlaneBasis {
    let n = plane.normal();
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut seed = axes[0];
    let mut best = n.dot(&axes[0]).abs();
    for axis in &axes[1..] {
        let alignment = n.dot(axis).abs();
        if alignment < best {
            best = alignment;
            seed = *axis;
        }
    }
    let u_axis = (seed - n.dot(&seed) * n).normalize();
    let v_axis = n.cross(&u_axis);
    PlaneBasis { u_axis, v_axis }
}

/// Expresses an on-plane point in the plane's 2D frame.
///
/// The point must already lie on the plane (within [`ON_PLANE_TOL`]);
/// project first. Round-trips with [`from_plane_coords`] to within 1e-9.
pub fn to_plane_coords(
    p: Point3,
    plane: &PlaneModel,
    basis: &PlaneBasis,
) -> Result<Point2, GeometryError> {
    let distance = distance_to_plane(p, plane);
    if distance > ON_PLANE_TOL {
        return Err(GeometryError::OffPlanePoint { distance });
    }
    let rel = p.coords() - plane.anchor().coords();
    Ok(Point2::new(rel.dot(&basis.u_axis), rel.dot(&basis.v_axis)))
}

/// Maps plane-frame coordinates back to the 3D point anchor + u u_axis +
/// v v_axis.
#[must_use]
pub fn from_plane_coords(q: Point2, plane: &PlaneModel, basis: &PlaneBasis) -> Point3 {
    Point3::from_coords(plane.anchor().coords() + q.u * basis.u_axis + q.v * basis.v_axis)
}
