//! Closest point representations of curves and surfaces.
//!
//! Every surface is queried through [`ClosestPointField`], which maps an
//! ambient point `x` to its closest point `cp(x)` on the surface, the distance
//! `|x - cp(x)|` and whether `cp(x)` sits on the surface boundary.
//!
//! Queries exactly on a medial axis (sphere centre, torus axis, the axis of a
//! hemisphere below its rim) have no unique answer. They return a fixed
//! representative: the `+z` pole for spheres and the `+x` direction
//! everywhere else. With the band origin offset by half a cell these points
//! never become grid points.

mod analytic;
mod parametric;
mod spec;
mod transform;

pub use analytic::{Arc, Circle, Ellipsoid, Hemisphere, Sphere, Torus};
pub use parametric::{Chart, MobiusChart, ParamAxis, ParametricSurface, SphereChart};
pub use spec::{BoundaryCondition, ChartKind, SurfaceKind, SurfaceSpec, Transform};
pub use transform::Transformed;

use crate::geometry::{Aabb, Vec3};

/// Relative tolerance (times the surface diameter) for flagging boundary hits.
pub const BOUNDARY_TOL_REL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum SurfaceError {
    #[error("{what}: iteration did not converge after {iterations} iterations")]
    IterationFailure {
        what: &'static str,
        iterations: usize,
    },
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid surface specification: {0}")]
    InvalidSpec(String),
    #[error("mesh: {0}")]
    Mesh(#[from] crate::meshio::MeshError),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("surface json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Result of a closest point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpResult {
    pub cp: Vec3,
    pub dist: f64,
    pub on_boundary: bool,
}

impl CpResult {
    pub fn new(x: &Vec3, cp: Vec3, on_boundary: bool) -> Self {
        Self {
            cp,
            dist: (x - cp).norm(),
            on_boundary,
        }
    }
}

/// A surface (or curve) that can answer closest point queries.
///
/// Implementations are immutable and must be safe to query from many threads.
pub trait ClosestPointField: Send + Sync {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError>;

    /// Dimension of the embedding space, 2 or 3.
    fn embedding_dim(&self) -> usize;

    /// Bounding box of the surface itself (not of the band).
    fn bounding_box(&self) -> Aabb;

    /// Point the computational grid is anchored around.
    fn center(&self) -> Vec3 {
        self.bounding_box().center()
    }

    fn has_boundary(&self) -> bool;

    fn diameter(&self) -> f64 {
        self.bounding_box().diagonal()
    }

    fn boundary_tol(&self) -> f64 {
        BOUNDARY_TOL_REL * self.diameter()
    }
}

impl<T: ClosestPointField + ?Sized> ClosestPointField for Box<T> {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        (**self).closest_point(x)
    }
    fn embedding_dim(&self) -> usize {
        (**self).embedding_dim()
    }
    fn bounding_box(&self) -> Aabb {
        (**self).bounding_box()
    }
    fn center(&self) -> Vec3 {
        (**self).center()
    }
    fn has_boundary(&self) -> bool {
        (**self).has_boundary()
    }
    fn diameter(&self) -> f64 {
        (**self).diameter()
    }
    fn boundary_tol(&self) -> f64 {
        (**self).boundary_tol()
    }
}

impl<T: ClosestPointField + ?Sized> ClosestPointField for std::sync::Arc<T> {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        (**self).closest_point(x)
    }
    fn embedding_dim(&self) -> usize {
        (**self).embedding_dim()
    }
    fn bounding_box(&self) -> Aabb {
        (**self).bounding_box()
    }
    fn center(&self) -> Vec3 {
        (**self).center()
    }
    fn has_boundary(&self) -> bool {
        (**self).has_boundary()
    }
    fn diameter(&self) -> f64 {
        (**self).diameter()
    }
    fn boundary_tol(&self) -> f64 {
        (**self).boundary_tol()
    }
}
