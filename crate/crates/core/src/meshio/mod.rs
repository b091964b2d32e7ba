//! Triangle meshes as closest point surfaces: OBJ ingestion, a BVH over the
//! triangles, exact point–triangle projection, and a few procedural meshes.

mod bvh;
mod obj;
mod procedural;
mod trimesh;

pub use bvh::{BvhNode, MeshBvh, LEAF_SIZE};
pub use obj::{parse_obj, read_obj_file};
pub use procedural::{cut_below, icosphere};
pub use trimesh::{closest_point_on_triangle, TriMesh, TriangleRegion};

use crate::geometry::{Aabb, Vec3};
use crate::surfaces::{ClosestPointField, CpResult, SurfaceError, BOUNDARY_TOL_REL};

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: vertex index {index} out of range ({count} vertices)")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("mesh has no triangles")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A triangle mesh with its BVH, queried as a closest point field.
pub struct MeshSurface {
    mesh: TriMesh,
    bvh: MeshBvh,
    bbox: Aabb,
    boundary_tol: f64,
}

impl MeshSurface {
    pub fn new(mesh: TriMesh) -> Self {
        let bvh = MeshBvh::build(&mesh);
        let bbox = mesh.bounding_box();
        let boundary_tol = BOUNDARY_TOL_REL * bbox.diagonal();
        Self {
            mesh,
            bvh,
            bbox,
            boundary_tol,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &MeshBvh {
        &self.bvh
    }

    /// BVH-accelerated closest point; returns the result and the winning triangle.
    pub fn query(&self, x: &Vec3) -> (CpResult, usize) {
        let (cp, tri) = self.bvh.closest(&self.mesh, x);
        let on_boundary = self.mesh.is_near_boundary(tri, &cp, self.boundary_tol);
        (CpResult::new(x, cp, on_boundary), tri)
    }
}

impl ClosestPointField for MeshSurface {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        Ok(self.query(x).0)
    }

    fn embedding_dim(&self) -> usize {
        3
    }

    fn bounding_box(&self) -> Aabb {
        self.bbox
    }

    fn has_boundary(&self) -> bool {
        !self.mesh.boundary_edges().is_empty()
    }

    fn boundary_tol(&self) -> f64 {
        self.boundary_tol
    }
}
