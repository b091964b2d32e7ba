use super::MeshError;
use crate::geometry::{Aabb, Vec3};
use std::collections::HashMap;

/// Indexed triangle mesh.
///
/// Degenerate triangles (area ≤ 1e−14·bbox²) are dropped on construction.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    /// Per triangle: bit `e` set when edge `e` (v_e → v_{e+1}) is a boundary
    /// edge, bit `3 + v` set when vertex `v` lies on the boundary.
    boundary_bits: Vec<u8>,
    dropped: usize,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange {
                    line: t + 1,
                    index: bad as i64,
                    count: n,
                });
            }
        }
        let bbox = Aabb::from_points(vertices.iter());
        let area_tol = 1e-14 * bbox.diagonal().powi(2);
        let before = triangles.len();
        let triangles: Vec<[usize; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i]);
                0.5 * (b - a).cross(&(c - a)).norm() > area_tol
            })
            .collect();
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let dropped = before - triangles.len();
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate triangles");
        }

        let mut edge_count: HashMap<[usize; 2], u32> = HashMap::new();
        for t in &triangles {
            for e in 0..3 {
                *edge_count
                    .entry(edge_key(t[e], t[(e + 1) % 3]))
                    .or_insert(0) += 1;
            }
        }
        let mut boundary_edges: Vec<[usize; 2]> = edge_count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        boundary_edges.sort_unstable();
        let mut on_boundary = vec![false; n];
        for e in &boundary_edges {
            on_boundary[e[0]] = true;
            on_boundary[e[1]] = true;
        }
        let boundary_bits = triangles
            .iter()
            .map(|t| {
                let mut bits = 0u8;
                for e in 0..3 {
                    if edge_count[&edge_key(t[e], t[(e + 1) % 3])] == 1 {
                        bits |= 1 << e;
                    }
                    if on_boundary[t[e]] {
                        bits |= 1 << (3 + e);
                    }
                }
                bits
            })
            .collect();

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            boundary_bits,
            dropped,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Undirected edges used by exactly one triangle, as sorted index pairs.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn dropped_degenerate(&self) -> usize {
        self.dropped
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Whether `cp` (a point of triangle `t`) lies within `tol` of the mesh boundary.
    pub fn is_near_boundary(&self, t: usize, cp: &Vec3, tol: f64) -> bool {
        let bits = self.boundary_bits[t];
        if bits == 0 {
            return false;
        }
        let v = self.triangle(t);
        for e in 0..3 {
            if bits & (1 << e) != 0 && segment_distance(cp, &v[e], &v[(e + 1) % 3]) <= tol {
                return true;
            }
            if bits & (1 << (3 + e)) != 0 && (cp - v[e]).norm() <= tol {
                return true;
            }
        }
        false
    }
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Feature of the triangle that contains the closest point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleRegion {
    Vertex(u8),
    /// Edge from vertex `i` to vertex `(i + 1) % 3`.
    Edge(u8),
    Face,
}

/// Exact closest point on triangle `abc` by Voronoi-region classification.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, TriangleRegion) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, TriangleRegion::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, TriangleRegion::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, TriangleRegion::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, TriangleRegion::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, TriangleRegion::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, TriangleRegion::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, TriangleRegion::Face)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tri() -> [Vec3; 3] {
        [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn interior_projection() {
        let [a, b, c] = unit_tri();
        let (cp, region) = closest_point_on_triangle(&Vec3::new(0.25, 0.25, 1.0), &a, &b, &c);
        assert!((cp - Vec3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
        assert_eq!(region, TriangleRegion::Face);
    }

    #[test]
    fn vertex_region() {
        let [a, b, c] = unit_tri();
        let p = Vec3::new(-1.0, -1.0, 0.0);
        let (cp, region) = closest_point_on_triangle(&p, &a, &b, &c);
        assert_eq!(cp, Vec3::zeros());
        assert_eq!(region, TriangleRegion::Vertex(0));
        assert!(((p - cp).norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn edge_regions() {
        let [a, b, c] = unit_tri();
        let (cp, region) = closest_point_on_triangle(&Vec3::new(0.5, -1.0, 0.3), &a, &b, &c);
        assert!((cp - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(region, TriangleRegion::Edge(0));
        let (cp, region) = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((cp - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
        assert_eq!(region, TriangleRegion::Edge(1));
        let (cp, region) = closest_point_on_triangle(&Vec3::new(-2.0, 0.5, 0.0), &a, &b, &c);
        assert!((cp - Vec3::new(0.0, 0.5, 0.0)).norm() < 1e-15);
        assert_eq!(region, TriangleRegion::Edge(2));
    }

    #[test]
    fn boundary_edges_of_single_triangle_and_quad() {
        let [a, b, c] = unit_tri();
        let m = TriMesh::new(vec![a, b, c], vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.boundary_edges().len(), 3);
        let quad = TriMesh::new(
            vec![a, b, Vec3::new(1.0, 1.0, 0.0), c],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(quad.boundary_edges(), &[[0, 1], [0, 3], [1, 2], [2, 3]]);
    }

    #[test]
    fn degenerate_triangles_dropped() {
        let [a, b, c] = unit_tri();
        let m = TriMesh::new(
            vec![a, b, c, Vec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        assert_eq!(m.triangles().len(), 1);
        assert_eq!(m.dropped_degenerate(), 1);
    }
}
