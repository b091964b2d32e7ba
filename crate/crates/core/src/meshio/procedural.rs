use super::{MeshError, TriMesh};
use crate::geometry::Vec3;
use std::collections::HashMap;

/// Icosahedron refined `level` times by edge midpoint subdivision, with all
/// vertices projected to the sphere of radius `radius`. It has `20·4^level`
/// triangles.
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    TriMesh::new(vertices, faces).expect("icosphere is well formed")
}

/// Keeps the triangles whose centroid has `z >= z_cut`, dropping unused vertices.
pub fn cut_below(mesh: &TriMesh, z_cut: f64) -> Result<TriMesh, MeshError> {
    let mut remap = vec![usize::MAX; mesh.vertices().len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = mesh.triangle(t);
        if (a.z + b.z + c.z) / 3.0 < z_cut {
            continue;
        }
        triangles.push(tri.map(|i| {
            if remap[i] == usize::MAX {
                remap[i] = vertices.len();
                vertices.push(mesh.vertices()[i]);
            }
            remap[i]
        }));
    }
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    TriMesh::new(vertices, triangles)
}
