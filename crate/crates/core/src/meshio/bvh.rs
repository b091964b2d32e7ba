use super::trimesh::{closest_point_on_triangle, TriMesh};
use crate::geometry::{Aabb, Vec3};

pub const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
pub enum BvhNode {
    Leaf {
        bbox: Aabb,
        start: usize,
        count: usize,
    },
    Inner {
        bbox: Aabb,
        left: usize,
        right: usize,
    },
}

impl BvhNode {
    pub fn bbox(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bbox, .. } | BvhNode::Inner { bbox, .. } => bbox,
        }
    }
}

/// Axis-aligned bounding box tree over mesh triangles. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct MeshBvh {
    nodes: Vec<BvhNode>,
    /// Triangle indices, grouped contiguously per leaf.
    order: Vec<usize>,
}

impl MeshBvh {
    /// Median split along the longest axis of the centroid bounds.
    pub fn build(mesh: &TriMesh) -> Self {
        let n = mesh.triangles().len();
        let boxes: Vec<Aabb> = (0..n)
            .map(|t| Aabb::from_points(mesh.triangle(t).iter()))
            .collect();
        let centroids: Vec<Vec3> = boxes.iter().map(Aabb::center).collect();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, n, &boxes, &centroids);
        Self { nodes, order }
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn leaf_triangles(&self, start: usize, count: usize) -> &[usize] {
        &self.order[start..start + count]
    }

    /// Closest point on the mesh and the index of the triangle that attains it.
    /// Equidistant triangles resolve to the lowest index.
    pub fn closest(&self, mesh: &TriMesh, x: &Vec3) -> (Vec3, usize) {
        let mut best_d2 = f64::INFINITY;
        let mut best = (Vec3::zeros(), usize::MAX);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bbox().distance_squared(x) > best_d2 {
                continue;
            }
            match *node {
                BvhNode::Leaf { start, count, .. } => {
                    for &t in &self.order[start..start + count] {
                        let [a, b, c] = mesh.triangle(t);
                        let (cp, _) = closest_point_on_triangle(x, &a, &b, &c);
                        let d2 = (x - cp).norm_squared();
                        if d2 < best_d2 || (d2 == best_d2 && t < best.1) {
                            best_d2 = d2;
                            best = (cp, t);
                        }
                    }
                }
                BvhNode::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bbox().distance_squared(x);
                    let dr = self.nodes[right].bbox().distance_squared(x);
                    // Push the farther child first so the nearer one is visited first.
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }
}

fn build_node(
    nodes: &mut Vec<BvhNode>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let slice = &mut order[start..end];
    let bbox = slice.iter().fold(Aabb::empty(), |b, &t| b.union(&boxes[t]));
    let id = nodes.len();
    if slice.len() <= LEAF_SIZE {
        nodes.push(BvhNode::Leaf {
            bbox,
            start,
            count: slice.len(),
        });
        return id;
    }
    let cb = Aabb::from_points(slice.iter().map(|&t| &centroids[t]));
    let axis = cb.longest_axis();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    nodes.push(BvhNode::Inner {
        bbox,
        left: 0,
        right: 0,
    });
    let left = build_node(nodes, order, start, start + mid, boxes, centroids);
    let right = build_node(nodes, order, start + mid, end, boxes, centroids);
    nodes[id] = BvhNode::Inner { bbox, left, right };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshio::icosphere;

    fn strip(n: usize) -> TriMesh {
        let mut v = Vec::new();
        for i in 0..=n {
            v.push(Vec3::new(i as f64, 0.0, 0.0));
            v.push(Vec3::new(i as f64, 1.0, 0.0));
        }
        let mut t = Vec::new();
        for i in 0..n {
            t.push([2 * i, 2 * i + 2, 2 * i + 1]);
            t.push([2 * i + 1, 2 * i + 2, 2 * i + 3]);
        }
        t.truncate(n);
        TriMesh::new(v, t).unwrap()
    }

    #[test]
    fn single_triangle_is_a_leaf() {
        let m = strip(1);
        let b = MeshBvh::build(&m);
        assert_eq!(b.nodes().len(), 1);
        assert!(matches!(b.nodes()[0], BvhNode::Leaf { count: 1, .. }));
    }

    #[test]
    fn nine_triangles_split_once() {
        let m = strip(9);
        assert_eq!(m.triangles().len(), 9);
        let b = MeshBvh::build(&m);
        assert_eq!(b.nodes().len(), 3);
        assert!(matches!(b.nodes()[0], BvhNode::Inner { .. }));
    }

    #[test]
    fn structure_invariants() {
        let m = icosphere(3, 1.0);
        let b = MeshBvh::build(&m);
        let mut seen = vec![0usize; m.triangles().len()];
        for node in b.nodes() {
            match node {
                BvhNode::Leaf { bbox, start, count } => {
                    assert!(*count <= LEAF_SIZE);
                    for &t in b.leaf_triangles(*start, *count) {
                        seen[t] += 1;
                        assert!(bbox.contains(&Aabb::from_points(m.triangle(t).iter())));
                    }
                }
                BvhNode::Inner { bbox, left, right } => {
                    assert!(bbox.contains(b.nodes()[*left].bbox()));
                    assert!(bbox.contains(b.nodes()[*right].bbox()));
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn build_is_deterministic() {
        let m = icosphere(2, 1.0);
        let a = MeshBvh::build(&m);
        let b = MeshBvh::build(&m);
        assert_eq!(a.order, b.order);
    }
}
