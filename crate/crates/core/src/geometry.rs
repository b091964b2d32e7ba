//! Small geometric vocabulary shared by the surface, band and mesh modules.
//!
//! Points are always stored in three components. Planar (2D) problems keep
//! `z == 0` and simply ignore the third axis.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// The empty box; growing it by any point yields that point.
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn longest_axis(&self) -> usize {
        self.extent().imax()
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && self.max[a] >= other.max[a])
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let v = p[a];
            if v < self.min[a] {
                d2 += (self.min[a] - v).powi(2);
            } else if v > self.max[a] {
                d2 += (v - self.max[a]).powi(2);
            }
        }
        d2
    }

    /// Bounding box of the image of this box under `x ↦ s·Q·x + t`.
    pub fn transformed(&self, rotation: &Mat3, scale: f64, translation: &Vec3) -> Aabb {
        let mut out = Aabb::empty();
        for corner in 0..8 {
            let c = Vec3::new(
                if corner & 1 == 0 {
                    self.min.x
                } else {
                    self.max.x
                },
                if corner & 2 == 0 {
                    self.min.y
                } else {
                    self.max.y
                },
                if corner & 4 == 0 {
                    self.min.z
                } else {
                    self.max.z
                },
            );
            out.grow(&(rotation * c * scale + translation));
        }
        out
    }
}

/// Maximum absolute entry of `QᵀQ − I`.
pub fn orthogonality_defect(q: &Mat3) -> f64 {
    (q.transpose() * q - Mat3::identity()).abs().max()
}

/// Rotation matrix for a rotation by `angle` radians about `axis`.
pub fn axis_angle_matrix(axis: &Vec3, angle: f64) -> Mat3 {
    let n = axis.norm();
    if n == 0.0 || angle == 0.0 {
        return Mat3::identity();
    }
    let unit = nalgebra::Unit::new_unchecked(axis / n);
    *nalgebra::Rotation3::from_axis_angle(&unit, angle).matrix()
}

/// Axis–angle decomposition of a proper rotation. Identity maps to `((0,0,1), 0)`.
pub fn matrix_axis_angle(q: &Mat3) -> (Vec3, f64) {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(*q);
    match rot.axis_angle() {
        Some((axis, angle)) => (axis.into_inner(), angle),
        None => (Vec3::z(), 0.0),
    }
}
