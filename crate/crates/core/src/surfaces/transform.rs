use super::{ClosestPointField, CpResult, SurfaceError};
use crate::geometry::{orthogonality_defect, Aabb, Mat3, Vec3};

/// Image of a surface under `x ↦ s·Q·x + t` with `Q` orthogonal and `s > 0`.
///
/// `cp′(x) = s·Q·cp(Qᵀ(x − t)/s) + t`.
pub struct Transformed<S> {
    inner: S,
    rotation: Mat3,
    scale: f64,
    translation: Vec3,
}

impl<S: ClosestPointField> Transformed<S> {
    pub fn new(
        inner: S,
        rotation: Mat3,
        scale: f64,
        translation: Vec3,
    ) -> Result<Self, SurfaceError> {
        let defect = orthogonality_defect(&rotation);
        if !(defect <= 1e-12) {
            return Err(SurfaceError::InvalidTransform(format!(
                "rotation is not orthogonal (|QᵀQ − I|max = {defect:e})"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(SurfaceError::InvalidTransform(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if inner.embedding_dim() == 2 {
            // Planar problems only admit in-plane motions.
            let planar = (rotation[(2, 2)] - 1.0).abs() <= 1e-12
                && rotation[(0, 2)].abs() <= 1e-12
                && rotation[(1, 2)].abs() <= 1e-12
                && translation.z == 0.0;
            if !planar {
                return Err(SurfaceError::InvalidTransform(
                    "planar curves only admit rotations about z and in-plane translations".into(),
                ));
            }
        }
        Ok(Self {
            inner,
            rotation,
            scale,
            translation,
        })
    }

    fn forward(&self, p: &Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }
}

impl<S: ClosestPointField> ClosestPointField for Transformed<S> {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let local = self.rotation.transpose() * (x - self.translation) / self.scale;
        let r = self.inner.closest_point(&local)?;
        Ok(CpResult::new(x, self.forward(&r.cp), r.on_boundary))
    }

    fn embedding_dim(&self) -> usize {
        self.inner.embedding_dim()
    }

    fn bounding_box(&self) -> Aabb {
        let b =
            self.inner
                .bounding_box()
                .transformed(&self.rotation, self.scale, &self.translation);
        if self.embedding_dim() == 2 {
            Aabb::new(
                Vec3::new(b.min.x, b.min.y, 0.0),
                Vec3::new(b.max.x, b.max.y, 0.0),
            )
        } else {
            b
        }
    }

    fn center(&self) -> Vec3 {
        self.forward(&self.inner.center())
    }

    fn has_boundary(&self) -> bool {
        self.inner.has_boundary()
    }

    fn diameter(&self) -> f64 {
        self.scale * self.inner.diameter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::axis_angle_matrix;
    use crate::surfaces::{Sphere, Torus};

    #[test]
    fn identity_is_transparent() {
        let t = Transformed::new(Sphere::new(1.0), Mat3::identity(), 1.0, Vec3::zeros()).unwrap();
        let s = Sphere::new(1.0);
        for x in [Vec3::new(0.3, 0.2, -1.5), Vec3::new(2.0, 1.0, 0.0)] {
            assert_eq!(
                t.closest_point(&x).unwrap().cp,
                s.closest_point(&x).unwrap().cp
            );
        }
    }

    #[test]
    fn rotated_sphere_is_unchanged() {
        let q = axis_angle_matrix(&Vec3::z(), std::f64::consts::FRAC_PI_4);
        let t = Transformed::new(Sphere::new(1.0), q, 1.0, Vec3::zeros()).unwrap();
        let s = Sphere::new(1.0);
        for x in [Vec3::new(0.3, 0.2, -1.5), Vec3::new(2.0, 1.0, 0.0)] {
            let a = t.closest_point(&x).unwrap().cp;
            let b = s.closest_point(&x).unwrap().cp;
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn scaled_torus_matches_bigger_torus() {
        let small = Torus {
            major_radius: 1.0,
            minor_radius: 0.5,
        };
        let t = Transformed::new(small, Mat3::identity(), 2.0, Vec3::zeros()).unwrap();
        let r = t.closest_point(&Vec3::new(4.0, 0.0, 0.0)).unwrap();
        assert!((r.cp - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-14);
        assert!((r.dist - 1.0).abs() < 1e-14);
        let big = Torus {
            major_radius: 2.0,
            minor_radius: 1.0,
        };
        let x = Vec3::new(0.7, -2.2, 0.4);
        let a = t.closest_point(&x).unwrap();
        let b = big.closest_point(&x).unwrap();
        assert!((a.cp - b.cp).norm() < 1e-14);
    }

    #[test]
    fn non_orthogonal_rejected() {
        let mut q = Mat3::identity();
        q[(0, 1)] = 1e-6;
        assert!(matches!(
            Transformed::new(Sphere::new(1.0), q, 1.0, Vec3::zeros()),
            Err(SurfaceError::InvalidTransform(_))
        ));
    }
}
