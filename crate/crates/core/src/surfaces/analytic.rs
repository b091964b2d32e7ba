use super::{ClosestPointField, CpResult, SurfaceError};
use crate::geometry::{Aabb, Vec3};
use std::f64::consts::TAU;

/// Circle of radius `radius` in the plane `z = center.z`.
///
/// With `embed_dim == 2` the circle lives in the xy-plane of a 2D problem;
/// with `embed_dim == 3` it is a closed space curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub radius: f64,
    pub center: Vec3,
    pub embed_dim: usize,
}

impl Circle {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            center: Vec3::zeros(),
            embed_dim: 2,
        }
    }

    pub fn in_space(radius: f64) -> Self {
        Self {
            embed_dim: 3,
            ..Self::new(radius)
        }
    }
}

impl ClosestPointField for Circle {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let d = x - self.center;
        let rho = d.x.hypot(d.y);
        let (cx, cy) = if rho > 0.0 {
            (d.x / rho, d.y / rho)
        } else {
            (1.0, 0.0)
        };
        let cp = self.center + Vec3::new(self.radius * cx, self.radius * cy, 0.0);
        Ok(CpResult::new(x, cp, false))
    }

    fn embedding_dim(&self) -> usize {
        self.embed_dim
    }

    fn bounding_box(&self) -> Aabb {
        let r = Vec3::new(self.radius, self.radius, 0.0);
        Aabb::new(self.center - r, self.center + r)
    }

    fn center(&self) -> Vec3 {
        self.center
    }

    fn has_boundary(&self) -> bool {
        false
    }
}

/// Open circular arc in the plane, centred at the origin, running
/// counter-clockwise from `start_angle` through `extent` radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub radius: f64,
    pub start_angle: f64,
    pub extent: f64,
}

impl Arc {
    fn endpoint(&self, angle: f64) -> Vec3 {
        Vec3::new(self.radius * angle.cos(), self.radius * angle.sin(), 0.0)
    }
}

impl ClosestPointField for Arc {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let rho = x.x.hypot(x.y);
        let theta = if rho > 0.0 { x.y.atan2(x.x) } else { 0.0 };
        let rel = (theta - self.start_angle).rem_euclid(TAU);
        let ang_tol = self.boundary_tol() / self.radius;
        if rel <= self.extent {
            let (s, c) = theta.sin_cos();
            let cp = Vec3::new(self.radius * c, self.radius * s, 0.0);
            let on_boundary = rel <= ang_tol || self.extent - rel <= ang_tol;
            return Ok(CpResult::new(x, cp, on_boundary));
        }
        let p0 = self.endpoint(self.start_angle);
        let p1 = self.endpoint(self.start_angle + self.extent);
        let x2 = Vec3::new(x.x, x.y, 0.0);
        let cp = if (x2 - p1).norm_squared() < (x2 - p0).norm_squared() {
            p1
        } else {
            p0
        };
        Ok(CpResult::new(x, cp, true))
    }

    fn embedding_dim(&self) -> usize {
        2
    }

    fn bounding_box(&self) -> Aabb {
        // Sample densely enough that the box is exact up to the endpoints and
        // the axis crossings inside the arc.
        let mut b = Aabb::empty();
        b.grow(&self.endpoint(self.start_angle));
        b.grow(&self.endpoint(self.start_angle + self.extent));
        for q in 0..8 {
            let a = q as f64 * TAU / 4.0;
            let rel = (a - self.start_angle).rem_euclid(TAU);
            if rel <= self.extent {
                b.grow(&self.endpoint(a));
            }
        }
        b
    }

    fn center(&self) -> Vec3 {
        Vec3::zeros()
    }

    fn has_boundary(&self) -> bool {
        true
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub radius: f64,
    pub center: Vec3,
}

impl Sphere {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            center: Vec3::zeros(),
        }
    }
}

impl ClosestPointField for Sphere {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let d = x - self.center;
        let n = d.norm();
        let dir = if n > 0.0 { d / n } else { Vec3::z() };
        Ok(CpResult::new(x, self.center + dir * self.radius, false))
    }

    fn embedding_dim(&self) -> usize {
        3
    }

    fn bounding_box(&self) -> Aabb {
        let r = Vec3::repeat(self.radius);
        Aabb::new(self.center - r, self.center + r)
    }

    fn center(&self) -> Vec3 {
        self.center
    }

    fn has_boundary(&self) -> bool {
        false
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Upper half (`z >= 0`) of the origin-centred sphere; its rim is the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Hemisphere {
    pub radius: f64,
}

impl ClosestPointField for Hemisphere {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let r = self.radius;
        let n = x.norm();
        if n == 0.0 {
            return Ok(CpResult::new(x, Vec3::new(0.0, 0.0, r), false));
        }
        let radial = x * (r / n);
        if radial.z >= 0.0 {
            let on_boundary = radial.z <= self.boundary_tol();
            return Ok(CpResult::new(x, radial, on_boundary));
        }
        let rho = x.x.hypot(x.y);
        let cp = if rho > 0.0 {
            Vec3::new(r * x.x / rho, r * x.y / rho, 0.0)
        } else {
            Vec3::new(r, 0.0, 0.0)
        };
        Ok(CpResult::new(x, cp, true))
    }

    fn embedding_dim(&self) -> usize {
        3
    }

    fn bounding_box(&self) -> Aabb {
        let r = self.radius;
        Aabb::new(Vec3::new(-r, -r, 0.0), Vec3::new(r, r, r))
    }

    fn center(&self) -> Vec3 {
        Vec3::zeros()
    }

    fn has_boundary(&self) -> bool {
        true
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Torus around the z-axis with its core circle in the plane `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Torus {
    pub major_radius: f64,
    pub minor_radius: f64,
}

impl ClosestPointField for Torus {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let rho = x.x.hypot(x.y);
        let radial = if rho > 0.0 {
            Vec3::new(x.x / rho, x.y / rho, 0.0)
        } else {
            Vec3::x()
        };
        let core = radial * self.major_radius;
        let d = x - core;
        let n = d.norm();
        let dir = if n > 0.0 { d / n } else { radial };
        Ok(CpResult::new(x, core + dir * self.minor_radius, false))
    }

    fn embedding_dim(&self) -> usize {
        3
    }

    fn bounding_box(&self) -> Aabb {
        let o = self.major_radius + self.minor_radius;
        let r = self.minor_radius;
        Aabb::new(Vec3::new(-o, -o, -r), Vec3::new(o, o, r))
    }

    fn center(&self) -> Vec3 {
        Vec3::zeros()
    }

    fn has_boundary(&self) -> bool {
        false
    }
}

/// Axis-aligned, origin-centred ellipsoid with semi-axes `(a, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub semi_axes: [f64; 3],
}

const ELLIPSOID_MAX_ITER: usize = 100;

impl Ellipsoid {
    /// Constraint residual `Σ (aᵢ yᵢ / (aᵢ² + t))² − 1` and its derivative.
    fn secular(&self, y: &[f64; 3], t: f64) -> (f64, f64) {
        let mut f = -1.0;
        let mut df = 0.0;
        for i in 0..3 {
            if y[i] > 0.0 {
                let a2 = self.semi_axes[i] * self.semi_axes[i];
                let q = self.semi_axes[i] * y[i] / (a2 + t);
                f += q * q;
                df -= 2.0 * q * q / (a2 + t);
            }
        }
        (f, df)
    }

    /// Lagrange multiplier of the foot point for a query in the first octant.
    fn multiplier(&self, y: &[f64; 3]) -> Result<f64, SurfaceError> {
        let a = &self.semi_axes;
        let mut lo = f64::NEG_INFINITY;
        let mut amin2 = f64::INFINITY;
        let mut sum_ay2 = 0.0;
        for i in 0..3 {
            if y[i] > 0.0 {
                lo = lo.max(a[i] * y[i] - a[i] * a[i]);
                amin2 = amin2.min(a[i] * a[i]);
                sum_ay2 += (a[i] * y[i]).powi(2);
            }
        }
        // F(lo) >= 0 >= F(hi), F convex and decreasing in between.
        let mut hi = (sum_ay2.sqrt() - amin2).max(lo);
        let mut t = lo;
        for _ in 0..ELLIPSOID_MAX_ITER {
            let (f, df) = self.secular(y, t);
            if f.abs() < 1e-12 {
                return Ok(t);
            }
            if f > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let mut next = if df < 0.0 { t - f / df } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) {
                return Ok(next);
            }
            t = next;
        }
        Err(SurfaceError::IterationFailure {
            what: "ellipsoid foot point",
            iterations: ELLIPSOID_MAX_ITER,
        })
    }
}

impl ClosestPointField for Ellipsoid {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let a = &self.semi_axes;
        let y = [x.x.abs(), x.y.abs(), x.z.abs()];
        let mut p = [0.0; 3];
        if y.iter().all(|&v| v == 0.0) {
            let j = (0..3).min_by(|&i, &k| a[i].total_cmp(&a[k])).unwrap();
            p[j] = a[j];
        } else {
            let t = self.multiplier(&y)?;
            // An axis with zero coordinate and a²+t < 0 means the query is
            // inside and off the unique-foot region: the multiplier sticks
            // at −a_j² and the free coordinate comes from the constraint.
            let degenerate = (0..3)
                .filter(|&j| y[j] == 0.0)
                .min_by(|&i, &k| a[i].total_cmp(&a[k]))
                .filter(|&j| a[j] * a[j] + t < 0.0);
            match degenerate {
                Some(j) => {
                    let tj = -a[j] * a[j];
                    let mut s = 0.0;
                    for i in 0..3 {
                        if y[i] > 0.0 {
                            p[i] = a[i] * a[i] * y[i] / (a[i] * a[i] + tj);
                            s += (p[i] / a[i]).powi(2);
                        }
                    }
                    p[j] = a[j] * (1.0 - s).max(0.0).sqrt();
                }
                None => {
                    for i in 0..3 {
                        if y[i] > 0.0 {
                            p[i] = a[i] * a[i] * y[i] / (a[i] * a[i] + t);
                        }
                    }
                }
            }
        }
        let cp = Vec3::new(
            p[0].copysign(sign_or_pos(x.x)),
            p[1].copysign(sign_or_pos(x.y)),
            p[2].copysign(sign_or_pos(x.z)),
        );
        Ok(CpResult::new(x, cp, false))
    }

    fn embedding_dim(&self) -> usize {
        3
    }

    fn bounding_box(&self) -> Aabb {
        let e = Vec3::new(self.semi_axes[0], self.semi_axes[1], self.semi_axes[2]);
        Aabb::new(-e, e)
    }

    fn center(&self) -> Vec3 {
        Vec3::zeros()
    }

    fn has_boundary(&self) -> bool {
        false
    }
}

fn sign_or_pos(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}
