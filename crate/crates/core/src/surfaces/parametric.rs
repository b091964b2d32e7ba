//! Closest points on surfaces given by a single parametric chart.
//!
//! The query seeds a coarse grid in parameter space, then refines the best
//! seeds by a projected Newton iteration on `½|f(u,v) − x|²`. Non-periodic
//! parameter edges can be either true surface boundary (the rim of a Möbius
//! strip) or coordinate singularities (sphere poles); the chart says which.

use super::{ClosestPointField, CpResult, SurfaceError};
use crate::geometry::{Aabb, Vec3};
use std::f64::consts::{PI, TAU};

/// One parameter axis of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamAxis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
    /// Whether the edges of a non-periodic axis belong to the surface boundary.
    pub edges_are_boundary: bool,
}

impl ParamAxis {
    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
            edges_are_boundary: false,
        }
    }

    pub fn bounded(lo: f64, hi: f64, edges_are_boundary: bool) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
            edges_are_boundary,
        }
    }

    fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn wrap(&self, t: f64) -> f64 {
        if self.periodic {
            self.lo + (t - self.lo).rem_euclid(self.len())
        } else {
            t.clamp(self.lo, self.hi)
        }
    }

    fn sample(&self, i: usize, n: usize) -> f64 {
        if self.periodic {
            self.lo + self.len() * i as f64 / n as f64
        } else {
            self.lo + self.len() * i as f64 / (n - 1).max(1) as f64
        }
    }
}

/// A smooth map from a rectangle of parameter space into R³.
pub trait Chart: Send + Sync + std::fmt::Debug {
    fn eval(&self, u: f64, v: f64) -> Vec3;

    fn domain(&self) -> [ParamAxis; 2];

    /// First partial derivatives `(f_u, f_v)`; central differences by default.
    fn partials(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let h = 1e-6;
        (
            (self.eval(u + h, v) - self.eval(u - h, v)) / (2.0 * h),
            (self.eval(u, v + h) - self.eval(u, v - h)) / (2.0 * h),
        )
    }

    /// Second partials `(f_uu, f_uv, f_vv)` by differencing `partials`.
    fn second_partials(&self, u: f64, v: f64) -> (Vec3, Vec3, Vec3) {
        let h = 1e-5;
        let (up, vp) = self.partials(u + h, v);
        let (um, vm) = self.partials(u - h, v);
        let (_, vq) = self.partials(u, v + h);
        let (_, vr) = self.partials(u, v - h);
        (
            (up - um) / (2.0 * h),
            (vp - vm) / (2.0 * h),
            (vq - vr) / (2.0 * h),
        )
    }

    fn bounding_box(&self) -> Option<Aabb> {
        None
    }

    /// Short description recorded in output metadata.
    fn describe(&self) -> String;
}

/// Sphere of radius `radius` in longitude/colatitude coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereChart {
    pub radius: f64,
}

impl Chart for SphereChart {
    fn eval(&self, u: f64, v: f64) -> Vec3 {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        Vec3::new(sv * cu, sv * su, cv) * self.radius
    }

    fn partials(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        (
            Vec3::new(-sv * su, sv * cu, 0.0) * self.radius,
            Vec3::new(cv * cu, cv * su, -sv) * self.radius,
        )
    }

    fn domain(&self) -> [ParamAxis; 2] {
        [
            ParamAxis::periodic(0.0, TAU),
            ParamAxis::bounded(0.0, PI, false),
        ]
    }

    fn bounding_box(&self) -> Option<Aabb> {
        Some(Aabb::new(
            Vec3::repeat(-self.radius),
            Vec3::repeat(self.radius),
        ))
    }

    fn describe(&self) -> String {
        format!("sphere-chart(radius={})", self.radius)
    }
}

/// Möbius strip with one half twist: centre circle of radius `radius` in the
/// xy-plane, strip of total width `width`.
///
/// The longitude runs over `[0, 4π)` so that the chart is periodic without
/// the twist identification `f(u + 2π, v) = f(u, −v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusChart {
    pub radius: f64,
    pub width: f64,
}

impl Default for MobiusChart {
    fn default() -> Self {
        Self {
            radius: 1.0,
            width: 1.0,
        }
    }
}

impl Chart for MobiusChart {
    fn eval(&self, u: f64, v: f64) -> Vec3 {
        let (su, cu) = u.sin_cos();
        let (sh, ch) = (0.5 * u).sin_cos();
        let r = self.radius + v * ch;
        Vec3::new(r * cu, r * su, v * sh)
    }

    fn partials(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let (su, cu) = u.sin_cos();
        let (sh, ch) = (0.5 * u).sin_cos();
        let r = self.radius + v * ch;
        let dr = -0.5 * v * sh;
        (
            Vec3::new(dr * cu - r * su, dr * su + r * cu, 0.5 * v * ch),
            Vec3::new(ch * cu, ch * su, sh),
        )
    }

    fn domain(&self) -> [ParamAxis; 2] {
        let h = 0.5 * self.width;
        [
            ParamAxis::periodic(0.0, 2.0 * TAU),
            ParamAxis::bounded(-h, h, true),
        ]
    }

    fn bounding_box(&self) -> Option<Aabb> {
        let o = self.radius + 0.5 * self.width;
        let h = 0.5 * self.width;
        Some(Aabb::new(Vec3::new(-o, -o, -h), Vec3::new(o, o, h)))
    }

    fn describe(&self) -> String {
        format!("mobius(radius={}, width={})", self.radius, self.width)
    }
}

/// Closest point field of a parametric chart.
#[derive(Debug)]
pub struct ParametricSurface {
    chart: Box<dyn Chart>,
    seeds: [usize; 2],
    refine: usize,
    bbox: Aabb,
}

const NEWTON_MAX_ITER: usize = 100;

impl ParametricSurface {
    pub fn new(chart: Box<dyn Chart>) -> Self {
        Self::with_seeds(chart, [64, 64])
    }

    /// Seeding grid of `seeds[0] × seeds[1]` parameter samples.
    pub fn with_seeds(chart: Box<dyn Chart>, seeds: [usize; 2]) -> Self {
        let bbox = chart
            .bounding_box()
            .unwrap_or_else(|| sampled_box(chart.as_ref()));
        Self {
            chart,
            seeds: [seeds[0].max(2), seeds[1].max(2)],
            refine: 4,
            bbox,
        }
    }

    pub fn chart(&self) -> &dyn Chart {
        self.chart.as_ref()
    }

    fn objective(&self, x: &Vec3, u: f64, v: f64) -> f64 {
        0.5 * (self.chart.eval(u, v) - x).norm_squared()
    }

    /// Projected Newton refinement from `(u, v)`; returns the local minimiser.
    fn refine_from(&self, x: &Vec3, mut u: f64, mut v: f64) -> Result<(f64, f64), SurfaceError> {
        let dom = self.chart.domain();
        let mut phi = self.objective(x, u, v);
        for _ in 0..NEWTON_MAX_ITER {
            let r = self.chart.eval(u, v) - x;
            let (fu, fv) = self.chart.partials(u, v);
            let (fuu, fuv, fvv) = self.chart.second_partials(u, v);
            let g = [fu.dot(&r), fv.dot(&r)];
            let mut h = [
                [fu.dot(&fu) + r.dot(&fuu), fu.dot(&fv) + r.dot(&fuv)],
                [fu.dot(&fv) + r.dot(&fuv), fv.dot(&fv) + r.dot(&fvv)],
            ];
            if !(h[0][0] > 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0) {
                // Gauss–Newton fallback away from convex regions.
                h = [[fu.dot(&fu), fu.dot(&fv)], [fu.dot(&fv), fv.dot(&fv)]];
                let reg = 1e-12 * (h[0][0] + h[1][1]).max(1e-300);
                h[0][0] += reg;
                h[1][1] += reg;
            }
            // Active set: bounded axes sitting on an edge with descent pointing out.
            let pinned = [0usize, 1].map(|a| {
                let ax = dom[a];
                let t = if a == 0 { u } else { v };
                !ax.periodic && ((t <= ax.lo && g[a] > 0.0) || (t >= ax.hi && g[a] < 0.0))
            });
            let step = match pinned {
                [true, true] => [0.0, 0.0],
                [true, false] => [0.0, -g[1] / h[1][1]],
                [false, true] => [-g[0] / h[0][0], 0.0],
                [false, false] => {
                    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                    [
                        -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                        -(h[0][0] * g[1] - h[1][0] * g[0]) / det,
                    ]
                }
            };
            if step
                .iter()
                .all(|s| s.abs() <= 1e-15 * (1.0 + u.abs().max(v.abs())))
            {
                return Ok((u, v));
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let un = dom[0].wrap(u + alpha * step[0]);
                let vn = dom[1].wrap(v + alpha * step[1]);
                let pn = self.objective(x, un, vn);
                if pn < phi {
                    u = un;
                    v = vn;
                    phi = pn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // No decrease available at working precision: stationary.
                return Ok((u, v));
            }
        }
        Err(SurfaceError::IterationFailure {
            what: "parametric closest point",
            iterations: NEWTON_MAX_ITER,
        })
    }
}

fn sampled_box(chart: &dyn Chart) -> Aabb {
    let dom = chart.domain();
    let n = 256;
    let mut b = Aabb::empty();
    for i in 0..=n {
        for j in 0..=n {
            let u = dom[0].lo + dom[0].len() * i as f64 / n as f64;
            let v = dom[1].lo + dom[1].len() * j as f64 / n as f64;
            b.grow(&chart.eval(u, v));
        }
    }
    let pad = Vec3::repeat(0.01 * b.diagonal());
    Aabb::new(b.min - pad, b.max + pad)
}

impl ClosestPointField for ParametricSurface {
    fn closest_point(&self, x: &Vec3) -> Result<CpResult, SurfaceError> {
        let dom = self.chart.domain();
        let [nu, nv] = self.seeds;
        let mut seeds: Vec<(f64, f64, f64)> = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            let u = dom[0].sample(i, nu);
            for j in 0..nv {
                let v = dom[1].sample(j, nv);
                seeds.push((self.objective(x, u, v), u, v));
            }
        }
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<(f64, f64, f64)> = None;
        for &(_, u0, v0) in seeds.iter().take(self.refine) {
            let (u, v) = self.refine_from(x, u0, v0)?;
            let phi = self.objective(x, u, v);
            if best.is_none_or(|b| phi < b.0) {
                best = Some((phi, u, v));
            }
        }
        let (_, u, v) = best.expect("at least one seed");
        let mut on_boundary = false;
        for (a, t) in [(0, u), (1, v)] {
            let ax = dom[a];
            if !ax.periodic && ax.edges_are_boundary {
                let tol = 1e-9 * ax.len();
                on_boundary |= t - ax.lo <= tol || ax.hi - t <= tol;
            }
        }
        Ok(CpResult::new(x, self.chart.eval(u, v), on_boundary))
    }

    fn embedding_dim(&self) -> usize {
        3
    }

    fn bounding_box(&self) -> Aabb {
        self.bbox
    }

    fn has_boundary(&self) -> bool {
        self.chart
            .domain()
            .iter()
            .any(|a| !a.periodic && a.edges_are_boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::Sphere;

    #[test]
    fn sphere_chart_agrees_with_closed_form() {
        let p = ParametricSurface::new(Box::new(SphereChart { radius: 1.0 }));
        let s = Sphere::new(1.0);
        for x in [
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.3, -0.7, 0.4),
            Vec3::new(-1.2, 0.9, -0.5),
        ] {
            let a = p.closest_point(&x).unwrap();
            let b = s.closest_point(&x).unwrap();
            assert!(
                (a.cp - b.cp).norm() < 1e-8,
                "{x:?}: {:?} vs {:?}",
                a.cp,
                b.cp
            );
            assert!(!a.on_boundary);
        }
    }

    #[test]
    fn mobius_center_circle_is_on_surface() {
        let p = ParametricSurface::new(Box::new(MobiusChart::default()));
        for k in 0..7 {
            let t = k as f64 * 0.9;
            let x = Vec3::new(t.cos(), t.sin(), 0.0);
            let r = p.closest_point(&x).unwrap();
            assert!(r.dist < 1e-10, "dist {}", r.dist);
            assert!(!r.on_boundary);
        }
    }

    #[test]
    fn mobius_rim_is_boundary() {
        let p = ParametricSurface::new(Box::new(MobiusChart::default()));
        // Beyond the rim in the radial direction at u = 0 (strip is radial there).
        let r = p.closest_point(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!(r.on_boundary);
        assert!((r.cp - Vec3::new(1.5, 0.0, 0.0)).norm() < 1e-9);
    }
}
