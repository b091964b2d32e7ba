//! JSON description of a surface and its placement.
//!
//! ```json
//! {"kind": "torus", "params": {"major_radius": 1, "minor_radius": 0.5},
//!  "bc": "closed", "rotation_axis": [0, 0, 1], "rotation_angle": 0.785,
//!  "scale": 1, "translation": [0, 0, 0]}
//! ```

use super::{
    Arc, Circle, ClosestPointField, Ellipsoid, Hemisphere, MobiusChart, ParametricSurface, Sphere,
    SphereChart, SurfaceError, Torus, Transformed,
};
use crate::geometry::{axis_angle_matrix, matrix_axis_angle, orthogonality_defect, Mat3, Vec3};
use crate::meshio::{self, MeshSurface};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Closed,
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryCondition::Closed => "closed",
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed" => Ok(Self::Closed),
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            other => Err(format!("unknown boundary condition {other:?}")),
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Mobius,
    Sphere,
}

/// Surface geometry, tagged by `kind` with its parameters under `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum SurfaceKind {
    Circle {
        radius: f64,
        #[serde(default = "default_two")]
        embed_dim: usize,
    },
    Arc {
        radius: f64,
        #[serde(default)]
        start_angle: f64,
        extent: f64,
    },
    Sphere {
        radius: f64,
    },
    Hemisphere {
        radius: f64,
    },
    Torus {
        major_radius: f64,
        minor_radius: f64,
    },
    Ellipsoid {
        semi_axes: [f64; 3],
    },
    Parametric {
        chart: ChartKind,
        #[serde(default = "default_one")]
        radius: f64,
        #[serde(default = "default_one")]
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seeds: Option<usize>,
    },
    Mesh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        icosphere_level: Option<u32>,
        #[serde(default = "default_one")]
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cut_below: Option<f64>,
    },
}

/// Uniform scale, orthogonal rotation and translation: `x ↦ s·Q·x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    pub rotation: Mat3,
    pub scale: f64,
    pub translation: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Self {
            rotation: Mat3::identity(),
            scale: 1.0,
            translation: Vec3::zeros(),
        }
    }
}

impl Transform {
    pub fn is_identity(&self) -> bool {
        self.rotation == Mat3::identity() && self.scale == 1.0 && self.translation == Vec3::zeros()
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * inner.rotation,
            scale: self.scale * inner.scale,
            translation: self.rotation * inner.translation * self.scale + self.translation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub bc: BoundaryCondition,
    pub transform: Transform,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(flatten)]
    kind: SurfaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bc: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation_axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translation: Option<[f64; 3]>,
}

impl Serialize for SurfaceSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (axis, angle) = matrix_axis_angle(&self.transform.rotation);
        let t = &self.transform.translation;
        RawSpec {
            kind: self.kind.clone(),
            bc: Some(self.bc),
            rotation_axis: (angle != 0.0).then_some([axis.x, axis.y, axis.z]),
            rotation_angle: (angle != 0.0).then_some(angle),
            scale: (self.transform.scale != 1.0).then_some(self.transform.scale),
            translation: (*t != Vec3::zeros()).then_some([t.x, t.y, t.z]),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SurfaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSpec::deserialize(deserializer)?;
        let axis = raw.rotation_axis.map(Vec3::from).unwrap_or_else(Vec3::z);
        let angle = raw.rotation_angle.unwrap_or(0.0);
        let bc = raw.bc.unwrap_or(BoundaryCondition::Closed);
        Ok(SurfaceSpec {
            kind: raw.kind,
            bc,
            transform: Transform {
                rotation: axis_angle_matrix(&axis, angle),
                scale: raw.scale.unwrap_or(1.0),
                translation: raw.translation.map(Vec3::from).unwrap_or_else(Vec3::zeros),
            },
        })
    }
}

fn positive(name: &str, v: f64) -> Result<(), SurfaceError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SurfaceError::InvalidSpec(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind, bc: BoundaryCondition) -> Self {
        Self {
            kind,
            bc,
            transform: Transform::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SurfaceError> {
        let spec: SurfaceSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a JSON file; relative mesh paths are resolved against its directory.
    pub fn from_json_file(path: &Path) -> Result<Self, SurfaceError> {
        let text = std::fs::read_to_string(path).map_err(|source| SurfaceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut spec = Self::from_json(&text)?;
        if let SurfaceKind::Mesh {
            path: Some(mesh_path),
            ..
        } = &mut spec.kind
        {
            if mesh_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh_path = dir.join(&*mesh_path);
                }
            }
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("surface spec serializes")
    }

    /// Built-in named shapes, e.g. `sphere`, `torus-0.5-1` (minor, major),
    /// `ellipsoid-2-1-1`, `hemisphere-dirichlet`, `arc-dirichlet`, `mobius`,
    /// `icosphere-4`.
    pub fn preset(name: &str) -> Option<Self> {
        use BoundaryCondition::*;
        let nums = |prefix: &str| -> Option<Vec<f64>> {
            name.strip_prefix(prefix)?
                .split('-')
                .map(|t| t.parse::<f64>().ok())
                .collect()
        };
        let spec = match name {
            "sphere" | "unit-sphere" => Self::new(SurfaceKind::Sphere { radius: 1.0 }, Closed),
            "circle" => Self::new(
                SurfaceKind::Circle {
                    radius: 1.0,
                    embed_dim: 2,
                },
                Closed,
            ),
            "circle-3d" => Self::new(
                SurfaceKind::Circle {
                    radius: 1.0,
                    embed_dim: 3,
                },
                Closed,
            ),
            "arc-dirichlet" | "arc-neumann" => Self::new(
                SurfaceKind::Arc {
                    radius: 2.0,
                    start_angle: 0.0,
                    extent: std::f64::consts::PI,
                },
                if name.ends_with("dirichlet") {
                    Dirichlet
                } else {
                    Neumann
                },
            ),
            "hemisphere-dirichlet" | "hemisphere-neumann" => Self::new(
                SurfaceKind::Hemisphere { radius: 1.0 },
                if name.ends_with("dirichlet") {
                    Dirichlet
                } else {
                    Neumann
                },
            ),
            "mobius" => Self::new(
                SurfaceKind::Parametric {
                    chart: ChartKind::Mobius,
                    radius: 1.0,
                    width: 1.0,
                    seeds: None,
                },
                Neumann,
            ),
            _ => {
                if let Some(v) = nums("torus-").filter(|v| v.len() == 2) {
                    Self::new(
                        SurfaceKind::Torus {
                            minor_radius: v[0],
                            major_radius: v[1],
                        },
                        Closed,
                    )
                } else if let Some(v) = nums("ellipsoid-").filter(|v| v.len() == 3) {
                    Self::new(
                        SurfaceKind::Ellipsoid {
                            semi_axes: [v[0], v[1], v[2]],
                        },
                        Closed,
                    )
                } else if let Some(v) = nums("icosphere-").filter(|v| v.len() == 1) {
                    Self::new(
                        SurfaceKind::Mesh {
                            path: None,
                            icosphere_level: Some(v[0] as u32),
                            radius: 1.0,
                            cut_below: None,
                        },
                        Closed,
                    )
                } else {
                    return None;
                }
            }
        };
        Some(spec)
    }

    /// Parameter checks that do not need the surface to be built.
    pub fn validate(&self) -> Result<(), SurfaceError> {
        match &self.kind {
            SurfaceKind::Circle { radius, embed_dim } => {
                positive("radius", *radius)?;
                if !matches!(embed_dim, 2 | 3) {
                    return Err(SurfaceError::InvalidSpec(format!(
                        "embed_dim must be 2 or 3, got {embed_dim}"
                    )));
                }
            }
            SurfaceKind::Arc { radius, extent, .. } => {
                positive("radius", *radius)?;
                positive("extent", *extent)?;
                if *extent >= std::f64::consts::TAU {
                    return Err(SurfaceError::InvalidSpec(
                        "arc extent must be below 2π".into(),
                    ));
                }
            }
            SurfaceKind::Sphere { radius } | SurfaceKind::Hemisphere { radius } => {
                positive("radius", *radius)?
            }
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                positive("major_radius", *major_radius)?;
                positive("minor_radius", *minor_radius)?;
                if minor_radius >= major_radius {
                    return Err(SurfaceError::InvalidSpec(
                        "torus minor_radius must be smaller than major_radius".into(),
                    ));
                }
            }
            SurfaceKind::Ellipsoid { semi_axes } => {
                for a in semi_axes {
                    positive("semi-axis", *a)?;
                }
            }
            SurfaceKind::Parametric { radius, width, .. } => {
                positive("radius", *radius)?;
                positive("width", *width)?;
            }
            SurfaceKind::Mesh {
                path,
                icosphere_level,
                radius,
                ..
            } => {
                positive("radius", *radius)?;
                if path.is_some() == icosphere_level.is_some() {
                    return Err(SurfaceError::InvalidSpec(
                        "mesh needs exactly one of `path` or `icosphere_level`".into(),
                    ));
                }
            }
        }
        positive("scale", self.transform.scale)?;
        let defect = orthogonality_defect(&self.transform.rotation);
        if !(defect <= 1e-12) {
            return Err(SurfaceError::InvalidTransform(format!(
                "rotation not orthogonal ({defect:e})"
            )));
        }
        if let Some(open) = self.kind.is_open() {
            self.check_bc(open)?;
        }
        Ok(())
    }

    fn check_bc(&self, open: bool) -> Result<(), SurfaceError> {
        let closed_bc = self.bc == BoundaryCondition::Closed;
        if open == closed_bc {
            return Err(SurfaceError::InvalidSpec(if open {
                "open surface needs bc \"dirichlet\" or \"neumann\"".into()
            } else {
                "closed surface must use bc \"closed\"".into()
            }));
        }
        Ok(())
    }

    /// Composes an extra transform on top of the current one.
    pub fn transformed(
        &self,
        rotation: Mat3,
        scale: f64,
        translation: Vec3,
    ) -> Result<Self, SurfaceError> {
        let defect = orthogonality_defect(&rotation);
        if !(defect <= 1e-12) {
            return Err(SurfaceError::InvalidTransform(format!(
                "rotation not orthogonal ({defect:e})"
            )));
        }
        positive("scale", scale).map_err(|e| SurfaceError::InvalidTransform(e.to_string()))?;
        let outer = Transform {
            rotation,
            scale,
            translation,
        };
        Ok(Self {
            transform: outer.compose(&self.transform),
            ..self.clone()
        })
    }

    /// Compact human-readable label (kind and parameters).
    pub fn label(&self) -> String {
        let base = match &self.kind {
            SurfaceKind::Circle { radius, embed_dim } => {
                format!("circle(r={radius},dim={embed_dim})")
            }
            SurfaceKind::Arc {
                radius,
                start_angle,
                extent,
            } => {
                format!("arc(r={radius},start={start_angle},extent={extent})")
            }
            SurfaceKind::Sphere { radius } => format!("sphere(r={radius})"),
            SurfaceKind::Hemisphere { radius } => format!("hemisphere(r={radius})"),
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                format!("torus(R={major_radius},r={minor_radius})")
            }
            SurfaceKind::Ellipsoid {
                semi_axes: [a, b, c],
            } => format!("ellipsoid({a},{b},{c})"),
            SurfaceKind::Parametric {
                chart,
                radius,
                width,
                ..
            } => match chart {
                ChartKind::Mobius => format!("mobius(r={radius},w={width})"),
                ChartKind::Sphere => format!("sphere-chart(r={radius})"),
            },
            SurfaceKind::Mesh { path: Some(p), .. } => format!("mesh({})", p.display()),
            SurfaceKind::Mesh {
                icosphere_level: Some(l),
                cut_below,
                ..
            } => match cut_below {
                Some(z) => format!("icosphere({l},cut={z})"),
                None => format!("icosphere({l})"),
            },
            SurfaceKind::Mesh { .. } => "mesh".into(),
        };
        if self.transform.is_identity() {
            base
        } else {
            let (axis, angle) = matrix_axis_angle(&self.transform.rotation);
            format!(
                "{base}@rot({:.6},{:.6},{:.6};{:.9})*{}",
                axis.x, axis.y, axis.z, angle, self.transform.scale
            )
        }
    }

    /// Instantiates the closest point field.
    pub fn build(&self) -> Result<Box<dyn ClosestPointField>, SurfaceError> {
        self.validate()?;
        let base: Box<dyn ClosestPointField> = match &self.kind {
            SurfaceKind::Circle { radius, embed_dim } => Box::new(Circle {
                radius: *radius,
                center: Vec3::zeros(),
                embed_dim: *embed_dim,
            }),
            SurfaceKind::Arc {
                radius,
                start_angle,
                extent,
            } => Box::new(Arc {
                radius: *radius,
                start_angle: *start_angle,
                extent: *extent,
            }),
            SurfaceKind::Sphere { radius } => Box::new(Sphere::new(*radius)),
            SurfaceKind::Hemisphere { radius } => Box::new(Hemisphere { radius: *radius }),
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => Box::new(Torus {
                major_radius: *major_radius,
                minor_radius: *minor_radius,
            }),
            SurfaceKind::Ellipsoid { semi_axes } => Box::new(Ellipsoid {
                semi_axes: *semi_axes,
            }),
            SurfaceKind::Parametric {
                chart,
                radius,
                width,
                seeds,
            } => {
                let chart: Box<dyn super::Chart> = match chart {
                    ChartKind::Mobius => Box::new(MobiusChart {
                        radius: *radius,
                        width: *width,
                    }),
                    ChartKind::Sphere => Box::new(SphereChart { radius: *radius }),
                };
                let n = seeds.unwrap_or(64);
                Box::new(ParametricSurface::with_seeds(chart, [n, n]))
            }
            SurfaceKind::Mesh {
                path,
                icosphere_level,
                radius,
                cut_below,
            } => {
                let mut mesh = match (path, icosphere_level) {
                    (Some(p), _) => meshio::read_obj_file(p)?,
                    (None, Some(level)) => meshio::icosphere(*level, *radius),
                    (None, None) => unreachable!("validated"),
                };
                if let Some(z) = cut_below {
                    mesh = meshio::cut_below(&mesh, *z)?;
                }
                let surface = MeshSurface::new(mesh);
                self.check_bc(surface.has_boundary())?;
                Box::new(surface)
            }
        };
        if self.transform.is_identity() {
            Ok(base)
        } else {
            let t = &self.transform;
            Ok(Box::new(Transformed::new(
                base,
                t.rotation,
                t.scale,
                t.translation,
            )?))
        }
    }
}

impl SurfaceKind {
    /// Whether the surface has boundary, when known without building it.
    fn is_open(&self) -> Option<bool> {
        match self {
            SurfaceKind::Arc { .. } | SurfaceKind::Hemisphere { .. } => Some(true),
            SurfaceKind::Parametric {
                chart: ChartKind::Mobius,
                ..
            } => Some(true),
            SurfaceKind::Mesh { .. } => None,
            _ => Some(false),
        }
    }
}
