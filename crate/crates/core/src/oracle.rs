//! Closed-form spectra of the validation surfaces, expanded by multiplicity.

use crate::surfaces::{BoundaryCondition, SurfaceKind, SurfaceSpec};

/// Reference eigenvalues in ascending order with repeated entries for each
/// degenerate level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    pub values: Vec<f64>,
    pub formula: &'static str,
}

impl ExactSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Eigenvalues of `−u''` on an arc of length `2π`.
///
/// Dirichlet gives `(n/2)²` for `n = 1..=k`; Neumann prepends the constant
/// mode, giving `0` then `(n/2)²` for `n = 1..k`. Any other condition is
/// treated as Neumann.
pub fn interval_spectrum(bc: BoundaryCondition, k: usize) -> ExactSpectrum {
    let half_sq = |n: usize| (n as f64 / 2.0).powi(2);
    match bc {
        BoundaryCondition::Dirichlet => ExactSpectrum {
            values: (1..=k).map(half_sq).collect(),
            formula: "(n/2)^2, n>=1",
        },
        _ => ExactSpectrum {
            values: (0..k).map(half_sq).collect(),
            formula: "(n/2)^2, n>=0",
        },
    }
}

pub fn circle_spectrum(radius: f64, k: usize) -> ExactSpectrum {
    let mut values = Vec::with_capacity(k);
    let mut n = 0usize;
    while values.len() < k {
        let v = (n * n) as f64 / (radius * radius);
        let mult = if n == 0 { 1 } else { 2 };
        values.extend(std::iter::repeat_n(v, mult));
        n += 1;
    }
    values.truncate(k);
    ExactSpectrum {
        values,
        formula: "n^2/R^2, multiplicity 2",
    }
}

fn harmonic_levels(radius: f64, k: usize, mult: impl Fn(usize) -> usize, first: usize) -> Vec<f64> {
    let mut values = Vec::with_capacity(k);
    let mut l = first;
    while values.len() < k {
        let v = (l * (l + 1)) as f64 / (radius * radius);
        values.extend(std::iter::repeat_n(v, mult(l)));
        l += 1;
    }
    values.truncate(k);
    values
}

pub fn sphere_spectrum(radius: f64, k: usize) -> ExactSpectrum {
    ExactSpectrum {
        values: harmonic_levels(radius, k, |l| 2 * l + 1, 0),
        formula: "l(l+1)/R^2, multiplicity 2l+1",
    }
}

/// Upper hemisphere of a sphere. Dirichlet keeps the `l` harmonics of each
/// level that are odd in `z`, Neumann the `l + 1` even ones.
pub fn hemisphere_spectrum(bc: BoundaryCondition, radius: f64, k: usize) -> ExactSpectrum {
    match bc {
        BoundaryCondition::Dirichlet => ExactSpectrum {
            values: harmonic_levels(radius, k, |l| l, 1),
            formula: "l(l+1)/R^2, multiplicity l",
        },
        _ => ExactSpectrum {
            values: harmonic_levels(radius, k, |l| l + 1, 0),
            formula: "l(l+1)/R^2, multiplicity l+1",
        },
    }
}

/// The exact spectrum of `spec` when it is one of the validation shapes:
/// circles, arcs, spheres and hemispheres, any radius and placement.
pub fn for_surface(spec: &SurfaceSpec, k: usize) -> Option<ExactSpectrum> {
    let s = spec.transform.scale;
    match spec.kind {
        SurfaceKind::Circle { radius, .. } => Some(circle_spectrum(radius * s, k)),
        SurfaceKind::Sphere { radius } => Some(sphere_spectrum(radius * s, k)),
        SurfaceKind::Hemisphere { radius } => match spec.bc {
            BoundaryCondition::Closed => None,
            bc => Some(hemisphere_spectrum(bc, radius * s, k)),
        },
        SurfaceKind::Arc { radius, extent, .. } => {
            let length = radius * s * extent.abs();
            let base = interval_spectrum(spec.bc, k);
            let f = (2.0 * std::f64::consts::PI / length).powi(2);
            Some(ExactSpectrum {
                values: base.values.iter().map(|v| v * f).collect(),
                formula: base.formula,
            })
        }
        _ => None,
    }
}
