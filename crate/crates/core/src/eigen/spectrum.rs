use super::{EigenError, RitzPair};
use crate::surfaces::BoundaryCondition;
use serde::{Deserialize, Serialize};

/// Relative bound on the imaginary part of an accepted Ritz value.
pub const IM_TOL: f64 = 1e-6;

/// Parameters a spectrum was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub surface: String,
    pub dx: f64,
    pub bc: BoundaryCondition,
    pub gamma: f64,
    pub sigma: f64,
    pub k: usize,
    pub band_points: usize,
    #[serde(default)]
    pub bandwidth: f64,
}

impl Default for SpectrumMeta {
    fn default() -> Self {
        Self {
            surface: String::new(),
            dx: 0.0,
            bc: BoundaryCondition::Closed,
            gamma: 0.0,
            sigma: 0.0,
            k: 0,
            band_points: 0,
            bandwidth: 0.0,
        }
    }
}

/// Ascending eigenvalues `λ` of `−Δ_S` with the residual of each Ritz pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps Ritz values `μ` of `M` to `λ = −Re μ`, sorted ascending.
///
/// Values within `1e−6·max λ` of zero are set to exactly 0 and values below
/// that band are discarded.
pub fn extract_spectrum(pairs: &[RitzPair], meta: SpectrumMeta) -> Result<Spectrum, EigenError> {
    if pairs.is_empty() {
        return Err(EigenError::InvalidInput("no Ritz pairs to extract".into()));
    }
    if let Some(p) = pairs
        .iter()
        .find(|p| p.value.im.abs() > IM_TOL * p.value.re.abs().max(1.0))
    {
        return Err(EigenError::ComplexSpectrum {
            re: p.value.re,
            im: p.value.im,
        });
    }
    let mut lr: Vec<(f64, f64)> = pairs.iter().map(|p| (-p.value.re, p.residual)).collect();
    lr.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max = lr.iter().fold(0.0f64, |m, &(l, _)| m.max(l));
    let lam_tol = 1e-6 * max;
    let (values, residuals) = lr
        .into_iter()
        .filter(|&(l, _)| l >= -lam_tol)
        .map(|(l, r)| (if l.abs() <= lam_tol { 0.0 } else { l }, r))
        .unzip();
    Ok(Spectrum {
        values,
        residuals,
        meta,
    })
}
