//! Scale-invariant spectral fingerprints and their pairwise distances.

use crate::eigen::Spectrum;
use serde::{Deserialize, Serialize};

/// Default cap on the number of entries compared between fingerprints.
pub const DEFAULT_MAX_K: usize = 50;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DnaError {
    #[error("spectrum has no entry above the zero tolerance {zero_tol}")]
    AllZero { zero_tol: f64 },
    #[error("need at least {needed} values, got {got}")]
    LengthMismatch { needed: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTol {
    /// `1e−6 · max(values)`.
    #[default]
    Auto,
    Value(f64),
}

/// Eigenvalues divided by the first nonzero one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDna {
    pub values: Vec<f64>,
    pub scale_factor: f64,
    /// Leading entries that were at or below the zero tolerance.
    pub zero_count: usize,
    pub label: String,
}

impl ShapeDna {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn normalize_dna(
    spec: &Spectrum,
    zero_tol: ZeroTol,
    label: &str,
) -> Result<ShapeDna, DnaError> {
    normalize_values(&spec.values, zero_tol, label)
}

/// Normalizes an ascending list of eigenvalues. Entries at or below the zero
/// tolerance become exactly 0 and are kept.
pub fn normalize_values(
    values: &[f64],
    zero_tol: ZeroTol,
    label: &str,
) -> Result<ShapeDna, DnaError> {
    if values.len() < 2 {
        return Err(DnaError::LengthMismatch {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DnaError::InvalidInput(
            "spectrum contains a non-finite value".into(),
        ));
    }
    let tol = match zero_tol {
        ZeroTol::Auto => 1e-6 * values.iter().fold(0.0f64, |m, &v| m.max(v)),
        ZeroTol::Value(t) => t,
    };
    let scale = values
        .iter()
        .copied()
        .find(|&v| v > tol)
        .ok_or(DnaError::AllZero { zero_tol: tol })?;
    let zero_count = values.iter().take_while(|&&v| v <= tol).count();
    let out = values
        .iter()
        .map(|&v| if v <= tol { 0.0 } else { v / scale })
        .collect();
    Ok(ShapeDna {
        values: out,
        scale_factor: scale,
        zero_count,
        label: label.to_string(),
    })
}

/// Euclidean distance between the first `k` entries of two fingerprints.
pub fn dna_distance(a: &ShapeDna, b: &ShapeDna, k: usize) -> Result<f64, DnaError> {
    for d in [a, b] {
        if d.len() < k {
            return Err(DnaError::LengthMismatch {
                needed: k,
                got: d.len(),
            });
        }
    }
    Ok(a.values[..k]
        .iter()
        .zip(&b.values[..k])
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Symmetric matrix of pairwise distances with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    pub labels: Vec<String>,
    /// Row-major `n × n` entries.
    pub data: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Validates shape, symmetry, a zero diagonal and nonnegative entries.
    pub fn new(labels: Vec<String>, data: Vec<f64>) -> Result<Self, DnaError> {
        let n = labels.len();
        if data.len() != n * n {
            return Err(DnaError::InvalidInput(format!(
                "{n} labels but {} entries",
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(DnaError::InvalidInput(format!(
                    "diagonal entry {i} is not zero"
                )));
            }
            for j in 0..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(DnaError::InvalidInput(format!(
                        "entry ({i}, {j}) = {a} is not a distance"
                    )));
                }
                if (a - b).abs() > 1e-14 * a.abs().max(b.abs()).max(1.0) {
                    return Err(DnaError::InvalidInput(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        Ok(Self { labels, data })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.len() + j]
    }
}

/// Number of entries compared by default: the shortest fingerprint length,
/// capped at [`DEFAULT_MAX_K`].
pub fn default_k(dnas: &[ShapeDna]) -> usize {
    dnas.iter()
        .map(ShapeDna::len)
        .min()
        .unwrap_or(0)
        .min(DEFAULT_MAX_K)
}

pub fn dissimilarity_matrix(dnas: &[ShapeDna], k: usize) -> Result<DissimilarityMatrix, DnaError> {
    if dnas.len() < 2 {
        return Err(DnaError::InvalidInput(format!(
            "need at least 2 fingerprints, got {}",
            dnas.len()
        )));
    }
    let n = dnas.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dna_distance(&dnas[i], &dnas[j], k)?;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DissimilarityMatrix {
        labels: dnas.iter().map(|d| d.label.clone()).collect(),
        data,
    })
}
