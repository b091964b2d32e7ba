//! Sparse matrices and the iterative solver stack.

mod gmres;
mod ilu;
mod matrix_market;
mod sparse;

pub use gmres::{gmres, GmresOptions, SolveStats};
pub use ilu::{ilu0, IluFactors};
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use sparse::SparseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("zero pivot in row {0}")]
    ZeroPivot(usize),
    #[error("invalid matrix: {0}")]
    InvalidStructure(String),
    #[error("matrix market line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Inner product with eight independent partial sums so the loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    acc.iter().sum::<f64>() + tail
}

/// `Σ vals[t]·x[cols[t]]` with four partial sums.
#[inline]
pub(crate) fn gather_dot(cols: &[u32], vals: &[f64], x: &[f64]) -> f64 {
    let n = cols.len().min(vals.len());
    let (cols, vals) = (&cols[..n], &vals[..n]);
    let mut acc = [0.0f64; 4];
    let mut cc = cols.chunks_exact(4);
    let mut cv = vals.chunks_exact(4);
    for (c, v) in (&mut cc).zip(&mut cv) {
        for l in 0..4 {
            acc[l] += v[l] * x[c[l] as usize];
        }
    }
    let tail: f64 = cc
        .remainder()
        .iter()
        .zip(cv.remainder())
        .map(|(c, v)| v * x[*c as usize])
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
