//! Shift-invert Arnoldi eigensolver, a dense QR oracle and conversion of
//! Ritz values to Laplace–Beltrami spectra.

mod arnoldi;
mod dense;
mod spectrum;

pub use arnoldi::{
    arnoldi, arnoldi_smallest, ArnoldiBasis, EigenOptions, EigenResult, EigenStats, RitzPair,
    Sigma, DEFAULT_SIGMA,
};
pub use dense::{dense_eig, eigenvectors, hessenberg, C64, DENSE_MAX};
pub use spectrum::{extract_spectrum, Spectrum, SpectrumMeta, IM_TOL};

use crate::linalg::LinalgError;

#[derive(Debug, thiserror::Error)]
pub enum EigenError {
    #[error("invalid eigensolver input: {0}")]
    InvalidInput(String),
    #[error(
        "zero pivot in row {0} while factoring the shifted operator (shift lies on the spectrum?)"
    )]
    ZeroPivot(usize),
    #[error("only {converged} of {wanted} eigenpairs converged")]
    NoConvergence { converged: usize, wanted: usize },
    #[error("Ritz value {re} + {im}i has a non-negligible imaginary part")]
    ComplexSpectrum { re: f64, im: f64 },
    #[error("time limit of {seconds} s reached after {solves} inner solves")]
    TimeLimit { seconds: f64, solves: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
