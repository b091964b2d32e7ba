//! Discrete Laplacian, closest point extension and the penalized
//! Laplace–Beltrami operator `M = E₁·L − γ·(I − E₃)` on a band.

use crate::band::BandGrid;
use crate::linalg::{LinalgError, SparseMatrix};
use crate::surfaces::BoundaryCondition;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error("interpolation stencil of band row {row} needs grid point {node:?}, which is outside the band")]
    StencilEscape { row: usize, node: [i64; 3] },
    #[error("interpolation degree must be 1 or 3, got {0}")]
    InvalidDegree(usize),
    #[error("penalty gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Penalty parameter choice.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    /// `2·dim/dx²`.
    #[default]
    Auto,
    Value(f64),
}

impl Gamma {
    pub fn resolve(&self, dim: usize, dx: f64) -> f64 {
        match *self {
            Gamma::Auto => 2.0 * dim as f64 / (dx * dx),
            Gamma::Value(g) => g,
        }
    }
}

/// The assembled operator together with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct DiscreteLB {
    pub m: SparseMatrix,
    pub gamma: f64,
    pub dx: f64,
    pub dim: usize,
    pub bc: BoundaryCondition,
    /// Interpolation degrees of the two extension operators.
    pub degrees: (usize, usize),
}

impl DiscreteLB {
    pub fn len(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.m.nrows() == 0
    }
}

/// `(2·dim+1)`-point centered Laplacian scaled by `1/dx²`. Neighbors outside
/// the band are dropped while the diagonal keeps its full weight.
pub fn build_laplacian(band: &BandGrid) -> SparseMatrix {
    let n = band.len();
    let dim = band.dim();
    let inv = 1.0 / (band.dx() * band.dx());
    let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![(i, i, -2.0 * dim as f64 * inv)];
            for nb in band.neighbors(i) {
                if let Some(j) = nb.row {
                    row.push((i, j, inv));
                }
            }
            row
        })
        .collect();
    let trip: Vec<_> = rows.into_iter().flatten().collect();
    SparseMatrix::from_triplets(n, n, &trip).expect("laplacian indices are in range")
}

/// Lagrange weights at `t` for the `degree + 1` consecutive integer nodes
/// starting at `base`.
pub fn lagrange_weights(t: f64, base: i64, degree: usize) -> Vec<f64> {
    (0..=degree)
        .map(|m| {
            let xm = (base + m as i64) as f64;
            (0..=degree)
                .filter(|&l| l != m)
                .map(|l| {
                    let xl = (base + l as i64) as f64;
                    (t - xl) / (xm - xl)
                })
                .product()
        })
        .collect()
}

/// First node of the degree-`p` stencil around fractional coordinate `t`.
pub fn stencil_base(t: f64, degree: usize) -> i64 {
    t.floor() as i64 - (degree as i64 - 1) / 2
}

/// Interpolation matrix evaluating band functions at each cached closest
/// point. For Dirichlet problems rows whose closest point is on the boundary
/// are negated.
pub fn build_extension(
    band: &BandGrid,
    degree: usize,
    bc: BoundaryCondition,
) -> Result<SparseMatrix, OperatorError> {
    if degree != 1 && degree != 3 {
        return Err(OperatorError::InvalidDegree(degree));
    }
    let n = band.len();
    let dim = band.dim();
    let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = band.cp(i);
            let t = band.to_grid(&c.cp);
            let mut base = [0i64; 3];
            let mut w: [Vec<f64>; 3] = [vec![1.0], vec![1.0], vec![1.0]];
            for a in 0..dim {
                base[a] = stencil_base(t[a], degree);
                w[a] = lagrange_weights(t[a], base[a], degree);
            }
            let sign = if bc == BoundaryCondition::Dirichlet && c.on_boundary {
                -1.0
            } else {
                1.0
            };
            let mut row = Vec::with_capacity(w[0].len() * w[1].len() * w[2].len());
            for (a, wa) in w[0].iter().enumerate() {
                for (b, wb) in w[1].iter().enumerate() {
                    for (cc, wc) in w[2].iter().enumerate() {
                        let node = [base[0] + a as i64, base[1] + b as i64, base[2] + cc as i64];
                        let j = band
                            .index_of(&node)
                            .ok_or(OperatorError::StencilEscape { row: i, node })?;
                        row.push((i, j, sign * wa * wb * wc));
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<_, OperatorError>>()?;
    let trip: Vec<_> = rows.into_iter().flatten().collect();
    Ok(SparseMatrix::from_triplets(n, n, &trip)?)
}

/// Assembles `M = E₁·L − γ·(I − E₃)` with the standard degrees (1, 3).
pub fn assemble_lb(
    band: &BandGrid,
    bc: BoundaryCondition,
    gamma: Gamma,
) -> Result<DiscreteLB, OperatorError> {
    assemble_lb_with_degrees(band, bc, gamma, (1, 3))
}

pub fn assemble_lb_with_degrees(
    band: &BandGrid,
    bc: BoundaryCondition,
    gamma: Gamma,
    degrees: (usize, usize),
) -> Result<DiscreteLB, OperatorError> {
    let g = gamma.resolve(band.dim(), band.dx());
    if !(g > 0.0 && g.is_finite()) {
        return Err(OperatorError::InvalidGamma(g));
    }
    let l = build_laplacian(band);
    let e1 = build_extension(band, degrees.0, bc)?;
    let e3 = build_extension(band, degrees.1, bc)?;
    let e1l = e1.matmul(&l)?;
    let eye = SparseMatrix::identity(band.len());
    let m = SparseMatrix::linear_combination(&[(1.0, &e1l), (-g, &eye), (g, &e3)])?;
    log::debug!(
        "assembled operator: n = {}, nnz = {}, {}-point Laplacian, gamma = {g}",
        m.nrows(),
        m.nnz(),
        2 * band.dim() + 1
    );
    Ok(DiscreteLB {
        m,
        gamma: g,
        dx: band.dx(),
        dim: band.dim(),
        bc,
        degrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::build_band;
    use crate::surfaces::{Circle, Sphere};

    #[test]
    fn lagrange_weights_reproduce_polynomials() {
        let t = 2.37;
        let w = lagrange_weights(t, stencil_base(t, 3), 3);
        assert_eq!(stencil_base(t, 3), 1);
        let base = 1.0;
        for p in 0..4 {
            let interp: f64 = w
                .iter()
                .enumerate()
                .map(|(m, wm)| wm * (base + m as f64).powi(p))
                .sum();
            assert!((interp - t.powi(p)).abs() < 1e-12);
        }
        assert_eq!(stencil_base(t, 1), 2);
    }

    #[test]
    fn laplacian_is_exact_on_quadratics() {
        let band = build_band(&Circle::new(1.0), 0.1, 3).unwrap();
        let l = build_laplacian(&band);
        let v: Vec<f64> = (0..band.len())
            .map(|i| band.position(i).x.powi(2))
            .collect();
        let lv = l.spmv(&v).unwrap();
        let ones = l.spmv(&vec![1.0; band.len()]).unwrap();
        let mut full = 0;
        for i in 0..band.len() {
            if band.neighbors(i).iter().all(|nb| nb.row.is_some()) {
                full += 1;
                assert!((lv[i] - 2.0).abs() < 1e-9, "row {i}: {}", lv[i]);
                assert!(ones[i].abs() < 1e-9);
            }
        }
        assert!(full > 0);
    }

    #[test]
    fn closed_operator_annihilates_constants() {
        let band = build_band(&Sphere::new(1.0), 0.2, 3).unwrap();
        let op = assemble_lb(&band, BoundaryCondition::Closed, Gamma::Auto).unwrap();
        assert!((op.gamma - 150.0).abs() < 1e-9);
        let r = op.m.spmv(&vec![1.0; band.len()]).unwrap();
        assert!(r.iter().all(|x| x.abs() <= 1e-9 * op.gamma));
        let bound = 7 * 64 + 64;
        assert!((0..op.len()).all(|i| op.m.row(i).0.len() <= bound));
    }

    #[test]
    fn bad_degree_rejected() {
        let band = build_band(&Circle::new(1.0), 0.2, 3).unwrap();
        assert!(matches!(
            build_extension(&band, 2, BoundaryCondition::Closed),
            Err(OperatorError::InvalidDegree(2))
        ));
    }
}
