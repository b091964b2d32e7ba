use super::{dot, norm2, IluFactors, LinalgError, SparseMatrix};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Relative residual target `‖b − A·x‖/‖b‖`.
    pub tol: f64,
    /// Krylov dimension per cycle.
    pub restart: usize,
    /// Maximum number of restart cycles.
    pub max_restarts: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 60,
            max_restarts: 500,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    /// Total inner iterations (matrix-vector products in Arnoldi steps).
    pub iterations: usize,
    pub restarts: usize,
    /// True relative residual of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
    /// Estimated relative residual after every iteration.
    pub residual_history: Vec<f64>,
    /// Cycle index at which each history entry was recorded.
    pub history_cycle: Vec<usize>,
}

/// Threshold on `|wᵀvᵢ|/‖w‖` above which a second Gram–Schmidt pass is made.
const REORTH_THRESHOLD: f64 = 1e-8;

/// Right-preconditioned restarted GMRES starting from `x = 0`.
///
/// Running out of restarts is not an error: the best iterate is returned
/// with `converged == false`.
pub fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    precond: Option<&IluFactors>,
    opts: &GmresOptions,
) -> Result<(Vec<f64>, SolveStats), LinalgError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, n),
            got: (b.len(), a.ncols()),
        });
    }
    if let Some(p) = precond {
        if p.dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, n),
                got: (p.dim(), p.dim()),
            });
        }
    }
    if !(opts.tol > 0.0) || opts.restart == 0 {
        return Err(LinalgError::InvalidStructure(
            "gmres needs tol > 0 and restart >= 1".into(),
        ));
    }
    let mut stats = SolveStats::default();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        stats.converged = true;
        return Ok((x, stats));
    }
    let m = opts.restart.min(n);
    let mut r = b.to_vec();
    let mut rnorm = bnorm;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    for cycle in 0..opts.max_restarts.max(1) {
        stats.restarts = cycle;
        v.clear();
        v.push(r.iter().map(|ri| ri / rnorm).collect());
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = rnorm;
        let mut j_done = 0;
        for j in 0..m {
            match precond {
                Some(p) => p.apply_into(&v[j], &mut z)?,
                None => z.copy_from_slice(&v[j]),
            }
            a.spmv_into(&z, &mut w)?;
            stats.iterations += 1;
            let wnorm0 = norm2(&w);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][j] = hij;
                axpy(-hij, vi, &mut w);
            }
            let mut wnorm = norm2(&w);
            if wnorm > 0.0 {
                // The loss measurement doubles as the second (classical) pass.
                let c: Vec<f64> = v.iter().map(|vi| dot(&w, vi)).collect();
                let loss = c.iter().fold(0.0f64, |m, ci| m.max(ci.abs())) / wnorm;
                if loss > REORTH_THRESHOLD {
                    for (i, (ci, vi)) in c.iter().zip(&v).enumerate() {
                        h[i][j] += ci;
                        axpy(-ci, vi, &mut w);
                    }
                    wnorm = norm2(&w);
                }
            }
            h[j + 1][j] = wnorm;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = c * h[j][j] + s * h[j + 1][j];
            h[j + 1][j] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            j_done = j + 1;
            let est = g[j + 1].abs() / bnorm;
            stats.residual_history.push(est);
            stats.history_cycle.push(cycle);
            let breakdown = wnorm <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE);
            if est <= opts.tol || breakdown {
                break;
            }
            v.push(w.iter().map(|wi| wi / wnorm).collect());
        }
        // Back substitution for the least squares coefficients.
        let mut y = vec![0.0; j_done];
        for i in (0..j_done).rev() {
            let mut s = g[i];
            for l in i + 1..j_done {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            axpy(*yi, vi, &mut update);
        }
        match precond {
            Some(p) => p.apply_into(&update, &mut z)?,
            None => z.copy_from_slice(&update),
        }
        axpy(1.0, &z, &mut x);
        a.spmv_into(&x, &mut w)?;
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        rnorm = norm2(&r);
        stats.final_residual = rnorm / bnorm;
        if stats.final_residual <= opts.tol {
            stats.converged = true;
            break;
        }
        if rnorm == 0.0 || !rnorm.is_finite() {
            break;
        }
    }
    Ok((x, stats))
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_immediately() {
        let b = vec![1.0, -2.0, 0.5];
        let (x, s) = gmres(
            &SparseMatrix::identity(3),
            &b,
            None,
            &GmresOptions::default(),
        )
        .unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_system() {
        let n = 50;
        let a = SparseMatrix::from_triplets(
            n,
            n,
            &(0..n).map(|i| (i, i, (i + 1) as f64)).collect::<Vec<_>>(),
        )
        .unwrap();
        let b = vec![1.0; n];
        let opts = GmresOptions::default();
        let (x, s) = gmres(&a, &b, None, &opts).unwrap();
        assert!(s.converged);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (i + 1) as f64).abs() <= 1e-9, "{i}: {xi}");
        }
    }

    #[test]
    fn zero_rhs() {
        let (x, s) = gmres(
            &SparseMatrix::identity(2),
            &[0.0, 0.0],
            None,
            &GmresOptions::default(),
        )
        .unwrap();
        assert!(s.converged && x == vec![0.0, 0.0]);
    }

    #[test]
    fn exhausted_restarts_flagged() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 2,
            max_restarts: 3,
        };
        let (_, s) = gmres(&a, &vec![1.0; n], None, &opts).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 6);
    }
}
