use super::dense::{dense_eig, eigenvectors, C64};
use super::spectrum::IM_TOL;
use super::EigenError;
use crate::linalg::{dot, gmres, ilu0, norm2, GmresOptions, IluFactors, LinalgError, SparseMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

/// Shift used when none is given. Eigenvalues of the discrete operator lie
/// near `{0, −λ₁, −λ₂, …}`, so a small positive shift avoids the exact
/// singularity of closed surfaces.
pub const DEFAULT_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    #[default]
    Auto,
    Value(f64),
}

impl Sigma {
    pub fn resolve(&self) -> f64 {
        match *self {
            Sigma::Auto => DEFAULT_SIGMA,
            Sigma::Value(s) => s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub k: usize,
    pub sigma: Sigma,
    pub inner: GmresOptions,
    /// Precondition the inner solves with ILU(0) of `M − σI`.
    pub precondition: bool,
    pub seed: u64,
    /// Accept a Ritz pair when `‖M·v − μ·v‖/‖v‖` is at most this.
    pub residual_tol: f64,
    /// Restarts without progress (each enlarging the Krylov space) before giving up.
    pub max_restarts: usize,
    /// Overrides the default Krylov dimension `min(max(2k+20, 40), N)`.
    pub krylov_dim: Option<usize>,
    /// Wall-clock budget for the whole run, checked before each inner solve.
    pub time_limit: Option<Duration>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            k: 50,
            sigma: Sigma::Auto,
            inner: GmresOptions::default(),
            precondition: true,
            seed: 42,
            residual_tol: 1e-6,
            max_restarts: 3,
            krylov_dim: None,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: C64,
    /// `‖M·v − μ·v‖₂ / ‖v‖₂`.
    pub residual: f64,
    /// Real part of the Ritz vector.
    pub vector: Vec<f64>,
    /// Imaginary part; empty for real pairs.
    pub vector_im: Vec<f64>,
}

impl RitzPair {
    pub fn converged(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

#[derive(Debug, Clone, Default)]
pub struct EigenStats {
    pub sigma: f64,
    pub krylov_dim: usize,
    pub cycles: usize,
    /// Shift-invert applications.
    pub solves: usize,
    /// Total GMRES iterations over all inner solves.
    pub inner_iterations: usize,
    /// Inner solves that stopped above their tolerance.
    pub inner_failures: usize,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// The `k` Ritz pairs nearest σ, ordered by distance to σ.
    pub pairs: Vec<RitzPair>,
    pub stats: EigenStats,
}

/// Orthonormal Krylov basis `Q` (`steps + 1` columns, or `steps` after an
/// invariant subspace was found) and the `(steps+1) × steps` Hessenberg
/// matrix with `A·Q[..steps] = Q·H`.
#[derive(Debug, Clone)]
pub struct ArnoldiBasis {
    pub q: Vec<Vec<f64>>,
    pub h: DMatrix<f64>,
    pub steps: usize,
}

/// `m` Arnoldi steps of `op` from `v0`, with every new vector
/// orthogonalized twice against `locked` and the basis built so far.
/// With a nonempty `locked` set this is Arnoldi on `(I − PPᵀ)·A`.
pub fn arnoldi<F>(
    mut op: F,
    v0: &[f64],
    m: usize,
    locked: &[Vec<f64>],
) -> Result<ArnoldiBasis, EigenError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, EigenError>,
{
    let mut q0 = v0.to_vec();
    orthogonalize(&mut q0, locked, &mut []);
    let n0 = norm2(&q0);
    if n0 == 0.0 || !n0.is_finite() {
        return Err(EigenError::InvalidInput(
            "start vector vanishes after deflation".into(),
        ));
    }
    q0.iter_mut().for_each(|x| *x /= n0);
    let mut q = vec![q0];
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut steps = 0;
    for j in 0..m {
        let mut w = op(&q[j])?;
        let wnorm0 = norm2(&w);
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            orthogonalize(&mut w, locked, &mut []);
            orthogonalize(&mut w, &q, &mut coeffs);
        }
        for (i, c) in coeffs.iter().enumerate() {
            h[(i, j)] = *c;
        }
        let wn = norm2(&w);
        h[(j + 1, j)] = wn;
        steps = j + 1;
        if wn <= 1e-12 * wnorm0 || wn == 0.0 {
            break;
        }
        w.iter_mut().for_each(|x| *x /= wn);
        q.push(w);
    }
    Ok(ArnoldiBasis { q, h, steps })
}

/// Subtracts projections onto `basis` (modified Gram–Schmidt), accumulating
/// the removed coefficients into `coeffs` when it is nonempty.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], coeffs: &mut [f64]) {
    for (i, b) in basis.iter().enumerate() {
        let c = dot(w, b);
        for (wi, bi) in w.iter_mut().zip(b) {
            *wi -= c * bi;
        }
        if let Some(slot) = coeffs.get_mut(i) {
            *slot += c;
        }
    }
}

struct ShiftInvert<'a> {
    shifted: SparseMatrix,
    ilu: Option<IluFactors>,
    opts: &'a GmresOptions,
    stats: EigenStats,
    deadline: Option<(Instant, Duration)>,
}

impl ShiftInvert<'_> {
    fn apply(&mut self, v: &[f64]) -> Result<Vec<f64>, EigenError> {
        if let Some((start, limit)) = self.deadline {
            if start.elapsed() > limit {
                return Err(EigenError::TimeLimit {
                    seconds: limit.as_secs_f64(),
                    solves: self.stats.solves,
                });
            }
        }
        let (x, s) = gmres(&self.shifted, v, self.ilu.as_ref(), self.opts)?;
        self.stats.solves += 1;
        self.stats.inner_iterations += s.iterations;
        if !s.converged {
            self.stats.inner_failures += 1;
            log::debug!(
                "inner solve stopped at relative residual {:.3e}",
                s.final_residual
            );
        }
        Ok(x)
    }
}

/// The `k` eigenvalues of `m` nearest the shift σ by shift-invert Arnoldi
/// with explicit restarts and locking.
///
/// Each cycle runs Arnoldi on `(I − QQᵀ)(M − σI)⁻¹` where `Q` spans the
/// locked (converged) Ritz vectors, then performs a Rayleigh–Ritz
/// projection of `M` itself onto `Q` plus the wanted Krylov Ritz vectors.
/// A run ends once all `k` wanted pairs have converged and an additional
/// cycle from a fresh random start leaves the wanted values unchanged; this
/// picks up every copy of an exactly repeated eigenvalue.
pub fn arnoldi_smallest(m: &SparseMatrix, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    let n = m.nrows();
    let k = opts.k;
    if m.ncols() != n {
        return Err(EigenError::InvalidInput("operator must be square".into()));
    }
    if k == 0 || k + 20 > n {
        return Err(EigenError::InvalidInput(format!(
            "need 1 <= k and k + 20 <= N (k = {k}, N = {n})"
        )));
    }
    if !(opts.residual_tol > 0.0) {
        return Err(EigenError::InvalidInput(
            "residual tolerance must be positive".into(),
        ));
    }
    let start = Instant::now();
    let sigma = opts.sigma.resolve();
    let shifted = m.shifted(sigma)?;
    let ilu = if opts.precondition {
        Some(ilu0(&shifted).map_err(|e| match e {
            LinalgError::ZeroPivot(r) => EigenError::ZeroPivot(r),
            other => EigenError::Linalg(other),
        })?)
    } else {
        None
    };
    let mut si = ShiftInvert {
        shifted,
        ilu,
        opts: &opts.inner,
        stats: EigenStats {
            sigma,
            ..Default::default()
        },
        deadline: opts.time_limit.map(|l| (start, l)),
    };

    let mut krylov = opts
        .krylov_dim
        .unwrap_or((2 * k + 20).max(40))
        .min(n)
        .max(1);
    si.stats.krylov_dim = krylov;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut restart_vecs: Vec<Vec<f64>> = Vec::new();
    let mut best_converged = 0usize;
    let mut stagnant = 0usize;
    let mut prev_values: Option<Vec<C64>> = None;
    let max_cycles = opts.max_restarts + 2 * k + 4;

    for cycle in 0..max_cycles {
        si.stats.cycles = cycle + 1;
        let mut v0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r0 = norm2(&v0);
        v0.iter_mut().for_each(|x| *x /= r0);
        for u in &restart_vecs {
            let un = norm2(u);
            if un > 0.0 {
                for (a, b) in v0.iter_mut().zip(u) {
                    *a += b / un;
                }
            }
        }
        // A confirmation cycle only has to expose copies missed so far.
        let target = if prev_values.is_some() {
            (krylov / 2).max(20)
        } else {
            krylov
        };
        let dim = target.min(n - locked.len());
        let basis = arnoldi(|v| si.apply(v), &v0, dim, &locked)?;
        let mut cand: Vec<Vec<f64>> = locked.clone();
        cand.extend(basis.q.iter().cloned());
        let w = orthonormal_basis(cand);
        let pairs = rayleigh_ritz(m, &w, opts.seed.wrapping_add(cycle as u64))?;

        let mut selected: Vec<RitzPair> = pairs;
        selected.sort_by(|a, b| {
            (a.value - sigma)
                .norm()
                .total_cmp(&(b.value - sigma).norm())
                .then(a.value.re.total_cmp(&b.value.re))
        });
        selected.truncate(k);
        let converged = selected
            .iter()
            .filter(|p| p.converged(opts.residual_tol))
            .count();
        log::debug!(
            "cycle {cycle}: dim {dim}, {converged}/{k} converged, {} locked",
            locked.len()
        );

        let values: Vec<C64> = selected.iter().map(|p| p.value).collect();
        if converged == selected.len() && selected.len() == k {
            if let Some(prev) = &prev_values {
                if same_values(prev, &values) {
                    if si.stats.inner_failures > 0 {
                        log::warn!(
                            "{} of {} inner solves stopped above tolerance",
                            si.stats.inner_failures,
                            si.stats.solves
                        );
                    }
                    return Ok(EigenResult {
                        pairs: selected,
                        stats: si.stats,
                    });
                }
            }
            prev_values = Some(values);
        } else {
            prev_values = None;
        }

        if converged > best_converged {
            best_converged = converged;
            stagnant = 0;
        } else if converged < k {
            stagnant += 1;
            if stagnant > opts.max_restarts {
                return Err(EigenError::NoConvergence {
                    converged,
                    wanted: k,
                });
            }
            krylov = ((krylov as f64 * 1.5).ceil() as usize).min(n);
            si.stats.krylov_dim = krylov;
        }

        let mut lock_vecs = Vec::new();
        restart_vecs.clear();
        for p in &selected {
            let target = if p.converged(opts.residual_tol) {
                &mut lock_vecs
            } else {
                &mut restart_vecs
            };
            target.push(p.vector.clone());
            if !p.vector_im.is_empty() {
                target.push(p.vector_im.clone());
            }
        }
        locked = orthonormal_basis(lock_vecs);
        if locked.len() + 2 > n {
            return Err(EigenError::NoConvergence {
                converged,
                wanted: k,
            });
        }
    }
    Err(EigenError::NoConvergence {
        converged: best_converged,
        wanted: k,
    })
}

fn real_residual(x: &[f64], y: &[f64], mu: f64) -> f64 {
    let r2: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - mu * xi).powi(2)).sum();
    (r2 / dot(x, x)).sqrt()
}

fn same_values(a: &[C64], b: &[C64]) -> bool {
    let scale = a
        .iter()
        .chain(b)
        .fold(f64::MIN_POSITIVE, |m, v| m.max(v.norm()));
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= 1e-8 * scale)
}

/// Orthonormal basis of the span of `vecs` by two-pass Gram–Schmidt,
/// dropping numerically dependent vectors.
fn orthonormal_basis(vecs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    for mut v in vecs {
        let n0 = norm2(&v);
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            orthogonalize(&mut v, &out, &mut []);
        }
        let n1 = norm2(&v);
        if n1 > 1e-10 * n0 {
            v.iter_mut().for_each(|x| *x /= n1);
            out.push(v);
        }
    }
    out
}

/// Ritz pairs of `m` on the span of the orthonormal columns `w`.
fn rayleigh_ritz(m: &SparseMatrix, w: &[Vec<f64>], seed: u64) -> Result<Vec<RitzPair>, EigenError> {
    let p = w.len();
    let n = m.nrows();
    let mw: Vec<Vec<f64>> = w.iter().map(|x| m.spmv(x)).collect::<Result<_, _>>()?;
    let g = DMatrix::from_fn(p, p, |i, j| dot(&w[i], &mw[j]));
    let mus = dense_eig(&g)?;
    let svecs = eigenvectors(&g, &mus, seed);
    let mut out = Vec::with_capacity(p);
    for (mu, s) in mus.iter().zip(&svecs) {
        // Skip the second member of a conjugate pair.
        if mu.im < 0.0 {
            continue;
        }
        let mut xr = vec![0.0; n];
        let mut xi = vec![0.0; n];
        let mut yr = vec![0.0; n];
        let mut yi = vec![0.0; n];
        for j in 0..p {
            let (sr, sim) = (s[j].re, s[j].im);
            for t in 0..n {
                xr[t] += sr * w[j][t];
                yr[t] += sr * mw[j][t];
                if sim != 0.0 {
                    xi[t] += sim * w[j][t];
                    yi[t] += sim * mw[j][t];
                }
            }
        }
        // (M − μ)(xr + i·xi) with μ = a + i·b
        let (a, b) = (mu.re, mu.im);
        let mut r2 = 0.0;
        let mut x2 = 0.0;
        for t in 0..n {
            let rr = yr[t] - a * xr[t] + b * xi[t];
            let ri = yi[t] - a * xi[t] - b * xr[t];
            r2 += rr * rr + ri * ri;
            x2 += xr[t] * xr[t] + xi[t] * xi[t];
        }
        if mu.im == 0.0 || mu.im > IM_TOL * mu.norm().max(1.0) {
            let complex = mu.im != 0.0;
            out.push(RitzPair {
                value: *mu,
                residual: (r2 / x2).sqrt(),
                vector: xr,
                vector_im: if complex { xi } else { Vec::new() },
            });
            continue;
        }
        // A conjugate pair split off a repeated real eigenvalue by rounding:
        // keep both copies as real pairs spanning the same plane.
        let c = dot(&xi, &xr) / dot(&xr, &xr);
        for t in 0..n {
            xi[t] -= c * xr[t];
            yi[t] -= c * yr[t];
        }
        for (x, y) in [(xr, yr), (xi, yi)] {
            out.push(RitzPair {
                value: C64::new(a, 0.0),
                residual: real_residual(&x, &y, a),
                vector: x,
                vector_im: Vec::new(),
            });
        }
    }
    Ok(out)
}
