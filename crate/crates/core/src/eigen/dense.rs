use super::EigenError;
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

/// Largest matrix accepted by [`dense_eig`].
pub const DENSE_MAX: usize = 500;

/// All eigenvalues of a real square matrix: Householder reduction to upper
/// Hessenberg form followed by Francis double-shift QR iteration.
pub fn dense_eig(a: &DMatrix<f64>) -> Result<Vec<C64>, EigenError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(EigenError::InvalidInput(format!(
            "dense_eig needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n > DENSE_MAX {
        return Err(EigenError::InvalidInput(format!(
            "dense_eig is limited to n <= {DENSE_MAX}, got {n}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::InvalidInput(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    hqr(&mut h)
}

/// In-place Householder reduction to upper Hessenberg form.
pub fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = (k + 1..n).map(|i| a[(i, k)].powi(2)).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 {
            -alpha_norm
        } else {
            alpha_norm
        };
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A ← (I − 2vvᵀ/vᵀv)·A
        for j in 0..n {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(p, vp)| vp * a[(k + 1 + p, j)])
                .sum();
            let f = 2.0 * s / vnorm2;
            for (p, vp) in v.iter().enumerate() {
                a[(k + 1 + p, j)] -= f * vp;
            }
        }
        // A ← A·(I − 2vvᵀ/vᵀv)
        for i in 0..n {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(p, vp)| vp * a[(i, k + 1 + p)])
                .sum();
            let f = 2.0 * s / vnorm2;
            for (p, vp) in v.iter().enumerate() {
                a[(i, k + 1 + p)] -= f * vp;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed on return).
#[allow(unused_assignments)]
fn hqr(a: &mut DMatrix<f64>) -> Result<Vec<C64>, EigenError> {
    let n = a.nrows() as isize;
    let mut wr = vec![C64::new(0.0, 0.0); n as usize];
    if n == 0 {
        return Ok(wr);
    }
    let max_sweeps = 100 * n as usize;
    let mut sweeps = 0usize;
    let mut anorm = 0.0;
    for i in 0..n as usize {
        for j in i.saturating_sub(1)..n as usize {
            anorm += a[(i, j)].abs();
        }
    }
    let at = |a: &DMatrix<f64>, i: isize, j: isize| a[(i as usize, j as usize)];
    let mut nn = n - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z) = (
        0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64,
    );
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                s = at(a, l - 1, l - 1).abs() + at(a, l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at(a, l, l - 1).abs() + s == s {
                    a[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = at(a, nn, nn);
            if l == nn {
                wr[nn as usize] = C64::new(x + t, 0.0);
                nn -= 1;
            } else {
                y = at(a, nn - 1, nn - 1);
                w = at(a, nn, nn - 1) * at(a, nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn as usize - 1] = C64::new(x + z, 0.0);
                        wr[nn as usize] = C64::new(if z != 0.0 { x - w / z } else { x + z }, 0.0);
                    } else {
                        wr[nn as usize] = C64::new(x + p, -z);
                        wr[nn as usize - 1] = C64::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    sweeps += 1;
                    if sweeps > max_sweeps {
                        return Err(EigenError::NoConvergence {
                            converged: (n - 1 - nn) as usize,
                            wanted: n as usize,
                        });
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 0..=nn {
                            a[(i as usize, i as usize)] -= x;
                        }
                        s = at(a, nn, nn - 1).abs() + at(a, nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    while m >= l {
                        z = at(a, m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / at(a, m + 1, m) + at(a, m, m + 1);
                        q = at(a, m + 1, m + 1) - z - r - s;
                        r = at(a, m + 2, m + 1);
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = at(a, m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (at(a, m - 1, m - 1).abs() + z.abs() + at(a, m + 1, m + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        a[(i as usize + 2, i as usize)] = 0.0;
                        if i != m {
                            a[(i as usize + 2, i as usize - 1)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = at(a, k, k - 1);
                            q = at(a, k + 1, k - 1);
                            r = 0.0;
                            if k + 1 != nn {
                                r = at(a, k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[(k as usize, k as usize - 1)] = -at(a, k, k - 1);
                                }
                            } else {
                                a[(k as usize, k as usize - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let (ku, ju) = (k as usize, j as usize);
                                p = a[(ku, ju)] + q * a[(ku + 1, ju)];
                                if k + 1 != nn {
                                    p += r * a[(ku + 2, ju)];
                                    a[(ku + 2, ju)] -= p * z;
                                }
                                a[(ku + 1, ju)] -= p * y;
                                a[(ku, ju)] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let (iu, ku) = (i as usize, k as usize);
                                p = x * a[(iu, ku)] + y * a[(iu, ku + 1)];
                                if k + 1 != nn {
                                    p += z * a[(iu, ku + 2)];
                                    a[(iu, ku + 2)] -= p * r;
                                }
                                a[(iu, ku + 1)] -= p * q;
                                a[(iu, ku)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(wr)
}

/// Eigenvectors of `a` for the eigenvalues `lambdas` by inverse iteration.
///
/// Eigenvalues that coincide to within `cluster_tol` (relative) receive
/// different random start vectors and are orthogonalized against each other,
/// so a repeated eigenvalue yields a basis of its eigenspace.
pub fn eigenvectors(a: &DMatrix<f64>, lambdas: &[C64], seed: u64) -> Vec<DVector<C64>> {
    let n = a.nrows();
    let scale = a
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ac: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    let mut out: Vec<DVector<C64>> = Vec::with_capacity(lambdas.len());
    for (idx, &lam) in lambdas.iter().enumerate() {
        let partners: Vec<usize> = (0..idx)
            .filter(|&j| {
                (lambdas[j] - lam).norm() <= cluster_tol * lam.norm().max(scale * 1e-8).max(1e-300)
            })
            .collect();
        // Perturb the shift slightly so the factorization stays nonsingular.
        let shift = lam + C64::new(scale * 1e-13 * (1.0 + idx as f64 * 1e-3), 0.0);
        let mut shifted = ac.clone();
        for i in 0..n {
            shifted[(i, i)] -= shift;
        }
        let lu = shifted.lu();
        let mut x = DVector::<C64>::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, 0.0));
        for _ in 0..3 {
            for &j in &partners {
                let pj = &out[j];
                let c = pj.dotc(&x);
                x -= pj * c;
            }
            let nx = x.norm();
            if nx > 0.0 {
                x /= C64::new(nx, 0.0);
            }
            match lu.solve(&x) {
                Some(y) if y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => x = y,
                _ => break,
            }
        }
        for &j in &partners {
            let pj = &out[j];
            let c = pj.dotc(&x);
            x -= pj * c;
        }
        let nx = x.norm();
        if nx > 0.0 {
            x /= C64::new(nx, 0.0);
        }
        // Fix the phase so the largest component is real and positive.
        if let Some((_, &big)) = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        {
            if big.norm() > 0.0 {
                let ph = big.conj() / C64::new(big.norm(), 0.0);
                x *= ph;
            }
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let ev = sorted_re(dense_eig(&a).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e.re - want).abs() < 1e-14 && e.im == 0.0);
        }
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let ev = sorted_re(dense_eig(&a).unwrap());
        assert!(ev
            .iter()
            .all(|e| e.re.abs() < 1e-15 && (e.im.abs() - 1.0).abs() < 1e-15));
        assert!(ev[0].im * ev[1].im < 0.0);
    }

    #[test]
    fn hessenberg_preserves_spectrum_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(12, 12, |_, _| rng.random::<f64>() - 0.5);
        let mut h = a.clone();
        hessenberg(&mut h);
        for i in 2..12 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
        assert!((h.trace() - a.trace()).abs() < 1e-12);
        assert!((h.norm() - a.norm()).abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(30, 30, |_, _| rng.random::<f64>() - 0.5);
        let ev = dense_eig(&a).unwrap();
        let vecs = eigenvectors(&a, &ev, 1);
        let ac = a.map(|v| C64::new(v, 0.0));
        for (lam, v) in ev.iter().zip(&vecs) {
            let r = &ac * v - v * *lam;
            assert!(r.norm() < 1e-10, "{lam}: {}", r.norm());
        }
    }

    #[test]
    fn repeated_eigenvalue_gets_a_basis() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 2.0, 5.0]));
        let lams = vec![C64::new(2.0, 0.0); 3];
        let v = eigenvectors(&a, &lams, 9);
        for i in 0..3 {
            for j in 0..i {
                assert!(v[i].dotc(&v[j]).norm() < 1e-12);
            }
            assert!(v[i][3].norm() < 1e-12);
        }
    }

    #[test]
    fn size_limit() {
        let a = DMatrix::<f64>::zeros(501, 501);
        assert!(matches!(dense_eig(&a), Err(EigenError::InvalidInput(_))));
    }
}
