//! Metric multidimensional scaling: classical scaling for initialization and
//! SMACOF stress majorization.

use crate::shapedna::DissimilarityMatrix;

/// Inter-point distances at or below this are treated as coincident.
pub const DIST_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MdsError {
    #[error("all dissimilarities are zero")]
    DegenerateInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub labels: Vec<String>,
    /// One row of `dim` coordinates per object, centered at the origin.
    pub points: Vec<Vec<f64>>,
    pub stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stress before the first iteration and after each accepted one.
    pub stress_history: Vec<f64>,
    /// Relative stress increase of a Guttman step that was discarded, which
    /// only happens through rounding once the iteration has stalled.
    pub rejected_increase: Option<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Pairwise Euclidean distances of the embedded points, row-major.
    pub fn distances(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = dist(&self.points[i], &self.points[j]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmacofOptions {
    /// Stop once the relative stress decrease of an iteration is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `Σ_{i<j} (‖zᵢ − zⱼ‖ − D_ij)²`.
pub fn stress(d: &DissimilarityMatrix, z: &[Vec<f64>]) -> Result<f64, MdsError> {
    let n = d.len();
    if z.len() != n {
        return Err(MdsError::DimensionMismatch(format!(
            "{n} objects but {} points",
            z.len()
        )));
    }
    let dim = z.first().map_or(0, Vec::len);
    if z.iter().any(|p| p.len() != dim) {
        return Err(MdsError::DimensionMismatch(
            "points have differing dimensions".into(),
        ));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (dist(&z[i], &z[j]) - d.get(i, j)).powi(2);
        }
    }
    Ok(s)
}

fn check(d: &DissimilarityMatrix, dim: usize) -> Result<(), MdsError> {
    if !(1..=3).contains(&dim) {
        return Err(MdsError::InvalidInput(format!(
            "embedding dimension must be 1, 2 or 3, got {dim}"
        )));
    }
    if d.len() < dim + 1 {
        return Err(MdsError::InvalidInput(format!(
            "{} objects cannot determine a {dim}-dimensional embedding",
            d.len()
        )));
    }
    if d.data.iter().all(|&x| x == 0.0) {
        return Err(MdsError::DegenerateInput);
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matching eigenvectors as columns of a
/// row-major matrix.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        let off = f64::sqrt(off);
        if off <= 1e-15 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sgn / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

fn center(points: &mut [Vec<f64>]) {
    let n = points.len() as f64;
    let dim = points.first().map_or(0, Vec::len);
    for c in 0..dim {
        let mean = points.iter().map(|p| p[c]).sum::<f64>() / n;
        points.iter_mut().for_each(|p| p[c] -= mean);
    }
}

/// Classical (Torgerson) scaling: top eigenpairs of `−½·J·D²·J`, negative
/// eigenvalues clamped to zero.
pub fn classical_mds(d: &DissimilarityMatrix, dim: usize) -> Result<Embedding, MdsError> {
    check(d, dim)?;
    let n = d.len();
    let sq: Vec<f64> = d.data.iter().map(|x| x * x).collect();
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let all_mean = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + all_mean);
        }
    }
    let (vals, vecs) = jacobi_eigen(&b, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]).then(x.cmp(&y)));
    let mut points = vec![vec![0.0; dim]; n];
    for (c, &col) in order.iter().take(dim).enumerate() {
        let scale = vals[col].max(0.0).sqrt();
        // Fix the sign so the largest-magnitude component is positive.
        let big = (0..n)
            .max_by(|&x, &y| vecs[x * n + col].abs().total_cmp(&vecs[y * n + col].abs()))
            .unwrap_or(0);
        let sign = if vecs[big * n + col] < 0.0 { -1.0 } else { 1.0 };
        for (i, p) in points.iter_mut().enumerate() {
            p[c] = sign * scale * vecs[i * n + col];
        }
    }
    center(&mut points);
    let s = stress(d, &points)?;
    Ok(Embedding {
        labels: d.labels.clone(),
        points,
        stress: s,
        iterations: 0,
        converged: true,
        stress_history: vec![s],
        rejected_increase: None,
    })
}

/// One Guttman transform `X ← B(X)·X / n`.
fn guttman(d: &DissimilarityMatrix, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let dim = x[0].len();
    let mut out = vec![vec![0.0; dim]; n];
    for i in 0..n {
        let mut bii = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let dij = dist(&x[i], &x[j]);
            let bij = if dij > DIST_EPS {
                -d.get(i, j) / dij
            } else {
                0.0
            };
            bii -= bij;
            for c in 0..dim {
                out[i][c] += bij * x[j][c];
            }
        }
        for c in 0..dim {
            out[i][c] = (out[i][c] + bii * x[i][c]) / n as f64;
        }
    }
    out
}

/// SMACOF from `init`, or from classical scaling when `init` is `None`.
///
/// Iteration stops when an update no longer lowers the stress by the
/// relative tolerance; an update that would raise it is discarded, so the
/// recorded history never increases.
pub fn smacof(
    d: &DissimilarityMatrix,
    dim: usize,
    init: Option<&Embedding>,
    opts: &SmacofOptions,
) -> Result<Embedding, MdsError> {
    check(d, dim)?;
    if !(opts.tol > 0.0) {
        return Err(MdsError::InvalidInput("tolerance must be positive".into()));
    }
    let mut x = match init {
        Some(e) => {
            if e.points.len() != d.len() || e.dim() != dim {
                return Err(MdsError::DimensionMismatch(
                    "initial configuration does not match".into(),
                ));
            }
            e.points.clone()
        }
        None => classical_mds(d, dim)?.points,
    };
    center(&mut x);
    let mut s = stress(d, &x)?;
    let mut history = vec![s];
    let mut converged = s == 0.0;
    let mut iterations = 0;
    let mut rejected_increase = None;
    while !converged && iterations < opts.max_iter {
        let mut next = guttman(d, &x);
        center(&mut next);
        let s_next = stress(d, &next)?;
        iterations += 1;
        if s_next > s {
            rejected_increase = Some((s_next - s) / s);
            converged = true;
            break;
        }
        let decrease = (s - s_next) / s;
        x = next;
        s = s_next;
        history.push(s);
        if decrease < opts.tol || s == 0.0 {
            converged = true;
        }
    }
    Ok(Embedding {
        labels: d.labels.clone(),
        points: x,
        stress: s,
        iterations,
        converged,
        stress_history: history,
        rejected_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn from_points(p: &[Vec<f64>]) -> DissimilarityMatrix {
        let n = p.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = dist(&p[i], &p[j]);
            }
        }
        DissimilarityMatrix {
            labels: (0..n).map(|i| format!("p{i}")).collect(),
            data,
        }
    }

    fn max_dist_error(d: &DissimilarityMatrix, e: &Embedding) -> f64 {
        d.data
            .iter()
            .zip(e.distances())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn stress_examples() {
        let d = DissimilarityMatrix {
            labels: vec!["a".into(), "b".into()],
            data: vec![0.0, 1.0, 1.0, 0.0],
        };
        assert_eq!(stress(&d, &[vec![0.0], vec![0.0]]).unwrap(), 1.0);
        assert_eq!(stress(&d, &[vec![0.0], vec![1.0]]).unwrap(), 0.0);
        assert!(matches!(
            stress(&d, &[vec![0.0]]),
            Err(MdsError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 1.0];
        let (vals, v) = jacobi_eigen(&a, 3);
        let m = nalgebra::DMatrix::from_row_slice(3, 3, &a);
        let mut want: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        let mut got = vals.clone();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        for c in 0..3 {
            for r in 0..3 {
                let av: f64 = (0..3).map(|k| a[r * 3 + k] * v[k * 3 + c]).sum();
                assert!((av - vals[c] * v[r * 3 + c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equilateral_triangle() {
        let d = DissimilarityMatrix {
            labels: vec!["a".into(), "b".into(), "c".into()],
            data: vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        };
        let e = classical_mds(&d, 2).unwrap();
        assert!(max_dist_error(&d, &e) < 1e-10);
    }

    #[test]
    fn collinear_points() {
        let d = from_points(&[vec![0.0], vec![1.0], vec![2.0]]);
        let e = classical_mds(&d, 2).unwrap();
        assert!(e.points.iter().all(|p| p[1].abs() < 1e-7));
        assert!((e.points[0][0] - e.points[1][0]).abs() - 1.0 < 1e-10);
        assert!(max_dist_error(&d, &e) < 1e-10);
    }

    #[test]
    fn random_planar_points_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let d = from_points(&p);
        let e = classical_mds(&d, 2).unwrap();
        assert!(max_dist_error(&d, &e) < 1e-8);
        for c in 0..2 {
            assert!(e.points.iter().map(|q| q[c]).sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn smacof_from_optimal_start() {
        let d = from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let e = smacof(&d, 2, None, &SmacofOptions::default()).unwrap();
        assert!(e.iterations <= 2);
        assert!(e.stress < 1e-12);
        assert!(max_dist_error(&d, &e) < 1e-6);
    }

    #[test]
    fn unit_square_from_a_poor_start() {
        let d = from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ]);
        let init = Embedding {
            labels: d.labels.clone(),
            points: vec![
                vec![0.1, 0.0],
                vec![0.9, 0.3],
                vec![0.2, 0.7],
                vec![-0.5, 0.2],
            ],
            stress: 0.0,
            iterations: 0,
            converged: false,
            stress_history: vec![],
            rejected_increase: None,
        };
        let e = smacof(
            &d,
            2,
            Some(&init),
            &SmacofOptions {
                tol: 1e-14,
                max_iter: 5000,
            },
        )
        .unwrap();
        assert!(max_dist_error(&d, &e) < 1e-6, "{}", max_dist_error(&d, &e));
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let z = DissimilarityMatrix {
            labels: vec!["a".into(), "b".into(), "c".into()],
            data: vec![0.0; 9],
        };
        assert_eq!(classical_mds(&z, 2).unwrap_err(), MdsError::DegenerateInput);
        let d = from_points(&[vec![0.0], vec![1.0]]);
        assert!(matches!(
            classical_mds(&d, 2),
            Err(MdsError::InvalidInput(_))
        ));
        assert!(matches!(
            classical_mds(&d, 4),
            Err(MdsError::InvalidInput(_))
        ));
    }

    fn random_matrix(seed: u64, n: usize) -> DissimilarityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random_range(0.1..5.0);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DissimilarityMatrix {
            labels: (0..n).map(|i| i.to_string()).collect(),
            data,
        }
    }

    proptest! {
        #[test]
        fn stress_is_monotone(seed in 0u64..10_000, n in 4usize..12, dim in 1usize..4) {
            let d = random_matrix(seed, n);
            let init = classical_mds(&d, dim).unwrap();
            let e = smacof(&d, dim, None, &SmacofOptions::default()).unwrap();
            prop_assert!(e.stress_history.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(e.stress <= init.stress);
            prop_assert!((e.stress - stress(&d, &e.points).unwrap()).abs() <= 1e-12 * e.stress.max(1.0));
        }

        #[test]
        fn permutation_equivariance(seed in 0u64..10_000, n in 4usize..9, rot in 1usize..8) {
            let d = random_matrix(seed, n);
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let mut pdata = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    pdata[i * n + j] = d.get(perm[i], perm[j]);
                }
            }
            let pd = DissimilarityMatrix { labels: perm.iter().map(|&p| d.labels[p].clone()).collect(), data: pdata };
            let a = classical_mds(&d, 2).unwrap().distances();
            let b = classical_mds(&pd, 2).unwrap().distances();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((b[i * n + j] - a[perm[i] * n + perm[j]]).abs() < 1e-9);
                }
            }
        }
    }
}
