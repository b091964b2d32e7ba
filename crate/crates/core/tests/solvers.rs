use cpdna::eigen::{arnoldi_smallest, dense_eig, EigenOptions, C64};
use cpdna::linalg::{gmres, ilu0, GmresOptions, SparseMatrix};
use cpdna::pipeline::{assemble_job, JobSpec};
use cpdna::surfaces::SurfaceSpec;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sparse(n: usize, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 4.0 + rng.random_range(0.0..1.0)));
        for _ in 0..3 {
            let j = rng.random_range(0..n);
            if j != i {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).unwrap();
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gmres_solves_dominant_systems(n in 5usize..120, seed in 0u64..1000) {
        let a = random_sparse(n, seed);
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        prop_assume!(b.iter().any(|&v| v != 0.0));
        let opts = GmresOptions { tol: 1e-10, restart: 20, max_restarts: 200 };
        let f = ilu0(&a).unwrap();
        for pre in [None, Some(&f)] {
            let (x, s) = gmres(&a, &b, pre, &opts).unwrap();
            prop_assert!(s.converged);
            prop_assert!(residual(&a, &x, &b) <= 1e-9);
        }
    }
}

#[test]
fn ilu_of_tridiagonal_is_exact() {
    let n = 50;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 3.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            t.push((i, i + 1, -1.5));
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
    let f = ilu0(&a).unwrap();
    let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
    let x = f.apply(&b).unwrap();
    assert!(residual(&a, &x, &b) < 1e-13);
    let (_, s) = gmres(&a, &b, Some(&f), &GmresOptions::default()).unwrap();
    assert!(s.iterations <= 2);
}

#[test]
fn random_nonsymmetric_matches_dense_oracle() {
    let n = 150;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        -(i as f64) * 0.1
                    } else {
                        rng.random_range(-0.02..0.02)
                    }
                })
                .collect()
        })
        .collect();
    let a = SparseMatrix::from_dense(&rows);
    let res = arnoldi_smallest(
        &a,
        &EigenOptions {
            k: 10,
            ..Default::default()
        },
    )
    .unwrap();
    let dense = DMatrix::from_row_slice(n, n, &rows.concat());
    let mut all: Vec<C64> = dense_eig(&dense).unwrap();
    all.sort_by(|x, y| (x - 0.1).norm().total_cmp(&(y - 0.1).norm()));
    let key = |v: &C64| (v.re, v.im);
    let mut want: Vec<C64> = all[..10].to_vec();
    let mut got: Vec<C64> = res.pairs.iter().map(|p| p.value).collect();
    want.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    got.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).norm() <= 1e-8 * w.norm().max(1.0), "{g} vs {w}");
    }
}

#[test]
fn sphere_solver_invariants() {
    let job = JobSpec::new(SurfaceSpec::preset("sphere").unwrap(), 0.2, 10);
    let (_, op) = assemble_job(&job).unwrap();
    let a = arnoldi_smallest(
        &op.m,
        &EigenOptions {
            k: 10,
            seed: 42,
            ..Default::default()
        },
    )
    .unwrap();
    let b = arnoldi_smallest(
        &op.m,
        &EigenOptions {
            k: 10,
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();

    let sorted = |r: &cpdna::eigen::EigenResult| {
        let mut v: Vec<f64> = r.pairs.iter().map(|p| -p.value.re).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (la, lb) = (sorted(&a), sorted(&b));
    for (x, y) in la.iter().zip(&lb) {
        assert!((x - y).abs() <= 1e-7 * x.abs().max(1.0), "{x} vs {y}");
    }
    let exact = [0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0, 12.0];
    for (x, e) in la.iter().zip(exact) {
        assert!((x - e).abs() <= 0.1 * e.max(1.0), "{x} vs {e}");
    }

    for p in &a.pairs {
        let mv = op.m.spmv(&p.vector).unwrap();
        let mu = p.value.re;
        let r: f64 = mv
            .iter()
            .zip(&p.vector)
            .map(|(y, x)| (y - mu * x).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = p.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(p.residual <= 1e-6);
        if p.vector_im.is_empty() {
            assert!((r / norm - p.residual).abs() <= 1e-10);
        }
    }

    let zero = a
        .pairs
        .iter()
        .min_by(|x, y| x.value.norm().total_cmp(&y.value.norm()))
        .unwrap();
    let n = zero.vector.len() as f64;
    let mean = zero.vector.iter().sum::<f64>() / n;
    let sd = (zero.vector.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(
        sd / mean.abs() < 1e-3,
        "coefficient of variation {}",
        sd / mean.abs()
    );
}
