//! End-to-end acceptance checks. Everything runs inside one test so the
//! timing comparison is not disturbed by other solves, and each check
//! prints a single PASS or FAIL line straight to stdout.

use cpdna::eigen::{arnoldi_smallest, dense_eig, EigenOptions, C64};
use cpdna::geometry::Vec3;
use cpdna::mds::{classical_mds, smacof, SmacofOptions};
use cpdna::meshio::{closest_point_on_triangle, icosphere, MeshSurface};
use cpdna::oracle::{
    circle_spectrum, hemisphere_spectrum, interval_spectrum, sphere_spectrum, ExactSpectrum,
};
use cpdna::pipeline::{
    assemble_job, bench_solver, convergence_study, invariance_study, run_job, JobSpec, Norm,
    StudyTransform,
};
use cpdna::shapedna::{
    dissimilarity_matrix, normalize_dna, normalize_values, DissimilarityMatrix, ZeroTol,
};
use cpdna::surfaces::{BoundaryCondition, SurfaceSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

/// Criteria selected by `CPDNA_CRITERIA` (comma-separated numbers); all by default.
fn selected(id: usize) -> bool {
    match std::env::var("CPDNA_CRITERIA") {
        Ok(list) if !list.trim().is_empty() => list.split(',').any(|s| s.trim().parse() == Ok(id)),
        _ => true,
    }
}

fn report(id: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    if !selected(id) {
        return true;
    }
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let timing = match budget {
        Some(b) if took > b => format!(
            "{:.1} s, over the {:.0} s budget",
            took.as_secs_f64(),
            b.as_secs_f64()
        ),
        Some(b) => format!("{:.1} s of {:.0} s", took.as_secs_f64(), b.as_secs_f64()),
        None => format!("{:.1} s", took.as_secs_f64()),
    };
    let line = format!(
        "criterion {id} [{name}]: {} ({}; {timing})\n",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail
    );
    // Bypasses the test harness capture so the lines always show.
    let mut so = std::io::stdout().lock();
    let _ = so.write_all(line.as_bytes());
    let _ = so.flush();
    out.pass
}

fn preset(name: &str) -> SurfaceSpec {
    SurfaceSpec::preset(name).unwrap_or_else(|| panic!("preset {name}"))
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

fn sphere_convergence() -> Outcome {
    let job = JobSpec::new(preset("sphere"), 0.4, 10);
    let exact = sphere_spectrum(1.0, 10);
    let inf = match convergence_study(&job, &[0.4, 0.2, 0.1], Norm::Inf, &exact, 1) {
        Ok(t) => t,
        Err(e) => return fail(format!("study failed: {e}")),
    };
    let two = inf.renormed(&exact, Norm::Two);
    let fine = &inf.rows[2].spectrum.values;
    let rel = |range: std::ops::Range<usize>, v: f64| {
        range.map(|i| (fine[i] - v).abs() / v).fold(0.0, f64::max)
    };
    let (e2, e6) = (rel(1..4, 2.0), rel(4..9, 6.0));
    Outcome {
        pass: in_range(inf.slope, 1.5, 2.5)
            && in_range(two.slope, 1.5, 2.5)
            && e2 < 0.05
            && e6 < 0.05,
        detail: format!(
            "slopes inf {:.3} two {:.3}; relative error at dx=0.1 for 2: {e2:.2e}, for 6: {e6:.2e}",
            inf.slope, two.slope
        ),
    }
}

fn circle_and_arc() -> Outcome {
    let circle = match run_job(&JobSpec::new(preset("circle"), 0.02, 7)) {
        Ok(o) => o.spectrum.values,
        Err(e) => return fail(format!("circle failed: {e}")),
    };
    let want = circle_spectrum(1.0, 7).values;
    let circle_err = circle
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs() / b.max(1.0))
        .fold(0.0, f64::max);

    let k = 5;
    let exact = interval_spectrum(BoundaryCondition::Dirichlet, k);
    let job = JobSpec::new(preset("arc-dirichlet"), 0.1, k);
    let table = match convergence_study(&job, &[0.1, 0.05, 0.025], Norm::Inf, &exact, 1) {
        Ok(t) => t,
        Err(e) => return fail(format!("arc failed: {e}")),
    };
    let fine = &table.rows[2].spectrum.values;
    let arc_err = fine
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    Outcome {
        pass: circle.len() == 7 && circle_err <= 0.02 && in_range(table.slope, 1.5, 2.5) && arc_err <= 0.02,
        detail: format!(
            "circle max relative error {circle_err:.2e}; arc slope {:.3}, relative error at dx=0.025 {arc_err:.2e}",
            table.slope
        ),
    }
}

fn hemisphere_order() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
        let name = format!("hemisphere-{bc}");
        let exact: ExactSpectrum = hemisphere_spectrum(bc, 1.0, 6);
        let job = JobSpec::new(preset(&name), 0.2, 6);
        match convergence_study(&job, &[0.2, 0.1, 0.05], Norm::Inf, &exact, 1) {
            Ok(t) => {
                let errs: Vec<f64> = t.rows.iter().map(|r| r.error).collect();
                let approaching = errs.windows(2).all(|w| w[1] < w[0]);
                pass &= in_range(t.slope, 0.5, 1.5) && approaching;
                parts.push(format!(
                    "{bc} slope {:.3} errors {:.2e}/{:.2e}/{:.2e}",
                    t.slope, errs[0], errs[1], errs[2]
                ));
            }
            Err(e) => return fail(format!("{bc} failed: {e}")),
        }
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn rotational_invariance() -> Outcome {
    let job = JobSpec::new(preset("ellipsoid-2-1-1"), 0.2, 10);
    let transforms: Vec<StudyTransform> = [PI / 5.0, PI / 4.0, PI / 3.0, PI / 2.0]
        .iter()
        .map(|&angle| StudyTransform::Rotation {
            axis: [0.0, 0.0, 1.0],
            angle,
        })
        .collect();
    let table = match invariance_study(&job, &transforms, &[0.2, 0.1, 0.05], 1) {
        Ok(t) => t,
        Err(e) => return fail(format!("study failed: {e}")),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, slope) in &table.slopes {
        let d: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| &r.transform == label)
            .map(|r| r.distance)
            .collect();
        let decreasing = d.windows(2).all(|w| w[1] < w[0]);
        pass &= decreasing && in_range(*slope, 1.5, 2.5);
        let mut part = format!(
            "{label} slope {slope:.3} [{:.2e} {:.2e} {:.2e}]",
            d[0], d[1], d[2]
        );
        if d.iter().all(|&x| x < 1e-9) {
            part.push_str(" (grid maps onto itself, distances are rounding only)");
        }
        parts.push(part);
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn scale_invariance() -> Outcome {
    // Exact invariance of the normalization on synthetic spectra.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bitwise = true;
    for _ in 0..200 {
        let mut v: Vec<f64> = (0..30).map(|_| rng.random_range(0.01..100.0)).collect();
        v.sort_by(f64::total_cmp);
        v.insert(0, 0.0);
        let e = rng.random_range(-30..30);
        let scaled: Vec<f64> = v.iter().map(|x| x * 2f64.powi(e)).collect();
        let a = normalize_values(&v, ZeroTol::Auto, "a").unwrap();
        let b = normalize_values(&scaled, ZeroTol::Auto, "b").unwrap();
        bitwise &= a
            .values
            .iter()
            .zip(&b.values)
            .all(|(x, y)| x.to_bits() == y.to_bits());
    }

    let job = JobSpec::new(preset("torus-0.5-1"), 0.2, 10);
    let table = match invariance_study(
        &job,
        &[StudyTransform::Scale { factor: 2.0 }],
        &[0.2, 0.1, 0.05],
        1,
    ) {
        Ok(t) => t,
        Err(e) => return fail(format!("study failed: {e}")),
    };
    let d: Vec<f64> = table.rows.iter().map(|r| r.distance).collect();
    let slope = table.slopes[0].1;
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: bitwise && decreasing && in_range(slope, 1.5, 2.5),
        detail: format!(
            "bitwise power-of-two invariance {}; torus DNA distances {:.2e}/{:.2e}/{:.2e}, slope {slope:.3}",
            if bitwise { "holds" } else { "broken" },
            d[0],
            d[1],
            d[2]
        ),
    }
}

fn preconditioning() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for dx in [0.1, 0.05] {
        let job = JobSpec::new(preset("sphere"), dx, 10);
        // The unpreconditioned solve is stopped at 4x the preconditioned
        // time, which already decides a 3x threshold.
        let r = match bench_solver(&job, &[true, false], Some(4.0)) {
            Ok(r) => r,
            Err(e) => return fail(format!("dx={dx}: {e}")),
        };
        let speedup = r.speedup.unwrap_or(0.0);
        let on = r.runs.iter().find(|x| x.precondition).unwrap();
        let off = r.runs.iter().find(|x| !x.precondition).unwrap();
        pass &= speedup >= 3.0;
        parts.push(format!(
            "dx={dx} N={}: {:.1} s vs {:.1} s{}, speedup {}{speedup:.2}",
            r.band_points,
            on.seconds,
            off.seconds,
            if off.completed { "" } else { " (stopped)" },
            if r.speedup_is_lower_bound { ">= " } else { "" }
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn dense_oracle() -> Outcome {
    let job = JobSpec::new(preset("circle"), 0.15, 10);
    let (band, op) = assemble_job(&job).unwrap();
    let n = band.len();
    if n > 400 {
        return fail(format!("band has {n} points, more than 400"));
    }
    let sigma = 0.1;
    let res = arnoldi_smallest(
        &op.m,
        &EigenOptions {
            k: 10,
            ..Default::default()
        },
    )
    .unwrap();
    let dense = DMatrix::from_row_slice(n, n, &op.m.to_dense().concat());
    let mut all: Vec<C64> = dense_eig(&dense).unwrap();
    let key = |v: &C64| ((v - sigma).norm(), v.re);
    all.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let mut want: Vec<f64> = all[..10].iter().map(|v| v.re).collect();
    let mut got: Vec<f64> = res.pairs.iter().map(|p| p.value.re).collect();
    want.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    let worst = got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let imag = all[..10]
        .iter()
        .chain(res.pairs.iter().map(|p| &p.value))
        .fold(0.0f64, |m, v| m.max(v.im.abs()));
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("N={n}, worst relative difference {worst:.2e}, max |Im| {imag:.1e}"),
    }
}

fn torus_clustering() -> Outcome {
    let dx = 0.05;
    let k = 10;
    let shapes = ["torus-0.4-1", "torus-0.3-1", "torus-0.2-1", "circle-3d"];
    let mut dnas = Vec::new();
    for name in shapes {
        match run_job(&JobSpec::new(preset(name), dx, k)) {
            Ok(o) => dnas.push(normalize_dna(&o.spectrum, ZeroTol::Auto, name).unwrap()),
            Err(e) => return fail(format!("{name}: {e}")),
        }
    }
    let d = dissimilarity_matrix(&dnas, k).unwrap();
    let init = classical_mds(&d, 1).unwrap();
    let emb = smacof(&d, 1, Some(&init), &SmacofOptions::default()).unwrap();
    let x: Vec<f64> = emb.points.iter().map(|p| p[0]).collect();
    let increasing = x.windows(2).all(|w| w[1] > w[0]);
    let decreasing = x.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: increasing || decreasing,
        detail: format!(
            "coordinates r=0.4 {:.4}, r=0.3 {:.4}, r=0.2 {:.4}, circle {:.4}",
            x[0], x[1], x[2], x[3]
        ),
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DissimilarityMatrix {
    let p: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = p[i]
                .iter()
                .zip(&p[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
        }
    }
    DissimilarityMatrix::new((0..n).map(|i| i.to_string()).collect(), data).unwrap()
}

fn mds_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_exact = 0.0f64;
    for t in 0..30 {
        let dim = 1 + t % 3;
        let d = random_points(&mut rng, 4 + t % 17, dim);
        let e = classical_mds(&d, dim).unwrap();
        worst_exact = d
            .data
            .iter()
            .zip(e.distances())
            .map(|(a, b)| (a - b).abs())
            .fold(worst_exact, f64::max);
    }
    let mut monotone = true;
    let mut worst_rise = 0.0f64;
    for t in 0..100 {
        let n = 5 + t % 11;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random_range(0.1..1.0);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        let d = DissimilarityMatrix::new((0..n).map(|i| i.to_string()).collect(), data).unwrap();
        let dim = 2 + t % 2;
        let init = classical_mds(&d, dim).unwrap();
        let e = smacof(&d, dim, Some(&init), &SmacofOptions::default()).unwrap();
        let steps = e.stress_history.windows(2).all(|w| w[1] <= w[0]);
        monotone &= steps && e.stress <= init.stress;
        worst_rise = worst_rise.max(e.rejected_increase.unwrap_or(0.0));
    }
    // A discarded step may only exceed the previous stress by rounding.
    let rounding_only = worst_rise <= 1e-12;
    Outcome {
        pass: worst_exact <= 1e-8 && monotone && rounding_only,
        detail: format!(
            "classical max distance error {worst_exact:.1e}; SMACOF monotone on 100 instances: {monotone}, largest discarded rise {worst_rise:.1e}"
        ),
    }
}

fn mesh_oracle() -> Outcome {
    let mesh = icosphere(4, 1.0);
    let tris = mesh.triangles().len();
    let surface = MeshSurface::new(mesh);
    let m = surface.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = Vec3::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        );
        let (fast, _) = surface.query(&x);
        let brute = (0..tris)
            .map(|t| {
                let [a, b, c] = m.triangle(t);
                (closest_point_on_triangle(&x, &a, &b, &c).0 - x).norm()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst
            .max((fast.dist - brute).abs())
            .max(((fast.cp - x).norm() - fast.dist).abs());
    }
    let spec = match run_job(&JobSpec::new(preset("icosphere-4"), 0.2, 4)) {
        Ok(o) => o.spectrum.values,
        Err(e) => return fail(format!("mesh spectrum failed: {e}")),
    };
    let exact = sphere_spectrum(1.0, 4).values;
    let spec_err = spec
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs() / b.max(1.0))
        .fold(0.0, f64::max);
    Outcome {
        pass: tris >= 5000 && worst <= 1e-10 && spec.len() == 4 && spec_err <= 0.10,
        detail: format!(
            "{tris} triangles, worst query mismatch {worst:.1e}; spectrum {:?}, max relative error {spec_err:.3}",
            spec.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    }
}

#[test]
fn acceptance() {
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let results = [
        report(1, "sphere convergence", min(3), sphere_convergence),
        report(2, "circle and arc", min(1), circle_and_arc),
        report(3, "hemisphere boundary order", min(5), hemisphere_order),
        report(4, "rotational invariance", min(10), rotational_invariance),
        report(5, "scale invariance", None, scale_invariance),
        report(6, "preconditioning benefit", None, preconditioning),
        report(
            7,
            "dense oracle equivalence",
            Some(Duration::from_secs(30)),
            dense_oracle,
        ),
        report(8, "torus thickness clustering", min(15), torus_clustering),
        report(
            9,
            "MDS correctness",
            Some(Duration::from_secs(10)),
            mds_checks,
        ),
        report(10, "mesh closest points", min(2), mesh_oracle),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
