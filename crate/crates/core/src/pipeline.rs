//! Surface to spectrum to fingerprint, and the experiments built on it.

use crate::band::{build_band, BandError, BandGrid};
use crate::eigen::{
    arnoldi_smallest, extract_spectrum, EigenError, EigenOptions, EigenStats, Sigma, Spectrum,
    SpectrumMeta,
};
use crate::formats::{self, FormatError};
use crate::geometry::{axis_angle_matrix, Mat3, Vec3};
use crate::linalg::GmresOptions;
use crate::operators::{assemble_lb, DiscreteLB, Gamma, OperatorError};
use crate::oracle::ExactSpectrum;
use crate::shapedna::{dna_distance, normalize_dna, DnaError, ZeroTol};
use crate::surfaces::{SurfaceError, SurfaceSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::{Duration, Instant};

/// Interpolation degree that sizes the band (the higher of the two
/// extension degrees).
pub const BAND_DEGREE: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("surface: {0}")]
    Surface(#[from] SurfaceError),
    #[error("band construction: {0}")]
    Band(#[from] BandError),
    #[error("operator assembly: {0}")]
    Operator(#[from] OperatorError),
    #[error("eigensolver: {0}")]
    Eigen(#[from] EigenError),
    #[error("shape DNA: {0}")]
    Dna(#[from] DnaError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl PipelineError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PipelineError::Eigen(
                EigenError::NoConvergence { .. }
                    | EigenError::ComplexSpectrum { .. }
                    | EigenError::ZeroPivot(_)
                    | EigenError::TimeLimit { .. }
            )
        )
    }
}

fn default_inner_tol() -> f64 {
    GmresOptions::default().tol
}
fn default_restart() -> usize {
    GmresOptions::default().restart
}
fn default_max_restarts() -> usize {
    GmresOptions::default().max_restarts
}
fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    42
}
fn default_residual_tol() -> f64 {
    1e-6
}

/// Everything needed to reproduce one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub surface: SurfaceSpec,
    pub dx: f64,
    pub k: usize,
    #[serde(default)]
    pub gamma: Gamma,
    #[serde(default)]
    pub sigma: Sigma,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_max_restarts")]
    pub max_restarts: usize,
    #[serde(default = "default_true")]
    pub precondition: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(surface: SurfaceSpec, dx: f64, k: usize) -> Self {
        Self {
            surface,
            dx,
            k,
            gamma: Gamma::Auto,
            sigma: Sigma::Auto,
            inner_tol: default_inner_tol(),
            restart: default_restart(),
            max_restarts: default_max_restarts(),
            precondition: true,
            seed: default_seed(),
            residual_tol: default_residual_tol(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(PipelineError::InvalidJob(format!(
                "dx must be positive, got {}",
                self.dx
            )));
        }
        if self.k == 0 {
            return Err(PipelineError::InvalidJob("k must be at least 1".into()));
        }
        if !(self.inner_tol > 0.0) || self.restart == 0 {
            return Err(PipelineError::InvalidJob(
                "inner_tol must be positive and restart at least 1".into(),
            ));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(PipelineError::InvalidJob(format!(
                    "gamma must be positive, got {g}"
                )));
            }
        }
        if let Sigma::Value(s) = self.sigma {
            if !s.is_finite() {
                return Err(PipelineError::InvalidJob(format!(
                    "sigma must be finite, got {s}"
                )));
            }
        }
        if let crate::surfaces::SurfaceKind::Mesh { path: Some(p), .. } = &self.surface.kind {
            if !p.exists() {
                return Err(PipelineError::InvalidJob(format!(
                    "mesh file {} does not exist",
                    p.display()
                )));
            }
        }
        self.surface.validate()?;
        Ok(())
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            k: self.k,
            sigma: self.sigma,
            inner: GmresOptions {
                tol: self.inner_tol,
                restart: self.restart,
                max_restarts: self.max_restarts,
            },
            precondition: self.precondition,
            seed: self.seed,
            residual_tol: self.residual_tol,
            ..EigenOptions::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("job serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let job: JobSpec =
            serde_json::from_str(text).map_err(|e| PipelineError::InvalidJob(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }

    pub fn with_dx(&self, dx: f64) -> Self {
        Self { dx, ..self.clone() }
    }
}

/// Band and assembled operator of a job.
pub fn assemble_job(job: &JobSpec) -> Result<(BandGrid, DiscreteLB), PipelineError> {
    job.validate()?;
    let field = job.surface.build()?;
    let band = build_band(field.as_ref(), job.dx, BAND_DEGREE)?;
    let op = assemble_lb(&band, job.surface.bc, job.gamma)?;
    Ok((band, op))
}

/// A computed spectrum with solver statistics and wall time.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub spectrum: Spectrum,
    pub stats: EigenStats,
    pub seconds: f64,
}

pub fn run_job(job: &JobSpec) -> Result<JobOutput, PipelineError> {
    let start = Instant::now();
    let (band, op) = assemble_job(job)?;
    if job.k + 20 > band.len() {
        return Err(PipelineError::InvalidJob(format!(
            "k = {} needs at least {} band points, the band has {}; use a smaller dx or k",
            job.k,
            job.k + 20,
            band.len()
        )));
    }
    let opts = job.eigen_options();
    let res = arnoldi_smallest(&op.m, &opts)?;
    let meta = SpectrumMeta {
        surface: job.surface.label(),
        dx: job.dx,
        bc: job.surface.bc,
        gamma: op.gamma,
        sigma: res.stats.sigma,
        k: job.k,
        band_points: band.len(),
        bandwidth: band.bandwidth(),
    };
    let spectrum = extract_spectrum(&res.pairs, meta)?;
    log::info!(
        "{} dx={}: {} points, {} cycles, {} inner iterations",
        job.surface.label(),
        job.dx,
        band.len(),
        res.stats.cycles,
        res.stats.inner_iterations
    );
    Ok(JobOutput {
        spectrum,
        stats: res.stats,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn compute_spectrum(job: &JobSpec) -> Result<Spectrum, PipelineError> {
    Ok(run_job(job)?.spectrum)
}

/// Spectrum CSV carrying the job as metadata, so the file can be re-run.
pub fn spectrum_file(job: &JobSpec, spectrum: &Spectrum) -> String {
    let value = serde_json::to_value(job).expect("job serializes");
    formats::spectrum_csv(spectrum, &[("job", value)])
}

/// Recovers the job recorded in a spectrum file.
pub fn job_from_spectrum_file(text: &str) -> Result<JobSpec, PipelineError> {
    let (_, raw) = formats::parse_spectrum_csv(text)?;
    let body = raw
        .iter()
        .find(|(n, _)| n == "job")
        .map(|(_, b)| b.as_str())
        .ok_or(FormatError::MissingMeta("job"))?;
    JobSpec::from_json(body)
}

/// Runs independent jobs on at most `workers` threads, preserving order.
pub fn run_jobs(jobs: &[JobSpec], workers: usize) -> Result<Vec<JobOutput>, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::InvalidJob(format!("cannot start worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(run_job).collect())
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Inf,
    Two,
}

pub fn error_norm(computed: &[f64], exact: &[f64], norm: Norm) -> f64 {
    let diffs = computed.iter().zip(exact).map(|(a, b)| (a - b).abs());
    match norm {
        Norm::Inf => diffs.fold(0.0, f64::max),
        Norm::Two => diffs.map(|d| d * d).sum::<f64>().sqrt(),
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub error: f64,
    pub spectrum: Spectrum,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub norm: Norm,
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
}

impl ConvergenceTable {
    /// Error and slope of the same spectra under another norm.
    pub fn renormed(&self, oracle: &ExactSpectrum, norm: Norm) -> ConvergenceTable {
        let rows: Vec<ConvergenceRow> = self
            .rows
            .iter()
            .map(|r| {
                let k = r.spectrum.values.len().min(oracle.len());
                ConvergenceRow {
                    error: error_norm(&r.spectrum.values[..k], &oracle.values[..k], norm),
                    ..r.clone()
                }
            })
            .collect();
        let slope = fit_slope(
            &rows.iter().map(|r| r.dx).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.error).collect::<Vec<_>>(),
        );
        ConvergenceTable { norm, rows, slope }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# convergence {}\n",
            serde_json::json!({ "norm": self.norm, "slope": self.slope })
        );
        out += "dx,error,seconds\n";
        for r in &self.rows {
            out += &format!(
                "{},{},{}\n",
                formats::real(r.dx),
                formats::real(r.error),
                formats::real(r.seconds)
            );
        }
        out += &format!("slope,{}\n", formats::real(self.slope));
        out
    }
}

/// Errors of the first `job.k` eigenvalues against `oracle` for each `dx`,
/// with the fitted log-log slope.
pub fn convergence_study(
    job: &JobSpec,
    dx_list: &[f64],
    norm: Norm,
    oracle: &ExactSpectrum,
    workers: usize,
) -> Result<ConvergenceTable, PipelineError> {
    if dx_list.len() < 3 {
        return Err(PipelineError::InvalidJob(
            "a convergence study needs at least 3 dx values".into(),
        ));
    }
    if oracle.len() < job.k {
        return Err(PipelineError::InvalidJob(format!(
            "oracle has {} values, k = {}",
            oracle.len(),
            job.k
        )));
    }
    let jobs: Vec<JobSpec> = dx_list.iter().map(|&dx| job.with_dx(dx)).collect();
    let outs = run_jobs(&jobs, workers)?;
    let mut rows = Vec::with_capacity(outs.len());
    for (dx, out) in dx_list.iter().zip(outs) {
        if out.spectrum.values.len() < job.k {
            return Err(DnaError::LengthMismatch {
                needed: job.k,
                got: out.spectrum.values.len(),
            }
            .into());
        }
        let error = error_norm(&out.spectrum.values[..job.k], &oracle.values[..job.k], norm);
        rows.push(ConvergenceRow {
            dx: *dx,
            error,
            spectrum: out.spectrum,
            seconds: out.seconds,
        });
    }
    let slope = fit_slope(dx_list, &rows.iter().map(|r| r.error).collect::<Vec<_>>());
    Ok(ConvergenceTable { norm, rows, slope })
}

/// A rigid rotation or a uniform scaling applied to the base surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StudyTransform {
    Rotation { axis: [f64; 3], angle: f64 },
    Scale { factor: f64 },
}

impl StudyTransform {
    pub fn label(&self) -> String {
        match self {
            StudyTransform::Rotation { axis, angle } => {
                format!("rotate({},{},{};{angle})", axis[0], axis[1], axis[2])
            }
            StudyTransform::Scale { factor } => format!("scale({factor})"),
        }
    }

    fn apply(&self, s: &SurfaceSpec) -> Result<SurfaceSpec, SurfaceError> {
        match self {
            StudyTransform::Rotation { axis, angle } => {
                let r: Mat3 = axis_angle_matrix(&Vec3::from(*axis), *angle);
                s.transformed(r, 1.0, Vec3::zeros())
            }
            StudyTransform::Scale { factor } => {
                s.transformed(Mat3::identity(), *factor, Vec3::zeros())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvarianceRow {
    pub transform: String,
    pub dx: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct InvarianceTable {
    pub rows: Vec<InvarianceRow>,
    /// Fitted slope per transform label, in input order.
    pub slopes: Vec<(String, f64)>,
}

impl InvarianceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# invariance {}\ntransform,dx,distance\n");
        for r in &self.rows {
            out += &format!(
                "{},{},{}\n",
                r.transform,
                formats::real(r.dx),
                formats::real(r.distance)
            );
        }
        for (t, s) in &self.slopes {
            out += &format!("slope,{t},{}\n", formats::real(*s));
        }
        out
    }
}

/// Distance between the base spectrum and each transformed one at every
/// `dx`: raw eigenvalues for rotations, normalized fingerprints for
/// scalings. Transformed surfaces get their own bands.
pub fn invariance_study(
    job: &JobSpec,
    transforms: &[StudyTransform],
    dx_list: &[f64],
    workers: usize,
) -> Result<InvarianceTable, PipelineError> {
    if transforms.is_empty() || dx_list.is_empty() {
        return Err(PipelineError::InvalidJob(
            "need at least one transform and one dx".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &dx in dx_list {
        jobs.push(job.with_dx(dx));
        for t in transforms {
            jobs.push(JobSpec {
                surface: t.apply(&job.surface)?,
                dx,
                ..job.clone()
            });
        }
    }
    let outs = run_jobs(&jobs, workers)?;
    let stride = transforms.len() + 1;
    let mut rows = Vec::new();
    for (di, &dx) in dx_list.iter().enumerate() {
        let base = &outs[di * stride].spectrum;
        for (ti, t) in transforms.iter().enumerate() {
            let other = &outs[di * stride + ti + 1].spectrum;
            let k = job.k.min(base.len()).min(other.len());
            let distance = match t {
                StudyTransform::Rotation { .. } => {
                    error_norm(&base.values[..k], &other.values[..k], Norm::Two)
                }
                StudyTransform::Scale { .. } => {
                    let a = normalize_dna(base, ZeroTol::Auto, "base")?;
                    let b = normalize_dna(other, ZeroTol::Auto, "scaled")?;
                    dna_distance(&a, &b, k)?
                }
            };
            rows.push(InvarianceRow {
                transform: t.label(),
                dx,
                distance,
            });
        }
    }
    let slopes = transforms
        .iter()
        .map(|t| {
            let label = t.label();
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.transform == label)
                .map(|r| (r.dx, r.distance))
                .unzip();
            let slope = if x.len() >= 2 {
                fit_slope(&x, &y)
            } else {
                f64::NAN
            };
            (label, slope)
        })
        .collect();
    Ok(InvarianceTable { rows, slopes })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub precondition: bool,
    pub seconds: f64,
    /// False when the run was stopped at the time cap.
    pub completed: bool,
    pub inner_iterations: Option<usize>,
    pub solves: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub surface: String,
    pub dx: f64,
    pub band_points: usize,
    pub runs: Vec<BenchRun>,
    /// Unpreconditioned over preconditioned eigensolve wall time, when both ran.
    pub speedup: Option<f64>,
    /// Set when the unpreconditioned run hit the cap, so `speedup` is only a lower bound.
    pub speedup_is_lower_bound: bool,
}

/// Times the eigensolve of one operator with and without ILU(0)
/// preconditioning. Band construction and assembly are excluded.
///
/// With `cap` set, the preconditioned solve runs first and the
/// unpreconditioned one is stopped once it has taken `cap` times as long.
pub fn bench_solver(
    job: &JobSpec,
    settings: &[bool],
    cap: Option<f64>,
) -> Result<BenchReport, PipelineError> {
    let (band, op) = assemble_job(job)?;
    let mut order: Vec<bool> = settings.to_vec();
    if cap.is_some() {
        order.sort_by_key(|&p| !p);
    }
    let mut runs: Vec<BenchRun> = Vec::new();
    for &pre in &order {
        let pre_time = runs.iter().find(|r| r.precondition).map(|r| r.seconds);
        let time_limit = match (pre, cap, pre_time) {
            (false, Some(c), Some(t)) => Some(Duration::from_secs_f64(c * t)),
            _ => None,
        };
        let opts = EigenOptions {
            precondition: pre,
            time_limit,
            ..job.eigen_options()
        };
        let start = Instant::now();
        let run = match arnoldi_smallest(&op.m, &opts) {
            Ok(res) => BenchRun {
                precondition: pre,
                seconds: start.elapsed().as_secs_f64(),
                completed: true,
                inner_iterations: Some(res.stats.inner_iterations),
                solves: res.stats.solves,
            },
            Err(EigenError::TimeLimit { solves, .. }) => BenchRun {
                precondition: pre,
                seconds: start.elapsed().as_secs_f64(),
                completed: false,
                inner_iterations: None,
                solves,
            },
            Err(e) => return Err(e.into()),
        };
        runs.push(run);
    }
    let find = |p: bool| runs.iter().find(|r| r.precondition == p);
    let speedup = match (find(false), find(true)) {
        (Some(off), Some(on)) => Some(off.seconds / on.seconds),
        _ => None,
    };
    let speedup_is_lower_bound = find(false).is_some_and(|r| !r.completed);
    Ok(BenchReport {
        surface: job.surface.label(),
        dx: job.dx,
        band_points: band.len(),
        runs,
        speedup,
        speedup_is_lower_bound,
    })
}
