use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cpdna::eigen::{EigenError, Sigma};
use cpdna::formats::{self, write_atomic};
use cpdna::linalg::write_matrix_market;
use cpdna::mds::{classical_mds, smacof, SmacofOptions};
use cpdna::operators::Gamma;
use cpdna::oracle;
use cpdna::pipeline::{
    assemble_job, bench_solver, convergence_study, invariance_study, run_job, spectrum_file,
    JobSpec, Norm, PipelineError, StudyTransform,
};
use cpdna::shapedna::{default_k, dissimilarity_matrix, normalize_dna, ShapeDna, ZeroTol};
use cpdna::surfaces::SurfaceSpec;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cpdna",
    version,
    about = "Laplace-Beltrami spectra of surfaces by the closest point method"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the smallest eigenvalues of one surface.
    Spectrum(SpectrumArgs),
    /// Normalize a spectrum file into a shape fingerprint.
    Dna(DnaArgs),
    /// Pairwise fingerprint distances of several spectrum or fingerprint files.
    Dissim(DissimArgs),
    /// Embed a dissimilarity matrix in 1 to 3 dimensions.
    Mds(MdsArgs),
    /// Eigenvalue errors against the exact spectrum over several grid spacings.
    Converge(ConvergeArgs),
    /// Spectrum distances under rotations or scalings over several grid spacings.
    Invariance(InvarianceArgs),
    /// Time the eigensolve with and without ILU(0) preconditioning.
    BenchSolver(BenchArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Preset name (sphere, torus-0.5-1, ...) or a surface JSON file.
    #[arg(long, conflicts_with = "job")]
    surface: Option<String>,
    /// Full job JSON; flags given alongside it override its fields.
    #[arg(long)]
    job: Option<PathBuf>,
    /// Number of eigenvalues.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<i64>,
    /// Penalty weight; `auto` is 2·dim/dx².
    #[arg(long)]
    gamma: Option<String>,
    /// Shift; `auto` is 0.1.
    #[arg(long)]
    sigma: Option<String>,
    /// Relative residual tolerance of the inner GMRES solves.
    #[arg(long, allow_negative_numbers = true)]
    inner_tol: Option<f64>,
    /// GMRES restart length.
    #[arg(long)]
    restart: Option<usize>,
    /// Solve inner systems without ILU(0) preconditioning.
    #[arg(long)]
    no_precondition: bool,
    /// Seed of the Arnoldi start vectors.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Grid spacing.
    #[arg(long, allow_negative_numbers = true)]
    dx: Option<f64>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the assembled operator in Matrix Market format.
    #[arg(long)]
    dump_operator: Option<PathBuf>,
}

#[derive(Args)]
struct DnaArgs {
    /// Spectrum CSV produced by `spectrum`.
    #[arg(long)]
    spectrum: PathBuf,
    /// Values at or below this count as zero; default 1e-6 times the largest value.
    #[arg(long, allow_negative_numbers = true)]
    zero_tol: Option<f64>,
    /// Label stored in the fingerprint; defaults to the file stem.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DissimArgs {
    /// Spectrum or fingerprint CSV files, at least two.
    #[arg(required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Number of entries compared; default is the shortest length, at most 50.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MdsMethod {
    Classical,
    Smacof,
}

#[derive(Args)]
struct MdsArgs {
    /// Dissimilarity CSV produced by `dissim`.
    #[arg(long)]
    dissim: PathBuf,
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    dim: i64,
    #[arg(long, value_enum, default_value = "smacof")]
    method: MdsMethod,
    /// Stop once the relative stress decrease falls below this.
    #[arg(long, default_value_t = 1e-9, allow_negative_numbers = true)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Inf,
    Two,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated grid spacings, at least three.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    dx_list: Vec<f64>,
    #[arg(long, value_enum, default_value = "inf")]
    norm: NormArg,
    /// Worker threads for independent solves.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InvarianceArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    dx_list: Vec<f64>,
    /// Comma-separated rotation angles in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Vec<f64>,
    /// Rotation axis as `x,y,z`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 1.0], allow_negative_numbers = true)]
    axis: Vec<f64>,
    /// Comma-separated uniform scale factors.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precond {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, allow_negative_numbers = true)]
    dx: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    precond: Precond,
    /// Stop the unpreconditioned run after this multiple of the preconditioned
    /// time; the speedup is then reported as a lower bound.
    #[arg(long, allow_negative_numbers = true)]
    cap: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure kinds mapped onto exit codes.
enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        if is_numerical(&e) {
            Failure::Numerical(e)
        } else {
            Failure::Input(e)
        }
    }
}

fn is_numerical(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        if let Some(p) = c.downcast_ref::<PipelineError>() {
            return p.is_numerical();
        }
        matches!(
            c.downcast_ref::<EigenError>(),
            Some(
                EigenError::NoConvergence { .. }
                    | EigenError::ComplexSpectrum { .. }
                    | EigenError::ZeroPivot(_)
                    | EigenError::TimeLimit { .. }
            )
        )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

/// The error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out += ": ";
            }
            out += &msg;
        }
    }
    out
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Dna(a) => cmd_dna(a),
        Command::Dissim(a) => cmd_dissim(a),
        Command::Mds(a) => cmd_mds(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Invariance(a) => cmd_invariance(a),
        Command::BenchSolver(a) => cmd_bench(a),
    }
    .map_err(Failure::from)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_surface(arg: &str) -> Result<SurfaceSpec> {
    if let Some(s) = SurfaceSpec::preset(arg) {
        return Ok(s);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!("--surface: `{arg}` is neither a preset nor an existing JSON file");
    }
    SurfaceSpec::from_json_file(path).with_context(|| format!("--surface: reading {arg}"))
}

fn parse_auto(flag: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        return Ok(None);
    }
    v.parse::<f64>()
        .map(Some)
        .map_err(|_| anyhow!("{flag}: expected `auto` or a number, got `{v}`"))
}

fn positive(flag: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{flag} must be a positive number, got {v}");
    }
    Ok(v)
}

fn count(flag: &str, v: i64) -> Result<usize> {
    if v < 1 {
        bail!("{flag} must be at least 1, got {v}");
    }
    Ok(v as usize)
}

/// Builds the job from `--job` or `--surface`, then applies flag overrides.
fn build_job(a: &SolverArgs, dx: Option<f64>) -> Result<JobSpec> {
    let mut job = match (&a.job, &a.surface) {
        (Some(path), _) => {
            let text = formats::read_text(path)?;
            JobSpec::from_json(&text).with_context(|| format!("--job: {}", path.display()))?
        }
        (None, Some(s)) => JobSpec::new(load_surface(s)?, dx.unwrap_or(0.1), 10),
        (None, None) => bail!("one of --surface or --job is required"),
    };
    if let Some(dx) = dx {
        job.dx = positive("--dx", dx)?;
    } else if a.job.is_none() {
        bail!("--dx is required");
    }
    if let Some(k) = a.k {
        job.k = count("--k", k)?;
    }
    if let Some(g) = &a.gamma {
        job.gamma = match parse_auto("--gamma", g)? {
            None => Gamma::Auto,
            Some(v) => Gamma::Value(positive("--gamma", v)?),
        };
    }
    if let Some(s) = &a.sigma {
        job.sigma = match parse_auto("--sigma", s)? {
            None => Sigma::Auto,
            Some(v) if v.is_finite() => Sigma::Value(v),
            Some(v) => bail!("--sigma must be finite, got {v}"),
        };
    }
    if let Some(t) = a.inner_tol {
        job.inner_tol = positive("--inner-tol", t)?;
    }
    if let Some(r) = a.restart {
        if r == 0 {
            bail!("--restart must be at least 1");
        }
        job.restart = r;
    }
    if a.no_precondition {
        job.precondition = false;
    }
    if let Some(seed) = a.seed {
        job.seed = seed;
    }
    job.validate()?;
    Ok(job)
}

fn study_job(a: &SolverArgs, dx_list: &[f64]) -> Result<JobSpec> {
    if dx_list.is_empty() {
        bail!("--dx-list needs at least one value");
    }
    for &dx in dx_list {
        positive("--dx-list", dx)?;
    }
    build_job(a, Some(dx_list[0]))
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<()> {
    let job = build_job(&a.solver, a.dx)?;
    if let Some(path) = &a.dump_operator {
        let (_, op) = assemble_job(&job)?;
        let mut buf = Vec::new();
        write_matrix_market(&op.m, &mut buf)?;
        write_atomic(path, &String::from_utf8(buf)?)
            .with_context(|| format!("--dump-operator: {}", path.display()))?;
    }
    let out = run_job(&job)?;
    log::info!("{} eigenvalues in {:.2} s", out.spectrum.len(), out.seconds);
    emit(a.out.as_deref(), &spectrum_file(&job, &out.spectrum))
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_dna(a: DnaArgs) -> Result<()> {
    let text = formats::read_text(&a.spectrum)?;
    let (spec, _) = formats::parse_spectrum_csv(&text)
        .with_context(|| format!("--spectrum: {}", a.spectrum.display()))?;
    let tol = match a.zero_tol {
        None => ZeroTol::Auto,
        Some(t) if t >= 0.0 && t.is_finite() => ZeroTol::Value(t),
        Some(t) => bail!("--zero-tol must be nonnegative, got {t}"),
    };
    let label = a.label.unwrap_or_else(|| file_label(&a.spectrum));
    let dna = normalize_dna(&spec, tol, &label)?;
    emit(a.out.as_deref(), &formats::dna_csv(&dna))
}

/// Reads a fingerprint file, or normalizes a spectrum file on the fly.
fn load_dna(path: &Path) -> Result<ShapeDna> {
    let text = formats::read_text(path)?;
    if text.lines().any(|l| l.starts_with("# dna ")) {
        return formats::parse_dna_csv(&text)
            .with_context(|| format!("reading {}", path.display()));
    }
    let (spec, _) = formats::parse_spectrum_csv(&text)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(normalize_dna(&spec, ZeroTol::Auto, &file_label(path))?)
}

fn cmd_dissim(a: DissimArgs) -> Result<()> {
    if a.inputs.len() < 2 {
        bail!("dissim needs at least two input files");
    }
    let dnas: Vec<ShapeDna> = a
        .inputs
        .iter()
        .map(|p| load_dna(p))
        .collect::<Result<_>>()?;
    let k = match a.k {
        Some(k) => count("--k", k)?,
        None => default_k(&dnas),
    };
    let d = dissimilarity_matrix(&dnas, k)?;
    emit(a.out.as_deref(), &formats::dissimilarity_csv(&d, k))
}

fn cmd_mds(a: MdsArgs) -> Result<()> {
    let dim = count("--dim", a.dim)?;
    if dim > 3 {
        bail!("--dim must be 1, 2 or 3, got {dim}");
    }
    positive("--tol", a.tol)?;
    let text = formats::read_text(&a.dissim)?;
    let d = formats::parse_dissimilarity_csv(&text)
        .with_context(|| format!("--dissim: {}", a.dissim.display()))?;
    let init = classical_mds(&d, dim)?;
    let emb = match a.method {
        MdsMethod::Classical => init,
        MdsMethod::Smacof => smacof(
            &d,
            dim,
            Some(&init),
            &SmacofOptions {
                tol: a.tol,
                max_iter: a.max_iter,
            },
        )?,
    };
    log::info!(
        "stress {:.3e} after {} iterations",
        emb.stress,
        emb.iterations
    );
    emit(a.out.as_deref(), &formats::embedding_csv(&emb))
}

fn job_header(job: &JobSpec) -> String {
    format!("# job {}\n", job.to_json())
}

fn cmd_converge(a: ConvergeArgs) -> Result<()> {
    let job = study_job(&a.solver, &a.dx_list)?;
    let oracle = oracle::for_surface(&job.surface, job.k).ok_or_else(|| {
        anyhow!(
            "--surface: no exact spectrum is known for {}",
            job.surface.label()
        )
    })?;
    let norm = match a.norm {
        NormArg::Inf => Norm::Inf,
        NormArg::Two => Norm::Two,
    };
    let table = convergence_study(&job, &a.dx_list, norm, &oracle, a.jobs.max(1))?;
    let mut text = job_header(&job);
    for r in &table.rows {
        text += &format!("# band {}\n", band_json(&r.spectrum.meta));
    }
    text += &table.to_csv();
    emit(a.out.as_deref(), &text)
}

fn band_json(m: &cpdna::eigen::SpectrumMeta) -> String {
    format!(
        r#"{{"dx":{},"points":{},"bandwidth":{}}}"#,
        m.dx, m.band_points, m.bandwidth
    )
}

fn cmd_invariance(a: InvarianceArgs) -> Result<()> {
    let job = study_job(&a.solver, &a.dx_list)?;
    let axis: [f64; 3] = a
        .axis
        .as_slice()
        .try_into()
        .map_err(|_| anyhow!("--axis needs three components"))?;
    if axis.iter().all(|&c| c == 0.0) {
        bail!("--axis must be nonzero");
    }
    let mut transforms: Vec<StudyTransform> = a
        .angles
        .iter()
        .map(|&angle| StudyTransform::Rotation { axis, angle })
        .collect();
    for &f in &a.scales {
        transforms.push(StudyTransform::Scale {
            factor: positive("--scales", f)?,
        });
    }
    if transforms.is_empty() {
        bail!("give --angles, --scales or both");
    }
    let table = invariance_study(&job, &transforms, &a.dx_list, a.jobs.max(1))?;
    emit(a.out.as_deref(), &(job_header(&job) + &table.to_csv()))
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let job = build_job(&a.solver, a.dx)?;
    let settings: &[bool] = match a.precond {
        Precond::On => &[true],
        Precond::Off => &[false],
        Precond::Both => &[true, false],
    };
    let cap = a.cap.map(|c| positive("--cap", c)).transpose()?;
    let report = bench_solver(&job, settings, cap)?;
    let mut text = job_header(&job);
    text += &serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(a.out.as_deref(), &text)
}
