//! Command-line surface and its file formats.
//!
//! One command produces one artifact file plus a human-readable log on
//! stderr; identical command lines (including seeds) produce byte-identical
//! outputs. Floating point values are written with 17 significant digits so
//! that 1e-13-scale comparisons survive serialization.
//!
//! Exit codes: 0 success/converged, 1 usage or I/O failure, 2 degenerate
//! Gram matrix (information-incomplete data), 3 solver non-convergence
//! (the model file is still written).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    fidelity_sweep, interpolate_scalar, recover_dynamics, GeneratorKind, GeneratorSpec,
};
use crate::model::{
    Channel, ObservationRecord, ObservationSample, PartialIsometry, SolverConfig,
    SolverReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// 17 significant digits; enough to round-trip any f64 exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Parser, Debug)]
#[command(
    name = "unifit",
    version,
    about = "Learn partially unitary operators from phase-stripped observation pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an observation sample file
    Gen(GenArgs),
    /// Maximize fidelity over partially unitary operators
    Solve(SolveArgs),
    /// Compare a solved model against a reference matrix up to global sign
    Compare(CompareArgs),
    /// Fidelity sweep over all output dimensions d = 1..=n
    Sweep(SweepArgs),
    /// Scalar function interpolation through the channel
    Interp(InterpArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Trajectory of a rotation given by three Euler angles
    Euler3 {
        /// phi,theta,psi in radians
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.4,0.7")]
        angles: Vec<f64>,
        /// Unit-norm initial vector a,b,c
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.09205746178983236,0.5523447707389941,0.8285171561084912"
        )]
        x0: Vec<f64>,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Multiply each observation side by an independent random sign
        #[arg(long)]
        flips: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the generating matrix for later comparison
        #[arg(long)]
        ref_out: Option<PathBuf>,
    },
    /// Trajectory of a seeded random orthogonal matrix
    Ortho {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        flips: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ref_out: Option<PathBuf>,
    },
    /// Chebyshev values mapped to Legendre values with random signs
    Poly {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scalar pairs (x, x^power) on an equidistant grid in [-1, 1]
    Func {
        #[arg(long, default_value_t = 2)]
        power: u32,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// gram | unit
    #[arg(long, default_value = "gram", value_parser = parse_channel)]
    channel: Channel,
    /// Keep only the first n input components
    #[arg(long)]
    n: Option<usize>,
    /// Keep only the first d output components
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 4)]
    runs: usize,
    /// Eigenstate rank of the first run (0 = largest eigenvalue)
    #[arg(long, default_value_t = 0)]
    rank: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Rank candidates by adjusted fidelity instead of eigenvalue index
    #[arg(long)]
    scan: bool,
    /// Provenance seed recorded in the model file
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Print one line per iteration: index, mu, F, sum 1/lambda_G
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    runs: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InterpArgs {
    /// Scalar sample file (one x column, one f column)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Number of query points taken evenly from the sorted sample
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    runs: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_channel(s: &str) -> std::result::Result<Channel, String> {
    match s {
        "gram" => Ok(Channel::Gram),
        "unit" => Ok(Channel::Unit),
        other => Err(format!("unknown channel '{other}' (expected gram or unit)")),
    }
}

// ── Sample files ─────────────────────────────────────────────────────

/// Write a sample as CSV with the self-describing header
/// `weight,x0..x{n-1},f0..f{d-1}`.
pub fn write_sample(path: &Path, sample: &ObservationSample) -> Result<()> {
    let (n, d) = (sample.n(), sample.d());
    let mut out = String::from("weight");
    for k in 0..n {
        write!(out, ",x{k}").unwrap();
    }
    for j in 0..d {
        write!(out, ",f{j}").unwrap();
    }
    out.push('\n');
    for r in sample.records() {
        out.push_str(&format_f64(r.weight));
        for v in r.alpha.iter() {
            out.push(',');
            out.push_str(&format_f64(*v));
        }
        for v in r.beta.iter() {
            out.push(',');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn malformed(path: &Path, detail: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

/// Read a sample file, inferring `n` and `d` from the header.
pub fn read_sample(path: &Path) -> Result<ObservationSample> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed(path, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"weight") {
        return Err(malformed(path, "first header column must be 'weight'"));
    }
    let mut n = 0;
    let mut idx = 1;
    while idx < cols.len() && cols[idx] == format!("x{n}") {
        n += 1;
        idx += 1;
    }
    let mut d = 0;
    while idx < cols.len() && cols[idx] == format!("f{d}") {
        d += 1;
        idx += 1;
    }
    if idx != cols.len() || n == 0 || d == 0 {
        return Err(malformed(
            path,
            format!("header must be weight,x0..x{{n-1}},f0..f{{d-1}}, got '{header}'"),
        ));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + n + d {
            return Err(malformed(
                path,
                format!("row {}: expected {} fields, got {}", lineno + 2, 1 + n + d, fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f.trim().parse().map_err(|_| {
                malformed(path, format!("row {}: cannot parse '{}'", lineno + 2, f))
            })?;
            if !v.is_finite() {
                return Err(malformed(path, format!("row {}: non-finite value", lineno + 2)));
            }
            values.push(v);
        }
        records.push(ObservationRecord {
            weight: values[0],
            alpha: DVector::from_row_slice(&values[1..1 + n]),
            beta: DVector::from_row_slice(&values[1 + n..]),
        });
    }
    ObservationSample::new(n, d, records)
}

// ── Matrix files ─────────────────────────────────────────────────────

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            row.push(tok.parse::<f64>().map_err(|_| {
                malformed(path, format!("row {}: cannot parse '{}'", lineno + 1, tok))
            })?);
        }
        if !row.is_empty() {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(malformed(path, "no rows"));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(malformed(path, "ragged rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

// ── Model files ──────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub mu: f64,
    pub f: f64,
    pub penalty: f64,
}

/// Solved-model artifact: the operator in the original basis plus the
/// convergence trace of the reported run.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub n: usize,
    pub channel: Channel,
    pub u: Vec<Vec<f64>>,
    pub fidelity: f64,
    pub converged: bool,
    pub iterations: usize,
    pub seed: u64,
    pub history: Vec<HistoryRow>,
}

impl ModelFile {
    pub fn from_report(channel: Channel, u: &PartialIsometry, report: &SolverReport) -> Self {
        ModelFile {
            d: u.d(),
            n: u.n(),
            channel,
            u: (0..u.d())
                .map(|j| (0..u.n()).map(|k| u.matrix()[(j, k)]).collect())
                .collect(),
            fidelity: report.fidelity,
            converged: report.converged,
            iterations: report.iterations.len(),
            seed: report.seed,
            history: report
                .iterations
                .iter()
                .map(|r| HistoryRow {
                    iter: r.index,
                    mu: r.mu,
                    f: r.fidelity,
                    penalty: r.penalty,
                })
                .collect(),
        }
    }

    pub fn operator(&self) -> Result<PartialIsometry> {
        if self.u.len() != self.d || self.u.iter().any(|row| row.len() != self.n) {
            return Err(Error::dims("model operator", self.d * self.n, 0));
        }
        Ok(PartialIsometry::new(DMatrix::from_fn(
            self.d,
            self.n,
            |j, k| self.u[j][k],
        )))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<ModelFile> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

// ── Command implementations ──────────────────────────────────────────

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let (spec, out, ref_out, seed) = match args.kind {
        GenKind::Euler3 {
            angles,
            x0,
            steps,
            seed,
            flips,
            out,
            ref_out,
        } => {
            if angles.len() != 3 {
                return Err(Error::dims("--angles (phi,theta,psi)", 3, angles.len()));
            }
            if x0.len() != 3 {
                return Err(Error::dims("--x0 (three components)", 3, x0.len()));
            }
            (
                GeneratorSpec {
                    kind: GeneratorKind::Euler3 {
                        phi: angles[0],
                        theta: angles[1],
                        psi: angles[2],
                        x0: DVector::from_row_slice(&x0),
                    },
                    points: steps,
                    seed,
                    phase_flips: flips,
                },
                out,
                ref_out,
                seed,
            )
        }
        GenKind::Ortho {
            dim,
            steps,
            seed,
            flips,
            out,
            ref_out,
        } => (
            GeneratorSpec {
                kind: GeneratorKind::RandomOrthogonal { dim },
                points: steps,
                seed,
                phase_flips: flips,
            },
            out,
            ref_out,
            seed,
        ),
        GenKind::Poly {
            n,
            d,
            points,
            seed,
            out,
        } => (
            GeneratorSpec {
                kind: GeneratorKind::ChebyshevLegendre { n, d },
                points,
                seed,
                phase_flips: true,
            },
            out,
            None,
            seed,
        ),
        GenKind::Func {
            power,
            points,
            seed,
            out,
        } => (
            GeneratorSpec {
                kind: GeneratorKind::ScalarFunction { power },
                points,
                seed,
                phase_flips: false,
            },
            out,
            None,
            seed,
        ),
    };
    let (sample, reference) = spec.generate()?;
    write_sample(&out, &sample)?;
    if let (Some(ref_path), Some(matrix)) = (&ref_out, &reference) {
        write_matrix(ref_path, matrix)?;
        eprintln!("reference matrix written to {}", ref_path.display());
    }
    println!(
        "wrote {} records (seed {}) to {}",
        sample.len(),
        seed,
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let mut sample = read_sample(&args.input)?;
    let n = args.n.unwrap_or(sample.n());
    let d = args.d.unwrap_or(sample.d());
    if n != sample.n() || d != sample.d() {
        sample = sample.truncate(n, d)?;
    }
    let config = SolverConfig {
        max_iterations: args.max_iters,
        eigenstate_rank: args.rank,
        num_runs: args.runs,
        channel: args.channel,
        scan_candidates: args.scan,
        ..SolverConfig::default()
    };
    let (recovered, mut report) = recover_dynamics(&sample, args.channel, &config)?;
    report.seed = args.seed;
    if args.trace {
        for r in &report.iterations {
            println!(
                "{:4} {} {} {}",
                r.index,
                format_f64(r.mu),
                format_f64(r.fidelity),
                format_f64(r.penalty)
            );
        }
    }
    let model = ModelFile::from_report(args.channel, &recovered, &report);
    model.write(&args.out)?;
    eprintln!(
        "channel={} d={} n={} F={} converged={} iterations={} -> {}",
        args.channel,
        d,
        n,
        format_f64(report.fidelity),
        report.converged,
        report.iterations.len(),
        args.out.display()
    );
    Ok(if report.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_compare(args: CompareArgs) -> Result<i32> {
    let model = ModelFile::read(&args.model)?;
    let u = model.operator()?;
    let reference = read_matrix(&args.reference)?;
    if reference.shape() != (model.d, model.n) {
        return Err(Error::dims(
            "compare reference shape",
            model.d * model.n,
            reference.nrows() * reference.ncols(),
        ));
    }
    let diff = u.max_diff_up_to_sign(&reference);
    println!("{}", format_f64(diff));
    Ok(if diff <= args.tol { EXIT_OK } else { EXIT_ERROR })
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let config = SolverConfig {
        max_iterations: args.max_iters,
        num_runs: args.runs,
        channel: Channel::Unit,
        ..SolverConfig::default()
    };
    let rows = fidelity_sweep(args.n, args.m, args.seed, &config)?;
    let mut out = String::from("d,f_orig_over_m,relative_gain,converged\n");
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.d,
            format_f64(r.f_orig_over_m),
            format_f64(r.relative_gain),
            r.converged
        )
        .unwrap();
    }
    std::fs::write(&args.out, out)?;
    eprintln!(
        "swept d=1..={} (m={}, seed {}) -> {}",
        args.n,
        args.m,
        args.seed,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_interp(args: InterpArgs) -> Result<i32> {
    let sample = read_sample(&args.input)?;
    if sample.n() != 1 || sample.d() != 1 {
        return Err(malformed(
            &args.input,
            "interp expects a scalar sample (one x column, one f column)",
        ));
    }
    let points: Vec<(f64, f64, f64)> = sample
        .records()
        .iter()
        .map(|r| (r.weight, r.alpha[0], r.beta[0]))
        .collect();
    let config = SolverConfig {
        num_runs: args.runs,
        ..SolverConfig::default()
    };
    let model = interpolate_scalar(&points, args.n, args.d, args.seed, &config)?;

    let mut sorted = points.clone();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let count = args.grid.max(2).min(sorted.len());
    let mut out = String::from("x,f_exact,f_rn,f_ls,f_maxp,p_max\n");
    for i in 0..count {
        let idx = i * (sorted.len() - 1) / (count - 1);
        let (_, x, f_exact) = sorted[idx];
        let f_rn = model.radon_nikodym(x)?;
        let f_ls = model.least_squares(x)?;
        let (f_maxp, p_max) = model.max_probability(x)?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_f64(x),
            format_f64(f_exact),
            format_f64(f_rn),
            format_f64(f_ls),
            format_f64(f_maxp),
            format_f64(p_max)
        )
        .unwrap();
    }
    std::fs::write(&args.out, out)?;
    eprintln!(
        "interpolated {} query points (n={}, d={}, converged={}) -> {}",
        count,
        args.n,
        args.d,
        model.report.converged,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::DegenerateGram { .. } | Error::DegenerateMetric { .. } => EXIT_DEGENERATE,
        _ => EXIT_ERROR,
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Interp(args) => cmd_interp(args),
    }
}

/// Run with the given argument list; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage text.
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run_from(std::env::args_os())
}
