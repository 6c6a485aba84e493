//! Command-line front end.
//!
//! Exit status: 0 success, 2 bad input, 3 numerical failure, 4 search
//! exhausted, 5 precondition violated; a failing selftest exits 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kron::{
    binomial_inverse_with_diagnostics, evaluate_binomial, kron_rank, preprocess_binomial,
    reconstruct, Branch, InverseOptions, KronRankReport, KronSumDecomposition, KronTerm,
    KroneckerBinomial, RankPolicy, DEFAULT_RANK_TOL,
};
use crate::matcore::{
    format_json, format_matrix_market, read_matrix, sample_gaussian, FieldTag, Matrix,
    MatrixFormat, RandomSource,
};
use crate::perturb::{perturb_tuple, PerturbSpec, PerturbTrace, SelfMap};
use crate::selftest::{run_selftest, SelftestConfig};
use crate::spectra::{simplicity_report, SpectrumReport, DEFAULT_GAP_TOL};

#[derive(Parser, Debug)]
#[command(
    name = "kronspec",
    version,
    about = "Simple-spectrum perturbations and Kronecker binomial inverses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues, simplicity and invertibility of a square matrix.
    Spectrum {
        matrix: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
        gap_tol: f64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Perturb A and B so that f(A) g(B) has a simple spectrum.
    Perturb {
        a: PathBuf,
        b: PathBuf,
        /// identity, inverse, transpose, conjugate-transpose, or left-mul:FILE, right-mul:FILE, similarity:FILE
        #[arg(long, default_value = "identity")]
        map_f: String,
        #[arg(long, default_value = "inverse")]
        map_g: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Perturb k matrices so that f_1(A_1) ... f_k(A_k) has a simple spectrum.
    PerturbTuple {
        #[arg(required = true)]
        matrices: Vec<PathBuf>,
        /// Comma-separated self-maps, one per matrix.
        #[arg(long)]
        maps: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Explicit inverse of A⊗C + B⊗D as a sum of at most min(p, q) Kronecker products.
    KronInverse {
        a: PathBuf,
        b: PathBuf,
        c: PathBuf,
        d: PathBuf,
        /// Expected size of A and B.
        #[arg(long)]
        p: Option<usize>,
        /// Expected size of C and D.
        #[arg(long)]
        q: Option<usize>,
        /// Perturb A and B when the pencil preconditions fail.
        #[arg(long)]
        auto_preprocess: bool,
        /// Frobenius budget for the preprocessing perturbation.
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        /// Relative tolerance for the reported Kronecker ranks.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, value_parser = ["p-term", "q-term"])]
        branch: Option<String>,
        #[arg(long, default_value = "warn", value_parser = ["ignore", "warn", "reject"])]
        rank_policy: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Numeric Kronecker rank of a (p q) x (p q) matrix.
    KronRank {
        matrix: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Seeded Gaussian test matrix.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "complex")]
        field: FieldTag,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Run the built-in property suites.
    Selftest {
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        nmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_failure: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub max_attempts: usize,
    /// Field of the random perturbation directions.
    #[arg(long, default_value = "complex")]
    pub field: FieldTag,
}

#[derive(Args, Debug, Clone)]
pub struct IoArgs {
    /// Matrix file format; inferred from a .json extension when omitted.
    #[arg(long)]
    pub format: Option<MatrixFormat>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl IoArgs {
    fn format_for(&self, path: &Path) -> MatrixFormat {
        self.format.unwrap_or_else(|| MatrixFormat::from_path(path))
    }

    fn read(&self, path: &Path) -> std::result::Result<Matrix, Failure> {
        read_matrix(path, self.format_for(path)).map_err(|e| Failure::with_context(e, path))
    }
}

impl SearchArgs {
    fn spec(&self) -> Result<PerturbSpec> {
        let spec = PerturbSpec {
            eps: self.eps,
            gap_tol: self.gap_tol,
            seed: self.seed,
            max_attempts: self.max_attempts,
            field: self.field,
            ..PerturbSpec::default()
        };
        spec.validate().map_err(as_input)?;
        Ok(spec)
    }
}

/// Error plus the file it concerns.
struct Failure {
    error: Error,
    context: Option<String>,
}

impl Failure {
    fn with_context(error: Error, path: &Path) -> Failure {
        Failure {
            error,
            context: Some(path.display().to_string()),
        }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure {
            error,
            context: None,
        }
    }
}

fn as_input(e: Error) -> Error {
    match e {
        Error::Precondition(msg) => Error::InvalidArgument(msg),
        other => other,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn parse_map(spec: &str, io: &IoArgs) -> std::result::Result<SelfMap, Failure> {
    if let Some((kind, file)) = spec.split_once(':') {
        let path = Path::new(file.trim());
        let m = io.read(path)?;
        let built = match kind.trim().to_ascii_lowercase().as_str() {
            "left-mul" => SelfMap::left_mul(m),
            "right-mul" => SelfMap::right_mul(m),
            "similarity" => SelfMap::similarity(m),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown self-map '{other}:' (expected left-mul:, right-mul: or similarity:)"
                ))
                .into())
            }
        };
        return built.map_err(|e| Failure::with_context(e, path));
    }
    spec.parse::<SelfMap>()
        .map_err(|msg| Error::InvalidArgument(msg).into())
}

#[derive(Serialize)]
struct PreprocessEvidence {
    delta: f64,
    deltas: Vec<f64>,
    attempts_used: usize,
    /// `||X - X_perturbed||_F`.
    distance: f64,
    /// `delta (||C||_F + ||D||_F) sqrt(p)`.
    distance_bound: f64,
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
}

#[derive(Serialize)]
struct KronInverseReport {
    p: usize,
    q: usize,
    terms: Vec<KronTerm>,
    branch: Branch,
    swapped: bool,
    residual: f64,
    condition: f64,
    bound: f64,
    pencil_report: SpectrumReport,
    input_kron_rank: usize,
    kron_rank: KronRankReport,
    preprocess: Option<PreprocessEvidence>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ExhaustedReport<'a> {
    error: &'static str,
    attempts: usize,
    trace: &'a PerturbTrace,
}

enum Output {
    Json(String),
    Exit(i32, String),
}

fn check_size(name: &str, expected: Option<usize>, found: usize) -> Result<()> {
    match expected {
        Some(e) if e != found => Err(Error::dims(
            "kron-inverse",
            format!("{name} = {e}"),
            format!("{name} = {found}"),
        )),
        _ => Ok(()),
    }
}

fn kron_inverse(cmd: &Command) -> std::result::Result<String, Failure> {
    let Command::KronInverse {
        a,
        b,
        c,
        d,
        p,
        q,
        auto_preprocess,
        delta,
        tol,
        branch,
        rank_policy,
        search,
        io,
    } = cmd
    else {
        unreachable!()
    };
    let factors = [a, b, c, d].map(|path| io.read(path));
    let [a, b, c, d] = factors;
    let binomial = KroneckerBinomial::new(a?, b?, c?, d?)?;
    check_size("p", *p, binomial.p())?;
    check_size("q", *q, binomial.q())?;
    if !(*delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")).into());
    }
    let spec = search.spec()?;
    let opts = InverseOptions {
        gap_tol: search.gap_tol,
        rank_tol: *tol,
        rank_policy: match rank_policy.as_str() {
            "ignore" => RankPolicy::Ignore,
            "reject" => RankPolicy::Reject,
            _ => RankPolicy::Warn,
        },
        branch: branch.as_deref().map(|s| {
            if s == "q-term" {
                Branch::QTerm
            } else {
                Branch::PTerm
            }
        }),
        ..InverseOptions::default()
    };

    let (preprocess, (dec, diag)) = match binomial_inverse_with_diagnostics(&binomial, &opts) {
        Ok(found) => (None, found),
        Err(Error::Precondition(_)) if *auto_preprocess => {
            let (fixed, outcome) = preprocess_binomial(&binomial, *delta, &spec)?;
            let found = binomial_inverse_with_diagnostics(&fixed, &opts)?;
            let distance = evaluate_binomial(&binomial)
                .sub(&evaluate_binomial(&fixed))?
                .frobenius_norm();
            let distance_bound = delta
                * (binomial.c().frobenius_norm() + binomial.d().frobenius_norm())
                * (binomial.p() as f64).sqrt();
            let evidence = PreprocessEvidence {
                delta: *delta,
                deltas: outcome.deltas,
                attempts_used: outcome.attempts_used,
                distance,
                distance_bound,
                a: fixed.a().clone(),
                b: fixed.b().clone(),
            };
            (Some(evidence), found)
        }
        Err(e) => return Err(e.into()),
    };
    let rec = reconstruct(&dec)?;
    let KronSumDecomposition { p, q, terms } = dec;
    let report = KronInverseReport {
        kron_rank: kron_rank(&rec, p, q, *tol)?,
        p,
        q,
        terms,
        branch: diag.branch,
        swapped: diag.swapped,
        residual: diag.residual,
        condition: diag.condition,
        bound: diag.bound,
        pencil_report: diag.pencil_report,
        input_kron_rank: diag.input_kron_rank,
        preprocess,
        warnings: diag.warnings,
    };
    Ok(to_json(&report)?)
}

fn perturb(
    mats: Vec<Matrix>,
    maps: Vec<SelfMap>,
    search: &SearchArgs,
) -> std::result::Result<Output, Failure> {
    let spec = search.spec()?;
    match perturb_tuple(&mats, &maps, &spec) {
        Ok(outcome) => Ok(Output::Json(to_json(&outcome)?)),
        Err(Error::AttemptsExhausted { attempts, trace }) => {
            let report = ExhaustedReport {
                error: "attempts_exhausted",
                attempts,
                trace: &trace,
            };
            Ok(Output::Exit(4, to_json(&report)?))
        }
        Err(e) => Err(e.into()),
    }
}

fn execute(cmd: &Command) -> std::result::Result<(Output, Option<PathBuf>), Failure> {
    match cmd {
        Command::Spectrum {
            matrix,
            gap_tol,
            io,
        } => {
            let m = io.read(matrix)?;
            let report = simplicity_report(&m, *gap_tol)?;
            Ok((Output::Json(to_json(&report)?), io.out.clone()))
        }
        Command::Perturb {
            a,
            b,
            map_f,
            map_g,
            search,
            io,
        } => {
            let mats = vec![io.read(a)?, io.read(b)?];
            let maps = vec![parse_map(map_f, io)?, parse_map(map_g, io)?];
            Ok((perturb(mats, maps, search)?, io.out.clone()))
        }
        Command::PerturbTuple {
            matrices,
            maps,
            search,
            io,
        } => {
            let maps = maps
                .split(',')
                .map(|s| parse_map(s, io))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if maps.len() != matrices.len() {
                return Err(Error::dims(
                    "perturb-tuple",
                    format!("{} maps", matrices.len()),
                    format!("{} maps", maps.len()),
                )
                .into());
            }
            let mats = matrices
                .iter()
                .map(|p| io.read(p))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((perturb(mats, maps, search)?, io.out.clone()))
        }
        Command::KronInverse { io, .. } => Ok((Output::Json(kron_inverse(cmd)?), io.out.clone())),
        Command::KronRank {
            matrix,
            p,
            q,
            tol,
            io,
        } => {
            let x = io.read(matrix)?;
            let report = kron_rank(&x, *p, *q, *tol)?;
            Ok((Output::Json(to_json(&report)?), io.out.clone()))
        }
        Command::Sample { n, field, seed, io } => {
            let m = sample_gaussian(*n, *field, &mut RandomSource::new(*seed));
            let format = match (&io.format, &io.out) {
                (Some(f), _) => *f,
                (None, Some(path)) => MatrixFormat::from_path(path),
                (None, None) => MatrixFormat::MatrixMarket,
            };
            let text = match format {
                MatrixFormat::MatrixMarket => format_matrix_market(&m),
                MatrixFormat::Json => format_json(&m)?,
            };
            Ok((Output::Json(text), io.out.clone()))
        }
        Command::Selftest {
            trials,
            nmax,
            seed,
            inject_failure,
            out,
        } => {
            let summary = run_selftest(&SelftestConfig {
                trials: *trials,
                nmax: *nmax,
                seed: *seed,
                inject_failure: *inject_failure,
            });
            let text = to_json(&summary)?;
            let output = if summary.passed {
                Output::Json(text)
            } else {
                Output::Exit(1, text)
            };
            Ok((output, out.clone()))
        }
    }
}

fn emit(
    text: &str,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::with_context(e.into(), path)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::from(Error::from(e))),
    }
}

fn report_failure(f: &Failure, stderr: &mut dyn Write) -> i32 {
    let _ = match &f.context {
        Some(ctx) => writeln!(stderr, "error: {ctx}: {}", f.error),
        None => writeln!(stderr, "error: {}", f.error),
    };
    f.error.exit_code()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (output, out) = match execute(&cli.command) {
        Ok(found) => found,
        Err(f) => return report_failure(&f, stderr),
    };
    let (code, text) = match output {
        Output::Json(text) => (0, text),
        Output::Exit(code, text) => (code, text),
    };
    if let Err(f) = emit(&text, out.as_deref(), stdout) {
        return report_failure(&f, stderr);
    }
    match code {
        4 => {
            let _ = writeln!(
                stderr,
                "error: search exhausted; trace written with the report"
            );
        }
        1 => {
            let _ = writeln!(stderr, "selftest failed");
        }
        _ => {}
    }
    code
}
