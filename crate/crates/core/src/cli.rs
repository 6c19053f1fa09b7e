//! Command-line front end. [`run`] is the whole program; the binary only
//! forwards its arguments and exit code.
//!
//! Exit codes: 0 success, 1 domain failure (invalid annotation or proof,
//! infeasible search, I/O), 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::annotation::{self, Annotation};
use crate::derivation::{self, Proof, Verdict};
use crate::lp_model;
use crate::lp_solver::{PivotRule, SolverConfig};
use crate::ratio;
use crate::search::{self, ExhaustiveOptions, FamilyParams, Progress, SearchConfig, SearchLedger};

#[derive(Parser, Debug)]
#[command(name = "altproof", version, about = "Search and verify alternation-trading proofs")]
struct Cli {
    #[command(flatten)]
    solver: SolverFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SolverFlags {
    /// Feasibility tolerance of the floating-point simplex.
    #[arg(long, global = true, env = "ALTPROOF_TOLERANCE", default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, global = true, env = "ALTPROOF_PIVOT_RULE", value_enum, default_value_t = PivotArg::Dantzig)]
    pivot_rule: PivotArg,
    /// Solve every LP in exact rational arithmetic.
    #[arg(long, global = true, env = "ALTPROOF_EXACT")]
    exact: bool,
    #[arg(long, global = true, env = "ALTPROOF_MAX_ITERATIONS", default_value_t = 100_000)]
    max_iterations: usize,
    #[arg(long, global = true, env = "ALTPROOF_MAX_RATIONAL_BITS", default_value_t = 1 << 16)]
    max_rational_bits: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PivotArg {
    Bland,
    Dantzig,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best exponent for one annotation, with a verified certificate.
    BestC {
        annotation: String,
        #[arg(long, env = "ALTPROOF_PRECISION", default_value_t = 1e-6)]
        precision: f64,
        /// Where to write the certificate (default: <annotation>.json).
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Exhaustive search over all annotations up to a length.
    Search {
        #[arg(long, env = "ALTPROOF_MAX_LENGTH", default_value_t = 13)]
        max_length: usize,
        #[arg(long, env = "ALTPROOF_PRECISION", default_value_t = 1e-6)]
        precision: f64,
        #[arg(long, env = "ALTPROOF_WORKERS", default_value_t = default_workers())]
        workers: usize,
        /// JSON-lines ledger; existing records are kept and skipped.
        #[arg(long, env = "ALTPROOF_LEDGER", default_value = "results.jsonl")]
        ledger: PathBuf,
        /// Merge a prior ledger before resuming.
        #[arg(long)]
        seed_results: Option<PathBuf>,
        /// Also write the summary table as CSV.
        #[arg(long)]
        report_csv: Option<PathBuf>,
    },
    /// List or count valid annotations of one length.
    Enumerate {
        #[arg(long)]
        length: usize,
        #[arg(long)]
        count_only: bool,
    },
    /// Best exponents along an annotation family.
    Family {
        #[arg(value_enum)]
        family: FamilyArg,
        /// Largest parameter (k for fvm; outer = inner = k for w).
        #[arg(long, default_value_t = 5)]
        max: usize,
        #[arg(long, default_value_t = 1)]
        min: usize,
        /// For w: hold `inner` fixed and vary `outer` instead.
        #[arg(long)]
        inner: Option<usize>,
        #[arg(long, env = "ALTPROOF_PRECISION", default_value_t = 1e-6)]
        precision: f64,
        #[arg(long, env = "ALTPROOF_WORKERS", default_value_t = default_workers())]
        workers: usize,
    },
    /// Check a proof file; exit 0 iff valid.
    Verify { proof: PathBuf },
    /// Print a proof file as a derivation.
    Print { proof: PathBuf },
    /// Write the LP for an annotation at a given c.
    ExportLp {
        annotation: String,
        #[arg(long)]
        c: String,
        /// Output file (default: standard output).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Fvm,
    W,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            pivot_rule: match self.pivot_rule {
                PivotArg::Bland => PivotRule::Bland,
                PivotArg::Dantzig => PivotRule::Dantzig,
            },
            exact_mode: self.exact,
            max_iterations: self.max_iterations,
            max_rational_bits: self.max_rational_bits,
        }
    }
}

/// A failure reported as one line on standard error.
struct Failure {
    code: i32,
    message: String,
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 2, message }
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Runs the program on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn check_solver(flags: &SolverFlags) -> Result<(), Failure> {
    if flags.tolerance.is_nan() || flags.tolerance <= 0.0 {
        return Err(usage(format!("--tolerance must be positive, got {}", flags.tolerance)));
    }
    if flags.max_iterations == 0 {
        return Err(usage("--max-iterations must be positive".into()));
    }
    Ok(())
}

fn check_precision(p: f64) -> Result<(), Failure> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--precision must be in (0, 1), got {p}")))
    }
}

fn parse_annotation(s: &str) -> Result<Annotation, Failure> {
    s.parse::<Annotation>().map_err(|e| domain(format!("invalid annotation `{s}`: {e}")))
}

fn read_proof(path: &Path) -> Result<Proof, Failure> {
    let text = fs::read_to_string(path).map_err(|e| domain(format!("{}: {e}", path.display())))?;
    Proof::from_json(&text).map_err(|e| domain(format!("{}: malformed proof file: {e}", path.display())))
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    check_solver(&cli.solver)?;
    let solver = cli.solver.config();
    let w = |r: std::io::Result<()>| r.map_err(domain);
    match &cli.command {
        Command::BestC {
            annotation,
            precision,
            certificate,
        } => {
            check_precision(*precision)?;
            let a = parse_annotation(annotation)?;
            let cfg = SearchConfig {
                precision: *precision,
                solver,
            };
            let r = search::best_c_with(&a, &cfg).map_err(domain)?;
            let path = certificate.clone().unwrap_or_else(|| PathBuf::from(format!("{a}.json")));
            fs::write(&path, r.certificate.to_json()).map_err(|e| domain(format!("{}: {e}", path.display())))?;
            w(writeln!(out, "annotation {a}"))?;
            w(writeln!(out, "best_c {:.6}", r.best_c))?;
            w(writeln!(
                out,
                "bracket {} {}",
                ratio::to_string(&r.bracket.feasible),
                ratio::to_string(&r.bracket.infeasible)
            ))?;
            w(writeln!(out, "certificate {}", path.display()))?;
            Ok(0)
        }
        Command::Search {
            max_length,
            precision,
            workers,
            ledger,
            seed_results,
            report_csv,
        } => {
            check_precision(*precision)?;
            if *max_length < 3 || max_length % 2 == 0 {
                return Err(usage(format!("--max-length must be odd and at least 3, got {max_length}")));
            }
            if *workers == 0 {
                return Err(usage("--workers must be positive".into()));
            }
            let seed = match seed_results {
                Some(p) => Some(SearchLedger::load(p).map_err(domain)?),
                None => None,
            };
            INTERRUPTED.store(false, Ordering::SeqCst);
            // Ignored when a handler is already installed.
            let _ = ctrlc::set_handler(|| INTERRUPTED.store(true, Ordering::SeqCst));
            let show = std::io::stderr().is_terminal();
            let last = Mutex::new(Instant::now() - Duration::from_secs(1));
            let progress = move |p: Progress| {
                let mut last = last.lock().unwrap_or_else(|e| e.into_inner());
                if show && (last.elapsed() >= Duration::from_millis(500) || p.done == p.total) {
                    *last = Instant::now();
                    eprint!("\r{}/{} annotations", p.done, p.total);
                    if p.done == p.total {
                        eprintln!();
                    }
                }
            };
            let opts = ExhaustiveOptions {
                max_length: *max_length,
                search: SearchConfig {
                    precision: *precision,
                    solver,
                },
                workers: *workers,
                ledger: Some(ledger.clone()),
                seed,
                stop: Some(&INTERRUPTED),
                limit: None,
                on_progress: Some(&progress),
            };
            let result = search::exhaustive(&opts).map_err(domain)?;
            let rep = search::report(&result);
            w(out.write_all(rep.to_text().as_bytes()))?;
            if let Some(p) = report_csv {
                fs::write(p, rep.to_csv()).map_err(|e| domain(format!("{}: {e}", p.display())))?;
            }
            if INTERRUPTED.load(Ordering::SeqCst) {
                let _ = writeln!(err, "interrupted; rerun the same command to resume");
                return Ok(1);
            }
            Ok(0)
        }
        Command::Enumerate { length, count_only } => {
            if *count_only {
                let n = annotation::count(*length).map_err(|e| usage(e.to_string()))?;
                w(writeln!(out, "{n}"))?;
            } else {
                for a in annotation::enumerate(*length).map_err(|e| usage(e.to_string()))? {
                    w(writeln!(out, "{a}"))?;
                }
            }
            Ok(0)
        }
        Command::Family {
            family,
            max,
            min,
            inner,
            precision,
            workers,
        } => {
            check_precision(*precision)?;
            if min > max {
                return Err(usage(format!("--min {min} exceeds --max {max}")));
            }
            let params: Vec<FamilyParams> = match family {
                FamilyArg::Fvm => (*min.max(&1)..=*max).map(FamilyParams::Fvm).collect(),
                FamilyArg::W => (*min..=*max)
                    .map(|k| match inner {
                        Some(i) => FamilyParams::W { outer: k, inner: *i },
                        None => FamilyParams::W { outer: k, inner: k.max(1) },
                    })
                    .collect(),
            };
            let cfg = SearchConfig {
                precision: *precision,
                solver,
            };
            let points = search::family_sweep(&params, &cfg, *workers).map_err(domain)?;
            for p in points {
                w(writeln!(out, "{}\t{:.6}\t{}", p.params.label(), p.result.best_c, p.result.annotation))?;
            }
            Ok(0)
        }
        Command::Verify { proof } => {
            let p = read_proof(proof)?;
            match derivation::verify_proof(&p) {
                Verdict::Valid => {
                    w(writeln!(out, "valid"))?;
                    Ok(0)
                }
                Verdict::Invalid(violations) => {
                    w(writeln!(out, "invalid"))?;
                    for v in violations {
                        w(writeln!(out, "{v}"))?;
                    }
                    Ok(1)
                }
            }
        }
        Command::Print { proof } => {
            let p = read_proof(proof)?;
            w(out.write_all(derivation::pretty_print(&p).as_bytes()))?;
            Ok(0)
        }
        Command::ExportLp { annotation, c, output } => {
            let a = parse_annotation(annotation)?;
            let c = ratio::parse(c).map_err(|e| usage(e.to_string()))?;
            let lp = lp_model::build_lp(&a, &c).map_err(domain)?;
            let text = lp_model::export_lp_text(&lp);
            match output {
                Some(p) => fs::write(p, text).map_err(|e| domain(format!("{}: {e}", p.display())))?,
                None => w(out.write_all(text.as_bytes()))?,
            }
            Ok(0)
        }
    }
}
