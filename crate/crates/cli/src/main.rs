//! `tautrel`: enumerate graphs and strata bases, assemble relations, build
//! relation matrices, compute quotient ranks and run the self-checks.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 internal
//! consistency failure.

mod cache;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tautrel::checks::{self, Fault, Suite, SuiteOptions};
use tautrel::dualgraph::{enumerate_graphs, DualGraph};
use tautrel::exactla::rank_exact;
use tautrel::field::DEFAULT_PRIMES;
use tautrel::ideal::{quotient_dimension_with, span_matrix, span_rows_mod_p};
use tautrel::io::{
    basis_to_jsonl, graph_to_json, job_to_json, matrix_to_mtx, monomial_to_json, rank_report_json,
    rows_to_mtx_mod_p, vector_to_json,
};
use tautrel::pixton::{relation_in, RelationParams};
use tautrel::strata::{enumerate_basis_with, DEFAULT_VERTEX_BOUND};
use tautrel::BigRational;

use cache::Cache;

#[derive(Parser)]
#[command(name = "tautrel", version, about = "Strata algebras and tautological relations in exact arithmetic")]
struct Cli {
    /// Output format of read-only commands.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Recompute instead of reading or writing the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct Space {
    #[arg(long)]
    genus: u32,
    #[arg(long)]
    markings: u32,
}

#[derive(Args, Clone)]
struct Graded {
    #[command(flatten)]
    space: Space,
    #[arg(long)]
    degree: u32,
    /// Keep decorations exceeding a vertex's moduli dimension.
    #[arg(long)]
    unbounded: bool,
}

impl Graded {
    fn bounded(&self) -> bool {
        DEFAULT_VERTEX_BOUND && !self.unbounded
    }

    fn key(&self) -> String {
        format!("g={} n={} r={} bounded={}", self.space.genus, self.space.markings, self.degree, self.bounded())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FaultArg {
    None,
    EdgeSign,
    WrongAut,
}

#[derive(Subcommand)]
enum Command {
    /// Stable graphs of type (g, n), one JSON object per line.
    Graphs {
        #[command(flatten)]
        space: Space,
        #[arg(long)]
        max_edges: Option<usize>,
    },
    /// Basis of the strata algebra in one degree, one monomial per line.
    Basis {
        #[command(flatten)]
        graded: Graded,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One relation vector.
    Relation {
        #[command(flatten)]
        graded: Graded,
        /// Partition σ, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sigma: Vec<u32>,
        /// Leg parities, one per marking.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        a: Vec<u32>,
        /// Write monomials inline instead of as basis indices.
        #[arg(long)]
        inline: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relation matrix of the span in one degree.
    Span {
        #[command(flatten)]
        graded: Graded,
        /// Exact MatrixMarket output with p/q entries.
        #[arg(long)]
        out: PathBuf,
        /// One generator description per matrix row.
        #[arg(long)]
        jobs_out: Option<PathBuf>,
        /// Also write the matrix reduced modulo this prime.
        #[arg(long, requires = "mod_out")]
        mod_prime: Option<u64>,
        #[arg(long, requires = "mod_prime")]
        mod_out: Option<PathBuf>,
    },
    /// Basis size, relation rank and quotient dimension.
    Rank {
        #[command(flatten)]
        graded: Graded,
        /// Primes for modular elimination, comma separated.
        #[arg(long, value_delimiter = ',')]
        prime: Vec<u64>,
        /// Confirm the rank by exact elimination over the rationals.
        #[arg(long)]
        verify_rational: bool,
    },
    /// Run self-checks and print a PASS/FAIL table.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Series order for the identity checks.
        #[arg(long, default_value_t = 50)]
        order: usize,
        /// Random samples per algebra law.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Corrupt an ingredient to confirm the checks can fail.
        #[arg(long, value_enum, default_value = "none")]
        inject_fault: FaultArg,
    },
}

enum Failure {
    Core(tautrel::Error),
    Io(String),
    Checks,
}

impl From<tautrel::Error> for Failure {
    fn from(e: tautrel::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn graph_text(gr: &DualGraph) -> String {
    format!("genera={:?} legs={:?} edges={:?}", gr.genera(), gr.legs(), gr.edges())
}

fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Core(tautrel::Error::InvalidParameter(e.to_string())))?;
    }
    let cache = Cache::new(if cli.no_cache { None } else { cache::default_dir() });
    let fmt = |default| cli.format.unwrap_or(default);
    match &cli.command {
        Command::Graphs { space, max_edges } => {
            let f = fmt(Format::Json);
            let params = format!("g={} n={} max_edges={max_edges:?} text={}", space.genus, space.markings, f == Format::Text);
            let text = cache.get_or_compute("graphs", &params, || -> Outcome<String> {
                let mut s = String::new();
                for gr in enumerate_graphs(space.genus, space.markings, *max_edges)?.iter() {
                    let line = if f == Format::Json { graph_to_json(gr) } else { graph_text(gr) };
                    writeln!(s, "{line}").expect("string write");
                }
                Ok(s)
            })?;
            emit(None, &text)
        }
        Command::Basis { graded, out } => {
            let f = fmt(Format::Json);
            let params = format!("{} text={}", graded.key(), f == Format::Text);
            let text = cache.get_or_compute("basis", &params, || -> Outcome<String> {
                let b = enumerate_basis_with(graded.space.genus, graded.space.markings, graded.degree, graded.bounded())?;
                Ok(match f {
                    Format::Json => basis_to_jsonl(&b),
                    Format::Text => b
                        .monomials()
                        .iter()
                        .enumerate()
                        .map(|(i, m)| format!("{i}\t{}\n", monomial_to_json(m)))
                        .collect(),
                })
            })?;
            emit(out.as_deref(), &text)
        }
        Command::Relation { graded, sigma, a, inline, out } => {
            let (g, n, r) = (graded.space.genus, graded.space.markings, graded.degree);
            let p = RelationParams::new(g, n, r, sigma.clone(), a.clone())?;
            let params = format!("{} {p} inline={inline}", graded.key());
            let text = cache.get_or_compute("relation", &params, || -> Outcome<String> {
                let v = relation_in::<BigRational>(&p, &(), graded.bounded())?;
                let basis = if *inline { None } else { Some(enumerate_basis_with(g, n, r, graded.bounded())?) };
                Ok(vector_to_json(&v, basis.as_deref())? + "\n")
            })?;
            emit(out.as_deref(), &text)
        }
        Command::Span { graded, out, jobs_out, mod_prime, mod_out } => {
            let (g, n, r) = (graded.space.genus, graded.space.markings, graded.degree);
            let mut computed = None;
            let mut matrix_and_jobs = || -> Outcome<(String, String)> {
                if computed.is_none() {
                    let (_, m, jobs) = span_matrix(g, n, r, graded.bounded())?;
                    let jobs: String = jobs.iter().map(|j| job_to_json(j) + "\n").collect();
                    computed = Some((matrix_to_mtx(&m), jobs));
                }
                Ok(computed.clone().expect("just computed"))
            };
            let mtx = cache.get_or_compute("span-matrix", &graded.key(), || matrix_and_jobs().map(|x| x.0))?;
            emit(Some(out), &mtx)?;
            if let Some(path) = jobs_out {
                let jobs = cache.get_or_compute("span-jobs", &graded.key(), || matrix_and_jobs().map(|x| x.1))?;
                emit(Some(path), &jobs)?;
            }
            if let (Some(p), Some(path)) = (mod_prime, mod_out) {
                let params = format!("{} p={p}", graded.key());
                let text = cache.get_or_compute("span-mod-p", &params, || -> Outcome<String> {
                    let (basis, rows) = span_rows_mod_p(g, n, r, *p, graded.bounded())?;
                    Ok(rows_to_mtx_mod_p(&rows, basis.len(), *p))
                })?;
                emit(Some(path), &text)?;
            }
            Ok(())
        }
        Command::Rank { graded, prime, verify_rational } => {
            let (g, n, r) = (graded.space.genus, graded.space.markings, graded.degree);
            let primes = if prime.is_empty() { DEFAULT_PRIMES.to_vec() } else { prime.clone() };
            let params = format!("{} primes={primes:?}", graded.key());
            let report_json = cache.get_or_compute("rank", &params, || -> Outcome<String> {
                Ok(rank_report_json(&quotient_dimension_with(g, n, r, &primes, graded.bounded())?))
            })?;
            let mut report: serde_json::Value =
                serde_json::from_str(&report_json).map_err(|e| Failure::Io(format!("cached report: {e}")))?;
            if *verify_rational {
                let (_, m, _) = span_matrix(g, n, r, graded.bounded())?;
                let exact = rank_exact(&m)?;
                if Some(exact as u64) != report["rank"].as_u64() {
                    return Err(tautrel::Error::Consistency(format!(
                        "rational rank {exact} differs from modular rank {}",
                        report["rank"]
                    ))
                    .into());
                }
                report["rational_rank"] = json!(exact);
            }
            let text = match fmt(Format::Json) {
                Format::Json => format!("{report}\n"),
                Format::Text => {
                    let mut s = String::new();
                    for k in ["basis", "rank", "quotient"] {
                        writeln!(s, "{k:<9}{}", report[k]).expect("string write");
                    }
                    for pk in report["primes"].as_array().into_iter().flatten() {
                        writeln!(s, "prime    {} rank {}", pk[0], pk[1]).expect("string write");
                    }
                    if let Some(x) = report.get("rational_rank") {
                        writeln!(s, "rational {x}").expect("string write");
                    }
                    s
                }
            };
            emit(None, &text)
        }
        Command::Verify { suite, order, samples, inject_fault } => {
            let suite: Suite = suite.parse()?;
            let fault = match inject_fault {
                FaultArg::None => Fault::None,
                FaultArg::EdgeSign => Fault::EdgeSign,
                FaultArg::WrongAut => Fault::WrongAut,
            };
            let opts = SuiteOptions { order: *order, seed: cli.seed, samples: *samples, fault };
            let results = checks::run(suite, &opts);
            let text = match fmt(Format::Text) {
                Format::Json => {
                    let rows: Vec<_> =
                        results.iter().map(|o| json!({"check": o.name, "passed": o.passed, "detail": o.detail})).collect();
                    format!("{}\n", serde_json::Value::from(rows))
                }
                Format::Text => {
                    let width = results.iter().map(|o| o.name.chars().count()).max().unwrap_or(0);
                    let mut s = String::new();
                    for o in &results {
                        let status = if o.passed { "PASS" } else { "FAIL" };
                        let pad = width - o.name.chars().count();
                        writeln!(s, "{status}  {}{}  {}", o.name, " ".repeat(pad), o.detail).expect("string write");
                    }
                    s
                }
            };
            emit(None, &text)?;
            if results.iter().all(|o| o.passed) {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(3),
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                tautrel::Error::Consistency(_) => 3,
                _ => 2,
            })
        }
    }
}
