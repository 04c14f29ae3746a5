//! Batch front end for the regulated-function toolkit.
//!
//! Reads function/family/model/rectangle documents (JSON), dispatches to
//! the library, and emits JSON (or CSV for tabular outputs) to stdout or
//! `--out`. Exit codes: 0 success, 2 invalid input (bad flags, unparsable
//! documents, malformed models), 3 domain errors (out-of-domain queries,
//! divergent sums, uncertified windows), 1 I/O failures. Every failure
//! prints a one-line JSON object `{"error": CODE, "message": ...}` on
//! stderr. Output is byte-identical across reruns with the same inputs.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use regulated::{
    cumulative_jump_function, empirical_jump_census, jump_count, phi_sum, simulate, Error,
    IndexSetExpr, IntervalSpec, PathModel, PhiSpec, Rectangle, RegulatedFn, SamplePath,
    SumResult, WeightFamily,
};

#[derive(Parser)]
#[command(
    name = "regulated",
    version,
    about = "Regulated functions: jump scans, unordered sums, jump measures, path simulation"
)]
struct Cli {
    /// Write the result document here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Evaluate a function at one or more points.
    Eval {
        /// Function document (JSON).
        #[arg(long = "fn", value_name = "FILE")]
        func: PathBuf,
        /// Points to evaluate at.
        #[arg(long, value_name = "T", num_args = 1.., required = true)]
        at: Vec<f64>,
    },
    /// One-sided limits and the jump at an interior point.
    Limits {
        #[arg(long = "fn", value_name = "FILE")]
        func: PathBuf,
        #[arg(long, value_name = "T")]
        at: f64,
    },
    /// List the jumps of absolute size at least a threshold.
    Jumps {
        #[arg(long = "fn", value_name = "FILE")]
        func: PathBuf,
        /// Size threshold (> 0).
        #[arg(long, value_name = "EPS")]
        eps: f64,
        /// Closed scan window [LO, HI]; defaults to the whole domain.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Partition the jump set into size layers.
    Partition {
        #[arg(long = "fn", value_name = "FILE")]
        func: PathBuf,
        /// Deepest layer to resolve (defaults per document kind).
        #[arg(long, value_name = "M")]
        depth: Option<u64>,
        /// Closed scan window [LO, HI]; defaults to the whole domain.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Sum a transform of the jump sizes over a time set.
    SumJumps {
        #[arg(long = "fn", value_name = "FILE")]
        func: PathBuf,
        /// Transform: "power:P", "bounded", or "expm".
        #[arg(long, value_name = "SPEC")]
        phi: String,
        /// Open time window (LO, HI); defaults to the domain interior.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
        /// Tail tolerance for truncated sums.
        #[arg(long, value_name = "TOL", default_value_t = 1e-12)]
        tol: f64,
    },
    /// Build the cumulative jump function of a nonnegative weight family.
    Cumulate {
        /// Weight-family document (JSON).
        #[arg(long, value_name = "FILE")]
        family: PathBuf,
    },
    /// Count the jumps inside a time x size rectangle.
    Count {
        /// Function document (JSON).
        #[arg(long = "fn", value_name = "FILE", conflicts_with = "path")]
        func: Option<PathBuf>,
        /// Simulated path document (JSON), as written by `simulate`.
        #[arg(long, value_name = "FILE")]
        path: Option<PathBuf>,
        /// Rectangle document (JSON).
        #[arg(long, value_name = "FILE")]
        rect: PathBuf,
    },
    /// Draw one sample path of a jump model.
    Simulate {
        /// Model document (JSON).
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// RNG seed; overrides the seed recorded in the model document.
        #[arg(long, value_name = "SEED")]
        seed: u64,
    },
    /// Per-seed jump counts over an ensemble of paths.
    Census {
        /// Model document (JSON).
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Base RNG seed; members run on streams 0..N under this seed.
        #[arg(long, value_name = "SEED")]
        seed: u64,
        /// Number of ensemble members.
        #[arg(long, value_name = "N")]
        seeds: u64,
        /// Rectangle document (JSON).
        #[arg(long, value_name = "FILE")]
        rect: PathBuf,
        /// Emit a CSV table (seed,count) instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Check a document against its structural invariants.
    Validate {
        #[arg(long = "fn", value_name = "FILE")]
        func: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        family: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        rect: Option<PathBuf>,
    },
}

/// A failure ready for the stderr line + exit code.
struct Failure {
    exit: u8,
    code: String,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { exit: 2, code: "UsageError".into(), message: message.into() }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure { exit: 1, code: "Io".into(), message: format!("{}: {err}", path.display()) }
    }

    fn parse(path: &Path, err: serde_json::Error) -> Self {
        Failure {
            exit: 2,
            code: "ParseError".into(),
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            exit: if err.is_domain_error() { 3 } else { 2 },
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            // Compress clap's multi-line report into the one-line contract.
            let message = e
                .to_string()
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(|l| l.trim_start_matches("error: ").trim().trim_end_matches(':'))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join("; ");
            return fail(Failure::usage(message));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", json!({ "error": f.code, "message": f.message }));
    ExitCode::from(f.exit)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match cli.verb {
        Verb::Eval { func, at } => {
            let f: RegulatedFn = read_doc(&func)?;
            let mut rows = Vec::with_capacity(at.len());
            for t in at {
                rows.push(json!({ "t": t, "value": f.eval(t)? }));
            }
            emit(&rows, out)
        }
        Verb::Limits { func, at } => {
            let f: RegulatedFn = read_doc(&func)?;
            let doc = json!({
                "t": at,
                "left": f.left_limit(at)?,
                "right": f.right_limit(at)?,
                "jump": f.jump_at(at)?,
            });
            emit(&doc, out)
        }
        Verb::Jumps { func, eps, window } => {
            let f: RegulatedFn = read_doc(&func)?;
            let w = scan_window(&f, window.as_deref())?;
            emit(&f.jumps_at_least(eps, &w)?, out)
        }
        Verb::Partition { func, depth, window } => {
            let f: RegulatedFn = read_doc(&func)?;
            let w = scan_window(&f, window.as_deref())?;
            emit(&f.layered_partition(&w, depth)?, out)
        }
        Verb::SumJumps { func, phi, window, tol } => {
            let f: RegulatedFn = read_doc(&func)?;
            let phi = PhiSpec::from_str(&phi)?;
            let set = open_time_set(&f, window.as_deref());
            let doc = match phi_sum(&f, &phi, &set, tol)? {
                SumResult::Finite { value, error } => {
                    json!({ "status": "finite", "value": value, "error": error })
                }
                SumResult::Infinite => json!({ "status": "infinite" }),
            };
            emit(&doc, out)
        }
        Verb::Cumulate { family } => {
            let fam: WeightFamily = read_doc(&family)?;
            emit(&cumulative_jump_function(&fam)?, out)
        }
        Verb::Count { func, path, rect } => {
            let f = match (func, path) {
                (Some(p), None) => read_doc::<RegulatedFn>(&p)?,
                (None, Some(p)) => read_doc::<SamplePath>(&p)?.f,
                _ => return Err(Failure::usage("count needs exactly one of --fn and --path")),
            };
            let rect: Rectangle = read_doc(&rect)?;
            emit(&json!({ "count": jump_count(&f, &rect)? }), out)
        }
        Verb::Simulate { model, seed } => {
            let mut m: PathModel = read_doc(&model)?;
            set_seed(&mut m, seed);
            emit(&simulate(&m)?, out)
        }
        Verb::Census { model, seed, seeds, rect, csv } => {
            let mut m: PathModel = read_doc(&model)?;
            set_seed(&mut m, seed);
            let rect: Rectangle = read_doc(&rect)?;
            let stats = empirical_jump_census(&m, seeds, &rect)?;
            if csv {
                let mut table = String::from("seed,count\n");
                for (stream, count) in &stats.counts {
                    table.push_str(&format!("{stream},{count}\n"));
                }
                emit_text(table, out)
            } else {
                emit(&stats, out)
            }
        }
        Verb::Validate { func, family, model, rect } => {
            let doc = match (func, family, model, rect) {
                (Some(p), None, None, None) => {
                    let f: RegulatedFn = read_doc(&p)?;
                    let report = f.validate();
                    let mut v = serde_json::to_value(&report)
                        .map_err(|e| Failure::parse(&p, e))?;
                    v["ok"] = json!(report.is_valid());
                    v
                }
                (None, Some(p), None, None) => {
                    let fam: WeightFamily = read_doc(&p)?;
                    let problems = fam.problems();
                    json!({ "ok": problems.is_empty(), "problems": problems })
                }
                (None, None, Some(p), None) => {
                    let m: PathModel = read_doc(&p)?;
                    verdict(m.validate())
                }
                (None, None, None, Some(p)) => {
                    let r: Rectangle = read_doc(&p)?;
                    verdict(r.validate())
                }
                _ => {
                    return Err(Failure::usage(
                        "validate needs exactly one of --fn, --family, --model, --rect",
                    ))
                }
            };
            emit(&doc, out)
        }
    }
}

/// Closed scan window for `jumps`/`partition`: `[lo, hi]` when given,
/// otherwise the function's whole domain.
fn scan_window(f: &RegulatedFn, window: Option<&[f64]>) -> Result<IntervalSpec, Failure> {
    match window {
        Some(&[lo, hi]) => Ok(IntervalSpec::compact(lo, hi)?),
        Some(_) => unreachable!("clap enforces two values"),
        None => Ok(f.domain),
    }
}

/// Open time set for `sum-jumps`: `(lo, hi)` when given, otherwise the
/// open interior of the domain (sums never read boundary atoms).
fn open_time_set(f: &RegulatedFn, window: Option<&[f64]>) -> IndexSetExpr {
    let (lo, hi) = match window {
        Some(&[lo, hi]) => (Some(lo), Some(hi)),
        Some(_) => unreachable!("clap enforces two values"),
        None => (f.domain.left_endpoint(), f.domain.right_endpoint()),
    };
    IndexSetExpr::Interval { lo, hi, lo_open: true, hi_open: true }
}

fn set_seed(model: &mut PathModel, seed: u64) {
    match model {
        PathModel::CompoundPoisson { seed: s, .. } | PathModel::SplitJump { seed: s, .. } => {
            *s = seed
        }
    }
}

/// `{"ok": ...}` document for pass/fail validators.
fn verdict(check: regulated::Result<()>) -> serde_json::Value {
    match check {
        Ok(()) => json!({ "ok": true, "problems": [] }),
        Err(e) => json!({ "ok": false, "problems": [e.to_string()], "code": e.code() }),
    }
}

fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::parse(path, e))
}

fn emit<T: Serialize>(doc: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Failure {
        exit: 1,
        code: "Io".into(),
        message: format!("serialization failed: {e}"),
    })?;
    text.push('\n');
    emit_text(text, out)
}

fn emit_text(text: String, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}
