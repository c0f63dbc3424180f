//! Command-line front end: partition enumeration, cumulant computation,
//! clique-kernel convergence sweeps, and the verification suites.
//!
//! Exit codes: 0 success, 2 verification failure, 3 cap/resource limit,
//! 4 input error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use freechaos::diagrams::{
    classical_cumulant_poisson, free_cumulant_poisson, free_cumulant_semicircular,
    CumulantReport, DiagramError, ReportKind, ReportMethod,
};
use freechaos::fock::{moment_oracle, MeasureKind};
use freechaos::kernels::ElementaryKernel;
use freechaos::limits::{convergence_report, rows_to_csv, CliqueKernelSpec};
use freechaos::partitions::{enumerate_class, PartitionClass, PartitionError};
use freechaos::verify::{all_suites, suite_by_name, SuiteResult, SUITE_NAMES};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "freechaos",
    about = "Moments and cumulants of multiple stochastic integrals over free and classical measures",
    version
)]
struct Cli {
    /// Number of worker threads for parallel sums and sweeps (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Seed for the randomized verification suites; recorded in outputs.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate a constrained partition class as JSON lines.
    Enumerate(EnumerateArgs),
    /// Compute moments/cumulants of a kernel from a JSON kernel file.
    Cumulants(CumulantsArgs),
    /// Run the clique-kernel convergence sweep.
    Sweep(SweepArgs),
    /// Run verification suites; exit 0 iff all requested suites pass.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassArg {
    Nc,
    Nc0,
    Nc2,
    Nc02,
    Ncge2,
    Nc0ge2,
    Classical,
}

impl From<ClassArg> for PartitionClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Nc => PartitionClass::Nc,
            ClassArg::Nc0 => PartitionClass::Nc0,
            ClassArg::Nc2 => PartitionClass::Nc2,
            ClassArg::Nc02 => PartitionClass::Nc02,
            ClassArg::Ncge2 => PartitionClass::NcGe2,
            ClassArg::Nc0ge2 => PartitionClass::Nc0Ge2,
            ClassArg::Classical => PartitionClass::ClassicalConnecting,
        }
    }
}

#[derive(Args)]
struct EnumerateArgs {
    /// Number of tensor factors (groups of the interval partition).
    #[arg(long)]
    m: usize,
    /// Size of each group (the integral order).
    #[arg(long)]
    q: usize,
    #[arg(long, value_enum)]
    class: ClassArg,
    /// Override the ground-set size cap (explicit opt-in for larger runs).
    #[arg(long)]
    cap: Option<usize>,
    /// Output file for the JSON-lines listing (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    FreePoisson,
    Semicircular,
    ClassicalPoisson,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct CumulantsArgs {
    /// Kernel file (JSON: dim, order, cells, coeffs).
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Highest cumulant order to compute.
    #[arg(long, default_value_t = 4)]
    m_max: usize,
    /// Cross-check each order against the Fock-space oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Integral order of the clique kernels.
    #[arg(long)]
    q: Option<usize>,
    /// Ambient dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated scale grid, e.g. 8,16,32,64.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<f64>>,
    /// Highest cumulant order per row.
    #[arg(long)]
    m_max: Option<usize>,
    /// Grid step as a fraction of the interaction radius.
    #[arg(long)]
    h_ratio: Option<f64>,
    /// Optional JSON config file; explicit flags win over its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output prefix: writes <prefix>.csv, <prefix>.json and
    /// <prefix>.meta.json.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run a single suite (oracle, product, closed-form, fourth-moment,
    /// counterexample, spectral, combinatorics, roundtrip); all when omitted.
    #[arg(long)]
    suite: Option<String>,
    /// Write the suite reports as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .ok();
    }
    let code = match &cli.command {
        Command::Enumerate(args) => cmd_enumerate(args, cli.seed),
        Command::Cumulants(args) => cmd_cumulants(args, cli.seed),
        Command::Sweep(args) => cmd_sweep(args, cli.seed),
        Command::Verify(args) => cmd_verify(args, cli.seed),
    };
    ExitCode::from(code)
}

fn write_output(out: &Option<PathBuf>, payload: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

/// Timestamps and wall-clock data go into a sidecar so the primary payload
/// stays byte-identical across reruns.
fn write_sidecar(path: &Path, body: Value) {
    let sidecar = path.with_extension(format!(
        "{}meta.json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let meta = json!({
        "format_version": 1,
        "written_at_unix_secs": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "payload": body,
    });
    if let Err(e) = std::fs::write(&sidecar, format!("{:#}\n", meta)) {
        eprintln!("warning: sidecar {}: {e}", sidecar.display());
    }
}

fn cmd_enumerate(args: &EnumerateArgs, seed: u64) -> u8 {
    let class: PartitionClass = args.class.into();
    let parts = match enumerate_class(args.m, args.q, class, args.cap) {
        Ok(v) => v,
        Err(PartitionError::CapExceeded { requested, cap }) => {
            eprintln!(
                "error: ground set of size {requested} exceeds the cap {cap}; pass --cap to override"
            );
            return EXIT_CAP;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut payload = String::new();
    for p in &parts {
        payload.push_str(&format!("{}\n", json!({"blocks": p.blocks()})));
    }
    if let Err(e) = write_output(&args.out, &payload) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    eprintln!(
        "{} partitions of class {:?} for m={} q={} (seed {seed})",
        parts.len(),
        class,
        args.m,
        args.q
    );
    if let Some(out) = &args.out {
        write_sidecar(
            out,
            json!({"command": "enumerate", "m": args.m, "q": args.q,
                   "class": format!("{class:?}"), "count": parts.len(), "seed": seed}),
        );
    }
    EXIT_OK
}

fn cumulant_error_code(e: &DiagramError) -> u8 {
    match e {
        DiagramError::Partition(PartitionError::CapExceeded { .. }) => EXIT_CAP,
        _ => EXIT_INPUT,
    }
}

fn cmd_cumulants(args: &CumulantsArgs, seed: u64) -> u8 {
    let text = match std::fs::read_to_string(&args.kernel) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.kernel.display());
            return EXIT_INPUT;
        }
    };
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: kernel file is not valid JSON: {e}");
            return EXIT_INPUT;
        }
    };
    let kernel = match ElementaryKernel::from_json(&value) {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let (kind, oracle_kind) = match args.kind {
        KindArg::FreePoisson => (ReportKind::FreePoisson, Some(MeasureKind::FreePoisson)),
        KindArg::Semicircular => (ReportKind::Semicircular, Some(MeasureKind::Semicircular)),
        KindArg::ClassicalPoisson => (ReportKind::ClassicalPoisson, None),
    };
    let mut values = BTreeMap::new();
    let mut discrepancies: Vec<Value> = Vec::new();
    for m in 1..=args.m_max {
        let kappa = match kind {
            ReportKind::FreePoisson => free_cumulant_poisson(&kernel, m),
            ReportKind::Semicircular => free_cumulant_semicircular(&kernel, m),
            ReportKind::ClassicalPoisson => classical_cumulant_poisson(&kernel, m),
        };
        let kappa = match kappa {
            Ok(v) => v,
            Err(e) => {
                eprintln!("error: order {m}: {e}");
                return cumulant_error_code(&e);
            }
        };
        values.insert(m, kappa);
        if args.oracle {
            if let Some(ok) = oracle_kind {
                // oracle check on the moment of the same order
                let diag = match kind {
                    ReportKind::FreePoisson => {
                        freechaos::diagrams::free_moment_poisson(&kernel, m)
                    }
                    _ => freechaos::diagrams::free_moment_semicircular(&kernel, m),
                };
                match (diag, moment_oracle(&kernel, ok, m)) {
                    (Ok(a), Ok(b)) => discrepancies
                        .push(json!({"m": m, "moment_discrepancy": (a - b).norm()})),
                    (Err(e), _) => {
                        eprintln!("error: oracle check order {m}: {e}");
                        return cumulant_error_code(&e);
                    }
                    (_, Err(e)) => {
                        eprintln!("error: oracle check order {m}: {e}");
                        return EXIT_INPUT;
                    }
                }
            } else {
                eprintln!("note: no operator oracle for the classical engine; skipping --oracle");
            }
        }
    }
    let report = CumulantReport {
        kind,
        method: ReportMethod::Diagram,
        values,
    };
    let payload = match args.format {
        FormatArg::Json => {
            let mut v = report.to_json();
            v["seed"] = json!(seed);
            if !discrepancies.is_empty() {
                v["oracle_discrepancies"] = json!(discrepancies);
            }
            format!("{:#}\n", v)
        }
        FormatArg::Csv => {
            let mut buf = Vec::new();
            if let Err(e) = report.to_csv(&mut buf) {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            String::from_utf8(buf).unwrap()
        }
    };
    if let Err(e) = write_output(&args.out, &payload) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    if let Some(out) = &args.out {
        write_sidecar(
            out,
            json!({"command": "cumulants", "kernel": args.kernel.display().to_string(),
                   "kind": format!("{kind:?}"), "m_max": args.m_max, "seed": seed}),
        );
    }
    EXIT_OK
}

fn cmd_sweep(args: &SweepArgs, seed: u64) -> u8 {
    // config file supplies defaults; explicit flags win
    let mut q = 2usize;
    let mut d = 1usize;
    let mut grid: Vec<f64> = vec![8.0, 16.0, 32.0, 64.0];
    let mut m_max = 4usize;
    let mut h_ratio = 0.5f64;
    if let Some(path) = &args.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_INPUT;
            }
        };
        let v: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("error: config is not valid JSON: {e}");
                return EXIT_INPUT;
            }
        };
        if let Some(x) = v["q"].as_u64() {
            q = x as usize;
        }
        if let Some(x) = v["d"].as_u64() {
            d = x as usize;
        }
        if let Some(x) = v["m_max"].as_u64() {
            m_max = x as usize;
        }
        if let Some(x) = v["h_ratio"].as_f64() {
            h_ratio = x;
        }
        if let Some(arr) = v["n"].as_array() {
            grid = arr.iter().filter_map(|x| x.as_f64()).collect();
        }
    }
    if let Some(x) = args.q {
        q = x;
    }
    if let Some(x) = args.d {
        d = x;
    }
    if let Some(x) = args.m_max {
        m_max = x;
    }
    if let Some(x) = args.h_ratio {
        h_ratio = x;
    }
    if let Some(x) = &args.n {
        grid = x.clone();
    }
    if grid.is_empty() {
        eprintln!("error: empty sweep grid");
        return EXIT_INPUT;
    }
    let specs: Vec<CliqueKernelSpec> = grid
        .iter()
        .map(|&n| {
            let mut s = CliqueKernelSpec::new(q, d, n);
            s.h = Some(s.radius() * h_ratio);
            s
        })
        .collect();
    let report = match convergence_report(&specs, m_max) {
        Ok(r) => r,
        Err(freechaos::limits::LimitsError::Partition(PartitionError::CapExceeded {
            requested,
            cap,
        })) => {
            eprintln!("error: ground set of size {requested} exceeds the cap {cap}");
            return EXIT_CAP;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut json_payload = report.to_json();
    json_payload["seed"] = json!(seed);
    let mut csv_buf = Vec::new();
    if let Err(e) = rows_to_csv(&report.rows, &mut csv_buf) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    match &args.out_prefix {
        Some(prefix) => {
            let csv_path = prefix.with_extension("csv");
            let json_path = prefix.with_extension("json");
            for (path, data) in [
                (&csv_path, String::from_utf8(csv_buf).unwrap()),
                (&json_path, format!("{:#}\n", json_payload)),
            ] {
                if let Err(e) = std::fs::write(path, data) {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_INPUT;
                }
            }
            write_sidecar(
                &json_path,
                json!({"command": "sweep", "q": q, "d": d, "n": grid, "m_max": m_max,
                       "h_ratio": h_ratio, "seed": seed,
                       "runtimes_secs": report.rows.iter().map(|r| json!({
                           "n": r.n, "build": r.build_secs, "cumulants": r.cumulant_secs,
                       })).collect::<Vec<_>>()}),
            );
        }
        None => {
            print!("{:#}\n", json_payload);
        }
    }
    eprintln!(
        "sweep complete: alpha = {}, chi3 deviation = {:.4}, semicircular trend {}",
        report.alpha,
        report.chi3_relative_deviation,
        if report.semicircular_trend_ok { "ok" } else { "NOT ok" }
    );
    EXIT_OK
}

fn cmd_verify(args: &VerifyArgs, seed: u64) -> u8 {
    let results: Vec<SuiteResult> = match &args.suite {
        Some(name) => match suite_by_name(name, seed) {
            Some(r) => vec![r],
            None => {
                eprintln!(
                    "error: unknown suite '{name}'; available: {}",
                    SUITE_NAMES.join(", ")
                );
                return EXIT_INPUT;
            }
        },
        None => all_suites(seed),
    };
    let mut all_ok = true;
    for r in &results {
        println!(
            "criterion {} ({}): {} [max discrepancy {:.3e}, {:.1}s]",
            r.criterion,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.max_discrepancy,
            r.seconds
        );
        for d in &r.details {
            println!("    {d}");
        }
        all_ok &= r.passed;
    }
    if let Some(out) = &args.out {
        let payload = json!({
            "format_version": 1,
            "seed": seed,
            "suites": results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        });
        if let Err(e) = std::fs::write(out, format!("{:#}\n", payload)) {
            eprintln!("error: {}: {e}", out.display());
            return EXIT_INPUT;
        }
        write_sidecar(
            out,
            json!({"command": "verify", "seed": seed,
                   "seconds": results.iter().map(|r| r.seconds).collect::<Vec<_>>()}),
        );
    }
    if all_ok {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
