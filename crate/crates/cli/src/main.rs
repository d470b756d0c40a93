use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use maxrep::finite::{run_finite_suite, Fault, SuiteConfig};
use maxrep::mc::Ensemble;
use maxrep::path::write_csv;
use maxrep::scenarios::{run, RunParams, ScenarioError, ScenarioId, ScenarioReport};

const FINITE_SUITE: &str = "finite-suite";
/// Paths per scenario written by `--csv-dump`.
const CSV_PATHS: usize = 5;

/// Runs a scenario or the finite-model suite and checks every verdict
/// against its expected value.
///
/// Exit status: 0 when all verdicts match, 1 when a check disagrees with its
/// expected verdict, 2 on a configuration error or unwritable output.
#[derive(Debug, Parser)]
#[command(name = "maxrep", version)]
struct Args {
    /// Scenario id (s1_first_jump ... s7_interpolation) or `finite-suite`.
    #[arg(long)]
    scenario: Option<String>,
    /// Number of outer paths (scenario default when omitted).
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Grid step; jump scenarios round it down to a power of two.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Tolerance override, `k=<SE multiplier>` or `residual=<value>`; repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Report file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-path CSV dumps of the first few paths.
    #[arg(long)]
    csv_dump: Option<PathBuf>,
    /// Worker threads for path simulation.
    #[arg(long)]
    threads: Option<usize>,
    /// Finite suite: largest number of periods (at most 5).
    #[arg(long, default_value_t = 4)]
    max_periods: usize,
    /// Finite suite: branching factor, 2 or 3.
    #[arg(long, default_value_t = 2)]
    branching: usize,
    /// Finite suite: inject a fault that the checkers must catch (`z-tilde`).
    #[arg(long)]
    fault: Option<String>,
    /// List scenario ids and exit.
    #[arg(long)]
    list: bool,
}

enum Outcome {
    Matched,
    Mismatched,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(Outcome::Matched) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatched) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: &Args) -> Result<Outcome> {
    if args.list {
        for id in ScenarioId::ALL {
            println!("{id}");
        }
        println!("{FINITE_SUITE}");
        return Ok(Outcome::Matched);
    }
    if let Some(k) = args.threads {
        if k == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("thread pool")?;
    }
    let Some(name) = args.scenario.as_deref() else {
        bail!("--scenario is required (see --list)");
    };
    if name == FINITE_SUITE {
        return finite_suite(args);
    }
    let id: ScenarioId = name.parse()?;
    let params = params_for(id, args)?;
    let outcome = match run(id, &params) {
        Ok(r) => r,
        Err(e @ (ScenarioError::BadParams(_) | ScenarioError::UnknownId(_))) => bail!(e),
        Err(e) => return Err(e).context("scenario run failed"),
    };
    if let Some(dir) = &args.csv_dump {
        dump_csv(dir, &outcome.ensemble).with_context(|| format!("writing CSV to {}", dir.display()))?;
    }
    emit(args.out.as_deref(), &outcome.report.to_json())?;
    summarise(&outcome.report);
    Ok(if outcome.report.matches_expected() { Outcome::Matched } else { Outcome::Mismatched })
}

fn params_for(id: ScenarioId, args: &Args) -> Result<RunParams> {
    let mut p = id.defaults();
    p.seed = args.seed;
    if let Some(n) = args.paths {
        p.n_paths = n;
    }
    if let Some(dt) = args.dt {
        p.dt = dt;
    }
    if let Some(h) = args.horizon {
        p.horizon = h;
    }
    for entry in &args.tol {
        let (key, value) = entry.split_once('=').with_context(|| format!("--tol {entry:?}: expected NAME=VALUE"))?;
        let value: f64 = value.parse().with_context(|| format!("--tol {entry:?}: bad number"))?;
        match key {
            "k" => p.k = value,
            "residual" => p.residual_tol = Some(value),
            other => bail!("--tol: unknown tolerance {other:?} (use k or residual)"),
        }
    }
    Ok(p)
}

fn finite_suite(args: &Args) -> Result<Outcome> {
    let fault = match args.fault.as_deref() {
        None => None,
        Some("z-tilde") => Some(Fault::ZTilde),
        Some(other) => bail!("unknown fault {other:?} (use z-tilde)"),
    };
    let cfg = SuiteConfig {
        max_periods: args.max_periods,
        branching: args.branching,
        seed: args.seed,
        fault,
        ..SuiteConfig::default()
    };
    let report = run_finite_suite(&cfg)?;
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    eprintln!("finite suite: {} models, {} cases, {} honest", report.models, report.cases, report.honest_cases);
    for (name, t) in &report.checks {
        let status = if t.passed == t.checked { "PASS" } else { "FAIL" };
        eprintln!("{status} {name}: {}/{}", t.passed, t.checked);
    }
    if let Some(w) = &report.witness {
        eprintln!("witness: {}", serde_json::to_string(w)?);
    }
    Ok(if report.pass { Outcome::Matched } else { Outcome::Mismatched })
}

fn emit(out: Option<&Path>, json: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").context("writing report to stdout")
        }
    }
}

fn summarise(report: &ScenarioReport) {
    let mismatches = report.mismatches();
    eprintln!(
        "{}: {} checks, {} verdicts differ from expected",
        report.scenario,
        report.checks.len(),
        mismatches.len()
    );
    for c in mismatches {
        eprintln!("  MISMATCH {} (estimate {}, tol {}, pass {}, expected {})", c.name, c.estimate, c.tol, c.pass, c.expected);
    }
}

fn dump_csv(dir: &Path, ens: &Ensemble) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, bundle) in ens.bundles.iter().take(CSV_PATHS).enumerate() {
        for (name, path) in &bundle.paths {
            let file = dir.join(format!("{}_path{i}_{name}.csv", ens.scenario));
            write_csv(path, fs::File::create(&file)?)?;
        }
        let mut scalars = String::from("name,value\n");
        for (name, value) in &bundle.scalars {
            scalars.push_str(&format!("{name},{value}\n"));
        }
        fs::write(dir.join(format!("{}_path{i}_scalars.csv", ens.scenario)), scalars)?;
    }
    Ok(())
}
