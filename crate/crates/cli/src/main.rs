use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use facpow::harness::{
    bench, check, props_report, render_svg, validate_svg, Curve, Experiment, HarnessError, RunConfig, Trace,
};
use facpow::optimizers::{BoundConstants, BoundKind, BoundSpec};

#[derive(Parser)]
#[command(name = "facpow", version, about = "Factorial-power optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity and inequality suites and print a pass/fail table.
    Props,
    /// Run one experiment and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output path; without either the CSV goes
        /// to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seed ensemble and write per-checkpoint median and quartiles.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a trace against a closed-form bound.
    Check {
        #[arg(long)]
        trace: PathBuf,
        /// One of: sgdm-nonsmooth, sgdm-sqrt, sgdm-strongly-convex, nesterov,
        /// svrgm-convex, svrgm-strongly-convex, dual-avg-factorial,
        /// dual-avg-recursive.
        #[arg(long)]
        bound: String,
        #[arg(long, default_value_t = 1.0)]
        slack: f64,
        /// Sets or overrides a bound constant, e.g. `--const R=0.5`.
        #[arg(long = "const", value_name = "NAME=VALUE", value_parser = parse_const)]
        consts: Vec<(String, f64)>,
    },
    /// Render a trace or aggregate CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

fn parse_const(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("{v:?} is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Returns whether the command's verdict is a pass.
fn execute(cmd: Command) -> Result<bool, HarnessError> {
    match cmd {
        Command::Props => {
            let (table, ok) = props_report();
            print!("{table}");
            Ok(ok)
        }
        Command::Run { config, seed, out } => {
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.out = out;
            }
            let trace = Experiment::prepare(&cfg)?.run()?;
            match &cfg.out {
                Some(path) => {
                    trace.write(path)?;
                    if let Some(last) = trace.final_row() {
                        eprintln!(
                            "wrote {} rows to {}; final step {} f_gap {}",
                            trace.rows.len(),
                            path.display(),
                            last.step,
                            last.f_gap
                        );
                    }
                }
                None => print!("{}", trace.to_csv()),
            }
            Ok(true)
        }
        Command::Bench { config, seeds, jobs, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let ens = bench(&cfg, seeds, jobs)?;
            let agg = &ens.aggregate;
            match out.or(cfg.out) {
                Some(path) => write_file(&path, &agg.to_csv())?,
                None => print!("{}", agg.to_csv()),
            }
            if let Some(r) = agg.empirical_reference {
                eprintln!("empirical gaps measured against best value seen: {r}");
            }
            if let Some(last) = agg.rows.last() {
                eprintln!(
                    "{} seeds; final step {}: median {} (IQR {} .. {})",
                    agg.seeds, last.step, last.median, last.q25, last.q75
                );
            }
            Ok(true)
        }
        Command::Check {
            trace,
            bound,
            slack,
            consts,
        } => {
            let kind: BoundKind = bound.parse()?;
            let (trace, sidecar) = Trace::read(&trace)?;
            let mut constants = match &sidecar {
                Some(s) => s.bound_constants()?,
                None => BoundConstants::default(),
            };
            for (k, v) in &consts {
                constants.set(k, *v)?;
            }
            let spec = BoundSpec::new(kind, constants)?;
            let report = check(&trace, &spec, slack)?;
            println!("{report}");
            Ok(report.passed())
        }
        Command::Plot { input, out, title } => {
            let text = std::fs::read_to_string(&input).map_err(|e| HarnessError::Io {
                path: input.display().to_string(),
                msg: e.to_string(),
            })?;
            let label = input.file_stem().map_or("series".into(), |s| s.to_string_lossy().into_owned());
            let curve = Curve::from_csv(&text, &label)?;
            let svg = render_svg(&[curve], title.as_deref().unwrap_or(&label))?;
            validate_svg(&svg)?;
            write_file(&out, &svg)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
