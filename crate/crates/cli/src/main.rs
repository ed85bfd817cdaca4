//! `transquad`: transfinite sums, step and regulated integrals, gauge defects and impulsive
//! problems from the command line.

mod commands;
mod expr;
mod report;
mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_HELP: &str = "\
Exit codes: 0 when the requested result is decided on certified or declared grounds, 2 when it is
inconclusive (budgets exhausted or only heuristic evidence), 1 on malformed input.

Environment: TRANSQUAD_THREADS caps the worker threads.";

#[derive(Debug, Parser)]
#[command(name = "transquad", version, about = "Transfinite sums and integrals over well-ordered index sets", after_help = EXIT_HELP)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// What goes to standard output: the JSON report or the main CSV table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A gallery entry or a JSON spec file.
#[derive(Clone, Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Built-in example id.
    #[arg(long)]
    pub gallery: Option<String>,
    /// JSON spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transfinite sum of a family, with the summability trichotomy and a partial-sum table.
    #[command(after_help = "CSV columns: address, position, value_1..value_d [, tail_bound], residual, exact.\n\
        value_k are the coordinates of the partial sum up to the address; tail_bound bounds the c0 coordinates past the prefix.\n\
        Spec file: {\"set\": {\"kind\": \"dyadic\"|\"custom\"|\"finite\", \"depth\", \"min\", \"sup\", \"layers\", \"points\"},\n\
        \"space\": \"real\"|\"vec\"|\"c0\", \"dim\", \"value\": formula, \"tail\", \"remainder\", \"abs_remainder\", \"nonnegative\"}.\n\
        Formulas use n, n0..n7 (address digits), len, i (coordinate), t (position), e, pi.")]
    Sum(commands::SumArgs),
    /// Integrability of a step mapping in every mode and its primitive.
    #[command(name = "integrate-step", after_help = "CSV columns: t, f_1..f_d [, tail_bound], residual (primitive on a uniform grid).\n\
        Spec file: a family spec without \"nonnegative\", plus \"terminal\" (g(b)), \"bound\", \"weighted_remainder\", \"weighted_abs_remainder\".")]
    IntegrateStep(commands::IntegrateStepArgs),
    /// Integral of a right-regulated mapping through step approximations.
    #[command(after_help = "Knots CSV (main table): left, right, kind (cell|tail), bound. Cells carry the oscillation bound,\n\
        tails the certified integral residual of the accumulation run.\n\
        Primitive CSV (--csv): t, f_1..f_d [, tail_bound], residual.\n\
        Spec file: {\"domain\": [a, b|\"inf\"], \"space\", \"dim\", \"value\": formula in t and i, \"tail\", \"bound\", \"lipschitz\"}.")]
    Integrate(commands::IntegrateArgs),
    /// Henstock–Lebesgue and Henstock–Kurzweil defects of a finite step truncation under shrinking gauges.
    #[command(name = "gauge-check", after_help = "CSV columns: k, s, cells, hl, hk (gauge scale s = 2^-k, defects of the Cousin partition).")]
    GaugeCheck(commands::GaugeArgs),
    /// Smallest and greatest solutions of an impulsive problem by monotone iteration.
    #[command(name = "impulsive-solve", after_help = "CSV columns: t, u_1..u_d, chain (lower|upper), side (left|right of a jump).\n\
        Log CSV (--log): chain, iteration, change.\n\
        Spec file: {\"interval\": [a, c], \"dim\", \"forcing\": {\"gallery\": id} | {\"value\", \"primitive\"},\n\
        \"coupling\": {\"kind\": \"arctan\", \"terms\"}, \"impulses\": {\"set\", \"value\", \"budget\", \"tail\"},\n\
        \"iteration\": {\"tol\", \"max_iter\", \"grid\"}}.")]
    ImpulsiveSolve(commands::ImpulsiveArgs),
}

fn threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("TRANSQUAD_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| anyhow::anyhow!("TRANSQUAD_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

/// Runs one invocation and returns its exit code.
pub fn run(cfg: RunConfig) -> i32 {
    let outcome = threads().and_then(|_| commands::dispatch(&cfg.command));
    let out = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("transquad: {e:#}");
            return 1;
        }
    };
    let written = (|| -> anyhow::Result<()> {
        if let Some(p) = &cfg.report {
            std::fs::write(p, out.report.to_json()).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?;
        }
        for (path, table) in &out.files {
            table.save(path)?;
        }
        let mut stdout = std::io::stdout().lock();
        match cfg.format {
            Format::Json => stdout.write_all(out.report.to_json().as_bytes())?,
            Format::Csv => stdout.write_all(out.main.to_csv().as_bytes())?,
        }
        stdout.flush()?;
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("transquad: {e:#}");
        return 1;
    }
    out.report.status.exit_code()
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cfg) as u8)
}
