use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apdiff::harness::{
    self, csv_string, field_line_dump, solution_dump, OneOrMany, RunConfig, RunReport, RunSpec, Scheme,
};
use apdiff::problems::{self, SchemeHint};
use apdiff::{Error, Result};

#[derive(Parser)]
#[command(name = "apdiff", version, about = "Asymptotic-preserving anisotropic diffusion solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case (the first grid and epsilon of the config).
    Solve(RunArgs),
    /// Run every grid x epsilon combination.
    Sweep(RunArgs),
    /// Condition estimates of the AP scheme and its baseline over epsilon.
    Cond(RunArgs),
    /// Dump the traced field lines of a non-aligned case.
    Trace(RunArgs),
    /// List the built-in cases.
    Problems,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// aligned5, general9, naive5 or naive9; defaults to the case's AP scheme.
    #[arg(long)]
    scheme: Option<String>,
    /// Grid as IxJ; repeatable.
    #[arg(long = "grid", value_parser = parse_grid)]
    grids: Vec<[usize; 2]>,
    /// Epsilon (eps_min for examples 3 and 5); repeatable.
    #[arg(long = "epsilon", allow_negative_numbers = true)]
    epsilons: Vec<f64>,
    #[arg(long)]
    substeps_per_cell: Option<usize>,
    /// Example 3 only: zero Neumann data instead of the exact flux.
    #[arg(long)]
    homogeneous_flux: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long)]
    field_lines: Option<PathBuf>,
    /// Also print every output on standard output.
    #[arg(long)]
    stdout: bool,
}

fn parse_grid(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected IxJ, got '{s}'"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid '{s}': {e}"));
    Ok([p(a)?, p(b)?])
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let problem = self
                    .problem
                    .clone()
                    .ok_or_else(|| Error::Config("either --config or --problem is required".into()))?;
                let scheme = match problems::build(&problem, 1.0, None)?.hint {
                    SchemeHint::Aligned5 => Scheme::Aligned5,
                    SchemeHint::General9 => Scheme::General9,
                };
                RunConfig::new(&problem, scheme, vec![[64, 64]], vec![1.0])
            }
        };
        if let Some(p) = &self.problem {
            cfg.problem = p.clone();
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = Scheme::parse(s)?;
        }
        if !self.grids.is_empty() {
            cfg.grid = OneOrMany::Many(self.grids.clone());
        }
        if !self.epsilons.is_empty() {
            cfg.epsilon = harness::EpsilonSpec::Values(OneOrMany::Many(self.epsilons.clone()));
        }
        if let Some(n) = self.substeps_per_cell {
            cfg.substeps_per_cell = n;
        }
        cfg.homogeneous_flux |= self.homogeneous_flux;
        let out = &mut cfg.output;
        for (dst, src) in [
            (&mut out.csv, &self.csv),
            (&mut out.json, &self.json),
            (&mut out.solution, &self.solution),
            (&mut out.field_lines, &self.field_lines),
        ] {
            if src.is_some() {
                *dst = src.clone();
            }
        }
        cfg.flags.dump_solution |= cfg.output.solution.is_some();
        cfg.flags.dump_field_lines |= cfg.output.field_lines.is_some();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Write `text` to `path` if given, and to stdout if requested or if
/// there is nowhere else for it to go.
fn emit(text: &str, path: Option<&Path>, to_stdout: bool) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, text)?;
    }
    if to_stdout || path.is_none() {
        std::io::stdout().write_all(text.as_bytes())?;
    }
    Ok(())
}

fn emit_reports(cfg: &RunConfig, reports: &[RunReport], to_stdout: bool) -> Result<()> {
    emit(&csv_string(reports)?, cfg.output.csv.as_deref(), to_stdout)?;
    if let Some(p) = &cfg.output.json {
        let text = serde_json::to_string_pretty(reports).map_err(|e| Error::Config(e.to_string()))?;
        emit(&text, Some(p), to_stdout)?;
    }
    Ok(())
}

fn first_spec(cfg: &RunConfig) -> RunSpec {
    harness::sweep_specs(cfg, cfg.scheme).swap_remove(0)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Problems => {
            for name in problems::NAMES {
                let c = problems::build(name, 1.0, None)?;
                println!("{name}\t[0, {}] x [0, {}]\t{:?}", c.a, c.b, c.hint);
            }
            Ok(())
        }
        Command::Solve(args) => {
            let cfg = args.config()?;
            let spec = first_spec(&cfg);
            let out = harness::run_case(&spec)?;
            emit_reports(&cfg, std::slice::from_ref(&out.report), args.stdout)?;
            if cfg.flags.dump_solution {
                let text = solution_dump(&out.grid, &out.solution);
                emit(&text, cfg.output.solution.as_deref(), args.stdout)?;
            }
            if cfg.flags.dump_field_lines && !spec.scheme.is_aligned() {
                let (grid, lines) = harness::trace_case(&spec)?;
                emit(&field_line_dump(&grid, &lines), cfg.output.field_lines.as_deref(), args.stdout)?;
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            emit_reports(&cfg, &harness::run_sweep(&cfg)?, args.stdout)
        }
        Command::Cond(args) => {
            let cfg = args.config()?;
            emit_reports(&cfg, &harness::run_cond_sweep(&cfg)?, args.stdout)
        }
        Command::Trace(args) => {
            let cfg = args.config()?;
            let (grid, lines) = harness::trace_case(&first_spec(&cfg))?;
            emit(&field_line_dump(&grid, &lines), cfg.output.field_lines.as_deref(), args.stdout)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
