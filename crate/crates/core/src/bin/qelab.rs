use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qelab::profile::{FiberKind, MuSign};
use qelab::report::{self, Command, Format, GridSpec, RunConfig};
use qelab::QeError;

/// Quasi-Einstein example zoo, identity checks, solution-space dimension and asymptotics.
#[derive(Parser)]
#[command(name = "qelab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the example catalog.
    Zoo {
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the structure identities of a catalog entry on a grid.
    Verify(Entry),
    /// Estimate the dimension of the solution space.
    Dim(Entry),
    /// Dump the profile of a catalog entry as CSV (`--json` for the report).
    Profile(Entry),
    /// Decay fits on an asymptotic end: schwarzschild-end, euclid-end,
    /// synthetic, linear-growth, log-growth.
    Asympt(Entry),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Entry {
    example: Option<String>,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// `N` or `N@lo:hi,lo:hi,...`
    #[arg(long)]
    grid: Option<GridSpec>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long)]
    fiber: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    loops: Option<usize>,
    /// Inner radius of an asymptotic end.
    #[arg(long)]
    rho: Option<f64>,
}

fn load(common: &Common) -> Result<RunConfig, QeError> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| QeError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if common.json {
        cfg.format = Format::Json;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn configure(cmd: Command, e: &Entry) -> Result<RunConfig, QeError> {
    let mut cfg = load(&e.common)?;
    cfg.command = Some(cmd);
    if e.example.is_some() {
        cfg.example = e.example.clone();
    }
    let p = &mut cfg.params;
    if let Some(m) = e.m {
        p.m = m;
    }
    p.a = e.a.or(p.a);
    p.c = e.c.or(p.c);
    p.p = e.p.or(p.p);
    if let Some(f) = &e.fiber {
        p.fiber = Some(FiberKind::parse(f)?);
    }
    if let Some(s) = &e.mu {
        p.mu = Some(match s.as_str() {
            "neg" => MuSign::Neg,
            "zero" => MuSign::Zero,
            "pos" => MuSign::Pos,
            other => return Err(QeError::Config(format!("mu sign must be neg, zero or pos, not '{other}'"))),
        });
    }
    cfg.lambda = e.lambda.or(cfg.lambda);
    cfg.tau = e.tau.or(cfg.tau);
    cfg.tol = e.tol.or(cfg.tol);
    if let Some(s) = e.seed {
        cfg.seed = s;
    }
    if let Some(g) = &e.grid {
        cfg.grid = g.clone();
    }
    cfg.rho = e.rho.or(cfg.rho);
    if let Some(l) = e.loops {
        cfg.loop_budget = l;
    }
    Ok(cfg)
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), QeError> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| QeError::Config(format!("{p}: {e}"))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, QeError> {
    let (cmd, entry) = match cli.cmd {
        Cmd::Zoo { dim, common } => {
            let cfg = load(&common)?;
            emit(&cfg, &report::cmd_zoo_list(dim.or(cfg.dim_filter), cfg.format))?;
            return Ok(0);
        }
        Cmd::Verify(e) => (Command::Verify, e),
        Cmd::Dim(e) => (Command::Dim, e),
        Cmd::Profile(e) => (Command::Profile, e),
        Cmd::Asympt(e) => (Command::Asympt, e),
    };
    let cfg = configure(cmd, &entry)?;
    let (rep, csv) = match cmd {
        Command::Profile => {
            let (r, csv) = report::cmd_profile(&cfg)?;
            (r, Some(csv))
        }
        _ => (report::run(&cfg)?, None),
    };
    let body = match (cfg.format, csv) {
        (Format::Json, _) => rep.to_json(),
        (Format::Text, Some(csv)) => {
            eprint!("{}", rep.to_text());
            csv
        }
        (Format::Text, None) => rep.to_text(),
    };
    emit(&cfg, &body)?;
    Ok(rep.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(report::exit_code_for(&e) as u8)
        }
    }
}
