// NaN must fail range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vekua_core::Error;

use commands::{Context, Direction};
use config::{ProblemSpec, RunConfig, Target, OUT_ENV};

#[derive(Parser)]
#[command(name = "vekua", version, about = "Formal powers and Taylor bases for 2D stationary Schrodinger equations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Registry problem: example1, example2, harmonic.
    #[arg(long, global = true)]
    problem: Option<String>,
    /// Custom potential nu(x, y); requires --f0 and --rho.
    #[arg(long, global = true, requires_all = ["f0", "rho"])]
    nu: Option<String>,
    #[arg(long, global = true)]
    f0: Option<String>,
    #[arg(long, global = true)]
    rho: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Extra expression parameter, `name=value` (repeatable).
    #[arg(long = "param", global = true, value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Expansion point as `x,y`.
    #[arg(long, global = true, value_parser = parse_point, allow_hyphen_values = true)]
    z0: Option<[f64; 2]>,
    /// Highest exponent N.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the VEKUA_OUT environment variable and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Test Condition S for rho and report s(rho), S(rho).
    CheckS,
    /// Write the real formal-power basis on a grid and a residual manifest.
    Basis,
    /// Taylor-expand a solution and measure remainder slopes.
    Expand {
        /// Solution u of the Schrodinger equation (or W with --complex).
        #[arg(long)]
        target: Option<String>,
        /// Treat the target as a solution W of the main Vekua equation.
        #[arg(long)]
        complex: bool,
    },
    /// Apply the Darboux-type transform to a field.
    Darboux {
        #[arg(long)]
        field: String,
        #[arg(long, value_enum, default_value = "u-to-v")]
        direction: DirectionArg,
    },
    /// Run the identity and property checks with a pass/fail table.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    UToV,
    VToU,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value for {k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate '{t}': {e}"));
    Ok([parse(x)?, parse(y)?])
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    let c = &cli.common;
    let mut config = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &c.problem {
        config.problem = ProblemSpec::Registry(name.clone());
    }
    if let (Some(nu), Some(f0), Some(rho)) = (&c.nu, &c.f0, &c.rho) {
        let name = c.problem.clone().unwrap_or_else(|| "custom".into());
        config.problem = ProblemSpec::Custom { name, nu: nu.clone(), f0: f0.clone(), rho: rho.clone() };
    }
    if let Some(a) = c.alpha {
        config.params.insert("alpha".into(), a);
    }
    if let Some(b) = c.beta {
        config.params.insert("beta".into(), b);
    }
    for (k, v) in &c.params {
        config.params.insert(k.clone(), *v);
    }
    config.z0 = c.z0.or(config.z0);
    config.order = c.n.unwrap_or(config.order);
    config.radius = c.radius.unwrap_or(config.radius);
    config.grid = c.grid.unwrap_or(config.grid);
    config.tolerance = c.tolerance.unwrap_or(config.tolerance);
    config.seed = c.seed.unwrap_or(config.seed);
    if let Command::Expand { target: Some(expr), complex } = &cli.command {
        config.target = Some(Target { expr: expr.clone(), complex: *complex });
    }
    if let Some(dir) = std::env::var_os(OUT_ENV) {
        config.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &c.out {
        config.out_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.common.print_config {
        println!("{}", config.to_json());
        return ExitCode::SUCCESS;
    }
    let problem = match config.build_problem() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("configuration error: problem '{}': {e}", config.problem_name());
            return ExitCode::from(2);
        }
    };
    let out = config.out_dir.clone();
    let ctx = Context { config, problem, out };
    let (name, result) = match &cli.command {
        Command::CheckS => ("check-s", commands::check_s(&ctx)),
        Command::Basis => ("basis", commands::basis(&ctx)),
        Command::Expand { .. } => ("expand", commands::expand(&ctx)),
        Command::Darboux { field, direction } => {
            let d = match direction {
                DirectionArg::UToV => Direction::UToV,
                DirectionArg::VToU => Direction::VToU,
            };
            ("darboux", commands::darboux(&ctx, field, d))
        }
        Command::Verify => ("verify", commands::verify(&ctx)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{name}: checks failed");
            ExitCode::from(1)
        }
        Err(e @ (Error::InvalidArgument(_) | Error::Parse { .. })) => {
            eprintln!("{name}: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::from(1)
        }
    }
}
