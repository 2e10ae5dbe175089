use std::path::PathBuf;
use std::process::ExitCode;

use bergnorm::commands::{
    cmd_audit, cmd_bracket, cmd_constants, cmd_verify, OutputFormat, RunConfig, Suite, EXIT_HARD_FAILURE,
    EXIT_USAGE,
};
use bergnorm::operators::Operator;
use bergnorm::Error;
use clap::{Parser, Subcommand};

/// Norm estimates for the weighted harmonic Bergman projection and the
/// operators T_k on the unit ball.
///
/// Sweep flags take comma-separated lists. Flags override values read from
/// `--config`. Exit codes: 0 ok, 1 hard-check failure, 2 usage error or
/// nothing ran.
#[derive(Debug, Parser)]
#[command(name = "bergnorm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; scalars or lists for n, alpha, p, m.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Derivative orders; the smallest admissible order when omitted.
    #[arg(long, global = true, value_delimiter = ',')]
    m: Option<Vec<u32>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    radial_order: Option<usize>,
    #[arg(long, global = true)]
    sphere_order: Option<usize>,
    #[arg(long, global = true)]
    degree_cap: Option<usize>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Random witness candidates per bracket; 0 keeps only the fixed witness.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate every named constant for each sweep point.
    Constants,
    /// Run a verification suite: identities, lemma1, kernels or operators.
    Verify { suite: String },
    /// Empirical two-sided norm bracket for T or P.
    Bracket { operator: String },
    /// Displayed versus proof-assembled constants as a JSON array.
    Audit,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.n {
        c.n = v.clone();
    }
    if let Some(v) = &cli.alpha {
        c.alpha = v.clone();
    }
    if let Some(v) = &cli.p {
        c.p = v.clone();
    }
    if let Some(v) = &cli.m {
        c.m = v.clone();
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = cli.radial_order {
        c.radial_order = v;
    }
    if let Some(v) = cli.sphere_order {
        c.sphere_order = v;
    }
    if let Some(v) = cli.degree_cap {
        c.degree_cap = v;
    }
    if let Some(v) = cli.rel_tol {
        c.rel_tol = v;
    }
    if let Some(v) = cli.trials {
        c.trials = v;
    }
    if let Some(v) = &cli.format {
        c.format = v.parse::<OutputFormat>()?;
    }
    if let Some(v) = &cli.out {
        c.out = Some(v.display().to_string());
    }
    c.validate()?;
    Ok(c)
}

enum Failure {
    Usage(Error),
    Run(Error),
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let config = resolve(cli).map_err(Failure::Usage)?;
    let output = match &cli.command {
        Command::Constants => cmd_constants(&config),
        Command::Verify { suite } => cmd_verify(&config, suite.parse::<Suite>().map_err(Failure::Usage)?),
        Command::Bracket { operator } => cmd_bracket(&config, operator.parse::<Operator>().map_err(Failure::Usage)?),
        Command::Audit => cmd_audit(&config),
    }
    .map_err(Failure::Run)?;
    match &config.out {
        Some(path) => std::fs::write(path, &output.body).map_err(|e| Failure::Run(e.into()))?,
        None => print!("{}", output.body),
    }
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Usage(e)) => {
            eprintln!("bergnorm: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
        Err(Failure::Run(e)) => {
            eprintln!("bergnorm: {e}");
            ExitCode::from(EXIT_HARD_FAILURE as u8)
        }
    }
}
