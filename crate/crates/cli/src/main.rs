use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heatflow_cli::commands::{cmd_check, cmd_evolve, cmd_limit, cmd_track, CommandOutput};
use heatflow_cli::config::{parse_complex, parse_t_grid, Format, RunConfig};
use heatflow_cli::{CliError, EXIT_CHECKS_FAILED};

#[derive(Parser)]
#[command(name = "heatflow", version, about = "Roots of random polynomials under the heat flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roots of the heat-evolved polynomial
    Evolve(Opts),
    /// Limit log potential, Stieltjes transform and density on a grid
    Limit(Opts),
    /// Root trajectories along a time grid
    Track(Opts),
    /// Run acceptance checks
    Check(Opts),
}

#[derive(Args)]
struct Opts {
    /// weyl, kac, lo:beta=<b>, annulus, custom:<csv>, evenly:r=<r>, iid:<profile>
    #[arg(long, default_value = "weyl")]
    profile: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// time as re[+imi]
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    t: String,
    /// start:end:step
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// csv, json or svg
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "all")]
    suite: String,
    /// grid points per side for `limit`
    #[arg(long, default_value_t = 41)]
    grid: usize,
    /// half-width of the `limit` grid
    #[arg(long, default_value_t = 3.0)]
    extent: f64,
}

impl Opts {
    fn config(self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            profile: self.profile,
            n: self.n,
            t: parse_complex(&self.t)?,
            t_grid: self.t_grid.as_deref().map(parse_t_grid).transpose()?,
            seed: self.seed,
            beta: self.beta,
            r: self.r,
            format: self.format.parse::<Format>()?,
            out: self.out,
            threads: self.threads,
            suite: self.suite,
            grid: self.grid,
            extent: self.extent,
        })
    }
}

fn write_outputs(out: &CommandOutput, path: Option<&Path>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    let mut stdout = std::io::stdout().lock();
    match path {
        Some(p) => {
            for (i, f) in out.files.iter().enumerate() {
                let target = if i == 0 { p.to_path_buf() } else { p.with_extension(f.ext) };
                std::fs::write(&target, &f.content).map_err(io)?;
            }
            stdout.write_all(out.stdout.as_bytes()).map_err(io)?;
        }
        None => {
            // the primary file goes to stdout, the summary to stderr
            if let Some(f) = out.files.first() {
                stdout.write_all(f.content.as_bytes()).map_err(io)?;
            }
            eprint!("{}", out.stdout);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (cmd, opts): (fn(&RunConfig) -> Result<CommandOutput, CliError>, Opts) = match cli.command {
        Command::Evolve(o) => (cmd_evolve, o),
        Command::Limit(o) => (cmd_limit, o),
        Command::Track(o) => (cmd_track, o),
        Command::Check(o) => (cmd_check, o),
    };
    let cfg = opts.config()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.threads {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::BadConfig(e.to_string()))?;
    let out = pool.install(|| cmd(&cfg))?;
    write_outputs(&out, cfg.out.as_deref())?;
    if out.failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("failed checks: {}", out.failed.join("; "));
        Ok(EXIT_CHECKS_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
