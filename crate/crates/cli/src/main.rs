use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rkcq_cli::commands;
use rkcq_cli::config::RunConfig;
use rkcq_cli::CliError;

/// Runge-Kutta convolution quadrature experiments for 2D wave scattering.
#[derive(Parser)]
#[command(name = "rkcq", version)]
struct Cli {
    /// Run configuration (`key = value` lines); defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "rkcq-out")]
    out: PathBuf,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Contour radius, overriding the configuration.
    #[arg(long, global = true)]
    radius: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a Runge-Kutta tableau and print the report.
    ValidateTableau { id: String },
    /// Write the CQ weights of s^μ.
    Weights,
    /// Run the step ladder and fit convergence rates.
    Convergence,
    /// Scan DtN and DtI operator norms over a sector of frequencies.
    BoundScan,
    /// Frequency-domain DtN check against a point source.
    Manufactured,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(r) = cli.radius {
        cfg.radius = Some(r);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::ValidateTableau { id } => {
            let report = commands::validate_tableau(id)?;
            println!("{report}");
            return Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Weights => {
            let path = commands::weights(&load(cli)?, &cli.out)?;
            println!("wrote {}", path.display());
        }
        Command::Convergence => {
            let cfg = load(cli)?;
            let s = commands::convergence(&cfg, &cli.out)?;
            println!("error floor {:.3e}", s.floor);
            for m in &s.methods {
                let rates: Vec<String> = m
                    .fit
                    .pair_rates
                    .iter()
                    .map(|r| r.map_or("-".into(), |r| format!("{r:.2}")))
                    .collect();
                let fitted = m.fitted_rate.map_or("none".into(), |r| format!("{r:.3}"));
                println!(
                    "{:<15} predicted {}  pair rates [{}]  fitted {}",
                    m.method.name(),
                    m.predicted_rate,
                    rates.join(", "),
                    fitted
                );
            }
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} and {}", s.csv.display(), s.svg.display());
        }
        Command::BoundScan => {
            let rows = commands::bound_scan(&load(cli)?, &cli.out)?;
            for r in &rows {
                println!("s = {:>24}  |DtN| = {:.4e}  |DtI| = {:.4e}", format!("{:.4}", r.s), r.norm_dtn, r.norm_dti);
            }
        }
        Command::Manufactured => {
            let rows = commands::manufactured(&load(cli)?, &cli.out)?;
            for (h, e) in &rows {
                println!("h = {h:<10} dofs = {:<6} relative error = {:.3e}", e.dofs, e.relative);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
