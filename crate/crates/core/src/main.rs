use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use garch_ssm::io::{cmd_compare, cmd_diagnose, cmd_fit, cmd_simulate, RunConfig, OUTPUT_DIR_ENV};
use garch_ssm::Result;

/// Bayesian state-space models with CCC-GARCH observation errors.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate data and latent paths from the `[truth]` section of a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `io.output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the sampler and write draws, summaries, paths and WAIC.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `io.output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads for the chains (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Rank fits of the same data by WAIC.
    Compare {
        #[arg(required = true, num_args = 2..)]
        fits: Vec<PathBuf>,
        /// Comparison CSV (default: comparison.csv in the default output directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Residual, QQ and KS diagnostics at the posterior point estimate.
    Diagnose {
        fit: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Directory for the diagnostic tables (default: the fit directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(config: &Path, output: Option<PathBuf>) -> Result<RunConfig> {
    let mut c = RunConfig::from_file(config)?;
    if output.is_some() {
        c.output_dir = output;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, output } => {
            let out = cmd_simulate(&load(&config, output)?)?;
            println!("wrote {}", out.data.display());
            println!("wrote {}", out.states.display());
            println!("wrote {}", out.sigma.display());
        }
        Command::Fit {
            config,
            output,
            threads,
        } => {
            let outcome = cmd_fit(&load(&config, output)?, threads)?;
            println!(
                "{} draws from {} chains written to {}",
                outcome.manifest.n_draws,
                outcome.manifest.n_chains,
                outcome.dir.display()
            );
            println!(
                "WAIC {:.4} (lppd {:.4}, p_waic {:.4})",
                outcome.waic.waic, outcome.waic.lppd, outcome.waic.p_waic
            );
            if outcome.waic.negative_penalty() {
                eprintln!("warning: negative p_waic; the posterior sample may be too small");
            }
            if !outcome.manifest.complete {
                for f in &outcome.manifest.failures {
                    eprintln!("error: {f}");
                }
                eprintln!("outputs are partial (manifest.json: complete = false)");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Compare { fits, output } => {
            let output = output.unwrap_or_else(|| {
                std::env::var_os(OUTPUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_default()
                    .join("comparison.csv")
            });
            let cmp = cmd_compare(&fits, Some(&output))?;
            print!("{}", cmp.text);
            println!("wrote {}", output.display());
        }
        Command::Diagnose { fit, data, output } => {
            let report = cmd_diagnose(&fit, &data, output.as_deref())?;
            for (i, (ks, raw)) in report.ks.iter().zip(&report.ks_raw).enumerate() {
                println!(
                    "series {}: KS {:.4} (p = {:.4}); unadjusted KS {:.4} (p = {:.4})",
                    i + 1,
                    ks.statistic,
                    ks.p_value,
                    raw.statistic,
                    raw.p_value
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
