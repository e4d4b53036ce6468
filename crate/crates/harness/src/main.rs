use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use projdiff_harness::config::{load_config, RawConfig};
use projdiff_harness::presets::Preset;
use projdiff_harness::report::{ensure_dir, write_report, write_series, write_text};
use projdiff_harness::study::{convergence_study, Axis};
use projdiff_harness::verify::{verify_all, VerifyOptions};
use projdiff_harness::{ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "projdiff", version, about = "Projection differences and scattering phases of operator pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for random presets (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every module at the configured sizes and probes.
    Run { config: PathBuf },
    /// Convergence table along one axis.
    Study {
        config: PathBuf,
        #[arg(long, value_parser = parse_axis)]
        axis: Axis,
    },
    /// Run the acceptance suite; exit status 1 if any criterion fails.
    VerifyAll {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List model presets and their parameters.
    Presets,
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn configure(cli: &Cli, path: Option<&PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match path {
        Some(p) => load_config(p)?,
        None => RawConfig::default().resolve()?,
    };
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn dispatch(cli: &Cli) -> Result<ExitCode, HarnessError> {
    match &cli.command {
        Command::Presets => {
            for p in Preset::ALL {
                let params: Vec<String> = p.defaults().iter().map(|(k, v)| format!("{k}={v}")).collect();
                let name = if let Preset::Random(_) = p { "finite:random(<seed>)".to_string() } else { p.to_string() };
                println!("{name:<28} {}", p.describe());
                println!("{:<28} size {} ; {}", "", p.default_size(), params.join(" "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config } => {
            let config = configure(cli, Some(config))?;
            let report = projdiff_harness::experiment::run_experiment(&config, cli.jobs)?;
            let written = write_report(&report, &config.output)?;
            let failed = report
                .probes
                .iter()
                .filter(|p| p.difference.ok().is_none() || p.scattering.ok().is_none())
                .count();
            println!("{} probes, {failed} with errors; wrote {} files to {}", report.probes.len(), written.len(), config.output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Study { config, axis } => {
            let config = configure(cli, Some(config))?;
            let table = convergence_study(&config, *axis, cli.jobs)?;
            ensure_dir(&config.output)?;
            write_text(&config.output.join(format!("study_{axis}.json")), &serde_json::to_string_pretty(&table)?)?;
            for s in &table.metrics {
                write_series(&config.output.join(format!("study_{axis}_{}.csv", s.name)), &s.values)?;
            }
            let widths: Vec<usize> = table.metrics.iter().map(|s| s.name.len().max(13) + 2).collect();
            let header: String = table.metrics.iter().zip(&widths).map(|(s, w)| format!("{:>w$}", s.name)).collect();
            println!("{axis:>8}{header}");
            for (i, x) in table.points.iter().enumerate() {
                let row: String =
                    table.metrics.iter().zip(&widths).map(|(s, w)| format!("{:>w$.6e}", s.values[i])).collect();
                println!("{x:>8} {row}");
            }
            for s in &table.metrics {
                let trend = match (s.strictly_decreasing, s.strictly_increasing) {
                    (true, _) => "strictly decreasing",
                    (_, true) => "strictly increasing",
                    _ => "not monotone",
                };
                println!("{}: {trend}", s.name);
            }
            for (x, e) in table.points.iter().zip(&table.errors) {
                if let Some(e) = e {
                    println!("{x}: {e}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyAll { config } => {
            let config = configure(cli, config.as_ref())?;
            let (report, timings) = verify_all(&VerifyOptions::from_config(&config, cli.jobs))?;
            for line in report.lines() {
                println!("{line}");
            }
            println!("elapsed {:.1} s", timings.total);
            ensure_dir(&config.output)?;
            write_text(&config.output.join("verify.json"), &serde_json::to_string_pretty(&report)?)?;
            write_text(&config.output.join("timings.json"), &serde_json::to_string_pretty(&timings)?)?;
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
