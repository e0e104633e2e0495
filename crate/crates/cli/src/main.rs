use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use eirc::experiment::{
    parse_config_with, run_experiment, run_single, write_outputs, ExperimentSpec, Overrides, Scale,
};
use eirc::io::{write_neuron_table, write_reservoir};

#[derive(Parser)]
#[command(name = "eirc", version, about = "Excitatory-inhibitory reservoir experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV tables.
    Run {
        config: PathBuf,
        /// Output directory (default: `output_path` from the config, else
        /// `results/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_parser = parse_scale)]
        scale: Option<Scale>,
    },
    /// Build, balance and train the first run of a config and write it as
    /// JSON (stdout unless `--out`).
    DumpReservoir {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-neuron table to this CSV file.
        #[arg(long)]
        neurons: Option<PathBuf>,
        #[arg(long, value_parser = parse_scale)]
        scale: Option<Scale>,
    },
    /// Parse a config and print it with all defaults filled in.
    Validate {
        config: PathBuf,
        #[arg(long, value_parser = parse_scale)]
        scale: Option<Scale>,
    },
}

fn parse_scale(s: &str) -> std::result::Result<Scale, String> {
    s.parse().map_err(|e: eirc::Error| e.to_string())
}

fn load(config: &Path, overrides: &Overrides) -> Result<ExperimentSpec> {
    parse_config_with(config, overrides).with_context(|| format!("reading {}", config.display()))
}

fn run(config: &Path, overrides: Overrides) -> Result<()> {
    let spec = load(config, &overrides)?;
    let out = spec
        .output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(format!("{:?}", spec.experiment)));
    let result = run_experiment(&spec)?;
    write_outputs(&result, &out).with_context(|| format!("writing {}", out.display()))?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "cell\tmode\tbeta\ttheta\trho_t\tsigma_in\tn_ok\t{}", spec.task.metric_name())?;
    for s in &result.summary {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4} ± {:.4}",
            s.cell, s.mode, s.beta, s.theta, s.rho_t, s.sigma_in, s.n_ok, s.metric_mean, s.metric_se
        )?;
    }
    let failed = result.cells.iter().filter(|r| !r.ok()).count();
    log::info!("wrote {} ({} runs, {failed} failed)", out.display(), result.cells.len());
    Ok(())
}

fn dump(config: &Path, out: Option<&Path>, neurons: Option<&Path>, scale: Option<Scale>) -> Result<()> {
    let spec = load(config, &Overrides { scale, ..Default::default() })?;
    let Some(cell) = spec.cells().into_iter().next() else {
        bail!("config has no grid cells");
    };
    let output = run_single(&spec.run_params(&cell, 0))?;
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_reservoir(&mut w, &output.reservoir, Some(&output.readout))?;
            w.flush()?;
        }
        None => {
            let mut w = std::io::stdout().lock();
            write_reservoir(&mut w, &output.reservoir, Some(&output.readout))?;
            writeln!(w)?;
        }
    }
    if let Some(path) = neurons {
        let w = BufWriter::new(File::create(path)?);
        write_neuron_table(w, &output.reservoir, &output.diagnostics.neurons, Some(&output.readout))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, seeds, workers, scale } => {
            run(&config, Overrides { n_seeds: seeds, workers, scale, output_path: out })
        }
        Command::DumpReservoir { config, out, neurons, scale } => {
            dump(&config, out.as_deref(), neurons.as_deref(), scale)
        }
        Command::Validate { config, scale } => {
            load(&config, &Overrides { scale, ..Default::default() }).and_then(|spec| {
                println!("{}", serde_json::to_string_pretty(&spec)?);
                Ok(())
            })
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
