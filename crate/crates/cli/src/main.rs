use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use vtrlab::graph::{graph_stats, PhysicalTopology};
use vtrlab::harness::{self, ExperimentConfig, RunSummary, SweepParam};

/// Relative output directories are resolved against this directory.
const OUTPUT_ROOT_VAR: &str = "VTRLAB_OUTPUT_ROOT";

#[derive(Parser)]
#[command(
    name = "vtrlab",
    version,
    about = "Virtual topology reconfiguration experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured experiment.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set asb.mu=0.4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the experiment once per value of one parameter.
    Sweep {
        config: PathBuf,
        /// One of mu, load, max_lightpaths.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print graph statistics of an edge-list file.
    Stats { edge_list: PathBuf },
}

fn load_config(path: &PathBuf, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = ExperimentConfig::parse_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?
        .with_overrides(overrides.iter().map(String::as_str))?;
    if let Some(root) = std::env::var_os(OUTPUT_ROOT_VAR) {
        if config.output.is_relative() {
            config.output = PathBuf::from(root).join(&config.output);
        }
    }
    Ok(config)
}

fn print_summary(out: &mut impl Write, label: &str, s: &RunSummary) -> io::Result<()> {
    write!(
        out,
        "{label}mean_u_max={:.6} max_u_max={:.6} mean_v_g={:.6} mean_changes={:.6} mean_lightpaths={:.6} efficiency={:.6}",
        s.mean_u_max, s.max_u_max, s.mean_v_g, s.mean_changes, s.mean_lightpaths, s.efficiency
    )?;
    if let Some(mu) = &s.mu {
        write!(out, " mu_mean={:.6} mu_std={:.6}", mu.mean, mu.std)?;
    }
    writeln!(out)
}

fn execute(cli: Cli) -> Result<()> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Run { config, overrides } => {
            let config = load_config(&config, &overrides)?;
            let outcome = harness::run(&config)?;
            print_summary(&mut out, "", &outcome.summary)?;
            writeln!(out, "wrote {}", config.output.display())?;
        }
        Command::Sweep {
            config,
            param,
            values,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let param: SweepParam = param.parse()?;
            for row in harness::sweep(&config, param, &values)? {
                print_summary(
                    &mut out,
                    &format!("{}={} ", param.name(), row.value),
                    &row.summary,
                )?;
            }
            writeln!(out, "wrote {}", config.output.display())?;
        }
        Command::Stats { edge_list } => {
            let file = fs::File::open(&edge_list)
                .with_context(|| format!("opening {}", edge_list.display()))?;
            let topo = PhysicalTopology::read_edge_list(BufReader::new(file))
                .with_context(|| format!("reading {}", edge_list.display()))?;
            let s = graph_stats(&topo)?;
            writeln!(out, "nodes {}", topo.node_count())?;
            writeln!(out, "links {}", topo.links().len())?;
            writeln!(out, "degree {:.6}", s.degree)?;
            writeln!(out, "avg_path_length {:.6}", s.avg_path_length)?;
            writeln!(
                out,
                "clustering_coefficient {:.6}",
                s.clustering_coefficient
            )?;
            writeln!(out, "diameter {}", s.diameter)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
