// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! `gossipsim`: generate overlays, run Sybil-attack sweeps, and emit plots.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gossipsim_core::config::{self, parse_config_with_overrides, ExperimentConfig, PRESETS};
use gossipsim_core::experiment::{generate_graph_file, regenerate_plot, run_experiment};

#[derive(Parser)]
#[command(
    name = "gossipsim",
    version,
    about = "Transaction dissemination under Sybil attack"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured topology and write it as an edge list.
    Gen(RunArgs),
    /// Run the full sweep and write CSVs, a plot script and the config dump.
    Run(RunArgs),
    /// Rewrite the plot script from the CSVs in an output directory.
    Plot(PlotArgs),
    /// List the bundled figure presets, or write them to a directory.
    Presets {
        /// Directory to write the preset files into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or the name of a bundled preset.
    #[arg(long)]
    config: String,
    /// Master seed; overrides the config.
    #[arg(long, env = "GOSSIPSIM_SEED")]
    seed: Option<u64>,
    /// Worker threads: a positive number or `auto`.
    #[arg(long)]
    threads: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--set topology.nodes=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
}

#[derive(Args)]
struct PlotArgs {
    /// Config whose output directory holds the CSVs.
    #[arg(long, required_unless_present = "out")]
    config: Option<String>,
    /// Directory holding the CSVs; takes precedence over the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

/// Reads a config file, falling back to a bundled preset of that name.
fn config_text(source: &str) -> Result<String> {
    let path = Path::new(source);
    if path.exists() {
        return fs::read_to_string(path).with_context(|| format!("reading {}", path.display()));
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or(source);
    match config::preset(name) {
        Some(p) => Ok(p.text.to_string()),
        None => bail!("{source}: no such config file or bundled preset (see `gossipsim presets`)"),
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, Vec<&'static str>)> {
    let text = config_text(&args.config)?;
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(threads) = &args.threads {
        overrides.push(("threads".into(), threads.clone()));
    }
    if let Some(out) = &args.out {
        overrides.push(("output".into(), out.display().to_string()));
    }
    parse_config_with_overrides(&text, &overrides)
        .with_context(|| format!("config {}", args.config))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let (cfg, _) = load(&args)?;
            let (built, path) = generate_graph_file(&cfg)?;
            println!(
                "{}: {} nodes, {} edges, {} rejected attempts -> {}",
                built.label,
                built.graph.node_count(),
                built.graph.edge_count(),
                built.retries,
                path.display()
            );
        }
        Command::Run(args) => {
            let (cfg, defaults) = load(&args)?;
            let report = run_experiment(&cfg, &defaults)?;
            println!(
                "graph {} ({} rejected attempts)",
                report.graph_label, report.graph_retries
            );
            for sweep in &report.sweeps {
                let points = &sweep.result.points;
                let mean =
                    points.iter().map(|p| p.mean_coverage).sum::<f64>() / points.len() as f64;
                println!(
                    "{}: {} fractions, mean coverage {:.4}",
                    sweep.result.protocol,
                    points.len(),
                    mean
                );
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
        }
        Command::Plot(args) => {
            let dir = match (args.out, args.config) {
                (Some(out), _) => out,
                (None, Some(source)) => {
                    let text = config_text(&source)?;
                    config::parse_config(&text)
                        .with_context(|| format!("config {source}"))?
                        .output
                }
                (None, None) => bail!("plot needs --out or --config"),
            };
            let path = regenerate_plot(&dir)?;
            println!("wrote {}", path.display());
        }
        Command::Presets { out } => match out {
            None => {
                for p in PRESETS {
                    println!("{:<8} {}", p.name, p.description);
                }
            }
            Some(dir) => {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for p in PRESETS {
                    let path = dir.join(format!("{}.cfg", p.name));
                    fs::write(&path, p.text)
                        .with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
