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

//! Orchestration: graph, sweeps, and output files for one configuration.
//!
//! Output files are staged under temporary names and renamed only once every
//! file has been written, so a failed run leaves no partial results behind.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::engine::{run_sweep, EngineError, SweepOutcome};
use crate::metrics::{
    csv_file_name, emit_plot_script, fingerprint, parse_csv, write_csv, MetricsError, SweepResult,
};
use crate::topology::{
    generate_with_constraints, load_edge_list, save_edge_list, Graph, TopologyError,
};

pub const PLOT_FILE: &str = "plot.py";
pub const CONFIG_DUMP_FILE: &str = "config.cfg";
pub const GRAPH_FILE: &str = "graph.edges";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output directory {}: {reason}", path.display())]
    OutputDir { path: PathBuf, reason: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("{}", path.display())]
    ResultFile {
        path: PathBuf,
        #[source]
        source: MetricsError,
    },
    #[error("{}: no result CSV files found", .0.display())]
    NoResults(PathBuf),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The overlay a sweep runs on.
#[derive(Debug)]
pub struct BuiltGraph {
    pub graph: Graph,
    pub label: String,
    /// Generation attempts rejected by connectivity or diameter checks.
    pub retries: usize,
}

/// Loads `topology.input` if set, otherwise generates under the configured
/// constraints.
pub fn build_graph(cfg: &ExperimentConfig) -> Result<BuiltGraph, ExperimentError> {
    if let Some(path) = &cfg.topology.input {
        let file = File::open(path).map_err(io_error(path))?;
        let graph = load_edge_list(BufReader::new(file))?;
        let label = format!("edgelist-n{}-m{}", graph.node_count(), graph.edge_count());
        return Ok(BuiltGraph {
            graph,
            label,
            retries: 0,
        });
    }
    let spec = cfg.topology_spec();
    let built = generate_with_constraints(&spec)?;
    Ok(BuiltGraph {
        graph: built.graph,
        label: spec.label(),
        retries: built.retries,
    })
}

/// Runs `f` on a pool bounded by the configured thread count.
pub fn with_thread_pool<T: Send>(
    cfg: &ExperimentConfig,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.count())
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Hash of every setting that can influence results.
pub fn config_fingerprint(cfg: &ExperimentConfig) -> String {
    fingerprint(&cfg.result_identity())
}

/// Builds the graph once and sweeps every configured protocol over it.
/// Nothing is written to disk.
pub fn run_sweeps(
    cfg: &ExperimentConfig,
) -> Result<(BuiltGraph, Vec<SweepOutcome<f64>>), ExperimentError> {
    with_thread_pool(cfg, || {
        let built = build_graph(cfg)?;
        let template = cfg.simulation_template();
        let fractions = cfg.fraction_values();
        let fp = config_fingerprint(cfg);
        let mut sweeps = Vec::new();
        for protocol in cfg.protocol_configs() {
            let mut outcome =
                run_sweep::<f64>(&built.graph, &built.label, &protocol, &template, &fractions)?;
            outcome.result.fingerprint = Some(fp.clone());
            sweeps.push(outcome);
        }
        Ok((built, sweeps))
    })?
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub graph_label: String,
    pub graph_retries: usize,
    pub sweeps: Vec<SweepOutcome<f64>>,
    pub files: Vec<PathBuf>,
    pub fingerprint: String,
}

/// Full run: sweeps, then CSV per protocol, plot script and config dump in
/// the output directory. `defaults` lists the keys that fell back to their
/// defaults so the dump can flag them.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    defaults: &[&str],
) -> Result<ExperimentReport, ExperimentError> {
    prepare_output_dir(&cfg.output)?;
    let (built, sweeps) = run_sweeps(cfg)?;
    let fp = config_fingerprint(cfg);

    let mut staged = Staging::new(&cfg.output);
    let results: Vec<&SweepResult<f64>> = sweeps.iter().map(|s| &s.result).collect();
    for sweep in &results {
        staged.write(&csv_file_name(sweep), |w| Ok(write_csv(sweep, w)?))?;
    }
    let owned: Vec<SweepResult<f64>> = results.iter().map(|s| (*s).clone()).collect();
    staged.write(PLOT_FILE, |w| Ok(emit_plot_script(&owned, w)?))?;
    let dump = cfg.normalized_dump(defaults);
    staged.write(CONFIG_DUMP_FILE, |w| {
        writeln!(w, "# fingerprint: {fp}")?;
        writeln!(
            w,
            "# graph: {} ({} rejected attempts)",
            built.label, built.retries
        )?;
        w.write_all(dump.as_bytes())?;
        Ok(())
    })?;
    let files = staged.commit()?;

    Ok(ExperimentReport {
        graph_label: built.label,
        graph_retries: built.retries,
        sweeps,
        files,
        fingerprint: fp,
    })
}

/// Generates the configured topology and writes it as `graph.edges` in the
/// output directory.
pub fn generate_graph_file(
    cfg: &ExperimentConfig,
) -> Result<(BuiltGraph, PathBuf), ExperimentError> {
    prepare_output_dir(&cfg.output)?;
    let built = with_thread_pool(cfg, || build_graph(cfg))??;
    let mut staged = Staging::new(&cfg.output);
    staged.write(GRAPH_FILE, |w| Ok(save_edge_list(&built.graph, w)?))?;
    let mut files = staged.commit()?;
    Ok((built, files.remove(0)))
}

/// Rewrites `plot.py` from the result CSVs already in `dir`.
pub fn regenerate_plot(dir: &Path) -> Result<PathBuf, ExperimentError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ExperimentError::NoResults(dir.to_path_buf()));
    }
    let mut sweeps = Vec::with_capacity(paths.len());
    for path in &paths {
        let file = File::open(path).map_err(io_error(path))?;
        let sweep: SweepResult<f64> = parse_csv(BufReader::new(file)).map_err(|e| match e {
            MetricsError::Io(source) => ExperimentError::Io {
                path: path.clone(),
                source,
            },
            source => ExperimentError::ResultFile {
                path: path.clone(),
                source,
            },
        })?;
        sweeps.push(sweep);
    }
    let mut staged = Staging::new(dir);
    staged.write(PLOT_FILE, |w| Ok(emit_plot_script(&sweeps, w)?))?;
    let mut files = staged.commit()?;
    Ok(files.remove(0))
}

fn prepare_output_dir(dir: &Path) -> Result<(), ExperimentError> {
    if dir.exists() && !dir.is_dir() {
        return Err(ExperimentError::OutputDir {
            path: dir.to_path_buf(),
            reason: "exists and is not a directory".into(),
        });
    }
    fs::create_dir_all(dir).map_err(|e| ExperimentError::OutputDir {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Files written under temporary names and renamed together on commit.
/// Dropping an uncommitted staging area deletes its temporary files.
struct Staging {
    dir: PathBuf,
    files: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl Staging {
    fn new(dir: &Path) -> Self {
        Staging {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            committed: false,
        }
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), ExperimentError>,
    ) -> Result<(), ExperimentError> {
        let tmp = self.dir.join(format!(".{name}.partial"));
        let target = self.dir.join(name);
        let file = File::create(&tmp).map_err(io_error(&tmp))?;
        self.files.push((tmp.clone(), target));
        let mut w = BufWriter::new(file);
        body(&mut w).map_err(|e| match e {
            ExperimentError::Io { path, source } if path.as_os_str().is_empty() => {
                ExperimentError::Io {
                    path: tmp.clone(),
                    source,
                }
            }
            e => e,
        })?;
        w.flush().map_err(io_error(&tmp))?;
        Ok(())
    }

    fn commit(mut self) -> Result<Vec<PathBuf>, ExperimentError> {
        let mut done = Vec::with_capacity(self.files.len());
        for (tmp, target) in &self.files {
            fs::rename(tmp, target).map_err(io_error(target))?;
            done.push(target.clone());
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.files {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}

// Path-less; `Staging::write` fills in the file being written.
impl From<std::io::Error> for ExperimentError {
    fn from(source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: PathBuf::new(),
            source,
        }
    }
}
