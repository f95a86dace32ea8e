//! Command-line front end for the `fracperc` library: configuration,
//! task dispatch and artifact output.

pub mod config;
pub mod raster;
pub mod tasks;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

pub use config::{ExperimentConfig, TaskKind};
pub use tasks::Artifact;

/// Why a run stopped; selects the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or out-of-range configuration (status 2).
    Config(anyhow::Error),
    /// The task itself failed (status 1).
    Task(anyhow::Error),
}

impl Failure {
    pub fn status(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Task(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "configuration error: {e:#}"),
            Self::Task(e) => write!(f, "task failed: {e:#}"),
        }
    }
}

/// Runs the configured task and writes its artifacts under `run.out_dir`.
pub fn run(config: &ExperimentConfig) -> Result<Vec<PathBuf>, Failure> {
    let spec = config.validate().map_err(Failure::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.threads)
        .build()
        .map_err(|e| Failure::Task(e.into()))?;
    let artifacts = pool.install(|| tasks::run_task(config, &spec)).map_err(Failure::Task)?;
    write_artifacts(config, &artifacts).map_err(Failure::Task)
}

fn write_artifacts(config: &ExperimentConfig, artifacts: &[Artifact]) -> anyhow::Result<Vec<PathBuf>> {
    let dir = &config.run.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut paths = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Parser)]
#[command(name = "fracperc", version, about = "Fractal percolation laboratory")]
pub struct Cli {
    /// Task to run.
    #[arg(value_enum)]
    pub task: TaskKind,
    /// TOML configuration; flags below override its fields.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<config::Preset>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub dim: Option<u32>,
    #[arg(long)]
    pub base: Option<u32>,
    /// Comma-separated retention vector.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<u32>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub alpha_deg: Option<f64>,
    #[arg(long, value_enum)]
    pub projection: Option<config::ProjectionChoice>,
    #[arg(long)]
    pub epsilon_deg: Option<f64>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Encoded tree to render.
    #[arg(long)]
    pub tree: Option<PathBuf>,
}

impl Cli {
    /// The configuration file (or defaults) with flag overrides applied.
    pub fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        c.task.kind = self.task;
        let m = &mut c.model;
        set(&mut m.preset, self.preset);
        set(&mut m.p, self.p);
        set(&mut m.q, self.q);
        set(&mut m.dim, self.dim);
        set(&mut m.base, self.base);
        set(&mut m.probs, self.probs.clone());
        let r = &mut c.run;
        r.depth = self.depth.unwrap_or(r.depth);
        set(&mut r.depths, self.depths.clone());
        r.trials = self.trials.unwrap_or(r.trials);
        r.seed = self.seed.unwrap_or(r.seed);
        r.threads = self.threads.unwrap_or(r.threads);
        r.out_dir = self.out.clone().unwrap_or_else(|| r.out_dir.clone());
        let t = &mut c.task;
        set(&mut t.alpha_deg, self.alpha_deg);
        set(&mut t.projection, self.projection);
        set(&mut t.epsilon_deg, self.epsilon_deg);
        set(&mut t.level, self.level);
        set(&mut t.tree, self.tree.clone());
        Ok(c)
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

/// Parses arguments, runs, reports, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = cli.resolve().map_err(Failure::Config).and_then(|c| run(&c));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(f) => {
            eprintln!("fracperc: {f}");
            f.status()
        }
    }
}

#[cfg(test)]
mod tests;
