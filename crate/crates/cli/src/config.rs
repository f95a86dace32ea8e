//! Experiment configuration: a TOML document with `[model]`, `[run]` and
//! `[task]` tables.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use fracperc::RetentionSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub task: TaskConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// All cells kept with probability `p`.
    Homogeneous,
    /// Base 3 in the plane: centre cell `q`, the other eight `p`.
    Carpet,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Full retention vector, first axis fastest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<RetentionSpec> {
        let spec = match self.preset {
            Some(Preset::Homogeneous) => {
                ensure!(self.probs.is_none() && self.q.is_none(), "homogeneous preset takes only p");
                let p = self.p.context("homogeneous preset needs p")?;
                RetentionSpec::homogeneous(self.dim.unwrap_or(2), self.base.unwrap_or(3), p)?
            }
            Some(Preset::Carpet) => {
                ensure!(self.probs.is_none(), "carpet preset takes p and q, not probs");
                ensure!(self.dim.unwrap_or(2) == 2 && self.base.unwrap_or(3) == 3, "carpet is planar with base 3");
                RetentionSpec::carpet(self.p.context("carpet needs p")?, self.q.context("carpet needs q")?)?
            }
            None => {
                ensure!(self.p.is_none() && self.q.is_none(), "p and q need a preset");
                let probs = self.probs.clone().context("model needs a preset or probs")?;
                let base = self.base.context("model with probs needs base")?;
                let dim = match self.dim {
                    Some(d) => d,
                    None if probs.len() == base as usize => 1,
                    None if probs.len() == (base * base) as usize => 2,
                    None => bail!("cannot infer dim from {} probabilities with base {base}", probs.len()),
                };
                RetentionSpec::new(dim, base, probs)?
            }
        };
        ensure!(spec.alphabet() <= 4096, "M^d = {} is too large", spec.alphabet());
        Ok(spec)
    }
}

fn default_depth() -> u32 {
    6
}

fn default_trials() -> usize {
    100
}

fn default_threads() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// Depths for per-depth tables; defaults to `1..=depth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<u32>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads, 0 for all cores. Results do not depend on it, so it
    /// is left out of the echoed configuration.
    #[serde(default = "default_threads", skip_serializing)]
    pub threads: usize,
    #[serde(default = "default_out", skip_serializing)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            depth: default_depth(),
            depths: None,
            trials: default_trials(),
            seed: 0,
            threads: default_threads(),
            out_dir: default_out(),
        }
    }
}

impl RunConfig {
    pub fn depths(&self) -> Vec<u32> {
        self.depths.clone().unwrap_or_else(|| (1..=self.depth).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    #[default]
    Analyze,
    Simulate,
    Project,
    Check,
    Slice,
    Sumset,
    Render,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionChoice {
    #[default]
    Orthogonal,
    Diagonal,
    Radial,
    Coradial,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    #[serde(default)]
    pub kind: TaskKind,
    /// Projection direction in degrees, strictly between 0 and 90.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_deg: Option<f64>,
    /// Directions for the slice task's dimension table, in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas_deg: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionChoice>,
    /// Centre for radial and co-radial projections, outside the unit square;
    /// defaults to `(-0.5, -0.5)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    /// Candidate interval `[lo, hi]` for persistence tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    /// Minimum angle in degrees between slice lines and both axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    /// Direction range in degrees to certify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_deg: Option<[f64; 2]>,
    /// Retention vector of the second set in a difference `E2 - E1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<Vec<f64>>,
    /// Homogeneous one-dimensional factor levels for sums.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Level to project or render; defaults to the run depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// Encoded tree to render instead of sampling one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<PathBuf>,
    /// Depth for crossing estimates in `analyze`; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_depth: Option<u32>,
}

pub const MAX_DEPTH: u32 = 16;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Range checks that do not depend on the task running.
    pub fn validate(&self) -> Result<RetentionSpec> {
        let spec = match &self.task.tree {
            // a saved tree carries its own model
            Some(path) if self.model == ModelConfig::default() => crate::tasks::sidecar(path)?.spec()?,
            _ => self.model.resolve()?,
        };
        let run = &self.run;
        ensure!(run.depth <= MAX_DEPTH, "depth {} exceeds {MAX_DEPTH}", run.depth);
        ensure!(run.trials >= 1, "trials must be positive");
        if let Some(d) = &run.depths {
            ensure!(!d.is_empty(), "depths must not be empty");
            ensure!(d.iter().all(|&n| n <= MAX_DEPTH), "depths exceed {MAX_DEPTH}");
        }
        let t = &self.task;
        for a in t.alpha_deg.iter().chain(t.alphas_deg.iter().flatten()) {
            ensure!(*a > 0.0 && *a < 90.0, "direction {a} deg outside (0, 90)");
        }
        if let Some([lo, hi]) = t.sweep_deg {
            ensure!(0.0 < lo && lo < hi && hi < 90.0, "sweep [{lo}, {hi}] deg must satisfy 0 < lo < hi < 90");
        }
        if let Some(e) = t.epsilon_deg {
            ensure!(e > 0.0 && e < 45.0, "epsilon {e} deg outside (0, 45)");
        }
        if let Some([lo, hi]) = t.interval {
            ensure!(lo < hi, "interval [{lo}, {hi}] is empty");
        }
        for p in t.other.iter().chain(t.factors.iter()).flatten() {
            ensure!((0.0..=1.0).contains(p), "probability {p} outside [0, 1]");
        }
        if let Some(w) = &t.weights {
            ensure!(w.iter().all(|b| *b != 0.0 && b.is_finite()), "weights must be finite and nonzero");
        }
        ensure!(t.level.map_or(true, |l| l <= MAX_DEPTH), "level exceeds {MAX_DEPTH}");
        Ok(spec)
    }

    /// The configuration as `# `-prefixed lines, for artifact headers.
    pub fn echo(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        text.lines().map(|l| format!("# {l}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        let c = ExperimentConfig::from_toml("[model]\npreset = \"carpet\"\np = 0.8\nq = 0.5\n").unwrap();
        let s = c.validate().unwrap();
        assert_eq!(s.prob(4), 0.5);
        let c = ExperimentConfig::from_toml("[model]\npreset = \"homogeneous\"\np = 0.4\nbase = 2\n").unwrap();
        assert_eq!(c.validate().unwrap().alphabet(), 4);
        let c = ExperimentConfig::from_toml("[model]\nprobs = [0.52, 0.5, 0.72]\nbase = 3\n").unwrap();
        assert_eq!(c.validate().unwrap().dim(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("[model]\npreset = \"sponge\"\n").is_err());
        assert!(ExperimentConfig::from_toml("[model]\nprob = 0.3\n").is_err());
        let bad = [
            "[model]\npreset = \"homogeneous\"\n",
            "[model]\npreset = \"homogeneous\"\np = 1.5\n",
            "[model]\nprobs = [0.5, 0.5, 0.5]\nbase = 2\n",
            "[model]\npreset = \"carpet\"\np = 0.5\nq = 0.5\nbase = 4\n",
            "[model]\npreset = \"homogeneous\"\np = 0.5\n[run]\ndepth = 40\n",
            "[model]\npreset = \"homogeneous\"\np = 0.5\n[task]\nalpha_deg = 90.0\n",
        ];
        for text in bad {
            let c = ExperimentConfig::from_toml(text);
            assert!(c.is_err() || c.unwrap().validate().is_err(), "{text}");
        }
    }

    #[test]
    fn echo_leaves_out_threads_and_paths() {
        let mut c = ExperimentConfig::from_toml("[model]\npreset = \"homogeneous\"\np = 0.5\n").unwrap();
        let a = c.echo();
        c.run.threads = 8;
        c.run.out_dir = PathBuf::from("/elsewhere");
        assert_eq!(a, c.echo());
        assert!(a.lines().all(|l| l.starts_with("# ")));
        assert!(a.contains("p = 0.5"));
    }
}
