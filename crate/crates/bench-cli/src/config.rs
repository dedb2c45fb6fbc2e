//! Flat key-value configuration files and the experiment specification
//! assembled from them plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::BenchError;

/// Ordered key-value block parsed from `key = value` (or `key value`)
/// lines; `#` starts a comment.
#[derive(Clone, Debug, Default)]
pub struct KvConfig {
    map: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = if let Some((k, v)) = line.split_once('=') {
                (k.trim(), v.trim())
            } else if let Some((k, v)) = line.split_once(char::is_whitespace) {
                (k.trim(), v.trim())
            } else {
                return Err(BenchError::Usage(format!(
                    "config line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            if key.is_empty() || value.is_empty() {
                return Err(BenchError::Usage(format!(
                    "config line {}: empty key or value",
                    lineno + 1
                )));
            }
            map.insert(key.to_string(), value.to_string());
        }
        Ok(KvConfig { map })
    }

    pub fn from_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BenchError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, BenchError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| BenchError::Usage(format!("bad value for `{key}`: {v}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, BenchError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| BenchError::Usage(format!("bad value for `{key}`: {v}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, BenchError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| BenchError::Usage(format!("bad value for `{key}`: {v}"))),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, BenchError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| BenchError::Usage(format!("bad value for `{key}`: {v}")))
                })
                .collect(),
        }
    }

    /// Rejects keys outside the allowed set; typos in experiment configs
    /// are usage errors, not silently ignored knobs.
    pub fn ensure_known_keys(&self, allowed: &[&str]) -> Result<(), BenchError> {
        for key in self.map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(BenchError::Usage(format!(
                    "unknown config key `{key}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Deterministic `k=v` rendering for CSV comment lines.
    pub fn render(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    AbcVariance,
    DpmVariance,
    TimingScale,
    DpmRun,
    AbcRun,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::AbcVariance => "abc-variance",
            Experiment::DpmVariance => "dpm-variance",
            Experiment::TimingScale => "timing-scale",
            Experiment::DpmRun => "dpm-run",
            Experiment::AbcRun => "abc-run",
        }
    }
}

/// A fully resolved experiment: CLI overrides applied on top of the config
/// file on top of per-experiment defaults.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub engines: Vec<String>,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config: KvConfig,
}

impl ExperimentSpec {
    pub fn resolve(
        experiment: Experiment,
        config: KvConfig,
        out_dir: PathBuf,
        seed: Option<u64>,
        replicates: Option<usize>,
        n_values: Option<Vec<usize>>,
        engines: Option<Vec<String>>,
    ) -> Result<Self, BenchError> {
        let default_engines: Vec<String> = match experiment {
            Experiment::AbcVariance => vec!["plain-mc".into(), "pqmc".into()],
            Experiment::DpmVariance => vec!["smc".into(), "sqmc".into()],
            Experiment::TimingScale => vec![
                "plain-mc".into(),
                "qmc-incremental".into(),
                "qmc-batch-regenerate".into(),
            ],
            Experiment::DpmRun => vec!["sqmc".into()],
            Experiment::AbcRun => vec!["pqmc".into()],
        };
        let default_n: Vec<usize> = match experiment {
            Experiment::AbcVariance | Experiment::AbcRun => vec![256],
            Experiment::DpmVariance | Experiment::DpmRun => vec![1024],
            Experiment::TimingScale => vec![256, 512, 1024, 2048, 4096, 8192],
        };
        let default_replicates = match experiment {
            Experiment::AbcVariance | Experiment::DpmVariance => 100,
            Experiment::TimingScale => 3,
            Experiment::DpmRun | Experiment::AbcRun => 1,
        };

        let engines = engines.unwrap_or(default_engines);
        for engine in &engines {
            let known: &[&str] = match experiment {
                Experiment::AbcVariance | Experiment::AbcRun => &["plain-mc", "pqmc"],
                Experiment::DpmVariance | Experiment::DpmRun => &["smc", "sqmc"],
                Experiment::TimingScale => {
                    &["plain-mc", "qmc-incremental", "qmc-batch-regenerate"]
                }
            };
            if !known.contains(&engine.as_str()) {
                return Err(BenchError::Usage(format!(
                    "unknown engine `{engine}` for {} (allowed: {})",
                    experiment.name(),
                    known.join(", ")
                )));
            }
        }
        let n_values = n_values.unwrap_or(default_n);
        if n_values.is_empty() || n_values.iter().any(|&n| n == 0) {
            return Err(BenchError::Usage("N values must be positive".to_string()));
        }
        let replicates = replicates.unwrap_or(default_replicates);
        if replicates == 0 {
            return Err(BenchError::Usage("replicates must be at least 1".to_string()));
        }

        Ok(ExperimentSpec {
            experiment,
            engines,
            n_values,
            replicates,
            seed: seed.unwrap_or(42),
            out_dir,
            config,
        })
    }

    /// One-line deterministic description for CSV comments.
    pub fn describe(&self) -> String {
        format!(
            "bench v{} experiment={} engines={} n={} replicates={} seed={} {}",
            env!("CARGO_PKG_VERSION"),
            self.experiment.name(),
            self.engines.join(","),
            self.n_values
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.replicates,
            self.seed,
            self.config.render()
        )
        .trim_end()
        .to_string()
    }
}
