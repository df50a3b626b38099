//! Versioned JSON experiment configs.

use std::path::{Path, PathBuf};

use adageo::optimizers::AlgorithmConfig;
use adageo::problems::{Problem, ProblemSpec};
use adageo::PreconditionerSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(BenchError::Config(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for traces and the summary; `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: ProblemSpec,
    pub set: PreconditionerSet,
    pub algorithm: AlgorithmConfig,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Inclusive step window for slope fits; defaults to [max(1, T/32), T].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[u64; 2]>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// The identity-bearing part of a config: everything except where output goes.
#[derive(Serialize)]
struct HashView<'a> {
    schema_version: u32,
    problem: &'a ProblemSpec,
    set: &'a PreconditionerSet,
    algorithm: &'a AlgorithmConfig,
    horizon: u64,
    seeds: &'a [u64],
    fit_window: Option<[u64; 2]>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not need to build the problem.
    pub fn check(&self) -> Result<(), BenchError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.horizon == 0 {
            return Err(BenchError::Config("horizon must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("need at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(BenchError::Config("seeds must be distinct".into()));
        }
        if let Some([lo, hi]) = self.fit_window {
            if lo == 0 || lo >= hi || hi > self.horizon {
                return Err(BenchError::Config("fit_window must satisfy 1 <= lo < hi <= horizon".into()));
            }
        }
        self.set.validate()?;
        if let (AlgorithmConfig::AcceleratedProjected { .. }, PreconditionerSet::KronLeft { .. }) = (&self.algorithm, &self.set) {
            return Err(BenchError::Unsupported("ball projection on the kron_left set".into()));
        }
        Ok(())
    }

    /// Builds the problem and checks it against the set.
    pub fn build_problem(&self) -> Result<Problem, BenchError> {
        let problem = self.problem.build()?;
        let d = problem.objective().dim();
        if d != self.set.dim() {
            return Err(BenchError::Config(format!("problem dimension {d} != set dimension {}", self.set.dim())));
        }
        Ok(problem)
    }

    pub fn fit_window(&self) -> [u64; 2] {
        self.fit_window.unwrap_or([(self.horizon / 32).max(1), self.horizon])
    }

    /// Hex SHA-256 of the canonical JSON of the identity-bearing fields.
    pub fn content_hash(&self) -> String {
        let view = HashView {
            schema_version: self.schema_version,
            problem: &self.problem,
            set: &self.set,
            algorithm: &self.algorithm,
            horizon: self.horizon,
            seeds: &self.seeds,
            fit_window: self.fit_window,
        };
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parses `N..M` (exclusive end) or `N..=M`.
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>, BenchError> {
    let bad = || BenchError::Config(format!("bad seed range {s:?}, expected N..M or N..=M"));
    let (lo, hi, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(bad());
    };
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    let hi = if inclusive { hi.checked_add(1).ok_or_else(bad)? } else { hi };
    if lo >= hi {
        return Err(bad());
    }
    Ok((lo..hi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seed_range("3..6").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seed_range("3..=6").unwrap(), vec![3, 4, 5, 6]);
        assert!(parse_seed_range("6..6").is_err());
        assert!(parse_seed_range("x..2").is_err());
        assert!(parse_seed_range("7").is_err());
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("tsv".parse::<Format>().is_err());
    }
}
