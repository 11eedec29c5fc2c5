//! Versioned run configuration (TOML).
//!
//! Precedence for every setting: command-line flag, then config file, then (for the seed
//! only) the `AMR_BENCH_SEED` environment variable, then the built-in default.

use crate::corpus::{Split, SubsetRules, DEFAULT_SYSTEM_PROMPT};
use crate::evaluator::{CiMode, InvalidHandling};
use crate::extraction::{Delimiters, Extractor, TemplateFamily};
use crate::smatch::{ScoreConfig, DEFAULT_MAX_VARIABLES};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONFIG_VERSION: u32 = 1;
pub const SEED_ENV: &str = "AMR_BENCH_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("unsupported config version {0} (this build reads version {CONFIG_VERSION})")]
    Version(u32),
    #[error("restarts must be at least 1")]
    Restarts,
    #[error("exact_threshold {0} exceeds the exact scorer's limit of {DEFAULT_MAX_VARIABLES}")]
    ExactThreshold(usize),
    #[error("depth range {min}..={max} is empty")]
    DepthRange { min: usize, max: usize },
    #[error("per_depth must be at least 1")]
    PerDepth,
    #[error("{SEED_ENV}={0:?} is not an unsigned integer")]
    SeedEnv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// `None` falls back to the environment, then to 0.
    pub seed: Option<u64>,
    pub restarts: usize,
    pub exact_threshold: usize,
    /// Template family of the generations; `None` means they are bare graphs.
    pub family: Option<TemplateFamily>,
    pub strip_think: bool,
    pub delimiters: BTreeMap<TemplateFamily, Delimiters>,
    pub depth_min: usize,
    pub depth_max: usize,
    pub per_depth: usize,
    pub ci_mode: CiMode,
    pub invalid: InvalidHandling,
    /// Worker threads; 0 means one per logical core.
    pub workers: usize,
    /// Restrict the corpus to one split.
    pub split: Option<Split>,
    /// Split assumed for files whose path names none.
    pub default_split: Split,
    /// Skip gold entries that fail to parse instead of aborting.
    pub relaxed: bool,
    pub system_prompt: String,
    /// Series name in reports and charts.
    pub label: String,
    pub subsets: SubsetRules,
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let score = ScoreConfig::default();
        Self {
            version: CONFIG_VERSION,
            seed: None,
            restarts: score.restarts,
            exact_threshold: score.exact_threshold,
            family: None,
            strip_think: true,
            delimiters: BTreeMap::new(),
            depth_min: 1,
            depth_max: 10,
            per_depth: 30,
            ci_mode: CiMode::default(),
            invalid: InvalidHandling::default(),
            workers: 0,
            split: None,
            default_split: Split::Test,
            relaxed: false,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            label: "run".into(),
            subsets: SubsetRules::default(),
            gold: None,
            predictions: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        let cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Syntax {
            path: path.into(),
            source: Box::new(source),
        })?;
        if cfg.version != CONFIG_VERSION {
            return Err(ConfigError::Version(cfg.version));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.restarts == 0 {
            return Err(ConfigError::Restarts);
        }
        if self.exact_threshold > DEFAULT_MAX_VARIABLES {
            return Err(ConfigError::ExactThreshold(self.exact_threshold));
        }
        if self.depth_min > self.depth_max {
            return Err(ConfigError::DepthRange { min: self.depth_min, max: self.depth_max });
        }
        if self.per_depth == 0 {
            return Err(ConfigError::PerDepth);
        }
        Ok(())
    }

    /// The configured seed, else `AMR_BENCH_SEED`, else 0.
    pub fn resolved_seed(&self) -> Result<u64, ConfigError> {
        resolve_seed(self.seed, std::env::var(SEED_ENV).ok().as_deref())
    }

    pub fn depths(&self) -> RangeInclusive<usize> {
        self.depth_min..=self.depth_max
    }

    pub fn extractor(&self) -> Extractor {
        Extractor {
            overrides: self.delimiters.clone(),
            strip_think: self.strip_think,
        }
    }

    pub fn score_config(&self) -> Result<ScoreConfig, ConfigError> {
        Ok(ScoreConfig {
            restarts: self.restarts,
            seed: self.resolved_seed()?,
            exact_threshold: self.exact_threshold,
        })
    }
}

/// Seed precedence below the command line: explicit value, then the environment text.
pub fn resolve_seed(configured: Option<u64>, env: Option<&str>) -> Result<u64, ConfigError> {
    match (configured, env) {
        (Some(s), _) => Ok(s),
        (None, Some(v)) => v.trim().parse().map_err(|_| ConfigError::SeedEnv(v.to_string())),
        (None, None) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.depths(), 1..=10);
        assert_eq!(c.system_prompt, DEFAULT_SYSTEM_PROMPT);
    }

    #[test]
    fn invariants_are_enforced() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert!(matches!(bad(|c| c.restarts = 0), ConfigError::Restarts));
        assert!(matches!(bad(|c| c.exact_threshold = 9), ConfigError::ExactThreshold(9)));
        assert!(matches!(bad(|c| c.depth_min = 11), ConfigError::DepthRange { .. }));
        assert!(matches!(bad(|c| c.per_depth = 0), ConfigError::PerDepth));
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(5), Some("9")).unwrap(), 5);
        assert_eq!(resolve_seed(None, Some(" 9 ")).unwrap(), 9);
        assert_eq!(resolve_seed(None, None).unwrap(), 0);
        assert!(resolve_seed(None, Some("x")).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
version = 1
seed = 42
restarts = 8
family = "phi35"
ci_mode = "per-sentence"
invalid = "score-as-zero"
depth_min = 2
depth_max = 12
per_depth = 500

[delimiters.phi35]
assistant_start = "<|im_start|>assistant"
turn_end = "<|im_end|>"
"#;
        let c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(c.seed, Some(42));
        assert_eq!(c.family, Some(TemplateFamily::Phi35));
        assert_eq!(c.ci_mode, CiMode::PerSentence);
        assert_eq!(c.extractor().delimiters(TemplateFamily::Phi35).turn_end, "<|im_end|>");
        let back: RunConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(toml::from_str::<RunConfig>("colour = 1").is_err());
    }

    #[test]
    fn version_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "version = 2\n").unwrap();
        assert!(matches!(RunConfig::load(&p), Err(ConfigError::Version(2))));
    }
}
