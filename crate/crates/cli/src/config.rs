//! Optional TOML configuration. Every key may be omitted; command-line flags
//! win over the file. Relative paths are resolved against the file's
//! directory.
//!
//! ```toml
//! data = "deals.csv"
//! n = 70
//! seed = 42
//! folds = 3
//! test_fraction = 0.2
//! bind = "127.0.0.1:8000"
//! transcript = "transcript.txt"
//! template = "proposal_template.txt"
//! mock_fixtures = "mock.json"
//! research_stubs = "research_stub.json"
//!
//! [generator]
//! noise_std = 500.0
//!
//! [hyperparameters]
//! n_estimators = 100
//!
//! [llm]
//! enabled = false
//! ```

use std::path::{Path, PathBuf};

use mlat_core::dataset::GeneratorSpec;
use mlat_core::presets::{CV_FOLDS, DEFAULT_N, DEFAULT_SPLIT_SEED, TEST_FRACTION};
use mlat_core::Hyperparameters;
use mlat_runtime::ExternalConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: Option<PathBuf>,
    /// Record count when no dataset file is given.
    pub n: usize,
    /// Split seed.
    pub seed: u64,
    pub folds: usize,
    pub test_fraction: f64,
    pub bind: String,
    pub transcript: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub mock_fixtures: Option<PathBuf>,
    pub research_stubs: Option<PathBuf>,
    pub generator: GeneratorSpec,
    pub hyperparameters: Hyperparameters,
    pub llm: ExternalConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data: None,
            n: DEFAULT_N,
            seed: DEFAULT_SPLIT_SEED,
            folds: CV_FOLDS,
            test_fraction: TEST_FRACTION,
            bind: "127.0.0.1:8000".into(),
            transcript: None,
            template: None,
            mock_fixtures: None,
            research_stubs: None,
            generator: GeneratorSpec::default(),
            hyperparameters: Hyperparameters::default(),
            llm: ExternalConfig::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Invalid(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.data,
            &mut cfg.transcript,
            &mut cfg.template,
            &mut cfg.mock_fixtures,
            &mut cfg.research_stubs,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.generator.validate()?;
        self.hyperparameters.validate()?;
        if self.n == 0 {
            return Err(CliError::Invalid("n must be positive".into()));
        }
        if self.folds < 2 {
            return Err(CliError::Invalid(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Invalid(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn partial_tables_override() {
        let cfg = Config::parse("folds = 4\n[hyperparameters]\nn_estimators = 10\n[generator]\nnoise_std = 100.0\n").unwrap();
        assert_eq!(cfg.folds, 4);
        assert_eq!(cfg.hyperparameters.n_estimators, 10);
        assert_eq!(cfg.hyperparameters.max_depth, 3);
        assert_eq!(cfg.generator.noise_std, 100.0);
    }

    #[test]
    fn invalid_values_rejected_at_load() {
        for text in [
            "folds = 1",
            "test_fraction = 1.5",
            "[hyperparameters]\nlearning_rate = 0.0",
            "[generator]\nnoise_std = -1.0",
            "unknown_key = 3",
        ] {
            let err = Config::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlat.toml");
        std::fs::write(&path, "data = \"deals.csv\"\ntemplate = \"/abs/t.txt\"\n").unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.data.unwrap(), dir.path().join("deals.csv"));
        assert_eq!(cfg.template.unwrap(), PathBuf::from("/abs/t.txt"));
    }
}
