//! TOML bench configs.
//!
//! ```toml
//! generator = "random:n=8,M=16"
//! scenario = "both"
//! runs = 100
//! base_seed = 0
//! draws = 10000
//! starts = 1
//! lambda = 10.0
//! max_iter = 30
//! conv_tol = 1e-4
//! out_dir = "reports"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fppsca::bench::{BenchConfig, Scenario};
use fppsca::gen::SeededSpec;
use fppsca::sdr::DEFAULT_DRAWS;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub generator: String,
    pub scenario: String,
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    pub lambda: Option<f64>,
    pub max_iter: Option<usize>,
    pub conv_tol: Option<f64>,
    pub jobs: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

fn default_starts() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("reports")
}

impl BenchFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_config(&self) -> Result<BenchConfig> {
        let seeded: SeededSpec = self.generator.parse()?;
        if seeded.seed.is_some() {
            bail!("the generator of a bench config takes no seed; set `base_seed` instead");
        }
        let scenario: Scenario = self.scenario.parse()?;
        let mut cfg = BenchConfig::new(seeded.spec, self.runs, scenario);
        cfg.base_seed = self.base_seed;
        cfg.draws = self.draws;
        cfg.starts = self.starts;
        cfg.jobs = self.jobs;
        if let Some(v) = self.lambda {
            cfg.fpp.lambda = v;
        }
        if let Some(v) = self.max_iter {
            cfg.fpp.max_iter = v;
        }
        if let Some(v) = self.conv_tol {
            cfg.fpp.conv_tol = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
