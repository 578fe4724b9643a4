use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Breakpoints on `{k / 2^j}`.
    Dyadic,
    /// Breakpoints `k / q` with `q` from a fixed list of non-powers of two.
    NonDyadic,
    /// Finite Haar sums to depth `j`; mean zero.
    Haar,
    /// `log(1 / |x|)` sampled and quantized on a dyadic partition. Approximate.
    LogDistance,
    /// Random `H¹` atoms.
    Atoms,
    /// Step functions on the 2-torus.
    Grid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub generator: Generator,
    pub count: usize,
    /// Breakpoint resolution `2^-depth` where the generator has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
}

impl CorpusEntry {
    pub fn new(generator: Generator, count: usize) -> Self {
        CorpusEntry {
            generator,
            count,
            depth: None,
        }
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = Some(depth);
        self
    }
}

/// Everything an experiment depends on. Rationals are `"p/q"` strings in files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed of the ChaCha8 generator behind every random choice.
    pub seed: u64,
    /// Empty means the command's default shifts.
    pub shifts: Vec<Rat>,
    pub depth: u32,
    /// Uniform grid points per axis added to the classical scans.
    pub grid_per_axis: u32,
    /// Random arcs, cubes, intervals or atoms drawn by the sampling suites.
    pub samples: usize,
    pub max_q: u64,
    pub r_levels: (i32, i32),
    pub corpus: Vec<CorpusEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            shifts: Vec::new(),
            depth: 8,
            grid_per_axis: 16,
            samples: 1000,
            max_q: 12,
            r_levels: (-20, 20),
            corpus: demo_corpus(),
            output: None,
        }
    }
}

/// The built-in corpus used when none is configured.
pub fn demo_corpus() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry::new(Generator::Dyadic, 4),
        CorpusEntry::new(Generator::NonDyadic, 4),
        CorpusEntry::new(Generator::Haar, 4).with_depth(3),
        CorpusEntry::new(Generator::LogDistance, 1).with_depth(5),
        CorpusEntry::new(Generator::Atoms, 4),
        CorpusEntry::new(Generator::Grid, 3),
    ]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.shifts.iter().find(|s| s.is_negative() || **s >= Rat::one()) {
            return Err(Error::OutOfUnitInterval { value: s.clone() });
        }
        if self.depth > 24 {
            return Err(Error::Config(format!("depth {} too large", self.depth)));
        }
        if self.grid_per_axis == 0 {
            return Err(Error::Config("grid_per_axis must be positive".into()));
        }
        let (lo, hi) = self.r_levels;
        if lo > 0 || hi < 0 {
            return Err(Error::Config("r_levels must satisfy lo <= 0 <= hi".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output path excluded.
    pub fn hash(&self) -> String {
        let mut echo = self.clone();
        echo.output = None;
        let bytes = serde_json::to_vec(&echo).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_hash() {
        let config = ExperimentConfig::default();
        let text = serde_json::to_string(&config).unwrap();
        assert!(text.contains(r#""shifts":[]"#));
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(back.hash(), config.hash());
        assert_eq!(config.hash().len(), 64);

        let mut other = config.clone();
        other.output = Some("out.json".into());
        assert_eq!(other.hash(), config.hash());
        other.seed = 1;
        assert_ne!(other.hash(), config.hash());
    }

    #[test]
    fn partial_files_use_defaults() {
        let c = ExperimentConfig::from_json(r#"{"seed": 7, "shifts": ["2/5"]}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.depth, 8);
        assert!(ExperimentConfig::from_json(r#"{"sede": 7}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"shifts": ["3/2"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"shifts": ["x"]}"#).is_err());
    }
}
