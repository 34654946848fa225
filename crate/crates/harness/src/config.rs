//! Experiment configuration, mirrored one to one by the JSON config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use actsearch_core::dataset::{self, CsvOptions, PreprocessSpec};
use actsearch_core::features::{median_bandwidth, RffMap};
use actsearch_core::synthetic::{self, TwoGaussians};
use actsearch_core::{Dataset, EngineKind, HyperParams};
use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{config, io, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        header: bool,
        label_column: Option<usize>,
        #[serde(default)]
        categorical: Vec<usize>,
    },
    Sparse {
        path: PathBuf,
        dim: Option<usize>,
    },
    TwoGaussians(TwoGaussians),
    SwissRoll {
        n: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        Ok(match self {
            DataSource::Csv {
                path,
                header,
                label_column,
                categorical,
            } => {
                let opts = CsvOptions {
                    has_header: *header,
                    label_column: *label_column,
                    categorical: categorical.clone(),
                };
                dataset::load_csv(path, &opts)?
            }
            DataSource::Sparse { path, dim } => dataset::load_sparse(path, *dim)?,
            DataSource::TwoGaussians(g) => g.generate()?,
            DataSource::SwissRoll { n, noise, seed } => synthetic::swiss_roll(*n, *noise, *seed),
        })
    }
}

/// RBF bandwidth for random Fourier features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Fixed(f64),
    Heuristic(Heuristic),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    /// Median pairwise distance over a 1000-point sample.
    Median,
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(Bandwidth::Heuristic(Heuristic::Median));
        }
        s.parse::<f64>()
            .map(Bandwidth::Fixed)
            .map_err(|_| config(format!("rff sigma must be a number or `median`, got `{s}`")))
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Fixed(v) => write!(f, "{v}"),
            Bandwidth::Heuristic(Heuristic::Median) => f.write_str("median"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RffConfig {
    pub dim: usize,
    pub sigma: Bandwidth,
    #[serde(default)]
    pub seed: u64,
}

impl RffConfig {
    pub fn fit(&self, d: &Dataset) -> Result<RffMap> {
        let sigma = match self.sigma {
            Bandwidth::Fixed(s) => s,
            Bandwidth::Heuristic(Heuristic::Median) => {
                let s = median_bandwidth(d, 1000, self.seed);
                info!("median-heuristic bandwidth {s}");
                s
            }
        };
        Ok(RffMap::fit(d.r(), self.dim, sigma, self.seed)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitPolicy {
    /// `L0` holds one positive drawn uniformly.
    #[default]
    OneRandomPositive,
    /// `L0` holds one positive and one negative, each drawn uniformly.
    PosNegPair,
}

impl FromStr for InitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-random-positive" => Ok(InitPolicy::OneRandomPositive),
            "pos-neg-pair" => Ok(InitPolicy::PosNegPair),
            _ => Err(config(format!("unknown init policy `{s}`"))),
        }
    }
}

fn default_engine() -> EngineKind {
    EngineKind::Las
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    #[serde(default)]
    pub preprocess: PreprocessSpec,
    /// Downsample the over-represented class to reach this prevalence before
    /// any preprocessing.
    #[serde(default)]
    pub target_prevalence: Option<f64>,
    #[serde(default)]
    pub rff: Option<RffConfig>,
    #[serde(default = "default_engine")]
    pub engine: EngineKind,
    #[serde(default)]
    pub h: HyperParams,
    /// Label budget `T`.
    pub budget: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub init_policy: InitPolicy,
}

impl RunConfig {
    /// The two-Gaussian surrogate: `n = 5000`, `r = 20`, 1% positives,
    /// normalized with a bias feature, `T = 40` and seeds `0..10`.
    pub fn surrogate() -> Self {
        RunConfig {
            data: DataSource::TwoGaussians(TwoGaussians::new(5000, 20, 0.01, 0)),
            preprocess: PreprocessSpec {
                normalize: true,
                bias: true,
                ..PreprocessSpec::default()
            },
            target_prevalence: None,
            rff: None,
            engine: EngineKind::Las,
            h: HyperParams::default(),
            budget: 40,
            seeds: (0..10).collect(),
            init_policy: InitPolicy::OneRandomPositive,
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(config("budget must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(config("seeds must not be empty"));
        }
        self.h.validate()?;
        Ok(())
    }

    /// Loads the data and applies subsampling, preprocessing and the
    /// feature map, in that order.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let mut d = self.data.load()?;
        if let Some(p) = self.target_prevalence {
            d = dataset::subsample_to_prevalence(&d, p, 0)?;
        }
        d = self.preprocess.apply(&d)?;
        if let Some(rff) = &self.rff {
            d = rff.fit(&d)?.transform(&d)?;
        }
        Ok(d)
    }
}

/// Parses seed lists such as `0,3,7`, `0..10` or a mix `1,4..6`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || config(format!("bad seed list entry `{part}`"));
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|_| bad())?;
            let b: u64 = b.parse().map_err(|_| bad())?;
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(config("seed list is empty"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_config_round_trips() {
        let cfg = RunConfig::surrogate();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        assert!(json.contains("\"kind\": \"two-gaussians\""));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let json = r#"{"data": {"kind": "swiss-roll", "n": 50}, "budget": 5, "seeds": [1]}"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.engine, EngineKind::Las);
        assert_eq!(cfg.h, HyperParams::default());
        assert_eq!(cfg.init_policy, InitPolicy::OneRandomPositive);
        assert_eq!(cfg.load_dataset().unwrap().n(), 50);
    }

    #[test]
    fn bandwidth_accepts_numbers_and_median() {
        assert_eq!("0.5".parse::<Bandwidth>().unwrap(), Bandwidth::Fixed(0.5));
        assert_eq!(
            "median".parse::<Bandwidth>().unwrap(),
            Bandwidth::Heuristic(Heuristic::Median)
        );
        assert!("wide".parse::<Bandwidth>().is_err());
        let rff: RffConfig = serde_json::from_str(r#"{"dim": 8, "sigma": "median"}"#).unwrap();
        assert_eq!(rff.sigma, Bandwidth::Heuristic(Heuristic::Median));
        let rff: RffConfig = serde_json::from_str(r#"{"dim": 8, "sigma": 2.0}"#).unwrap();
        assert_eq!(rff.sigma, Bandwidth::Fixed(2.0));
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::surrogate();
        cfg.budget = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = RunConfig::surrogate();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::surrogate();
        cfg.h.lambda = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::Core(actsearch_core::Error::Param { field: "lambda", .. }))
        ));
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 1,2..4").unwrap(), vec![5, 1, 2, 3]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn surrogate_pipeline_adds_bias() {
        let mut cfg = RunConfig::surrogate();
        if let DataSource::TwoGaussians(g) = &mut cfg.data {
            g.n = 300;
        }
        let d = cfg.load_dataset().unwrap();
        assert_eq!((d.r(), d.n()), (21, 300));
        assert!(d.x().row(20).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rff_stage_changes_dimension() {
        let mut cfg = RunConfig::surrogate();
        if let DataSource::TwoGaussians(g) = &mut cfg.data {
            g.n = 100;
        }
        cfg.rff = Some(RffConfig {
            dim: 64,
            sigma: Bandwidth::Heuristic(Heuristic::Median),
            seed: 3,
        });
        assert_eq!(cfg.load_dataset().unwrap().r(), 64);
    }
}
