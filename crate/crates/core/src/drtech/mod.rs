//! The projection techniques available to the workflows and their
//! hyperparameter search spaces.

mod pca;
mod random_proj;
mod tsne;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

pub use pca::{pca_project, PcaBasis};
pub use random_proj::{random_frame, random_orthogonal_project};
pub use tsne::{tsne_project, TsneParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechniqueId {
    Pca,
    RandomProj,
    Tsne,
}

impl TechniqueId {
    pub const ALL: [TechniqueId; 3] =
        [TechniqueId::Pca, TechniqueId::RandomProj, TechniqueId::Tsne];

    pub fn name(self) -> &'static str {
        match self {
            TechniqueId::Pca => "pca",
            TechniqueId::RandomProj => "random_proj",
            TechniqueId::Tsne => "tsne",
        }
    }
}

impl std::fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TechniqueId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(TechniqueId::Pca),
            "random_proj" | "rp" => Ok(TechniqueId::RandomProj),
            "tsne" => Ok(TechniqueId::Tsne),
            other => Err(Error::param(format!("unknown technique '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Technique {
    pub id: TechniqueId,
    pub target_dim: usize,
}

impl Technique {
    pub fn new(id: TechniqueId) -> Self {
        Self { id, target_dim: 2 }
    }

    pub fn validate(&self, source_dim: usize) -> Result<()> {
        if self.target_dim == 0 || self.target_dim >= source_dim {
            return Err(Error::param(format!(
                "target dimension {} must be in [1, {source_dim})",
                self.target_dim
            )));
        }
        Ok(())
    }
}

/// Named hyperparameter values; integers are stored exactly as `f64`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperParams(pub BTreeMap<String, f64>);

impl HyperParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name)
            .ok_or_else(|| Error::param(format!("missing hyperparameter '{name}'")))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `name=value` pairs joined by `;`, in name order.
    pub fn describe(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
    /// Uniform integer in `[low, high)`.
    Integer,
    /// Always `low`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub scale: Scale,
    /// Sampled values above this are clamped to it (solvability limit that
    /// may be tighter than the nominal upper bound).
    pub valid_max: Option<f64>,
}

impl ParamDomain {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = match self.scale {
            Scale::Fixed => self.low,
            Scale::Linear => rng.random_range(self.low..self.high),
            Scale::Log => rng.random_range(self.low.ln()..self.high.ln()).exp(),
            Scale::Integer => rng.random_range(self.low as i64..self.high as i64) as f64,
        };
        match self.valid_max {
            Some(m) => v.min(m),
            None => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamDomain>,
}

impl SearchSpace {
    /// True when every draw yields the same configuration.
    pub fn is_degenerate(&self) -> bool {
        self.params.iter().all(|p| p.scale == Scale::Fixed)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HyperParams {
        HyperParams(
            self.params
                .iter()
                .map(|p| (p.name.clone(), p.sample(rng)))
                .collect(),
        )
    }

    pub fn domain(&self, name: &str) -> Option<&ParamDomain> {
        self.params.iter().find(|p| p.name == name)
    }
}

const SEED_RANGE: f64 = 2_147_483_648.0;

/// Hyperparameter domain of technique `t` for a dataset of `n` points.
pub fn hp_space(t: &Technique, n: usize) -> SearchSpace {
    let seed = ParamDomain {
        name: "seed".into(),
        low: 0.0,
        high: SEED_RANGE,
        scale: Scale::Integer,
        valid_max: None,
    };
    let params = match t.id {
        TechniqueId::Pca => Vec::new(),
        TechniqueId::RandomProj => vec![seed],
        TechniqueId::Tsne => vec![
            ParamDomain {
                name: "perplexity".into(),
                low: 2.0,
                high: (n as f64 / 3.0).max(3.0),
                scale: Scale::Log,
                valid_max: Some(TsneParams::max_perplexity(n).max(2.0)),
            },
            ParamDomain {
                name: "learning_rate".into(),
                low: 10.0,
                high: 1000.0,
                scale: Scale::Log,
                valid_max: None,
            },
            ParamDomain {
                name: "iterations".into(),
                low: 500.0,
                high: 500.0,
                scale: Scale::Fixed,
                valid_max: None,
            },
            seed,
        ],
    };
    SearchSpace { params }
}

/// Runs technique `t` on `x` with hyperparameters `hp`.
pub fn project(x: &DataMatrix, t: &Technique, hp: &HyperParams) -> Result<DataMatrix> {
    t.validate(x.cols())?;
    match t.id {
        TechniqueId::Pca => pca_project(x, t.target_dim),
        TechniqueId::RandomProj => {
            let seed = hp.require("seed")?;
            random_orthogonal_project(x, t.target_dim, seed as u64)
        }
        TechniqueId::Tsne => tsne_project(x, t.target_dim, &TsneParams::from_hyperparams(hp)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn pca_space_is_single_point() {
        let s = hp_space(&Technique::new(TechniqueId::Pca), 100);
        assert!(s.is_degenerate());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(s.sample(&mut rng).is_empty());
    }

    #[test]
    fn tsne_perplexity_bound() {
        let s = hp_space(&Technique::new(TechniqueId::Tsne), 30);
        let p = s.domain("perplexity").unwrap();
        assert_eq!(p.high, 10.0);
        assert_eq!(p.low, 2.0);
        assert_eq!(s.domain("iterations").unwrap().scale, Scale::Fixed);
    }

    #[test]
    fn sampled_configs_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [7usize, 30, 31, 150, 1000] {
            let s = hp_space(&Technique::new(TechniqueId::Tsne), n);
            for _ in 0..1000 {
                let hp = s.sample(&mut rng);
                let tp = TsneParams::from_hyperparams(&hp).unwrap();
                tp.validate(n).unwrap();
                assert!(tp.perplexity >= 2.0);
                assert!((10.0..=1000.0).contains(&tp.learning_rate));
                assert_eq!(tp.iterations, 500);
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for t in TechniqueId::ALL {
            assert_eq!(t.name().parse::<TechniqueId>().unwrap(), t);
        }
        assert!("umap".parse::<TechniqueId>().is_err());
    }
}
