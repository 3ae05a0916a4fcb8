//! Run configuration: every hyperparameter and variant switch.
//!
//! Serialized as flat `key = value` text so any tool can parse or diff a
//! resolved config. Defaults follow the best reported settings for ICEWS14
//! except where a dataset-specific value is noted.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::tkg::SearchRange;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFn {
    Distmult,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerVariant {
    /// Softmax(−|Δt|) weighted sampling without replacement.
    Weighted,
    /// Equal-probability sampling (Random Sample ablation).
    Uniform,
    /// Keep every temporal neighbor, ignoring the cap (Whole Neighborhood ablation).
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeEncoderVariant {
    /// Encode the signed difference t − t_q (the default model).
    Difference,
    /// Encode the raw timestamp t (Absolute Time ablation).
    Absolute,
}

/// All hyperparameters and variant switches for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Shared dimensionality of entity, relation and hidden vectors.
    pub embedding_size: usize,
    /// Dimensionality of the time encoding; 0 means "same as embedding_size".
    pub time_dim: usize,
    /// Aggregation steps, 1 or 2.
    pub agg_steps: usize,
    pub activation: Activation,
    /// Maximum |t − t_q| for neighbor eligibility; None = whole timeline.
    pub search_range: Option<u32>,
    /// Cap on the number of sampled temporal neighbors.
    pub max_neighbors: usize,
    pub score_fn: ScoreFn,
    pub sampler_variant: SamplerVariant,
    pub time_encoder_variant: TimeEncoderVariant,
    /// Drop neighbors observed exactly at the query timestamp.
    pub exclude_query_time: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Serialize measured wall time per epoch; disable for byte-identical logs.
    pub log_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            embedding_size: 300,
            time_dim: 0,
            agg_steps: 1,
            activation: Activation::Tanh,
            search_range: None,
            max_neighbors: 100,
            score_fn: ScoreFn::Distmult,
            sampler_variant: SamplerVariant::Weighted,
            time_encoder_variant: TimeEncoderVariant::Difference,
            exclude_query_time: false,
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 100,
            seed: 0,
            log_wall_time: true,
        }
    }
}

impl RunConfig {
    pub fn time_dim_effective(&self) -> usize {
        if self.time_dim == 0 {
            self.embedding_size
        } else {
            self.time_dim
        }
    }

    pub fn search_range_enum(&self) -> SearchRange {
        match self.search_range {
            Some(r) => SearchRange::Bounded(r),
            None => SearchRange::Unbounded,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_size == 0 {
            return Err(Error::Config("embedding_size must be positive".into()));
        }
        if !(self.agg_steps == 1 || self.agg_steps == 2) {
            return Err(Error::Config(format!(
                "agg_steps must be 1 or 2, got {}",
                self.agg_steps
            )));
        }
        if self.max_neighbors == 0 && self.sampler_variant != SamplerVariant::All {
            return Err(Error::Config(
                "max_neighbors must be >= 1 for weighted/uniform sampling".into(),
            ));
        }
        if self.score_fn == ScoreFn::Complex && !self.embedding_size.is_multiple_of(2) {
            return Err(Error::Config(
                "complex score function needs an even embedding_size".into(),
            ));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    /// Flat `key = value` form, keys sorted, one per line.
    pub fn to_key_values(&self) -> String {
        let map = self.as_map();
        let mut out = String::new();
        for (k, v) in &map {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn as_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("embedding_size".into(), self.embedding_size.to_string());
        m.insert("time_dim".into(), self.time_dim.to_string());
        m.insert("agg_steps".into(), self.agg_steps.to_string());
        m.insert(
            "activation".into(),
            match self.activation {
                Activation::Tanh => "tanh".into(),
                Activation::Relu => "relu".into(),
            },
        );
        m.insert(
            "search_range".into(),
            match self.search_range {
                Some(r) => r.to_string(),
                None => "unbounded".into(),
            },
        );
        m.insert("max_neighbors".into(), self.max_neighbors.to_string());
        m.insert(
            "score_fn".into(),
            match self.score_fn {
                ScoreFn::Distmult => "distmult".into(),
                ScoreFn::Complex => "complex".into(),
            },
        );
        m.insert(
            "sampler_variant".into(),
            match self.sampler_variant {
                SamplerVariant::Weighted => "weighted".into(),
                SamplerVariant::Uniform => "uniform".into(),
                SamplerVariant::All => "all".into(),
            },
        );
        m.insert(
            "time_encoder_variant".into(),
            match self.time_encoder_variant {
                TimeEncoderVariant::Difference => "difference".into(),
                TimeEncoderVariant::Absolute => "absolute".into(),
            },
        );
        m.insert(
            "exclude_query_time".into(),
            self.exclude_query_time.to_string(),
        );
        m.insert("learning_rate".into(), format!("{}", self.learning_rate));
        m.insert("batch_size".into(), self.batch_size.to_string());
        m.insert("epochs".into(), self.epochs.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("log_wall_time".into(), self.log_wall_time.to_string());
        m
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines ignored.
    /// Unknown keys are rejected.
    pub fn from_key_values(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, e)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set a single field from its textual form (used by config files and
    /// CLI overrides alike).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn bad(key: &str, value: &str) -> Error {
            Error::Config(format!("invalid value {value:?} for key {key:?}"))
        }
        match key {
            "embedding_size" => self.embedding_size = value.parse().map_err(|_| bad(key, value))?,
            "time_dim" => self.time_dim = value.parse().map_err(|_| bad(key, value))?,
            "agg_steps" => self.agg_steps = value.parse().map_err(|_| bad(key, value))?,
            "activation" => {
                self.activation = match value {
                    "tanh" => Activation::Tanh,
                    "relu" => Activation::Relu,
                    _ => return Err(bad(key, value)),
                }
            }
            "search_range" => {
                self.search_range = match value {
                    "unbounded" | "whole" | "none" => None,
                    _ => Some(value.parse().map_err(|_| bad(key, value))?),
                }
            }
            "max_neighbors" => self.max_neighbors = value.parse().map_err(|_| bad(key, value))?,
            "score_fn" => {
                self.score_fn = match value {
                    "distmult" => ScoreFn::Distmult,
                    "complex" => ScoreFn::Complex,
                    _ => return Err(bad(key, value)),
                }
            }
            "sampler_variant" => {
                self.sampler_variant = match value {
                    "weighted" => SamplerVariant::Weighted,
                    "uniform" => SamplerVariant::Uniform,
                    "all" => SamplerVariant::All,
                    _ => return Err(bad(key, value)),
                }
            }
            "time_encoder_variant" => {
                self.time_encoder_variant = match value {
                    "difference" => TimeEncoderVariant::Difference,
                    "absolute" => TimeEncoderVariant::Absolute,
                    _ => return Err(bad(key, value)),
                }
            }
            "exclude_query_time" => {
                self.exclude_query_time = value.parse().map_err(|_| bad(key, value))?
            }
            "learning_rate" => self.learning_rate = value.parse().map_err(|_| bad(key, value))?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad(key, value))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "log_wall_time" => self.log_wall_time = value.parse().map_err(|_| bad(key, value))?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }
}
