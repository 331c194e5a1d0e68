//! Flat `key = value` experiment configuration.
//!
//! One entry per line, `#` starts a comment, arrays are written
//! `[a, b, c]`. Unknown keys are rejected so typos do not silently fall
//! back to defaults.
//!
//! ```text
//! plane = euclid
//! n = [200, 400, 800]
//! r = 0.4
//! seeds = 20
//! measure = [cliques, tau]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use geoclique::PlaneModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// Raw parsed entries, each a list of scalar strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Entries(BTreeMap<String, Vec<String>>);

impl Entries {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            let value = value.trim();
            let items = match value.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
                Some(inner) => inner
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
                None => vec![value.to_string()],
            };
            if map.insert(key.to_string(), items).is_some() {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self(map))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(items) = self.0.remove(key) else {
            return Ok(None);
        };
        items
            .iter()
            .map(|s| {
                s.parse::<T>().map_err(|e| ConfigError::BadValue {
                    key: key.to_string(),
                    msg: format!("`{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn scalar<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take::<T>(key)? {
            None => Ok(None),
            Some(mut v) if v.len() == 1 => Ok(v.pop()),
            Some(_) => Err(ConfigError::BadValue {
                key: key.to_string(),
                msg: "expected a single value".into(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Euclid,
    Hyperbolic,
}

impl FromStr for Plane {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euclid" | "euclidean" => Ok(Plane::Euclid),
            "hyperbolic" | "hrg" => Ok(Plane::Hyperbolic),
            _ => Err(format!("unknown plane `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Cliques,
    Tau,
    Plant,
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cliques" => Ok(Measure::Cliques),
            "tau" => Ok(Measure::Tau),
            "plant" => Ok(Measure::Plant),
            _ => Err(format!("unknown measure `{s}`")),
        }
    }
}

/// Largest `n` for which maximal cliques are counted exactly.
pub const EUCLID_N_CAP: usize = 50_000;
pub const HYPERBOLIC_N_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub plane: Plane,
    /// Strictly increasing.
    pub ns: Vec<usize>,
    pub r: f64,
    pub gamma: f64,
    pub c: f64,
    /// Seeds per cell.
    pub seeds: u64,
    pub base_seed: u64,
    pub measures: Vec<Measure>,
    pub poissonized: bool,
    /// Greedy restarts for the `tau` lower bound.
    pub restarts: usize,
    /// Node budget of the exact `tau` search; `0` skips it.
    pub exact_nodes: u64,
    /// Sector count of the planted construction; `None` uses the default.
    pub k: Option<usize>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            plane: Plane::Euclid,
            ns: vec![200, 400, 800, 1600, 3200],
            r: 0.4,
            gamma: 2.5,
            c: 0.0,
            seeds: 20,
            base_seed: 0,
            measures: vec![Measure::Cliques, Measure::Tau],
            poissonized: false,
            restarts: 8,
            exact_nodes: 0,
            k: None,
            output: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut e = Entries::parse(text)?;
        let mut cfg = Self::default();
        if let Some(v) = e.scalar("plane")? {
            cfg.plane = v;
        }
        if let Some(v) = e.take("n")? {
            cfg.ns = v;
        }
        macro_rules! scalar {
            ($key:literal, $field:ident) => {
                if let Some(v) = e.scalar($key)? {
                    cfg.$field = v;
                }
            };
        }
        scalar!("r", r);
        scalar!("gamma", gamma);
        scalar!("c", c);
        scalar!("seeds", seeds);
        scalar!("base_seed", base_seed);
        scalar!("poissonized", poissonized);
        scalar!("restarts", restarts);
        scalar!("exact_nodes", exact_nodes);
        if let Some(v) = e.take("measure")? {
            cfg.measures = v;
        }
        if let Some(v) = e.scalar::<usize>("k")? {
            cfg.k = Some(v);
        }
        if let Some(v) = e.scalar::<PathBuf>("output")? {
            cfg.output = Some(v);
        }
        if let Some(v) = e.scalar::<usize>("threads")? {
            cfg.threads = Some(v);
        }
        if let Some(key) = e.0.keys().next() {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ns.is_empty() {
            return Err(ConfigError::Invalid("need at least one n".into()));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(
                "n values must be strictly increasing".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(ConfigError::Invalid("seeds must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid("threads must be at least 1".into()));
        }
        for &n in &self.ns {
            self.model(n)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn model(&self, n: usize) -> Result<PlaneModel, geoclique::ModelError> {
        match self.plane {
            Plane::Euclid => PlaneModel::euclidean(n, self.r),
            Plane::Hyperbolic => PlaneModel::hyperbolic(n, self.gamma, self.c),
        }
    }

    /// Cap on `n` for exact clique counting.
    pub fn n_cap(&self) -> usize {
        match self.plane {
            Plane::Euclid => EUCLID_N_CAP,
            Plane::Hyperbolic => HYPERBOLIC_N_CAP,
        }
    }

    /// Exponent `e` of the fit `ln M ~ n^e`, fixed by the model.
    pub fn exponent(&self) -> f64 {
        match self.plane {
            Plane::Euclid => 1.0 / 3.0,
            Plane::Hyperbolic => (3.0 - self.gamma) / 6.0,
        }
    }

    pub fn wants(&self, m: Measure) -> bool {
        self.measures.contains(&m)
    }
}
