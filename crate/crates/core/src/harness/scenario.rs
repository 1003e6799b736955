//! Scenario files: nature configuration, agents and run length.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num::rational::Ratio;
use num::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{AgentId, PredicateId};
use crate::revision::{RevisionStrategy, StrategyKind};
use crate::universe::NatureConfig;

/// An exact rational written as a decimal (`"0.6"`, `0.6`) or a fraction
/// (`"3/5"`). Serialized as the reduced fraction string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rational(pub Ratio<u64>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational {0:?}: expected a non-negative decimal or a/b")]
pub struct RationalError(pub String);

impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RationalError(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| err())?;
            let d: u64 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            return Ok(Rational(Ratio::new(n, d)));
        }
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        let digits_ok = |x: &str| x.bytes().all(|b| b.is_ascii_digit());
        if (int.is_empty() && frac.is_empty()) || !digits_ok(int) || !digits_ok(frac) || frac.len() > 18 {
            return Err(err());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
        let num = int.checked_mul(den).and_then(|x| x.checked_add(frac_val)).ok_or_else(err)?;
        Ok(Rational(Ratio::new(num, den)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(serde_json::Number),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(n) => n.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn default_seed() -> u64 {
    0
}
fn default_weights() -> [Rational; 3] {
    [Rational(Ratio::new(1, 2)), Rational(Ratio::new(3, 10)), Rational(Ratio::new(1, 5))]
}
fn default_initial() -> u32 {
    4
}
fn default_arity() -> u32 {
    2
}
fn default_visibility() -> Rational {
    Rational(Ratio::new(3, 5))
}
fn default_depth() -> usize {
    1
}
fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NatureSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Probabilities of variation, innovation and emergence.
    #[serde(default = "default_weights")]
    pub weights: [Rational; 3],
    #[serde(default = "default_initial")]
    pub initial_predicates: u32,
    #[serde(default = "default_arity")]
    pub clause_arity: u32,
}

impl Default for NatureSpec {
    fn default() -> Self {
        NatureSpec {
            seed: default_seed(),
            weights: default_weights(),
            initial_predicates: default_initial(),
            clause_arity: default_arity(),
        }
    }
}

impl NatureSpec {
    pub fn config(&self) -> NatureConfig {
        NatureConfig {
            seed: self.seed,
            weights: self.weights.map(|w| w.0),
            initial_predicates: self.initial_predicates,
            clause_arity: self.clause_arity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: AgentId,
    /// Predicates the agent is attuned to; may name predicates not yet
    /// revealed. Defaults to the initial predicates.
    #[serde(default)]
    pub niche: Option<BTreeSet<PredicateId>>,
    #[serde(default = "default_visibility")]
    pub visibility: Rational,
    #[serde(default)]
    pub strategy: StrategyKind,
    /// Defaults to the agent id.
    #[serde(default)]
    pub strategy_seed: Option<u64>,
}

impl AgentSpec {
    pub fn niche(&self, nature: &NatureSpec) -> BTreeSet<PredicateId> {
        self.niche
            .clone()
            .unwrap_or_else(|| (0..nature.initial_predicates).map(PredicateId).collect())
    }

    pub fn strategy(&self) -> RevisionStrategy {
        RevisionStrategy::new(self.strategy, self.strategy_seed.unwrap_or(self.id as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub ticks: u64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "one")]
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub nature: NatureSpec,
    pub agents: Vec<AgentSpec>,
    pub run: RunSpec,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn schema(path: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(&path, e.into_inner().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let sum = self.nature.weights.iter().fold(Ratio::zero(), |a, w| a + w.0);
        if !sum.is_one() {
            return Err(schema("nature.weights", format!("weights sum to {sum}, expected 1")));
        }
        if self.nature.initial_predicates == 0 {
            return Err(schema("nature.initial_predicates", "must be at least 1"));
        }
        if self.nature.clause_arity < 2 {
            return Err(schema("nature.clause_arity", "must be at least 2"));
        }
        if self.agents.is_empty() {
            return Err(schema("agents", "at least one agent is required"));
        }
        let mut seen = BTreeMap::new();
        for (i, a) in self.agents.iter().enumerate() {
            if let Some(first) = seen.insert(a.id, i) {
                return Err(schema(&format!("agents[{i}].id"), format!("duplicate of agents[{first}].id")));
            }
            if a.visibility.0 > Ratio::one() {
                return Err(schema(&format!("agents[{i}].visibility"), "must be at most 1"));
            }
        }
        if self.run.ticks == 0 {
            return Err(schema("run.ticks", "must be at least 1"));
        }
        if self.run.replicates == 0 {
            return Err(schema("run.replicates", "must be at least 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    Scenario::from_json(&std::fs::read_to_string(path)?)
}
