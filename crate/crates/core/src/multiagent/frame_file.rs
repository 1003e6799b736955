use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FrameError, SharedFrame};
use crate::epistemics::Partition;
use crate::formula::{AgentId, Formula, PredicateId};
use crate::universe::State;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    /// Information sets as lists of bit strings over the frame predicates.
    pub partition: Vec<Vec<String>>,
    /// The agent's own predicate set; defaults to the frame predicates.
    #[serde(default)]
    pub predicates: Option<BTreeSet<PredicateId>>,
}

/// On-disk frame description. States are bit strings over `predicates` in
/// ascending index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFile {
    pub predicates: BTreeSet<PredicateId>,
    /// Defaults to every assignment to `predicates`.
    #[serde(default)]
    pub ground: Option<Vec<String>>,
    pub agents: BTreeMap<AgentId, AgentEntry>,
}

impl FrameFile {
    pub fn domain(&self) -> Vec<PredicateId> {
        self.predicates.iter().copied().collect()
    }

    pub fn state(&self, bits: &str) -> Result<State, FrameError> {
        Ok(State::from_bits(&self.domain(), bits)?)
    }

    pub fn to_frame(&self) -> Result<SharedFrame, FrameError> {
        let ground: BTreeSet<State> = match &self.ground {
            Some(bits) => bits.iter().map(|b| self.state(b)).collect::<Result<_, _>>()?,
            None => State::all(&self.predicates).into_iter().collect(),
        };
        let mut partitions = BTreeMap::new();
        let mut agent_predicates = BTreeMap::new();
        for (id, entry) in &self.agents {
            let classes = entry
                .partition
                .iter()
                .map(|c| c.iter().map(|b| self.state(b)).collect::<Result<BTreeSet<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            partitions.insert(*id, Partition::new(ground.clone(), classes)?);
            agent_predicates.insert(*id, entry.predicates.clone().unwrap_or_else(|| self.predicates.clone()));
        }
        SharedFrame::new(agent_predicates, self.predicates.clone(), partitions)
    }
}

/// An event given either as a formula or as an explicit list of states,
/// together with the state at which it is queried.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFile {
    #[serde(default)]
    pub formula: Option<Formula>,
    #[serde(default)]
    pub states: Option<Vec<String>>,
    pub at: String,
}

impl EventFile {
    /// Resolves the event over the frame; `Err(missing)` when the formula
    /// mentions predicates outside the shared set.
    pub fn resolve(&self, file: &FrameFile, frame: &SharedFrame) -> Result<Result<BTreeSet<State>, BTreeSet<PredicateId>>, FrameError> {
        match (&self.formula, &self.states) {
            (Some(f), None) => {
                let missing: BTreeSet<PredicateId> = f.atoms().difference(frame.shared_predicates()).copied().collect();
                if !missing.is_empty() {
                    return Ok(Err(missing));
                }
                Ok(Ok(frame.extension(f)?))
            }
            (None, Some(bits)) => Ok(Ok(bits.iter().map(|b| file.state(b)).collect::<Result<_, _>>()?)),
            _ => Err(FrameError::Unsupported("event needs exactly one of formula or states".into())),
        }
    }
}
