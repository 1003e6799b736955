//! Interactive epistemology over partition models: the knowledge operator,
//! the meet, common knowledge, finite knowledge hierarchies, exact uniform
//! posteriors, the agreement check and knowledge disjointness.
//!
//! The partition-level operations are generic over the state type so the
//! exhaustive oracles can run on plain integers; [`SharedFrame`] fixes the
//! state type to [`State`] and adds the predicate bookkeeping needed when
//! agents speak different languages.

mod frame_file;
pub mod s5;

pub use frame_file::{EventFile, FrameFile};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::epistemics::{knowledge_list, AgentState, Decider, Partition, PartitionError};
use crate::formula::{AgentId, Formula, PredicateId};
use crate::universe::{State, StateError};

/// Largest shared predicate set for which a frame enumerates its ground.
pub const MAX_FRAME_PREDICATES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("ground mismatch: {0}")]
    GroundMismatch(String),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("hierarchies have depths {0} and {1}")]
    DepthMismatch(usize, usize),
    #[error("agents do not share one predicate set")]
    NotClosedMode,
    #[error("frame over {0} predicates exceeds the enumeration limit of {MAX_FRAME_PREDICATES}")]
    TooLarge(usize),
    #[error("frame has no agents")]
    NoAgents,
    #[error("formula {0} is not supported here")]
    Unsupported(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    State(#[from] StateError),
}

fn mismatch<T: fmt::Debug>(what: &str, x: T) -> FrameError {
    FrameError::GroundMismatch(format!("{what} {x:?} is not in the ground set"))
}

fn check_subset<T: Ord + fmt::Debug>(ground: &BTreeSet<T>, e: &BTreeSet<T>) -> Result<(), FrameError> {
    match e.iter().find(|x| !ground.contains(x)) {
        Some(x) => Err(mismatch("event element", x)),
        None => Ok(()),
    }
}

/// `K(E)`: the states whose class lies inside `E`.
pub fn knowledge_event<T: Ord + Clone + fmt::Debug>(p: &Partition<T>, e: &BTreeSet<T>) -> Result<BTreeSet<T>, FrameError> {
    check_subset(p.ground(), e)?;
    Ok(p.classes()
        .iter()
        .filter(|c| c.is_subset(e))
        .flat_map(|c| c.iter().cloned())
        .collect())
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// The finest common coarsening: connected components of the graph joining
/// states that share a class in any of the partitions.
pub fn meet<T: Ord + Clone + fmt::Debug>(partitions: &[&Partition<T>]) -> Result<Partition<T>, FrameError> {
    let Some(first) = partitions.first() else {
        return Err(FrameError::NoAgents);
    };
    let ground = first.ground();
    if let Some(p) = partitions.iter().find(|p| p.ground() != ground) {
        return Err(FrameError::GroundMismatch(format!(
            "partitions over {} and {} states",
            ground.len(),
            p.ground().len()
        )));
    }
    let index: BTreeMap<&T, usize> = ground.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut sets = DisjointSets::new(ground.len());
    for p in partitions {
        for class in p.classes() {
            let mut members = class.iter().map(|x| index[x]);
            if let Some(head) = members.next() {
                for m in members {
                    sets.union(head, m);
                }
            }
        }
    }
    let elems: Vec<&T> = ground.iter().collect();
    let roots: Vec<usize> = (0..elems.len()).map(|i| sets.find(i)).collect();
    Ok(Partition::by_key(ground.clone(), |x| roots[index[x]]))
}

/// Outcome of a common-knowledge query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommonKnowledge<T = State> {
    Holds,
    /// States of the meet class of the queried state lying outside the event.
    FailsAt(BTreeSet<T>),
    /// The event mentions predicates not shared by every agent.
    Infeasible(BTreeSet<PredicateId>),
}

impl CommonKnowledge<State> {
    /// `{"outcome": ...}` with failing states as bit strings or the missing
    /// predicates.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CommonKnowledge::Holds => serde_json::json!({"outcome": "holds"}),
            CommonKnowledge::FailsAt(states) => serde_json::json!({
                "outcome": "fails_at",
                "states": states.iter().map(State::bits).collect::<Vec<_>>(),
            }),
            CommonKnowledge::Infeasible(missing) => serde_json::json!({"outcome": "infeasible", "missing": missing}),
        }
    }
}

/// Common knowledge of `e` at `at` among the agents owning `partitions`.
pub fn common_knowledge_of_event<T: Ord + Clone + fmt::Debug>(
    partitions: &[&Partition<T>],
    e: &BTreeSet<T>,
    at: &T,
) -> Result<CommonKnowledge<T>, FrameError> {
    let m = meet(partitions)?;
    check_subset(m.ground(), e)?;
    let class = m.class_of(at).ok_or_else(|| mismatch("state", at))?;
    let outside: BTreeSet<T> = class.difference(e).cloned().collect();
    Ok(if outside.is_empty() {
        CommonKnowledge::Holds
    } else {
        CommonKnowledge::FailsAt(outside)
    })
}

/// Uniform-prior posterior of `e` given the class of `at`.
pub fn posterior<T: Ord + Clone + fmt::Debug>(p: &Partition<T>, e: &BTreeSet<T>, at: &T) -> Result<Ratio<u64>, FrameError> {
    check_subset(p.ground(), e)?;
    let class = p.class_of(at).ok_or_else(|| mismatch("state", at))?;
    let hits = class.intersection(e).count() as u64;
    Ok(Ratio::new(hits, class.len() as u64))
}

fn ratio_map<S: Serializer>(m: &BTreeMap<AgentId, Ratio<u64>>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v.to_string())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    #[serde(serialize_with = "ratio_map")]
    pub posteriors: BTreeMap<AgentId, Ratio<u64>>,
    pub common_knowledge_of_posteriors: bool,
    pub agree: bool,
}

/// Posterior profile at `at`, whether that profile is common knowledge
/// (via the meet), and whether the posteriors coincide.
pub fn agreement<T: Ord + Clone + fmt::Debug>(
    partitions: &BTreeMap<AgentId, Partition<T>>,
    e: &BTreeSet<T>,
    at: &T,
) -> Result<AgreementReport, FrameError> {
    let first = partitions.values().next().ok_or(FrameError::NoAgents)?;
    let ground = first.ground();
    let profile = |w: &T| -> Result<Vec<Ratio<u64>>, FrameError> { partitions.values().map(|p| posterior(p, e, w)).collect() };
    let realized = profile(at)?;
    let mut same_profile = BTreeSet::new();
    for w in ground {
        if profile(w)? == realized {
            same_profile.insert(w.clone());
        }
    }
    let refs: Vec<&Partition<T>> = partitions.values().collect();
    let ck = common_knowledge_of_event(&refs, &same_profile, at)? == CommonKnowledge::Holds;
    Ok(AgreementReport {
        posteriors: partitions.keys().copied().zip(realized.iter().copied()).collect(),
        common_knowledge_of_posteriors: ck,
        agree: realized.windows(2).all(|w| w[0] == w[1]),
    })
}

/// Agents' information structures over a common ground of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedFrame {
    agent_predicates: BTreeMap<AgentId, BTreeSet<PredicateId>>,
    shared_predicates: BTreeSet<PredicateId>,
    ground: BTreeSet<State>,
    partitions: BTreeMap<AgentId, Partition>,
}

impl SharedFrame {
    /// A frame in which every agent speaks exactly `predicates`.
    pub fn closed(predicates: BTreeSet<PredicateId>, partitions: BTreeMap<AgentId, Partition>) -> Result<Self, FrameError> {
        let agent_predicates = partitions.keys().map(|a| (*a, predicates.clone())).collect();
        SharedFrame::new(agent_predicates, predicates, partitions)
    }

    pub fn new(
        agent_predicates: BTreeMap<AgentId, BTreeSet<PredicateId>>,
        shared_predicates: BTreeSet<PredicateId>,
        partitions: BTreeMap<AgentId, Partition>,
    ) -> Result<Self, FrameError> {
        let first = partitions.values().next().ok_or(FrameError::NoAgents)?;
        let ground = first.ground().clone();
        for (id, p) in &partitions {
            if p.ground() != &ground {
                return Err(FrameError::GroundMismatch(format!("agent {id} partitions a different ground")));
            }
            if !agent_predicates.contains_key(id) {
                return Err(FrameError::UnknownAgent(*id));
            }
        }
        if let Some(s) = ground.iter().find(|s| s.domain() != shared_predicates) {
            return Err(FrameError::GroundMismatch(format!("state {s} is not over the shared predicates")));
        }
        Ok(SharedFrame {
            agent_predicates,
            shared_predicates,
            ground,
            partitions,
        })
    }

    /// The frame agents can meet on: every assignment to the predicates all
    /// of them share, each agent distinguishing states by the shared
    /// predicates whose value its theory fixes.
    pub fn from_agents(agents: &[AgentState]) -> Result<Self, FrameError> {
        let first = agents.first().ok_or(FrameError::NoAgents)?;
        let shared: BTreeSet<PredicateId> = agents.iter().skip(1).fold(first.predicates().clone(), |acc, a| {
            acc.intersection(a.predicates()).copied().collect()
        });
        SharedFrame::over(agents, shared)
    }

    /// The frame as seen from one agent's own language: the ground is every
    /// assignment to `viewer`'s predicates.
    pub fn agent_view(agents: &[AgentState], viewer: AgentId) -> Result<Self, FrameError> {
        let me = agents.iter().find(|a| a.id() == viewer).ok_or(FrameError::UnknownAgent(viewer))?;
        SharedFrame::over(agents, me.predicates().clone())
    }

    fn over(agents: &[AgentState], predicates: BTreeSet<PredicateId>) -> Result<Self, FrameError> {
        if predicates.len() > MAX_FRAME_PREDICATES {
            return Err(FrameError::TooLarge(predicates.len()));
        }
        let ground: BTreeSet<State> = State::all(&predicates).into_iter().collect();
        let mut partitions = BTreeMap::new();
        for a in agents {
            let decider = Decider::new(a.theory());
            let known: BTreeSet<PredicateId> = predicates
                .iter()
                .copied()
                .filter(|p| a.predicates().contains(p) && decider.fixed(*p).is_some())
                .collect();
            partitions.insert(a.id(), Partition::by_key(ground.clone(), |s| s.project(&known)));
        }
        let agent_predicates = agents.iter().map(|a| (a.id(), a.predicates().clone())).collect();
        SharedFrame::new(agent_predicates, predicates, partitions)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.partitions.keys().copied()
    }

    pub fn shared_predicates(&self) -> &BTreeSet<PredicateId> {
        &self.shared_predicates
    }

    pub fn agent_predicates(&self) -> &BTreeMap<AgentId, BTreeSet<PredicateId>> {
        &self.agent_predicates
    }

    pub fn ground(&self) -> &BTreeSet<State> {
        &self.ground
    }

    pub fn partitions(&self) -> &BTreeMap<AgentId, Partition> {
        &self.partitions
    }

    pub fn partition(&self, agent: AgentId) -> Result<&Partition, FrameError> {
        self.partitions.get(&agent).ok_or(FrameError::UnknownAgent(agent))
    }

    pub fn is_closed(&self) -> bool {
        self.agent_predicates.values().all(|p| *p == self.shared_predicates)
    }

    fn check_state(&self, at: &State) -> Result<(), FrameError> {
        if self.ground.contains(at) {
            Ok(())
        } else {
            Err(mismatch("state", at.bits()))
        }
    }

    /// States of the ground where `f` holds; `K` and `C` use the partitions.
    pub fn extension(&self, f: &Formula) -> Result<BTreeSet<State>, FrameError> {
        Ok(match f {
            Formula::Atom(p) => {
                if !self.shared_predicates.contains(p) {
                    return Err(FrameError::Unsupported(f.to_string()));
                }
                self.ground.iter().filter(|s| s.value(*p) == Some(true)).cloned().collect()
            }
            Formula::Not(g) => self.ground.difference(&self.extension(g)?).cloned().collect(),
            Formula::And(a, b) => self.extension(a)?.intersection(&self.extension(b)?).cloned().collect(),
            Formula::Or(a, b) => self.extension(a)?.union(&self.extension(b)?).cloned().collect(),
            Formula::Implies(a, b) => {
                let not_a: BTreeSet<State> = self.ground.difference(&self.extension(a)?).cloned().collect();
                not_a.union(&self.extension(b)?).cloned().collect()
            }
            Formula::Know(i, g) => knowledge_event(self.partition(*i)?, &self.extension(g)?)?,
            Formula::Common(group, g) => {
                let parts = group.iter().map(|i| self.partition(*i)).collect::<Result<Vec<_>, _>>()?;
                knowledge_event(&meet(&parts)?, &self.extension(g)?)?
            }
        })
    }

    /// Whether the event described by `formula` is common knowledge at `at`.
    /// A top-level `C{..}` selects the group; otherwise all agents are used.
    pub fn common_knowledge(&self, formula: &Formula, at: &State) -> Result<CommonKnowledge, FrameError> {
        self.check_state(at)?;
        let missing: BTreeSet<PredicateId> = formula.atoms().difference(&self.shared_predicates).copied().collect();
        if !missing.is_empty() {
            return Ok(CommonKnowledge::Infeasible(missing));
        }
        let (group, event): (Vec<AgentId>, &Formula) = match formula {
            Formula::Common(g, inner) => (g.iter().copied().collect(), inner),
            other => (self.agents().collect(), other),
        };
        let parts = group.iter().map(|i| self.partition(*i)).collect::<Result<Vec<_>, _>>()?;
        common_knowledge_of_event(&parts, &self.extension(event)?, at)
    }

    pub fn agreement_check(&self, e: &BTreeSet<State>, at: &State) -> Result<AgreementReport, FrameError> {
        self.check_state(at)?;
        agreement(&self.partitions, e, at)
    }

    /// Level 0 is the agent's own information set at `at`; level `k+1` is
    /// the union of every agent's information sets that meet level `k`.
    pub fn build_hierarchy(&self, agent: AgentId, at: &State, depth: usize) -> Result<Hierarchy, FrameError> {
        self.check_state(at)?;
        let own = self.partition(agent)?;
        let mut levels = vec![own.class_of(at).ok_or_else(|| mismatch("state", at.bits()))?.clone()];
        for _ in 0..depth {
            let prev = levels.last().expect("level 0 exists");
            let mut next = prev.clone();
            for p in self.partitions.values() {
                for class in p.classes() {
                    if !class.is_disjoint(prev) {
                        next.extend(class.iter().cloned());
                    }
                }
            }
            levels.push(next);
        }
        Ok(Hierarchy {
            agent,
            predicates: self.shared_predicates.clone(),
            levels,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    pub agent: AgentId,
    /// Predicates of the ground the hierarchy was built over.
    pub predicates: BTreeSet<PredicateId>,
    pub levels: Vec<BTreeSet<State>>,
}

impl Hierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// First level equal to its predecessor, if the truncation reached one.
    pub fn stabilization_depth(&self) -> Option<usize> {
        (1..self.levels.len()).find(|&k| self.levels[k] == self.levels[k - 1])
    }
}

/// Levelwise equality of the two hierarchies after projecting every level
/// onto the predicates both grounds share.
pub fn hierarchies_consistent(a: &Hierarchy, b: &Hierarchy) -> Result<bool, FrameError> {
    if a.depth() != b.depth() {
        return Err(FrameError::DepthMismatch(a.depth(), b.depth()));
    }
    let shared: BTreeSet<PredicateId> = a.predicates.intersection(&b.predicates).copied().collect();
    let project = |level: &BTreeSet<State>| -> BTreeSet<State> { level.iter().map(|s| s.project(&shared)).collect() };
    Ok(a.levels.iter().zip(&b.levels).all(|(x, y)| project(x) == project(y)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disjointness {
    pub predicate_jaccard: Ratio<u64>,
    pub decided_sentence_jaccard: Ratio<u64>,
}

/// `|A ∩ B| / |A ∪ B|`, taken as 1 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Ratio<u64> {
    let union = a.union(b).count() as u64;
    if union == 0 {
        return Ratio::from_integer(1);
    }
    Ratio::new(a.intersection(b).count() as u64, union)
}

pub fn disjointness(a: &AgentState, b: &AgentState, depth: usize) -> Disjointness {
    let decided =
        |x: &AgentState| -> BTreeSet<(String, bool)> { knowledge_list(x, depth).into_iter().map(|(f, v)| (f.render(), v)).collect() };
    Disjointness {
        predicate_jaccard: jaccard(a.predicates(), b.predicates()),
        decided_sentence_jaccard: jaccard(&decided(a), &decided(b)),
    }
}
