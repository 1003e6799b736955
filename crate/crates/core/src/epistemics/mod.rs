//! The agent-local calculus: the three-valued decision procedure over an
//! agent's theory, knowledge lists, the contextual and adjacent knowledge
//! possibles, local knowledge, information partitions and theory checks.
//!
//! Entailment is semantic. `T |= xi` iff every model of `T` satisfies `xi`;
//! models are found with the DPLL search in [`solver`], so nothing here ever
//! materialises `2^n` assignments unless a caller asks for the model itself.

pub mod solver;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{enumerate_sentences, AgentId, Formula, PredicateId};
use crate::universe::{Literal, State, Theory};
use solver::Solver;

/// Result of the decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth3 {
    True,
    False,
    Undecidable,
    /// The sentence mentions predicates outside the agent's language.
    NotInLanguage,
}

impl Truth3 {
    pub fn is_decided(self) -> bool {
        matches!(self, Truth3::True | Truth3::False)
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Truth3::True => Some(true),
            Truth3::False => Some(false),
            _ => None,
        }
    }
}

/// An agent's possible: the theory, its predicate set and (lazily) the set
/// of states satisfying it.
#[derive(Debug, Clone)]
pub struct Possible {
    theory: Theory,
    model: OnceLock<BTreeSet<State>>,
}

impl PartialEq for Possible {
    fn eq(&self, other: &Self) -> bool {
        self.theory == other.theory
    }
}

impl Eq for Possible {}

impl Possible {
    pub fn new(theory: Theory) -> Self {
        Possible {
            theory,
            model: OnceLock::new(),
        }
    }

    pub fn theory(&self) -> &Theory {
        &self.theory
    }

    pub fn predicates(&self) -> &BTreeSet<PredicateId> {
        self.theory.predicates()
    }

    /// All assignments over the predicates that satisfy the theory.
    pub fn model(&self) -> &BTreeSet<State> {
        self.model.get_or_init(|| Solver::new(&self.theory).models())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub tick: u64,
    pub theory_hash: String,
    pub predicate_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("observation {0} lies outside the agent's predicates")]
pub struct ObservationError(pub Literal);

/// Snapshot of one agent. Revision produces a new snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    id: AgentId,
    tick: u64,
    possible: Possible,
    observations: BTreeSet<Literal>,
    history: Vec<Epoch>,
}

impl AgentState {
    pub fn new(id: AgentId, theory: Theory) -> Self {
        let history = vec![Epoch {
            tick: 0,
            theory_hash: theory.hash_hex(),
            predicate_count: theory.predicates().len(),
        }];
        AgentState {
            id,
            tick: 0,
            possible: Possible::new(theory),
            observations: BTreeSet::new(),
            history,
        }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn possible(&self) -> &Possible {
        &self.possible
    }

    pub fn theory(&self) -> &Theory {
        self.possible.theory()
    }

    pub fn predicates(&self) -> &BTreeSet<PredicateId> {
        self.possible.predicates()
    }

    pub fn observations(&self) -> &BTreeSet<Literal> {
        &self.observations
    }

    pub fn history(&self) -> &[Epoch] {
        &self.history
    }

    pub fn at_tick(mut self, tick: u64) -> Self {
        self.tick = tick;
        self
    }

    pub fn with_observations(mut self, observations: BTreeSet<Literal>) -> Result<Self, ObservationError> {
        if let Some(l) = observations.iter().find(|l| !self.predicates().contains(&l.predicate)) {
            return Err(ObservationError(*l));
        }
        self.observations = observations;
        Ok(self)
    }

    /// Replaces the theory, recording an epoch when it changed.
    pub fn with_theory(mut self, theory: Theory) -> Self {
        if theory != *self.theory() {
            self.history.push(Epoch {
                tick: self.tick,
                theory_hash: theory.hash_hex(),
                predicate_count: theory.predicates().len(),
            });
            self.possible = Possible::new(theory);
        }
        self
    }
}

/// Bulk decision procedure for one theory. Computes the backbone (the
/// predicates whose value is fixed in every model) once, then answers
/// sentence queries with memoised satisfiability checks over the remaining
/// atoms.
pub struct Decider<'a> {
    theory: &'a Theory,
    solver: Solver,
    consistent: bool,
    backbone: BTreeMap<PredicateId, bool>,
    memo: RefCell<HashMap<Vec<Literal>, bool>>,
}

impl<'a> Decider<'a> {
    pub fn new(theory: &'a Theory) -> Self {
        let solver = Solver::new(theory);
        let mut backbone = BTreeMap::new();
        let witness = solver.find_model();
        if let Some(w) = &witness {
            for lit in w.literals() {
                if !solver.satisfiable(&[lit.negated()]) {
                    backbone.insert(lit.predicate, lit.value);
                }
            }
        }
        Decider {
            theory,
            consistent: witness.is_some(),
            solver,
            backbone,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    /// Value forced by the theory, if any.
    pub fn fixed(&self, p: PredicateId) -> Option<bool> {
        self.backbone.get(&p).copied()
    }

    fn feasible(&self, assignment: &[Literal]) -> bool {
        if let Some(v) = self.memo.borrow().get(assignment) {
            return *v;
        }
        let v = self.solver.satisfiable(assignment);
        self.memo.borrow_mut().insert(assignment.to_vec(), v);
        v
    }

    /// Precondition: `xi` is propositional. Epistemic operators are treated
    /// as outside the language.
    pub fn decide(&self, xi: &Formula) -> Truth3 {
        let atoms = xi.atoms();
        if !xi.is_propositional() || !atoms.is_subset(self.theory.predicates()) {
            return Truth3::NotInLanguage;
        }
        if !self.consistent {
            return Truth3::True;
        }
        let open: Vec<PredicateId> = atoms.iter().copied().filter(|p| !self.backbone.contains_key(p)).collect();
        let mut seen_true = false;
        let mut seen_false = false;
        for bits in 0..1u64 << open.len() {
            let assignment: Vec<Literal> = open.iter().enumerate().map(|(k, p)| Literal::new(*p, bits >> k & 1 == 1)).collect();
            if !assignment.is_empty() && !self.feasible(&assignment) {
                continue;
            }
            let value = xi
                .eval(&|p| {
                    self.backbone
                        .get(&p)
                        .copied()
                        .or_else(|| assignment.iter().find(|l| l.predicate == p).map(|l| l.value))
                })
                .expect("all atoms assigned");
            if value {
                seen_true = true;
            } else {
                seen_false = true;
            }
            if seen_true && seen_false {
                return Truth3::Undecidable;
            }
        }
        match (seen_true, seen_false) {
            (true, false) => Truth3::True,
            (false, true) => Truth3::False,
            _ => Truth3::Undecidable,
        }
    }
}

/// The decision procedure: `True` if `xi` holds in every model of the
/// agent's theory (vacuously so for an inconsistent theory), `False` if in
/// none, `Undecidable` otherwise.
pub fn decide(agent: &AgentState, xi: &Formula) -> Truth3 {
    Decider::new(agent.theory()).decide(xi)
}

/// Decided sentences up to `depth`, in enumeration order.
pub fn knowledge_list(agent: &AgentState, depth: usize) -> Vec<(Formula, bool)> {
    let Ok(sentences) = enumerate_sentences(agent.predicates(), depth) else {
        return Vec::new();
    };
    let decider = Decider::new(agent.theory());
    sentences
        .into_iter()
        .filter_map(|xi| decider.decide(&xi).as_bool().map(|v| (xi, v)))
        .collect()
}

/// States fully evaluable and admitted by the agent's theory.
pub fn contextual_possible(agent: &AgentState) -> BTreeSet<State> {
    agent.possible().model().clone()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpistemicError {
    #[error("state over {found:?} does not match the agent's predicates {expected:?}")]
    Domain {
        expected: BTreeSet<PredicateId>,
        found: BTreeSet<PredicateId>,
    },
    #[error("the agent's theory has no models")]
    EmptyModel,
}

/// Sentences up to `depth` that are true at `state` and decided true by the
/// agent, each wrapped as `K<agent> xi`.
pub fn local_knowledge(agent: &AgentState, state: &State, depth: usize) -> Result<BTreeSet<Formula>, EpistemicError> {
    if state.domain() != *agent.predicates() {
        return Err(EpistemicError::Domain {
            expected: agent.predicates().clone(),
            found: state.domain(),
        });
    }
    let decider = Decider::new(agent.theory());
    Ok(local_knowledge_with(&decider, agent.id(), state, depth))
}

fn local_knowledge_with(decider: &Decider<'_>, id: AgentId, state: &State, depth: usize) -> BTreeSet<Formula> {
    let Ok(sentences) = enumerate_sentences(&state.domain(), depth) else {
        return BTreeSet::new();
    };
    sentences
        .into_iter()
        .filter(|xi| state.eval(xi) == Some(true) && decider.decide(xi) == Truth3::True)
        .map(|xi| Formula::know(id, xi))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("partition classes must be nonempty")]
    EmptyClass,
    #[error("element {0} belongs to more than one class")]
    Overlap(String),
    #[error("element {0} is not covered by any class")]
    Uncovered(String),
    #[error("element {0} is not in the ground set")]
    Extraneous(String),
}

/// A family of nonempty, pairwise disjoint classes whose union is the ground set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition<T: Ord = State> {
    ground: BTreeSet<T>,
    classes: Vec<BTreeSet<T>>,
    owner: BTreeMap<T, usize>,
}

impl<T: Ord + Clone + fmt::Debug> Partition<T> {
    pub fn new(ground: BTreeSet<T>, classes: impl IntoIterator<Item = BTreeSet<T>>) -> Result<Self, PartitionError> {
        let classes: Vec<BTreeSet<T>> = classes.into_iter().collect();
        let mut seen = BTreeSet::new();
        for class in &classes {
            if class.is_empty() {
                return Err(PartitionError::EmptyClass);
            }
            for x in class {
                if !ground.contains(x) {
                    return Err(PartitionError::Extraneous(format!("{x:?}")));
                }
                if !seen.insert(x.clone()) {
                    return Err(PartitionError::Overlap(format!("{x:?}")));
                }
            }
        }
        if let Some(x) = ground.iter().find(|x| !seen.contains(*x)) {
            return Err(PartitionError::Uncovered(format!("{x:?}")));
        }
        Ok(Partition::from_parts(ground, classes))
    }

    /// Groups the ground set by a key.
    pub fn by_key<K: Ord>(ground: BTreeSet<T>, key: impl Fn(&T) -> K) -> Self {
        let mut groups: BTreeMap<K, BTreeSet<T>> = BTreeMap::new();
        for x in &ground {
            groups.entry(key(x)).or_default().insert(x.clone());
        }
        Partition::from_parts(ground, groups.into_values().collect())
    }

    pub fn discrete(ground: BTreeSet<T>) -> Self {
        let classes = ground.iter().map(|x| BTreeSet::from([x.clone()])).collect();
        Partition::from_parts(ground, classes)
    }

    fn from_parts(ground: BTreeSet<T>, mut classes: Vec<BTreeSet<T>>) -> Self {
        classes.sort();
        let owner = classes
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |x| (x.clone(), i)))
            .collect();
        Partition { ground, classes, owner }
    }

    pub fn ground(&self) -> &BTreeSet<T> {
        &self.ground
    }

    pub fn classes(&self) -> &[BTreeSet<T>] {
        &self.classes
    }

    pub fn class_of(&self, x: &T) -> Option<&BTreeSet<T>> {
        self.owner.get(x).map(|&i| &self.classes[i])
    }
}

/// Equivalence classes of the agent's contextual possible: two states share
/// a class when they agree on every literal the agent observed this tick and
/// have equal local knowledge at `depth`.
pub fn information_partition(agent: &AgentState, depth: usize) -> Result<Partition, EpistemicError> {
    let model = agent.possible().model();
    if model.is_empty() {
        return Err(EpistemicError::EmptyModel);
    }
    let decider = Decider::new(agent.theory());
    let observed: Vec<Literal> = agent.observations().iter().copied().collect();
    Ok(Partition::by_key(model.clone(), |s| {
        let agreement: Vec<Option<bool>> = observed.iter().map(|l| s.holds(*l)).collect();
        (agreement, local_knowledge_with(&decider, agent.id(), s, depth))
    }))
}

/// States admitted after a revision that were not admitted before. States
/// over different predicate sets are never identified.
pub fn adjacent_possible(before: &AgentState, after: &AgentState) -> BTreeSet<State> {
    if before.predicates() != after.predicates() {
        return after.possible().model().clone();
    }
    after.possible().model().difference(before.possible().model()).cloned().collect()
}

/// Size of [`adjacent_possible`], counted without enumerating either model:
/// over a shared predicate set it is `|M_after| - |M_after ∩ M_before|`.
pub fn adjacent_possible_size(before: &AgentState, after: &AgentState) -> u128 {
    let after_t = after.theory();
    let total = Solver::new(after_t).count_models();
    if before.predicates() != after.predicates() {
        return total;
    }
    let both = Solver::from_clauses(after_t.predicates(), after_t.clauses().chain(before.theory().clauses())).count_models();
    total - both
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub consistent: bool,
    pub coherent: bool,
    pub complete: bool,
}

/// Consistency (a model exists), coherence (no sentence entailed together
/// with its negation) and completeness (every predicate is decided, which
/// makes every sentence over the predicates decided).
pub fn check_theory(theory: &Theory) -> TheoryReport {
    let decider = Decider::new(theory);
    let consistent = decider.is_consistent();
    let complete = theory.predicates().iter().all(|p| decider.decide(&Formula::Atom(*p)).is_decided());
    TheoryReport {
        consistent,
        coherent: consistent,
        complete,
    }
}

/// True iff every member that is not itself a `K` formula for `agent` has
/// its `K<agent>` wrapping in the set.
pub fn closure_check(list: &BTreeSet<Formula>, agent: AgentId) -> bool {
    list.iter()
        .filter(|f| !matches!(f, Formula::Know(i, _) if *i == agent))
        .all(|f| list.contains(&Formula::know(agent, f.clone())))
}
