//! Theory revision under novelty.
//!
//! Observations over predicates the agent has never seen extend its language
//! (Case 2); observations that contradict the theory force clauses out until
//! the theory and the observations are jointly satisfiable (Case 1). Both
//! cases end with the observed literals added as unit clauses.
//!
//! Repairs are generated as candidate theories and ranked by a strategy:
//!
//! * `Deductive` adopts nothing beyond what was observed. Candidates are
//!   ranked by retraction count, then by clause age (newest retracted first).
//! * `Random`, `Heuristic` and `Aesthetic` additionally adopt one unforced
//!   bridging option linking a newly seen predicate `q` with a previously
//!   known `p`: `q -> p`, `p -> q`, or both. Random shuffles the candidates
//!   with its seed; Heuristic prefers the smallest total clause length;
//!   Aesthetic prefers the largest [`symmetry_score`].
//!
//! Ties are broken by (clause age, rendered text) so every ranking is
//! deterministic.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::epistemics::solver::Solver;
use crate::epistemics::AgentState;
use crate::formula::PredicateId;
use crate::universe::{rng, Clause, Literal, Theory};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[default]
    Deductive,
    Random,
    Heuristic,
    Aesthetic,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Deductive,
        StrategyKind::Random,
        StrategyKind::Heuristic,
        StrategyKind::Aesthetic,
    ];

    pub fn is_nonlogical(self) -> bool {
        self != StrategyKind::Deductive
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Deductive => "deductive",
            StrategyKind::Random => "random",
            StrategyKind::Heuristic => "heuristic",
            StrategyKind::Aesthetic => "aesthetic",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionStrategy {
    pub kind: StrategyKind,
    pub seed: u64,
}

impl RevisionStrategy {
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        RevisionStrategy { kind, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionClass {
    Essential,
    Inessential,
    NotAnExtension,
}

/// Largest number of non-forced clauses tried together before falling back
/// to dropping every old clause.
const MAX_EXTRA_RETRACTIONS: usize = 3;

/// A repaired theory and how it was obtained from the old one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub theory: Theory,
    pub retracted: Vec<Clause>,
    pub bridging: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionOutcome {
    pub agent: AgentState,
    pub retracted: Vec<Clause>,
    pub added: Vec<Clause>,
    pub new_predicates: BTreeSet<PredicateId>,
    /// Some observation contradicted the old theory.
    pub contradicted: bool,
}

impl RevisionOutcome {
    pub fn changed(&self) -> bool {
        !self.retracted.is_empty() || !self.added.is_empty() || !self.new_predicates.is_empty()
    }
}

fn consistent(theory: &Theory) -> bool {
    Solver::new(theory).find_model().is_some()
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Number of predicate transpositions `(a b)` that map the clause set onto
/// itself. Only transpositions of predicates in the theory are counted; the
/// identity is not.
pub fn symmetry_score(theory: &Theory) -> usize {
    let mut signature: BTreeMap<PredicateId, (usize, usize)> = theory.predicates().iter().map(|p| (*p, (0, 0))).collect();
    for c in theory.clauses() {
        for l in c.literals() {
            let e = signature.get_mut(&l.predicate).expect("clause predicates are in the theory");
            if l.value {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    let preds: Vec<PredicateId> = theory.predicates().iter().copied().collect();
    let mut count = 0;
    for (i, &a) in preds.iter().enumerate() {
        for &b in &preds[i + 1..] {
            if signature[&a] != signature[&b] {
                continue;
            }
            let swap = |p: PredicateId| {
                if p == a {
                    b
                } else if p == b {
                    a
                } else {
                    p
                }
            };
            if theory.clauses().all(|c| theory.contains(&c.map_predicates(swap))) {
                count += 1;
            }
        }
    }
    count
}

fn age_key(old: &Theory, retracted: &[Clause]) -> Vec<Reverse<u64>> {
    let mut ages: Vec<Reverse<u64>> = retracted.iter().map(|c| Reverse(old.age(c).unwrap_or(0))).collect();
    ages.sort();
    ages
}

/// Ranked candidate repairs for `agent` given the literals in `conflict`.
/// At most `budget` candidates are returned; every one is consistent and
/// contains the observed literals as unit clauses.
pub fn rank_candidates(agent: &AgentState, conflict: &BTreeSet<Literal>, strategy: RevisionStrategy, budget: usize) -> Vec<Candidate> {
    let old = agent.theory();
    let tick = agent.tick();
    let new_predicates: BTreeSet<PredicateId> = conflict
        .iter()
        .map(|l| l.predicate)
        .filter(|p| !old.predicates().contains(p))
        .collect();

    let mut base = old.clone();
    for p in &new_predicates {
        base.add_predicate(*p);
    }
    let units: Vec<Clause> = conflict.iter().map(|l| Clause::unit(*l)).collect();
    let with_units = |t: &Theory| {
        let mut t = t.clone();
        for u in &units {
            t.add_clause(u.clone(), tick).expect("observed predicates are in the theory");
        }
        t
    };

    let forced: Vec<Clause> = old
        .clauses()
        .filter(|c| c.is_unit() && conflict.contains(&c.literals()[0].negated()))
        .cloned()
        .collect();
    let mut reduced = base.clone();
    for c in &forced {
        reduced.remove_clause(c);
    }
    let rest: Vec<Clause> = reduced.clauses().cloned().collect();

    let mut retraction_sets: Vec<Vec<Clause>> = Vec::new();
    if consistent(&with_units(&reduced)) {
        retraction_sets.push(forced.clone());
    } else {
        for k in 1..=MAX_EXTRA_RETRACTIONS.min(rest.len()) {
            for subset in k_subsets(rest.len(), k) {
                let mut t = reduced.clone();
                for &i in &subset {
                    t.remove_clause(&rest[i]);
                }
                if consistent(&with_units(&t)) {
                    let mut set = forced.clone();
                    set.extend(subset.iter().map(|&i| rest[i].clone()));
                    retraction_sets.push(set);
                }
            }
            if !retraction_sets.is_empty() {
                break;
            }
        }
        if retraction_sets.is_empty() {
            retraction_sets.push(old.clauses().cloned().collect());
        }
    }

    let old_predicates: Vec<PredicateId> = old.predicates().iter().copied().collect();
    let mut candidates = Vec::new();
    for retracted in retraction_sets {
        let mut repaired = base.clone();
        for c in &retracted {
            repaired.remove_clause(c);
        }
        let repaired = with_units(&repaired);
        let mut bridged = Vec::new();
        if strategy.kind.is_nonlogical() {
            for q in &new_predicates {
                for p in &old_predicates {
                    let forward = Clause::implication(*q, *p);
                    let backward = Clause::implication(*p, *q);
                    for option in [
                        vec![forward.clone()],
                        vec![backward.clone()],
                        vec![forward.clone(), backward.clone()],
                    ] {
                        if option.iter().all(|c| repaired.contains(c)) {
                            continue;
                        }
                        let mut t = repaired.clone();
                        for c in &option {
                            t.add_clause(c.clone(), tick).expect("bridging predicates are in the theory");
                        }
                        if consistent(&t) {
                            bridged.push(Candidate {
                                theory: t,
                                retracted: retracted.clone(),
                                bridging: option,
                            });
                        }
                    }
                }
            }
        }
        if bridged.is_empty() {
            candidates.push(Candidate {
                theory: repaired,
                retracted,
                bridging: Vec::new(),
            });
        } else {
            candidates.extend(bridged);
        }
    }

    let text = |c: &Candidate| c.theory.render();
    match strategy.kind {
        StrategyKind::Deductive => {
            candidates.sort_by_cached_key(|c| (c.retracted.len(), age_key(old, &c.retracted), text(c)));
        }
        StrategyKind::Heuristic => {
            candidates.sort_by_cached_key(|c| (c.theory.size(), age_key(old, &c.retracted), text(c)));
        }
        StrategyKind::Aesthetic => {
            candidates.sort_by_cached_key(|c| (Reverse(symmetry_score(&c.theory)), age_key(old, &c.retracted), text(c)));
        }
        StrategyKind::Random => {
            candidates.sort_by_cached_key(text);
            let mut rng = rng::stream(strategy.seed, &[rng::STRATEGY, tick, u64::from(agent.id())]);
            candidates.shuffle(&mut rng);
        }
    }
    candidates.truncate(budget.max(1));
    candidates
}

/// Ranked candidate theories; see [`rank_candidates`].
pub fn propose_revisions(agent: &AgentState, conflict: &BTreeSet<Literal>, strategy: RevisionStrategy, budget: usize) -> Vec<Theory> {
    rank_candidates(agent, conflict, strategy, budget)
        .into_iter()
        .map(|c| c.theory)
        .collect()
}

/// Revises and reports what changed.
pub fn revise_detailed(agent: &AgentState, observations: &BTreeSet<Literal>, strategy: RevisionStrategy) -> RevisionOutcome {
    let old = agent.theory();
    let best = rank_candidates(agent, observations, strategy, 1)
        .into_iter()
        .next()
        .expect("at least one candidate");
    let new_predicates: BTreeSet<PredicateId> = best.theory.predicates().difference(old.predicates()).copied().collect();
    let retracted: Vec<Clause> = old.clauses().filter(|c| !best.theory.contains(c)).cloned().collect();
    let added: Vec<Clause> = best.theory.clauses().filter(|c| !old.contains(c)).cloned().collect();
    let contradicted = !consistent(&{
        let mut t = old.clone();
        for l in observations {
            t.add_predicate(l.predicate);
            // duplicates and contradictions are both fine here
            let _ = t.add_clause(Clause::unit(*l), agent.tick());
        }
        t
    });
    let next = agent
        .clone()
        .with_theory(best.theory)
        .with_observations(observations.clone())
        .expect("observed predicates were added");
    RevisionOutcome {
        agent: next,
        retracted,
        added,
        new_predicates,
        contradicted,
    }
}

/// Restores consistency with the observations and adopts them, letting the
/// strategy choose among repairs.
pub fn revise(agent: &AgentState, observations: &BTreeSet<Literal>, strategy: RevisionStrategy) -> AgentState {
    revise_detailed(agent, observations, strategy).agent
}

/// Compares a revised theory with its predecessor.
///
/// * `NotAnExtension`: the new theory drops predicates or fails to entail
///   some clause of the old one (so some old consequence is lost).
/// * `Essential`: it adds predicates, or a clause the old theory does not
///   entail.
/// * `Inessential`: same predicates and every new clause already follows.
pub fn classify_extension(old: &Theory, new: &Theory) -> ExtensionClass {
    if !old.predicates().is_subset(new.predicates()) {
        return ExtensionClass::NotAnExtension;
    }
    let new_solver = Solver::new(new);
    if old.clauses().any(|c| !new_solver.entails(c)) {
        return ExtensionClass::NotAnExtension;
    }
    if new.predicates() != old.predicates() {
        return ExtensionClass::Essential;
    }
    let old_solver = Solver::new(old);
    if new.clauses().any(|c| !old_solver.entails(c)) {
        ExtensionClass::Essential
    } else {
        ExtensionClass::Inessential
    }
}
