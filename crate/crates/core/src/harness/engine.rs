//! The deterministic run loop.

use std::collections::BTreeSet;

use num::rational::Ratio;
use num::Zero;

use super::scenario::{Rational, Scenario};
use super::trace::{EventBody, Metrics, Trace};
use crate::epistemics::{adjacent_possible_size, AgentState, Decider};
use crate::formula::{enumerate_sentences, Formula, PredicateId};
use crate::multiagent::jaccard;
use crate::revision::{classify_extension, revise_detailed, RevisionStrategy};
use crate::universe::rng::{derive_seed, REPLICATE};
use crate::universe::{ConfigError, NatureConfig, Novelty, State, Theory, UniverseGenerator};

/// Decided-correct tally of a theory against the actual state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub correct: u64,
    pub total: u64,
    pub undecided_true: u64,
}

impl Coverage {
    pub fn ratio(&self) -> Ratio<u64> {
        if self.total == 0 {
            Ratio::zero()
        } else {
            Ratio::new(self.correct, self.total)
        }
    }
}

/// A sentence counts as covered when the theory decides it and the decision
/// matches its value at `actual`.
pub fn coverage(theory: &Theory, actual: &State, sentences: &[Formula]) -> Coverage {
    let decider = Decider::new(theory);
    let mut c = Coverage {
        correct: 0,
        total: sentences.len() as u64,
        undecided_true: 0,
    };
    for xi in sentences {
        let truth = actual.eval(xi).expect("sentences range over revealed predicates");
        match decider.decide(xi).as_bool() {
            Some(v) if v == truth => c.correct += 1,
            Some(_) => {}
            None if truth => c.undecided_true += 1,
            None => {}
        }
    }
    c
}

/// Sentences over the revealed predicates, regenerated only when the
/// predicate set changes.
#[derive(Debug, Default)]
pub struct SentenceCache {
    predicates: BTreeSet<PredicateId>,
    depth: usize,
    sentences: Vec<Formula>,
}

impl SentenceCache {
    pub fn get(&mut self, predicates: &BTreeSet<PredicateId>, depth: usize) -> &[Formula] {
        if self.sentences.is_empty() || self.predicates != *predicates || self.depth != depth {
            self.sentences = enumerate_sentences(predicates, depth).unwrap_or_default();
            self.predicates = predicates.clone();
            self.depth = depth;
        }
        &self.sentences
    }
}

#[derive(Debug, Clone)]
struct Slot {
    niche: BTreeSet<PredicateId>,
    visibility: Ratio<u64>,
    strategy: RevisionStrategy,
    state: AgentState,
}

/// One replicate of a scenario, advanced a tick at a time.
#[derive(Debug)]
pub struct Engine {
    depth: usize,
    universe: UniverseGenerator,
    slots: Vec<Slot>,
    trace: Trace,
    sentences: SentenceCache,
}

impl Engine {
    pub fn new(scenario: &Scenario, replicate: u64) -> Result<Self, ConfigError> {
        let nature = NatureConfig {
            seed: derive_seed(scenario.nature.seed, &[REPLICATE, replicate]),
            ..scenario.nature.config()
        };
        let universe = UniverseGenerator::new(nature)?;
        let slots = scenario
            .agents
            .iter()
            .map(|a| {
                let niche = a.niche(&scenario.nature);
                let known = niche.intersection(universe.revealed_predicates()).copied();
                let strategy = a.strategy();
                Slot {
                    state: AgentState::new(a.id, Theory::new(known)),
                    niche,
                    visibility: a.visibility.0,
                    strategy: RevisionStrategy::new(strategy.kind, derive_seed(strategy.seed, &[REPLICATE, replicate])),
                }
            })
            .collect();
        Ok(Engine {
            depth: scenario.run.depth,
            universe,
            slots,
            trace: Trace::default(),
            sentences: SentenceCache::default(),
        })
    }

    pub fn universe(&self) -> &UniverseGenerator {
        &self.universe
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentState> {
        self.slots.iter().map(|s| &s.state)
    }

    pub fn agent_states(&self) -> Vec<AgentState> {
        self.agents().cloned().collect()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Nature moves, then every agent observes and revises, then metrics are
    /// recorded against the pre- and post-revision snapshots.
    pub fn step(&mut self) {
        let event = self.universe.tick();
        let t = event.tick;
        let body = match event.novelty {
            Novelty::Emergence { predicate, clause, value } => EventBody::Reveal { predicate, value, clause },
            Novelty::Innovation { clause, added } => EventBody::ClauseAdded { clause, added },
            Novelty::Variation {
                predicate,
                value,
                retracted,
            } => EventBody::Variation {
                predicate,
                value,
                retracted,
            },
        };
        self.trace.push(t, None, body);

        let mut befores = Vec::with_capacity(self.slots.len());
        let mut classes = Vec::with_capacity(self.slots.len());
        for slot in &mut self.slots {
            let id = slot.state.id();
            let niche: BTreeSet<PredicateId> = slot.niche.intersection(self.universe.revealed_predicates()).copied().collect();
            let observed = self
                .universe
                .observe(&niche, slot.visibility, id as u64)
                .expect("niche restricted to revealed predicates");
            self.trace.push(
                t,
                Some(id),
                EventBody::Observation {
                    literals: observed.iter().copied().collect(),
                },
            );
            let before = slot.state.clone().at_tick(t);
            let outcome = revise_detailed(&before, &observed, slot.strategy);
            let class = classify_extension(before.theory(), outcome.agent.theory());
            self.trace.push(
                t,
                Some(id),
                EventBody::Revision {
                    old_hash: before.theory().hash_hex(),
                    new_hash: outcome.agent.theory().hash_hex(),
                    class,
                    retracted: outcome.retracted,
                    added: outcome.added,
                    new_predicates: outcome.new_predicates,
                },
            );
            slot.state = outcome.agent;
            befores.push(before);
            classes.push(class);
        }

        let sentences = self.sentences.get(self.universe.revealed_predicates(), self.depth);
        let actual = self.universe.actual();
        for (i, slot) in self.slots.iter().enumerate() {
            let c = coverage(slot.state.theory(), actual, sentences);
            let others: Vec<Ratio<u64>> = self
                .slots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| jaccard(slot.state.predicates(), o.state.predicates()))
                .collect();
            let disjointness = (!others.is_empty()).then(|| {
                let sum = others.iter().fold(Ratio::zero(), |a, b| a + b);
                Rational(sum / Ratio::from_integer(others.len() as u64))
            });
            let adjacent = adjacent_possible_size(&befores[i], &slot.state).min(u64::MAX as u128) as u64;
            let metrics = Metrics {
                coverage: Rational(c.ratio()),
                sentences: c.total,
                undecided_true: c.undecided_true,
                disjointness,
                adjacent,
                class: classes[i],
            };
            self.trace.push(t, Some(slot.state.id()), EventBody::Metrics(metrics));
        }
    }
}

/// Runs every tick of one replicate.
pub fn run(scenario: &Scenario, replicate: u64) -> Result<Trace, ConfigError> {
    let mut engine = Engine::new(scenario, replicate)?;
    for _ in 0..scenario.run.ticks {
        engine.step();
    }
    Ok(engine.into_trace())
}
