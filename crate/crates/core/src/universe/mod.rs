//! Nature: a lazily revealed predicate sequence, the revealed fragment of the
//! grand theory, the actual-state trajectory and one novelty event per tick.

pub mod rng;
mod types;

pub use types::{Clause, ClauseError, Literal, State, StateError, Theory, TheoryError};

use std::collections::BTreeSet;

use num::rational::Ratio;
use num::{One, Zero};
use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::PredicateId;
use rng::Stream;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("novelty weights sum to {0}, expected 1")]
    WeightSum(Ratio<u64>),
    #[error("at least one initial predicate is required")]
    NoPredicates,
    #[error("clause arity must be at least 2, got {0}")]
    Arity(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("niche contains unrevealed predicates {0:?}")]
pub struct NicheError(pub Vec<PredicateId>);

/// Type 0 / 1 / 2 novelty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoveltyKind {
    Variation,
    Innovation,
    Emergence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Novelty {
    /// A revealed predicate changed value; clauses it falsified were dropped.
    Variation {
        predicate: PredicateId,
        value: bool,
        retracted: Vec<Clause>,
    },
    /// A clause satisfied by the actual state joined the revealed theory.
    /// `added` is false when the clause was already present.
    Innovation { clause: Clause, added: bool },
    /// A fresh predicate, its linking implication and its actual value.
    Emergence {
        predicate: PredicateId,
        clause: Clause,
        value: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoveltyEvent {
    pub tick: u64,
    pub novelty: Novelty,
}

impl NoveltyEvent {
    pub fn kind(&self) -> NoveltyKind {
        match self.novelty {
            Novelty::Variation { .. } => NoveltyKind::Variation,
            Novelty::Innovation { .. } => NoveltyKind::Innovation,
            Novelty::Emergence { .. } => NoveltyKind::Emergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NatureConfig {
    pub seed: u64,
    /// Probabilities of variation, innovation and emergence.
    pub weights: [Ratio<u64>; 3],
    pub initial_predicates: u32,
    pub clause_arity: u32,
}

impl NatureConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let sum: Ratio<u64> = self.weights.iter().copied().fold(Ratio::zero(), |a, b| a + b);
        if !sum.is_one() {
            return Err(ConfigError::WeightSum(sum));
        }
        if self.initial_predicates == 0 {
            return Err(ConfigError::NoPredicates);
        }
        if self.clause_arity < 2 {
            return Err(ConfigError::Arity(self.clause_arity));
        }
        Ok(())
    }
}

/// Single-owner generator; advanced only through [`UniverseGenerator::tick`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniverseGenerator {
    config: NatureConfig,
    tick: u64,
    revealed: Theory,
    trajectory: Vec<State>,
    fresh: BTreeSet<PredicateId>,
    rng: Stream,
}

impl UniverseGenerator {
    pub fn new(config: NatureConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = rng::stream(config.seed, &[rng::NATURE]);
        let predicates: BTreeSet<_> = (0..config.initial_predicates).map(PredicateId).collect();
        let mut state = State::default();
        for p in &predicates {
            state.set(*p, rng.random_bool(0.5));
        }
        Ok(UniverseGenerator {
            revealed: Theory::new(predicates.iter().copied()),
            fresh: predicates,
            trajectory: vec![state],
            tick: 0,
            config,
            rng,
        })
    }

    pub fn config(&self) -> &NatureConfig {
        &self.config
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn revealed(&self) -> &Theory {
        &self.revealed
    }

    pub fn revealed_predicates(&self) -> &BTreeSet<PredicateId> {
        self.revealed.predicates()
    }

    /// The actual state at the current tick.
    pub fn actual(&self) -> &State {
        self.trajectory.last().expect("trajectory starts with the tick-0 state")
    }

    /// One state per tick, starting at tick 0.
    pub fn trajectory(&self) -> &[State] {
        &self.trajectory
    }

    /// Predicates revealed at the current tick (all initial ones at tick 0).
    pub fn newly_revealed(&self) -> &BTreeSet<PredicateId> {
        &self.fresh
    }

    fn random_revealed(&mut self) -> PredicateId {
        let n = self.revealed.predicates().len();
        let k = self.rng.random_range(0..n);
        *self.revealed.predicates().iter().nth(k).expect("index below count")
    }

    pub fn tick(&mut self) -> NoveltyEvent {
        self.tick += 1;
        self.fresh.clear();
        let mut state = self.actual().clone();
        let novelty = match rng::pick_weighted(&mut self.rng, &self.config.weights) {
            0 => {
                let predicate = self.random_revealed();
                let value = !state.value(predicate).expect("revealed predicates are assigned");
                state.set(predicate, value);
                let retracted: Vec<Clause> = self.revealed.clauses().filter(|c| !state.satisfies(c)).cloned().collect();
                for c in &retracted {
                    self.revealed.remove_clause(c);
                }
                Novelty::Variation {
                    predicate,
                    value,
                    retracted,
                }
            }
            1 => {
                let preds: Vec<PredicateId> = self.revealed.predicates().iter().copied().collect();
                let max_len = (self.config.clause_arity as usize).min(preds.len());
                let len = self.rng.random_range(1..=max_len);
                let picked = rand::seq::index::sample(&mut self.rng, preds.len(), len);
                let mut lits: Vec<Literal> = picked.iter().map(|i| Literal::new(preds[i], self.rng.random_bool(0.5))).collect();
                if !lits.iter().any(|l| state.holds(*l) == Some(true)) {
                    let k = self.rng.random_range(0..lits.len());
                    lits[k] = lits[k].negated();
                }
                let clause = Clause::new(lits).expect("distinct predicates");
                let added = self.revealed.add_clause(clause.clone(), self.tick).expect("revealed predicates");
                Novelty::Innovation { clause, added }
            }
            _ => {
                let predicate = PredicateId(self.revealed.predicates().iter().next_back().map_or(0, |p| p.0 + 1));
                let value = self.rng.random_bool(0.5);
                let other = self.random_revealed();
                let forward = self.rng.random_bool(0.5);
                state.set(predicate, value);
                let (a, b) = if forward { (predicate, other) } else { (other, predicate) };
                let mut clause = Clause::implication(a, b);
                if !state.satisfies(&clause) {
                    clause = Clause::implication(b, a);
                }
                self.revealed.add_predicate(predicate);
                self.revealed
                    .add_clause(clause.clone(), self.tick)
                    .expect("predicate just revealed");
                self.fresh.insert(predicate);
                Novelty::Emergence { predicate, clause, value }
            }
        };
        debug_assert!(self.revealed.is_satisfied_by(&state));
        self.trajectory.push(state);
        NoveltyEvent { tick: self.tick, novelty }
    }

    /// What an agent sees this tick: every niche predicate revealed at this
    /// tick, plus each other revealed predicate independently with
    /// probability `visibility`. The draw for a given `(seed, agent, tick)`
    /// is fixed.
    pub fn observe(&self, niche: &BTreeSet<PredicateId>, visibility: Ratio<u64>, agent_seed: u64) -> Result<BTreeSet<Literal>, NicheError> {
        let unknown: Vec<PredicateId> = niche.difference(self.revealed.predicates()).copied().collect();
        if !unknown.is_empty() {
            return Err(NicheError(unknown));
        }
        let mut rng = rng::stream(self.config.seed, &[rng::OBSERVE, agent_seed, self.tick]);
        let actual = self.actual();
        let mut seen = BTreeSet::new();
        for p in self.revealed.predicates() {
            let drawn = rng::chance(&mut rng, visibility);
            if drawn || (niche.contains(p) && self.fresh.contains(p)) {
                seen.insert(Literal::new(*p, actual.value(*p).expect("revealed predicates are assigned")));
            }
        }
        Ok(seen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64, k: u32, w: [(u64, u64); 3]) -> NatureConfig {
        NatureConfig {
            seed,
            weights: w.map(|(n, d)| Ratio::new(n, d)),
            initial_predicates: k,
            clause_arity: 2,
        }
    }

    fn preds(ids: &[u32]) -> BTreeSet<PredicateId> {
        ids.iter().map(|&i| PredicateId(i)).collect()
    }

    #[test]
    fn construction_reveals_initial_predicates() {
        let g = UniverseGenerator::new(config(7, 3, [(1, 2), (3, 10), (1, 5)])).unwrap();
        assert_eq!(g.revealed_predicates(), &preds(&[0, 1, 2]));
        assert_eq!(g.revealed().clause_count(), 0);
        assert_eq!(g.actual().len(), 3);
        let again = UniverseGenerator::new(config(7, 3, [(1, 2), (3, 10), (1, 5)])).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(matches!(
            UniverseGenerator::new(config(7, 3, [(1, 2), (3, 10), (1, 10)])),
            Err(ConfigError::WeightSum(_))
        ));
        assert_eq!(
            UniverseGenerator::new(config(7, 0, [(1, 2), (3, 10), (1, 5)])),
            Err(ConfigError::NoPredicates)
        );
        let mut c = config(7, 3, [(1, 2), (3, 10), (1, 5)]);
        c.clause_arity = 1;
        assert_eq!(UniverseGenerator::new(c), Err(ConfigError::Arity(1)));
    }

    #[test]
    fn emergence_only_reveals_one_predicate_per_tick() {
        let mut g = UniverseGenerator::new(config(7, 3, [(0, 1), (0, 1), (1, 1)])).unwrap();
        for t in 1..=10 {
            let before = g.revealed_predicates().len();
            let ev = g.tick();
            assert_eq!(ev.kind(), NoveltyKind::Emergence);
            let Novelty::Emergence { predicate, .. } = ev.novelty else {
                unreachable!()
            };
            assert_eq!(predicate, PredicateId(2 + t));
            assert_eq!(g.revealed_predicates().len(), before + 1);
            assert_eq!(g.newly_revealed(), &preds(&[2 + t]));
        }
        assert_eq!(g.revealed_predicates().len(), 13);
    }

    #[test]
    fn actual_state_satisfies_revealed_theory_every_tick() {
        for seed in 0..20 {
            let mut g = UniverseGenerator::new(config(seed, 3, [(1, 2), (3, 10), (1, 5)])).unwrap();
            for _ in 0..60 {
                g.tick();
                let actual = g.actual();
                for c in g.revealed().clauses() {
                    let sat = c.literals().iter().any(|l| actual.value(l.predicate) == Some(l.value));
                    assert!(sat, "seed {seed} tick {}: {c} falsified", g.tick_count());
                }
                assert_eq!(actual.domain(), *g.revealed_predicates());
            }
            assert_eq!(g.trajectory().len(), 61);
        }
    }

    #[test]
    fn observation_extremes() {
        let mut g = UniverseGenerator::new(config(3, 4, [(1, 2), (3, 10), (1, 5)])).unwrap();
        g.tick();
        let all = g.observe(&BTreeSet::new(), Ratio::new(1, 1), 9).unwrap();
        let expected: BTreeSet<Literal> = g.actual().literals().collect();
        assert_eq!(all, expected);
        let none = g.observe(&BTreeSet::new(), Ratio::new(0, 1), 9).unwrap();
        assert!(none.is_empty());
        let a = g.observe(&preds(&[0]), Ratio::new(1, 2), 9).unwrap();
        assert_eq!(a, g.observe(&preds(&[0]), Ratio::new(1, 2), 9).unwrap());
        assert_eq!(
            g.observe(&preds(&[40]), Ratio::new(1, 2), 9),
            Err(NicheError(vec![PredicateId(40)]))
        );
    }

    #[test]
    fn fresh_niche_predicates_are_always_seen() {
        let mut g = UniverseGenerator::new(config(5, 2, [(0, 1), (0, 1), (1, 1)])).unwrap();
        g.tick();
        let seen = g.observe(&preds(&[0, 2]), Ratio::new(0, 1), 1).unwrap();
        assert_eq!(seen.len(), 1);
        assert_eq!(seen.iter().next().unwrap().predicate, PredicateId(2));
    }
}
