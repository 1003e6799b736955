//! Semantic check of the S5 schemes for the knowledge operators of a frame.
//!
//! Every propositional formula up to a depth over at most two shared atoms is
//! reduced to its extension; each scheme is then checked pointwise at every
//! state. [`validate_relations`] accepts arbitrary accessibility relations so
//! that non-partition structures can be fed through the same checker.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{FrameError, SharedFrame};
use crate::formula::{enumerate_sentences, AgentId, Formula};
use crate::universe::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Distributivity,
    Reflection,
    PositiveIntrospection,
    NegativeIntrospection,
    Necessitation,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Distributivity,
        Scheme::Reflection,
        Scheme::PositiveIntrospection,
        Scheme::NegativeIntrospection,
        Scheme::Necessitation,
    ];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scheme::Distributivity => "distributivity",
            Scheme::Reflection => "reflection",
            Scheme::PositiveIntrospection => "positive_introspection",
            Scheme::NegativeIntrospection => "negative_introspection",
            Scheme::Necessitation => "necessitation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub agent: AgentId,
    /// The instance of the scheme that fails, e.g. `(K1 p0 -> K1 K1 p0)`.
    pub instance: String,
    /// Bit string of the state where it fails.
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct S5Report {
    pub formulas: usize,
    pub states: usize,
    pub schemes: BTreeMap<Scheme, Option<Counterexample>>,
}

impl S5Report {
    pub fn all_hold(&self) -> bool {
        self.schemes.values().all(Option::is_none)
    }

    pub fn failed(&self) -> impl Iterator<Item = (Scheme, &Counterexample)> {
        self.schemes.iter().filter_map(|(s, c)| c.as_ref().map(|c| (*s, c)))
    }
}

/// Checks the five schemes on a closed-mode frame.
pub fn validate_s5(frame: &SharedFrame, depth: usize) -> Result<S5Report, FrameError> {
    if !frame.is_closed() {
        return Err(FrameError::NotClosedMode);
    }
    let atoms: BTreeSet<_> = frame.shared_predicates().iter().take(2).copied().collect();
    let formulas = enumerate_sentences(&atoms, depth).map_err(|e| FrameError::Unsupported(e.to_string()))?;
    let states: Vec<State> = frame.ground().iter().cloned().collect();
    let index: BTreeMap<&State, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let relations = frame
        .partitions()
        .iter()
        .map(|(id, p)| {
            let access = states
                .iter()
                .map(|s| p.class_of(s).expect("partition covers ground").iter().map(|t| index[t]).collect())
                .collect();
            (*id, access)
        })
        .collect();
    Ok(validate_relations(&states, &relations, &formulas))
}

type Ext = Vec<bool>;

fn know(access: &[Vec<usize>], e: &Ext) -> Ext {
    access.iter().map(|succ| succ.iter().all(|&v| e[v])).collect()
}

fn negate(e: &Ext) -> Ext {
    e.iter().map(|b| !b).collect()
}

/// Checks the schemes for arbitrary accessibility relations: `relations[i][w]`
/// lists the states agent `i` considers possible at state `w`.
pub fn validate_relations(states: &[State], relations: &BTreeMap<AgentId, Vec<Vec<usize>>>, formulas: &[Formula]) -> S5Report {
    // one representative formula per distinct extension keeps pairwise
    // distributivity small
    let mut reps: BTreeMap<Ext, &Formula> = BTreeMap::new();
    for f in formulas {
        let ext: Ext = states.iter().map(|s| s.eval(f) == Some(true)).collect();
        reps.entry(ext).or_insert(f);
    }
    let reps: Vec<(Ext, &Formula)> = reps.into_iter().collect();
    let mut schemes: BTreeMap<Scheme, Option<Counterexample>> = Scheme::ALL.iter().map(|s| (*s, None)).collect();
    let mut record = |scheme: Scheme, agent: AgentId, instance: String, w: usize| {
        let slot = schemes.get_mut(&scheme).expect("all schemes present");
        if slot.is_none() {
            *slot = Some(Counterexample {
                agent,
                instance,
                state: states[w].bits(),
            });
        }
    };
    for (&agent, access) in relations {
        let k = |f: &Formula| Formula::know(agent, f.clone());
        let knows: Vec<Ext> = reps.iter().map(|(e, _)| know(access, e)).collect();
        for ((e, f), ke) in reps.iter().zip(&knows) {
            let kke = know(access, ke);
            let kne = know(access, &negate(ke));
            for w in 0..states.len() {
                if ke[w] && !e[w] {
                    record(Scheme::Reflection, agent, Formula::implies(k(f), (*f).clone()).to_string(), w);
                }
                if ke[w] && !kke[w] {
                    record(
                        Scheme::PositiveIntrospection,
                        agent,
                        Formula::implies(k(f), k(&k(f))).to_string(),
                        w,
                    );
                }
                if !ke[w] && !kne[w] {
                    let nk = Formula::not(k(f));
                    record(
                        Scheme::NegativeIntrospection,
                        agent,
                        Formula::implies(nk.clone(), k(&nk)).to_string(),
                        w,
                    );
                }
            }
            if e.iter().all(|b| *b) {
                if let Some(w) = ke.iter().position(|b| !b) {
                    record(Scheme::Necessitation, agent, k(f).to_string(), w);
                }
            }
        }
        for (i, (e, f)) in reps.iter().enumerate() {
            for (j, (g_ext, g)) in reps.iter().enumerate() {
                if i == j {
                    continue;
                }
                let imp: Ext = e.iter().zip(g_ext).map(|(a, b)| !a || *b).collect();
                let k_imp = know(access, &imp);
                if let Some(w) = (0..states.len()).find(|&w| k_imp[w] && knows[i][w] && !knows[j][w]) {
                    let premise = Formula::and(k(&Formula::implies((*f).clone(), (*g).clone())), k(f));
                    record(Scheme::Distributivity, agent, Formula::implies(premise, k(g)).to_string(), w);
                }
            }
        }
    }
    S5Report {
        formulas: formulas.len(),
        states: states.len(),
        schemes,
    }
}
