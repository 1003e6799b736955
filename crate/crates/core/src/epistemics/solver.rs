//! DPLL over clause theories: satisfiability under assumptions, entailment
//! and full model enumeration.

use std::collections::BTreeSet;

use crate::formula::PredicateId;
use crate::universe::{Clause, Literal, State, Theory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Unset,
    True,
    False,
}

impl Value {
    fn of(b: bool) -> Self {
        if b {
            Value::True
        } else {
            Value::False
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solver {
    vars: Vec<PredicateId>,
    clauses: Vec<Vec<(usize, bool)>>,
}

impl Solver {
    pub fn new(theory: &Theory) -> Self {
        Solver::from_clauses(theory.predicates(), theory.clauses())
    }

    /// Clauses must only mention predicates in `vars`.
    pub fn from_clauses<'a>(vars: &BTreeSet<PredicateId>, clauses: impl IntoIterator<Item = &'a Clause>) -> Self {
        let vars: Vec<PredicateId> = vars.iter().copied().collect();
        let clauses = clauses
            .into_iter()
            .map(|c| {
                c.literals()
                    .iter()
                    .map(|l| (vars.binary_search(&l.predicate).expect("clause predicate in domain"), l.value))
                    .collect()
            })
            .collect();
        Solver { vars, clauses }
    }

    pub fn vars(&self) -> &[PredicateId] {
        &self.vars
    }

    fn slot(&self, p: PredicateId) -> Option<usize> {
        self.vars.binary_search(&p).ok()
    }

    /// Unit propagation to fixpoint. Returns false on conflict.
    fn propagate(&self, assign: &mut [Value]) -> bool {
        loop {
            let mut changed = false;
            for clause in &self.clauses {
                let mut open = None;
                let mut open_count = 0;
                let mut satisfied = false;
                for &(v, pol) in clause {
                    match assign[v] {
                        Value::Unset => {
                            open_count += 1;
                            open = Some((v, pol));
                        }
                        x if x == Value::of(pol) => {
                            satisfied = true;
                            break;
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match (open_count, open) {
                    (0, _) => return false,
                    (1, Some((v, pol))) => {
                        assign[v] = Value::of(pol);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn branch_var(&self, assign: &[Value]) -> Option<usize> {
        self.clauses.iter().find_map(|clause| {
            let satisfied = clause.iter().any(|&(v, pol)| assign[v] == Value::of(pol));
            if satisfied {
                None
            } else {
                clause.iter().find(|&&(v, _)| assign[v] == Value::Unset).map(|&(v, _)| v)
            }
        })
    }

    fn search(&self, assign: &mut [Value]) -> bool {
        if !self.propagate(assign) {
            return false;
        }
        let Some(v) = self.branch_var(assign) else {
            return true;
        };
        for value in [Value::True, Value::False] {
            let mut next = assign.to_vec();
            next[v] = value;
            if self.search(&mut next) {
                return true;
            }
        }
        false
    }

    /// Assumptions over predicates outside the domain are unconstrained and
    /// only fail if they contradict each other.
    pub fn satisfiable(&self, assumptions: &[Literal]) -> bool {
        let mut assign = vec![Value::Unset; self.vars.len()];
        let mut outside: Vec<Literal> = Vec::new();
        for lit in assumptions {
            match self.slot(lit.predicate) {
                Some(v) => {
                    let want = Value::of(lit.value);
                    if assign[v] != Value::Unset && assign[v] != want {
                        return false;
                    }
                    assign[v] = want;
                }
                None => {
                    if outside.contains(&lit.negated()) {
                        return false;
                    }
                    outside.push(*lit);
                }
            }
        }
        self.search(&mut assign)
    }

    /// Semantic entailment of a clause.
    pub fn entails(&self, clause: &Clause) -> bool {
        let negated: Vec<Literal> = clause.literals().iter().map(|l| l.negated()).collect();
        !self.satisfiable(&negated)
    }

    /// One satisfying assignment over the whole domain, if any.
    pub fn find_model(&self) -> Option<State> {
        let mut assign = vec![Value::Unset; self.vars.len()];
        if !self.search(&mut assign) {
            return None;
        }
        Some(self.to_state(&assign))
    }

    fn to_state(&self, assign: &[Value]) -> State {
        let mut s = State::default();
        for (p, v) in self.vars.iter().zip(assign) {
            s.set(*p, *v == Value::True);
        }
        s
    }

    /// All satisfying assignments over the domain. Exponential in the number
    /// of unconstrained predicates.
    pub fn models(&self) -> BTreeSet<State> {
        let mut out = BTreeSet::new();
        let mut assign = vec![Value::Unset; self.vars.len()];
        self.enumerate(&mut assign, &mut out);
        out
    }

    /// Number of satisfying assignments over the domain, saturating at
    /// `u128::MAX`.
    pub fn count_models(&self) -> u128 {
        let mut assign = vec![Value::Unset; self.vars.len()];
        self.count(&mut assign)
    }

    fn count(&self, assign: &mut [Value]) -> u128 {
        if !self.propagate(assign) {
            return 0;
        }
        let Some(v) = self.branch_var(assign) else {
            let free = assign.iter().filter(|a| **a == Value::Unset).count() as u32;
            return 1u128.checked_shl(free).unwrap_or(u128::MAX);
        };
        let mut total = 0u128;
        for value in [Value::True, Value::False] {
            let mut next = assign.to_vec();
            next[v] = value;
            total = total.saturating_add(self.count(&mut next));
        }
        total
    }

    fn enumerate(&self, assign: &mut [Value], out: &mut BTreeSet<State>) {
        if !self.propagate(assign) {
            return;
        }
        match assign.iter().position(|v| *v == Value::Unset) {
            None => {
                out.insert(self.to_state(assign));
            }
            Some(v) => {
                for value in [Value::False, Value::True] {
                    let mut next = assign.to_vec();
                    next[v] = value;
                    self.enumerate(&mut next, out);
                }
            }
        }
    }
}
