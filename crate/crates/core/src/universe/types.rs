use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::formula::{Formula, PredicateId};

/// A predicate together with a truth value: `p3` or `~p3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: PredicateId,
    pub value: bool,
}

impl Literal {
    pub fn new(predicate: PredicateId, value: bool) -> Self {
        Literal { predicate, value }
    }

    pub fn pos(index: u32) -> Self {
        Literal::new(PredicateId(index), true)
    }

    pub fn neg(index: u32) -> Self {
        Literal::new(PredicateId(index), false)
    }

    pub fn negated(self) -> Self {
        Literal::new(self.predicate, !self.value)
    }

    pub fn to_formula(self) -> Formula {
        let atom = Formula::Atom(self.predicate);
        if self.value {
            atom
        } else {
            Formula::not(atom)
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value {
            write!(f, "{}", self.predicate)
        } else {
            write!(f, "~{}", self.predicate)
        }
    }
}

impl Serialize for Literal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let (value, rest) = match text.strip_prefix('~') {
            Some(rest) => (false, rest),
            None => (true, text.as_str()),
        };
        rest.strip_prefix('p')
            .and_then(|n| n.parse().ok())
            .map(|n| Literal::new(PredicateId(n), value))
            .ok_or_else(|| serde::de::Error::custom(format!("bad literal {text:?}")))
    }
}

/// A total truth assignment over a finite predicate set. Each predicate in
/// the domain has exactly one value, so `p` and `~p` never both hold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct State {
    assignment: BTreeMap<PredicateId, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("bit string {bits:?} has length {len}, expected {expected}")]
    Length { bits: String, len: usize, expected: usize },
    #[error("bit string {0:?} may only contain 0 and 1")]
    Digit(String),
}

impl State {
    pub fn new(assignment: BTreeMap<PredicateId, bool>) -> Self {
        State { assignment }
    }

    /// Bit `k` of `bits` (least significant first) is the value of the
    /// `k`-th predicate of `domain` in ascending order.
    pub fn from_index(domain: &[PredicateId], bits: u64) -> Self {
        State {
            assignment: domain.iter().enumerate().map(|(k, p)| (*p, bits >> k & 1 == 1)).collect(),
        }
    }

    /// Parses a `"101"`-style string, character `k` giving the value of the
    /// `k`-th predicate of `domain`.
    pub fn from_bits(domain: &[PredicateId], bits: &str) -> Result<Self, StateError> {
        if bits.len() != domain.len() {
            return Err(StateError::Length {
                bits: bits.to_string(),
                len: bits.len(),
                expected: domain.len(),
            });
        }
        let mut assignment = BTreeMap::new();
        for (p, c) in domain.iter().zip(bits.chars()) {
            let v = match c {
                '0' => false,
                '1' => true,
                _ => return Err(StateError::Digit(bits.to_string())),
            };
            assignment.insert(*p, v);
        }
        Ok(State { assignment })
    }

    /// Every assignment over `domain`, in ascending bit-string order.
    pub fn all(domain: &BTreeSet<PredicateId>) -> Vec<State> {
        let domain: Vec<_> = domain.iter().copied().collect();
        let mut states: Vec<State> = (0..1u64 << domain.len()).map(|b| State::from_index(&domain, b)).collect();
        states.sort();
        states
    }

    pub fn bits(&self) -> String {
        self.assignment.values().map(|v| if *v { '1' } else { '0' }).collect()
    }

    pub fn value(&self, p: PredicateId) -> Option<bool> {
        self.assignment.get(&p).copied()
    }

    pub fn set(&mut self, p: PredicateId, value: bool) {
        self.assignment.insert(p, value);
    }

    pub fn domain(&self) -> BTreeSet<PredicateId> {
        self.assignment.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.assignment.iter().map(|(p, v)| Literal::new(*p, *v))
    }

    pub fn holds(&self, lit: Literal) -> Option<bool> {
        self.value(lit.predicate).map(|v| v == lit.value)
    }

    pub fn satisfies(&self, clause: &Clause) -> bool {
        clause.literals().iter().any(|l| self.holds(*l) == Some(true))
    }

    /// Evaluates a propositional formula; `None` if it mentions predicates
    /// outside the domain or epistemic operators.
    pub fn eval(&self, f: &Formula) -> Option<bool> {
        f.eval(&|p| self.value(p))
    }

    /// Restriction to the predicates of `onto` that lie in the domain.
    pub fn project(&self, onto: &BTreeSet<PredicateId>) -> State {
        State {
            assignment: self
                .assignment
                .iter()
                .filter(|(p, _)| onto.contains(p))
                .map(|(p, v)| (*p, *v))
                .collect(),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

/// A nonempty disjunction of literals with no complementary pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClauseError {
    #[error("a clause needs at least one literal")]
    Empty,
    #[error("predicate {0} occurs with both polarities")]
    Complementary(PredicateId),
}

impl Clause {
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self, ClauseError> {
        let mut literals: Vec<Literal> = literals.into_iter().collect();
        literals.sort();
        literals.dedup();
        if literals.is_empty() {
            return Err(ClauseError::Empty);
        }
        if let Some(w) = literals.windows(2).find(|w| w[0].predicate == w[1].predicate) {
            return Err(ClauseError::Complementary(w[0].predicate));
        }
        Ok(Clause { literals })
    }

    pub fn unit(lit: Literal) -> Self {
        Clause { literals: vec![lit] }
    }

    /// `from -> to`, i.e. `~from | to`. `from` and `to` must differ.
    pub fn implication(from: PredicateId, to: PredicateId) -> Self {
        Clause::new([Literal::new(from, false), Literal::new(to, true)]).expect("distinct predicates")
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.literals.len() == 1
    }

    pub fn predicates(&self) -> impl Iterator<Item = PredicateId> + '_ {
        self.literals.iter().map(|l| l.predicate)
    }

    pub fn to_formula(&self) -> Formula {
        let mut it = self.literals.iter();
        let first = it.next().expect("clauses are nonempty").to_formula();
        it.fold(first, |acc, l| Formula::or(acc, l.to_formula()))
    }

    /// Image of the clause under a predicate renaming.
    pub fn map_predicates(&self, rename: impl Fn(PredicateId) -> PredicateId) -> Clause {
        let mut literals: Vec<Literal> = self.literals.iter().map(|l| Literal::new(rename(l.predicate), l.value)).collect();
        literals.sort();
        Clause { literals }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

impl Serialize for Clause {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Clause {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let text = String::deserialize(d)?;
        let f = crate::formula::parse(&text).map_err(D::Error::custom)?;
        let mut lits = Vec::new();
        collect_disjuncts(&f, &mut lits).ok_or_else(|| D::Error::custom(format!("{text:?} is not a clause")))?;
        Clause::new(lits).map_err(D::Error::custom)
    }
}

fn collect_disjuncts(f: &Formula, out: &mut Vec<Literal>) -> Option<()> {
    match f {
        Formula::Atom(p) => out.push(Literal::new(*p, true)),
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(p) => out.push(Literal::new(*p, false)),
            _ => return None,
        },
        Formula::Or(a, b) => {
            collect_disjuncts(a, out)?;
            collect_disjuncts(b, out)?;
        }
        Formula::Implies(a, b) => {
            let mut premise = Vec::new();
            collect_disjuncts(a, &mut premise)?;
            let [lit] = premise[..] else { return None };
            out.push(lit.negated());
            collect_disjuncts(b, out)?;
        }
        _ => return None,
    }
    Some(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("clause {clause} mentions {predicate}, which is outside the theory's predicates")]
pub struct TheoryError {
    pub clause: String,
    pub predicate: PredicateId,
}

/// A finite clause set over a predicate set. Each clause remembers the age
/// (tick) at which it was adopted; ages take no part in equality or hashing.
#[derive(Debug, Clone, Default)]
pub struct Theory {
    predicates: BTreeSet<PredicateId>,
    clauses: BTreeMap<Clause, u64>,
}

impl PartialEq for Theory {
    fn eq(&self, other: &Self) -> bool {
        self.predicates == other.predicates && self.clauses.keys().eq(other.clauses.keys())
    }
}

impl Eq for Theory {}

impl Theory {
    pub fn new(predicates: impl IntoIterator<Item = PredicateId>) -> Self {
        Theory {
            predicates: predicates.into_iter().collect(),
            clauses: BTreeMap::new(),
        }
    }

    /// Builds a theory whose clauses all have age 0.
    pub fn with_clauses(
        predicates: impl IntoIterator<Item = PredicateId>,
        clauses: impl IntoIterator<Item = Clause>,
    ) -> Result<Self, TheoryError> {
        let mut t = Theory::new(predicates);
        for c in clauses {
            t.add_clause(c, 0)?;
        }
        Ok(t)
    }

    pub fn predicates(&self) -> &BTreeSet<PredicateId> {
        &self.predicates
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.keys()
    }

    pub fn clauses_with_age(&self) -> impl Iterator<Item = (&Clause, u64)> {
        self.clauses.iter().map(|(c, a)| (c, *a))
    }

    pub fn age(&self, clause: &Clause) -> Option<u64> {
        self.clauses.get(clause).copied()
    }

    pub fn contains(&self, clause: &Clause) -> bool {
        self.clauses.contains_key(clause)
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    /// Sum of clause lengths.
    pub fn size(&self) -> usize {
        self.clauses.keys().map(Clause::len).sum()
    }

    pub fn add_predicate(&mut self, p: PredicateId) -> bool {
        self.predicates.insert(p)
    }

    /// Adds a clause, keeping the older age if it is already present.
    pub fn add_clause(&mut self, clause: Clause, age: u64) -> Result<bool, TheoryError> {
        if let Some(p) = clause.predicates().find(|p| !self.predicates.contains(p)) {
            return Err(TheoryError {
                clause: clause.to_string(),
                predicate: p,
            });
        }
        if self.clauses.contains_key(&clause) {
            return Ok(false);
        }
        self.clauses.insert(clause, age);
        Ok(true)
    }

    pub fn remove_clause(&mut self, clause: &Clause) -> bool {
        self.clauses.remove(clause).is_some()
    }

    pub fn is_satisfied_by(&self, state: &State) -> bool {
        self.clauses.keys().all(|c| state.satisfies(c))
    }

    /// `{p0, p1 ; p0, (~p0 | p1)}`: predicates, then clauses in canonical order.
    pub fn render(&self) -> String {
        let preds: Vec<String> = self.predicates.iter().map(|p| p.to_string()).collect();
        let clauses: Vec<String> = self.clauses.keys().map(|c| c.to_string()).collect();
        format!("{{{} ; {}}}", preds.join(", "), clauses.join(", "))
    }

    /// Short, platform-independent content hash of the canonical rendering.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
