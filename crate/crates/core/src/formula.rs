//! The sentence language: atoms over lazily revealed predicates, the usual
//! connectives, individual knowledge `K<i>` and group common knowledge
//! `C{i,j,..}`.
//!
//! ```text
//! formula := implies
//! implies := or ("->" implies)?
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "~" unary | "K" INT unary | "C" "{" INT ("," INT)* "}" unary
//!          | "(" formula ")" | ATOM
//! ATOM    := "p" INT
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Agents are identified by small integers, as in `K1` or `C{1,2}`.
pub type AgentId = u32;

/// Position of a nonlogical constant in the global predicate sequence
/// `p0, p1, p2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredicateId(pub u32);

impl PredicateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PredicateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(PredicateId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Know(AgentId, Box<Formula>),
    /// The agent set is never empty; the parser and [`Formula::common`] enforce it.
    Common(BTreeSet<AgentId>, Box<Formula>),
}

impl Formula {
    pub fn atom(index: u32) -> Self {
        Formula::Atom(PredicateId(index))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn know(agent: AgentId, f: Formula) -> Self {
        Formula::Know(agent, Box::new(f))
    }

    /// Returns `None` for an empty agent set.
    pub fn common(agents: impl IntoIterator<Item = AgentId>, f: Formula) -> Option<Self> {
        let agents: BTreeSet<_> = agents.into_iter().collect();
        if agents.is_empty() {
            None
        } else {
            Some(Formula::Common(agents, Box::new(f)))
        }
    }

    /// The exact set of predicates occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<PredicateId> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<PredicateId>) {
        match self {
            Formula::Atom(p) => {
                out.insert(*p);
            }
            Formula::Not(f) | Formula::Know(_, f) | Formula::Common(_, f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Nesting depth: atoms have depth 0, every connective or operator adds one.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) | Formula::Know(_, f) | Formula::Common(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// True when no `K` or `C` operator occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => a.is_propositional() && b.is_propositional(),
            Formula::Know(..) | Formula::Common(..) => false,
        }
    }

    /// Classical evaluation under a valuation. Returns `None` if an atom is
    /// unassigned or an epistemic operator is reached.
    pub fn eval<V>(&self, valuation: &V) -> Option<bool>
    where
        V: Fn(PredicateId) -> Option<bool>,
    {
        Some(match self {
            Formula::Atom(p) => valuation(*p)?,
            Formula::Not(f) => !f.eval(valuation)?,
            Formula::And(a, b) => a.eval(valuation)? & b.eval(valuation)?,
            Formula::Or(a, b) => a.eval(valuation)? | b.eval(valuation)?,
            Formula::Implies(a, b) => !a.eval(valuation)? | b.eval(valuation)?,
            Formula::Know(..) | Formula::Common(..) => return None,
        })
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(g) => write!(f, "~{g}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Know(i, g) => write!(f, "K{i} {g}"),
            Formula::Common(group, g) => {
                f.write_str("C{")?;
                for (n, i) in group.iter().enumerate() {
                    if n > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{i}")?;
                }
                write!(f, "}} {g}")
            }
        }
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected one of {}", .expected.join(", "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error("sentence enumeration needs at least one predicate")]
    NoPredicates,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Tilde,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Know,
    Common,
    Atom(u32),
    Int(u32),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn int_at(&self, start: usize) -> Option<(u32, usize)> {
        let mut end = start;
        while end < self.src.len() && self.src[end].is_ascii_digit() {
            end += 1;
        }
        if end == start {
            return None;
        }
        let text = std::str::from_utf8(&self.src[start..end]).ok()?;
        text.parse().ok().map(|n| (n, end))
    }

    /// Returns the next token and its starting offset without consuming it.
    fn peek(&mut self) -> Result<Option<(Token, usize, usize)>, usize> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(start) else {
            return Ok(None);
        };
        let single = |t| Ok(Some((t, start, start + 1)));
        match c {
            b'~' => single(Token::Tilde),
            b'&' => single(Token::Amp),
            b'|' => single(Token::Bar),
            b'(' => single(Token::LParen),
            b')' => single(Token::RParen),
            b'{' => single(Token::LBrace),
            b'}' => single(Token::RBrace),
            b',' => single(Token::Comma),
            b'K' => single(Token::Know),
            b'C' => single(Token::Common),
            b'-' if self.src.get(start + 1) == Some(&b'>') => Ok(Some((Token::Arrow, start, start + 2))),
            b'p' => match self.int_at(start + 1) {
                Some((n, end)) => Ok(Some((Token::Atom(n), start, end))),
                None => Err(start),
            },
            b'0'..=b'9' => match self.int_at(start) {
                Some((n, end)) => Ok(Some((Token::Int(n), start, end))),
                None => Err(start),
            },
            _ => Err(start),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
}

const UNARY_START: &[&str] = &["~", "K", "C", "(", "atom"];

impl<'a> Parser<'a> {
    fn error(&self, offset: usize, expected: &[&str]) -> ParseError {
        ParseError {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn peek(&mut self, expected: &[&str]) -> Result<Option<(Token, usize, usize)>, ParseError> {
        self.lexer.peek().map_err(|at| self.error(at, expected))
    }

    fn eat(&mut self, want: &Token, expected: &[&str]) -> Result<bool, ParseError> {
        match self.peek(expected)? {
            Some((tok, _, end)) if &tok == want => {
                self.lexer.pos = end;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn expect(&mut self, want: Token, expected: &[&str]) -> Result<(), ParseError> {
        if self.eat(&want, expected)? {
            Ok(())
        } else {
            self.lexer.skip_ws();
            Err(self.error(self.lexer.pos, expected))
        }
    }

    fn int(&mut self) -> Result<u32, ParseError> {
        match self.peek(&["integer"])? {
            Some((Token::Int(n), _, end)) => {
                self.lexer.pos = end;
                Ok(n)
            }
            Some((_, start, _)) => Err(self.error(start, &["integer"])),
            None => Err(self.error(self.lexer.pos, &["integer"])),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat(&Token::Arrow, &["->"])? {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.and()?;
        while self.eat(&Token::Bar, &["|"])? {
            acc = Formula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.eat(&Token::Amp, &["&"])? {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let Some((tok, start, end)) = self.peek(UNARY_START)? else {
            return Err(self.error(self.lexer.pos, UNARY_START));
        };
        self.lexer.pos = end;
        match tok {
            Token::Tilde => Ok(Formula::not(self.unary()?)),
            Token::Know => {
                let agent = self.int()?;
                Ok(Formula::know(agent, self.unary()?))
            }
            Token::Common => {
                self.expect(Token::LBrace, &["{"])?;
                let mut group = BTreeSet::from([self.int()?]);
                while self.eat(&Token::Comma, &[",", "}"])? {
                    group.insert(self.int()?);
                }
                self.expect(Token::RBrace, &[",", "}"])?;
                Ok(Formula::Common(group, Box::new(self.unary()?)))
            }
            Token::LParen => {
                let inner = self.formula()?;
                self.expect(Token::RParen, &["&", "|", "->", ")"])?;
                Ok(inner)
            }
            Token::Atom(n) => Ok(Formula::atom(n)),
            _ => Err(self.error(start, UNARY_START)),
        }
    }
}

/// Parses a formula; trailing input is an error.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        lexer: Lexer {
            src: text.as_bytes(),
            pos: 0,
        },
    };
    let f = parser.formula()?;
    match parser.peek(&["end of input"])? {
        None => Ok(f),
        Some((_, start, _)) => Err(parser.error(start, &["&", "|", "->", "end of input"])),
    }
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Every propositional formula over `predicates` with depth at most `depth`,
/// ordered by (depth, rendered length, rendered text). Duplicates are removed
/// structurally, so `(p0 & p1)` and `(p1 & p0)` are both listed.
pub fn enumerate_sentences(predicates: &BTreeSet<PredicateId>, depth: usize) -> Result<Vec<Formula>, EnumerateError> {
    if predicates.is_empty() {
        return Err(EnumerateError::NoPredicates);
    }
    // levels[d] holds the formulas of depth exactly d
    let mut levels: Vec<Vec<Formula>> = vec![predicates.iter().map(|p| Formula::Atom(*p)).collect()];
    for d in 1..=depth {
        let lower: Vec<(usize, &Formula)> = levels
            .iter()
            .enumerate()
            .flat_map(|(k, fs)| fs.iter().map(move |f| (k, f)))
            .collect();
        let mut next: Vec<Formula> = levels[d - 1].iter().map(|f| Formula::not(f.clone())).collect();
        for (da, a) in &lower {
            for (db, b) in &lower {
                if (*da).max(*db) != d - 1 {
                    continue;
                }
                next.push(Formula::and((*a).clone(), (*b).clone()));
                next.push(Formula::or((*a).clone(), (*b).clone()));
                next.push(Formula::implies((*a).clone(), (*b).clone()));
            }
        }
        levels.push(next);
    }
    let mut keyed: Vec<(usize, String, Formula)> = levels
        .into_iter()
        .enumerate()
        .flat_map(|(d, fs)| fs.into_iter().map(move |f| (d, f.render(), f)))
        .collect();
    keyed.sort_by(|x, y| (x.0, x.1.len(), &x.1).cmp(&(y.0, y.1.len(), &y.1)));
    Ok(keyed.into_iter().map(|(_, _, f)| f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(ids: &[u32]) -> BTreeSet<PredicateId> {
        ids.iter().map(|&i| PredicateId(i)).collect()
    }

    #[test]
    fn parses_grammar_examples() {
        assert_eq!(
            parse("p0 & ~p1").unwrap(),
            Formula::and(Formula::atom(0), Formula::not(Formula::atom(1)))
        );
        assert_eq!(
            parse("K1 (p0 | p2)").unwrap(),
            Formula::know(1, Formula::or(Formula::atom(0), Formula::atom(2)))
        );
    }

    #[test]
    fn truncated_input_reports_offset() {
        let err = parse("p0 &").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.expected.contains(&"atom".to_string()));
    }

    #[test]
    fn stray_tokens_are_rejected() {
        assert_eq!(parse("p0 p1").unwrap_err().offset, 3);
        assert_eq!(parse("(p0").unwrap_err().offset, 3);
        assert_eq!(parse("q0").unwrap_err().offset, 0);
        assert_eq!(parse("C{} p0").unwrap_err().offset, 2);
        assert_eq!(parse("").unwrap_err().offset, 0);
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse("p0 | p1 & p2 -> p3 -> p4").unwrap();
        let expected = Formula::implies(
            Formula::or(Formula::atom(0), Formula::and(Formula::atom(1), Formula::atom(2))),
            Formula::implies(Formula::atom(3), Formula::atom(4)),
        );
        assert_eq!(f, expected);
        let chain = parse("p0 & p1 & p2").unwrap();
        assert_eq!(
            chain,
            Formula::and(Formula::and(Formula::atom(0), Formula::atom(1)), Formula::atom(2))
        );
        assert_eq!(parse("~K2 p0").unwrap(), Formula::not(Formula::know(2, Formula::atom(0))));
    }

    #[test]
    fn renders_canonically() {
        let f = Formula::and(Formula::atom(0), Formula::not(Formula::atom(1)));
        assert_eq!(f.render(), "(p0 & ~p1)");
        assert_eq!(Formula::atom(7).render(), "p7");
        let c = Formula::common([2, 1], Formula::atom(0)).unwrap();
        assert_eq!(c.render(), "C{1,2} p0");
        assert_eq!(parse("  C{ 2 ,1 }p0 ").unwrap(), c);
        assert!(Formula::common([], Formula::atom(0)).is_none());
    }

    #[test]
    fn atoms_are_exact() {
        assert_eq!(Formula::and(Formula::atom(0), Formula::atom(0)).atoms(), preds(&[0]));
        let k = parse("K1 (p2 | ~p5)").unwrap();
        assert_eq!(k.atoms(), preds(&[2, 5]));
        let c = parse("C{1,2} (p1 -> p3)").unwrap();
        assert_eq!(c.atoms(), preds(&[1, 3]));
    }

    #[test]
    fn enumeration_examples() {
        let d0 = enumerate_sentences(&preds(&[0, 1]), 0).unwrap();
        assert_eq!(d0, vec![Formula::atom(0), Formula::atom(1)]);
        let d1: Vec<String> = enumerate_sentences(&preds(&[0]), 1).unwrap().iter().map(Formula::render).collect();
        assert_eq!(d1, ["p0", "~p0", "(p0 & p0)", "(p0 | p0)", "(p0 -> p0)"]);
        assert_eq!(enumerate_sentences(&preds(&[]), 2), Err(EnumerateError::NoPredicates));
    }

    #[test]
    fn eval_is_classical() {
        let f = parse("(p0 -> p1) & ~p2").unwrap();
        let v = |p: PredicateId| Some(p.0 == 1);
        assert_eq!(f.eval(&v), Some(true));
        assert_eq!(parse("K1 p0").unwrap().eval(&v), None);
        assert_eq!(parse("p9").unwrap().eval(&|_| None), None);
    }
}
