//! Trace events, JSONL persistence and the metrics CSV table.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::Rational;
use crate::formula::{AgentId, PredicateId};
use crate::revision::ExtensionClass;
use crate::universe::{Clause, Literal};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    /// A predicate emerged together with its linking clause.
    Reveal {
        predicate: PredicateId,
        value: bool,
        clause: Clause,
    },
    ClauseAdded {
        clause: Clause,
        added: bool,
    },
    Variation {
        predicate: PredicateId,
        value: bool,
        retracted: Vec<Clause>,
    },
    Observation {
        literals: Vec<Literal>,
    },
    Revision {
        old_hash: String,
        new_hash: String,
        class: ExtensionClass,
        retracted: Vec<Clause>,
        added: Vec<Clause>,
        new_predicates: BTreeSet<PredicateId>,
    },
    Metrics(Metrics),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of sentences over the revealed predicates the agent decides
    /// correctly at the actual state.
    pub coverage: Rational,
    pub sentences: u64,
    /// Sentences true at the actual state that the agent cannot decide.
    pub undecided_true: u64,
    /// Mean predicate Jaccard similarity to the other agents.
    pub disjointness: Option<Rational>,
    /// Size of the adjacent possible, saturating at `u64::MAX`.
    pub adjacent: u64,
    pub class: ExtensionClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub tick: u64,
    pub agent: Option<AgentId>,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, tick: u64, agent: Option<AgentId>, body: EventBody) {
        let seq = self.events.len() as u64;
        self.events.push(TraceEvent { seq, tick, agent, body });
    }

    /// Last tick with any event.
    pub fn ticks(&self) -> u64 {
        self.events.last().map_or(0, |e| e.tick)
    }

    pub fn metrics(&self) -> impl Iterator<Item = (u64, AgentId, &Metrics)> {
        self.events.iter().filter_map(|e| match (&e.body, e.agent) {
            (EventBody::Metrics(m), Some(a)) => Some((e.tick, a, m)),
            _ => None,
        })
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self, TraceError> {
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(&line).map_err(|source| TraceError::Parse { line: i + 1, source })?;
            events.push(e);
        }
        Ok(Trace { events })
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        Trace::read_jsonl(text.as_bytes())
    }

    /// One row per metrics event: tick, agent, coverage, disjointness,
    /// adjacent size and extension class.
    pub fn write_metrics_csv(&self, w: impl Write) -> Result<(), TraceError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["tick", "agent", "coverage", "disjointness", "adjacent", "class"])?;
        for (tick, agent, m) in self.metrics() {
            let class = serde_json::to_value(m.class).expect("class serializes");
            out.write_record([
                tick.to_string(),
                agent.to_string(),
                m.coverage.to_string(),
                m.disjointness.map(|d| d.to_string()).unwrap_or_default(),
                m.adjacent.to_string(),
                class.as_str().unwrap_or_default().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Jsonl,
    Csv,
}

pub fn export(trace: &Trace, format: ExportFormat, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let file = io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ExportFormat::Jsonl => {
            let mut file = file;
            trace.write_jsonl(&mut file)?;
            file.flush()?;
        }
        ExportFormat::Csv => trace.write_metrics_csv(file)?,
    }
    Ok(())
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    Trace::read_jsonl(io::BufReader::new(std::fs::File::open(path)?))
}
