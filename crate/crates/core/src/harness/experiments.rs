//! Experiments over traces and runs: ragged time bins, the ergodicity
//! contrast, the strategy comparison search and the disagreement scan.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use super::engine::{Engine, SentenceCache};
use super::scenario::Scenario;
use super::trace::{EventBody, Trace, TraceError};
use crate::epistemics::{AgentState, Decider, Partition, Truth3};
use crate::formula::{AgentId, Formula, PredicateId};
use crate::multiagent::{agreement, AgreementReport, FrameError};
use crate::revision::StrategyKind;
use crate::universe::{ConfigError, State};

/// Bins covering `1..=T`, each closed by a tick at which some agent's
/// theory hash changed; the last bin ends at `T`.
pub fn bin_timeline(trace: &Trace) -> Vec<(u64, u64)> {
    let end = trace.ticks();
    let cuts: BTreeSet<u64> = trace
        .events
        .iter()
        .filter(|e| matches!(&e.body, EventBody::Revision { old_hash, new_hash, .. } if old_hash != new_hash))
        .map(|e| e.tick)
        .collect();
    bins_from_ticks(&cuts, end)
}

/// Same as [`bin_timeline`] but from explicit revision ticks.
pub fn bins_from_ticks(revisions: &BTreeSet<u64>, end: u64) -> Vec<(u64, u64)> {
    let mut bins = Vec::new();
    let mut start = 1;
    for &c in revisions.iter().filter(|&&c| c >= 1 && c <= end) {
        bins.push((start, c));
        start = c + 1;
    }
    if start <= end {
        bins.push((start, end));
    }
    bins
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErgodicityError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentErgodicity {
    pub agent: AgentId,
    /// `(1/T) Σ_t c(t)`, one per replicate.
    pub time_averages: Vec<BigRational>,
    /// Mean of `c(T)` across replicates.
    pub ensemble_final: BigRational,
    /// Largest `|time average − ensemble average|` over replicates.
    pub gap: BigRational,
    /// Largest coverage seen at any tick of any replicate.
    pub max_coverage: Ratio<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErgodicityReport {
    pub ticks: u64,
    pub replicates: usize,
    pub agents: Vec<AgentErgodicity>,
}

impl ErgodicityReport {
    pub fn gap(&self) -> BigRational {
        self.agents.iter().map(|a| a.gap.clone()).max().unwrap_or_else(BigRational::zero)
    }

    pub fn max_coverage(&self) -> Ratio<u64> {
        self.agents.iter().map(|a| a.max_coverage).max().unwrap_or_else(Ratio::zero)
    }

    /// Per agent and replicate: time average, ensemble average and gap, both
    /// exact and as decimals.
    pub fn write_csv(&self, w: impl Write) -> Result<(), TraceError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "agent",
            "replicate",
            "time_average",
            "ensemble_final",
            "gap",
            "max_coverage",
            "time_average_approx",
            "ensemble_final_approx",
        ])?;
        for a in &self.agents {
            for (r, avg) in a.time_averages.iter().enumerate() {
                let gap = (avg - &a.ensemble_final).abs();
                out.write_record([
                    a.agent.to_string(),
                    r.to_string(),
                    avg.to_string(),
                    a.ensemble_final.to_string(),
                    gap.to_string(),
                    a.max_coverage.to_string(),
                    format!("{:.6}", approx(avg)),
                    format!("{:.6}", approx(&a.ensemble_final)),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn approx(r: &BigRational) -> f64 {
    let scaled = (r * BigRational::from_integer(BigInt::from(1_000_000_000u64))).round().to_integer();
    scaled.to_string().parse::<f64>().unwrap_or(f64::NAN) / 1e9
}

fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Time averages versus the ensemble average at the final tick.
pub fn ergodicity_report(traces: &[Trace]) -> Result<ErgodicityReport, ErgodicityError> {
    if traces.len() < 2 {
        return Err(ErgodicityError::LengthMismatch(format!(
            "{} replicate(s), need at least 2",
            traces.len()
        )));
    }
    let ticks = traces[0].ticks();
    // series[agent][replicate] = coverage per tick
    let mut series: BTreeMap<AgentId, Vec<Vec<Ratio<u64>>>> = BTreeMap::new();
    for (r, trace) in traces.iter().enumerate() {
        if trace.ticks() != ticks {
            return Err(ErgodicityError::LengthMismatch(format!(
                "replicate {r} has {} ticks, replicate 0 has {ticks}",
                trace.ticks()
            )));
        }
        for (_, agent, m) in trace.metrics() {
            let per = series.entry(agent).or_default();
            per.resize_with(traces.len(), Vec::new);
            per[r].push(m.coverage.0);
        }
    }
    let mut agents = Vec::new();
    for (agent, per) in series {
        if let Some(r) = per.iter().position(|s| s.len() as u64 != ticks) {
            return Err(ErgodicityError::LengthMismatch(format!(
                "agent {agent} in replicate {r} lacks metrics for some tick"
            )));
        }
        let t = BigRational::from_integer(BigInt::from(ticks));
        let time_averages: Vec<BigRational> = per
            .iter()
            .map(|s| s.iter().fold(BigRational::zero(), |a, c| a + big(*c)) / &t)
            .collect();
        let n = BigRational::from_integer(BigInt::from(per.len()));
        let ensemble_final = per.iter().fold(BigRational::zero(), |a, s| a + big(*s.last().expect("ticks ≥ 1"))) / n;
        let gap = time_averages
            .iter()
            .map(|avg| (avg - &ensemble_final).abs())
            .max()
            .expect("at least two replicates");
        let max_coverage = per.iter().flatten().copied().max().unwrap_or_else(Ratio::zero);
        agents.push(AgentErgodicity {
            agent,
            time_averages,
            ensemble_final,
            gap,
            max_coverage,
        });
    }
    Ok(ErgodicityReport {
        ticks,
        replicates: traces.len(),
        agents,
    })
}

/// Runs every replicate of the scenario.
pub fn run_replicates(scenario: &Scenario, replicates: u64) -> Result<Vec<Trace>, ConfigError> {
    (0..replicates).map(|r| super::engine::run(scenario, r)).collect()
}

/// A revealed-true sentence a nonlogical strategy decides while the
/// deductive strategy, on the same universe and observations, does not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub strategy: StrategyKind,
    pub tick: u64,
    pub agent: AgentId,
    pub sentence: String,
    pub deductive_theory: String,
    pub strategy_theory: String,
}

/// The scenario with every agent switched to `kind`.
pub fn with_strategy(scenario: &Scenario, kind: StrategyKind) -> Scenario {
    let mut s = scenario.clone();
    for a in &mut s.agents {
        a.strategy = kind;
    }
    s
}

/// Steps one engine per strategy in lockstep and reports the first witness
/// found for each nonlogical strategy.
pub fn compare_search(scenario: &Scenario, replicate: u64) -> Result<Vec<Witness>, ConfigError> {
    let mut deductive = Engine::new(&with_strategy(scenario, StrategyKind::Deductive), replicate)?;
    let mut others = StrategyKind::ALL
        .into_iter()
        .filter(|k| k.is_nonlogical())
        .map(|k| Ok((k, Engine::new(&with_strategy(scenario, k), replicate)?)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let mut found: BTreeMap<StrategyKind, Witness> = BTreeMap::new();
    let mut cache = SentenceCache::default();
    for _ in 0..scenario.run.ticks {
        deductive.step();
        for (_, e) in &mut others {
            e.step();
        }
        let universe = deductive.universe();
        let actual = universe.actual();
        let sentences = cache.get(universe.revealed_predicates(), scenario.run.depth);
        let base: Vec<&AgentState> = deductive.agents().collect();
        for (kind, engine) in &others {
            if found.contains_key(kind) {
                continue;
            }
            for (d, n) in base.iter().zip(engine.agents()) {
                let dd = Decider::new(d.theory());
                let nd = Decider::new(n.theory());
                let hit = sentences
                    .iter()
                    .find(|xi| actual.eval(xi) == Some(true) && nd.decide(xi) == Truth3::True && !dd.decide(xi).is_decided());
                if let Some(xi) = hit {
                    found.insert(
                        *kind,
                        Witness {
                            strategy: *kind,
                            tick: universe.tick_count(),
                            agent: d.id(),
                            sentence: xi.render(),
                            deductive_theory: d.theory().render(),
                            strategy_theory: n.theory().render(),
                        },
                    );
                    break;
                }
            }
        }
        if found.len() == others.len() {
            break;
        }
    }
    Ok(found.into_values().collect())
}

/// Outcome of querying a revealed-true atom as a candidate common event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Disagreement {
    /// The event is not expressible in the shared language at all.
    Infeasible { formula: String, missing: BTreeSet<PredicateId> },
    /// Posteriors still differ after every shared literal any agent knows
    /// has been communicated to all.
    Unequal { formula: String, report: AgreementReport },
}

/// Looks for an event over revealed-true atoms on which the agents cannot
/// come to agree. Full communication of shared literals is modelled by
/// every agent distinguishing states on every shared predicate fixed by
/// some agent.
pub fn disagreement(agents: &[AgentState], actual: &State) -> Result<Option<Disagreement>, FrameError> {
    let first = agents.first().ok_or(FrameError::NoAgents)?;
    let shared: BTreeSet<PredicateId> = agents.iter().fold(first.predicates().clone(), |acc, a| {
        acc.intersection(a.predicates()).copied().collect()
    });
    let everyone: BTreeSet<PredicateId> = agents.iter().flat_map(|a| a.predicates().iter().copied()).collect();
    let true_atoms =
        |set: &BTreeSet<PredicateId>| -> Vec<PredicateId> { set.iter().copied().filter(|p| actual.value(*p) == Some(true)).collect() };
    if let Some(p) = true_atoms(&everyone).into_iter().find(|p| !shared.contains(p)) {
        return Ok(Some(Disagreement::Infeasible {
            formula: Formula::Atom(p).render(),
            missing: BTreeSet::from([p]),
        }));
    }
    let pooled: BTreeSet<PredicateId> = agents
        .iter()
        .flat_map(|a| {
            let d = Decider::new(a.theory());
            shared
                .iter()
                .copied()
                .filter(move |p| a.predicates().contains(p) && d.fixed(*p).is_some())
                .collect::<Vec<_>>()
        })
        .collect();
    for p in true_atoms(&shared) {
        // Under the uniform prior the other shared predicates are independent
        // of the event, so the ground can be taken over `p` alone.
        let domain = BTreeSet::from([p]);
        let ground: BTreeSet<State> = State::all(&domain).into_iter().collect();
        let seen: BTreeSet<PredicateId> = domain.intersection(&pooled).copied().collect();
        let communicated: BTreeMap<AgentId, Partition> = agents
            .iter()
            .map(|a| (a.id(), Partition::by_key(ground.clone(), |s| s.project(&seen))))
            .collect();
        let event: BTreeSet<State> = ground.iter().filter(|s| s.value(p) == Some(true)).cloned().collect();
        let report = agreement(&communicated, &event, &actual.project(&domain))?;
        if !report.agree {
            return Ok(Some(Disagreement::Unequal {
                formula: Formula::Atom(p).render(),
                report,
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisagreementHit {
    pub seed: u64,
    pub tick: u64,
    pub disagreement: Disagreement,
}

/// Runs the scenario under each nature seed and checks the final agent
/// states for a surviving disagreement.
pub fn disagreement_scan(scenario: &Scenario, seeds: impl IntoIterator<Item = u64>) -> Result<Vec<DisagreementHit>, ScanError> {
    let mut hits = Vec::new();
    for seed in seeds {
        let mut s = scenario.clone();
        s.nature.seed = seed;
        let mut engine = Engine::new(&s, 0)?;
        for _ in 0..s.run.ticks {
            engine.step();
        }
        if let Some(d) = disagreement(&engine.agent_states(), engine.universe().actual())? {
            hits.push(DisagreementHit {
                seed,
                tick: engine.universe().tick_count(),
                disagreement: d,
            });
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}
