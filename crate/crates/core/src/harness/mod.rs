//! Scenario loading, the run engine, traces and the experiments built on
//! them.

pub mod engine;
pub mod experiments;
pub mod scenario;
pub mod trace;

pub use engine::{coverage, run, Coverage, Engine};
pub use experiments::{bin_timeline, compare_search, disagreement, disagreement_scan, ergodicity_report, ErgodicityReport};
pub use scenario::{load_scenario, Rational, Scenario, ScenarioError};
pub use trace::{export, ingest, EventBody, ExportFormat, Metrics, Trace, TraceError, TraceEvent};
