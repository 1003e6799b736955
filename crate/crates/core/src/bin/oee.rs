use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use oee::formula::{parse, Formula};
use oee::harness::experiments::{compare_search, disagreement_scan, ergodicity_report, run_replicates};
use oee::harness::{bin_timeline, ingest, load_scenario, run, ExportFormat, Trace};
use oee::multiagent::{EventFile, FrameFile};

#[derive(Parser)]
#[command(name = "oee", version, about = "Epistemic logic over open-ended evolving universes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and print its canonical form.
    Parse { formula: String },
    /// Check common knowledge of a formula at a state of a frame.
    Check {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        formula: String,
        /// Bit string over the frame predicates.
        #[arg(long)]
        at: String,
    },
    /// Run one replicate of a scenario and write its JSONL trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the metrics table as CSV instead of the event trace.
        #[arg(long)]
        csv: bool,
    },
    /// Posteriors, common knowledge of the posterior profile and agreement.
    Agree {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        event: PathBuf,
    },
    /// Time versus ensemble averages of coverage across replicates.
    Ergodic {
        #[arg(long)]
        scenario: PathBuf,
        /// Defaults to the scenario's replicate count.
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look for sentences a nonlogical strategy decides but deduction does not.
    CompareSearch {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Scan nature seeds for a disagreement that survives communication.
    Disagree {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of seeds, starting from the scenario seed.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Ragged time bins closed by theory revisions.
    Bins {
        #[arg(long)]
        trace: PathBuf,
    },
}

enum Failure {
    /// The inputs were well formed but the query failed.
    Domain(String),
    /// Unreadable or invalid configuration.
    Config(String),
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }

    fn domain(e: impl std::fmt::Display) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Failure::config(format!("{}: at {}: {}", path.display(), e.path(), e.inner())))
}

// a closed stdout (e.g. piping into `head`) is not an error
fn print_json(v: &serde_json::Value) {
    let _ = writeln!(io::stdout(), "{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
}

fn write_out(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?);
            write(&mut file).and_then(|_| file.flush()).map_err(Failure::config)
        }
        None => match write(&mut io::stdout().lock()) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(Failure::config),
        },
    }
}

fn parse_formula(text: &str) -> Result<Formula, Failure> {
    parse(text).map_err(|e| Failure::domain(format!("{text:?}: {e}")))
}

fn cmd_parse(text: &str) -> Outcome {
    let f = parse_formula(text)?;
    print_json(&json!({
        "formula": f.render(),
        "depth": f.depth(),
        "atoms": f.atoms(),
        "propositional": f.is_propositional(),
    }));
    Ok(())
}

fn cmd_check(frame: &Path, formula: &str, at: &str) -> Outcome {
    let file: FrameFile = read_json(frame)?;
    let shared = file.to_frame().map_err(Failure::config)?;
    let f = parse_formula(formula)?;
    let at = file.state(at).map_err(Failure::domain)?;
    let out = shared.common_knowledge(&f, &at).map_err(Failure::domain)?.to_json();
    print_json(&out);
    Ok(())
}

fn cmd_agree(frame: &Path, event: &Path) -> Outcome {
    let file: FrameFile = read_json(frame)?;
    let ev: EventFile = read_json(event)?;
    let shared = file.to_frame().map_err(Failure::config)?;
    let at = file.state(&ev.at).map_err(Failure::domain)?;
    match ev.resolve(&file, &shared).map_err(Failure::config)? {
        Err(missing) => print_json(&json!({"outcome": "infeasible", "missing": missing})),
        Ok(e) => {
            let report = shared.agreement_check(&e, &at).map_err(Failure::domain)?;
            print_json(&json!({"outcome": "report", "report": report}));
        }
    }
    Ok(())
}

fn cmd_run(scenario: &Path, replicate: u64, out: Option<&Path>, csv: bool) -> Outcome {
    let s = load_scenario(scenario).map_err(Failure::config)?;
    let trace = run(&s, replicate).map_err(Failure::config)?;
    let format = if csv { ExportFormat::Csv } else { ExportFormat::Jsonl };
    write_out(out, |w| match format {
        ExportFormat::Jsonl => trace.write_jsonl(w),
        ExportFormat::Csv => trace.write_metrics_csv(w).map_err(io::Error::other),
    })
}

fn cmd_ergodic(scenario: &Path, replicates: Option<u64>, out: Option<&Path>) -> Outcome {
    let s = load_scenario(scenario).map_err(Failure::config)?;
    let traces: Vec<Trace> = run_replicates(&s, replicates.unwrap_or(s.run.replicates)).map_err(Failure::config)?;
    let report = ergodicity_report(&traces).map_err(Failure::domain)?;
    eprintln!(
        "ticks {} replicates {} gap {} max coverage {}",
        report.ticks,
        report.replicates,
        report.gap(),
        report.max_coverage()
    );
    write_out(out, |w| report.write_csv(w).map_err(io::Error::other))
}

fn cmd_compare_search(scenario: &Path, replicate: u64) -> Outcome {
    let s = load_scenario(scenario).map_err(Failure::config)?;
    let witnesses = compare_search(&s, replicate).map_err(Failure::config)?;
    print_json(&json!({"witnesses": witnesses}));
    Ok(())
}

fn cmd_disagree(scenario: &Path, seeds: u64) -> Outcome {
    let s = load_scenario(scenario).map_err(Failure::config)?;
    let start = s.nature.seed;
    let hits = disagreement_scan(&s, start..start + seeds).map_err(Failure::domain)?;
    print_json(&json!({"seeds": [start, start + seeds], "hits": hits}));
    Ok(())
}

fn cmd_bins(trace: &Path) -> Outcome {
    let t = ingest(trace).map_err(Failure::config)?;
    let mut out = io::stdout().lock();
    for (start, end) in bin_timeline(&t) {
        if writeln!(out, "{start} {end}").is_err() {
            break;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse { formula } => cmd_parse(formula),
        Command::Check { frame, formula, at } => cmd_check(frame, formula, at),
        Command::Run {
            scenario,
            replicate,
            out,
            csv,
        } => cmd_run(scenario, *replicate, out.as_deref(), *csv),
        Command::Agree { frame, event } => cmd_agree(frame, event),
        Command::Ergodic { scenario, replicates, out } => cmd_ergodic(scenario, *replicates, out.as_deref()),
        Command::CompareSearch { scenario, replicate } => cmd_compare_search(scenario, *replicate),
        Command::Disagree { scenario, seeds } => cmd_disagree(scenario, *seeds),
        Command::Bins { trace } => cmd_bins(trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
