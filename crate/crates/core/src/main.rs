use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use covquest::model::BuildStatus;
use covquest::service::{Engine, RunManifest, ServiceError};
use covquest::sim::{replay, Scenario, ScenarioError};
use covquest::store::Store;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_CORRUPT: u8 = 3;
const EXIT_GOLDEN_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "covquest", version, about = "Test challenges, quests and a leaderboard from CI build reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the JSON API (and the dashboard assets under /ui/).
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = ".covquest")]
        state_root: PathBuf,
        /// Directory of dashboard assets; the built-in dashboard otherwise.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Process one finished build.
    Run {
        #[arg(long)]
        project: String,
        #[arg(long)]
        repo: PathBuf,
        #[arg(long, num_args = 1..)]
        coverage: Vec<String>,
        #[arg(long, num_args = 1..)]
        mutations: Vec<String>,
        #[arg(long, num_args = 1..)]
        findings: Vec<String>,
        #[arg(long, num_args = 1..)]
        tests: Vec<String>,
        #[arg(long, value_parser = ["success", "failure"])]
        status: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        run_id: Option<u64>,
        #[arg(long)]
        actor: Option<String>,
        #[arg(long, default_value = ".covquest")]
        state_root: PathBuf,
    },
    /// Write the challenge statistics table as CSV.
    Export {
        #[arg(long)]
        project: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = ".covquest")]
        state_root: PathBuf,
    },
    /// Replay a scenario and print (or compare) its event log.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        golden: Option<PathBuf>,
    },
}

fn service_exit(e: &ServiceError) -> u8 {
    match e {
        ServiceError::Parse(_) => EXIT_PARSE,
        ServiceError::Store(s) if s.is_corruption() => EXIT_CORRUPT,
        _ => EXIT_USAGE,
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match cli.command {
        Command::Serve { port, state_root, ui_dir } => {
            let engine = Arc::new(Engine::with_store(Store::new(state_root)));
            let rt = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => return fail(EXIT_USAGE, e),
            };
            match rt.block_on(covquest::service::http::serve(engine, port, ui_dir)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(EXIT_USAGE, e),
            }
        }
        Command::Run { project, repo, coverage, mutations, findings, tests, status, seed, run_id, actor, state_root } => {
            let manifest = RunManifest {
                run_id: run_id.map(covquest::model::RunId),
                status: if status == "success" { BuildStatus::Success } else { BuildStatus::Failure },
                timestamp: None,
                actor: actor.map(covquest::model::UserId::new),
                repo: Some(repo),
                inline: None,
                coverage,
                mutations,
                findings,
                tests,
                seed,
            };
            let engine = Engine::with_store(Store::new(state_root));
            match engine.ingest_manifest(&project, &manifest) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    ExitCode::SUCCESS
                }
                Err(ServiceError::Stale { run, last }) => {
                    eprintln!("run {run} already processed (last {last}); nothing to do");
                    ExitCode::SUCCESS
                }
                Err(ServiceError::Parse(errors)) => {
                    for e in &errors {
                        eprintln!("error: {e}");
                    }
                    ExitCode::from(EXIT_PARSE)
                }
                Err(e) => fail(service_exit(&e), e),
            }
        }
        Command::Export { project, out, state_root } => match Store::new(state_root).write_stats(&project, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) if e.is_corruption() => fail(EXIT_CORRUPT, e),
            Err(e) => fail(EXIT_USAGE, e),
        },
        Command::Simulate { scenario, golden } => {
            let text = match std::fs::read_to_string(&scenario) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", scenario.display())),
            };
            let result = Scenario::from_json(&text).and_then(|s| replay(&s));
            let log = match result {
                Ok(r) => r.log(),
                Err(e @ ScenarioError::Format(_)) => return fail(EXIT_PARSE, e),
                Err(e) => return fail(EXIT_USAGE, e),
            };
            match golden {
                None => {
                    print!("{log}");
                    ExitCode::SUCCESS
                }
                Some(path) => match std::fs::read_to_string(&path) {
                    Ok(expected) if expected == log => ExitCode::SUCCESS,
                    Ok(_) => fail(EXIT_GOLDEN_MISMATCH, format!("event log differs from {}", path.display())),
                    Err(e) => fail(EXIT_USAGE, format!("{}: {e}", path.display())),
                },
            }
        }
    }
}
