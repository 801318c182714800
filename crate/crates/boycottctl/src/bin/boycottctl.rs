use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use boycott_core::engine::DEFAULT_CTA_DAILY_CAP;
use boycott_core::{EngineConfig, StrengthLevel, UserState};
use boycottctl::{exit, lint_file, load_campaign, load_graph, ReplayOptions, Replayer};
use chrono::Duration;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boycottctl", version, about = "Campaign authoring tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a campaign file and print the report as JSON.
    Lint { file: PathBuf },
    /// Expand root entities into keywords and domains via an ownership graph.
    Expand {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "root", required = true)]
        roots: Vec<String>,
        /// Edge kinds to follow (default: subsidiary, brand).
        #[arg(long = "kind")]
        kinds: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run page and navigation fixtures through the engine offline.
    Replay {
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long = "campaign", required = true)]
        campaigns: Vec<PathBuf>,
        #[arg(long)]
        level: StrengthLevel,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Whitelist, priorities and toggles are taken from this file.
        #[arg(long)]
        user_state: Option<PathBuf>,
        /// Simulated seconds between fixture start times.
        #[arg(long, default_value_t = 3600)]
        step_secs: u32,
        /// Carry rate-limit state across fixtures.
        #[arg(long)]
        shared_state: bool,
        #[arg(long, default_value_t = DEFAULT_CTA_DAILY_CAP)]
        cta_cap: u32,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("boycottctl: {msg}");
    ExitCode::from(code)
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), ExitCode> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| fail(exit::IO, format!("cannot write {}: {e}", path.display()))),
        None => {
            emit(text);
            Ok(())
        }
    }
}

fn lint(file: PathBuf) -> ExitCode {
    match lint_file(&file) {
        Ok(r) => {
            emit(&format!("{}\n", r.to_json()));
            ExitCode::from(if r.valid { exit::OK } else { exit::FAILED })
        }
        Err(e) => fail(exit::IO, format!("cannot read {}: {e}", file.display())),
    }
}

fn expand(graph: PathBuf, roots: Vec<String>, kinds: Vec<String>, out: Option<PathBuf>) -> ExitCode {
    let g = match load_graph(&graph) {
        Ok(g) => g,
        Err(e) => return fail(e.exit_code(), e),
    };
    let kinds: BTreeSet<String> = if kinds.is_empty() { boycottctl::default_kinds() } else { kinds.into_iter().collect() };
    let x = match g.expand_targets(&roots, &kinds) {
        Ok(x) => x,
        Err(e) => return fail(exit::FAILED, e),
    };
    let mut text = serde_json::to_string_pretty(&x).expect("expansion serializes");
    text.push('\n');
    match write_or_print(out.as_ref(), &text) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(code) => code,
    }
}

#[allow(clippy::too_many_arguments)]
fn replay(
    fixtures: PathBuf,
    campaign_files: Vec<PathBuf>,
    level: StrengthLevel,
    report: Option<PathBuf>,
    user_state: Option<PathBuf>,
    step_secs: u32,
    shared_state: bool,
    cta_cap: u32,
    json: bool,
) -> ExitCode {
    let mut campaigns = Vec::new();
    for f in &campaign_files {
        match load_campaign(f) {
            Ok(c) => campaigns.push(c),
            Err(e) => return fail(e.exit_code(), e),
        }
    }
    let user = match &user_state {
        None => UserState::fresh(),
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match UserState::from_json(&text) {
                Ok(u) => u,
                Err(e) => return fail(exit::FAILED, format!("{}: {e}", path.display())),
            },
            Err(e) => return fail(exit::IO, format!("cannot read {}: {e}", path.display())),
        },
    };
    let opts = ReplayOptions {
        level,
        step: Duration::seconds(step_secs.into()),
        shared_state,
        engine: EngineConfig { cta_daily_cap: cta_cap, ..EngineConfig::default() },
    };
    let result = match Replayer::new(&campaigns, &user, opts).run_dir(&fixtures) {
        Ok(r) => r,
        Err(e) => return fail(exit::IO, format!("cannot read fixtures {}: {e}", fixtures.display())),
    };
    let doc = result.to_json();
    if let Some(path) = &report {
        if let Err(code) = write_or_print(Some(path), &doc) {
            return code;
        }
    }
    emit(&if json { doc } else { result.table() });
    ExitCode::from(if result.passed() { exit::OK } else { exit::FAILED })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Lint { file } => lint(file),
        Command::Expand { graph, roots, kinds, out } => expand(graph, roots, kinds, out),
        Command::Replay { fixtures, campaigns, level, report, user_state, step_secs, shared_state, cta_cap, json } => {
            replay(fixtures, campaigns, level, report, user_state, step_secs, shared_state, cta_cap, json)
        }
    }
}
