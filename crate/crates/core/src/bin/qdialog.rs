use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use qdialog::config::{resolve, Overrides};
use qdialog::harness::{replay, run_experiment_with, Estimate, Execution, MessageSource, SummaryStats};
use qdialog::io::{
    read_summary, read_transcript, write_summary, write_transcript, SummaryDocument, SUMMARY_FILE,
    TRANSCRIPT_FILE,
};
use qdialog::table::check_table;
use qdialog::{QubitIndex, ReplayError, Strategy};

const EXIT_MISMATCH: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SCHEMA: u8 = 3;

#[derive(Parser)]
#[command(name = "qdialog", version, about = "Bidirectional ping-pong QSDC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write summary.json and transcript.jsonl.
    Run(RunArgs),
    /// Recompute the summary from a transcript.
    Replay(ReplayArgs),
    /// Verify the encoding table exhaustively.
    CheckTable(CheckTableArgs),
}

fn parse_target(s: &str) -> Result<QubitIndex, String> {
    match s {
        "travel" => Ok(QubitIndex::Travel),
        "home" => Ok(QubitIndex::Home),
        _ => Err(format!("expected `travel` or `home`, got `{s}`")),
    }
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML file with ExperimentConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<u64>,
    /// none | loss | intercept-<z|x>[:forward|return|both]
    #[arg(long)]
    adversary: Option<Strategy>,
    #[arg(long)]
    control_prob: Option<f64>,
    #[arg(long)]
    announce_fraction: Option<f64>,
    /// Photon loss probability per leg.
    #[arg(long)]
    loss: Option<f64>,
    /// `random` or a bitstring such as 0110.
    #[arg(long)]
    alice_message: Option<MessageSource>,
    #[arg(long)]
    bob_message: Option<MessageSource>,
    #[arg(long, value_parser = parse_target)]
    bob_target: Option<QubitIndex>,
    #[arg(long, env = "QDIALOG_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Simulate rounds on one thread (results are identical).
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// Directory holding transcript.jsonl (and optionally summary.json).
    #[arg(long, env = "QDIALOG_OUT_DIR", default_value = "out")]
    dir: PathBuf,
    /// Transcript path, overriding `<dir>/transcript.jsonl`.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct CheckTableArgs {
    #[arg(long, value_parser = parse_target, default_value = "travel")]
    bob_target: QubitIndex,
    #[arg(long, default_value_t = 10_000)]
    repetitions: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run(args),
        Command::Replay(args) => replay_cmd(args),
        Command::CheckTable(args) => check_table_cmd(args),
    };
    ExitCode::from(code)
}

fn fmt_estimate(e: &Option<Estimate>) -> String {
    match e {
        Some(e) => format!("{:.6} [{:.6}, {:.6}] ({}/{})", e.rate, e.ci95.0, e.ci95.1, e.count, e.trials),
        None => "n/a".to_string(),
    }
}

fn print_stats(s: &SummaryStats) {
    println!("rounds            {}", s.rounds);
    println!("control rounds    {}", s.control_rounds);
    println!("message rounds    {}", s.message_rounds);
    println!("lost rounds       {}", s.lost_rounds);
    println!("detection rate    {}", fmt_estimate(&s.detection_rate));
    println!("BER alice->bob    {}", fmt_estimate(&s.ber_alice_to_bob));
    println!("BER bob->alice    {}", fmt_estimate(&s.ber_bob_to_alice));
    println!("phi rate          {}", fmt_estimate(&s.phi_rate));
    println!("mismatch rate     {}", fmt_estimate(&s.mismatch_rate));
    println!("eve accuracy j    {}", fmt_estimate(&s.eve_accuracy_j));
    println!("eve accuracy k    {}", fmt_estimate(&s.eve_accuracy_k));
    match s.throughput {
        Some(t) => println!("throughput        {t:.6} bits/pair"),
        None => println!("throughput        n/a"),
    }
    match s.would_abort_round {
        Some(r) => println!("would abort at    round {r}"),
        None => println!("would abort at    never"),
    }
}

fn run(args: RunArgs) -> u8 {
    let overrides = Overrides {
        rounds: args.rounds,
        control_prob: args.control_prob,
        announce_fraction: args.announce_fraction,
        adversary: args.adversary,
        loss_p: args.loss,
        seed: args.seed,
        alice_message: args.alice_message,
        bob_message: args.bob_message,
        bob_encode_target: args.bob_target,
    };
    let config = match resolve(args.config.as_deref(), overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", args.out_dir.display());
        return EXIT_CONFIG;
    }
    let execution = if args.serial { Execution::Serial } else { Execution::Parallel };
    let out = match run_experiment_with(&config, execution) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let transcript = args.out_dir.join(TRANSCRIPT_FILE);
    if let Err(e) = write_transcript(&transcript, &out.records) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let summary = args.out_dir.join(SUMMARY_FILE);
    if let Err(e) = write_summary(&summary, &SummaryDocument::new(Some(config), out.summary.clone())) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    print_stats(&out.summary);
    println!("wrote {} and {}", summary.display(), transcript.display());
    0
}

/// Top-level fields whose serialized values differ.
fn differing_fields(a: &SummaryStats, b: &SummaryStats) -> Vec<String> {
    let (Value::Object(a), Value::Object(b)) =
        (serde_json::to_value(a).unwrap(), serde_json::to_value(b).unwrap())
    else {
        unreachable!("stats serialize to objects")
    };
    a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect()
}

fn replay_cmd(args: ReplayArgs) -> u8 {
    let transcript = args.transcript.unwrap_or_else(|| args.dir.join(TRANSCRIPT_FILE));
    let records = match read_transcript(&transcript) {
        Ok(r) => r,
        Err(e @ ReplayError::Schema { .. }) => {
            eprintln!("error: {}: {e}", transcript.display());
            return EXIT_SCHEMA;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let stats = match replay(&records) {
        Ok(s) => s,
        Err((idx, message)) => {
            eprintln!("error: {}: transcript line {}: {message}", transcript.display(), idx + 1);
            return EXIT_SCHEMA;
        }
    };
    print_stats(&stats);

    let summary_path = args.dir.join(SUMMARY_FILE);
    if !summary_path.exists() {
        return write_or_fail(&summary_path, &SummaryDocument::new(None, stats), 0);
    }
    let existing = match read_summary(&summary_path) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    let replayed = args.dir.join("replay_summary.json");
    let diff = differing_fields(&stats, &existing.stats);
    let doc = SummaryDocument::new(existing.config, stats);
    if diff.is_empty() {
        println!("replay matches {}", summary_path.display());
        write_or_fail(&replayed, &doc, 0)
    } else {
        eprintln!("replay differs from {} in: {}", summary_path.display(), diff.join(", "));
        write_or_fail(&replayed, &doc, EXIT_MISMATCH)
    }
}

fn write_or_fail(path: &Path, doc: &SummaryDocument, code: u8) -> u8 {
    match write_summary(path, doc) {
        Ok(()) => {
            println!("wrote {}", path.display());
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn check_table_cmd(args: CheckTableArgs) -> u8 {
    let report = check_table(args.bob_target, args.repetitions, args.seed);
    print!("{}", report.render());
    for cell in &report.cells {
        let verdict = if cell.deterministic() { "ok" } else { "FAIL" };
        println!("{verdict:<5}{}", cell.describe());
    }
    if report.passed() {
        0
    } else {
        for cell in report.failures() {
            eprintln!("mismatched cell {}", cell.describe());
        }
        EXIT_MISMATCH
    }
}
