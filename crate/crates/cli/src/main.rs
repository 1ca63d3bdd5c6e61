mod commands;
mod run;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riffle::learn::{DEFAULT_LAMBDA, DEFAULT_MAX_ITERS, DEFAULT_SAMPLES_PER_OBS};

use run::{Failure, Run, RunManifest, Timing};

#[derive(Parser, Debug)]
#[command(name = "riffle", version, about = "Hierarchical riffle independence models over rankings")]
struct Cli {
    /// Where to write the run manifest. Commands with `--out` default to
    /// `<out>.manifest.json`; others write none unless asked.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a ballot file.
    Train(TrainArgs),
    /// Condition a model on an observation and report the posterior.
    Condition(ConditionArgs),
    /// Per-record and total log-likelihood of a ballot file.
    Eval { model: PathBuf, data: PathBuf },
    /// Draw rankings from a model.
    Sample {
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest partial ranking containing every ranking in a file.
    Pspan { rankings: PathBuf },
    /// Classify every subset of S_n by complete decomposability.
    Census {
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Dense Mallows table around a reference ranking.
    Mallows {
        /// Reference ranking, e.g. `a|b|c`; its labels define the items.
        #[arg(long)]
        sigma0: String,
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-k censor a file of full rankings.
    Censor {
        data: PathBuf,
        /// Relative weights of censoring depths 1, 2, ...
        #[arg(long, value_delimiter = ',', required = true)]
        k_dist: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a recorded invocation and check its outputs match.
    Replay { manifest: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Fixed,
    Structural,
    Fillin,
}

#[derive(Args, Debug)]
struct TrainArgs {
    data: PathBuf,
    /// `auto` or a hierarchy/model JSON file.
    #[arg(long, default_value = "auto")]
    structure: String,
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Random completions per record for structure search.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_OBS)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Run log path; defaults to `<out>.log.tsv`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConditionArgs {
    model: PathBuf,
    /// Observation such as `a|b,c`; unnamed items are tied last.
    observation: String,
    /// Trust the observation with probability `1 − ε`.
    #[arg(long, value_name = "EPS")]
    noisy: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(run_argv(&argv));
}

fn run_argv(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { run::EXIT_INVALID } else { run::EXIT_OK };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("riffle: {msg}");
        return run::EXIT_INVALID;
    }
    if let Command::Replay { manifest } = &cli.command {
        return report(replay(manifest));
    }
    let started = Instant::now();
    let mut run = Run::default();
    let code = match execute(&cli.command, &mut run) {
        Ok(code) => code,
        Err(e) => return report(Err(e)),
    };
    print!("{}", run.stdout);
    let manifest_path =
        cli.manifest.clone().or_else(|| default_out(&cli.command).map(|o| run::with_suffix(o, ".manifest.json")));
    if let Some(path) = manifest_path {
        let m = RunManifest {
            format_version: riffle::io::FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command_name(&cli.command).into(),
            flags: argv[1..].to_vec(),
            seed: run.seed,
            threads: threads_env(),
            inputs: run.inputs.clone(),
            outputs: run.all_outputs(),
            exit_code: code,
            timing: Timing { wall_seconds: started.elapsed().as_secs_f64() },
            summary: run.summary.clone(),
        };
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        if let Err(e) = run::write_atomic(&path, text.as_bytes()) {
            return report(Err(e));
        }
    }
    code
}

fn report(outcome: run::Outcome) -> i32 {
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("riffle: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: &Command, run: &mut Run) -> run::Outcome {
    match cmd {
        Command::Train(a) => commands::train(a, run),
        Command::Condition(a) => commands::condition(a, run),
        Command::Eval { model, data } => commands::eval(model, data, run),
        Command::Sample { model, count, seed, out } => commands::sample(model, *count, *seed, out.as_deref(), run),
        Command::Pspan { rankings } => commands::pspan(rankings, run),
        Command::Census { n } => commands::census(*n, run),
        Command::Mallows { sigma0, phi, out } => commands::mallows(sigma0, *phi, out.as_deref(), run),
        Command::Censor { data, k_dist, seed, out } => commands::censor(data, k_dist, *seed, out.as_deref(), run),
        Command::Replay { .. } => Err(Failure::Invalid("replay cannot be nested".into())),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Train(_) => "train",
        Command::Condition(_) => "condition",
        Command::Eval { .. } => "eval",
        Command::Sample { .. } => "sample",
        Command::Pspan { .. } => "pspan",
        Command::Census { .. } => "census",
        Command::Mallows { .. } => "mallows",
        Command::Censor { .. } => "censor",
        Command::Replay { .. } => "replay",
    }
}

fn default_out(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::Train(a) => Some(&a.out),
        Command::Condition(a) => a.out.as_deref(),
        Command::Sample { out, .. } | Command::Mallows { out, .. } | Command::Censor { out, .. } => out.as_deref(),
        _ => None,
    }
}

fn threads_env() -> Option<usize> {
    std::env::var("RIFFLE_THREADS").ok().and_then(|v| v.trim().parse().ok())
}

fn init_threads() -> Result<(), String> {
    match std::env::var("RIFFLE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                riffle::exec::init_threads(n);
                Ok(())
            }
            _ => Err(format!("RIFFLE_THREADS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(()),
    }
}

/// Checks the recorded inputs are unchanged, reruns the recorded flags and
/// compares every output digest and the exit code.
fn replay(path: &Path) -> run::Outcome {
    let mut run = Run::default();
    let text = run.read(path)?;
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Failure::Invalid(format!("{}: not a run manifest: {e}", path.display())))?;
    for input in &m.inputs {
        let p = Path::new(&input.path);
        let bytes = std::fs::read(p).map_err(|source| Failure::Read { path: p.to_owned(), source })?;
        if run::sha256_hex(&bytes) != input.sha256 {
            return Err(Failure::Invalid(format!("input {} changed since the recorded run", input.path)));
        }
    }
    let mut argv = vec!["riffle".to_string()];
    argv.extend(m.flags.iter().cloned());
    let cli =
        Cli::try_parse_from(&argv).map_err(|e| Failure::Invalid(format!("recorded flags no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Failure::Invalid("replay cannot be nested".into()));
    }
    let mut fresh = Run::default();
    let code = execute(&cli.command, &mut fresh)?;
    let mut mismatches = Vec::new();
    if code != m.exit_code {
        mismatches.push(format!("exit code {code} (recorded {})", m.exit_code));
    }
    let now = fresh.all_outputs();
    for want in &m.outputs {
        match now.iter().find(|d| d.path == want.path) {
            Some(d) if d.sha256 == want.sha256 => {}
            Some(_) => mismatches.push(format!("{} differs", want.path)),
            None => mismatches.push(format!("{} was not produced", want.path)),
        }
    }
    if !mismatches.is_empty() {
        return Err(Failure::Invalid(format!("replay mismatch: {}", mismatches.join("; "))));
    }
    println!("replay ok: {} outputs identical", m.outputs.len());
    Ok(run::EXIT_OK)
}
