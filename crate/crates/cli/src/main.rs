use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::info;
use sfcalc::run::{self, RunOptions};
use sfcalc::scenario;
use sfcalc::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "sfcalc", version, about = "Spectral flow and APS index calculator")]
struct Cli {
    /// Worker threads for the data-parallel engines (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Multiply every agreement tolerance by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a bundled scenario).
    Run {
        scenario: String,
        /// Output directory for the CSV and the run log.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Record per-engine runtimes in the CSV (breaks byte-reproducibility).
        #[arg(long)]
        timings: bool,
    },
    /// Run a verification suite: engines, aps, geometry or all.
    Verify { suite: String },
    /// List the bundled scenarios.
    ListScenarios,
}

fn read_scenario(arg: &str) -> anyhow::Result<String> {
    let path = PathBuf::from(arg);
    if path.exists() {
        return std::fs::read_to_string(&path).with_context(|| format!("reading {arg}"));
    }
    sfcalc::bundled(arg)
        .map(str::to_owned)
        .with_context(|| format!("no scenario file or bundled scenario named '{arg}'"))
}

fn seed_override() -> Result<Option<u64>, String> {
    match std::env::var("SFCALC_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("SFCALC_SEED must be an unsigned integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

fn cmd_run(arg: &str, out: &PathBuf, opts: RunOptions) -> ExitCode {
    let text = match read_scenario(arg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let mut sc = match scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid scenario {arg}: {e}");
            return ExitCode::from(2);
        }
    };
    match seed_override() {
        Ok(Some(seed)) => {
            info!("SFCALC_SEED overrides the scenario seed with {seed}");
            sc.override_seed(seed);
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let record = match run::run(&sc, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match run::write_artifacts(&sc, &record, out, opts) {
        Ok((csv, log)) => {
            print!("{}", run::render_log(&record));
            println!("wrote {} and {}", csv.display(), log.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    }
    if record.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_verify(name: &str, scale: f64) -> ExitCode {
    let suite: Suite = match name.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cases = verify::run_suite(suite, scale);
    for c in &cases {
        println!("{c}");
    }
    let failed = cases.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", cases.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if !(cli.tolerance_scale > 0.0 && cli.tolerance_scale.is_finite()) {
        eprintln!("error: --tolerance-scale must be positive");
        return ExitCode::from(2);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match &cli.command {
        Command::Run { scenario, out, timings } => cmd_run(
            scenario,
            out,
            RunOptions {
                tolerance_scale: cli.tolerance_scale,
                timings: *timings,
            },
        ),
        Command::Verify { suite } => cmd_verify(suite, cli.tolerance_scale),
        Command::ListScenarios => {
            for (file, text) in sfcalc::BUNDLED {
                let description = scenario::parse(text).map(|s| s.description).unwrap_or_default();
                println!("{file:<24} {description}");
            }
            ExitCode::SUCCESS
        }
    }
}
