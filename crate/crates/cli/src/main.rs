use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coopalign::harness::{
    load_config, resolve_out_dir, run_experiment, trace_instance, verify_config, write_trace_lines,
    ExperimentConfig, Scheme,
};
use coopalign::Error;

/// Simulator for cooperation alignment on the 3-user interference channel.
#[derive(Parser)]
#[command(name = "coopalign", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme over its power grid and trials.
    Run(CommonArgs),
    /// Evaluate the converse bounds only (scheme forced to bounds-only).
    Bounds(CommonArgs),
    /// Run the protocol oracles and closed-form self-checks.
    Verify(CommonArgs),
    /// Print the backhaul trace of one protocol instance as JSON lines.
    TraceDump(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (`trace-dump`: output file, stdout when omitted).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the scheme in the config.
    #[arg(long, value_name = "NAME")]
    scheme: Option<String>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn build_config(args: &CommonArgs, forced: Option<Scheme>, fallback: Scheme) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).map_err(|e| match e {
            Error::Io(io) => Failure::Validation(format!("cannot read {}: {io}", path.display())),
            other => other.into(),
        })?,
        None => ExperimentConfig::new(fallback),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(name) = &args.scheme {
        cfg.scheme = name.parse()?;
    }
    if let Some(s) = forced {
        cfg.scheme = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = build_config(&args, None, Scheme::BoundsOnly)?;
            execute(&cfg, &args)
        }
        Command::Bounds(args) => {
            let cfg = build_config(&args, Some(Scheme::BoundsOnly), Scheme::BoundsOnly)?;
            execute(&cfg, &args)
        }
        Command::Verify(args) => {
            let cfg = build_config(&args, None, Scheme::BoundsOnly)?;
            let checks = verify_config(&cfg)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
        Command::TraceDump(args) => {
            let cfg = build_config(&args, None, Scheme::RxCoop)?;
            let lines = trace_instance(&cfg)?;
            match &args.out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|e| Failure::Runtime(e.to_string()))?;
                    write_trace_lines(std::io::BufWriter::new(file), &lines)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_trace_lines(&mut lock, &lines)?;
                    lock.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
                }
            }
            Ok(())
        }
    }
}

fn execute(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<(), Failure> {
    let out = resolve_out_dir(cfg, args.out.as_deref());
    let manifest = run_experiment(cfg, &out, args.jobs)?;
    println!(
        "{} run complete: {} trial(s) in {:.2}s, outputs in {}",
        cfg.scheme,
        cfg.trials,
        manifest.wall_time_s,
        out.display()
    );
    for (name, digest) in &manifest.outputs {
        println!("  {name} sha256={digest}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
