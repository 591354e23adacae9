use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nilrec::harness::{
    exit_code, load_config, run_experiments, ExperimentConfig, ExperimentKind, EXIT_ASSERTION,
    EXIT_CONFIG, EXIT_OK, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "nilrec", version, about = "Run weighted double-recurrence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments and write `<id>.csv` and `<id>.summary.json`.
    Run {
        /// Experiment config; repeat to run several concurrently.
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        /// Output directory. Falls back to $NILREC_OUT_DIR, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and validate a config, then print its canonical form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the experiment kinds a config can name.
    ListExperiments,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<24}{}", k.name(), k.summary());
            }
            code(EXIT_OK)
        }
        Command::Validate { config } => match load_config(&config).and_then(|c| c.canonical_json()) {
            Ok(text) => {
                println!("{text}");
                code(EXIT_OK)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(EXIT_CONFIG)
            }
        },
        Command::Run { config, out, workers } => {
            let out = out
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let mut cfgs: Vec<ExperimentConfig> = Vec::new();
            for path in &config {
                match load_config(path) {
                    Ok(c) => cfgs.push(c),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return code(EXIT_CONFIG);
                    }
                }
            }
            let results = match run_experiments(&cfgs, workers) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(EXIT_CONFIG);
                }
            };
            let (mut numeric, mut failed) = (None, false);
            for (cfg, res) in cfgs.iter().zip(results) {
                let status = res.and_then(|rep| {
                    rep.write_to(&out)?;
                    Ok(rep)
                });
                match status {
                    Ok(rep) => {
                        for v in rep.verdicts.iter().filter(|v| !v.pass) {
                            eprintln!("{}: FAIL {} [{}] observed {:?}", cfg.id, v.assertion, v.series, v.observed);
                        }
                        println!("{}: {}", cfg.id, if rep.pass { "pass" } else { "fail" });
                        failed |= !rep.pass;
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", cfg.id);
                        numeric = numeric.max(Some(exit_code(&e)));
                    }
                }
            }
            // an experiment that could not be computed outranks a failed check
            code(match (numeric, failed) {
                (Some(c), _) => c,
                (None, true) => EXIT_ASSERTION,
                (None, false) => EXIT_OK,
            })
        }
    }
}
