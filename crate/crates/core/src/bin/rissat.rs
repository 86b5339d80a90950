use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rissat::harness::{self, tables, Experiment, ExperimentConfig};
use rissat::Error;

/// Energy-efficiency experiments for multi-RIS satellite links.
#[derive(Parser)]
#[command(name = "rissat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV tables and summary.json.
    Run {
        config: PathBuf,
        /// baseline, ie, nie or figures-all. Defaults to the config's `experiment`.
        #[arg(long)]
        experiment: Option<String>,
        /// Output directory. Defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file and print its hash.
    Validate { config: PathBuf },
    /// Print the column schema of a figure table, or list the tables.
    DescribeSchema { figure: Option<String> },
}

const CONFIG_ERROR: u8 = 2;
const EXPERIMENT_ERROR: u8 = 3;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_config_error() {
        ExitCode::from(CONFIG_ERROR)
    } else {
        ExitCode::from(EXPERIMENT_ERROR)
    }
}

fn config_fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(CONFIG_ERROR)
}

fn load(path: &PathBuf) -> Result<(ExperimentConfig, String), Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
    let cfg = ExperimentConfig::load(path)?;
    Ok((cfg, text))
}

fn run(config: PathBuf, experiment: Option<String>, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let (mut cfg, text) = match load(&config) {
        Ok(v) => v,
        Err(e) => return config_fail(&e),
    };
    let mut defaults = match harness::defaulted_fields(&text, &cfg) {
        Ok(d) => d,
        Err(e) => return config_fail(&e),
    };
    if let Some(seed) = seed {
        cfg.seed = Some(seed);
        defaults.retain(|k| k != "seed");
    }
    let Some(name) = experiment.or_else(|| cfg.experiment.clone()) else {
        eprintln!("error: no experiment given; pass --experiment or set `experiment` in the config");
        return ExitCode::from(CONFIG_ERROR);
    };
    let which: Experiment = match name.parse() {
        Ok(w) => w,
        Err(e) => return config_fail(&e),
    };
    let Some(dir) = out.or_else(|| cfg.output_dir.clone()) else {
        eprintln!("error: no output directory given; pass --out or set `output_dir` in the config");
        return ExitCode::from(CONFIG_ERROR);
    };
    let threads = match harness::threads_from_env() {
        Ok(t) => t,
        Err(e) => return config_fail(&e),
    };

    let output = match harness::with_threads(threads, || harness::run_experiment(&cfg, which)) {
        Ok(Ok(o)) => o,
        Ok(Err(e)) | Err(e) => return fail(&e),
    };
    let written = match harness::write_outputs(&output, &dir, &defaults) {
        Ok(w) => w,
        Err(e) => return fail(&e),
    };
    for path in written.csv.iter().chain(std::iter::once(&written.summary)) {
        println!("wrote {}", path.display());
    }
    if output.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for (table, message) in &output.failures {
            eprintln!("failed: {table}: {message}");
        }
        ExitCode::from(EXPERIMENT_ERROR)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, experiment, out, seed } => run(config, experiment, out, seed),
        Command::Validate { config } => match load(&config).and_then(|(cfg, _)| cfg.hash()) {
            Ok(hash) => {
                println!("ok config_hash={hash}");
                ExitCode::SUCCESS
            }
            Err(e) => config_fail(&e),
        },
        Command::DescribeSchema { figure: None } => {
            for s in tables::SCHEMAS {
                println!("{:<32} {}", s.name, s.description);
            }
            ExitCode::SUCCESS
        }
        Command::DescribeSchema { figure: Some(name) } => {
            let found = tables::schema(&name).or_else(|| tables::SCHEMAS.iter().find(|s| s.name.split('_').next() == Some(name.as_str())));
            match found {
                Some(s) => {
                    print!("{}", tables::describe(s));
                    ExitCode::SUCCESS
                }
                None => config_fail(&Error::Unknown { kind: "figure", name }),
            }
        }
    }
}
