//! Configuration loading, experiment orchestration and output files.
//!
//! Every experiment derives its random streams from the master seed and its
//! own name, so running experiments concurrently, or with any number of
//! threads, never changes the bytes written.

pub mod config;
pub mod experiments;
pub mod tables;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Map, Value};

pub use config::ExperimentConfig;
pub use tables::{ResultTable, TableMeta};

use crate::error::{Error, Result};
use crate::rng::SeedTree;
use experiments::GroupOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Baseline,
    Ie,
    Nie,
    FiguresAll,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Baseline, Experiment::Ie, Experiment::Nie, Experiment::FiguresAll];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Baseline => "baseline",
            Experiment::Ie => "ie",
            Experiment::Nie => "nie",
            Experiment::FiguresAll => "figures-all",
        }
    }

    /// Whether the experiment draws random numbers and so needs a seed.
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Experiment::Baseline)
    }

    /// Names of the tables the experiment writes.
    pub fn tables(self) -> Vec<&'static str> {
        tables::SCHEMAS
            .iter()
            .filter(|s| self == Experiment::FiguresAll || s.experiment == self.name())
            .map(|s| s.name)
            .collect()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "experiment", name: s.to_string() })
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path)
}

/// Config keys that `text` leaves at their defaults.
pub fn defaulted_fields(text: &str, cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let raw: toml::Value = toml::from_str(text).map_err(|e| Error::ConfigParse { path: PathBuf::from("<inline>"), message: e.to_string() })?;
    let resolved = toml::Value::try_from(cfg).map_err(|e| Error::Serialize(e.to_string()))?;
    Ok(config::defaulted_keys(&raw, &resolved))
}

/// Tables, failures and summary of one run, before anything is written.
#[derive(Debug)]
pub struct RunOutput {
    pub experiment: Experiment,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tables: Vec<ResultTable>,
    /// Table name and error message of every table that could not be built.
    pub failures: Vec<(String, String)>,
    /// `ie` and `nie` summary blocks, when produced.
    pub summary: Map<String, Value>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Runs an experiment in memory.
pub fn run_experiment(cfg: &ExperimentConfig, which: Experiment) -> Result<RunOutput> {
    cfg.validate()?;
    if which.is_stochastic() && cfg.seed.is_none() {
        return Err(Error::invalid("seed", format!("required by the `{which}` experiment")));
    }
    let scenario = cfg.build_scenario()?;
    let root = SeedTree::new(cfg.seed.unwrap_or(0));
    let (baseline, ie, nie) = match which {
        Experiment::Baseline => (Some(experiments::baseline_group(cfg, &scenario)), None, None),
        Experiment::Ie => (None, Some(experiments::ie_group(cfg, &scenario, root.named("ie"))), None),
        Experiment::Nie => (None, None, Some(experiments::nie_group(cfg, &scenario, root.named("nie")))),
        Experiment::FiguresAll => {
            let (baseline, (ie, nie)) = rayon::join(
                || experiments::baseline_group(cfg, &scenario),
                || {
                    rayon::join(
                        || experiments::ie_group(cfg, &scenario, root.named("ie")),
                        || experiments::nie_group(cfg, &scenario, root.named("nie")),
                    )
                },
            );
            (Some(baseline), Some(ie), Some(nie))
        }
    };

    let mut out = RunOutput {
        experiment: which,
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        tables: Vec::new(),
        failures: Vec::new(),
        summary: Map::new(),
    };
    for (key, group) in [("baseline", baseline), ("ie", ie), ("nie", nie)] {
        let Some(GroupOutput { tables, failures, summary }) = group else { continue };
        out.tables.extend(tables);
        out.failures.extend(failures);
        if let Some(v) = summary {
            out.summary.insert(key.to_string(), v);
        }
    }
    out.tables.sort_by_key(|t| tables::SCHEMAS.iter().position(|s| s.name == t.name));
    Ok(out)
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub csv: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Writes one CSV per table plus `summary.json` into `dir`. Only the
/// summary carries a timestamp, so CSVs of identical runs are identical.
pub fn write_outputs(out: &RunOutput, dir: &Path, defaults: &[String]) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let meta = TableMeta { config_hash: out.config_hash.clone(), seed: out.seed, defaults: defaults.to_vec() };
    let mut csv = Vec::new();
    for t in &out.tables {
        t.save(dir, &meta)?;
        csv.push(dir.join(format!("{}.csv", t.name)));
    }
    let failures: Map<String, Value> = out.failures.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut summary = json!({
        "experiment": out.experiment.name(),
        "config_hash": out.config_hash,
        "seed": out.seed,
        "generated_at": humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
        "defaults": defaults,
        "tables": out.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        "failures": failures,
    });
    for (k, v) in &out.summary {
        summary[k] = v.clone();
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(WrittenFiles { csv, summary: path })
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("RISSAT_THREADS", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Thread cap from `RISSAT_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("RISSAT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::invalid("RISSAT_THREADS", format!("`{v}` is not a positive integer"))),
        },
    }
}
