//! Experiment configuration, presets, per-seed CSV records and their summary.

mod config;
mod presets;
mod records;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    Algorithm, BackwardSection, ExperimentConfig, ForwardSection, LockSection, OneStepSection, Preset, StationarySection,
    TreeSection, PRESETS,
};
pub use presets::eval_report;
pub use records::{
    parse_records, quantile, summarize, summarize_records, write_records, write_summary, Record, Recorder, SummaryRow,
    RECORDS_HEADER, SUMMARY_HEADER,
};

use crate::error::Result;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "OBSRL_OUTPUT_DIR";

/// `$OBSRL_OUTPUT_DIR`, or `results` when unset.
pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"))
}

#[derive(Debug)]
pub struct RunReport {
    /// Directory holding the echoed config, per-seed files and the summary.
    pub dir: PathBuf,
    pub completed: Vec<u64>,
    /// Seeds that returned an error or panicked, with the message.
    pub failures: Vec<(u64, String)>,
    pub summary: Vec<SummaryRow>,
}

pub fn seed_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}.csv"))
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Resolve `config`, echo it to `<root>/<preset>/config.toml`, run all seeds in
/// parallel and write `seed-<s>.csv` per seed plus `summary.csv`. A failing
/// seed leaves `seed-<s>.error.txt` and does not stop the others.
pub fn run_preset(config: &ExperimentConfig, root: &Path) -> Result<RunReport> {
    let c = config.resolve()?;
    let dir = root.join(c.preset.name());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), c.to_toml()?)?;
    let outcomes: Vec<(u64, std::result::Result<Vec<Record>, String>)> = c
        .seeds
        .par_iter()
        .map(|&seed| {
            let out = catch_unwind(AssertUnwindSafe(|| presets::run_seed(&c, seed, &dir)));
            let out = match out {
                Ok(Ok(r)) => Ok(r),
                Ok(Err(e)) => Err(e.to_string()),
                Err(p) => Err(format!("panicked: {}", panic_message(p))),
            };
            (seed, out)
        })
        .collect();
    let mut all = vec![];
    let mut completed = vec![];
    let mut failures = vec![];
    for (seed, out) in outcomes {
        let error_file = dir.join(format!("seed-{seed}.error.txt"));
        match out {
            Ok(records) => {
                fs::write(seed_file(&dir, seed), write_records(&records)?)?;
                if error_file.exists() {
                    fs::remove_file(&error_file)?;
                }
                completed.push(seed);
                all.extend(records);
            }
            Err(msg) => {
                fs::write(&error_file, format!("{msg}\n"))?;
                failures.push((seed, msg));
            }
        }
    }
    let summary = if all.is_empty() {
        vec![]
    } else {
        let rows = summarize_records(&all)?;
        fs::write(dir.join("summary.csv"), write_summary(&rows)?)?;
        rows
    };
    Ok(RunReport {
        dir,
        completed,
        failures,
        summary,
    })
}
