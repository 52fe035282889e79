use std::fmt::Write as _;
use std::path::Path;

use super::{DatasetObs, Provenance, StateOnlyDataset};
use crate::error::{Error, Result};
use crate::textfmt::parse_usize;

const MAGIC: &str = "# state-only dataset v1";

/// Header lines (`key value`), then one block per level: `level h` followed by
/// one observation per line.
pub fn write_dataset<O: DatasetObs>(data: &StateOnlyDataset<O>) -> String {
    let mut out = String::new();
    let dim = data.levels().iter().flatten().next().map_or(0, |o| o.width());
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "env {}", data.env_id).unwrap();
    writeln!(out, "horizon {}", data.horizon()).unwrap();
    writeln!(out, "mode {}", O::MODE).unwrap();
    writeln!(out, "dim {dim}").unwrap();
    writeln!(out, "provenance {}", data.provenance).unwrap();
    writeln!(out, "seed {}", data.seed).unwrap();
    let counts: Vec<String> = data.counts().iter().map(|c| c.to_string()).collect();
    writeln!(out, "counts {}", counts.join(" ")).unwrap();
    for (h, level) in data.levels().iter().enumerate() {
        writeln!(out, "level {h}").unwrap();
        for obs in level {
            writeln!(out, "{}", obs.write_line()).unwrap();
        }
    }
    out
}

fn header<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let line = lines.next().ok_or_else(|| Error::Parse(format!("missing {key} header")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Parse(format!("expected {key} header, found {line:?}")))
}

pub fn parse_dataset<O: DatasetObs>(text: &str) -> Result<StateOnlyDataset<O>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::Parse("missing dataset header".into()));
    }
    let env = header(&mut lines, "env")?.to_string();
    let horizon = parse_usize(header(&mut lines, "horizon")?)?;
    let mode = header(&mut lines, "mode")?;
    if mode != O::MODE {
        return Err(Error::Parse(format!("dataset mode is {mode}, expected {}", O::MODE)));
    }
    let dim = parse_usize(header(&mut lines, "dim")?)?;
    let provenance: Provenance = header(&mut lines, "provenance")?.parse()?;
    let seed = header(&mut lines, "seed")?
        .parse::<u64>()
        .map_err(|_| Error::Parse("bad seed".into()))?;
    let counts = header(&mut lines, "counts")?
        .split_whitespace()
        .map(parse_usize)
        .collect::<Result<Vec<_>>>()?;
    if counts.len() != horizon {
        return Err(Error::DatasetLoad {
            level: counts.len().min(horizon),
            msg: format!("header declares horizon {horizon} but lists {} level counts", counts.len()),
        });
    }
    let mut levels = Vec::with_capacity(horizon);
    for (h, &count) in counts.iter().enumerate() {
        let truncated = |msg: &str| Error::DatasetLoad { level: h, msg: msg.to_string() };
        match lines.next() {
            Some(l) if l.trim() == format!("level {h}") => {}
            Some(l) => return Err(truncated(&format!("expected level marker, found {l:?}"))),
            None => return Err(truncated("file ends before this level")),
        }
        let mut level = Vec::with_capacity(count);
        for i in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| truncated(&format!("only {i} of {count} observations present")))?;
            level.push(O::parse_line(line, dim).map_err(|e| truncated(&e.to_string()))?);
        }
        levels.push(level);
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(Error::DatasetLoad {
            level: horizon,
            msg: format!("unexpected trailing content {extra:?}"),
        });
    }
    Ok(StateOnlyDataset::new(&env, provenance, seed, levels))
}

pub fn save_dataset<O: DatasetObs>(data: &StateOnlyDataset<O>, path: &Path) -> Result<()> {
    std::fs::write(path, write_dataset(data))?;
    Ok(())
}

pub fn load_dataset<O: DatasetObs>(path: &Path) -> Result<StateOnlyDataset<O>> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

/// Load and require exactly `horizon` levels.
pub fn load_dataset_expecting<O: DatasetObs>(path: &Path, horizon: usize) -> Result<StateOnlyDataset<O>> {
    let data = load_dataset::<O>(path)?;
    if data.horizon() != horizon {
        return Err(Error::DatasetLoad {
            level: data.horizon().min(horizon),
            msg: format!("dataset has {} levels, expected {horizon}", data.horizon()),
        });
    }
    Ok(data)
}
