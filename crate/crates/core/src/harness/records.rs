use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const RECORDS_HEADER: &str = "# obsrl records v1";
pub const SUMMARY_HEADER: &str = "# obsrl summary v1";
const COLUMNS: [&str; 6] = ["seed", "phase", "step", "samples", "metric", "value"];
const SUMMARY_COLUMNS: [&str; 8] = ["phase", "step", "metric", "n", "samples", "median", "q25", "q75"];

/// One measurement. `step` is a level, an iteration or a run index depending on the phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub seed: u64,
    pub phase: String,
    pub step: usize,
    /// Cumulative environment interactions when the measurement was taken.
    pub samples: u64,
    pub metric: String,
    pub value: f64,
}

/// Append-only record list for one seed.
#[derive(Debug)]
pub struct Recorder {
    seed: u64,
    records: Vec<Record>,
}

impl Recorder {
    pub fn new(seed: u64) -> Self {
        Recorder { seed, records: vec![] }
    }

    pub fn push(&mut self, phase: &str, step: usize, samples: u64, metric: &str, value: f64) {
        self.records.push(Record {
            seed: self.seed,
            phase: phase.into(),
            step,
            samples,
            metric: metric.into(),
            value,
        });
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Versioned CSV text: a header comment line, then the fixed columns.
pub fn write_records(records: &[Record]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.phase.clone(),
            r.step.to_string(),
            r.samples.to_string(),
            r.metric.clone(),
            r.value.to_string(),
        ])
        .map_err(csv_err)?;
    }
    Ok(format!("{RECORDS_HEADER}\n{}", finish(w)?))
}

fn body<'a>(text: &'a str, header: &str) -> Result<&'a str> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end() != header {
        return Err(Error::Parse(format!("expected header {header:?}, found {first:?}")));
    }
    Ok(rest)
}

pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    let mut r = csv::Reader::from_reader(body(text, RECORDS_HEADER)?.as_bytes());
    let cols = r.headers().map_err(csv_err)?.clone();
    if cols.iter().ne(COLUMNS) {
        return Err(Error::Parse(format!("unexpected columns {cols:?}")));
    }
    r.records()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            let field = |i: usize| row.get(i).unwrap_or("");
            let num = |i: usize| -> Result<u64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad integer {:?} in column {}", field(i), COLUMNS[i])))
            };
            Ok(Record {
                seed: num(0)?,
                phase: field(1).into(),
                step: num(2)? as usize,
                samples: num(3)?,
                metric: field(4).into(),
                value: field(5)
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value {:?}", field(5))))?,
            })
        })
        .collect()
}

/// Linear interpolation between order statistics at position `(n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Empty("quantile of no values".into()));
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b || lo == hi {
        return Ok(a);
    }
    Ok(a + (h - lo as f64) * (b - a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub phase: String,
    pub step: usize,
    pub metric: String,
    pub n: usize,
    /// Median of the cumulative samples across seeds.
    pub samples: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Median and quartiles per `(phase, step, metric)`, in sorted key order.
pub fn summarize_records(records: &[Record]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Empty("no records to summarize".into()));
    }
    let mut groups: BTreeMap<(&str, usize, &str), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((&r.phase, r.step, &r.metric)).or_default();
        g.0.push(r.value);
        g.1.push(r.samples as f64);
    }
    groups
        .into_iter()
        .map(|((phase, step, metric), (mut v, mut s))| {
            v.sort_by(f64::total_cmp);
            s.sort_by(f64::total_cmp);
            Ok(SummaryRow {
                phase: phase.into(),
                step,
                metric: metric.into(),
                n: v.len(),
                samples: quantile(&s, 0.5)?,
                median: quantile(&v, 0.5)?,
                q25: quantile(&v, 0.25)?,
                q75: quantile(&v, 0.75)?,
            })
        })
        .collect()
}

pub fn write_summary(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(SUMMARY_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.phase.clone(),
            r.step.to_string(),
            r.metric.clone(),
            r.n.to_string(),
            r.samples.to_string(),
            r.median.to_string(),
            r.q25.to_string(),
            r.q75.to_string(),
        ])
        .map_err(csv_err)?;
    }
    Ok(format!("{SUMMARY_HEADER}\n{}", finish(w)?))
}

/// Read per-seed record files and aggregate them.
pub fn summarize<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<SummaryRow>> {
    if paths.is_empty() {
        return Err(Error::Empty("no input files".into()));
    }
    let mut all = vec![];
    for p in paths {
        let text = fs::read_to_string(p.as_ref())?;
        all.extend(parse_records(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.as_ref().display())))?);
    }
    summarize_records(&all)
}
