//! CSV emission, parsing, and grouped aggregation of run records.
//!
//! Reals are rendered with 17 significant digits (`{:.16e}`), which parses
//! back to the identical `f64`, so a CSV round trip is bit-exact. Labels are
//! validated to be alphanumeric/underscore, so no quoting is ever needed.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::RunRecord;
use crate::error::{Error, Result};

/// Record fields usable as aggregation keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupField {
    Experiment,
    Algorithm,
    Seed,
    Index,
    Metric,
}

/// One aggregated group. Fields used as keys are `Some`; aggregated-away
/// fields are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub experiment: Option<String>,
    pub algorithm: Option<String>,
    pub seed: Option<u64>,
    pub index: Option<u64>,
    pub metric: Option<String>,
    pub mean: f64,
    pub std: f64,
    pub count: u64,
}

type Key = (
    Option<String>,
    Option<String>,
    Option<u64>,
    Option<u64>,
    Option<String>,
);

fn key_of(record: &RunRecord, keys: &[GroupField]) -> Key {
    let has = |f| keys.contains(&f);
    (
        has(GroupField::Experiment).then(|| record.experiment.clone()),
        has(GroupField::Algorithm).then(|| record.algorithm.clone()),
        has(GroupField::Seed).then_some(record.seed),
        has(GroupField::Index).then_some(record.index),
        has(GroupField::Metric).then(|| record.metric.clone()),
    )
}

/// Group records by the chosen key fields and report mean, sample standard
/// deviation (n-1 denominator, 0 for singleton groups), and count. Rows come
/// back in key order, so output is deterministic.
pub fn aggregate(records: &[RunRecord], keys: &[GroupField]) -> Result<Vec<Summary>> {
    if records.is_empty() {
        return Err(Error::Config("aggregate: no records".into()));
    }
    let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    for record in records {
        groups.entry(key_of(record, keys)).or_default().push(record.value);
    }
    Ok(groups
        .into_iter()
        .map(|(key, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let (experiment, algorithm, seed, index, metric) = key;
            Summary {
                experiment,
                algorithm,
                seed,
                index,
                metric,
                mean,
                std,
                count: values.len() as u64,
            }
        })
        .collect())
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records_csv(records: &[RunRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "experiment,algorithm,seed,index,metric,value")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.experiment,
            r.algorithm,
            r.seed,
            r.index,
            r.metric,
            fmt_value(r.value)
        )?;
    }
    Ok(())
}

pub fn records_to_csv_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_records_csv(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn write_summaries_csv(summaries: &[Summary], mut w: impl Write) -> Result<()> {
    writeln!(w, "experiment,algorithm,seed,index,metric,mean,std,count")?;
    let opt_u64 = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            s.experiment.clone().unwrap_or_default(),
            s.algorithm.clone().unwrap_or_default(),
            opt_u64(s.seed),
            opt_u64(s.index),
            s.metric.clone().unwrap_or_default(),
            fmt_value(s.mean),
            fmt_value(s.std),
            s.count
        )?;
    }
    Ok(())
}

pub fn summaries_to_csv_string(summaries: &[Summary]) -> String {
    let mut buf = Vec::new();
    write_summaries_csv(summaries, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Parse a record CSV produced by [`write_records_csv`].
pub fn parse_csv(reader: impl BufRead) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            continue; // header
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Config(format!(
                "csv line {} has {} fields, expected 6",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_err = |what: &str| Error::Config(format!("csv line {}: bad {what}", lineno + 1));
        records.push(RunRecord {
            experiment: fields[0].to_string(),
            algorithm: fields[1].to_string(),
            seed: fields[2].parse().map_err(|_| parse_err("seed"))?,
            index: fields[3].parse().map_err(|_| parse_err("index"))?,
            metric: fields[4].to_string(),
            value: fields[5].parse().map_err(|_| parse_err("value"))?,
        });
    }
    Ok(records)
}
