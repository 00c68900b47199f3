//! Aggregation of replicate results into sweep tables, plus scaling-law fits.

mod fit;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, CSV_VERSION_HEADER};

pub use fit::{compare_models, fit_scaling, ModelComparison, ScalingFit, ScalingModel};

/// Column header of sweep CSV files (after the version line).
pub const SWEEP_CSV_COLUMNS: &str = "scenario,n,rate_class,replicate,metric,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NetworkAvgAge,
    SpreadTime,
    #[serde(rename = "n0_count")]
    SourceCount,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::NetworkAvgAge => "network_avg_age",
            Metric::SpreadTime => "spread_time",
            Metric::SourceCount => "n0_count",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "network_avg_age" => Ok(Metric::NetworkAvgAge),
            "spread_time" => Ok(Metric::SpreadTime),
            "n0_count" => Ok(Metric::SourceCount),
            other => Err(Error::Aggregation(format!("unknown metric {other:?}"))),
        }
    }
}

/// One replicate's measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub n: usize,
    pub rate_class: String,
    pub replicate: usize,
    pub metric: Metric,
    pub value: f64,
}

/// Per-(scenario, rate class, n) summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub scenario: String,
    pub rate_class: String,
    pub n: usize,
    pub metric: Metric,
    pub replicates: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub groups: Vec<GroupSummary>,
}

/// Groups rows by `(scenario, rate_class, n)` and summarises each group.
/// Output ordering is independent of input ordering.
pub fn aggregate(rows: Vec<SweepRow>) -> Result<SweepTable> {
    if rows.is_empty() {
        return Err(Error::Aggregation("no rows to aggregate".into()));
    }
    let mut rows = rows;
    rows.sort_by(|a, b| {
        (&a.scenario, &a.rate_class, a.n, a.metric, a.replicate)
            .cmp(&(&b.scenario, &b.rate_class, b.n, b.metric, b.replicate))
            .then(a.value.total_cmp(&b.value))
    });
    let mut groups: BTreeMap<(&str, &str, usize), (Metric, Vec<f64>)> = BTreeMap::new();
    for row in &rows {
        let entry = groups
            .entry((&row.scenario, &row.rate_class, row.n))
            .or_insert_with(|| (row.metric, Vec::new()));
        if entry.0 != row.metric {
            return Err(Error::Aggregation(format!(
                "group ({}, {}, n = {}) mixes metrics {} and {}",
                row.scenario, row.rate_class, row.n, entry.0, row.metric
            )));
        }
        entry.1.push(row.value);
    }
    let groups = groups
        .into_iter()
        .map(|((scenario, rate_class, n), (metric, values))| {
            let (ci_low, ci_high) = stats::ci95(&values);
            GroupSummary {
                scenario: scenario.to_string(),
                rate_class: rate_class.to_string(),
                n,
                metric,
                replicates: values.len(),
                mean: stats::mean(&values),
                sd: stats::std_dev(&values),
                ci_low,
                ci_high,
            }
        })
        .collect();
    Ok(SweepTable { rows, groups })
}

impl SweepTable {
    /// `(n, mean)` points of one curve, sorted by `n`.
    pub fn series(&self, scenario: &str, rate_class: &str) -> Vec<(f64, f64)> {
        self.groups
            .iter()
            .filter(|g| g.scenario == scenario && g.rate_class == rate_class)
            .map(|g| (g.n as f64, g.mean))
            .collect()
    }

    pub fn group(&self, scenario: &str, rate_class: &str, n: usize) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.scenario == scenario && g.rate_class == rate_class && g.n == n)
    }

    /// Distinct `(scenario, rate_class)` pairs in table order.
    pub fn curves(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for g in &self.groups {
            if !out.iter().any(|(s, r)| *s == g.scenario && *r == g.rate_class) {
                out.push((g.scenario.clone(), g.rate_class.clone()));
            }
        }
        out
    }

    /// Serialises the rows as versioned CSV.
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_HEADER);
    out.push('\n');
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SWEEP_CSV_COLUMNS.split(',')).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.scenario.as_str(),
            &r.n.to_string(),
            &r.rate_class,
            &r.replicate.to_string(),
            r.metric.as_str(),
            &r.value.to_string(),
        ])
        .expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    out.push_str(std::str::from_utf8(&bytes).expect("utf-8 fields"));
    out
}

/// Parses sweep CSV, requiring the version line and exact column header.
pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end() != CSV_VERSION_HEADER {
        return Err(Error::Aggregation(format!(
            "expected version line {CSV_VERSION_HEADER:?}, found {first:?}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Aggregation(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != SWEEP_CSV_COLUMNS {
        return Err(Error::Aggregation(format!("unexpected columns {header:?}")));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Aggregation(e.to_string()))?;
        let bad = |what: &str| Error::Aggregation(format!("row {}: bad {what}", idx + 1));
        rows.push(SweepRow {
            scenario: record[0].to_string(),
            n: record[1].parse().map_err(|_| bad("n"))?,
            rate_class: record[2].to_string(),
            replicate: record[3].parse().map_err(|_| bad("replicate"))?,
            metric: record[4].parse()?,
            value: record[5].parse().map_err(|_| bad("value"))?,
        });
    }
    Ok(rows)
}
