//! Per-iteration search traces and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 7] = [
    "iter",
    "cost",
    "best",
    "accepted",
    "temperature",
    "mean_coeff",
    "anchors",
];

pub const AGGREGATE_HEADER: [&str; 4] = ["iter", "mean_cost", "mean_best", "mean_coeff"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Cost of the current solution after the acceptance decision.
    pub cost: f64,
    pub best: f64,
    pub accepted: bool,
    pub temperature: f64,
    /// Mean of the coefficients sampled for all customers; DPR operators only.
    pub mean_coeff: Option<f64>,
    pub anchors: Vec<usize>,
}

/// CSV shape of a row: flag as 1/0, anchors space separated.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    iter: usize,
    cost: f64,
    best: f64,
    accepted: u8,
    temperature: f64,
    mean_coeff: Option<f64>,
    anchors: String,
}

impl From<&TraceRow> for Record {
    fn from(r: &TraceRow) -> Self {
        Record {
            iter: r.iter,
            cost: r.cost,
            best: r.best,
            accepted: r.accepted as u8,
            temperature: r.temperature,
            mean_coeff: r.mean_coeff,
            anchors: r
                .anchors
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

impl TryFrom<Record> for TraceRow {
    type Error = Error;

    fn try_from(r: Record) -> Result<Self> {
        let anchors = r
            .anchors
            .split_whitespace()
            .map(|a| {
                a.parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad anchor id {a:?}")))
            })
            .collect::<Result<_>>()?;
        let accepted = match r.accepted {
            0 => false,
            1 => true,
            other => {
                return Err(Error::InvalidParameter(format!("accepted flag {other}")));
            }
        };
        Ok(TraceRow {
            iter: r.iter,
            cost: r.cost,
            best: r.best,
            accepted,
            temperature: r.temperature,
            mean_coeff: r.mean_coeff,
            anchors,
        })
    }
}

pub fn write_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        w.serialize(Record::from(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(Error::Format(header.join(",")));
    }
    r.deserialize::<Record>()
        .map(|rec| TraceRow::try_from(rec?))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub iter: usize,
    pub mean_cost: f64,
    pub mean_best: f64,
    /// Mean over the runs that recorded a coefficient at this iteration.
    pub mean_coeff: Option<f64>,
}

/// Column-wise means across runs, one row per iteration index.
pub fn aggregate(traces: &[Vec<TraceRow>]) -> Result<Vec<AggregateRow>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidParameter("no traces to aggregate".into()))?;
    if let Some(t) = traces.iter().find(|t| t.len() != first.len()) {
        return Err(Error::InvalidParameter(format!(
            "ragged traces: {} vs {} rows",
            first.len(),
            t.len()
        )));
    }
    let runs = traces.len() as f64;
    let rows = (0..first.len())
        .map(|i| {
            let mut cost = 0.0;
            let mut best = 0.0;
            let mut coeff = 0.0;
            let mut n_coeff = 0usize;
            for t in traces {
                cost += t[i].cost;
                best += t[i].best;
                if let Some(c) = t[i].mean_coeff {
                    coeff += c;
                    n_coeff += 1;
                }
            }
            AggregateRow {
                iter: first[i].iter,
                mean_cost: cost / runs,
                mean_best: best / runs,
                mean_coeff: (n_coeff > 0).then(|| coeff / n_coeff as f64),
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            r.mean_cost.to_string(),
            r.mean_best.to_string(),
            r.mean_coeff.map_or_else(String::new, |c| c.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
