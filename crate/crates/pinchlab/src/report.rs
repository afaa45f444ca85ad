//! Diagnostics as CSV and a JSON summary of pass/fail checks.

use crate::fatou::{OrbitTag, Raster};
use crate::pinch::TRecord;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const DIAGNOSTIC_COLUMNS: [&str; 5] = ["t", "residual", "leaf_diam", "probe_abs", "modulus_lb"];

/// Slack allowed on increases of the leaf-diameter series.
pub const MONOTONE_SLACK: f64 = 0.05;
pub const COLLAPSE_RATIO: f64 = 0.2;
pub const DIVERGENCE_THRESHOLD: f64 = 10.0;
pub const BOUNDED_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub residual: f64,
    pub leaf_diam: f64,
    pub probe_abs: f64,
    pub modulus_lb: f64,
}

impl From<&TRecord> for Row {
    fn from(r: &TRecord) -> Row {
        Row { t: r.t, residual: r.residual, leaf_diam: r.leaf_diam, probe_abs: r.probe_abs(), modulus_lb: r.modulus_lb }
    }
}

pub fn write_csv<W: Write>(rows: &[Row], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(DIAGNOSTIC_COLUMNS)?;
    for r in rows {
        wr.write_record([r.t, r.residual, r.leaf_diam, r.probe_abs, r.modulus_lb].map(|v| format!("{v:?}")))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<Row>, csv::Error> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect();
        if v.len() == 5 {
            out.push(Row { t: v[0], residual: v[1], leaf_diam: v[2], probe_abs: v[3], modulus_lb: v[4] });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// True when every step rises by at most `slack` relative to the previous value.
pub fn non_increasing(series: &[f64], slack: f64) -> bool {
    series.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

pub fn strictly_increasing(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] > w[0])
}

/// Checks recomputable from the CSV alone. `axis` selects the divergence
/// regime for the probe check instead of the bounded regime.
pub fn summarize(rows: &[Row], residual_tol: f64, axis: bool) -> Summary {
    let mut checks = Vec::new();
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    checks.push(Check { name: "solver_residual".into(), value: worst, threshold: residual_tol, pass: worst < residual_tol });
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let diam: Vec<f64> = rows.iter().map(|r| r.leaf_diam).collect();
        let ratio = last.leaf_diam / first.leaf_diam;
        if !axis {
            checks.push(Check {
                name: "leaf_diam_monotone".into(),
                value: diam.windows(2).map(|w| w[1] / w[0] - 1.0).fold(f64::NEG_INFINITY, f64::max),
                threshold: MONOTONE_SLACK,
                pass: non_increasing(&diam, MONOTONE_SLACK),
            });
            checks.push(Check { name: "leaf_diam_ratio".into(), value: ratio, threshold: COLLAPSE_RATIO, pass: ratio < COLLAPSE_RATIO });
        }
        let probe: Vec<f64> = rows.iter().map(|r| r.probe_abs).collect();
        if axis {
            let inc = strictly_increasing(&probe);
            checks.push(Check {
                name: "probe_divergent".into(),
                value: last.probe_abs,
                threshold: DIVERGENCE_THRESHOLD,
                pass: inc && last.probe_abs > DIVERGENCE_THRESHOLD,
            });
        } else {
            let peak = probe.iter().copied().fold(0.0, f64::max);
            let bound = BOUNDED_FACTOR * first.probe_abs;
            checks.push(Check { name: "probe_bounded".into(), value: peak, threshold: bound, pass: peak < bound });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Summary { rows: rows.len(), checks, pass }
}

pub fn write_json<W: Write, T: Serialize>(value: &T, w: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(w, value)
}

pub fn write_counts<W: Write>(r: &Raster, w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["class", "cells", "fraction"])?;
    let counts = r.counts();
    let total = r.cells.len().max(1) as f64;
    for tag in OrbitTag::ALL {
        let c = counts[tag.index()];
        wr.write_record([tag.name().to_string(), c.to_string(), format!("{:?}", c as f64 / total)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn save<F>(path: &Path, write: F) -> std::io::Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<(), Box<dyn std::error::Error>>,
{
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(&mut w).map_err(|e| std::io::Error::other(e.to_string()))?;
    w.flush()
}
