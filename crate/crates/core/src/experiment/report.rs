//! CSV output and comparison of measured slopes with the predicted exponent.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{ensure, Result};
use crate::experiment::runner::ResultRow;
use crate::tradeoff::{estimate_slope, SlopeFit};

pub const CSV_COLUMNS: [&str; 11] =
    ["snr_db", "trials", "fer", "fer_lo", "fer_hi", "undetected_rate", "avg_rounds", "throughput_bpcu", "outage", "outage_lo", "outage_hi"];

/// Writes rows with shortest round-trip float formatting.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        let f = |x: f64| x.to_string();
        w.write_record([
            f(r.snr_db),
            r.trials.to_string(),
            f(r.fer),
            f(r.fer_lo),
            f(r.fer_hi),
            f(r.undetected_rate),
            f(r.avg_rounds),
            f(r.throughput_bpcu),
            f(r.outage),
            f(r.outage_lo),
            f(r.outage_hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    ensure!(header == CSV_COLUMNS, "unexpected CSV columns {header:?}");
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// A fitted slope or the reason none could be fitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeOutcome {
    Fit(SlopeFit),
    NotEstimable(String),
}

impl SlopeOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeOutcome::Fit(f) => Some(f.slope),
            SlopeOutcome::NotEstimable(_) => None,
        }
    }
}

impl std::fmt::Display for SlopeOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlopeOutcome::Fit(s) => write!(f, "{:.3} ({} points, rms residual {:.3})", s.slope, s.points, s.residual),
            SlopeOutcome::NotEstimable(why) => write!(f, "slope not estimable: {why}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeOptions {
    /// Minimum error (or outage) events for a point to be used.
    pub min_events: u64,
    /// Only points whose FER is within this many decades of the lowest
    /// usable FER enter the fit.
    pub decades: f64,
    pub min_points: usize,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        Self { min_events: 100, decades: 2.0, min_points: 3 }
    }
}

/// SNR points used for the high-SNR FER fit.
pub fn high_snr_points(rows: &[ResultRow], opts: &SlopeOptions) -> Vec<ResultRow> {
    let usable: Vec<ResultRow> = rows.iter().copied().filter(|r| r.errors() >= opts.min_events && r.fer > 0.0).collect();
    let Some(lowest) = usable.iter().map(|r| r.fer).reduce(f64::min) else { return Vec::new() };
    let ceiling = lowest * 10f64.powf(opts.decades) * (1.0 + 1e-9);
    usable.into_iter().filter(|r| r.fer <= ceiling).collect()
}

fn fit(points: Vec<(f64, f64)>, min_points: usize, what: &str) -> SlopeOutcome {
    if points.len() < min_points {
        return SlopeOutcome::NotEstimable(format!("{} usable {what} points, need {min_points}", points.len()));
    }
    match estimate_slope(&points) {
        Ok(f) => SlopeOutcome::Fit(f),
        Err(e) => SlopeOutcome::NotEstimable(e.to_string()),
    }
}

pub fn fer_slope(rows: &[ResultRow], opts: &SlopeOptions) -> SlopeOutcome {
    let pts = high_snr_points(rows, opts).iter().map(|r| (r.snr_db, r.fer)).collect();
    fit(pts, opts.min_points, "FER")
}

/// Outage slope over the same SNR points as [`fer_slope`].
pub fn outage_slope(rows: &[ResultRow], opts: &SlopeOptions) -> SlopeOutcome {
    let pts = high_snr_points(rows, opts)
        .iter()
        .filter(|r| r.outage.is_finite() && r.outage > 0.0 && (r.outage * r.trials as f64) > 0.0)
        .map(|r| (r.snr_db, r.outage))
        .collect();
    fit(pts, opts.min_points, "outage")
}

/// Measured slopes next to the predicted exponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overlay {
    pub predicted_d: u64,
    pub fer_slope: SlopeOutcome,
    pub outage_slope: SlopeOutcome,
    pub tolerance: f64,
    /// `None` when the FER slope could not be estimated.
    pub pass: Option<bool>,
}

pub fn overlay_theory(rows: &[ResultRow], predicted_d: u64, tolerance: f64, opts: &SlopeOptions) -> Overlay {
    let fer = fer_slope(rows, opts);
    let pass = fer.slope().map(|s| (s - predicted_d as f64).abs() <= tolerance);
    Overlay { predicted_d, fer_slope: fer, outage_slope: outage_slope(rows, opts), tolerance, pass }
}

impl std::fmt::Display for Overlay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "predicted exponent: {}", self.predicted_d)?;
        writeln!(f, "fer slope: {}", self.fer_slope)?;
        writeln!(f, "outage slope: {}", self.outage_slope)?;
        match self.pass {
            Some(p) => write!(f, "within {}: {}", self.tolerance, if p { "yes" } else { "no" }),
            None => write!(f, "within {}: slope not estimable", self.tolerance),
        }
    }
}
