//! SNR sweeps with early stopping and deterministic parallel frames.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arq::{run_frame, FrameOutcome, Link, MetricsReport, Tally};
use crate::channel::NoiseMode;
use crate::error::Result;
use crate::experiment::spec::ExperimentSpec;
use crate::info::{outage_probability_until, MiModel};
use crate::rng::StreamFactory;
use crate::scalar::{db_to_linear, Real};
use crate::stats::Proportion;

/// Frames simulated between early-stopping checks. Fixed so results do not
/// depend on the worker count.
pub const FRAME_CHUNK: u64 = 1024;

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub trials: u64,
    pub fer: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    pub undetected_rate: f64,
    pub avg_rounds: f64,
    pub throughput_bpcu: f64,
    pub outage: f64,
    pub outage_lo: f64,
    pub outage_hi: f64,
}

impl ResultRow {
    /// Frame errors implied by `fer * trials`.
    pub fn errors(&self) -> u64 {
        (self.fer * self.trials as f64).round() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointResult {
    pub snr_db: f64,
    pub metrics: MetricsReport,
    pub outage: Option<Proportion>,
}

impl PointResult {
    pub fn row(&self) -> ResultRow {
        let m = &self.metrics;
        let (o, lo, hi) = self.outage.map_or((f64::NAN, f64::NAN, f64::NAN), |p| (p.estimate, p.lo, p.hi));
        ResultRow {
            snr_db: self.snr_db,
            trials: m.frames,
            fer: m.fer.estimate,
            fer_lo: m.fer.lo,
            fer_hi: m.fer.hi,
            undetected_rate: m.undetected.estimate,
            avg_rounds: m.avg_rounds,
            throughput_bpcu: m.throughput,
            outage: o,
            outage_lo: lo,
            outage_hi: hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultTable {
    pub name: String,
    pub rule: String,
    pub outage_model: Option<String>,
    pub points: Vec<PointResult>,
}

impl ResultTable {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.points.iter().map(PointResult::row).collect()
    }
}

/// One line of the optional per-frame trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub snr_db: f64,
    pub frame: u64,
    #[serde(flatten)]
    pub outcome: FrameOutcome,
}

/// Simulates frames at one SNR until `trials` frames and `target_errors`
/// errors are reached, or `max_trials` frames have run.
pub fn simulate_point<T: Real>(link: &Link<T>, spec: &ExperimentSpec, snr_db: f64, mut trace: Option<&mut dyn Write>) -> Result<MetricsReport> {
    let streams = StreamFactory::new(spec.seed);
    let rho = db_to_linear(snr_db);
    let mut tally = Tally::new(spec.system.l);
    let max_trials = spec.max_trials.max(spec.trials);
    while tally.frames < spec.trials || (tally.errors < spec.target_errors && tally.frames < max_trials) {
        let goal = if tally.frames < spec.trials { spec.trials } else { max_trials };
        let start = tally.frames;
        let len = FRAME_CHUNK.min(goal - start);
        let outcomes: Vec<FrameOutcome> = (start..start + len)
            .into_par_iter()
            .map(|f| run_frame(link, spec.statics, &spec.rule, rho, NoiseMode::Gaussian, &streams, f))
            .collect::<Result<_>>()?;
        for (i, o) in outcomes.iter().enumerate() {
            tally.add(o);
            if let Some(w) = trace.as_deref_mut() {
                serde_json::to_writer(&mut *w, &TraceRecord { snr_db, frame: start + i as u64, outcome: *o })?;
                w.write_all(b"\n")?;
            }
        }
    }
    tally.report(spec.system.r1_f64())
}

/// Outage estimate at one SNR for the final round.
pub fn simulate_outage<T: Real>(spec: &ExperimentSpec, model: &MiModel<T>, snr_db: f64) -> Result<Proportion> {
    let o = &spec.outage;
    outage_probability_until(
        &spec.system,
        spec.statics,
        T::lit(db_to_linear(snr_db)),
        spec.system.l,
        model,
        o.trials,
        o.max_trials,
        o.target_events,
        &StreamFactory::new(spec.seed),
    )
}

/// Runs every SNR point in order with scalar type `T`, reporting each
/// finished point to `observe`.
pub fn run_experiment_as<T: Real>(spec: &ExperimentSpec, mut observe: impl FnMut(&PointResult)) -> Result<ResultTable> {
    let problems = spec.violations();
    if !problems.is_empty() {
        return Err(crate::error::Error::InvalidConfig(problems));
    }
    let link = spec.link::<T>()?;
    let model = spec.mi_model::<T>()?;
    let mut trace_file = match &spec.trace {
        Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => None,
    };
    let mut points = Vec::with_capacity(spec.snr_db.len());
    for &snr in &spec.snr_db {
        let metrics = simulate_point(&link, spec, snr, trace_file.as_mut().map(|w| w as &mut dyn Write))?;
        let outage = match &model {
            Some(m) => Some(simulate_outage(spec, m, snr)?),
            None => None,
        };
        let p = PointResult { snr_db: snr, metrics, outage };
        observe(&p);
        points.push(p);
    }
    if let Some(mut w) = trace_file {
        w.flush()?;
    }
    Ok(ResultTable { name: spec.name.clone(), rule: spec.rule.to_string(), outage_model: model.map(|m| m.label().to_string()), points })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    run_experiment_as::<f64>(spec, |_| {})
}
