//! Aggregation of frame outcomes into error rate, latency and throughput.

use serde::{Deserialize, Serialize};

use crate::arq::engine::FrameOutcome;
use crate::error::{ensure, Result};
use crate::stats::{Proportion, Z95};

/// Mergeable counters over frames; merge order does not matter.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub frames: u64,
    pub errors: u64,
    pub undetected: u64,
    pub detected_at_l: u64,
    pub rounds_sum: u64,
    /// `rounds_hist[l]`: frames that used `l + 1` rounds.
    pub rounds_hist: Vec<u64>,
    /// `undetected_by_round[l]`: wrong messages accepted at round `l + 1`.
    pub undetected_by_round: Vec<u64>,
}

impl Tally {
    pub fn new(l: usize) -> Self {
        Self { rounds_hist: vec![0; l], undetected_by_round: vec![0; l], ..Self::default() }
    }

    pub fn add(&mut self, o: &FrameOutcome) {
        self.frames += 1;
        self.errors += u64::from(!o.correct);
        self.undetected += u64::from(o.undetected_error);
        self.detected_at_l += u64::from(o.detected_at_l);
        self.rounds_sum += o.rounds_used as u64;
        if self.rounds_hist.len() < o.rounds_used {
            self.rounds_hist.resize(o.rounds_used, 0);
            self.undetected_by_round.resize(o.rounds_used, 0);
        }
        self.rounds_hist[o.rounds_used - 1] += 1;
        self.undetected_by_round[o.rounds_used - 1] += u64::from(o.undetected_error);
    }

    pub fn merge(&mut self, other: &Tally) {
        self.frames += other.frames;
        self.errors += other.errors;
        self.undetected += other.undetected;
        self.detected_at_l += other.detected_at_l;
        self.rounds_sum += other.rounds_sum;
        if self.rounds_hist.len() < other.rounds_hist.len() {
            self.rounds_hist.resize(other.rounds_hist.len(), 0);
            self.undetected_by_round.resize(other.rounds_hist.len(), 0);
        }
        for (a, b) in self.rounds_hist.iter_mut().zip(&other.rounds_hist) {
            *a += b;
        }
        for (a, b) in self.undetected_by_round.iter_mut().zip(&other.undetected_by_round) {
            *a += b;
        }
    }

    pub fn report(&self, r1: f64) -> Result<MetricsReport> {
        ensure!(self.frames > 0, "no frames to summarize");
        let n = self.frames as f64;
        let avg = self.rounds_sum as f64 / n;
        let second: f64 = self.rounds_hist.iter().enumerate().map(|(i, &c)| ((i + 1) as f64).powi(2) * c as f64).sum::<f64>() / n;
        let var = (second - avg * avg).max(0.0);
        let half = Z95 * (var / n).sqrt();
        let (lo, hi) = ((avg - half).max(1.0), (avg + half).min(self.rounds_hist.len().max(1) as f64));
        Ok(MetricsReport {
            frames: self.frames,
            detected_at_l: self.detected_at_l,
            fer: Proportion::new(self.errors, self.frames),
            undetected: Proportion::new(self.undetected, self.frames),
            avg_rounds: avg,
            avg_rounds_lo: lo,
            avg_rounds_hi: hi,
            throughput: r1 / avg,
            throughput_lo: r1 / hi,
            throughput_hi: r1 / lo,
            rounds_hist: self.rounds_hist.clone(),
            undetected_by_round: self.undetected_by_round.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: u64,
    pub detected_at_l: u64,
    pub fer: Proportion,
    pub undetected: Proportion,
    pub avg_rounds: f64,
    pub avg_rounds_lo: f64,
    pub avg_rounds_hi: f64,
    /// `r1 / avg_rounds`, bits per channel use.
    pub throughput: f64,
    pub throughput_lo: f64,
    pub throughput_hi: f64,
    pub rounds_hist: Vec<u64>,
    pub undetected_by_round: Vec<u64>,
}

pub fn compute_metrics(outcomes: &[FrameOutcome], r1: f64) -> Result<MetricsReport> {
    ensure!(!outcomes.is_empty(), "no frames to summarize");
    let l = outcomes.iter().map(|o| o.rounds_used).max().unwrap_or(1);
    let mut t = Tally::new(l);
    outcomes.iter().for_each(|o| t.add(o));
    t.report(r1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(rounds_used: usize, correct: bool, undetected_error: bool, detected_at_l: bool) -> FrameOutcome {
        FrameOutcome { rounds_used, correct, undetected_error, detected_at_l }
    }

    #[test]
    fn all_first_round() {
        let m = compute_metrics(&[o(1, true, false, false); 10], 0.98).unwrap();
        assert_eq!(m.avg_rounds, 1.0);
        assert_eq!(m.throughput, 0.98);
        assert_eq!(m.fer.estimate, 0.0);
    }

    #[test]
    fn all_erased_once() {
        let m = compute_metrics(&[o(2, true, false, false); 7], 1.0).unwrap();
        assert_eq!(m.avg_rounds, 2.0);
        assert_eq!(m.throughput, 0.5);
    }

    #[test]
    fn hand_tabulated_mix() {
        // rounds 1,1,2,3,4 ; errors: one undetected at round 1, one forced wrong at 4
        let v = [o(1, true, false, false), o(1, false, true, false), o(2, true, false, false), o(3, true, false, false), o(4, false, false, true)];
        let m = compute_metrics(&v, 2.0).unwrap();
        assert_eq!(m.avg_rounds, 11.0 / 5.0);
        assert_eq!(m.throughput, 2.0 / (11.0 / 5.0));
        assert_eq!(m.fer.estimate, 0.4);
        assert_eq!(m.undetected.estimate, 0.2);
        assert_eq!(m.rounds_hist, vec![2, 1, 1, 1]);
        assert_eq!(m.undetected_by_round, vec![1, 0, 0, 0]);
        assert_eq!(m.detected_at_l, 1);
        assert!(m.avg_rounds_lo <= m.avg_rounds && m.avg_rounds <= m.avg_rounds_hi);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(compute_metrics(&[], 1.0).is_err());
        assert!(Tally::new(2).report(1.0).is_err());
    }

    #[test]
    fn merge_matches_sequential() {
        let v = [o(1, true, false, false), o(2, false, false, true), o(2, true, false, false)];
        let mut a = Tally::new(2);
        a.add(&v[0]);
        let mut b = Tally::new(2);
        b.add(&v[1]);
        b.add(&v[2]);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.report(1.0).unwrap(), compute_metrics(&v, 1.0).unwrap());
    }
}
