//! Acceptance rules deciding between delivering a message and asking for
//! another round.

use std::fmt;

use crate::error::{ensure, Result};
use crate::fec::DetectorKind;
use crate::scalar::Real;

/// Decoder used to form the estimate examined by a genie-aided rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecoderKind {
    /// Viterbi decoding of detector LLRs.
    Viterbi,
    /// Iterative detection and BCJR decoding.
    Iterative { iterations: usize, detector: DetectorKind },
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderKind::Viterbi => f.write_str("viterbi"),
            DecoderKind::Iterative { iterations, detector } => write!(f, "iterative({detector}, {iterations} it)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecisionRule {
    /// Perfect error detection: a genie compares the estimate with the truth.
    /// A benchmark, not an implementable receiver.
    Ped { decoder: DecoderKind },
    /// Accept iff exactly one list candidate lies within radius
    /// `ell B T Nr (1 + delta)`, `delta = beta ln rho`.
    BoundedDistance { beta: f64, list_size: usize },
    /// Accept iff every information-bit posterior has magnitude at least
    /// `theta = max{1, beta ln rho}`.
    MinLlr { beta: f64, iterations: usize, detector: DetectorKind },
}

impl DecisionRule {
    pub fn name(&self) -> &'static str {
        match self {
            DecisionRule::Ped { .. } => "ped",
            DecisionRule::BoundedDistance { .. } => "bounded_distance",
            DecisionRule::MinLlr { .. } => "minllr",
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            DecisionRule::Ped { decoder } => {
                if let DecoderKind::Iterative { iterations: 0, .. } = decoder {
                    out.push("arq.iterations must be at least 1".into());
                }
            }
            DecisionRule::BoundedDistance { beta, list_size } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    out.push(format!("arq.beta must be positive, got {beta}"));
                }
                if list_size < 2 {
                    out.push(format!("arq.list_size must be at least 2, got {list_size}"));
                }
            }
            DecisionRule::MinLlr { beta, iterations, .. } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    out.push(format!("arq.beta must be positive, got {beta}"));
                }
                if iterations == 0 {
                    out.push("arq.iterations must be at least 1".into());
                }
            }
        }
        out
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionRule::Ped { decoder } => write!(f, "ped (genie benchmark), {decoder}"),
            DecisionRule::BoundedDistance { beta, list_size } => write!(f, "bounded_distance(beta={beta}, list={list_size})"),
            DecisionRule::MinLlr { beta, iterations, detector } => write!(f, "minllr(beta={beta}, {detector}, {iterations} it)"),
        }
    }
}

/// Outcome of applying a rule after a round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept(Vec<u8>),
    /// Request another round; carries the best estimate in case this is the
    /// last round and a decision is forced.
    Erase(Vec<u8>),
}

/// `delta = beta ln rho`, clamped at 0 for `rho <= 1`.
pub fn delta_schedule(beta: f64, rho: f64) -> f64 {
    (beta * rho.ln()).max(0.0)
}

/// `theta = max{1, beta ln rho}`.
pub fn theta_schedule(beta: f64, rho: f64) -> f64 {
    (beta * rho.ln()).max(1.0)
}

/// Chernoff bound on the noise leaving the decoding sphere:
/// `(1 + delta)^n exp(-n delta)` with `n = ell B T Nr`.
pub fn chernoff_undetected_bound(ell: usize, b: usize, t: usize, nr: usize, delta: f64) -> Result<f64> {
    ensure!(delta >= 0.0, "delta must be non-negative");
    let n = (ell * b * t * nr) as f64;
    Ok((n * (delta.ln_1p() - delta)).exp())
}

/// Genie rule: accept iff the estimate is the transmitted message.
pub fn ped_decide(decoded: &[u8], truth: &[u8]) -> bool {
    decoded == truth
}

/// Index of the unique candidate within `radius`, if exactly one is.
pub fn bounded_distance_decide<T: Real>(distances: &[T], radius: T) -> Option<usize> {
    let mut inside = distances.iter().enumerate().filter(|(_, &d)| d <= radius).map(|(i, _)| i);
    match (inside.next(), inside.next()) {
        (Some(i), None) => Some(i),
        _ => None,
    }
}

/// Accept iff `min |llr| >= theta`.
pub fn minllr_decide<T: Real>(posteriors: &[T], theta: T) -> bool {
    !posteriors.is_empty() && posteriors.iter().all(|l| l.abs() >= theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(theta_schedule(16.0, 1.0), 1.0);
        assert!((theta_schedule(16.0, 100.0) - 16.0 * 100f64.ln()).abs() < 1e-12);
        assert_eq!(delta_schedule(0.02, 0.5), 0.0);
        assert!((delta_schedule(0.02, 1000.0) - 0.02 * 1000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn chernoff_values() {
        assert_eq!(chernoff_undetected_bound(1, 1, 100, 1, 0.0).unwrap(), 1.0);
        let v = chernoff_undetected_bound(1, 1, 100, 1, 0.1).unwrap();
        assert!((v - (100.0 * 1.1f64.ln() - 10.0).exp()).abs() < 1e-12);
        assert!((v - 0.626).abs() < 1e-3);
        assert!(chernoff_undetected_bound(1, 1, 1, 1, -0.1).is_err());
    }

    #[test]
    fn decisions() {
        assert!(ped_decide(&[1, 0], &[1, 0]));
        assert!(!ped_decide(&[1, 1], &[1, 0]));
        assert_eq!(bounded_distance_decide(&[1.0, 5.0, 7.0], 2.0), Some(0));
        assert_eq!(bounded_distance_decide(&[3.0, 5.0], 2.0), None);
        assert_eq!(bounded_distance_decide(&[1.0, 1.5], 2.0), None);
        assert_eq!(bounded_distance_decide(&[3.0, 1.5], 2.0), Some(1));
        assert!(!minllr_decide(&[0.0f64; 5], 1.0));
        assert!(minllr_decide(&[2.0f64, -3.0], 2.0));
        assert!(!minllr_decide(&[2.0f64, -0.5], 1.0));
    }

    #[test]
    fn validation() {
        assert!(DecisionRule::BoundedDistance { beta: 0.0, list_size: 1 }.validate().len() == 2);
        assert!(DecisionRule::MinLlr { beta: 16.0, iterations: 6, detector: DetectorKind::MaxLog }.validate().is_empty());
    }
}
