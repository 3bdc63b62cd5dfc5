//! Iterative exchange of extrinsics between APP detection and BCJR decoding.

use crate::error::{ensure, Result};
use crate::fec::bcjr::{bcjr_decode, BcjrOutput};
use crate::fec::conv::ConvCode;
use crate::fec::detector::{app_extrinsics, DetectorKind};
use crate::scalar::Real;

/// Candidate log-likelihoods of one detection group and the codeword
/// positions of its bits (bit `j` of a candidate index sits at
/// `positions[j]`).
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionGroup<T> {
    pub ll: Vec<T>,
    pub positions: Vec<usize>,
}

/// Runs `iterations` detector/decoder passes over every observed group and
/// returns the final decoder output. Unobserved coded bits enter the decoder
/// with LLR 0.
pub fn iterative_detect_decode<T: Real>(
    groups: &[DetectionGroup<T>],
    code: &ConvCode,
    coded_len: usize,
    iterations: usize,
    detector: DetectorKind,
) -> Result<BcjrOutput<T>> {
    ensure!(iterations >= 1, "at least one iteration is required");
    for g in groups {
        ensure!(g.ll.len() == 1usize << g.positions.len(), "group size mismatch");
        ensure!(g.positions.iter().all(|&p| p < coded_len), "group position outside codeword");
    }
    let max_log = detector == DetectorKind::MaxLog;
    let mut decoder_ext = vec![T::zero(); coded_len];
    let mut channel = vec![T::zero(); coded_len];
    let mut priors = Vec::new();
    let mut out = None;
    for _ in 0..iterations {
        channel.iter_mut().for_each(|v| *v = T::zero());
        for g in groups {
            priors.clear();
            priors.extend(g.positions.iter().map(|&p| decoder_ext[p]));
            let ext = app_extrinsics(&g.ll, &priors, detector)?;
            for (&p, e) in g.positions.iter().zip(ext) {
                channel[p] += e;
            }
        }
        let dec = bcjr_decode(code, &channel, max_log)?;
        decoder_ext.copy_from_slice(&dec.coded_extrinsics);
        out = Some(dec);
    }
    Ok(out.expect("at least one iteration"))
}
