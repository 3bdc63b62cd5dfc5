//! One message through the stop-and-wait protocol.

use serde::{Deserialize, Serialize};

use crate::arq::link::Link;
use crate::arq::rule::{bounded_distance_decide, delta_schedule, minllr_decide, ped_decide, theta_schedule, Decision, DecisionRule, DecoderKind};
use crate::channel::{apply_round_channel, draw_channel, FadingStatics, NoiseMode};
use crate::error::{ensure, Result};
use crate::fec::{conv_encode, iterative_detect_decode, list_viterbi_decode, viterbi_decode, DetectionGroup, DetectorKind};
use crate::rng::{random_bits, Purpose, StreamFactory};
use crate::scalar::Real;

/// Result of delivering one message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameOutcome {
    /// Rounds transmitted, in `1..=L`.
    pub rounds_used: usize,
    /// The delivered message equals the transmitted one.
    pub correct: bool,
    /// The rule accepted a wrong message.
    pub undetected_error: bool,
    /// The rule erased at round `L` and the forced decision was wrong.
    pub detected_at_l: bool,
}

fn hard_decisions<T: Real>(posteriors: &[T]) -> Vec<u8> {
    posteriors.iter().map(|&l| u8::from(l < T::zero())).collect()
}

/// Applies `rule` to the observations of rounds `1..=ell`.
///
/// `llr` holds the accumulated non-iterative channel LLRs and `groups` every
/// detection group received so far. `truth` is only consulted by the genie.
pub fn decode_round<T: Real>(
    link: &Link<T>,
    rule: &DecisionRule,
    groups: &[DetectionGroup<T>],
    llr: &[T],
    rho: f64,
    ell: usize,
    truth: &[u8],
) -> Result<Decision> {
    let cfg = link.cfg();
    match *rule {
        DecisionRule::Ped { decoder } => {
            let est = match decoder {
                DecoderKind::Viterbi => viterbi_decode(link.code(), llr)?,
                DecoderKind::Iterative { iterations, detector } => {
                    let out = iterative_detect_decode(groups, link.code(), link.coded_len(), iterations, detector)?;
                    hard_decisions(&out.info_posteriors)
                }
            };
            Ok(if ped_decide(&est, truth) { Decision::Accept(est) } else { Decision::Erase(est) })
        }
        DecisionRule::BoundedDistance { beta, list_size } => {
            let list = list_viterbi_decode(link.code(), llr, list_size)?;
            ensure!(!list.is_empty(), "list decoder returned no candidates");
            let radius = T::lit((ell * cfg.b * cfg.t * cfg.nr) as f64 * (1.0 + delta_schedule(beta, rho)));
            let mut dist = Vec::with_capacity(list.len());
            for cand in &list {
                dist.push(link.candidate_distance(groups, &conv_encode(link.code(), &cand.info))?);
            }
            Ok(match bounded_distance_decide(&dist, radius) {
                Some(i) => Decision::Accept(list[i].info.clone()),
                None => Decision::Erase(list[0].info.clone()),
            })
        }
        DecisionRule::MinLlr { beta, iterations, detector } => {
            let out = iterative_detect_decode(groups, link.code(), link.coded_len(), iterations, detector)?;
            let est = hard_decisions(&out.info_posteriors);
            Ok(if minllr_decide(&out.info_posteriors, T::lit(theta_schedule(beta, rho))) { Decision::Accept(est) } else { Decision::Erase(est) })
        }
    }
}

/// Sends frame `frame` until the rule accepts or round `L` is reached.
///
/// Information bits, fading and noise come from the `Info`, `Channel` and
/// `Noise` streams at index `frame`, so different rules see identical
/// realizations for the same frame.
pub fn run_frame<T: Real>(
    link: &Link<T>,
    statics: FadingStatics,
    rule: &DecisionRule,
    rho: f64,
    noise: NoiseMode,
    streams: &StreamFactory,
    frame: u64,
) -> Result<FrameOutcome> {
    let problems = rule.validate();
    ensure!(problems.is_empty(), "{}", problems.join("; "));
    ensure!(rho > 0.0 && rho.is_finite(), "SNR must be positive and finite, got {rho}");
    let cfg = link.cfg();
    let info = random_bits(link.info_len(), &mut streams.stream(Purpose::Info, frame));
    let coded = link.encode(&info)?;
    let h = draw_channel::<T, _>(cfg, statics, &mut streams.stream(Purpose::Channel, frame));
    let mut noise_rng = streams.stream(Purpose::Noise, frame);
    let rho_t = T::lit(rho);
    let mut groups = Vec::new();
    let mut llr = vec![T::zero(); link.coded_len()];
    let needs_llr = matches!(rule, DecisionRule::BoundedDistance { .. } | DecisionRule::Ped { decoder: DecoderKind::Viterbi });
    for ell in 1..=cfg.l {
        let x = link.transmit_round(&coded, ell)?;
        let y = apply_round_channel(cfg, h.round(ell), &x, rho_t, noise, &mut noise_rng)?;
        let new = link.observe_round(&y, h.round(ell), rho_t, ell)?;
        if needs_llr {
            link.add_channel_llrs(&new, DetectorKind::MaxLog, &mut llr)?;
        }
        groups.extend(new);
        match decode_round(link, rule, &groups, &llr, rho, ell, &info)? {
            Decision::Accept(est) => {
                let correct = est == info;
                return Ok(FrameOutcome { rounds_used: ell, correct, undetected_error: !correct, detected_at_l: false });
            }
            Decision::Erase(est) if ell == cfg.l => {
                let correct = est == info;
                return Ok(FrameOutcome { rounds_used: ell, correct, undetected_error: false, detected_at_l: !correct });
            }
            Decision::Erase(_) => {}
        }
    }
    unreachable!("round L always returns")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arq::link::Interleaver;
    use crate::channel::SystemConfig;
    use crate::fec::ConvCode;
    use crate::modulation::{Constellation, RotationSpec, DEFAULT_ENUMERATION_CAP};
    use crate::scalar::Rate;

    fn siso(l: usize, gens: &str) -> Link<f64> {
        let cfg = SystemConfig::new(1, 1, 1, l, 100, 1, 1, Rate::new(98, 100)).unwrap();
        Link::new(
            cfg,
            ConvCode::from_octal(gens).unwrap(),
            Constellation::bpsk(),
            RotationSpec::identity(),
            Interleaver::Identity,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap()
    }

    fn rules() -> Vec<DecisionRule> {
        vec![
            DecisionRule::Ped { decoder: DecoderKind::Viterbi },
            DecisionRule::BoundedDistance { beta: 0.02, list_size: 4 },
            DecisionRule::MinLlr { beta: 16.0, iterations: 2, detector: DetectorKind::MaxLog },
        ]
    }

    #[test]
    fn zero_noise_is_delivered_in_one_round() {
        let link = siso(2, "5,7");
        let f = StreamFactory::new(11);
        for rule in rules() {
            for frame in 0..20 {
                let o = run_frame(&link, FadingStatics::ShortTerm, &rule, 1e3, NoiseMode::Zero, &f, frame).unwrap();
                assert_eq!(o.rounds_used, 1, "{rule}");
                assert!(o.correct && !o.undetected_error && !o.detected_at_l);
            }
        }
    }

    #[test]
    fn single_round_protocol_never_retransmits() {
        let cfg = SystemConfig::new(1, 1, 1, 1, 100, 1, 1, Rate::new(48, 100)).unwrap();
        let link = Link::<f64>::new(
            cfg,
            ConvCode::from_octal("5,7").unwrap(),
            Constellation::bpsk(),
            RotationSpec::identity(),
            Interleaver::Identity,
            1 << 16,
        )
        .unwrap();
        assert_eq!(link.info_len(), 48);
        let f = StreamFactory::new(2);
        for frame in 0..50 {
            let o = run_frame(&link, FadingStatics::ShortTerm, &rules()[0], 3.0, NoiseMode::Gaussian, &f, frame).unwrap();
            assert_eq!(o.rounds_used, 1);
            assert!(!o.undetected_error);
        }
    }

    #[test]
    fn ped_never_accepts_wrong_messages() {
        let link = siso(2, "5,7");
        let f = StreamFactory::new(4);
        for frame in 0..200 {
            let o = run_frame(&link, FadingStatics::ShortTerm, &rules()[0], 2.0, NoiseMode::Gaussian, &f, frame).unwrap();
            assert!(!o.undetected_error);
            assert!(o.correct || (o.detected_at_l && o.rounds_used == 2));
        }
    }

    #[test]
    fn outcomes_are_reproducible() {
        let link = siso(4, "5,5,7,7");
        let f = StreamFactory::new(8);
        for rule in rules() {
            let a: Vec<_> = (0..30).map(|i| run_frame(&link, FadingStatics::LongTerm, &rule, 5.0, NoiseMode::Gaussian, &f, i).unwrap()).collect();
            let b: Vec<_> = (0..30).map(|i| run_frame(&link, FadingStatics::LongTerm, &rule, 5.0, NoiseMode::Gaussian, &f, i).unwrap()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_invalid_rule() {
        let link = siso(2, "5,7");
        let bad = DecisionRule::BoundedDistance { beta: -1.0, list_size: 4 };
        assert!(run_frame(&link, FadingStatics::ShortTerm, &bad, 10.0, NoiseMode::Zero, &StreamFactory::new(0), 0).is_err());
    }
}
