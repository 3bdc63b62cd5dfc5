//! Built-in experiments at desk scale.
//!
//! `fig8-*` and `fig10-*` are SISO BPSK over `T = 100` with bounded-distance
//! list decoding (short-term and long-term fading); `fig12-*` and `fig14-*`
//! are 2x2 4-QAM over `T = 32` with the golden-code kernel and MinLLR
//! iterative detection. Suffix `-ped` swaps in the genie rule with the same
//! decoder; `-fullapp` uses genie detection with full-complexity APP.

use crate::arq::{DecisionRule, DecoderKind, Interleaver};
use crate::channel::{FadingStatics, SystemConfig};
use crate::error::{Error, Result};
use crate::experiment::spec::{default_beta, derived_r1, ExperimentSpec, OutageSpec, RotationChoice};
use crate::fec::{ConvCode, DetectorKind};

pub const PRESET_NAMES: &[&str] = &[
    "fig8-L2",
    "fig8-L4",
    "fig8-L2-ped",
    "fig8-L4-ped",
    "fig10-L2",
    "fig10-L4",
    "fig10-L2-ped",
    "fig10-L4-ped",
    "fig12-L2",
    "fig12-L4",
    "fig12-L2-ped",
    "fig12-L4-ped",
    "fig12-L2-fullapp",
    "fig12-L4-fullapp",
    "fig14-L2",
    "fig14-L4",
    "fig14-L2-ped",
    "fig14-L4-ped",
    "fig14-L2-fullapp",
    "fig14-L4-fullapp",
];

fn grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + i as f64 * step).collect()
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let unknown = || Error::InvalidConfig(vec![format!("unknown preset '{name}'; available: {}", PRESET_NAMES.join(", "))]);
    let mut parts = name.split('-');
    let (Some(fig), Some(ls)) = (parts.next(), parts.next()) else { return Err(unknown()) };
    let variant = parts.next();
    if parts.next().is_some() {
        return Err(unknown());
    }
    let l = match ls {
        "L2" => 2,
        "L4" => 4,
        _ => return Err(unknown()),
    };
    let code = if l == 2 { "5,7" } else { "5,5,7,7" };
    let conv = ConvCode::from_octal(code)?;
    let (siso, statics) = match fig {
        "fig8" => (true, FadingStatics::ShortTerm),
        "fig10" => (true, FadingStatics::LongTerm),
        "fig12" => (false, FadingStatics::ShortTerm),
        "fig14" => (false, FadingStatics::LongTerm),
        _ => return Err(unknown()),
    };
    let (n_ant, t, q, constellation, rotation) =
        if siso { (1, 100, 1, "bpsk", RotationChoice::Identity) } else { (2, 32, 2, "4qam", RotationChoice::Algebraic) };
    let r1 = derived_r1(&conv, n_ant, 1, l, t, q).ok_or_else(unknown)?;
    let system = SystemConfig::new(n_ant, n_ant, 1, l, t, 1, q, r1)?;
    let iterative = |detector| DecoderKind::Iterative { iterations: 6, detector };
    let rule = match (siso, variant) {
        (true, None) => DecisionRule::BoundedDistance { beta: default_beta(&system, statics), list_size: 4 },
        (true, Some("ped")) => DecisionRule::Ped { decoder: DecoderKind::Viterbi },
        (false, None) => {
            let beta = match (statics, l) {
                (FadingStatics::ShortTerm, 2) => 16.0,
                (FadingStatics::ShortTerm, _) => 32.0,
                (FadingStatics::LongTerm, 2) => 12.0,
                (FadingStatics::LongTerm, _) => 24.0,
            };
            DecisionRule::MinLlr { beta, iterations: 6, detector: DetectorKind::MaxLog }
        }
        (false, Some("ped")) => DecisionRule::Ped { decoder: iterative(DetectorKind::MaxLog) },
        (false, Some("fullapp")) => DecisionRule::Ped { decoder: iterative(DetectorKind::FullApp) },
        _ => return Err(unknown()),
    };
    let snr_db = match (fig, l) {
        ("fig8", 2) => grid(0.0, 20.0, 4.0),
        ("fig8", _) => grid(0.0, 12.0, 2.0),
        ("fig10", _) => grid(0.0, 30.0, 5.0),
        ("fig12", 2) => grid(0.0, 14.0, 2.0),
        ("fig12", _) => grid(-4.0, 8.0, 2.0),
        _ => grid(0.0, 20.0, 2.5),
    };
    let spec = ExperimentSpec {
        name: name.to_string(),
        system,
        statics,
        code: code.to_string(),
        interleaver: Interleaver::Identity,
        constellation: constellation.to_string(),
        rotation,
        rule,
        snr_db,
        trials: 10_000,
        target_errors: 200,
        max_trials: 100_000,
        seed: 1,
        outage: OutageSpec::default(),
        csv: None,
        trace: None,
    };
    let problems = spec.violations();
    if problems.is_empty() {
        Ok(spec)
    } else {
        Err(Error::InvalidConfig(problems))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rate;

    #[test]
    fn every_preset_builds() {
        for n in PRESET_NAMES {
            let s = preset(n).unwrap();
            assert_eq!(ExperimentSpec::parse(&s.to_config_string()).unwrap(), s, "{n}");
        }
        assert!(preset("fig9-L2").is_err());
        assert!(preset("fig8-L3").is_err());
        assert!(preset("fig8-L2-fullapp").is_err());
    }

    #[test]
    fn predicted_exponents() {
        let d = |n: &str| preset(n).unwrap().predicted_exponent().unwrap();
        assert_eq!(d("fig8-L2"), 2);
        assert_eq!(d("fig8-L4"), 4);
        assert_eq!(d("fig10-L2"), 1);
        assert_eq!(d("fig10-L4"), 1);
        assert_eq!(d("fig12-L2"), 8);
        assert_eq!(d("fig12-L4"), 16);
        assert_eq!(d("fig14-L2"), 4);
        assert_eq!(d("fig14-L4"), 4);
    }

    #[test]
    fn preset_parameters() {
        let s = preset("fig8-L2").unwrap();
        assert_eq!(s.system.r1, Rate::new(98, 100));
        assert_eq!(s.rule, DecisionRule::BoundedDistance { beta: 0.02, list_size: 4 });
        let s = preset("fig12-L4").unwrap();
        assert_eq!(s.system.r1, Rate::new(126, 32));
        assert_eq!(s.rule, DecisionRule::MinLlr { beta: 32.0, iterations: 6, detector: DetectorKind::MaxLog });
        assert_eq!(s.rotation, RotationChoice::Algebraic);
    }
}
