//! Typed, validated experiment description.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::arq::{DecisionRule, DecoderKind, Interleaver, Link};
use crate::channel::{FadingStatics, SystemConfig};
use crate::error::{Error, Result};
use crate::experiment::config::ConfigMap;
use crate::fec::{ConvCode, DetectorKind};
use crate::info::{DiscreteMi, MiModel, ScalarMiTable};
use crate::modulation::{Constellation, RotationSpec, DEFAULT_ENUMERATION_CAP};
use crate::scalar::{parse_rate, Rate, Real};
use crate::tradeoff::optimal_exponent_discrete;

/// Dispersion applied after the mapper.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationChoice {
    Identity,
    /// The 4-dimensional 2x2 golden-code kernel.
    Algebraic,
    RandomUnitary {
        dim: usize,
        seed: u64,
    },
}

impl RotationChoice {
    pub fn build<T: Real>(&self) -> Result<RotationSpec<T>> {
        match *self {
            RotationChoice::Identity => Ok(RotationSpec::identity()),
            RotationChoice::Algebraic => Ok(RotationSpec::algebraic()),
            RotationChoice::RandomUnitary { dim, seed } => RotationSpec::random_unitary(dim, seed),
        }
    }
}

/// Mutual-information model behind the outage column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutageModel {
    /// `table` for one transmit antenna without rotation, `bound` otherwise.
    Auto,
    Gaussian,
    /// Monte-Carlo discrete-input MI.
    Discrete,
    /// Upper bound on discrete MI; the outage column is then a lower bound.
    Bound,
    /// Quadrature table of scalar constellation MI.
    Table,
    None,
}

impl OutageModel {
    fn name(&self) -> &'static str {
        match self {
            OutageModel::Auto => "auto",
            OutageModel::Gaussian => "gaussian",
            OutageModel::Discrete => "discrete",
            OutageModel::Bound => "bound",
            OutageModel::Table => "table",
            OutageModel::None => "none",
        }
    }
}

impl FromStr for OutageModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "auto" => OutageModel::Auto,
            "gaussian" => OutageModel::Gaussian,
            "discrete" => OutageModel::Discrete,
            "bound" => OutageModel::Bound,
            "table" => OutageModel::Table,
            "none" => OutageModel::None,
            o => return Err(format!("unknown outage model '{o}' (auto, gaussian, discrete, bound, table, none)")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageSpec {
    pub model: OutageModel,
    pub trials: u64,
    pub max_trials: u64,
    pub target_events: u64,
    /// Noise samples per MI evaluation for the Monte-Carlo model.
    pub mc_samples: usize,
}

impl Default for OutageSpec {
    fn default() -> Self {
        Self { model: OutageModel::Auto, trials: 100_000, max_trials: 1_000_000, target_events: 200, mc_samples: 64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub system: SystemConfig,
    pub statics: FadingStatics,
    /// Octal generators, e.g. `5,7`.
    pub code: String,
    pub interleaver: Interleaver,
    pub constellation: String,
    pub rotation: RotationChoice,
    pub rule: DecisionRule,
    pub snr_db: Vec<f64>,
    /// Minimum frames per SNR point.
    pub trials: u64,
    /// Keep simulating past `trials` until this many frame errors...
    pub target_errors: u64,
    /// ...or this many frames.
    pub max_trials: u64,
    pub seed: u64,
    pub outage: OutageSpec,
    pub csv: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "name",
    "system.nt",
    "system.nr",
    "system.b",
    "system.l",
    "system.t",
    "system.m",
    "system.r1",
    "system.statics",
    "code.generators",
    "code.interleaver",
    "code.interleaver_seed",
    "modulation.constellation",
    "modulation.rotation",
    "modulation.rotation_dim",
    "modulation.rotation_seed",
    "arq.rule",
    "arq.beta",
    "arq.list_size",
    "arq.decoder",
    "arq.iterations",
    "arq.detector",
    "sweep.snr_db",
    "sweep.trials",
    "sweep.target_errors",
    "sweep.max_trials",
    "sweep.seed",
    "outage.model",
    "outage.trials",
    "outage.max_trials",
    "outage.target_events",
    "outage.mc_samples",
    "output.csv",
    "output.trace",
];

struct Reader<'a> {
    map: &'a ConfigMap,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn where_(&self, key: &str) -> String {
        match self.map.line(key) {
            Some(l) if l > 0 => format!("{key} (line {l})"),
            _ => key.to_string(),
        }
    }

    fn opt<V: FromStr>(&mut self, key: &str) -> Option<V>
    where
        V::Err: fmt::Display,
    {
        let raw = self.map.get(key)?;
        match raw.parse::<V>() {
            Ok(v) => Some(v),
            Err(e) => {
                let w = self.where_(key);
                self.errors.push(format!("{w}: cannot parse '{raw}': {e}"));
                None
            }
        }
    }

    fn or<V: FromStr>(&mut self, key: &str, default: V) -> V
    where
        V::Err: fmt::Display,
    {
        if self.map.get(key).is_none() {
            return default;
        }
        self.opt(key).unwrap_or(default)
    }

    fn req<V: FromStr>(&mut self, key: &str) -> Option<V>
    where
        V::Err: fmt::Display,
    {
        if self.map.get(key).is_none() {
            self.errors.push(format!("{key}: required"));
            return None;
        }
        self.opt(key)
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_config(&ConfigMap::parse(text)?)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds and validates a spec, reporting every problem at once.
    pub fn from_config(map: &ConfigMap) -> Result<Self> {
        let mut r = Reader { map, errors: Vec::new() };
        for k in map.keys() {
            if !KEYS.contains(&k) {
                let w = r.where_(k);
                r.errors.push(format!("{w}: unknown key"));
            }
        }
        let name = map.get("name").unwrap_or("experiment").to_string();
        let nt = r.req::<usize>("system.nt");
        let nr = r.req::<usize>("system.nr");
        let b = r.or::<usize>("system.b", 1);
        let l = r.req::<usize>("system.l");
        let t = r.req::<usize>("system.t");
        let m = r.or::<usize>("system.m", 1);
        let r1 = match map.get("system.r1") {
            None => None,
            Some(raw) => match parse_rate(raw) {
                Some(v) => Some(v),
                None => {
                    let w = r.where_("system.r1");
                    r.errors.push(format!("{w}: cannot parse rate '{raw}'"));
                    None
                }
            },
        };
        let statics = r.or("system.statics", FadingStatics::ShortTerm);
        let code: Option<String> = r.req("code.generators");
        let interleaver = match map.get("code.interleaver").unwrap_or("identity") {
            "identity" => Interleaver::Identity,
            "random" => Interleaver::Random { seed: r.or("code.interleaver_seed", 0) },
            o => {
                r.errors.push(format!("code.interleaver: unknown interleaver '{o}' (identity, random)"));
                Interleaver::Identity
            }
        };
        let constellation: Option<String> = r.req("modulation.constellation");
        let rotation = match map.get("modulation.rotation").unwrap_or("identity") {
            "identity" => RotationChoice::Identity,
            "algebraic" => RotationChoice::Algebraic,
            "random_unitary" => {
                let dim = r.req("modulation.rotation_dim").unwrap_or(0);
                RotationChoice::RandomUnitary { dim, seed: r.or("modulation.rotation_seed", 0) }
            }
            o => {
                r.errors.push(format!("modulation.rotation: unknown rotation '{o}' (identity, algebraic, random_unitary)"));
                RotationChoice::Identity
            }
        };
        let rule_name: String = r.req("arq.rule").unwrap_or_default();
        if !matches!(rule_name.as_str(), "" | "ped" | "bounded_distance" | "minllr") {
            r.errors.push(format!("arq.rule: unknown rule '{rule_name}' (ped, bounded_distance, minllr)"));
        }
        let iterations = r.or("arq.iterations", 6usize);
        let detector = r.or("arq.detector", DetectorKind::MaxLog);
        let beta_raw = map.get("arq.beta").map(str::to_string);
        let beta_num = match beta_raw.as_deref() {
            None | Some("auto") => None,
            Some(_) => r.opt::<f64>("arq.beta"),
        };
        let list_size = r.or("arq.list_size", 4usize);
        let decoder = match map.get("arq.decoder").unwrap_or("viterbi") {
            "viterbi" => DecoderKind::Viterbi,
            "iterative" => DecoderKind::Iterative { iterations, detector },
            o => {
                r.errors.push(format!("arq.decoder: unknown decoder '{o}' (viterbi, iterative)"));
                DecoderKind::Viterbi
            }
        };
        let snr_db: Vec<f64> = match map.get("sweep.snr_db") {
            None => {
                r.errors.push("sweep.snr_db: required".into());
                Vec::new()
            }
            Some(raw) => {
                let mut v = Vec::new();
                for tok in raw.split(',').map(str::trim) {
                    match tok.parse::<f64>() {
                        Ok(x) if x.is_finite() => v.push(x),
                        _ => {
                            let w = r.where_("sweep.snr_db");
                            r.errors.push(format!("{w}: '{tok}' is not a finite number"));
                        }
                    }
                }
                v
            }
        };
        let trials = r.or("sweep.trials", 10_000u64);
        let target_errors = r.or("sweep.target_errors", 200u64);
        let max_trials = r.or("sweep.max_trials", trials.max(100_000));
        let seed = r.or("sweep.seed", 1u64);
        let d = OutageSpec::default();
        let outage = OutageSpec {
            model: r.or("outage.model", d.model),
            trials: r.or("outage.trials", d.trials),
            max_trials: r.or("outage.max_trials", d.max_trials),
            target_events: r.or("outage.target_events", d.target_events),
            mc_samples: r.or("outage.mc_samples", d.mc_samples),
        };
        let csv = map.get("output.csv").map(PathBuf::from);
        let trace = map.get("output.trace").map(PathBuf::from);

        let (Some(nt), Some(nr), Some(l), Some(t), Some(code), Some(constellation)) = (nt, nr, l, t, code, constellation) else {
            for (key, v) in [("nt", nt), ("nr", nr), ("b", Some(b)), ("l", l), ("t", t), ("m", Some(m))] {
                if v == Some(0) {
                    r.errors.push(format!("system.{key}: must be at least 1"));
                }
            }
            return Err(Error::InvalidConfig(r.errors));
        };
        let mut errors = r.errors;
        let q = match Constellation::<f64>::by_name(&constellation) {
            Ok(c) => c.q(),
            Err(e) => {
                errors.push(format!("modulation.constellation: {e}"));
                1
            }
        };
        let conv = match ConvCode::from_octal(&code) {
            Ok(c) => Some(c),
            Err(e) => {
                errors.push(format!("code.generators: {e}"));
                None
            }
        };
        let r1 = r1.or_else(|| conv.as_ref().and_then(|c| derived_r1(c, nt, b, l, t, q)));
        let system = SystemConfig { nt, nr, b, l, t, m, q, r1: r1.unwrap_or(Rate::from_integer(1)) };
        if r1.is_none() {
            errors.push("system.r1: not given and cannot be derived from the code and frame dimensions".into());
        }
        errors.extend(system.violations().into_iter().map(|v| format!("system: {v}")));
        let rule = match rule_name.as_str() {
            "ped" => DecisionRule::Ped { decoder },
            "bounded_distance" => {
                let beta = beta_num.unwrap_or_else(|| default_beta(&system, statics));
                DecisionRule::BoundedDistance { beta, list_size }
            }
            "minllr" => match beta_num {
                Some(beta) => DecisionRule::MinLlr { beta, iterations, detector },
                None => {
                    errors.push("arq.beta: required for minllr".into());
                    DecisionRule::MinLlr { beta: 1.0, iterations, detector }
                }
            },
            _ => DecisionRule::Ped { decoder },
        };
        let spec = ExperimentSpec {
            name,
            system,
            statics,
            code,
            interleaver,
            constellation,
            rotation,
            rule,
            snr_db,
            trials,
            target_errors,
            max_trials,
            seed,
            outage,
            csv,
            trace,
        };
        errors.extend(spec.violations());
        errors.dedup();
        if errors.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    /// Every violated invariant, including those only found by building the
    /// transmission chain.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.system.violations().into_iter().map(|v| format!("system: {v}")));
        out.extend(self.rule.validate());
        if self.snr_db.is_empty() {
            out.push("sweep.snr_db: must list at least one SNR".into());
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            out.push("sweep.snr_db: must be strictly ascending".into());
        }
        if self.trials == 0 {
            out.push("sweep.trials: must be at least 1".into());
        }
        if self.max_trials < self.trials {
            out.push(format!("sweep.max_trials ({}) must be at least sweep.trials ({})", self.max_trials, self.trials));
        }
        if self.outage.model != OutageModel::None {
            if self.outage.trials == 0 {
                out.push("outage.trials: must be at least 1".into());
            }
            if self.outage.max_trials < self.outage.trials {
                out.push("outage.max_trials must be at least outage.trials".into());
            }
            if self.outage.mc_samples == 0 {
                out.push("outage.mc_samples: must be at least 1".into());
            }
            if self.outage.model == OutageModel::Table && (self.system.nt != 1 || self.rotation != RotationChoice::Identity) {
                out.push("outage.model = table needs one transmit antenna and identity rotation".into());
            }
        }
        if out.is_empty() {
            if let Err(e) = self.link::<f64>() {
                out.push(format!("chain: {e}"));
            }
        }
        out
    }

    pub fn link<T: Real>(&self) -> Result<Link<T>> {
        Link::new(
            self.system,
            ConvCode::from_octal(&self.code)?,
            Constellation::by_name(&self.constellation)?,
            self.rotation.build()?,
            self.interleaver,
            DEFAULT_ENUMERATION_CAP,
        )
    }

    /// The outage model actually used, or `None` when disabled.
    pub fn mi_model<T: Real>(&self) -> Result<Option<MiModel<T>>> {
        let c = Constellation::<T>::by_name(&self.constellation)?;
        Ok(match self.outage.model {
            OutageModel::None => None,
            OutageModel::Gaussian => Some(MiModel::Gaussian),
            OutageModel::Bound => Some(MiModel::DiscreteBound),
            OutageModel::Table => Some(MiModel::ScalarTable(Arc::new(ScalarMiTable::new(&c)))),
            OutageModel::Discrete => Some(MiModel::Discrete(Arc::new(DiscreteMi::new(
                c,
                self.rotation.build()?,
                &self.system,
                self.outage.mc_samples,
                DEFAULT_ENUMERATION_CAP,
            )?))),
            OutageModel::Auto => {
                if self.system.nt == 1 && self.rotation == RotationChoice::Identity {
                    Some(MiModel::ScalarTable(Arc::new(ScalarMiTable::new(&c))))
                } else {
                    Some(MiModel::DiscreteBound)
                }
            }
        })
    }

    /// Predicted SNR exponent of the configuration.
    pub fn predicted_exponent(&self) -> Result<u64> {
        Ok(optimal_exponent_discrete(&self.system, self.statics, self.system.r1)?.d)
    }

    /// Configuration text that parses back to this spec.
    pub fn to_config_string(&self) -> String {
        let s = &self.system;
        let mut o = String::new();
        let _ = writeln!(o, "name = {}", self.name);
        let _ = writeln!(o, "\n[system]");
        for (k, v) in [("nt", s.nt), ("nr", s.nr), ("b", s.b), ("l", s.l), ("t", s.t), ("m", s.m)] {
            let _ = writeln!(o, "{k} = {v}");
        }
        let _ = writeln!(o, "r1 = {}\nstatics = {}", s.r1, self.statics);
        let _ = writeln!(o, "\n[code]\ngenerators = {}", self.code);
        match self.interleaver {
            Interleaver::Identity => o.push_str("interleaver = identity\n"),
            Interleaver::Random { seed } => {
                let _ = writeln!(o, "interleaver = random\ninterleaver_seed = {seed}");
            }
        }
        let _ = writeln!(o, "\n[modulation]\nconstellation = {}", self.constellation);
        match self.rotation {
            RotationChoice::Identity => o.push_str("rotation = identity\n"),
            RotationChoice::Algebraic => o.push_str("rotation = algebraic\n"),
            RotationChoice::RandomUnitary { dim, seed } => {
                let _ = writeln!(o, "rotation = random_unitary\nrotation_dim = {dim}\nrotation_seed = {seed}");
            }
        }
        let _ = writeln!(o, "\n[arq]\nrule = {}", self.rule.name());
        match self.rule {
            DecisionRule::Ped { decoder: DecoderKind::Viterbi } => o.push_str("decoder = viterbi\n"),
            DecisionRule::Ped { decoder: DecoderKind::Iterative { iterations, detector } } => {
                let _ = writeln!(o, "decoder = iterative\niterations = {iterations}\ndetector = {detector}");
            }
            DecisionRule::BoundedDistance { beta, list_size } => {
                let _ = writeln!(o, "beta = {beta}\nlist_size = {list_size}");
            }
            DecisionRule::MinLlr { beta, iterations, detector } => {
                let _ = writeln!(o, "beta = {beta}\niterations = {iterations}\ndetector = {detector}");
            }
        }
        let grid: Vec<String> = self.snr_db.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(o, "\n[sweep]\nsnr_db = {}", grid.join(", "));
        let _ =
            writeln!(o, "trials = {}\ntarget_errors = {}\nmax_trials = {}\nseed = {}", self.trials, self.target_errors, self.max_trials, self.seed);
        let g = &self.outage;
        let _ = writeln!(
            o,
            "\n[outage]\nmodel = {}\ntrials = {}\nmax_trials = {}\ntarget_events = {}\nmc_samples = {}",
            g.model.name(),
            g.trials,
            g.max_trials,
            g.target_events,
            g.mc_samples
        );
        if self.csv.is_some() || self.trace.is_some() {
            o.push_str("\n[output]\n");
            if let Some(p) = &self.csv {
                let _ = writeln!(o, "csv = {}", p.display());
            }
            if let Some(p) = &self.trace {
                let _ = writeln!(o, "trace = {}", p.display());
            }
        }
        o
    }
}

/// `K / (B T)` for the frame that exactly fills `L` rounds, if it exists.
pub fn derived_r1(code: &ConvCode, nt: usize, b: usize, l: usize, t: usize, q: usize) -> Option<Rate> {
    let total = l * b * t * nt * q;
    if total == 0 || !total.is_multiple_of(code.n()) || total / code.n() <= code.memory() {
        return None;
    }
    let k = total / code.n() - code.memory();
    Some(Rate::new(k as i64, (b * t) as i64))
}

/// `beta = d / (B T Nr)` with `d` the predicted exponent; falls back to the
/// Gaussian-input exponent when the rate is outside the discrete domain.
pub fn default_beta(cfg: &SystemConfig, statics: FadingStatics) -> f64 {
    let d = optimal_exponent_discrete(cfg, statics, cfg.r1).map(|p| p.d).unwrap_or_else(|_| crate::tradeoff::optimal_exponent_gaussian(cfg, statics));
    d as f64 / (cfg.b * cfg.t * cfg.nr) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "name = t\n[system]\nnt = 1\nnr = 1\nl = 2\nt = 100\n[code]\ngenerators = 5,7\n\
                        [modulation]\nconstellation = bpsk\n[arq]\nrule = bounded_distance\n[sweep]\nsnr_db = 0, 10\n";

    #[test]
    fn derives_rate_and_beta() {
        let s = ExperimentSpec::parse(TEXT).unwrap();
        assert_eq!(s.system.r1, Rate::new(98, 100));
        assert_eq!(s.rule, DecisionRule::BoundedDistance { beta: 0.02, list_size: 4 });
        assert_eq!(s.predicted_exponent().unwrap(), 2);
    }

    #[test]
    fn config_round_trip() {
        let s = ExperimentSpec::parse(TEXT).unwrap();
        assert_eq!(ExperimentSpec::parse(&s.to_config_string()).unwrap(), s);
    }

    #[test]
    fn lists_all_violations() {
        let bad = TEXT.replace("snr_db = 0, 10", "snr_db = 10, 0\ntrials = 0\nbogus = 1").replace("bpsk", "8psk");
        let Err(Error::InvalidConfig(v)) = ExperimentSpec::parse(&bad) else { panic!("expected validation failure") };
        assert!(v.iter().any(|e| e.contains("bogus")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("ascending")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("sweep.trials")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("constellation")), "{v:?}");
    }

    #[test]
    fn rate_mismatch_is_reported() {
        let bad = TEXT.replace("t = 100\n", "t = 100\nr1 = 1/2\n");
        let Err(Error::InvalidConfig(v)) = ExperimentSpec::parse(&bad) else { panic!("expected validation failure") };
        assert!(v.iter().any(|e| e.contains("K/(BT)")), "{v:?}");
    }
}
