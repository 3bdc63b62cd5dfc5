//! Mapping of the mother codeword onto ARQ rounds, fading blocks and
//! constellation symbols, and soft detection of received rounds.

use std::fmt;

use num_complex::Complex;
use rand::seq::SliceRandom;

use crate::channel::{symbol_group_channel, SystemConfig};
use crate::error::{ensure, Result};
use crate::fec::{app_extrinsics, conv_encode, group_log_likelihoods, ConvCode, DetectionGroup, DetectorKind};
use crate::linalg::CMatrix;
use crate::modulation::{
    detection_group_size, disperse, enumerate_points, map_bits, reshape_blocks, Constellation, MultidimConstellation, RotationSpec,
};
use crate::rng::{Purpose, StreamFactory};
use crate::scalar::{Rate, Real};

/// Bit interleaver applied inside every fading block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interleaver {
    #[default]
    Identity,
    /// Independent uniform permutation per block, keyed by `seed`.
    Random { seed: u64 },
}

impl fmt::Display for Interleaver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interleaver::Identity => f.write_str("identity"),
            Interleaver::Random { seed } => write!(f, "random({seed})"),
        }
    }
}

/// A configured transmission chain: outer code, bit layout, mapper and
/// dispersion, with precomputed detection groups.
#[derive(Clone, Debug)]
pub struct Link<T> {
    cfg: SystemConfig,
    code: ConvCode,
    constellation: Constellation<T>,
    rotation: RotationSpec<T>,
    interleaver: Interleaver,
    group_points: MultidimConstellation<T>,
    info_len: usize,
    coded_len: usize,
    /// `bit_map[l][k]`: codeword index carried by bit `k` of round `l + 1`.
    bit_map: Vec<Vec<usize>>,
}

impl<T: Real> Link<T> {
    /// Builds the chain. The mother codeword must fill `L` rounds exactly and
    /// `cfg.r1` must equal `K / (B T)`.
    pub fn new(
        cfg: SystemConfig,
        code: ConvCode,
        constellation: Constellation<T>,
        rotation: RotationSpec<T>,
        interleaver: Interleaver,
        cap: u128,
    ) -> Result<Self> {
        ensure!(constellation.q() == cfg.q, "constellation carries {} bits, system expects q = {}", constellation.q(), cfg.q);
        rotation.check_fits(&cfg)?;
        let block_bits = cfg.t * cfg.nt * cfg.q;
        let total = cfg.l * cfg.b * block_bits;
        let n = code.n();
        ensure!(total.is_multiple_of(n), "{total} coded bits per frame is not a multiple of n = {n}");
        let steps = total / n;
        ensure!(steps > code.memory(), "frame of {total} bits too short for memory {}", code.memory());
        let info_len = steps - code.memory();
        let expected = Rate::new(info_len as i64, (cfg.b * cfg.t) as i64);
        ensure!(cfg.r1 == expected, "r1 = {} does not match K/(BT) = {info_len}/{} = {expected}", cfg.r1, cfg.b * cfg.t);
        let g = detection_group_size(rotation.kernel_dim(), cfg.nt);
        ensure!(cfg.symbols_per_round().is_multiple_of(g), "detection group of {g} symbols does not tile a round");
        let group_points = enumerate_points(&constellation, &rotation, g, cap)?;

        let factory = match interleaver {
            Interleaver::Identity => None,
            Interleaver::Random { seed } => Some(StreamFactory::new(seed)),
        };
        let mut bit_map = Vec::with_capacity(cfg.l);
        for ell in 0..cfg.l {
            let mut round = Vec::with_capacity(cfg.b * block_bits);
            for b in 0..cfg.b {
                let blk = ell * cfg.b + b;
                let mut perm: Vec<usize> = (0..block_bits).collect();
                if let Some(f) = &factory {
                    perm.shuffle(&mut f.stream(Purpose::Interleaver, blk as u64));
                }
                for &p in &perm {
                    let s = blk * block_bits + p;
                    let (j, t) = (s / steps, s % steps);
                    round.push(t * n + j);
                }
            }
            bit_map.push(round);
        }
        Ok(Self { cfg, code, constellation, rotation, interleaver, group_points, info_len, coded_len: total, bit_map })
    }

    pub fn cfg(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn code(&self) -> &ConvCode {
        &self.code
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    pub fn rotation(&self) -> &RotationSpec<T> {
        &self.rotation
    }

    pub fn interleaver(&self) -> Interleaver {
        self.interleaver
    }

    /// Information bits per frame, `K`.
    pub fn info_len(&self) -> usize {
        self.info_len
    }

    /// Mother codeword length, `L B T Nt Q`.
    pub fn coded_len(&self) -> usize {
        self.coded_len
    }

    /// Symbols per detection group.
    pub fn group_size(&self) -> usize {
        self.group_points.dimension()
    }

    /// Codeword indices carried by round `ell` (1-based), in transmission order.
    pub fn round_positions(&self, ell: usize) -> &[usize] {
        &self.bit_map[ell - 1]
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        ensure!(info.len() == self.info_len, "expected {} information bits, got {}", self.info_len, info.len());
        Ok(conv_encode(&self.code, info))
    }

    /// Transmitted signal of round `ell`: the `B` blocks `Nt x T` stacked.
    pub fn transmit_round(&self, coded: &[u8], ell: usize) -> Result<CMatrix<T>> {
        ensure!(coded.len() == self.coded_len, "codeword length {} != {}", coded.len(), self.coded_len);
        ensure!((1..=self.cfg.l).contains(&ell), "round {ell} outside 1..={}", self.cfg.l);
        let bits: Vec<u8> = self.bit_map[ell - 1].iter().map(|&i| coded[i]).collect();
        let syms = map_bits(&bits, &self.constellation)?;
        let x = disperse(&syms, &self.rotation)?;
        reshape_blocks(&x, self.cfg.b, self.cfg.nt, self.cfg.t)
    }

    /// Candidate log-likelihoods of every detection group in round `ell`.
    pub fn observe_round(&self, y: &CMatrix<T>, h_round: &[CMatrix<T>], rho: T, ell: usize) -> Result<Vec<DetectionGroup<T>>> {
        let c = &self.cfg;
        ensure!((1..=c.l).contains(&ell), "round {ell} outside 1..={}", c.l);
        ensure!(y.rows() == c.b * c.nr && y.cols() == c.t, "observation must be {}x{}", c.b * c.nr, c.t);
        ensure!(h_round.len() == c.b, "expected {} fading blocks, got {}", c.b, h_round.len());
        let g = self.group_size();
        let q = c.q;
        let map = &self.bit_map[ell - 1];
        let mut out = Vec::with_capacity(c.symbols_per_round() / g);
        let mut cached: Option<(usize, CMatrix<T>)> = None;
        for start in (0..c.symbols_per_round()).step_by(g) {
            let first_use = start / c.nt;
            let last_use = (start + g) / c.nt - 1;
            let (b0, b1) = (first_use / c.t, last_use / c.t);
            let h_eq = if b0 == b1 {
                match &cached {
                    Some((b, h)) if *b == b0 => h.clone(),
                    _ => {
                        let h = symbol_group_channel(h_round, c.nt, c.t, start, g)?;
                        cached = Some((b0, h.clone()));
                        h
                    }
                }
            } else {
                symbol_group_channel(h_round, c.nt, c.t, start, g)?
            };
            let mut yg: Vec<Complex<T>> = Vec::with_capacity(g / c.nt * c.nr);
            for u in first_use..=last_use {
                let (b, t) = (u / c.t, u % c.t);
                yg.extend((0..c.nr).map(|r| y[(b * c.nr + r, t)]));
            }
            let ll = group_log_likelihoods(&yg, &h_eq, rho, c.nt, &self.group_points)?;
            let positions = (0..g * q).map(|j| map[start * q + j]).collect();
            out.push(DetectionGroup { ll, positions });
        }
        Ok(out)
    }

    /// Channel LLRs of the mother codeword from non-iterative detection;
    /// unobserved positions stay at zero.
    pub fn channel_llrs(&self, groups: &[DetectionGroup<T>], kind: DetectorKind) -> Result<Vec<T>> {
        let mut llr = vec![T::zero(); self.coded_len];
        self.add_channel_llrs(groups, kind, &mut llr)?;
        Ok(llr)
    }

    /// Adds the detector LLRs of `groups` into `llr`.
    pub fn add_channel_llrs(&self, groups: &[DetectionGroup<T>], kind: DetectorKind, llr: &mut [T]) -> Result<()> {
        ensure!(llr.len() == self.coded_len, "LLR buffer length {} != {}", llr.len(), self.coded_len);
        let zeros = vec![T::zero(); self.group_points.bits()];
        for g in groups {
            let ext = app_extrinsics(&g.ll, &zeros[..g.positions.len()], kind)?;
            for (&p, e) in g.positions.iter().zip(ext) {
                llr[p] += e;
            }
        }
        Ok(())
    }

    /// `||Y - sqrt(rho/Nt) H X(coded)||^2` over the observed groups.
    pub fn candidate_distance(&self, groups: &[DetectionGroup<T>], coded: &[u8]) -> Result<T> {
        ensure!(coded.len() == self.coded_len, "codeword length {} != {}", coded.len(), self.coded_len);
        let mut d = T::zero();
        for g in groups {
            let idx = g.positions.iter().enumerate().fold(0usize, |acc, (j, &p)| acc | ((coded[p] as usize) << j));
            d -= g.ll[idx];
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_round_channel, draw_channel, FadingStatics, NoiseMode};
    use crate::modulation::DEFAULT_ENUMERATION_CAP;
    use crate::rng::random_bits;

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

    fn mimo(l: usize, gens: &str, interleaver: Interleaver) -> Link<f64> {
        let cfg = SystemConfig::new(2, 2, 1, l, 32, 1, 2, Rate::new(126, 32)).unwrap();
        Link::new(
            cfg,
            ConvCode::from_octal(gens).unwrap(),
            Constellation::square_qam(2).unwrap(),
            RotationSpec::algebraic(),
            interleaver,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap()
    }

    #[test]
    fn stream_j_lands_in_round_j() {
        let link = siso(2, "5,7");
        assert_eq!(link.info_len(), 98);
        for ell in 1..=2 {
            let pos = link.round_positions(ell);
            assert_eq!(pos.len(), 100);
            assert!(pos.iter().enumerate().all(|(t, &p)| p == t * 2 + (ell - 1)));
        }
    }

    #[test]
    fn positions_form_a_permutation() {
        for il in [Interleaver::Identity, Interleaver::Random { seed: 9 }] {
            let link = mimo(4, "5,5,7,7", il);
            let mut all: Vec<usize> = (1..=4).flat_map(|l| link.round_positions(l).to_vec()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..link.coded_len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn rejects_rate_mismatch() {
        let cfg = SystemConfig::new(1, 1, 1, 2, 100, 1, 1, Rate::new(1, 1)).unwrap();
        let r = Link::<f64>::new(
            cfg,
            ConvCode::from_octal("5,7").unwrap(),
            Constellation::bpsk(),
            RotationSpec::identity(),
            Interleaver::Identity,
            1 << 16,
        );
        assert!(r.is_err());
    }

    #[test]
    fn noiseless_candidate_distance_is_zero() {
        let link = mimo(2, "5,7", Interleaver::Random { seed: 3 });
        let f = StreamFactory::new(5);
        let info = random_bits(link.info_len(), &mut f.stream(Purpose::Info, 0));
        let coded = link.encode(&info).unwrap();
        let h = draw_channel::<f64, _>(link.cfg(), FadingStatics::ShortTerm, &mut f.stream(Purpose::Channel, 0));
        let mut groups = Vec::new();
        for ell in 1..=2 {
            let x = link.transmit_round(&coded, ell).unwrap();
            let y = apply_round_channel(link.cfg(), h.round(ell), &x, 10.0, NoiseMode::Zero, &mut f.stream(Purpose::Noise, 0)).unwrap();
            groups.extend(link.observe_round(&y, h.round(ell), 10.0, ell).unwrap());
        }
        assert!(link.candidate_distance(&groups, &coded).unwrap().abs() < 1e-9);
        let mut other = coded.clone();
        other[7] ^= 1;
        assert!(link.candidate_distance(&groups, &other).unwrap() > 1e-3);
        let llr = link.channel_llrs(&groups, DetectorKind::MaxLog).unwrap();
        assert!(llr.iter().zip(&coded).all(|(&l, &c)| (l > 0.0) == (c == 0)));
    }

    #[test]
    fn round_power_matches_symbol_count() {
        let link = mimo(2, "5,7", Interleaver::Identity);
        let coded = link.encode(&random_bits(link.info_len(), &mut StreamFactory::new(1).stream(Purpose::Info, 0))).unwrap();
        let x = link.transmit_round(&coded, 1).unwrap();
        let e = crate::linalg::frobenius_norm_sq(&x);
        assert!((e - 64.0).abs() < 1e-9);
    }
}
