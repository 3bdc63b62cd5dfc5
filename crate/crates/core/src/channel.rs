//! Block-fading MIMO channel realizations and equivalent channel matrices.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::{block_diag, CMatrix};
use crate::rng::complex_gaussian;
use crate::scalar::{Rate, Real};

/// Dimensions and first-round rate of an ARQ block-fading system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemConfig {
    /// Transmit antennas.
    pub nt: usize,
    /// Receive antennas.
    pub nr: usize,
    /// Fading blocks per ARQ round.
    pub b: usize,
    /// Maximum number of ARQ rounds.
    pub l: usize,
    /// Channel uses per fading block.
    pub t: usize,
    /// Fading blocks spanned by one dispersion rotation.
    pub m: usize,
    /// Bits per constellation symbol.
    pub q: usize,
    /// First-round rate, bits per channel use.
    pub r1: Rate,
}

impl SystemConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(nt: usize, nr: usize, b: usize, l: usize, t: usize, m: usize, q: usize, r1: Rate) -> Result<Self> {
        let cfg = Self { nt, nr, b, l, t, m, q, r1 };
        let problems = cfg.violations();
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    /// Every violated invariant, described.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("nt", self.nt), ("nr", self.nr), ("b", self.b), ("l", self.l), ("t", self.t), ("m", self.m), ("q", self.q)] {
            if v == 0 {
                out.push(format!("system.{name} must be at least 1"));
            }
        }
        if self.m > 0 && !self.b.is_multiple_of(self.m) {
            out.push(format!("system.b ({}) must be a multiple of system.m ({})", self.b, self.m));
        }
        let max_rate = Rate::from_integer((self.nt * self.q * self.l) as i64);
        if self.r1 <= Rate::from_integer(0) || self.r1 > max_rate {
            out.push(format!("first-round rate {} outside (0, {}]", self.r1, max_rate));
        }
        out
    }

    /// Rotations per round, `B / M`.
    pub fn d(&self) -> usize {
        self.b / self.m
    }

    /// Overall code rate `R1 / L`.
    pub fn r0(&self) -> Rate {
        self.r1 / Rate::from_integer(self.l as i64)
    }

    pub fn r1_f64(&self) -> f64 {
        *self.r1.numer() as f64 / *self.r1.denom() as f64
    }

    /// Dimension of one rotation, `M * Nt * T`.
    pub fn rotation_dim(&self) -> usize {
        self.m * self.nt * self.t
    }

    /// Symbols carried by one round, `B * Nt * T`.
    pub fn symbols_per_round(&self) -> usize {
        self.b * self.nt * self.t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingStatics {
    /// Fading redrawn every ARQ round.
    ShortTerm,
    /// Fading held fixed across all rounds of a message.
    LongTerm,
}

impl fmt::Display for FadingStatics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FadingStatics::ShortTerm => "short_term",
            FadingStatics::LongTerm => "long_term",
        })
    }
}

impl std::str::FromStr for FadingStatics {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "short_term" | "short-term" | "short" => Ok(Self::ShortTerm),
            "long_term" | "long-term" | "long" => Ok(Self::LongTerm),
            other => Err(format!("unknown fading statics '{other}' (expected short_term or long_term)")),
        }
    }
}

/// How receiver noise is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Gaussian,
    /// Diagnostic mode with noiseless reception.
    Zero,
}

/// Fading matrices `h[l][b]` (each `Nr x Nt`) for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraw<T> {
    pub statics: FadingStatics,
    pub h: Vec<Vec<CMatrix<T>>>,
}

impl<T: Real> ChannelDraw<T> {
    /// The `B` matrices of round `ell` (1-based).
    pub fn round(&self, ell: usize) -> &[CMatrix<T>] {
        &self.h[ell - 1]
    }

    pub fn rounds(&self) -> usize {
        self.h.len()
    }
}

/// Draws all `L x B` fading matrices for one frame.
pub fn draw_channel<T: Real, R: Rng + ?Sized>(cfg: &SystemConfig, statics: FadingStatics, rng: &mut R) -> ChannelDraw<T> {
    let h = match statics {
        FadingStatics::ShortTerm => (0..cfg.l).map(|_| (0..cfg.b).map(|_| CMatrix::random_gaussian(cfg.nr, cfg.nt, rng)).collect()).collect(),
        FadingStatics::LongTerm => {
            let first: Vec<CMatrix<T>> = (0..cfg.b).map(|_| CMatrix::random_gaussian(cfg.nr, cfg.nt, rng)).collect();
            vec![first; cfg.l]
        }
    };
    ChannelDraw { statics, h }
}

/// I.i.d. unit-variance complex Gaussian noise matrix.
pub fn draw_noise<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::random_gaussian(rows, cols, rng)
}

/// Received round signal `Y = sqrt(rho/Nt) diag(H_1..H_B) X + W`.
///
/// `x_round` stacks the `B` transmitted `Nt x T` blocks vertically.
pub fn apply_round_channel<T: Real, R: Rng + ?Sized>(
    cfg: &SystemConfig,
    h_round: &[CMatrix<T>],
    x_round: &CMatrix<T>,
    rho: T,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<CMatrix<T>> {
    ensure!(h_round.len() == cfg.b, "expected {} fading blocks, got {}", cfg.b, h_round.len());
    ensure!(
        x_round.rows() == cfg.b * cfg.nt && x_round.cols() == cfg.t,
        "round signal must be {}x{}, got {}x{}",
        cfg.b * cfg.nt,
        cfg.t,
        x_round.rows(),
        x_round.cols()
    );
    ensure!(rho >= T::zero(), "negative SNR");
    let amp = (rho / T::count(cfg.nt)).sqrt();
    let mut y = CMatrix::zeros(cfg.b * cfg.nr, cfg.t);
    for (b, h) in h_round.iter().enumerate() {
        ensure!(h.rows() == cfg.nr && h.cols() == cfg.nt, "fading block {b} has wrong shape");
        let xb = x_round.block(b * cfg.nt, 0, cfg.nt, cfg.t);
        let yb = h.matmul(&xb)?.scale(amp);
        y.set_block(b * cfg.nr, 0, &yb);
    }
    if noise == NoiseMode::Gaussian {
        for z in y.as_mut_slice() {
            *z += complex_gaussian::<T, R>(rng);
        }
    }
    Ok(y)
}

/// Equivalent channel seen by rotation `d_index` (1-based) of a round: each
/// of the rotation's `M` fading matrices repeated `T` times on the diagonal.
pub fn rotation_channel<T: Real>(cfg: &SystemConfig, h_round: &[CMatrix<T>], d_index: usize) -> Result<CMatrix<T>> {
    ensure!((1..=cfg.d()).contains(&d_index), "rotation index {d_index} outside 1..={}", cfg.d());
    ensure!(h_round.len() == cfg.b, "expected {} fading blocks, got {}", cfg.b, h_round.len());
    let first = (d_index - 1) * cfg.m;
    let blocks: Vec<CMatrix<T>> = (first..first + cfg.m).flat_map(|b| std::iter::repeat_n(h_round[b].clone(), cfg.t)).collect();
    block_diag(&blocks)
}

/// Accumulated channel `diag(H_1, ..., H_ell)` over the first `ell` rounds.
pub fn accumulate_channel<T: Real>(h: &ChannelDraw<T>, ell: usize) -> Result<CMatrix<T>> {
    ensure!((1..=h.rounds()).contains(&ell), "round count {ell} outside 1..={}", h.rounds());
    let blocks: Vec<CMatrix<T>> = h.h[..ell].iter().flatten().cloned().collect();
    block_diag(&blocks)
}

/// Channel seen by `len` consecutive entries of a round (or rotation)
/// vector starting at `start`: one fading matrix per channel use, chosen by
/// the fading block the channel use falls in.
pub fn symbol_group_channel<T: Real>(h_blocks: &[CMatrix<T>], nt: usize, t: usize, start: usize, len: usize) -> Result<CMatrix<T>> {
    ensure!(start.is_multiple_of(nt) && len.is_multiple_of(nt) && len > 0, "group [{start}, {}) not aligned to {nt} antennas", start + len);
    let uses = len / nt;
    let first = start / nt;
    ensure!((first + uses).div_ceil(t) <= h_blocks.len(), "group extends past the last fading block");
    let blocks: Vec<CMatrix<T>> = (first..first + uses).map(|u| h_blocks[u / t].clone()).collect();
    block_diag(&blocks)
}

/// Round matrix `H_l = diag(H_{l,1}, ..., H_{l,B})`.
pub fn round_channel<T: Real>(h_round: &[CMatrix<T>]) -> Result<CMatrix<T>> {
    block_diag(h_round)
}
