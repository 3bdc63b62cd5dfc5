//! Signal constellations, Gray bit mapping and linear dispersion.

use std::fmt;

use num_complex::Complex;
use rand::Rng;

use crate::channel::SystemConfig;
use crate::error::{ensure, Error, Result};
use crate::linalg::{haar_unitary, numerical_rank, unitarity_error, CMatrix};
use crate::scalar::Real;

/// Default cap on exhaustively enumerated multidimensional points.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 16;

/// Unit-energy complex signal set with Gray labels.
///
/// `points[label]` is the point carrying the `q`-bit word `label`, read
/// most-significant bit first.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation<T> {
    name: String,
    q: usize,
    points: Vec<Complex<T>>,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Gray-coded PAM levels `-(n-1), ..., n-1` indexed by label.
fn gray_pam(bits: usize) -> Vec<f64> {
    let n = 1usize << bits;
    let mut levels = vec![0.0; n];
    for i in 0..n {
        levels[gray(i)] = (2 * i) as f64 - (n - 1) as f64;
    }
    levels
}

impl<T: Real> Constellation<T> {
    /// BPSK: bit 0 maps to `+1`, bit 1 to `-1`.
    pub fn bpsk() -> Self {
        Self { name: "bpsk".into(), q: 1, points: vec![Complex::new(T::one(), T::zero()), Complex::new(-T::one(), T::zero())] }
    }

    /// Square Gray QAM with `2^q` points, `q` even.
    pub fn square_qam(q: usize) -> Result<Self> {
        ensure!(q >= 2 && q.is_multiple_of(2), "square QAM needs an even number of bits, got {q}");
        let half = q / 2;
        let pam = gray_pam(half);
        let energy = 2.0 * pam.iter().map(|x| x * x).sum::<f64>() / pam.len() as f64;
        let s = energy.sqrt();
        let mask = (1usize << half) - 1;
        let points = (0..1usize << q)
            .map(|label| {
                // in-phase bits sign-reversed so that label 0 sits at (+, +)
                let i = -pam[label >> half] / s;
                let qd = -pam[label & mask] / s;
                Complex::new(T::lit(i), T::lit(qd))
            })
            .collect();
        let name = if q == 2 { "4qam".to_string() } else { format!("{}qam", 1usize << q) };
        Ok(Self { name, q, points })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "4qam" | "qpsk" => Self::square_qam(2),
            "16qam" => Self::square_qam(4),
            "64qam" => Self::square_qam(6),
            other => Err(Error::contract(format!("unknown constellation '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex<T> {
        self.points[label]
    }

    pub fn average_energy(&self) -> T {
        self.points.iter().map(|p| p.norm_sqr()).sum::<T>() / T::count(self.points.len())
    }

    /// Label of the point nearest to `z`.
    pub fn nearest(&self, z: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

impl<T> fmt::Display for Constellation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Maps groups of `q` bits (MSB first) onto constellation points.
pub fn map_bits<T: Real>(bits: &[u8], c: &Constellation<T>) -> Result<Vec<Complex<T>>> {
    ensure!(bits.len().is_multiple_of(c.q), "{} bits not divisible by q = {}", bits.len(), c.q);
    Ok(bits.chunks(c.q).map(|w| c.point(w.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))).collect())
}

/// Hard nearest-point demapping back to bits.
pub fn demap_hard<T: Real>(symbols: &[Complex<T>], c: &Constellation<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * c.q);
    for &s in symbols {
        let label = c.nearest(s);
        for p in (0..c.q).rev() {
            out.push(((label >> p) & 1) as u8);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationKind {
    Identity,
    RandomUnitary {
        seed: u64,
    },
    /// Four-dimensional golden-code kernel (2 antennas x 2 channel uses).
    Algebraic,
    /// Caller-supplied unitary kernel.
    Custom,
}

impl fmt::Display for RotationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RotationKind::Identity => f.write_str("identity"),
            RotationKind::RandomUnitary { seed } => write!(f, "random_unitary(seed={seed})"),
            RotationKind::Algebraic => f.write_str("algebraic"),
            RotationKind::Custom => f.write_str("custom"),
        }
    }
}

/// Unitary dispersion kernel, repeated block-diagonally over the rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSpec<T> {
    kind: RotationKind,
    kernel: CMatrix<T>,
}

impl<T: Real> RotationSpec<T> {
    pub fn identity() -> Self {
        Self { kind: RotationKind::Identity, kernel: CMatrix::identity(1) }
    }

    /// Haar random kernel of dimension `k` drawn from `seed`.
    pub fn random_unitary(k: usize, seed: u64) -> Result<Self> {
        ensure!(k >= 1, "kernel dimension must be positive");
        let mut rng = crate::rng::StreamFactory::new(seed).stream(crate::rng::Purpose::Rotation, 0);
        Ok(Self { kind: RotationKind::RandomUnitary { seed }, kernel: haar_unitary(k, &mut rng) })
    }

    /// Golden-code kernel: symbols `(a, b, c, d)` become the column-major
    /// vectorization of a 2x2 full-rate full-diversity codeword.
    pub fn algebraic() -> Self {
        let s5 = 5.0f64.sqrt();
        let theta = (1.0 + s5) / 2.0;
        let theta_b = (1.0 - s5) / 2.0;
        let alpha = Complex::new(1.0, 1.0 - theta);
        let alpha_b = Complex::new(1.0, 1.0 - theta_b);
        let i = Complex::new(0.0, 1.0);
        let z = Complex::new(0.0, 0.0);
        let rows: [[Complex<f64>; 4]; 4] = [
            [alpha, alpha * theta, z, z],
            [z, z, i * alpha_b, i * alpha_b * theta_b],
            [z, z, alpha, alpha * theta],
            [alpha_b, alpha_b * theta_b, z, z],
        ];
        let kernel = CMatrix::from_fn(4, 4, |r, c| {
            let v = rows[r][c] / s5;
            Complex::new(T::lit(v.re), T::lit(v.im))
        });
        Self { kind: RotationKind::Algebraic, kernel }
    }

    /// Wraps a caller-supplied kernel after checking unitarity.
    pub fn custom(kernel: CMatrix<T>) -> Result<Self> {
        ensure!(kernel.is_square() && kernel.rows() >= 1, "kernel must be square");
        let err = unitarity_error(&kernel);
        ensure!(err <= T::lit(1e-8).max(T::symmetry_tol()), "kernel is not unitary (deviation {err})");
        Ok(Self { kind: RotationKind::Custom, kernel })
    }

    pub fn kind(&self) -> RotationKind {
        self.kind
    }

    pub fn kernel(&self) -> &CMatrix<T> {
        &self.kernel
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.rows()
    }

    pub fn is_identity(&self) -> bool {
        self.kind == RotationKind::Identity
    }

    /// Checks the kernel tiles the rotation dimension of `cfg`.
    pub fn check_fits(&self, cfg: &SystemConfig) -> Result<()> {
        let dim = cfg.rotation_dim();
        ensure!(dim.is_multiple_of(self.kernel_dim()), "kernel dimension {} does not divide M*Nt*T = {dim}", self.kernel_dim());
        Ok(())
    }

    /// Full block-diagonal rotation of dimension `dim`.
    pub fn full_matrix(&self, dim: usize) -> Result<CMatrix<T>> {
        let k = self.kernel_dim();
        ensure!(dim.is_multiple_of(k), "kernel dimension {k} does not divide {dim}");
        let mut r = CMatrix::zeros(dim, dim);
        for j in 0..dim / k {
            r.set_block(j * k, j * k, &self.kernel);
        }
        Ok(r)
    }
}

/// Smallest number of consecutive symbols closed under both the kernel and
/// the per-channel-use antenna grouping, `lcm(kernel_dim, nt)`.
pub fn detection_group_size(kernel_dim: usize, nt: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    kernel_dim / gcd(kernel_dim, nt) * nt
}

/// Applies the rotation, `x = R c`, kernel by kernel.
pub fn disperse<T: Real>(symbols: &[Complex<T>], rot: &RotationSpec<T>) -> Result<Vec<Complex<T>>> {
    let k = rot.kernel_dim();
    ensure!(symbols.len().is_multiple_of(k), "symbol count {} is not a multiple of kernel dimension {k}", symbols.len());
    if rot.is_identity() {
        return Ok(symbols.to_vec());
    }
    let mut out = Vec::with_capacity(symbols.len());
    for chunk in symbols.chunks(k) {
        out.extend(rot.kernel.mul_vec(chunk)?);
    }
    Ok(out)
}

/// Inverse of [`disperse`].
pub fn undisperse<T: Real>(x: &[Complex<T>], rot: &RotationSpec<T>) -> Result<Vec<Complex<T>>> {
    let k = rot.kernel_dim();
    ensure!(x.len().is_multiple_of(k), "length {} is not a multiple of kernel dimension {k}", x.len());
    if rot.is_identity() {
        return Ok(x.to_vec());
    }
    let adj = rot.kernel.adjoint();
    let mut out = Vec::with_capacity(x.len());
    for chunk in x.chunks(k) {
        out.extend(adj.mul_vec(chunk)?);
    }
    Ok(out)
}

/// Reshapes a dispersed rotation vector into the stacked `M*Nt x T` matrix.
///
/// The vector holds the `M` fading blocks one after another; each block is
/// the column-major fill of an `Nt x T` matrix. For `M = 1` this is plain
/// column-major filling.
pub fn reshape_to_blocks<T: Real>(x: &[Complex<T>], cfg: &SystemConfig) -> Result<CMatrix<T>> {
    reshape_blocks(x, cfg.m, cfg.nt, cfg.t)
}

/// Inverse of [`reshape_to_blocks`].
pub fn blocks_to_vector<T: Real>(x: &CMatrix<T>, cfg: &SystemConfig) -> Result<Vec<Complex<T>>> {
    ensure!(x.rows() == cfg.m * cfg.nt && x.cols() == cfg.t, "expected {}x{} matrix", cfg.m * cfg.nt, cfg.t);
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for m in 0..cfg.m {
        out.extend(x.block(m * cfg.nt, 0, cfg.nt, cfg.t).vec_col_major());
    }
    Ok(out)
}

/// Stacks `blocks` consecutive column-major `nt x t` matrices from `x`.
pub fn reshape_blocks<T: Real>(x: &[Complex<T>], blocks: usize, nt: usize, t: usize) -> Result<CMatrix<T>> {
    let per = nt * t;
    ensure!(x.len() == blocks * per, "vector length {} does not match {blocks}x{nt}x{t}", x.len());
    let mut out = CMatrix::zeros(blocks * nt, t);
    for (m, chunk) in x.chunks(per).enumerate() {
        out.set_block(m * nt, 0, &CMatrix::from_col_major(nt, t, chunk)?);
    }
    Ok(out)
}

/// Exhaustively enumerated multidimensional constellation `R c`.
///
/// Point `c` carries bit `i*q + p` of its index as bit `p` (MSB first) of
/// symbol `i`'s label.
#[derive(Clone, Debug, PartialEq)]
pub struct MultidimConstellation<T> {
    dimension: usize,
    bits: usize,
    points: Vec<Vec<Complex<T>>>,
}

impl<T: Real> MultidimConstellation<T> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Bits per point, `q * dimension`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Vec<Complex<T>>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bit `j` of point `c`.
    #[inline]
    pub fn bit(c: usize, j: usize) -> u8 {
        ((c >> j) & 1) as u8
    }
}

/// Symbol labels making up point index `c` of a `dim`-symbol enumeration.
pub fn labels_of_index(c: usize, dim: usize, q: usize) -> Vec<usize> {
    (0..dim).map(|i| (0..q).fold(0usize, |acc, p| (acc << 1) | ((c >> (i * q + p)) & 1))).collect()
}

/// Enumerates `R c` over all symbol vectors of length `dim`.
pub fn enumerate_points<T: Real>(c: &Constellation<T>, rot: &RotationSpec<T>, dim: usize, cap: u128) -> Result<MultidimConstellation<T>> {
    let bits = c.q() * dim;
    let count: u128 = if bits >= 127 { u128::MAX } else { 1u128 << bits };
    if count > cap {
        return Err(Error::EnumerationInfeasible { points: count, cap });
    }
    let mut points = Vec::with_capacity(count as usize);
    for idx in 0..count as usize {
        let syms: Vec<Complex<T>> = labels_of_index(idx, dim, c.q()).into_iter().map(|l| c.point(l)).collect();
        points.push(disperse(&syms, rot)?);
    }
    Ok(MultidimConstellation { dimension: dim, bits, points })
}

/// The multidimensional constellation of one rotation, dimension `M*Nt*T`.
pub fn enumerate_multidim<T: Real>(c: &Constellation<T>, rot: &RotationSpec<T>, cfg: &SystemConfig, cap: u128) -> Result<MultidimConstellation<T>> {
    rot.check_fits(cfg)?;
    enumerate_points(c, rot, cfg.rotation_dim(), cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiversityReport {
    pub full: bool,
    /// Smallest rank of any per-block difference matrix observed.
    pub min_rank: usize,
    /// Rank required for full diversity, `min(Nt, T)`.
    pub required_rank: usize,
    pub pairs_checked: usize,
}

/// Samples distinct symbol-vector pairs and records the minimum rank of the
/// per-fading-block difference matrices after dispersion.
pub fn full_diversity_check<T: Real, R: Rng + ?Sized>(
    rot: &RotationSpec<T>,
    c: &Constellation<T>,
    cfg: &SystemConfig,
    sample_pairs: usize,
    rng: &mut R,
) -> Result<DiversityReport> {
    rot.check_fits(cfg)?;
    let dim = cfg.rotation_dim();
    let n = c.points().len();
    let required = cfg.nt.min(cfg.t);
    let mut min_rank = usize::MAX;
    let mut checked = 0;
    while checked < sample_pairs {
        let a: Vec<usize> = (0..dim).map(|_| rng.next_u64() as usize % n).collect();
        let mut b: Vec<usize> = (0..dim).map(|_| rng.next_u64() as usize % n).collect();
        if a == b {
            let i = rng.next_u64() as usize % dim;
            b[i] = (b[i] + 1) % n;
        }
        min_rank = min_rank.min(pair_min_rank(rot, c, cfg, &a, &b)?);
        checked += 1;
    }
    Ok(DiversityReport { full: min_rank >= required, min_rank, required_rank: required, pairs_checked: checked })
}

/// Minimum per-block rank of the dispersed difference of two label vectors.
pub fn pair_min_rank<T: Real>(rot: &RotationSpec<T>, c: &Constellation<T>, cfg: &SystemConfig, a: &[usize], b: &[usize]) -> Result<usize> {
    let xa = disperse(&a.iter().map(|&l| c.point(l)).collect::<Vec<_>>(), rot)?;
    let xb = disperse(&b.iter().map(|&l| c.point(l)).collect::<Vec<_>>(), rot)?;
    let diff: Vec<Complex<T>> = xa.iter().zip(&xb).map(|(p, q)| p - q).collect();
    let stacked = reshape_to_blocks(&diff, cfg)?;
    Ok((0..cfg.m).map(|m| numerical_rank(&stacked.block(m * cfg.nt, 0, cfg.nt, cfg.t))).min().unwrap_or(0))
}
