//! Uniform random codebooks with brute-force ML decoding, for checking the
//! achievable exponent on instances small enough to search exhaustively.

use num_complex::Complex;
use rand::Rng;

use crate::error::{ensure, Result};
use crate::linalg::CMatrix;
use crate::modulation::Constellation;
use crate::scalar::Real;

/// Codewords of i.i.d. uniform constellation symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomCodebook<T> {
    pub codewords: Vec<Vec<Complex<T>>>,
}

impl<T: Real> RandomCodebook<T> {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn length(&self) -> usize {
        self.codewords.first().map_or(0, Vec::len)
    }
}

pub fn random_codebook<T: Real, R: Rng + ?Sized>(
    size: usize,
    length: usize,
    constellation: &Constellation<T>,
    rng: &mut R,
) -> Result<RandomCodebook<T>> {
    ensure!(size >= 1 && length >= 1, "codebook size and length must be positive");
    let n = constellation.points().len() as u64;
    let codewords = (0..size).map(|_| (0..length).map(|_| constellation.point((rng.next_u64() % n) as usize)).collect()).collect();
    Ok(RandomCodebook { codewords })
}

/// Smallest number of length-`block_len` blocks in which two codewords differ.
pub fn blockwise_min_distance<T: Real>(cb: &RandomCodebook<T>, block_len: usize) -> Result<usize> {
    ensure!(block_len >= 1 && cb.length().is_multiple_of(block_len), "block length {block_len} does not divide {}", cb.length());
    let blocks = cb.length() / block_len;
    let mut best = blocks;
    for (i, a) in cb.codewords.iter().enumerate() {
        for b in &cb.codewords[i + 1..] {
            let differ = a.chunks(block_len).zip(b.chunks(block_len)).filter(|(x, y)| x != y).count();
            best = best.min(differ);
        }
    }
    Ok(best)
}

/// Draws codebooks until one has every pair differing in at least
/// `min_blocks` blocks. Returns the codebook and the number of draws.
pub fn expurgated_codebook<T: Real, R: Rng + ?Sized>(
    size: usize,
    length: usize,
    block_len: usize,
    min_blocks: usize,
    constellation: &Constellation<T>,
    rng: &mut R,
    max_draws: usize,
) -> Result<(RandomCodebook<T>, usize)> {
    for draw in 1..=max_draws {
        let cb = random_codebook(size, length, constellation, rng)?;
        if blockwise_min_distance(&cb, block_len)? >= min_blocks {
            return Ok((cb, draw));
        }
    }
    Err(crate::error::Error::contract(format!("no codebook with blockwise distance {min_blocks} in {max_draws} draws")))
}

/// Index (0-based) of the codeword minimizing `||y - sqrt(rho/nt) H x||^2`.
pub fn ml_decode_bruteforce<T: Real>(cb: &RandomCodebook<T>, y: &[Complex<T>], h: &CMatrix<T>, rho: T, nt: usize) -> Result<usize> {
    ensure!(!cb.is_empty(), "empty codebook");
    ensure!(h.cols() == cb.length() && h.rows() == y.len(), "channel shape does not match codebook and observation");
    let hs = h.scale((rho / T::count(nt)).sqrt());
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, x) in cb.codewords.iter().enumerate() {
        let hx = hs.mul_vec(x)?;
        let d: T = hx.iter().zip(y).map(|(a, b)| (b - a).norm_sqr()).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(best)
}
