//! Feedforward rate-1/n convolutional codes with zero-tail termination.

use std::fmt;

use crate::error::{ensure, Error, Result};

/// Rate `1/n` feedforward convolutional code.
///
/// Generator bit `memory` taps the current input and bit 0 the oldest
/// register stage, so `[5, 7]` octal is `1 + D^2`, `1 + D + D^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCode {
    generators: Vec<u32>,
    memory: usize,
    next: Vec<[usize; 2]>,
    output: Vec<[u32; 2]>,
}

impl ConvCode {
    pub fn new(generators: &[u32]) -> Result<Self> {
        ensure!(!generators.is_empty(), "at least one generator is required");
        ensure!(generators.len() <= 16, "at most 16 generators are supported");
        ensure!(generators.iter().all(|&g| g > 0), "generators must be nonzero");
        let constraint = generators.iter().map(|g| 32 - g.leading_zeros() as usize).max().unwrap_or(1);
        let memory = constraint - 1;
        ensure!((1..=12).contains(&memory), "memory {memory} outside supported range 1..=12");
        let states = 1usize << memory;
        let mut next = Vec::with_capacity(states);
        let mut output = Vec::with_capacity(states);
        for s in 0..states {
            let mut nx = [0; 2];
            let mut out = [0; 2];
            for u in 0..2usize {
                let reg = ((u << memory) | s) as u32;
                nx[u] = (reg >> 1) as usize;
                out[u] = generators.iter().enumerate().fold(0u32, |acc, (j, &g)| acc | (((g & reg).count_ones() & 1) << j));
            }
            next.push(nx);
            output.push(out);
        }
        Ok(Self { generators: generators.to_vec(), memory, next, output })
    }

    /// Parses a comma-separated list of octal generators, e.g. `5,7`.
    pub fn from_octal(spec: &str) -> Result<Self> {
        let gens = spec
            .split(',')
            .map(|s| u32::from_str_radix(s.trim(), 8).map_err(|_| Error::contract(format!("bad octal generator '{}'", s.trim()))))
            .collect::<Result<Vec<u32>>>()?;
        Self::new(&gens)
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Output bits per input bit.
    pub fn n(&self) -> usize {
        self.generators.len()
    }

    pub fn states(&self) -> usize {
        self.next.len()
    }

    #[inline]
    pub fn next_state(&self, s: usize, u: usize) -> usize {
        self.next[s][u]
    }

    /// Output bits of branch `(s, u)`; bit `j` belongs to generator `j`.
    #[inline]
    pub fn branch_output(&self, s: usize, u: usize) -> u32 {
        self.output[s][u]
    }

    /// The two `(state, input)` branches entering `ns`, lower state first.
    #[inline]
    pub fn predecessors(&self, ns: usize) -> [(usize, usize); 2] {
        let u = ns >> (self.memory - 1);
        let base = (ns << 1) & (self.states() - 1);
        [(base, u), (base | 1, u)]
    }

    pub fn coded_len(&self, info_len: usize) -> usize {
        self.n() * (info_len + self.memory)
    }

    /// Largest information length whose terminated codeword fits `coded` bits.
    pub fn info_len_for(&self, coded: usize) -> Option<usize> {
        (coded / self.n()).checked_sub(self.memory).filter(|&k| k > 0)
    }
}

impl fmt::Display for ConvCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.generators.iter().map(|g| format!("{g:o}")).collect();
        write!(f, "[{}]_8", g.join(", "))
    }
}

/// Encodes and terminates to the zero state. Output is time-major: the `n`
/// bits of step `t` occupy positions `t*n .. t*n + n`.
pub fn conv_encode(code: &ConvCode, info: &[u8]) -> Vec<u8> {
    let n = code.n();
    let mut out = Vec::with_capacity(code.coded_len(info.len()));
    let mut s = 0;
    for u in info.iter().map(|&b| (b & 1) as usize).chain(std::iter::repeat_n(0, code.memory)) {
        let o = code.branch_output(s, u);
        for j in 0..n {
            out.push(((o >> j) & 1) as u8);
        }
        s = code.next_state(s, u);
    }
    out
}
