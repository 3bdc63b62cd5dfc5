//! Soft-output APP detection over small multidimensional constellations.

use std::fmt;

use num_complex::Complex;

use crate::error::{ensure, Result};
use crate::linalg::CMatrix;
use crate::modulation::MultidimConstellation;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DetectorKind {
    /// Max-log approximation of the APP detector.
    #[default]
    MaxLog,
    /// Exact APP detector (log-sum-exp).
    FullApp,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::MaxLog => "maxlog",
            DetectorKind::FullApp => "full_app",
        })
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "maxlog" | "max_log" | "max-log" => Ok(Self::MaxLog),
            "full_app" | "full" | "app" | "full-app" => Ok(Self::FullApp),
            other => Err(format!("unknown detector '{other}' (expected maxlog or full_app)")),
        }
    }
}

/// `-||y - sqrt(rho/nt) H x_c||^2` for every enumerated point `x_c`.
pub fn group_log_likelihoods<T: Real>(y: &[Complex<T>], h_eq: &CMatrix<T>, rho: T, nt: usize, points: &MultidimConstellation<T>) -> Result<Vec<T>> {
    ensure!(h_eq.cols() == points.dimension(), "channel has {} columns, points have dimension {}", h_eq.cols(), points.dimension());
    ensure!(h_eq.rows() == y.len(), "channel has {} rows, observation has length {}", h_eq.rows(), y.len());
    ensure!(rho >= T::zero(), "negative SNR");
    let hs = h_eq.scale((rho / T::count(nt)).sqrt());
    let mut out = Vec::with_capacity(points.len());
    for x in points.points() {
        let mut d = T::zero();
        for (r, &yr) in y.iter().enumerate() {
            let mut acc = yr;
            for (c, &xc) in x.iter().enumerate() {
                acc -= hs[(r, c)] * xc;
            }
            d += acc.norm_sqr();
        }
        out.push(-d);
    }
    Ok(out)
}

/// Bit extrinsics from candidate log-likelihoods `ll` and bit priors.
///
/// Candidate `c` carries bit `j` as bit `j` of its index.
pub fn app_extrinsics<T: Real>(ll: &[T], priors: &[T], kind: DetectorKind) -> Result<Vec<T>> {
    let bits = priors.len();
    ensure!(ll.len() == 1usize << bits, "{} candidates do not match {bits} bits", ll.len());
    let ninf = T::neg_infinity();
    // m[c] = ll[c] - sum of priors over the set bits of c
    let mut m = Vec::with_capacity(ll.len());
    let mut prior_sum = vec![T::zero(); ll.len()];
    m.push(ll[0]);
    for c in 1..ll.len() {
        let low = c.trailing_zeros() as usize;
        prior_sum[c] = prior_sum[c & (c - 1)] + priors[low];
        m.push(ll[c] - prior_sum[c]);
    }
    let mut a0 = vec![ninf; bits];
    let mut a1 = vec![ninf; bits];
    // bit j alternates in runs of 2^j candidates
    let fold_max = |v: &[T]| v.iter().copied().fold(ninf, |a, b| if b > a { b } else { a });
    for j in 0..bits {
        let run = 1usize << j;
        for chunk in m.chunks(2 * run) {
            let (zero, one) = chunk.split_at(run);
            a0[j] = a0[j].max(fold_max(zero));
            a1[j] = a1[j].max(fold_max(one));
        }
    }
    if kind == DetectorKind::FullApp {
        let top = a0.iter().chain(&a1).copied().fold(ninf, |a, b| if b > a { b } else { a });
        if top > ninf {
            let e: Vec<T> = m.iter().map(|&v| (v - top).exp()).collect();
            let tiny = T::min_positive_value();
            for j in 0..bits {
                let run = 1usize << j;
                let (mut s0, mut s1) = (T::zero(), T::zero());
                for chunk in e.chunks(2 * run) {
                    let (zero, one) = chunk.split_at(run);
                    s0 += zero.iter().copied().sum::<T>();
                    s1 += one.iter().copied().sum::<T>();
                }
                // below the exp range the max term already dominates
                if s0 > tiny {
                    a0[j] = a0[j].max(top + s0.ln());
                }
                if s1 > tiny {
                    a1[j] = a1[j].max(top + s1.ln());
                }
            }
        }
    }
    Ok((0..bits).map(|j| crate::fec::bcjr::clamp_llr(a0[j] - a1[j] - priors[j])).collect())
}

/// Per-bit extrinsics of one detection group.
pub fn maxlog_app_detect<T: Real>(
    y: &[Complex<T>],
    h_eq: &CMatrix<T>,
    rho: T,
    nt: usize,
    priors: &[T],
    points: &MultidimConstellation<T>,
    kind: DetectorKind,
) -> Result<Vec<T>> {
    ensure!(priors.len() == points.bits(), "expected {} priors, got {}", points.bits(), priors.len());
    let ll = group_log_likelihoods(y, h_eq, rho, nt, points)?;
    app_extrinsics(&ll, priors, kind)
}
