//! Closed-form SNR exponents, their combinatorial form and empirical slope
//! fitting.

use serde::Serialize;

use crate::channel::{FadingStatics, SystemConfig};
use crate::error::{ensure, Result};
use crate::linalg::{frobenius_norm_sq, hermitian_eigenvalues, CMatrix};
use crate::scalar::{Rate, RateScalar, Real};

/// A rate and its SNR exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub r1: f64,
    pub d: u64,
    /// False exactly where the floor argument is an integer (a step edge).
    pub continuous: bool,
}

/// Exponent with Gaussian inputs: `Nt Nr L B` (short-term) or `Nt Nr B`.
pub fn optimal_exponent_gaussian(cfg: &SystemConfig, statics: FadingStatics) -> u64 {
    let base = (cfg.nt * cfg.nr * cfg.b) as u64;
    match statics {
        FadingStatics::ShortTerm => base * cfg.l as u64,
        FadingStatics::LongTerm => base,
    }
}

/// Exponent with discrete inputs over a constellation of `2^Q` points:
/// `M Nt Nr (1 + floor(s (1 - r1 / (L Q Nt))))` with `s = LB/M` for
/// short-term and `B/M` for long-term fading.
pub fn optimal_exponent_discrete<S: RateScalar>(cfg: &SystemConfig, statics: FadingStatics, r1: S) -> Result<TradeoffPoint> {
    let full = S::from_int((cfg.l * cfg.q * cfg.nt) as i64);
    ensure!(r1 > S::from_int(0) && r1 <= full, "rate {r1} outside (0, {full}]");
    let steps = match statics {
        FadingStatics::ShortTerm => (cfg.l * cfg.b / cfg.m) as i64,
        FadingStatics::LongTerm => (cfg.b / cfg.m) as i64,
    };
    let x = S::from_int(steps).mul(S::from_int(1).sub(r1.div(full)));
    let k = x.floor_int() + 1;
    Ok(TradeoffPoint { r1: r1.to_f64(), d: (cfg.m * cfg.nt * cfg.nr) as u64 * k as u64, continuous: !x.is_integral() })
}

/// Worst pairwise error exponent of a rate-`rate` space-time code over `B`
/// blocks: `Nr (1 + floor(B (Nt - rate / Q)))`.
pub fn pep_singleton_bound<S: RateScalar>(nt: usize, nr: usize, b: usize, q: usize, rate: S) -> Result<u64> {
    let full = S::from_int((q * nt) as i64);
    ensure!(rate > S::from_int(0) && rate <= full, "rate {rate} outside (0, {full}]");
    let x = S::from_int(b as i64).mul(S::from_int(nt as i64).sub(rate.div(S::from_int(q as i64))));
    Ok(nr as u64 * (1 + x.floor_int()) as u64)
}

/// Smallest integer strictly greater than `x = D (L - r1 / (Q Nt))`, with a
/// flag telling whether `x` was itself an integer.
pub fn infimum_k<S: RateScalar>(d_count: usize, l: usize, r1: S, q: usize, nt: usize) -> Result<(u64, bool)> {
    let full = S::from_int((l * q * nt) as i64);
    ensure!(r1 > S::from_int(0) && r1 <= full, "rate {r1} outside (0, {full}]");
    let x = S::from_int(d_count as i64).mul(S::from_int(l as i64).sub(r1.div(S::from_int((q * nt) as i64))));
    Ok(((x.floor_int() + 1) as u64, x.is_integral()))
}

/// `alpha_i = -log(lambda_i) / log(rho)` for the eigenvalues of `H H†`.
pub fn snr_normalized_eigenvalues<T: Real>(h_block: &CMatrix<T>, rho: T) -> Result<Vec<T>> {
    ensure!(rho > T::one(), "SNR must exceed 1 for normalized eigenvalues");
    let eig = hermitian_eigenvalues(&h_block.gram())?;
    let lr = rho.ln();
    Ok(eig.into_iter().map(|l| if l <= T::zero() { T::infinity() } else { -l.ln() / lr }).collect())
}

/// Least-squares fit of `-log10 P` against `snr_db / 10`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in decades of probability.
    pub residual: f64,
    pub points: usize,
}

/// Fits the SNR exponent to `(snr_db, probability)` points. Points with
/// non-positive or non-finite probability are ignored.
pub fn estimate_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let usable: Vec<(f64, f64)> =
        points.iter().filter(|(s, p)| s.is_finite() && p.is_finite() && *p > 0.0).map(|&(s, p)| (s / 10.0, -p.log10())).collect();
    ensure!(usable.len() >= 3, "slope needs at least 3 usable points, got {}", usable.len());
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    ensure!(sxx > 0.0, "slope needs at least two distinct SNR values");
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SlopeFit { slope, intercept, residual, points: usable.len() })
}

/// Chernoff-type pairwise error bound `exp(-(rho / 4Nt) ||G (Xa - Xb)||^2)`.
pub fn pairwise_error_bound<T: Real>(g: &CMatrix<T>, x_a: &CMatrix<T>, x_b: &CMatrix<T>, rho: T, nt: usize) -> Result<T> {
    ensure!(x_a.rows() == x_b.rows() && x_a.cols() == x_b.cols(), "codeword shapes differ");
    ensure!(g.cols() == x_a.rows(), "channel has {} columns, codewords have {} rows", g.cols(), x_a.rows());
    let diff = x_a - x_b;
    let e = frobenius_norm_sq(&g.matmul(&diff)?);
    Ok((-(rho / T::count(4 * nt)) * e).exp())
}

/// `count` evenly spaced exact rates in `(0, max]`.
pub fn rate_grid(max: Rate, count: usize) -> Vec<Rate> {
    (1..=count as i64).map(|i| max * Rate::new(i, count as i64)).collect()
}

/// Which closed-form curve to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curve {
    Gaussian,
    Discrete,
    /// Pairwise-error bound per round; defined for rates up to `Q Nt`.
    Pairwise,
}

impl Curve {
    pub fn name(&self) -> &'static str {
        match self {
            Curve::Gaussian => "gaussian",
            Curve::Discrete => "discrete",
            Curve::Pairwise => "pep",
        }
    }
}

/// Tabulates a curve over `rates`; rates outside a curve's domain are skipped.
pub fn tradeoff_curve(cfg: &SystemConfig, statics: FadingStatics, curve: Curve, rates: &[Rate]) -> Vec<TradeoffPoint> {
    rates
        .iter()
        .filter_map(|&r| match curve {
            Curve::Gaussian => Some(TradeoffPoint { r1: r.to_f64(), d: optimal_exponent_gaussian(cfg, statics), continuous: true }),
            Curve::Discrete => optimal_exponent_discrete(cfg, statics, r).ok(),
            Curve::Pairwise => {
                let d = pep_singleton_bound(cfg.nt, cfg.nr, cfg.b, cfg.q, r).ok()?;
                let x = Rate::from_integer(cfg.b as i64) * (Rate::from_integer(cfg.nt as i64) - r / Rate::from_integer(cfg.q as i64));
                Some(TradeoffPoint { r1: r.to_f64(), d, continuous: !x.is_integer() })
            }
        })
        .collect()
}
