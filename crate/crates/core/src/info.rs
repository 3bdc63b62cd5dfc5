//! Mutual information of Gaussian and discrete inputs over block-fading
//! channels, and Monte-Carlo outage probability.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{draw_channel, symbol_group_channel, ChannelDraw, FadingStatics, SystemConfig};
use crate::error::{ensure, Result};
use crate::linalg::{log_det_capacity_term, CMatrix};
use crate::modulation::{detection_group_size, enumerate_points, Constellation, MultidimConstellation, RotationSpec};
use crate::rng::{complex_gaussian, Purpose, StreamFactory};
use crate::scalar::Real;
use crate::stats::Proportion;

/// Mutual information in bits per channel use with its Monte-Carlo error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiEstimate<T> {
    pub value: T,
    pub std_error: T,
}

impl<T: Real> MiEstimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, std_error: T::zero() }
    }

    fn add(self, other: Self) -> Self {
        Self { value: self.value + other.value, std_error: (self.std_error.powi(2) + other.std_error.powi(2)).sqrt() }
    }
}

/// Gaussian-input round MI, the block average of `log2 det(I + rho/Nt G G†)`.
pub fn gaussian_round_mi<T: Real>(h_round: &[CMatrix<T>], rho: T, cfg: &SystemConfig) -> Result<MiEstimate<T>> {
    ensure!(h_round.len() == cfg.b, "expected {} fading blocks, got {}", cfg.b, h_round.len());
    let mut acc = T::zero();
    for g in h_round {
        acc += log_det_capacity_term(g, rho, cfg.nt)?;
    }
    Ok(MiEstimate::exact(acc / T::count(cfg.b)))
}

/// Monte-Carlo MI of a uniformly used enumerated constellation through
/// `h_eq`, in bits per channel use (`points.dimension() / nt` channel uses).
pub fn discrete_rotation_mi<T: Real, R: Rng + ?Sized>(
    h_eq: &CMatrix<T>,
    rho: T,
    nt: usize,
    points: &MultidimConstellation<T>,
    mc_samples: usize,
    rng: &mut R,
) -> Result<MiEstimate<T>> {
    ensure!(mc_samples >= 1, "at least one Monte-Carlo sample is required");
    ensure!(h_eq.cols() == points.dimension(), "channel has {} columns, points have dimension {}", h_eq.cols(), points.dimension());
    ensure!(points.dimension().is_multiple_of(nt), "dimension not a multiple of nt");
    ensure!(rho >= T::zero(), "negative SNR");
    let uses = T::count(points.dimension() / nt);
    let amp = (rho / T::count(nt)).sqrt();
    let images: Vec<Vec<Complex<T>>> =
        points.points().iter().map(|x| h_eq.mul_vec(x).map(|v| v.into_iter().map(|z| z * amp).collect())).collect::<Result<_>>()?;
    let n_pts = images.len();
    let rows = h_eq.rows();
    let exhaustive_x = n_pts <= 256;
    let total = if exhaustive_x { n_pts * mc_samples } else { mc_samples };
    let mut w = vec![Complex::new(T::zero(), T::zero()); rows];
    let mut expo = vec![T::zero(); n_pts];
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    for s in 0..total {
        let xi = if exhaustive_x { s / mc_samples } else { (rng.next_u64() % n_pts as u64) as usize };
        for z in w.iter_mut() {
            *z = complex_gaussian(rng);
        }
        let w_norm: T = w.iter().map(|z| z.norm_sqr()).sum();
        let hx = &images[xi];
        let mut m = T::neg_infinity();
        for (j, hxp) in images.iter().enumerate() {
            let mut d = T::zero();
            for r in 0..rows {
                d += (hx[r] - hxp[r] + w[r]).norm_sqr();
            }
            expo[j] = w_norm - d;
            m = m.max(expo[j]);
        }
        let lse = m + expo.iter().map(|&e| (e - m).exp()).sum::<T>().ln();
        let v = lse / T::LN_2();
        sum += v;
        sum_sq += v * v;
    }
    let nf = T::count(total);
    let mean = sum / nf;
    let var = if total > 1 { ((sum_sq - nf * mean * mean) / (nf - T::one())).max(T::zero()) } else { T::zero() };
    let bits = T::count(points.bits());
    let value = ((bits - mean) / uses).max(T::zero()).min(bits / uses);
    Ok(MiEstimate { value, std_error: (var / nf).sqrt() / uses })
}

/// Everything needed to evaluate discrete-input MI for one system.
#[derive(Clone, Debug)]
pub struct DiscreteMi<T> {
    constellation: Constellation<T>,
    rotation: RotationSpec<T>,
    group: usize,
    points: MultidimConstellation<T>,
    pub mc_samples: usize,
}

impl<T: Real> DiscreteMi<T> {
    /// Enumerates the smallest independent symbol group (`lcm(kernel, Nt)`).
    pub fn new(constellation: Constellation<T>, rotation: RotationSpec<T>, cfg: &SystemConfig, mc_samples: usize, cap: u128) -> Result<Self> {
        rotation.check_fits(cfg)?;
        let group = detection_group_size(rotation.kernel_dim(), cfg.nt);
        ensure!(cfg.rotation_dim().is_multiple_of(group), "group size {group} does not divide the rotation dimension");
        let points = enumerate_points(&constellation, &rotation, group, cap)?;
        Ok(Self { constellation, rotation, group, points, mc_samples })
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    pub fn rotation(&self) -> &RotationSpec<T> {
        &self.rotation
    }

    /// MI of rotation `d_index` (1-based) of a round. Independent symbol
    /// groups seeing the same fading pattern share one estimate.
    pub fn rotation_mi<R: Rng + ?Sized>(
        &self,
        cfg: &SystemConfig,
        h_round: &[CMatrix<T>],
        rho: T,
        d_index: usize,
        rng: &mut R,
    ) -> Result<MiEstimate<T>> {
        ensure!((1..=cfg.d()).contains(&d_index), "rotation index {d_index} outside 1..={}", cfg.d());
        let blocks = &h_round[(d_index - 1) * cfg.m..d_index * cfg.m];
        let n_groups = cfg.rotation_dim() / self.group;
        // (first block, last block, groups with that pattern, first group start)
        let mut patterns: Vec<(usize, usize, usize, usize)> = Vec::new();
        for gi in 0..n_groups {
            let start = gi * self.group;
            let first = (start / cfg.nt) / cfg.t;
            let last = ((start + self.group) / cfg.nt - 1) / cfg.t;
            match patterns.iter_mut().find(|p| (p.0, p.1) == (first, last) && first == last) {
                Some(p) => p.2 += 1,
                None => patterns.push((first, last, 1, start)),
            }
        }
        let mut value = T::zero();
        let mut var = T::zero();
        for &(_, _, count, start) in &patterns {
            let h = symbol_group_channel(blocks, cfg.nt, cfg.t, start, self.group)?;
            let e = discrete_rotation_mi(&h, rho, cfg.nt, &self.points, self.mc_samples, rng)?;
            let c = T::count(count);
            value += c * e.value;
            // groups sharing a pattern reuse one estimate, so their errors add linearly
            var += (c * e.std_error).powi(2);
        }
        let n = T::count(n_groups);
        Ok(MiEstimate { value: value / n, std_error: var.sqrt() / n })
    }

    /// Round MI, the average over the `D` rotations.
    pub fn round_mi<R: Rng + ?Sized>(&self, cfg: &SystemConfig, h_round: &[CMatrix<T>], rho: T, rng: &mut R) -> Result<MiEstimate<T>> {
        ensure!(h_round.len() == cfg.b, "expected {} fading blocks, got {}", cfg.b, h_round.len());
        let d = cfg.d();
        let mut acc = MiEstimate::exact(T::zero());
        for di in 1..=d {
            acc = acc.add(self.rotation_mi(cfg, h_round, rho, di, rng)?);
        }
        let df = T::count(d);
        Ok(MiEstimate { value: acc.value / df, std_error: acc.std_error / df })
    }
}

/// Discrete round MI as the average of per-rotation values.
pub fn discrete_round_mi<T: Real, R: Rng + ?Sized>(
    h_round: &[CMatrix<T>],
    rho: T,
    cfg: &SystemConfig,
    ctx: &DiscreteMi<T>,
    rng: &mut R,
) -> Result<MiEstimate<T>> {
    ctx.round_mi(cfg, h_round, rho, rng)
}

/// Upper bound on discrete round MI:
/// `(1/D) sum_d min{Q Nt, (1/M) sum_m log2 det(I + rho/Nt G G†)}`.
pub fn mi_upper_bound<T: Real>(h_round: &[CMatrix<T>], rho: T, cfg: &SystemConfig) -> Result<T> {
    ensure!(h_round.len() == cfg.b, "expected {} fading blocks, got {}", cfg.b, h_round.len());
    let cap = T::count(cfg.q * cfg.nt);
    let mut acc = T::zero();
    for d in 0..cfg.d() {
        let mut s = T::zero();
        for g in &h_round[d * cfg.m..(d + 1) * cfg.m] {
            s += log_det_capacity_term(g, rho, cfg.nt)?;
        }
        acc += cap.min(s / T::count(cfg.m));
    }
    Ok(acc / T::count(cfg.d()))
}

/// Tabulated MI of a scalar constellation over complex AWGN,
/// `y = sqrt(snr) x + w`, computed by two-dimensional Gauss-Hermite
/// quadrature and interpolated linearly in dB.
#[derive(Clone, Debug)]
pub struct ScalarMiTable {
    q: usize,
    db_min: f64,
    step_db: f64,
    values: Vec<f64>,
}

impl ScalarMiTable {
    pub fn new<T: Real>(constellation: &Constellation<T>) -> Self {
        let pts: Vec<Complex<f64>> = constellation.points().iter().map(|p| Complex::new(p.re.to_f64_lossy(), p.im.to_f64_lossy())).collect();
        let (nodes, weights) = gauss_hermite(48);
        let (db_min, db_max, step_db) = (-30.0, 45.0, 0.05);
        let n = ((db_max - db_min) / step_db) as usize + 1;
        let values = (0..n).map(|i| scalar_mi_quadrature(&pts, 10f64.powf((db_min + i as f64 * step_db) / 10.0), &nodes, &weights)).collect();
        Self { q: constellation.q(), db_min, step_db, values }
    }

    /// MI in bits per symbol at linear SNR `snr`.
    pub fn mi(&self, snr: f64) -> f64 {
        if snr <= 0.0 {
            return 0.0;
        }
        let db = 10.0 * snr.log10();
        let pos = (db - self.db_min) / self.step_db;
        if pos <= 0.0 {
            return self.values[0] * snr / 10f64.powf(self.db_min / 10.0);
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.q as f64;
        }
        let f = pos - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

fn scalar_mi_quadrature(pts: &[Complex<f64>], snr: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let a = snr.sqrt();
    let m = pts.len() as f64;
    let mut expect = 0.0;
    for x in pts {
        for (i, &u) in nodes.iter().enumerate() {
            for (j, &v) in nodes.iter().enumerate() {
                let w = Complex::new(u, v);
                let wn = w.norm_sqr();
                let e: Vec<f64> = pts.iter().map(|xp| wn - ((x - xp) * a + w).norm_sqr()).collect();
                let mx = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + e.iter().map(|&t| (t - mx).exp()).sum::<f64>().ln();
                expect += weights[i] * weights[j] * lse;
            }
        }
    }
    // w ~ CN(0, 1): each component has density exp(-t^2)/sqrt(pi)
    let expect = expect / (std::f64::consts::PI * m) / std::f64::consts::LN_2;
    (m.log2() - expect).clamp(0.0, m.log2())
}

/// Nodes and weights of `n`-point Gauss-Hermite quadrature for
/// `∫ exp(-x^2) f(x) dx`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-0.16667),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// How per-round mutual information is evaluated.
#[derive(Clone, Debug)]
pub enum MiModel<T> {
    Gaussian,
    /// Monte-Carlo discrete-input MI.
    Discrete(Arc<DiscreteMi<T>>),
    /// Upper bound on discrete MI (gives a lower bound on outage).
    DiscreteBound,
    /// Exact-by-quadrature scalar table; valid for one transmit antenna and
    /// identity rotation, where each symbol sees SNR `rho ||h||^2`.
    ScalarTable(Arc<ScalarMiTable>),
}

impl<T: Real> MiModel<T> {
    pub fn label(&self) -> &'static str {
        match self {
            MiModel::Gaussian => "gaussian",
            MiModel::Discrete(_) => "discrete_mc",
            MiModel::DiscreteBound => "discrete_bound",
            MiModel::ScalarTable(_) => "discrete_table",
        }
    }

    pub fn round_mi<R: Rng + ?Sized>(&self, cfg: &SystemConfig, h_round: &[CMatrix<T>], rho: T, rng: &mut R) -> Result<MiEstimate<T>> {
        match self {
            MiModel::Gaussian => gaussian_round_mi(h_round, rho, cfg),
            MiModel::Discrete(ctx) => ctx.round_mi(cfg, h_round, rho, rng),
            MiModel::DiscreteBound => mi_upper_bound(h_round, rho, cfg).map(MiEstimate::exact),
            MiModel::ScalarTable(tab) => {
                ensure!(cfg.nt == 1, "scalar MI table needs one transmit antenna");
                let r = rho.to_f64_lossy();
                let s: f64 = h_round.iter().map(|h| tab.mi(r * h.as_slice().iter().map(|z| z.norm_sqr().to_f64_lossy()).sum::<f64>())).sum();
                Ok(MiEstimate::exact(T::lit(s / cfg.b as f64)))
            }
        }
    }
}

/// Accumulated MI over rounds `1..=ell`.
pub fn accumulated_mi<T: Real, R: Rng + ?Sized>(
    h: &ChannelDraw<T>,
    rho: T,
    ell: usize,
    cfg: &SystemConfig,
    model: &MiModel<T>,
    rng: &mut R,
) -> Result<MiEstimate<T>> {
    ensure!((1..=h.rounds()).contains(&ell), "round count {ell} outside 1..={}", h.rounds());
    let mut acc = MiEstimate::exact(T::zero());
    for k in 1..=ell {
        acc = acc.add(model.round_mi(cfg, h.round(k), rho, rng)?);
    }
    Ok(acc)
}

/// Trials per independent random stream in outage estimation.
pub const OUTAGE_CHUNK: u64 = 4096;
/// Chunks evaluated between early-stopping checks.
const OUTAGE_BATCH_CHUNKS: u64 = 16;

/// Monte-Carlo estimate of `Pr(accumulated MI up to round ell < R1)`.
pub fn outage_probability<T: Real>(
    cfg: &SystemConfig,
    statics: FadingStatics,
    rho: T,
    ell: usize,
    model: &MiModel<T>,
    trials: u64,
    streams: &StreamFactory,
) -> Result<Proportion> {
    outage_probability_until(cfg, statics, rho, ell, model, trials, trials, u64::MAX, streams)
}

/// Outage estimate that keeps adding chunks of trials beyond `min_trials`
/// until `target_events` outages are seen or `max_trials` is reached. The
/// stopping decision depends only on completed chunks, so the result does
/// not depend on the number of worker threads.
#[allow(clippy::too_many_arguments)]
pub fn outage_probability_until<T: Real>(
    cfg: &SystemConfig,
    statics: FadingStatics,
    rho: T,
    ell: usize,
    model: &MiModel<T>,
    min_trials: u64,
    max_trials: u64,
    target_events: u64,
    streams: &StreamFactory,
) -> Result<Proportion> {
    ensure!(min_trials >= 1, "at least one trial is required");
    ensure!((1..=cfg.l).contains(&ell), "round count {ell} outside 1..={}", cfg.l);
    let threshold = T::lit(cfg.r1_f64());
    let max_trials = max_trials.max(min_trials);
    let run_chunk = |chunk: u64, len: u64| -> Result<u64> {
        let mut rng = streams.stream(Purpose::Outage, chunk);
        let mut events = 0;
        for _ in 0..len {
            let h: ChannelDraw<T> = draw_channel(cfg, statics, &mut rng);
            if accumulated_mi(&h, rho, ell, cfg, model, &mut rng)?.value < threshold {
                events += 1;
            }
        }
        Ok(events)
    };
    let mut done = 0u64;
    let mut events = 0u64;
    let mut next_chunk = 0u64;
    while done < min_trials || (events < target_events && done < max_trials) {
        let goal = if done < min_trials { min_trials } else { max_trials };
        let remaining = goal - done;
        let chunks = remaining.div_ceil(OUTAGE_CHUNK).min(OUTAGE_BATCH_CHUNKS);
        let jobs: Vec<(u64, u64)> = (0..chunks).map(|i| (next_chunk + i, OUTAGE_CHUNK.min(remaining - i * OUTAGE_CHUNK))).collect();
        let results: Vec<Result<u64>> = jobs.par_iter().map(|&(c, len)| run_chunk(c, len)).collect();
        for r in results {
            events += r?;
        }
        done += jobs.iter().map(|j| j.1).sum::<u64>();
        next_chunk += chunks;
    }
    Ok(Proportion::new(events, done))
}
