//! Forward-backward APP decoding of terminated convolutional codes.

use crate::error::{ensure, Result};
use crate::fec::conv::ConvCode;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct BcjrOutput<T> {
    /// Posterior LLRs of the information bits (tail excluded).
    pub info_posteriors: Vec<T>,
    /// Coded-bit extrinsics, posterior minus prior.
    pub coded_extrinsics: Vec<T>,
}

#[inline]
fn max_star<T: Real>(a: T, b: T, max_log: bool) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    if max_log {
        m
    } else {
        m + (-(a - b).abs()).exp().ln_1p()
    }
}

/// Log-MAP (or max-log-MAP with `max_log`) decoding from coded-bit priors.
pub fn bcjr_decode<T: Real>(code: &ConvCode, coded_priors: &[T], max_log: bool) -> Result<BcjrOutput<T>> {
    let n = code.n();
    ensure!(coded_priors.len().is_multiple_of(n), "prior length {} is not a multiple of n = {n}", coded_priors.len());
    let steps = coded_priors.len() / n;
    ensure!(steps > code.memory(), "prior length {} too short for memory {}", coded_priors.len(), code.memory());
    let info_len = steps - code.memory();
    let sc = code.states();
    let ninf = T::neg_infinity();
    let half = T::lit(0.5);

    let gamma = |t: usize, s: usize, u: usize| -> T {
        let out = code.branch_output(s, u);
        let mut g = T::zero();
        for j in 0..n {
            let l = coded_priors[t * n + j];
            if (out >> j) & 1 == 0 {
                g += l;
            } else {
                g -= l;
            }
        }
        g * half
    };
    let allowed = |t: usize, u: usize| u == 0 || t < info_len;

    let mut alpha = vec![ninf; (steps + 1) * sc];
    alpha[0] = T::zero();
    for t in 0..steps {
        for s in 0..sc {
            let a = alpha[t * sc + s];
            if a == ninf {
                continue;
            }
            for u in 0..2 {
                if !allowed(t, u) {
                    continue;
                }
                let ns = code.next_state(s, u);
                let idx = (t + 1) * sc + ns;
                alpha[idx] = max_star(alpha[idx], a + gamma(t, s, u), max_log);
            }
        }
        let row = &mut alpha[(t + 1) * sc..(t + 2) * sc];
        let m = row.iter().copied().fold(ninf, T::max);
        if m > ninf {
            row.iter_mut().for_each(|v| *v -= m);
        }
    }

    let mut beta = vec![ninf; (steps + 1) * sc];
    beta[steps * sc] = T::zero();
    for t in (0..steps).rev() {
        for s in 0..sc {
            let mut acc = ninf;
            for u in 0..2 {
                if !allowed(t, u) {
                    continue;
                }
                let b = beta[(t + 1) * sc + code.next_state(s, u)];
                if b == ninf {
                    continue;
                }
                acc = max_star(acc, b + gamma(t, s, u), max_log);
            }
            beta[t * sc + s] = acc;
        }
        let row = &mut beta[t * sc..(t + 1) * sc];
        let m = row.iter().copied().fold(ninf, T::max);
        if m > ninf {
            row.iter_mut().for_each(|v| *v -= m);
        }
    }

    let mut info_posteriors = Vec::with_capacity(info_len);
    let mut coded_extrinsics = vec![T::zero(); coded_priors.len()];
    let mut bit0 = vec![ninf; n];
    let mut bit1 = vec![ninf; n];
    for t in 0..steps {
        let mut u0 = ninf;
        let mut u1 = ninf;
        bit0.iter_mut().for_each(|v| *v = ninf);
        bit1.iter_mut().for_each(|v| *v = ninf);
        for s in 0..sc {
            let a = alpha[t * sc + s];
            if a == ninf {
                continue;
            }
            for u in 0..2 {
                if !allowed(t, u) {
                    continue;
                }
                let b = beta[(t + 1) * sc + code.next_state(s, u)];
                if b == ninf {
                    continue;
                }
                let m = a + gamma(t, s, u) + b;
                if u == 0 {
                    u0 = max_star(u0, m, max_log);
                } else {
                    u1 = max_star(u1, m, max_log);
                }
                let out = code.branch_output(s, u);
                for j in 0..n {
                    if (out >> j) & 1 == 0 {
                        bit0[j] = max_star(bit0[j], m, max_log);
                    } else {
                        bit1[j] = max_star(bit1[j], m, max_log);
                    }
                }
            }
        }
        if t < info_len {
            info_posteriors.push(clamp_llr(u0 - u1));
        }
        for j in 0..n {
            coded_extrinsics[t * n + j] = clamp_llr(bit0[j] - bit1[j] - coded_priors[t * n + j]);
        }
    }
    Ok(BcjrOutput { info_posteriors, coded_extrinsics })
}

/// Maps infinities (bits fixed by the code, e.g. in the tail) to large
/// finite values so downstream arithmetic stays finite.
#[inline]
pub(crate) fn clamp_llr<T: Real>(x: T) -> T {
    let cap = T::lit(1e6);
    if x.is_nan() {
        T::zero()
    } else {
        x.max(-cap).min(cap)
    }
}
