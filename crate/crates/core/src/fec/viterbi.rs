//! Soft-input Viterbi and parallel list-Viterbi decoding of terminated codes.
//!
//! Path metric is the correlation `sum (1 - 2c) * llr / 2`, maximized. Ties
//! go to the lower-indexed predecessor state.

use crate::error::{ensure, Result};
use crate::fec::conv::ConvCode;
use crate::scalar::Real;

/// A decoded information sequence with its path metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ListCandidate<T> {
    pub info: Vec<u8>,
    pub metric: T,
}

fn steps_for<T>(code: &ConvCode, llrs: &[T]) -> Result<usize> {
    ensure!(llrs.len().is_multiple_of(code.n()), "LLR length {} is not a multiple of n = {}", llrs.len(), code.n());
    let steps = llrs.len() / code.n();
    ensure!(steps > code.memory(), "LLR length {} too short for memory {}", llrs.len(), code.memory());
    Ok(steps)
}

#[inline]
fn branch_metric<T: Real>(out: u32, llr: &[T]) -> T {
    let mut m = T::zero();
    for (j, &l) in llr.iter().enumerate() {
        if (out >> j) & 1 == 0 {
            m += l;
        } else {
            m -= l;
        }
    }
    m * T::lit(0.5)
}

/// Metric of a specific coded sequence under `llrs`.
pub fn path_metric<T: Real>(coded: &[u8], llrs: &[T]) -> T {
    coded.iter().zip(llrs).map(|(&c, &l)| if c == 0 { l } else { -l }).sum::<T>() * T::lit(0.5)
}

/// Maximum-likelihood information sequence of the terminated code.
pub fn viterbi_decode<T: Real>(code: &ConvCode, llrs: &[T]) -> Result<Vec<u8>> {
    let steps = steps_for(code, llrs)?;
    let n = code.n();
    let ns_count = code.states();
    let info_len = steps - code.memory();
    let mut metric = vec![T::neg_infinity(); ns_count];
    metric[0] = T::zero();
    let mut next = vec![T::neg_infinity(); ns_count];
    // survivor predecessor choice (0 or 1) per step and state
    let mut choice = vec![0u8; steps * ns_count];
    for t in 0..steps {
        let llr = &llrs[t * n..(t + 1) * n];
        let tail = t >= info_len;
        for ns in 0..ns_count {
            let preds = code.predecessors(ns);
            let u = preds[0].1;
            if tail && u == 1 {
                next[ns] = T::neg_infinity();
                continue;
            }
            let mut best = T::neg_infinity();
            let mut pick = 0u8;
            for (i, &(s, u)) in preds.iter().enumerate() {
                if metric[s] == T::neg_infinity() {
                    continue;
                }
                let m = metric[s] + branch_metric(code.branch_output(s, u), llr);
                if m > best || (best == T::neg_infinity() && i == 0) {
                    best = m;
                    pick = i as u8;
                }
            }
            next[ns] = best;
            choice[t * ns_count + ns] = pick;
        }
        std::mem::swap(&mut metric, &mut next);
    }
    let mut info = vec![0u8; info_len];
    let mut s = 0;
    for t in (0..steps).rev() {
        let (ps, u) = code.predecessors(s)[choice[t * ns_count + s] as usize];
        if t < info_len {
            info[t] = u as u8;
        }
        s = ps;
    }
    Ok(info)
}

#[derive(Clone, Copy)]
struct Entry<T> {
    metric: T,
    pred: u8,
    rank: u16,
}

/// The `list_size` best terminated paths in nonincreasing metric order.
pub fn list_viterbi_decode<T: Real>(code: &ConvCode, llrs: &[T], list_size: usize) -> Result<Vec<ListCandidate<T>>> {
    ensure!(list_size >= 1, "list size must be positive");
    ensure!(list_size <= u16::MAX as usize, "list size too large");
    let steps = steps_for(code, llrs)?;
    let n = code.n();
    let ns_count = code.states();
    let info_len = steps - code.memory();
    let mut history: Vec<Vec<Vec<Entry<T>>>> = Vec::with_capacity(steps);
    let mut current: Vec<Vec<T>> = vec![Vec::new(); ns_count];
    current[0].push(T::zero());
    for t in 0..steps {
        let llr = &llrs[t * n..(t + 1) * n];
        let tail = t >= info_len;
        let mut layer: Vec<Vec<Entry<T>>> = Vec::with_capacity(ns_count);
        for ns in 0..ns_count {
            let preds = code.predecessors(ns);
            if tail && preds[0].1 == 1 {
                layer.push(Vec::new());
                continue;
            }
            let bm0 = branch_metric(code.branch_output(preds[0].0, preds[0].1), llr);
            let bm1 = branch_metric(code.branch_output(preds[1].0, preds[1].1), llr);
            let a = &current[preds[0].0];
            let b = &current[preds[1].0];
            let (mut i, mut j) = (0, 0);
            let mut merged = Vec::with_capacity(list_size);
            while merged.len() < list_size && (i < a.len() || j < b.len()) {
                let ma = a.get(i).map(|&m| m + bm0);
                let mb = b.get(j).map(|&m| m + bm1);
                let take_a = match (ma, mb) {
                    (Some(x), Some(y)) => x >= y,
                    (Some(_), None) => true,
                    _ => false,
                };
                if take_a {
                    merged.push(Entry { metric: ma.unwrap_or(T::zero()), pred: 0, rank: i as u16 });
                    i += 1;
                } else {
                    merged.push(Entry { metric: mb.unwrap_or(T::zero()), pred: 1, rank: j as u16 });
                    j += 1;
                }
            }
            layer.push(merged);
        }
        current = layer.iter().map(|l| l.iter().map(|e| e.metric).collect()).collect();
        history.push(layer);
    }
    let finals = &history[steps - 1][0];
    let mut out = Vec::with_capacity(finals.len());
    for (r, last) in finals.iter().enumerate() {
        let mut info = vec![0u8; info_len];
        let (mut s, mut rank) = (0usize, r);
        for t in (0..steps).rev() {
            let e = history[t][s][rank];
            let (ps, u) = code.predecessors(s)[e.pred as usize];
            if t < info_len {
                info[t] = u as u8;
            }
            s = ps;
            rank = e.rank as usize;
        }
        out.push(ListCandidate { info, metric: last.metric });
    }
    Ok(out)
}
