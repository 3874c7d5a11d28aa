//! Kendall rank correlation between two model rankings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Model id to score; higher is better.
pub type Ranking = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub tau: f64,
    pub p_value: f64,
    pub n_common: usize,
    /// Models present in only one of the two rankings.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("rankings share {n_common} models; at least 2 are needed")]
    TooFewCommonModels { n_common: usize },
    #[error("one ranking gives every common model the same score")]
    ConstantRanking,
}

/// Pair counts behind tau-b, all in exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Counts {
    n: u64,
    /// Concordant minus discordant pairs.
    s: i64,
    /// Pairs tied in x, in y.
    ties_x: u64,
    ties_y: u64,
}

fn pairs(t: u64) -> u64 {
    t * t.saturating_sub(1) / 2
}

/// Lengths of runs of equal values in a sorted slice.
fn run_lengths<T: PartialEq>(sorted: &[T]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push((j - i) as u64);
        i = j;
    }
    out
}

/// Sorts `v` and returns the number of inversions removed.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Knight's O(n log n) pair counting.
fn counts(x: &[f64], y: &[f64]) -> (Counts, Vec<u64>, Vec<u64>) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as u64;
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let runs_x = run_lengths(&xs);
    let joint: u64 = run_lengths(&pts).into_iter().map(pairs).sum();

    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut buf);
    let runs_y = run_lengths(&ys);

    let n0 = pairs(n);
    let ties_x: u64 = runs_x.iter().copied().map(pairs).sum();
    let ties_y: u64 = runs_y.iter().copied().map(pairs).sum();
    let s = n0 as i64 - ties_x as i64 - ties_y as i64 + joint as i64 - 2 * swaps as i64;
    (Counts { n, s, ties_x, ties_y }, runs_x, runs_y)
}

/// Kendall's tau-b of paired samples; `None` when either side is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let (c, _, _) = counts(x, y);
    tau_from(&c)
}

fn tau_from(c: &Counts) -> Option<f64> {
    let n0 = pairs(c.n);
    let dx = n0 - c.ties_x;
    let dy = n0 - c.ties_y;
    if dx == 0 || dy == 0 {
        return None;
    }
    let tau = c.s as f64 / ((dx as f64) * (dy as f64)).sqrt();
    Some(tau.clamp(-1.0, 1.0))
}

/// Two-sided p-value of S under the normal approximation with the
/// tie-corrected variance.
fn p_value(c: &Counts, runs_x: &[u64], runs_y: &[u64]) -> f64 {
    let n = c.n as f64;
    let sum = |runs: &[u64], f: &dyn Fn(f64) -> f64| runs.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = n * (n - 1.0) * (2.0 * n + 5.0);
    let vt = sum(runs_x, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(runs_y, &|u| u * (u - 1.0) * (2.0 * u + 5.0));
    let v1 = sum(runs_x, &|t| t * (t - 1.0)) * sum(runs_y, &|u| u * (u - 1.0)) / (2.0 * n * (n - 1.0));
    let v2 = if c.n > 2 {
        sum(runs_x, &|t| t * (t - 1.0) * (t - 2.0)) * sum(runs_y, &|u| u * (u - 1.0) * (u - 2.0))
            / (9.0 * n * (n - 1.0) * (n - 2.0))
    } else {
        0.0
    };
    let var = (v0 - vt - vu) / 18.0 + v1 + v2;
    if var <= 0.0 {
        return 1.0;
    }
    let z = c.s as f64 / var.sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Ids present in both rankings with their paired scores, plus the count of
/// ids present in only one.
pub fn common_models(a: &Ranking, b: &Ranking) -> (Vec<(String, f64, f64)>, usize) {
    let common: Vec<(String, f64, f64)> = a
        .iter()
        .filter_map(|(m, &sa)| b.get(m).map(|&sb| (m.clone(), sa, sb)))
        .collect();
    let dropped = a.len() + b.len() - 2 * common.len();
    (common, dropped)
}

/// Tau-b between two rankings over the models they share.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<CorrelationResult, CorrelationError> {
    let (common, dropped) = common_models(a, b);
    if dropped > 0 {
        log::warn!("{dropped} models appear in only one ranking and were dropped");
    }
    if common.len() < 2 {
        return Err(CorrelationError::TooFewCommonModels {
            n_common: common.len(),
        });
    }
    let x: Vec<f64> = common.iter().map(|c| c.1).collect();
    let y: Vec<f64> = common.iter().map(|c| c.2).collect();
    let (c, runs_x, runs_y) = counts(&x, &y);
    let tau = tau_from(&c).ok_or(CorrelationError::ConstantRanking)?;
    Ok(CorrelationResult {
        tau,
        p_value: p_value(&c, &runs_x, &runs_y),
        n_common: common.len(),
        dropped,
    })
}
