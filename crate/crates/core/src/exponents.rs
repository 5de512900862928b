//! Finite-range estimates of the multiplicative exponent and records of
//! `n‖nα‖‖nβ‖`.
//!
//! The exponent `ω^×(α)` is the supremum of `w` with `∏‖nα_i‖ < n^-w`
//! infinitely often. Over `n ∈ [n_min, N]` we report
//! `max_n −ln(∏‖nα_i‖) / ln n`, which is only a heuristic lower bound for a
//! tail quantity and is sensitive to the burn-in `n_min`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fixedpoint::{ln_product, Frac64, SCALE};

pub const DEFAULT_N_MIN: u64 = 100;

const BLOCK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrailMetric {
    /// `n ‖nα‖ ‖nβ‖`
    LittlewoodProduct,
    /// `ln(∏‖nα_i‖) / ln n`, the negated exponent ratio, so that new maxima
    /// of the ratio are new minima here.
    ExponentRatio,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordTrail {
    pub metric: TrailMetric,
    /// `(n, value)` with `n` increasing and `value` strictly decreasing.
    pub records: Vec<(u64, f64)>,
}

impl RecordTrail {
    pub fn final_value(&self) -> Option<f64> {
        self.records.last().map(|r| r.1)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[1].1 < w[0].1)
    }

    /// Keeps the records of `later` that beat everything already present.
    fn extend_from(&mut self, later: Vec<(u64, f64)>) {
        for r in later {
            if self.records.last().is_none_or(|last| r.1 < last.1) {
                self.records.push(r);
            }
        }
    }
}

/// Block-local records of `f(n)` for `n ∈ [lo, hi]`, computed in parallel and
/// merged in order.
fn records(lo: u64, hi: u64, f: impl Fn(u64, u64) -> Vec<(u64, f64)> + Sync) -> Vec<(u64, f64)> {
    let blocks: Vec<(u64, u64)> = (0..=(hi - lo) / BLOCK)
        .map(|b| (lo + b * BLOCK, hi.min(lo + b * BLOCK + BLOCK - 1)))
        .collect();
    let parts: Vec<Vec<(u64, f64)>> = blocks.par_iter().map(|&(s, e)| f(s, e)).collect();
    let mut trail = RecordTrail {
        metric: TrailMetric::ExponentRatio,
        records: Vec::new(),
    };
    for p in parts {
        trail.extend_from(p);
    }
    trail.records
}

fn local_records(values: impl Iterator<Item = (u64, f64)>) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, f64)> = Vec::new();
    for (n, v) in values {
        if out.last().is_none_or(|l| v < l.1) {
            out.push((n, v));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    /// `+∞` when some product vanished.
    pub value: f64,
    /// Where the maximum ratio (or the first zero product) occurred.
    pub argmax: u64,
    pub zero_product: bool,
    pub n_min: u64,
    #[serde(rename = "N")]
    pub n_max: u64,
    pub trail: RecordTrail,
}

pub fn estimate_mult_exponent(
    alpha: &[Frac64],
    n_max: u64,
    n_min: u64,
) -> Result<ExponentEstimate> {
    if alpha.is_empty() {
        return Err(invalid("alpha must have at least one coordinate"));
    }
    if n_min < 2 || n_max <= n_min {
        return Err(invalid(format!(
            "need N > n_min >= 2, got N = {n_max}, n_min = {n_min}"
        )));
    }
    let recs = records(n_min, n_max, |s, e| {
        let mut d = vec![0u64; alpha.len()];
        local_records((s..=e).map(|n| {
            for (di, a) in d.iter_mut().zip(alpha) {
                *di = a.frac_mul(n).dist_raw(Frac64::ZERO);
            }
            (n, ln_product(&d) / (n as f64).ln())
        }))
    });
    let (argmax, best) = *recs.last().expect("range is non-empty");
    let zero_product = best == f64::NEG_INFINITY;
    Ok(ExponentEstimate {
        value: -best,
        argmax,
        zero_product,
        n_min,
        n_max,
        trail: RecordTrail {
            metric: TrailMetric::ExponentRatio,
            records: recs,
        },
    })
}

/// Strict records of `n ‖nα‖ ‖nβ‖` over `1 ≤ n ≤ N`. The two distances are
/// multiplied exactly in 128 bits and rounded once.
pub fn littlewood_records(alpha: Frac64, beta: Frac64, n_max: u64) -> Result<RecordTrail> {
    if n_max == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let recs = records(1, n_max, |s, e| {
        local_records((s..=e).map(|n| {
            let p = alpha.frac_mul(n).dist_raw(Frac64::ZERO) as u128
                * beta.frac_mul(n).dist_raw(Frac64::ZERO) as u128;
            (n, p as f64 / (SCALE * SCALE) * n as f64)
        }))
    });
    Ok(RecordTrail {
        metric: TrailMetric::LittlewoodProduct,
        records: recs,
    })
}
