//! Inhomogeneous Bohr sets and the restricted sums built on them.
//!
//! ```text
//! B_α^γ(N; δ) = { n ∈ ℤ : |n| ≤ N, ‖nα_i − γ_i‖ ≤ δ_i for all i }
//! G           = { n ≥ 1 : ‖nα_i − γ_i‖ ≥ n^(-√ε) for all i }
//! U_N         = Σ_{n ≤ N, n ∈ G} φ(n) ψ(n) / (n ∏_i ‖nα_i − γ_i‖)
//! ```
//!
//! Here `α, γ` have `k − 1` coordinates. Bohr membership is non-strict and
//! decided on the raw fixed-point values.
//!
//! Since every distance is at most 1/2, `n ∈ G` forces `n^(-√ε) ≤ 1/2`, that
//! is `n ≥ 2^(1/√ε)`. For the `ε` returned by [`epsilon_select`] this is at
//! least `2^20`, so `G ∩ [1, N]` is empty at moderate `N`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fixedpoint::{Frac64, SCALE};
use crate::predictors::PhiTable;
use crate::psi::ApproxFunction;
use crate::summation::CompensatedSum;

const BLOCK: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BohrSetSpec {
    #[serde(rename = "N")]
    pub n: u64,
    pub alpha: Vec<Frac64>,
    pub gamma: Vec<Frac64>,
    pub delta: Vec<f64>,
}

impl BohrSetSpec {
    pub fn new(n: u64, alpha: Vec<Frac64>, gamma: Vec<Frac64>, delta: Vec<f64>) -> Result<Self> {
        let spec = BohrSetSpec {
            n,
            alpha,
            gamma,
            delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() {
            return Err(invalid("a Bohr set needs at least one frequency"));
        }
        if self.gamma.len() != self.alpha.len() || self.delta.len() != self.alpha.len() {
            return Err(invalid("alpha, gamma and delta must have the same length"));
        }
        if self.n > i64::MAX as u64 {
            return Err(invalid("N too large"));
        }
        for &d in &self.delta {
            if !d.is_finite() {
                return Err(Error::NonFinite(d));
            }
            if !(d > 0.0 && d <= 0.5) {
                return Err(invalid(format!("delta must lie in (0, 1/2], got {d}")));
            }
        }
        Ok(())
    }

    /// `‖x‖ ≤ δ` ⇔ `raw ≤ ⌊δ·2^64⌋`.
    fn thresholds(&self) -> Vec<u64> {
        self.delta
            .iter()
            .map(|d| (d * SCALE).floor() as u64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonChoice {
    pub epsilon: f64,
    pub w: f64,
    pub kappa: f64,
    pub k: usize,
    /// `min{1/w − (k−2)/(k−1), κ}` after halving.
    pub m: f64,
    pub halved: bool,
}

impl EpsilonChoice {
    pub fn sqrt_epsilon(&self) -> f64 {
        self.epsilon.sqrt()
    }
}

/// Largest admissible `ε`: `10k√ε = m` with `m = min{1/w − (k−2)/(k−1), κ}`,
/// where `m` is halved first if it is not below 1.
pub fn epsilon_select(k: usize, w: f64, kappa: f64) -> Result<EpsilonChoice> {
    if k < 2 {
        return Err(invalid("epsilon selection needs k >= 2"));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(invalid(format!("exponent w must be positive, got {w}")));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    let kf = k as f64;
    if k > 2 && w >= (kf - 1.0) / (kf - 2.0) {
        return Err(Error::FibreHypothesis { k, w });
    }
    let mut m = (1.0 / w - (kf - 2.0) / (kf - 1.0)).min(kappa);
    if m <= 0.0 {
        return Err(Error::FibreHypothesis { k, w });
    }
    let halved = m >= 1.0;
    if halved {
        m /= 2.0;
    }
    Ok(EpsilonChoice {
        epsilon: (m / (10.0 * kf)).powi(2),
        w,
        kappa,
        k,
        m,
        halved,
    })
}

/// `[N^(-√ε), 1/2]`, the range of admissible `δ_i`.
pub fn delta_range(n: u64, epsilon: f64) -> (f64, f64) {
    ((n as f64).powf(-epsilon.sqrt()), 0.5)
}

#[inline]
fn member(x: &[u64], gamma: &[u64], t: &[u64]) -> bool {
    x.iter().zip(gamma).zip(t).all(|((&xi, &gi), &ti)| {
        let d = xi.wrapping_sub(gi);
        d.min(d.wrapping_neg()) <= ti
    })
}

/// Members with `lo ≤ n ≤ hi` among positive or negative `n` (`sign = ±1`).
fn scan_members(
    spec: &BohrSetSpec,
    t: &[u64],
    sign: i64,
    lo: u64,
    hi: u64,
    out: Option<&mut Vec<i64>>,
) -> u64 {
    let gamma: Vec<u64> = spec.gamma.iter().map(|g| g.raw()).collect();
    let step: Vec<u64> = spec
        .alpha
        .iter()
        .map(|a| {
            if sign > 0 {
                a.raw()
            } else {
                a.raw().wrapping_neg()
            }
        })
        .collect();
    let mut x: Vec<u64> = step.iter().map(|s| s.wrapping_mul(lo)).collect();
    let mut count = 0;
    let mut out = out;
    for n in lo..=hi {
        if member(&x, &gamma, t) {
            count += 1;
            if let Some(v) = out.as_deref_mut() {
                v.push(sign * n as i64);
            }
        }
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi = xi.wrapping_add(*si);
        }
    }
    count
}

/// All members of `B_α^γ(N; δ)`, in increasing order.
pub fn enumerate_bohr(spec: &BohrSetSpec) -> Result<Vec<i64>> {
    spec.validate()?;
    let t = spec.thresholds();
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    if spec.n > 0 {
        scan_members(spec, &t, -1, 1, spec.n, Some(&mut neg));
        scan_members(spec, &t, 1, 1, spec.n, Some(&mut pos));
    }
    neg.reverse();
    let zero = member(
        &vec![0; t.len()],
        &spec.gamma.iter().map(|g| g.raw()).collect::<Vec<_>>(),
        &t,
    );
    if zero {
        neg.push(0);
    }
    neg.extend(pos);
    Ok(neg)
}

fn parallel_count(spec: &BohrSetSpec, t: &[u64], sign: i64, lo: u64, hi: u64) -> u64 {
    if lo > hi {
        return 0;
    }
    let blocks: Vec<(u64, u64)> = (0..=(hi - lo) / BLOCK)
        .map(|b| {
            let s = lo + b * BLOCK;
            (s, hi.min(s + BLOCK - 1))
        })
        .collect();
    blocks
        .par_iter()
        .map(|&(s, e)| scan_members(spec, t, sign, s, e, None))
        .sum()
}

/// `#B_α^γ(N; δ)`.
pub fn count_bohr(spec: &BohrSetSpec) -> Result<u64> {
    spec.validate()?;
    let t = spec.thresholds();
    let gamma: Vec<u64> = spec.gamma.iter().map(|g| g.raw()).collect();
    let zero = member(&vec![0; t.len()], &gamma, &t) as u64;
    Ok(zero + parallel_count(spec, &t, 1, 1, spec.n) + parallel_count(spec, &t, -1, 1, spec.n))
}

/// `#B̂ = #(B ∩ [N^√ε, N])`.
pub fn count_bohr_hat(spec: &BohrSetSpec, epsilon: f64) -> Result<u64> {
    spec.validate()?;
    let lo = ((spec.n as f64).powf(epsilon.sqrt()).ceil() as u64).max(1);
    Ok(parallel_count(spec, &spec.thresholds(), 1, lo, spec.n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BohrDensity {
    pub count: u64,
    /// `count / (δ_1⋯δ_{k−1} N)`
    pub normalized_ratio: f64,
    /// `(2N + 1) ∏ min(2δ_i, 1)`
    pub expected: f64,
}

pub fn bohr_density_report(spec: &BohrSetSpec) -> Result<BohrDensity> {
    let count = count_bohr(spec)?;
    let vol: f64 = spec.delta.iter().product();
    let expected = (2 * spec.n + 1) as f64
        * spec
            .delta
            .iter()
            .map(|d| (2.0 * d).min(1.0))
            .product::<f64>();
    Ok(BohrDensity {
        count,
        normalized_ratio: count as f64 / (vol * spec.n as f64),
        expected,
    })
}

/// Raw distance bound for `n ∈ G`: `‖x‖ ≥ n^(-√ε)` ⇔ `raw ≥ ⌈n^(-√ε)·2^64⌉`.
/// `None` when the bound exceeds 1/2 and nothing qualifies.
#[inline]
fn g_threshold(n: u64, sqrt_eps: f64) -> Option<u64> {
    let thr = (n as f64).powf(-sqrt_eps);
    if thr > 0.5 {
        None
    } else {
        Some((thr * SCALE).ceil() as u64)
    }
}

/// Membership in `G`.
pub fn in_g(n: u64, alpha: &[Frac64], gamma: &[Frac64], epsilon: f64) -> bool {
    if n == 0 {
        return false;
    }
    let Some(t) = g_threshold(n, epsilon.sqrt()) else {
        return false;
    };
    alpha
        .iter()
        .zip(gamma)
        .all(|(a, g)| a.frac_mul(n).dist_raw(*g) >= t)
}

/// Smallest `n` that can belong to `G` at all: `n^(-√ε) ≤ 1/2`.
pub fn g_threshold_start(epsilon: f64) -> f64 {
    2f64.powf(1.0 / epsilon.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedSet {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub members: Vec<u64>,
}

impl RestrictedSet {
    pub fn contains(&self, n: u64) -> bool {
        self.members.binary_search(&n).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `|G ∩ [1, N]| / N`
    pub fn density(&self) -> f64 {
        self.members.len() as f64 / self.n as f64
    }
}

fn check_fibre(alpha: &[Frac64], gamma: &[Frac64], epsilon: f64) -> Result<()> {
    if alpha.is_empty() || alpha.len() != gamma.len() {
        return Err(invalid(
            "alpha and gamma must be non-empty and of equal length",
        ));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `G ∩ [1, N]`.
pub fn restricted_set_g(
    alpha: &[Frac64],
    gamma: &[Frac64],
    epsilon: f64,
    n: u64,
) -> Result<RestrictedSet> {
    check_fibre(alpha, gamma, epsilon)?;
    let start = g_threshold_start(epsilon);
    let members = if start > n as f64 {
        Vec::new()
    } else {
        let lo = start.ceil() as u64;
        let blocks: Vec<(u64, u64)> = (0..=(n - lo) / BLOCK)
            .map(|b| (lo + b * BLOCK, n.min(lo + b * BLOCK + BLOCK - 1)))
            .collect();
        blocks
            .par_iter()
            .map(|&(s, e)| {
                (s..=e)
                    .filter(|&m| in_g(m, alpha, gamma, epsilon))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat()
    };
    Ok(RestrictedSet {
        epsilon,
        n,
        members,
    })
}

/// `U_N` at each checkpoint.
pub fn u_n_prefixes(
    alpha: &[Frac64],
    gamma: &[Frac64],
    psi: &ApproxFunction,
    epsilon: f64,
    checkpoints: &[u64],
    phi: &PhiTable,
) -> Result<Vec<(u64, f64)>> {
    check_fibre(alpha, gamma, epsilon)?;
    let mut points = checkpoints.to_vec();
    points.sort_unstable();
    points.dedup();
    let Some(&max_n) = points.last() else {
        return Err(invalid("no checkpoints"));
    };
    if points[0] == 0 {
        return Err(invalid("checkpoints must be positive"));
    }
    psi.ensure_domain(max_n)?;
    if !phi.covers(max_n) {
        return Err(invalid(format!("totient table must cover N = {max_n}")));
    }
    let sqrt_eps = epsilon.sqrt();
    // Blocks never straddle a checkpoint, so prefix values are exact merges.
    let mut blocks = Vec::new();
    let mut lo = 1;
    for (ci, &c) in points.iter().enumerate() {
        let mut s = lo;
        while s <= c {
            let e = c.min(s + BLOCK - 1);
            blocks.push((ci, s, e));
            s = e + 1;
        }
        lo = c + 1;
    }
    let sums: Vec<(usize, CompensatedSum)> = blocks
        .par_iter()
        .map(|&(ci, s, e)| {
            let mut acc = CompensatedSum::new();
            for n in s..=e {
                let Some(t) = g_threshold(n, sqrt_eps) else {
                    continue;
                };
                let mut prod = 1.0;
                let mut inside = true;
                for (a, g) in alpha.iter().zip(gamma) {
                    let d = a.frac_mul(n).dist_raw(*g);
                    if d < t {
                        inside = false;
                        break;
                    }
                    prod *= d as f64 / SCALE;
                }
                if inside {
                    acc.add(phi.get(n) as f64 * psi.value(n) / (n as f64 * prod));
                }
            }
            (ci, acc)
        })
        .collect();
    let mut total = CompensatedSum::new();
    let mut out = Vec::with_capacity(points.len());
    let mut next = 0;
    for (ci, s) in sums {
        while next < ci {
            out.push((points[next], total.value()));
            next += 1;
        }
        total.merge(&s);
    }
    while next < points.len() {
        out.push((points[next], total.value()));
        next += 1;
    }
    Ok(out)
}

pub fn u_n_sum(
    alpha: &[Frac64],
    gamma: &[Frac64],
    psi: &ApproxFunction,
    epsilon: f64,
    n: u64,
    phi: &PhiTable,
) -> Result<f64> {
    Ok(u_n_prefixes(alpha, gamma, psi, epsilon, &[n], phi)?[0].1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicCells {
    /// Admissible exponents `j` per axis: `2^-j ∈ [N^(-√ε), 1/2]`.
    pub exponents: Vec<u32>,
    /// Every `(k−1)`-tuple of exponents.
    pub cells: Vec<Vec<u32>>,
    pub count: usize,
}

/// Dyadic decomposition of `[N^(-√ε), 1/2]^(k−1)`: `⌊√ε log₂ N⌋` scales per
/// axis, `⌊√ε log₂ N⌋^(k−1)` cells.
pub fn dyadic_cells(n: u64, k: usize, epsilon: f64) -> Result<DyadicCells> {
    if n < 4 {
        return Err(invalid("dyadic decomposition needs N >= 4"));
    }
    if k < 2 {
        return Err(invalid("dyadic decomposition needs k >= 2"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let per_axis = (epsilon.sqrt() * (n as f64).log2()).floor() as u32;
    let exponents: Vec<u32> = (1..=per_axis).collect();
    let axes = k - 1;
    let count = (per_axis as usize)
        .checked_pow(axes as u32)
        .ok_or_else(|| invalid("too many cells"))?;
    if count > 10_000_000 {
        return Err(invalid(format!(
            "{count} dyadic cells is more than this tool enumerates"
        )));
    }
    let mut cells: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..axes {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                exponents.iter().map(move |&j| {
                    let mut d = c.clone();
                    d.push(j);
                    d
                })
            })
            .collect();
    }
    if per_axis == 0 {
        cells.clear();
    }
    Ok(DyadicCells {
        exponents,
        cells,
        count,
    })
}
