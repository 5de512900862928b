//! Exact counters over `n ∈ [1, N]`.
//!
//! | mode                    | counts                                                     |
//! |-------------------------|------------------------------------------------------------|
//! | `Simultaneous`          | `n` with `max_i ‖nα_i − γ_i‖ < ψ(n)`                       |
//! | `Multiplicative`        | `n` with `∏_i ‖nα_i − γ_i‖ < ψ(n)`                         |
//! | `MultiplicativeUniform` | `n` with `∏_i ‖nα_i − γ_i‖ < ψ(N)`                         |
//! | `CoprimePairs`          | pairs `(a, n)`, `gcd(a, n) = 1`, `|nα − a| ≤ ψ(n)`         |
//! | `RelaxedPairs`          | pairs `(n, a)`, `∏_{i<k} ‖nα_i − γ_i‖ · |nα_k − γ_k − a| < ψ(n)` |
//!
//! Pair counts use `≤`, the others `<`; a zero distance satisfies any strict
//! bound with `ψ(n) > 0`. Every comparison is exact for the fixed-point
//! representatives (see [`product_below`]).
//!
//! `[1, N]` is cut into blocks of [`BLOCK`] integers that are scanned in
//! parallel, each starting from `frac_mul(start, α)`, and the integer tallies
//! are merged in block order.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, parse_err, Error, Result};
use crate::fixedpoint::{product_below, Frac64, SCALE};
use crate::psi::ApproxFunction;

pub const BLOCK: u64 = 1 << 16;
pub const DEFAULT_WITNESS_CAP: usize = 100_000;

const PSI_CHUNK: usize = 4096;
const TWO_POW_128: f64 = SCALE * SCALE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    Simultaneous,
    Multiplicative,
    MultiplicativeUniform,
    CoprimePairs,
    RelaxedPairs,
}

impl CountMode {
    pub const ALL: [CountMode; 5] = [
        CountMode::Simultaneous,
        CountMode::Multiplicative,
        CountMode::MultiplicativeUniform,
        CountMode::CoprimePairs,
        CountMode::RelaxedPairs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CountMode::Simultaneous => "simultaneous",
            CountMode::Multiplicative => "multiplicative",
            CountMode::MultiplicativeUniform => "multiplicative_uniform",
            CountMode::CoprimePairs => "coprime_pairs",
            CountMode::RelaxedPairs => "relaxed_pairs",
        }
    }
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        CountMode::ALL
            .into_iter()
            .find(|m| m.name() == t)
            .or(match t.as_str() {
                "uniform" => Some(CountMode::MultiplicativeUniform),
                "coprime" | "abh" => Some(CountMode::CoprimePairs),
                "relaxed" => Some(CountMode::RelaxedPairs),
                _ => None,
            })
            .ok_or_else(|| parse_err("count mode", s, "unknown mode"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountQuery {
    pub alpha: Vec<Frac64>,
    pub gamma: Vec<Frac64>,
    pub n: u64,
    pub psi: ApproxFunction,
    pub mode: CountMode,
}

impl CountQuery {
    /// Query with `γ = 0`.
    pub fn new(alpha: Vec<Frac64>, n: u64, psi: ApproxFunction, mode: CountMode) -> Self {
        let gamma = vec![Frac64::ZERO; alpha.len()];
        CountQuery {
            alpha,
            gamma,
            n,
            psi,
            mode,
        }
    }

    pub fn with_gamma(mut self, gamma: Vec<Frac64>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(invalid("alpha must have at least one coordinate"));
        }
        if self.gamma.len() != k {
            return Err(invalid(format!(
                "gamma has {} coordinates, alpha has {k}",
                self.gamma.len()
            )));
        }
        if self.n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        match self.mode {
            CountMode::Multiplicative
            | CountMode::MultiplicativeUniform
            | CountMode::RelaxedPairs
                if k < 2 =>
            {
                return Err(invalid(format!("{} counting needs k >= 2", self.mode)));
            }
            CountMode::CoprimePairs if k != 1 => {
                return Err(invalid("coprime pair counting needs k = 1"))
            }
            CountMode::CoprimePairs if self.gamma[0] != Frac64::ZERO => {
                return Err(invalid("coprime pair counting is homogeneous (gamma = 0)"));
            }
            _ => {}
        }
        self.psi.ensure_domain(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    N(u64),
    Pair { n: u64, a: i128 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountResult {
    pub mode: CountMode,
    pub k: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub count: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    /// The witness list stopped at the cap; `count` is still exact.
    pub truncated: bool,
    /// Relaxed pairs only: some `ψ(n)/P(n)` exceeded the radius cap.
    pub cap_exceeded: bool,
    /// Relaxed pairs only: some `P(n)` was exactly 0.
    pub zero_product: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountOptions {
    /// Longest witness list kept; 0 disables collection.
    pub witness_cap: usize,
    /// Largest `ψ(n)/P(n)` honoured in relaxed pair counting; `None` means `2N`.
    pub radius_cap: Option<f64>,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            witness_cap: DEFAULT_WITNESS_CAP,
            radius_cap: None,
        }
    }
}

impl CountOptions {
    pub fn counts_only() -> Self {
        CountOptions {
            witness_cap: 0,
            radius_cap: None,
        }
    }
}

pub fn count(q: &CountQuery, opts: &CountOptions) -> Result<CountResult> {
    q.validate()?;
    let uniform = match q.mode {
        CountMode::MultiplicativeUniform => Some(q.psi.value(q.n)),
        _ => None,
    };
    let tally = scan(q, uniform, opts, &[(1, q.n)])
        .pop()
        .expect("one range");
    Ok(tally.into_result(q, q.n))
}

fn count_in_mode(q: &CountQuery, mode: CountMode) -> Result<CountResult> {
    if q.mode != mode {
        return Err(Error::WrongMode {
            mode: q.mode.name(),
        });
    }
    count(q, &CountOptions::default())
}

pub fn count_simultaneous(q: &CountQuery) -> Result<CountResult> {
    count_in_mode(q, CountMode::Simultaneous)
}

pub fn count_multiplicative(q: &CountQuery) -> Result<CountResult> {
    count_in_mode(q, CountMode::Multiplicative)
}

pub fn count_multiplicative_uniform(q: &CountQuery) -> Result<CountResult> {
    count_in_mode(q, CountMode::MultiplicativeUniform)
}

pub fn count_coprime_pairs(q: &CountQuery) -> Result<CountResult> {
    count_in_mode(q, CountMode::CoprimePairs)
}

pub fn count_relaxed_pairs(q: &CountQuery) -> Result<CountResult> {
    count_in_mode(q, CountMode::RelaxedPairs)
}

/// Counts for every prefix `[1, c]`, `c ∈ checkpoints`, in one pass.
///
/// In uniform mode the threshold `ψ(c)` differs per checkpoint, so each prefix
/// is scanned separately. The relaxed radius cap is `2·max(checkpoints)` unless
/// set. Witnesses are not collected.
pub fn count_prefixes(
    q: &CountQuery,
    checkpoints: &[u64],
    opts: &CountOptions,
) -> Result<Vec<CountResult>> {
    let mut points = checkpoints.to_vec();
    points.sort_unstable();
    points.dedup();
    let Some(&max_n) = points.last() else {
        return Err(invalid("no checkpoints"));
    };
    let mut probe = q.clone();
    probe.n = max_n;
    probe.validate()?;
    if points[0] == 0 {
        return Err(invalid("checkpoints must be positive"));
    }
    let opts = CountOptions {
        witness_cap: 0,
        radius_cap: Some(opts.radius_cap.unwrap_or(2.0 * max_n as f64)),
    };

    if q.mode == CountMode::MultiplicativeUniform {
        return points
            .iter()
            .map(|&c| {
                let tally = scan(q, Some(q.psi.value(c)), &opts, &[(1, c)])
                    .pop()
                    .expect("one range");
                Ok(tally.into_result(q, c))
            })
            .collect();
    }

    let mut ranges = Vec::with_capacity(points.len());
    let mut lo = 1;
    for &c in &points {
        ranges.push((lo, c));
        lo = c + 1;
    }
    let tallies = scan(q, None, &opts, &ranges);
    let mut acc = Tally::default();
    let mut out = Vec::with_capacity(points.len());
    for (t, &c) in tallies.into_iter().zip(&points) {
        acc.absorb(t, 0);
        out.push(acc.clone().into_result(q, c));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
struct Tally {
    count: u64,
    witnesses: Vec<Witness>,
    truncated: bool,
    cap_exceeded: bool,
    zero_product: bool,
}

impl Tally {
    fn absorb(&mut self, other: Tally, cap: usize) {
        self.count += other.count;
        self.truncated |= other.truncated;
        self.cap_exceeded |= other.cap_exceeded;
        self.zero_product |= other.zero_product;
        let room = cap.saturating_sub(self.witnesses.len());
        if other.witnesses.len() > room {
            self.truncated = true;
        }
        self.witnesses
            .extend(other.witnesses.into_iter().take(room));
    }

    fn push(&mut self, w: Witness, cap: usize) {
        if self.witnesses.len() < cap {
            self.witnesses.push(w);
        } else if cap > 0 {
            self.truncated = true;
        }
    }

    fn into_result(self, q: &CountQuery, n: u64) -> CountResult {
        CountResult {
            mode: q.mode,
            k: q.k(),
            n,
            count: self.count,
            witnesses: self.witnesses,
            truncated: self.truncated,
            cap_exceeded: self.cap_exceeded,
            zero_product: self.zero_product,
        }
    }
}

/// Scans each inclusive range, splitting it into blocks, and returns one
/// merged tally per range.
fn scan(
    q: &CountQuery,
    uniform: Option<f64>,
    opts: &CountOptions,
    ranges: &[(u64, u64)],
) -> Vec<Tally> {
    let mut blocks = Vec::new();
    for (r, &(lo, hi)) in ranges.iter().enumerate() {
        let mut s = lo;
        while s <= hi {
            let e = hi.min(s.saturating_add(BLOCK - 1));
            blocks.push((r, s, e));
            if e == u64::MAX {
                break;
            }
            s = e + 1;
        }
    }
    let radius_cap = opts.radius_cap.unwrap_or(2.0 * q.n as f64);
    let cap = opts.witness_cap;
    let tallies: Vec<(usize, Tally)> = blocks
        .par_iter()
        .map(|&(r, s, e)| (r, scan_block(q, uniform, cap, radius_cap, s, e)))
        .collect();
    let mut out = vec![Tally::default(); ranges.len()];
    for (r, t) in tallies {
        out[r].absorb(t, cap);
    }
    out
}

fn scan_block(
    q: &CountQuery,
    uniform: Option<f64>,
    cap: usize,
    radius_cap: f64,
    start: u64,
    end: u64,
) -> Tally {
    let k = q.k();
    let alpha: Vec<u64> = q.alpha.iter().map(|a| a.raw()).collect();
    let gamma: Vec<u64> = q.gamma.iter().map(|g| g.raw()).collect();
    let mut x: Vec<u64> = alpha.iter().map(|a| a.wrapping_mul(start)).collect();
    let mut d = vec![0u64; k];
    let mut psi_buf = [0.0f64; PSI_CHUNK];
    let mut tally = Tally::default();

    let mut n = start;
    loop {
        let len = ((end - n) as usize + 1).min(PSI_CHUNK);
        match uniform {
            Some(u) => psi_buf[..len].fill(u),
            None => q.psi.fill(n, &mut psi_buf[..len]),
        }
        for &psi in &psi_buf[..len] {
            for i in 0..k {
                let t = x[i].wrapping_sub(gamma[i]);
                d[i] = t.min(t.wrapping_neg());
            }
            match q.mode {
                CountMode::Simultaneous => {
                    // max d < ψ·2^64 ⇔ max d < ⌈ψ·2^64⌉ (ψ·2^64 is exact).
                    let t = (psi * SCALE).ceil() as u64;
                    if d.iter().all(|&di| di < t) {
                        tally.count += 1;
                        tally.push(Witness::N(n), cap);
                    }
                }
                CountMode::Multiplicative | CountMode::MultiplicativeUniform => {
                    if multiplicative_hit(&d, psi) {
                        tally.count += 1;
                        tally.push(Witness::N(n), cap);
                    }
                }
                CountMode::CoprimePairs => coprime_step(n, alpha[0], psi, cap, &mut tally),
                CountMode::RelaxedPairs => {
                    relaxed_step(n, &alpha, &gamma, &d, psi, radius_cap, cap, &mut tally)
                }
            }
            for i in 0..k {
                x[i] = x[i].wrapping_add(alpha[i]);
            }
            n += 1;
        }
        if n > end || n == 0 {
            break;
        }
    }
    tally
}

#[inline]
fn multiplicative_hit(d: &[u64], psi: f64) -> bool {
    if d.len() == 2 {
        // d1·d2 < ψ·2^128 ⇔ d1·d2 < ⌈ψ·2^128⌉; ψ·2^128 ≤ 2^127 is exact.
        let t = (psi * TWO_POW_128).ceil() as u128;
        (d[0] as u128 * d[1] as u128) < t
    } else {
        product_below(d, psi)
    }
}

/// Integers `a` with `|nα − a| ≤ ψ`: only `⌊nα⌋` and `⌊nα⌋ + 1` can qualify.
#[inline]
fn coprime_step(n: u64, alpha: u64, psi: f64, cap: usize, tally: &mut Tally) {
    let x = n as u128 * alpha as u128;
    let q = (x >> 64) as u64;
    let r = x as u64;
    let t = (psi * SCALE).floor() as u64;
    if r <= t && q.gcd(&n) == 1 {
        tally.count += 1;
        tally.push(Witness::Pair { n, a: q as i128 }, cap);
    }
    if r != 0 && r.wrapping_neg() <= t && (q + 1).gcd(&n) == 1 {
        tally.count += 1;
        tally.push(
            Witness::Pair {
                n,
                a: q as i128 + 1,
            },
            cap,
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn relaxed_step(
    n: u64,
    alpha: &[u64],
    gamma: &[u64],
    d: &[u64],
    psi: f64,
    radius_cap: f64,
    cap: usize,
    tally: &mut Tally,
) {
    if psi == 0.0 {
        return;
    }
    let k = d.len();
    let head = &d[..k - 1];
    let dk = d[k - 1];

    // nα_k − γ_k as a signed multiple of 2^-64, its nearest integer a0 and the
    // side s of a0 on which it lies.
    let y = n as i128 * alpha[k - 1] as i128 - gamma[k - 1] as i128;
    let a0 = (y + (1i128 << 63)).div_euclid(1i128 << 64);
    let s: i128 = if y >= a0 << 64 { 1 } else { -1 };

    if !multiplicative_hit(d, psi) {
        return;
    }
    tally.count += 1;
    tally.push(Witness::Pair { n, a: a0 }, cap);

    let mut factors: Vec<u128> = head.iter().map(|&v| v as u128).collect();
    factors.push(0);
    let p_zero = head.contains(&0);
    let p = head.iter().fold(1.0f64, |acc, &v| acc * (v as f64 / SCALE));
    let dkf = dk as f64 / SCALE;
    let mut radius = if p_zero { f64::INFINITY } else { psi / p };
    let capped = radius > radius_cap;
    if p_zero {
        tally.zero_product = true;
    }
    if capped {
        tally.cap_exceeded = true;
        radius = radius_cap;
    }

    // Far side: a0 + s·j at distance j − dk. Near side: a0 − s·j at j + dk.
    let (far, near) = if capped {
        (
            (radius + dkf).ceil() as u64 - 1,
            ((radius - dkf).ceil() as u64).saturating_sub(1),
        )
    } else {
        let mut ok = |j: u64, sign: i128| -> bool {
            let dist = ((j as u128) << 64) as i128 + sign * dk as i128;
            *factors.last_mut().expect("k >= 2") = dist as u128;
            product_below(&factors, psi)
        };
        let far = refine((radius + dkf).ceil() as u64 - 1, |j| ok(j, -1));
        let near = refine(((radius - dkf).ceil().max(1.0) as u64) - 1, |j| ok(j, 1));
        (far, near)
    };
    tally.count += far + near;
    if cap > 0 {
        let room = cap.saturating_sub(tally.witnesses.len()) as u64;
        if far + near > room {
            tally.truncated = true;
        }
        let far_kept = far.min(room);
        let near_kept = near.min(room - far_kept);
        for j in 1..=far_kept {
            tally.witnesses.push(Witness::Pair {
                n,
                a: a0 + s * j as i128,
            });
        }
        for j in 1..=near_kept {
            tally.witnesses.push(Witness::Pair {
                n,
                a: a0 - s * j as i128,
            });
        }
    }
}

/// Largest `j ≥ 0` with `ok(1..=j)` all true, starting from a floating-point
/// guess; `ok` must be monotone (true then false).
fn refine(guess: u64, mut ok: impl FnMut(u64) -> bool) -> u64 {
    let mut j = guess;
    while j >= 1 && !ok(j) {
        j -= 1;
    }
    while ok(j + 1) {
        j += 1;
    }
    j
}
