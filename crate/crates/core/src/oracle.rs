//! Slow reference implementations used by tests and `selfcheck`.
//!
//! Nothing here streams or shares code with the fast paths: every orbit point
//! is recomputed as `n·raw mod 2^64` in 128-bit arithmetic and every inequality
//! is decided over the integers, with `ψ(n)` taken as the exact dyadic
//! rational its `f64` encodes.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;

use crate::counting::{CountMode, CountQuery};
use crate::error::Result;
use crate::fixedpoint::Frac64;

/// `x = mant · 2^exp` for a finite non-negative double.
fn dyadic(x: f64) -> (BigUint, i64) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (BigUint::from(frac), -1074)
    } else {
        (BigUint::from(frac | (1u64 << 52)), biased - 1075)
    }
}

/// Compares `lhs · 2^(-64·units)` with `x`.
fn cmp_scaled(lhs: &BigUint, units: usize, x: f64) -> std::cmp::Ordering {
    let (mant, exp) = dyadic(x);
    let s = exp + 64 * units as i64;
    if s >= 0 {
        lhs.cmp(&(mant << s as u64))
    } else {
        (lhs << (-s) as u64).cmp(&mant)
    }
}

fn orbit(n: u64, a: Frac64) -> u64 {
    ((n as u128 * a.raw() as u128) % (1u128 << 64)) as u64
}

/// `‖nα − γ‖` in units of 2^-64, as an integer in `[0, 2^63]`.
pub fn distance(n: u64, a: Frac64, g: Frac64) -> u128 {
    let x = orbit(n, a) as i128 - g.raw() as i128;
    let t = x.rem_euclid(1i128 << 64);
    t.min((1i128 << 64) - t) as u128
}

/// Exact count by direct enumeration.
///
/// Relaxed pairs whose radius `ψ(n)/P(n)` exceeds `2N` (or whose `P(n)` is 0)
/// are counted with the same clamped radius as the fast counter.
pub fn count(q: &CountQuery) -> Result<u64> {
    q.validate()?;
    let k = q.k();
    let mut total = 0u64;
    for n in 1..=q.n {
        let psi = match q.mode {
            CountMode::MultiplicativeUniform => q.psi.eval(q.n)?,
            _ => q.psi.eval(n)?,
        };
        let d: Vec<u128> = (0..k)
            .map(|i| distance(n, q.alpha[i], q.gamma[i]))
            .collect();
        total += match q.mode {
            CountMode::Simultaneous => d
                .iter()
                .all(|di| cmp_scaled(&BigUint::from(*di), 1, psi).is_lt())
                as u64,
            CountMode::Multiplicative | CountMode::MultiplicativeUniform => {
                let p: BigUint = d.iter().map(|&v| BigUint::from(v)).product();
                cmp_scaled(&p, k, psi).is_lt() as u64
            }
            CountMode::CoprimePairs => coprime_pairs_at(n, q.alpha[0], psi).len() as u64,
            CountMode::RelaxedPairs => relaxed_pairs_at(n, q, &d, psi, 2.0 * q.n as f64),
        };
    }
    Ok(total)
}

/// All `a` with `|nα − a| ≤ ψ` and `gcd(a, n) = 1`, by scanning every
/// integer within distance 2 of `nα`.
pub fn coprime_pairs_at(n: u64, alpha: Frac64, psi: f64) -> Vec<i128> {
    let x = BigInt::from(n) * BigInt::from(alpha.raw());
    let base: BigInt = &x >> 64u32;
    let mut out = Vec::new();
    for off in -2i32..=2 {
        let a: BigInt = &base + off;
        let gap: BigInt = &x - (&a << 64u32);
        let gap = gap.magnitude().clone();
        if cmp_scaled(&gap, 1, psi).is_le()
            && a.magnitude().gcd(&BigUint::from(n)) == BigUint::from(1u32)
        {
            out.push(i128::try_from(a).expect("small integer"));
        }
    }
    out
}

fn relaxed_pairs_at(n: u64, q: &CountQuery, d: &[u128], psi: f64, radius_cap: f64) -> u64 {
    if psi == 0.0 {
        return 0;
    }
    let k = d.len();
    let head: BigUint = d[..k - 1].iter().map(|&v| BigUint::from(v)).product();
    let y =
        BigInt::from(n) * BigInt::from(q.alpha[k - 1].raw()) - BigInt::from(q.gamma[k - 1].raw());
    let nearest: BigInt = (&y + (BigInt::from(1u8) << 63u32)) >> 64u32;
    let p = d[..k - 1]
        .iter()
        .fold(1.0f64, |acc, &v| acc * (v as f64 / 2f64.powi(64)));
    let radius = if p == 0.0 || d[..k - 1].contains(&0) {
        f64::INFINITY
    } else {
        psi / p
    };
    if radius > radius_cap {
        let dk = d[k - 1] as f64 / 2f64.powi(64);
        let nearest_hits = (p == 0.0 || dk * p < psi) as u64;
        if nearest_hits == 0 {
            return 0;
        }
        let far = (radius_cap + dk).ceil() as u64 - 1;
        let near = ((radius_cap - dk).ceil() as u64).saturating_sub(1);
        return 1 + far + near;
    }
    let span = radius.ceil() as i64 + 2;
    let mut hits = 0;
    for off in -span..=span {
        let a: BigInt = &nearest + off;
        let gap: BigInt = &y - (&a << 64u32);
        let prod = &head * gap.magnitude();
        if cmp_scaled(&prod, k, psi).is_lt() {
            hits += 1;
        }
    }
    hits
}

/// `|B| ` by testing every `|n| ≤ N` against `‖nα_i − γ_i‖ ≤ δ_i`.
pub fn bohr_count(alpha: &[Frac64], gamma: &[Frac64], delta: &[f64], n_max: u64) -> u64 {
    let mut c = 0;
    for n in -(n_max as i128)..=n_max as i128 {
        let ok = (0..alpha.len()).all(|i| {
            let x = (n * alpha[i].raw() as i128 - gamma[i].raw() as i128).rem_euclid(1i128 << 64);
            let dist = x.min((1i128 << 64) - x) as u128;
            cmp_scaled(&BigUint::from(dist), 1, delta[i]).is_le()
        });
        c += ok as u64;
    }
    c
}

/// Euler's totient by counting `gcd(a, n) = 1`.
pub fn phi_brute(n: u64) -> u64 {
    (1..=n).filter(|a| a.gcd(&n) == 1).count() as u64
}
