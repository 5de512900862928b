//! Exact mod-1 arithmetic on fractional parts stored as 64-bit fixed point.
//!
//! A [`Frac64`] with raw value `r` represents the dyadic rational `r / 2^64`
//! in `[0, 1)`. Multiplication by a positive integer is a single wrapping
//! multiply, so every orbit point `nα mod 1` is computed without rounding.
//! All counts downstream are exact for the represented dyadic rational, not
//! for whatever real number it was constructed from.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{parse_err, Error, Result};

/// 2^64 as an `f64` (exact).
pub const SCALE: f64 = 18_446_744_073_709_551_616.0;
/// 2^-64 as an `f64` (exact).
pub const INV_SCALE: f64 = 1.0 / SCALE;

/// Fractional part of a real number in units of 2^-64.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac64(u64);

impl Frac64 {
    pub const ZERO: Frac64 = Frac64(0);
    pub const HALF: Frac64 = Frac64(1 << 63);

    pub const fn from_raw(raw: u64) -> Self {
        Frac64(raw)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    /// Returns `⌊frac(x)·2^64⌋ / 2^64`, computed exactly from the binary
    /// value of `x`.
    pub fn from_real(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let y = x.abs();
        // Both steps are exact for finite doubles: subtracting the floor of a
        // non-negative double and scaling by a power of two.
        let scaled = (y - y.floor()) * SCALE;
        if x >= 0.0 {
            Ok(Frac64(scaled.floor() as u64))
        } else {
            // frac(-y) = 1 - frac(y), so ⌊frac(-y)·2^64⌋ = 2^64 - ⌈frac(y)·2^64⌉.
            let up = scaled.ceil() as u128;
            Ok(Frac64(((1u128 << 64) - up) as u64))
        }
    }

    /// Exact `⌊frac(p/q)·2^64⌋ / 2^64`.
    pub fn from_ratio(p: i128, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(crate::error::invalid("ratio with zero denominator"));
        }
        let r = p.rem_euclid(q as i128) as u128;
        // r < q < 2^64, so r·2^64 fits in 128 bits.
        Ok(Frac64(((r << 64) / q as u128) as u64))
    }

    /// Fractional part of `√d`, truncated to 64 bits.
    pub fn frac_sqrt(d: u64) -> Self {
        let root = (BigUint::from(d) << 128u32).sqrt();
        Frac64(low_u64(&root))
    }

    /// Fractional part of the golden ratio `(1 + √5)/2`, truncated to 64 bits.
    pub fn golden() -> Self {
        let root = (BigUint::from(5u32) << 128u32).sqrt();
        let sum: BigUint = (BigUint::from(1u32) << 64u32) + root;
        Frac64(low_u64(&(sum >> 1u32)))
    }

    /// Value as `f64` (a single rounding).
    pub fn to_f64(self) -> f64 {
        self.0 as f64 * INV_SCALE
    }

    /// `n·self mod 1`, exactly.
    #[inline]
    pub fn frac_mul(self, n: u64) -> Self {
        Frac64(self.0.wrapping_mul(n))
    }

    /// Distance from `self - shift` to the nearest integer, in units of 2^-64.
    /// Always at most 2^63.
    #[inline]
    pub fn dist_raw(self, shift: Frac64) -> u64 {
        let d = self.0.wrapping_sub(shift.0);
        d.min(d.wrapping_neg())
    }

    /// `‖self - shift‖`, computed in integers and converted once.
    #[inline]
    pub fn dist_nearest(self, shift: Frac64) -> NearestDist {
        NearestDist::from_raw_distance(self.dist_raw(shift))
    }
}

/// `n·a mod 1`, exactly.
#[inline]
pub fn frac_mul(n: u64, a: Frac64) -> Frac64 {
    a.frac_mul(n)
}

/// `‖a - shift‖`.
#[inline]
pub fn dist_nearest(a: Frac64, shift: Frac64) -> NearestDist {
    a.dist_nearest(shift)
}

fn low_u64(x: &BigUint) -> u64 {
    x.iter_u64_digits().next().unwrap_or(0)
}

impl Add for Frac64 {
    type Output = Frac64;
    #[inline]
    fn add(self, rhs: Frac64) -> Frac64 {
        Frac64(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for Frac64 {
    #[inline]
    fn add_assign(&mut self, rhs: Frac64) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for Frac64 {
    type Output = Frac64;
    #[inline]
    fn sub(self, rhs: Frac64) -> Frac64 {
        Frac64(self.0.wrapping_sub(rhs.0))
    }
}

impl Neg for Frac64 {
    type Output = Frac64;
    #[inline]
    fn neg(self) -> Frac64 {
        Frac64(self.0.wrapping_neg())
    }
}

/// Canonical form: `0x` followed by 16 hex digits of the raw value.
impl fmt::Display for Frac64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

/// Serialized as the canonical hexadecimal raw string.
impl serde::Serialize for Frac64 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Frac64 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Accepts, in order of preference:
///
/// - `0x<hex>`: raw value (canonical, bit exact)
/// - `golden`, `sqrt:<d>`: fractional parts of quadratic irrationals
/// - `<p>/<q>`: exact rational
/// - plain decimals such as `-2.375` (exact, no binary rounding)
/// - anything else `f64` accepts, via [`Frac64::from_real`]
impl FromStr for Frac64 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            return u64::from_str_radix(hex, 16)
                .map(Frac64)
                .map_err(|e| parse_err("Frac64", s, e.to_string()));
        }
        if t.eq_ignore_ascii_case("golden") {
            return Ok(Frac64::golden());
        }
        if let Some(d) = t.strip_prefix("sqrt:") {
            let d: u64 = d
                .parse()
                .map_err(|_| parse_err("Frac64", s, "sqrt:<d> needs a non-negative integer"))?;
            return Ok(Frac64::frac_sqrt(d));
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i128 = p
                .trim()
                .parse()
                .map_err(|_| parse_err("Frac64", s, "bad numerator"))?;
            let q: u64 = q
                .trim()
                .parse()
                .map_err(|_| parse_err("Frac64", s, "bad denominator"))?;
            return Frac64::from_ratio(p, q);
        }
        if let Some(v) = parse_exact_decimal(t) {
            return Ok(v);
        }
        let x: f64 = t
            .parse()
            .map_err(|_| parse_err("Frac64", s, "expected hex raw, ratio, decimal or real"))?;
        Frac64::from_real(x)
    }
}

/// `[-]digits[.digits]` parsed exactly; `None` if the string has another shape.
fn parse_exact_decimal(t: &str) -> Option<Frac64> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    // The integer part drops out mod 1.
    let digits = frac_part.trim_end_matches('0');
    if digits.is_empty() {
        return Some(Frac64::ZERO);
    }
    let numer = BigUint::parse_bytes(digits.as_bytes(), 10)?;
    let denom = BigUint::from(10u32).pow(digits.len() as u32);
    let scaled = numer << 64u32;
    let floor = &scaled / &denom;
    if !neg {
        return Some(Frac64(low_u64(&floor)));
    }
    let exact = (&floor * &denom) == scaled;
    let ceil = if exact { floor } else { floor + 1u32 };
    let raw = (BigUint::from(1u32) << 64u32) - ceil;
    Some(Frac64(low_u64(&raw)))
}

/// Distance to the nearest integer, a real in `[0, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct NearestDist(f64);

impl NearestDist {
    #[inline]
    pub fn from_raw_distance(raw: u64) -> Self {
        debug_assert!(raw <= 1 << 63);
        NearestDist(raw as f64 * INV_SCALE)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Decides `∏ d_i / 2^64 < threshold` exactly, for factors in units of 2^-64.
///
/// A zero factor short-circuits (the product is 0, which is below any positive
/// threshold). Otherwise a scaled floating-point product settles every case
/// that is not within a relative 10^-9 of the threshold; the rest are decided
/// in big-integer arithmetic against the binary value of `threshold`.
#[inline]
pub fn product_below<T: Copy + Into<u128>>(factors: &[T], threshold: f64) -> bool {
    let mut m = 1.0f64;
    let mut shift = 0i32;
    for &d in factors {
        let d: u128 = d.into();
        if d == 0 {
            return threshold > 0.0;
        }
        m *= d as f64 * INV_SCALE;
        if m < RESCALE_BELOW {
            m *= RESCALE;
            shift += 1;
        }
    }
    if threshold <= 0.0 {
        return false;
    }
    let gap = if shift == 0 {
        m / threshold - 1.0
    } else {
        m.log2() - 512.0 * shift as f64 - threshold.log2()
    };
    if gap < -1e-9 {
        true
    } else if gap > 1e-9 {
        false
    } else {
        product_below_exact(factors, threshold)
    }
}

fn product_below_exact<T: Copy + Into<u128>>(factors: &[T], threshold: f64) -> bool {
    let mut prod = BigUint::from(1u32);
    for &d in factors {
        prod *= BigUint::from(d.into());
    }
    // threshold = mant · 2^exp exactly.
    let bits = threshold.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    let s = exp + 64 * factors.len() as i64;
    if s >= 0 {
        prod < (BigUint::from(mant) << s as u64)
    } else {
        (prod << (-s) as u64) < BigUint::from(mant)
    }
}

const RESCALE: f64 = 1.340_780_792_994_259_7e154; // 2^512
const RESCALE_BELOW: f64 = 7.458_340_731_200_207e-155; // 2^-512

/// `∏ d_i / 2^64` as `m · 2^(-512·shift)`, or `None` if some factor is zero.
#[inline]
pub fn scaled_product(dists: &[u64]) -> Option<(f64, i32)> {
    let mut m = 1.0f64;
    let mut shift = 0i32;
    for &d in dists {
        if d == 0 {
            return None;
        }
        m *= d as f64 * INV_SCALE;
        if m < RESCALE_BELOW {
            m *= RESCALE;
            shift += 1;
        }
    }
    Some((m, shift))
}

/// Natural log of `∏ d_i / 2^64`, or `-∞` if some factor is zero.
pub fn ln_product(dists: &[u64]) -> f64 {
    match scaled_product(dists) {
        None => f64::NEG_INFINITY,
        Some((m, shift)) => m.ln() - shift as f64 * 512.0 * std::f64::consts::LN_2,
    }
}
