//! Volumes of the product regions
//!
//! ```text
//! B_k(λ) = { x ∈ [0,1]^k   : x_1⋯x_k ≤ λ }
//! C_k(λ) = { x ∈ [0,1/2]^k : x_1⋯x_k ≤ λ }
//! ```
//!
//! `μ(B_k(λ)) = λ Σ_{s<k} (-ln λ)^s / s!` for `λ < 1`, and 1 otherwise.
//! Rescaling each coordinate by 2 gives `μ(C_k(λ)) = 2^-k μ(B_k(2^k λ))`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, parse_err, Error, Result};
use crate::experiments::rng::{stream_rng, unit_f64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    /// `[0,1]^k`
    #[serde(rename = "unit")]
    UnitBox,
    /// `[0,1/2]^k`
    #[serde(rename = "half")]
    HalfBox,
}

impl BoxKind {
    fn side(self) -> f64 {
        match self {
            BoxKind::UnitBox => 1.0,
            BoxKind::HalfBox => 0.5,
        }
    }
}

impl fmt::Display for BoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxKind::UnitBox => "unit",
            BoxKind::HalfBox => "half",
        })
    }
}

impl FromStr for BoxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unit" | "b" | "unitbox" => Ok(BoxKind::UnitBox),
            "half" | "c" | "halfbox" => Ok(BoxKind::HalfBox),
            _ => Err(parse_err("box", s, "expected unit or half")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductRegion {
    pub k: usize,
    pub lambda: f64,
    #[serde(rename = "box")]
    pub box_kind: BoxKind,
}

impl ProductRegion {
    pub fn new(k: usize, lambda: f64, box_kind: BoxKind) -> Result<Self> {
        check(k, lambda)?;
        Ok(ProductRegion {
            k,
            lambda,
            box_kind,
        })
    }

    pub fn box_volume(&self) -> f64 {
        self.box_kind.side().powi(self.k as i32)
    }

    pub fn volume_exact(&self) -> f64 {
        match self.box_kind {
            BoxKind::UnitBox => b_volume(self.k, self.lambda),
            BoxKind::HalfBox => c_volume(self.k, self.lambda),
        }
    }
}

fn check(k: usize, lambda: f64) -> Result<()> {
    if k == 0 {
        return Err(invalid("dimension k must be at least 1"));
    }
    if !lambda.is_finite() {
        return Err(Error::NonFinite(lambda));
    }
    if lambda <= 0.0 {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn b_volume(k: usize, lambda: f64) -> f64 {
    if lambda >= 1.0 {
        return 1.0;
    }
    let l = -lambda.ln();
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 1..k {
        term *= l / s as f64;
        sum += term;
    }
    lambda * sum
}

fn c_volume(k: usize, lambda: f64) -> f64 {
    let scale = 2f64.powi(k as i32);
    b_volume(k, scale * lambda) / scale
}

/// `μ_k(B_k(λ))`.
pub fn volume_b_exact(k: usize, lambda: f64) -> Result<f64> {
    check(k, lambda)?;
    Ok(b_volume(k, lambda))
}

/// `μ_k(C_k(λ))`.
pub fn volume_c_exact(k: usize, lambda: f64) -> Result<f64> {
    check(k, lambda)?;
    Ok(c_volume(k, lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
}

/// Samples per independent stream.
pub const MC_BATCH: u64 = 1 << 20;

/// Hit-or-miss estimate of the region's volume.
///
/// Batch `b` draws from stream `b` of `seed`, and hits are integers, so the
/// result does not depend on how batches are spread over threads.
pub fn volume_monte_carlo(
    region: &ProductRegion,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check(region.k, region.lambda)?;
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let k = region.k;
    let side = region.box_kind.side();
    let lambda = region.lambda;
    let batches = samples.div_ceil(MC_BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = MC_BATCH.min(samples - b * MC_BATCH);
            let mut rng = stream_rng(seed, b);
            let mut hits = 0u64;
            for _ in 0..len {
                let mut prod = 1.0;
                for _ in 0..k {
                    prod *= side * unit_f64(&mut rng);
                }
                hits += (prod <= lambda) as u64;
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let vol = region.box_volume();
    Ok(MonteCarloEstimate {
        estimate: vol * p,
        stderr: vol * (p * (1.0 - p) / samples as f64).sqrt(),
        hits,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn exact_examples() {
        for k in 1..=6 {
            assert_eq!(volume_b_exact(k, 1.0).unwrap(), 1.0);
            assert_eq!(volume_b_exact(k, 3.0).unwrap(), 1.0);
        }
        assert_eq!(volume_b_exact(1, 0.3).unwrap(), 0.3);
        let v = volume_b_exact(2, 0.5).unwrap();
        assert!((v - 0.5 * (1.0 + LN_2)).abs() < 1e-15);
        assert!((v - 0.846574).abs() < 1e-6);
        assert_eq!(volume_c_exact(1, 0.5).unwrap(), 0.5);
        let c = volume_c_exact(2, 0.125).unwrap();
        assert!((c - 0.211643).abs() < 1e-6);
        assert_eq!(volume_c_exact(3, 0.125).unwrap(), 0.125);
        assert_eq!(volume_c_exact(3, 0.3).unwrap(), 0.125);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(volume_b_exact(2, 0.0).is_err());
        assert!(volume_b_exact(2, -1.0).is_err());
        assert!(volume_b_exact(0, 0.5).is_err());
        assert!(volume_c_exact(2, f64::NAN).is_err());
    }

    #[test]
    fn large_k_is_finite() {
        let v = volume_b_exact(50, 1e-30).unwrap();
        assert!(v.is_finite() && v > 0.0 && v <= 1.0);
    }

    #[test]
    fn scaling_identity_is_exact() {
        for k in 1..=8 {
            for lam in [1e-6, 0.001, 0.01, 0.05, 0.1, 0.3] {
                let s = 2f64.powi(k as i32);
                assert_eq!(
                    s * volume_c_exact(k, lam).unwrap(),
                    volume_b_exact(k, s * lam).unwrap()
                );
            }
        }
    }

    #[test]
    fn monotone_in_lambda_and_k() {
        for k in 1..=6 {
            let mut prev = 0.0;
            for i in 1..=100 {
                let v = volume_b_exact(k, i as f64 / 100.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
        for lam in [0.9, 0.5, 0.1, 0.01] {
            for k in 1..6 {
                assert!(volume_b_exact(k + 1, lam).unwrap() >= volume_b_exact(k, lam).unwrap());
            }
        }
    }

    // Adaptive Simpson on [a, b].
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let m = 0.5 * (a + b);
        let fm = f(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    /// `λ + ∫_λ^1 μ(B_{k-1}(λ/x)) dx`, integrated in `u = ln(x/λ)` so the
    /// logarithmic kink at `x = λ` is smoothed out.
    pub(crate) fn induction_rhs(k: usize, lambda: f64) -> f64 {
        let f = |u: f64| lambda * u.exp() * volume_b_exact(k - 1, (-u).exp()).unwrap();
        lambda + simpson(&f, 0.0, -lambda.ln(), 1e-13)
    }

    #[test]
    fn induction_identity_by_quadrature() {
        for k in 2..=4 {
            for lam in [0.9, 0.5, 0.1, 0.01] {
                let lhs = volume_b_exact(k, lam).unwrap();
                let rhs = induction_rhs(k, lam);
                assert!((lhs - rhs).abs() < 1e-8, "k={k} λ={lam}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn monte_carlo_saturated_is_exact() {
        let r = ProductRegion::new(3, 1.0, BoxKind::UnitBox).unwrap();
        let mc = volume_monte_carlo(&r, 10_000, 1).unwrap();
        assert_eq!(mc.estimate, 1.0);
        assert_eq!(mc.stderr, 0.0);
        let h = ProductRegion::new(2, 0.25, BoxKind::HalfBox).unwrap();
        let mc = volume_monte_carlo(&h, 10_000, 1).unwrap();
        assert_eq!(mc.estimate, 0.25);
    }

    #[test]
    fn monte_carlo_agrees_and_is_deterministic() {
        let r = ProductRegion::new(2, 0.5, BoxKind::UnitBox).unwrap();
        let a = volume_monte_carlo(&r, 2_000_000, 7).unwrap();
        let b = volume_monte_carlo(&r, 2_000_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - r.volume_exact()).abs() < 3.0 * a.stderr);
        let c = ProductRegion::new(2, 0.125, BoxKind::HalfBox).unwrap();
        let m = volume_monte_carlo(&c, 2_000_000, 9).unwrap();
        assert!((m.estimate - c.volume_exact()).abs() < 3.0 * m.stderr);
        assert!(volume_monte_carlo(&r, 0, 1).is_err());
    }
}
