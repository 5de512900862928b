//! Asymptotic main terms for the counting functions.
//!
//! | kind              | partial sum over `n ≤ N`                               |
//! |-------------------|--------------------------------------------------------|
//! | `SchmidtPsiK`     | `Σ (2ψ(n))^k`                                          |
//! | `WangYuPsiTimes`  | `(1/(k-1)!) Σ ψ(n) (-ln(2^k ψ(n)))^(k-1)`              |
//! | `LogPsiTimes`     | `Σ ψ(n) (ln n)^(k-1)`                                  |
//! | `AbhPsi`          | `Σ 2 (φ(n)/n) ψ(n)`                                    |
//! | `Tk`              | `2^k Σ μ_k(C_k(ψ(n)))`                                 |
//! | `UniformVolume`   | `N · 2^k μ_k(C_k(ψ(N)))` (not a running sum)           |
//!
//! `WangYuPsiTimes` uses `x(-ln x)^d = 0` at `x = 0`. For `k = 1` it reduces
//! to `Σ ψ(n)`. Terms with `ψ(n) ≥ 2^-k` are summed as written (they are zero
//! or have the sign of `(-1)^(k-1)`) and mark the series `outside_regime`.
//!
//! All sums run sequentially through a compensated accumulator, so values are
//! bit-reproducible.

mod totient;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use totient::{euler_phi_sieve, euler_phi_sieve_with_budget, PhiTable, DEFAULT_SIEVE_BUDGET};

use crate::error::{invalid, parse_err, Error, Result};
use crate::geometry::volume_c_exact;
use crate::psi::ApproxFunction;
use crate::summation::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    #[serde(rename = "psi_k")]
    SchmidtPsiK,
    #[serde(rename = "psi_times")]
    WangYuPsiTimes,
    #[serde(rename = "psi_times_log")]
    LogPsiTimes,
    #[serde(rename = "psi_abh")]
    AbhPsi,
    #[serde(rename = "t_k")]
    Tk,
    UniformVolume,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 6] = [
        PredictorKind::SchmidtPsiK,
        PredictorKind::WangYuPsiTimes,
        PredictorKind::LogPsiTimes,
        PredictorKind::AbhPsi,
        PredictorKind::Tk,
        PredictorKind::UniformVolume,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::SchmidtPsiK => "psi_k",
            PredictorKind::WangYuPsiTimes => "psi_times",
            PredictorKind::LogPsiTimes => "psi_times_log",
            PredictorKind::AbhPsi => "psi_abh",
            PredictorKind::Tk => "t_k",
            PredictorKind::UniformVolume => "uniform_volume",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        PredictorKind::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .or(match t.as_str() {
                "psik" | "schmidt" => Some(PredictorKind::SchmidtPsiK),
                "psitimes" | "wangyu" => Some(PredictorKind::WangYuPsiTimes),
                "logpsitimes" | "psitimeslog" => Some(PredictorKind::LogPsiTimes),
                "abh" => Some(PredictorKind::AbhPsi),
                "tk" => Some(PredictorKind::Tk),
                "uniform" => Some(PredictorKind::UniformVolume),
                _ => None,
            })
            .ok_or_else(|| parse_err("predictor kind", s, "unknown predictor"))
    }
}

/// Per-term evaluator with the constants of one `(kind, k)` pair hoisted.
#[derive(Clone, Copy, Debug)]
struct TermRule {
    kind: PredictorKind,
    k: i32,
    two_k: f64,
    regime_edge: f64,
    inv_fact: f64,
}

impl TermRule {
    fn new(kind: PredictorKind, k: usize) -> Self {
        let inv_fact = (1..k).fold(1.0f64, |acc, s| acc / s as f64);
        let two_k = 2f64.powi(k as i32);
        TermRule {
            kind,
            k: k as i32,
            two_k,
            regime_edge: 1.0 / two_k,
            inv_fact,
        }
    }

    #[inline]
    fn term(&self, n: u64, psi: f64, phi: Option<&PhiTable>) -> f64 {
        match self.kind {
            PredictorKind::SchmidtPsiK => (2.0 * psi).powi(self.k),
            PredictorKind::WangYuPsiTimes => {
                if psi == 0.0 {
                    0.0
                } else if self.k == 1 {
                    psi
                } else {
                    psi * (-(self.two_k * psi).ln()).powi(self.k - 1) * self.inv_fact
                }
            }
            PredictorKind::LogPsiTimes => {
                if self.k == 1 {
                    psi
                } else {
                    psi * (n as f64).ln().powi(self.k - 1)
                }
            }
            PredictorKind::AbhPsi => {
                let phi = phi.expect("totient table checked by caller");
                2.0 * (phi.get(n) as f64 / n as f64) * psi
            }
            PredictorKind::Tk | PredictorKind::UniformVolume => {
                if psi == 0.0 {
                    0.0
                } else {
                    self.two_k * volume_c_exact(self.k as usize, psi).expect("k >= 1 and psi > 0")
                }
            }
        }
    }
}

/// Partial sums of one predictor at a set of checkpoints.
#[derive(Clone, Debug)]
pub struct PredictorSeries {
    pub kind: PredictorKind,
    pub k: usize,
    pub psi: ApproxFunction,
    pub partial_sums: BTreeMap<u64, f64>,
    /// Some `ψ(n) ≥ 2^-k` was summed (only tracked for `WangYuPsiTimes`).
    pub outside_regime: bool,
}

const BLOCK: usize = 4096;

impl PredictorSeries {
    pub fn compute(
        kind: PredictorKind,
        k: usize,
        psi: &ApproxFunction,
        checkpoints: &[u64],
        phi: Option<&PhiTable>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(invalid("predictors need k >= 1"));
        }
        let mut points: Vec<u64> = checkpoints.to_vec();
        points.sort_unstable();
        points.dedup();
        let Some(&max_n) = points.last() else {
            return Err(invalid("no checkpoints"));
        };
        if points[0] == 0 {
            return Err(invalid("checkpoints must be positive"));
        }
        psi.ensure_domain(max_n)?;
        if kind == PredictorKind::AbhPsi && !phi.is_some_and(|t| t.covers(max_n)) {
            return Err(invalid(format!("totient table must cover N = {max_n}")));
        }

        let rule = TermRule::new(kind, k);
        let mut partial_sums = BTreeMap::new();
        let mut outside_regime = false;

        if kind == PredictorKind::UniformVolume {
            for &n in &points {
                let v = psi.value(n);
                partial_sums.insert(n, n as f64 * rule.term(n, v, None));
            }
        } else {
            let mut acc = CompensatedSum::new();
            let mut buf = vec![0.0f64; BLOCK];
            let mut next = points.iter().copied().peekable();
            let mut start = 1u64;
            while start <= max_n {
                let len = (max_n - start + 1).min(BLOCK as u64) as usize;
                psi.fill(start, &mut buf[..len]);
                for (i, &v) in buf[..len].iter().enumerate() {
                    let n = start + i as u64;
                    if kind == PredictorKind::WangYuPsiTimes && v >= rule.regime_edge {
                        outside_regime = true;
                    }
                    acc.add(rule.term(n, v, phi));
                    if next.peek() == Some(&n) {
                        partial_sums.insert(n, acc.value());
                        next.next();
                    }
                }
                start += len as u64;
            }
        }

        Ok(PredictorSeries {
            kind,
            k,
            psi: psi.clone(),
            partial_sums,
            outside_regime,
        })
    }

    pub fn at(&self, n: u64) -> Option<f64> {
        self.partial_sums.get(&n).copied()
    }
}

fn single(
    kind: PredictorKind,
    n: u64,
    k: usize,
    psi: &ApproxFunction,
    phi: Option<&PhiTable>,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let s = PredictorSeries::compute(kind, k, psi, &[n], phi)?;
    Ok(s.at(n).unwrap_or(0.0))
}

/// `Ψ_k(N) = Σ_{n≤N} (2ψ(n))^k`.
pub fn psi_k(n: u64, k: usize, psi: &ApproxFunction) -> Result<f64> {
    single(PredictorKind::SchmidtPsiK, n, k, psi, None)
}

/// `Ψ_k^×(N)`; requires `k ≥ 2`.
pub fn psi_times(n: u64, k: usize, psi: &ApproxFunction) -> Result<f64> {
    if k < 2 {
        return Err(invalid("psi_times needs k >= 2"));
    }
    single(PredictorKind::WangYuPsiTimes, n, k, psi, None)
}

/// `Ψ̃_k^×(N) = Σ_{n≤N} ψ(n) (ln n)^(k-1)`; requires `k ≥ 2`.
pub fn psi_times_log(n: u64, k: usize, psi: &ApproxFunction) -> Result<f64> {
    if k < 2 {
        return Err(invalid("psi_times_log needs k >= 2"));
    }
    single(PredictorKind::LogPsiTimes, n, k, psi, None)
}

/// `Ψ(N) = Σ_{n≤N} 2 (φ(n)/n) ψ(n)`.
pub fn psi_abh(n: u64, psi: &ApproxFunction, phi: &PhiTable) -> Result<f64> {
    single(PredictorKind::AbhPsi, n, 1, psi, Some(phi))
}

/// `T_k(N) = 2^k Σ_{n≤N} μ_k(C_k(ψ(n)))`.
pub fn t_k(n: u64, k: usize, psi: &ApproxFunction) -> Result<f64> {
    single(PredictorKind::Tk, n, k, psi, None)
}

/// `N · 2^k μ_k(C_k(ψ(N)))`: the expected size of the uniform count for
/// Lebesgue-random `α`.
pub fn uniform_volume(n: u64, k: usize, psi: &ApproxFunction) -> Result<f64> {
    single(PredictorKind::UniformVolume, n, k, psi, None)
}
