//! Approximating functions `ψ: ℕ → [0, 1/2]`.

mod classify;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use classify::{
    classify, ClassifyOptions, DivergenceProbe, HypothesisCheck, HypothesisReport, SeriesVerdict,
    Status, Theorem,
};

use crate::error::{invalid, parse_err, Error, Result};

/// Upper end of the range every `ψ(n)` is clamped into.
pub const PSI_MAX: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum PsiFamily {
    /// `ψ(n) = min(1/2, c · n^-κ · (ln(n+1))^-a)`.
    PowerLog {
        c: f64,
        kappa: f64,
        a: f64,
    },
    Constant(f64),
    /// `ψ(n) = values[n-1]`; undefined beyond the table.
    Table(Arc<[f64]>),
}

#[derive(Clone, Debug)]
pub struct ApproxFunction {
    family: PsiFamily,
    non_increasing: bool,
    vanishing: bool,
    power_bound: Option<f64>,
}

impl ApproxFunction {
    pub fn power_log(c: f64, kappa: f64, a: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("powerlog needs c > 0, got {c}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(invalid(format!("powerlog needs kappa >= 0, got {kappa}")));
        }
        if !a.is_finite() {
            return Err(invalid(format!(
                "powerlog needs a finite log exponent, got {a}"
            )));
        }
        Ok(ApproxFunction {
            family: PsiFamily::PowerLog { c, kappa, a },
            non_increasing: a >= 0.0,
            vanishing: kappa > 0.0 || a > 0.0,
            power_bound: None,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(0.0..=PSI_MAX).contains(&c) {
            return Err(invalid(format!(
                "constant psi must lie in [0, 1/2], got {c}"
            )));
        }
        Ok(ApproxFunction {
            family: PsiFamily::Constant(c),
            non_increasing: true,
            vanishing: c == 0.0,
            power_bound: None,
        })
    }

    /// Entries above 1/2 are clamped; negative or non-finite entries are rejected.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("psi table is empty"));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!(
                "psi table entry {bad} is not a non-negative real"
            )));
        }
        let values: Arc<[f64]> = values.into_iter().map(|v| v.min(PSI_MAX)).collect();
        let non_increasing = values.windows(2).all(|w| w[1] <= w[0]);
        Ok(ApproxFunction {
            family: PsiFamily::Table(values),
            non_increasing,
            // A finite table says nothing about the limit.
            vanishing: false,
            power_bound: None,
        })
    }

    /// Declares `ψ(n) < n^-κ` for all `n`; [`classify`] verifies the claim.
    pub fn with_power_bound(mut self, kappa: f64) -> Self {
        self.power_bound = Some(kappa);
        self
    }

    pub fn family(&self) -> &PsiFamily {
        &self.family
    }

    pub fn non_increasing(&self) -> bool {
        self.non_increasing
    }

    pub fn vanishing(&self) -> bool {
        self.vanishing
    }

    pub fn power_bound(&self) -> Option<f64> {
        self.power_bound
    }

    /// Largest `n` the function is defined for, if finite.
    pub fn domain_limit(&self) -> Option<u64> {
        match &self.family {
            PsiFamily::Table(v) => Some(v.len() as u64),
            _ => None,
        }
    }

    pub fn ensure_domain(&self, n: u64) -> Result<()> {
        match self.domain_limit() {
            Some(len) if n > len => Err(Error::TableOutOfRange {
                n,
                len: len as usize,
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(invalid("psi is defined on positive integers only"));
        }
        self.ensure_domain(n)?;
        Ok(self.value(n))
    }

    /// `ψ(n)` for `n` already known to be in the domain.
    #[inline]
    pub(crate) fn value(&self, n: u64) -> f64 {
        match &self.family {
            PsiFamily::PowerLog { c, kappa, a } => {
                let mut v = *c;
                if *kappa != 0.0 {
                    v *= (n as f64).powf(-kappa);
                }
                if *a != 0.0 {
                    v *= ((n + 1) as f64).ln().powf(-a);
                }
                v.min(PSI_MAX)
            }
            PsiFamily::Constant(c) => *c,
            PsiFamily::Table(t) => t[(n - 1) as usize],
        }
    }

    /// Writes `ψ(start), ψ(start+1), …` into `out`.
    pub(crate) fn fill(&self, start: u64, out: &mut [f64]) {
        match &self.family {
            PsiFamily::Constant(c) => out.fill(*c),
            PsiFamily::Table(t) => {
                let s = (start - 1) as usize;
                out.copy_from_slice(&t[s..s + out.len()]);
            }
            PsiFamily::PowerLog { .. } => {
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = self.value(start + i as u64);
                }
            }
        }
    }

    /// Smallest `m` such that `ψ(n)` is unclamped for all `n > m`, when that is
    /// decidable from the parameters. `Some(0)` means nothing is clamped.
    pub fn clamped_prefix(&self) -> Option<u64> {
        match &self.family {
            PsiFamily::PowerLog { c, kappa, a } if *a >= 0.0 => {
                let raw = |n: u64| {
                    let mut v = *c;
                    if *kappa != 0.0 {
                        v *= (n as f64).powf(-kappa);
                    }
                    if *a != 0.0 {
                        v *= ((n + 1) as f64).ln().powf(-a);
                    }
                    v
                };
                if *kappa == 0.0 && *a == 0.0 {
                    return Some(if *c > PSI_MAX { u64::MAX } else { 0 });
                }
                // raw is non-increasing here; find the last clamped n.
                let mut n = 0u64;
                while n < 1 << 40 && raw(n + 1) > PSI_MAX {
                    n += 1;
                    if n > 1_000_000 {
                        return None;
                    }
                }
                Some(n)
            }
            PsiFamily::PowerLog { .. } => None,
            PsiFamily::Constant(_) => Some(0),
            PsiFamily::Table(_) => Some(0),
        }
    }
}

impl PartialEq for ApproxFunction {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.power_bound == other.power_bound
    }
}

impl fmt::Display for ApproxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            PsiFamily::PowerLog { c, kappa, a } => write!(f, "powerlog:{c},{kappa},{a}"),
            PsiFamily::Constant(c) => write!(f, "const:{c}"),
            PsiFamily::Table(t) => {
                write!(f, "table:")?;
                for (i, v) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

/// `powerlog:c,kappa[,a]`, `const:c`, `table:v1,v2,…` or `table:@path`
/// (one value per line).
impl FromStr for ApproxFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| parse_err("psi", s, "expected family:params"))?;
        let nums = |p: &str| -> Result<Vec<f64>> {
            p.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err("psi", s, format!("bad number {t:?}")))
                })
                .collect()
        };
        match family.to_ascii_lowercase().as_str() {
            "powerlog" => {
                let v = nums(params)?;
                match v.as_slice() {
                    [c, kappa] => ApproxFunction::power_log(*c, *kappa, 0.0),
                    [c, kappa, a] => ApproxFunction::power_log(*c, *kappa, *a),
                    _ => Err(parse_err("psi", s, "powerlog takes c,kappa[,a]")),
                }
            }
            "const" | "constant" => match nums(params)?.as_slice() {
                [c] => ApproxFunction::constant(*c),
                _ => Err(parse_err("psi", s, "const takes one value")),
            },
            "table" => {
                if let Some(path) = params.strip_prefix('@') {
                    let text = std::fs::read_to_string(path)?;
                    ApproxFunction::table(nums(&text)?)
                } else {
                    ApproxFunction::table(nums(params)?)
                }
            }
            other => Err(parse_err("psi", s, format!("unknown family {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(
            ApproxFunction::constant(0.25).unwrap().eval(10).unwrap(),
            0.25
        );
        let p = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.eval(4).unwrap(), 0.25);
        assert_eq!(p.eval(1).unwrap(), 0.5);
        assert!(p.eval(0).is_err());
    }

    #[test]
    fn log_factor_uses_n_plus_one() {
        let p = ApproxFunction::power_log(0.1, 0.0, 1.0).unwrap();
        let expected = 0.1 / 3f64.ln();
        assert_eq!(p.eval(2).unwrap(), expected);
    }

    #[test]
    fn table_domain_and_clamp() {
        let t = ApproxFunction::table(vec![0.9, 0.3, 0.1]).unwrap();
        assert_eq!(t.eval(1).unwrap(), 0.5);
        assert_eq!(t.eval(3).unwrap(), 0.1);
        assert!(matches!(
            t.eval(4),
            Err(Error::TableOutOfRange { n: 4, len: 3 })
        ));
        assert!(t.non_increasing());
        assert!(!ApproxFunction::table(vec![0.1, 0.2])
            .unwrap()
            .non_increasing());
        assert!(ApproxFunction::table(vec![0.1, -0.2]).is_err());
        assert!(ApproxFunction::table(vec![]).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(ApproxFunction::constant(0.6).is_err());
        assert!(ApproxFunction::power_log(0.0, 1.0, 0.0).is_err());
        assert!(ApproxFunction::power_log(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn flags() {
        let p = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
        assert!(p.non_increasing() && p.vanishing());
        let c = ApproxFunction::constant(0.25).unwrap();
        assert!(c.non_increasing() && !c.vanishing());
        let up = ApproxFunction::power_log(0.01, 0.5, -2.0).unwrap();
        assert!(!up.non_increasing());
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "powerlog:1,1,0",
            "powerlog:0.5,0.6,1.5",
            "const:0.25",
            "table:0.5,0.25,0.125",
        ] {
            let f: ApproxFunction = s.parse().unwrap();
            let again: ApproxFunction = f.to_string().parse().unwrap();
            assert_eq!(f, again);
        }
        let f: ApproxFunction = "powerlog:2,0.25".parse().unwrap();
        assert_eq!(f, ApproxFunction::power_log(2.0, 0.25, 0.0).unwrap());
        assert!("sine:1".parse::<ApproxFunction>().is_err());
        assert!("powerlog".parse::<ApproxFunction>().is_err());
    }

    #[test]
    fn clamped_prefix_reports_clamp() {
        let p = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.clamped_prefix(), Some(1));
        let q = ApproxFunction::power_log(4.0, 1.0, 0.0).unwrap();
        assert_eq!(q.clamped_prefix(), Some(7));
        let r = ApproxFunction::power_log(0.5, 0.6, 0.0).unwrap();
        assert_eq!(r.clamped_prefix(), Some(0));
    }

    #[test]
    fn fill_matches_eval() {
        let p = ApproxFunction::power_log(0.7, 0.6, 1.2).unwrap();
        let mut buf = vec![0.0; 50];
        p.fill(17, &mut buf);
        for (i, v) in buf.iter().enumerate() {
            assert_eq!(*v, p.eval(17 + i as u64).unwrap());
        }
    }
}
