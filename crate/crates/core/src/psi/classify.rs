//! Hypothesis checks for the classical metric theorems.
//!
//! Divergence of the relevant series is judged empirically: partial sums are
//! taken at `P/100`, `P/10` and `P` for a probe bound `P`, and the ratio of the
//! last decade increment to the previous one decides the verdict. Power-like
//! convergent tails shrink by a factor of `10^(1-κ)` per decade; divergent ones
//! do not shrink. Series on the `1/(n log n)` borderline come out
//! [`SeriesVerdict::Undetermined`].

use serde::Serialize;

use super::{ApproxFunction, PsiFamily};
use crate::predictors::{euler_phi_sieve, PredictorKind, PredictorSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Khintchine,
    Gallagher,
    Schmidt,
    WangYu,
    MainThm,
    FibreThm,
    Abh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub status: Status,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVerdict {
    Divergent,
    Convergent,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceProbe {
    pub series: &'static str,
    pub partial_sums: Vec<(u64, f64)>,
    pub increment_ratio: Option<f64>,
    pub verdict: SeriesVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub theorem: Theorem,
    pub k: usize,
    pub checks: Vec<HypothesisCheck>,
    pub divergence: Option<DivergenceProbe>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violations(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| c.status == Status::Fails)
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Holds)
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub k: usize,
    /// κ for the `ψ(n) < n^-κ` hypothesis; falls back to the declared bound.
    pub kappa: Option<f64>,
    /// Multiplicative exponent of the fixed fibre, for [`Theorem::FibreThm`].
    pub fibre_exponent: Option<f64>,
    /// Upper end of the divergence probe.
    pub probe_n: u64,
    /// Range of the monotonicity and power-bound scans.
    pub scan_n: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            k: 2,
            kappa: None,
            fibre_exponent: None,
            probe_n: 1_000_000,
            scan_n: 1_000_000,
        }
    }
}

/// Increment ratio at or above which a series is called divergent.
pub const DIVERGENT_RATIO: f64 = 0.9;
/// Increment ratio at or below which a series is called convergent.
pub const CONVERGENT_RATIO: f64 = 0.5;

pub fn classify(f: &ApproxFunction, theorem: Theorem, opts: &ClassifyOptions) -> HypothesisReport {
    let k = match theorem {
        Theorem::Khintchine | Theorem::Abh => 1,
        _ => opts.k.max(1),
    };
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    if let Some(m) = f.clamped_prefix() {
        if m == u64::MAX {
            notes.push("psi is clamped to 1/2 for every n".to_string());
        } else if m > 0 {
            notes.push(format!("psi is clamped to 1/2 for n <= {m}"));
        }
    }

    let scan_n = bounded(f, opts.scan_n);
    let probe_n = bounded(f, opts.probe_n);

    checks.push(monotone_check(f, scan_n));

    match theorem {
        Theorem::WangYu => checks.push(vanishing_check(f)),
        Theorem::MainThm | Theorem::FibreThm => {
            checks.push(power_bound_check(f, opts.kappa.or(f.power_bound()), scan_n));
        }
        Theorem::Abh => checks.push(HypothesisCheck {
            name: "psi(n) in [0, 1/2]",
            status: Status::Holds,
            note: "enforced by construction".into(),
        }),
        _ => {}
    }
    if theorem == Theorem::FibreThm {
        checks.push(fibre_check(k, opts.fibre_exponent));
    }

    let (kind, series_k, label) = match theorem {
        Theorem::Khintchine => (PredictorKind::WangYuPsiTimes, 1, "sum psi(n)"),
        Theorem::Gallagher => (PredictorKind::LogPsiTimes, k, "sum psi(n) (log n)^(k-1)"),
        Theorem::Schmidt => (PredictorKind::SchmidtPsiK, k, "Psi_k(N)"),
        Theorem::WangYu => (PredictorKind::WangYuPsiTimes, k, "Psi_k^x(N)"),
        Theorem::MainThm | Theorem::FibreThm => (PredictorKind::LogPsiTimes, k, "tilde Psi_k^x(N)"),
        Theorem::Abh => (PredictorKind::AbhPsi, 1, "Psi(N) = sum 2 phi(n)/n psi(n)"),
    };
    let divergence = probe_series(f, kind, series_k, label, probe_n);

    match theorem {
        Theorem::Khintchine | Theorem::Gallagher => {
            if let Some(p) = &divergence {
                notes.push(match p.verdict {
                    SeriesVerdict::Divergent => "divergence case: full measure".to_string(),
                    SeriesVerdict::Convergent => "convergence case: null set".to_string(),
                    SeriesVerdict::Undetermined => {
                        "series behaviour undetermined at probe scale".to_string()
                    }
                });
            }
        }
        _ => {
            let status = match divergence.as_ref().map(|p| p.verdict) {
                Some(SeriesVerdict::Divergent) => Status::Holds,
                Some(SeriesVerdict::Convergent) => Status::Fails,
                _ => Status::Unknown,
            };
            checks.push(HypothesisCheck {
                name: "predictor unbounded",
                status,
                note: format!("{label} probed up to N = {probe_n}"),
            });
        }
    }

    HypothesisReport {
        theorem,
        k,
        checks,
        divergence,
        notes,
    }
}

fn bounded(f: &ApproxFunction, n: u64) -> u64 {
    f.domain_limit().map_or(n, |len| n.min(len)).max(1)
}

fn monotone_check(f: &ApproxFunction, scan_n: u64) -> HypothesisCheck {
    let first_increase = (1..scan_n).find(|&n| f.value(n + 1) > f.value(n));
    let (status, note) = match (first_increase, f.non_increasing()) {
        (Some(n), _) => (Status::Fails, format!("psi({}) > psi({n})", n + 1)),
        (None, true) => match f.family() {
            PsiFamily::Table(_) => (Status::Holds, "checked on the whole table".to_string()),
            _ => (
                Status::Holds,
                format!("by construction; scanned n <= {scan_n}"),
            ),
        },
        (None, false) => (Status::Unknown, format!("no increase for n <= {scan_n}")),
    };
    HypothesisCheck {
        name: "psi non-increasing",
        status,
        note,
    }
}

fn vanishing_check(f: &ApproxFunction) -> HypothesisCheck {
    let (status, note) = match f.family() {
        PsiFamily::Table(_) => (Status::Unknown, "finite table".to_string()),
        _ if f.vanishing() => (Status::Holds, "decaying family".to_string()),
        PsiFamily::Constant(c) => (Status::Fails, format!("constant {c}")),
        _ => (Status::Fails, "no decay factor".to_string()),
    };
    HypothesisCheck {
        name: "psi(n) -> 0",
        status,
        note,
    }
}

fn power_bound_check(f: &ApproxFunction, kappa: Option<f64>, scan_n: u64) -> HypothesisCheck {
    let name = "psi(n) < n^-kappa";
    let Some(kappa) = kappa.filter(|k| *k > 0.0) else {
        return HypothesisCheck {
            name,
            status: Status::Unknown,
            note: "no kappa > 0 supplied".into(),
        };
    };
    if let Some(n) = (1..=scan_n).find(|&n| f.value(n) >= (n as f64).powf(-kappa)) {
        return HypothesisCheck {
            name,
            status: Status::Fails,
            note: format!("fails at n = {n} for kappa = {kappa}"),
        };
    }
    let (status, tail) = match f.family() {
        PsiFamily::Table(_) => (Status::Holds, "whole table".to_string()),
        PsiFamily::Constant(c) if *c == 0.0 => (Status::Holds, "psi = 0".to_string()),
        PsiFamily::Constant(c) => (
            Status::Fails,
            format!("fails beyond n = {:.3e}", c.powf(-1.0 / kappa)),
        ),
        // psi(n) n^kappa is non-increasing, so the scan settles the tail.
        PsiFamily::PowerLog { kappa: kf, a, .. } if *kf >= kappa && *a >= 0.0 => {
            (Status::Holds, "tail follows from the family".to_string())
        }
        PsiFamily::PowerLog { .. } => (
            Status::Unknown,
            format!("tail beyond n = {scan_n} unverified"),
        ),
    };
    let mut note = format!("kappa = {kappa}; n <= {scan_n} scanned; {tail}");
    match f.clamped_prefix() {
        Some(m) if m == u64::MAX => note.push_str("; psi is the clamp 1/2 everywhere"),
        Some(m) if m > 0 => note.push_str(&format!("; clamp 1/2 used for n <= {m}")),
        _ => {}
    }
    HypothesisCheck { name, status, note }
}

fn fibre_check(k: usize, w: Option<f64>) -> HypothesisCheck {
    let name = "fibre exponent w < (k-1)/(k-2)";
    let bound = if k <= 2 {
        f64::INFINITY
    } else {
        (k - 1) as f64 / (k - 2) as f64
    };
    match w {
        None => HypothesisCheck {
            name,
            status: Status::Unknown,
            note: "no fibre exponent supplied".into(),
        },
        Some(w) if w < bound => HypothesisCheck {
            name,
            status: Status::Holds,
            note: format!("w = {w} < {bound}"),
        },
        Some(w) => HypothesisCheck {
            name,
            status: Status::Fails,
            note: format!("w = {w} >= {bound}"),
        },
    }
}

fn probe_series(
    f: &ApproxFunction,
    kind: PredictorKind,
    k: usize,
    label: &'static str,
    probe_n: u64,
) -> Option<DivergenceProbe> {
    if probe_n < 100 {
        return None;
    }
    let points = [probe_n / 100, probe_n / 10, probe_n];
    let phi = if kind == PredictorKind::AbhPsi {
        Some(euler_phi_sieve(probe_n).ok()?)
    } else {
        None
    };
    let series = PredictorSeries::compute(kind, k, f, &points, phi.as_ref()).ok()?;
    let partial_sums: Vec<(u64, f64)> = points
        .iter()
        .map(|&n| (n, series.at(n).unwrap_or(0.0)))
        .collect();
    let (s0, s1, s2) = (partial_sums[0].1, partial_sums[1].1, partial_sums[2].1);
    let (d1, d2) = (s1 - s0, s2 - s1);
    let (increment_ratio, verdict) = if s2.abs() == 0.0 || d2.abs() <= 1e-12 * s2.abs() {
        (None, SeriesVerdict::Convergent)
    } else if d1 <= 0.0 {
        (None, SeriesVerdict::Undetermined)
    } else {
        let r = d2 / d1;
        let v = if r >= DIVERGENT_RATIO {
            SeriesVerdict::Divergent
        } else if r <= CONVERGENT_RATIO {
            SeriesVerdict::Convergent
        } else {
            SeriesVerdict::Undetermined
        };
        (Some(r), v)
    };
    Some(DivergenceProbe {
        series: label,
        partial_sums,
        increment_ratio,
        verdict,
    })
}
