//! Seeded batches of random-`α` trials compared against a predictor.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::rng::{random_frac, stream_rng};
use crate::counting::{count_prefixes, CountMode, CountOptions, CountQuery};
use crate::error::{invalid, parse_err, Error, Result};
use crate::exponents::{estimate_mult_exponent, DEFAULT_N_MIN};
use crate::fixedpoint::Frac64;
use crate::predictors::{euler_phi_sieve, PredictorKind, PredictorSeries};
use crate::psi::{classify, ApproxFunction, ClassifyOptions, HypothesisReport, Theorem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanTheorem {
    Schmidt,
    WangYu,
    Abh,
    MainThm,
    FibreThm,
    UniformCompanion,
}

impl PlanTheorem {
    pub const ALL: [PlanTheorem; 6] = [
        PlanTheorem::Schmidt,
        PlanTheorem::WangYu,
        PlanTheorem::Abh,
        PlanTheorem::MainThm,
        PlanTheorem::FibreThm,
        PlanTheorem::UniformCompanion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlanTheorem::Schmidt => "schmidt",
            PlanTheorem::WangYu => "wang_yu",
            PlanTheorem::Abh => "abh",
            PlanTheorem::MainThm => "main",
            PlanTheorem::FibreThm => "fibre",
            PlanTheorem::UniformCompanion => "uniform",
        }
    }

    pub fn count_mode(self) -> CountMode {
        match self {
            PlanTheorem::Schmidt => CountMode::Simultaneous,
            PlanTheorem::WangYu | PlanTheorem::MainThm | PlanTheorem::FibreThm => {
                CountMode::Multiplicative
            }
            PlanTheorem::Abh => CountMode::CoprimePairs,
            PlanTheorem::UniformCompanion => CountMode::MultiplicativeUniform,
        }
    }

    pub fn default_predictor(self) -> PredictorKind {
        match self {
            PlanTheorem::Schmidt => PredictorKind::SchmidtPsiK,
            PlanTheorem::WangYu => PredictorKind::WangYuPsiTimes,
            PlanTheorem::Abh => PredictorKind::AbhPsi,
            PlanTheorem::MainThm | PlanTheorem::FibreThm => PredictorKind::LogPsiTimes,
            PlanTheorem::UniformCompanion => PredictorKind::UniformVolume,
        }
    }

    fn hypotheses(self) -> Theorem {
        match self {
            PlanTheorem::Schmidt => Theorem::Schmidt,
            PlanTheorem::WangYu | PlanTheorem::UniformCompanion => Theorem::WangYu,
            PlanTheorem::Abh => Theorem::Abh,
            PlanTheorem::MainThm => Theorem::MainThm,
            PlanTheorem::FibreThm => Theorem::FibreThm,
        }
    }
}

impl fmt::Display for PlanTheorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlanTheorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        PlanTheorem::ALL
            .into_iter()
            .find(|p| p.name() == t)
            .or(match t.as_str() {
                "wangyu" => Some(PlanTheorem::WangYu),
                "mainthm" => Some(PlanTheorem::MainThm),
                "fibrethm" | "fiber" => Some(PlanTheorem::FibreThm),
                "uniform_companion" | "uniformcompanion" => Some(PlanTheorem::UniformCompanion),
                _ => None,
            })
            .ok_or_else(|| parse_err("theorem", s, "unknown experiment theorem"))
    }
}

/// Coordinates `α_1, …, α_{k−1}` held fixed across trials, with their
/// declared multiplicative exponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fibre {
    pub alpha: Vec<Frac64>,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub theorem: PlanTheorem,
    pub k: usize,
    pub psi: ApproxFunction,
    /// Length `k`; empty means all zeros.
    pub gamma: Vec<Frac64>,
    pub checkpoints: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub fixed_fibre: Option<Fibre>,
    pub kappa: Option<f64>,
    /// Replaces the theorem's default predictor.
    pub predictor: Option<PredictorKind>,
}

impl ExperimentPlan {
    pub fn new(
        theorem: PlanTheorem,
        k: usize,
        psi: ApproxFunction,
        checkpoints: Vec<u64>,
        trials: u64,
        seed: u64,
    ) -> Self {
        ExperimentPlan {
            theorem,
            k,
            psi,
            gamma: Vec::new(),
            checkpoints,
            trials,
            seed,
            fixed_fibre: None,
            kappa: None,
            predictor: None,
        }
    }

    pub fn predictor_kind(&self) -> PredictorKind {
        self.predictor.unwrap_or(self.theorem.default_predictor())
    }

    /// Shift vector actually used, with the theorem's forced zeros applied.
    pub fn effective_gamma(&self) -> Vec<Frac64> {
        let mut g = if self.gamma.is_empty() {
            vec![Frac64::ZERO; self.k]
        } else {
            self.gamma.clone()
        };
        match self.theorem {
            PlanTheorem::WangYu | PlanTheorem::Abh | PlanTheorem::UniformCompanion => {
                g.fill(Frac64::ZERO)
            }
            PlanTheorem::MainThm | PlanTheorem::FibreThm => {
                if let Some(last) = g.last_mut() {
                    *last = Frac64::ZERO;
                }
            }
            PlanTheorem::Schmidt => {}
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.checkpoints.is_empty() {
            return Err(invalid("no checkpoints"));
        }
        if self.checkpoints[0] == 0 || self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "checkpoints must be positive and strictly increasing",
            ));
        }
        if !self.gamma.is_empty() && self.gamma.len() != self.k {
            return Err(invalid(format!(
                "gamma has {} coordinates, k = {}",
                self.gamma.len(),
                self.k
            )));
        }
        match self.theorem {
            PlanTheorem::Abh if self.k != 1 => return Err(invalid("ABH plans need k = 1")),
            PlanTheorem::Schmidt if self.k == 0 => return Err(invalid("k must be at least 1")),
            PlanTheorem::WangYu
            | PlanTheorem::MainThm
            | PlanTheorem::FibreThm
            | PlanTheorem::UniformCompanion
                if self.k < 2 =>
            {
                return Err(invalid(format!("{} plans need k >= 2", self.theorem)));
            }
            _ => {}
        }
        if matches!(self.theorem, PlanTheorem::MainThm | PlanTheorem::FibreThm)
            && self.kappa.is_none()
        {
            return Err(invalid(format!("{} plans need kappa", self.theorem)));
        }
        if self.theorem == PlanTheorem::FibreThm && self.fixed_fibre.is_none() {
            return Err(invalid("fibre plans need a fixed fibre"));
        }
        if let Some(f) = &self.fixed_fibre {
            if f.alpha.len() + 1 != self.k {
                return Err(invalid(format!(
                    "fibre has {} coordinates, expected k - 1 = {}",
                    f.alpha.len(),
                    self.k - 1
                )));
            }
        }
        self.psi
            .ensure_domain(*self.checkpoints.last().expect("non-empty"))
    }

    pub fn hypothesis_report(&self) -> HypothesisReport {
        let opts = ClassifyOptions {
            k: self.k,
            kappa: self.kappa,
            fibre_exponent: self.fixed_fibre.as_ref().map(|f| f.w),
            ..ClassifyOptions::default()
        };
        classify(&self.psi, self.theorem.hypotheses(), &opts)
    }

    fn sample_alpha(&self, trial: u64) -> Vec<Frac64> {
        let mut rng = stream_rng(self.seed, trial);
        match &self.fixed_fibre {
            Some(f) => {
                let mut a = f.alpha.clone();
                a.push(random_frac(&mut rng));
                a
            }
            None => (0..self.k).map(|_| random_frac(&mut rng)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointRecord {
    #[serde(rename = "N")]
    pub n: u64,
    pub count: u64,
    pub predictor: f64,
    /// `count / predictor`; absent when the predictor is not positive.
    pub ratio: Option<f64>,
    pub cap_exceeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub alpha: Vec<Frac64>,
    pub points: Vec<CheckpointRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointSummary {
    #[serde(rename = "N")]
    pub n: u64,
    pub predictor: f64,
    pub trials_with_ratio: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanOutcome {
    pub theorem: PlanTheorem,
    pub k: usize,
    pub predictor_kind: PredictorKind,
    pub gamma: Vec<Frac64>,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<CheckpointSummary>,
    pub hypotheses: HypothesisReport,
    pub predictor_outside_regime: bool,
    /// Finite-range exponent estimate of the fixed fibre, for comparison with
    /// the declared `w`.
    pub fibre_exponent_estimate: Option<f64>,
    pub warnings: Vec<String>,
}

impl PlanOutcome {
    pub fn hypotheses_violated(&self) -> bool {
        self.hypotheses.violations().next().is_some()
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

fn summarize(n: u64, predictor: f64, ratios: &[f64]) -> CheckpointSummary {
    let mut v = ratios.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    CheckpointSummary {
        n,
        predictor,
        trials_with_ratio: v.len(),
        median: quantile(&v, 0.5),
        q1,
        q3,
        iqr: q1.zip(q3).map(|(a, b)| b - a),
        min: v.first().copied(),
        max: v.last().copied(),
    }
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    plan.validate()?;
    let kind = plan.predictor_kind();
    let max_n = *plan.checkpoints.last().expect("validated");
    let mut warnings = Vec::new();

    let hypotheses = plan.hypothesis_report();
    for v in hypotheses.violations() {
        warnings.push(format!("hypothesis {} fails: {}", v.name, v.note));
    }
    let gamma = plan.effective_gamma();
    if !plan.gamma.is_empty() && gamma != plan.gamma {
        warnings.push(format!("{} forces some shifts to zero", plan.theorem));
    }

    let phi = if kind == PredictorKind::AbhPsi {
        Some(euler_phi_sieve(max_n)?)
    } else {
        None
    };
    let series =
        PredictorSeries::compute(kind, plan.k, &plan.psi, &plan.checkpoints, phi.as_ref())?;
    if series.outside_regime {
        warnings.push("predictor summed terms with psi(n) >= 2^-k".to_string());
    }

    let fibre_exponent_estimate = match &plan.fixed_fibre {
        Some(f) => {
            let n = max_n.clamp(DEFAULT_N_MIN + 1, 1_000_000);
            Some(estimate_mult_exponent(&f.alpha, n, DEFAULT_N_MIN)?.value)
        }
        None => None,
    };

    let mode = plan.theorem.count_mode();
    let records: Vec<TrialRecord> = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let alpha = plan.sample_alpha(t);
            let q = CountQuery::new(alpha.clone(), max_n, plan.psi.clone(), mode)
                .with_gamma(gamma.clone());
            let counts = count_prefixes(&q, &plan.checkpoints, &CountOptions::counts_only())?;
            let points = counts
                .into_iter()
                .map(|c| {
                    let predictor = series.at(c.n).expect("checkpoint present");
                    CheckpointRecord {
                        n: c.n,
                        count: c.count,
                        predictor,
                        ratio: (predictor > 0.0).then(|| c.count as f64 / predictor),
                        cap_exceeded: c.cap_exceeded,
                    }
                })
                .collect();
            Ok(TrialRecord {
                trial: t,
                alpha,
                points,
            })
        })
        .collect::<Result<_>>()?;

    let summaries: Vec<CheckpointSummary> = plan
        .checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let ratios: Vec<f64> = records.iter().filter_map(|r| r.points[i].ratio).collect();
            summarize(n, series.at(n).expect("checkpoint present"), &ratios)
        })
        .collect();
    for s in &summaries {
        if s.predictor <= 0.0 {
            warnings.push(format!("predictor is zero at N = {}; ratios omitted", s.n));
        }
    }

    Ok(PlanOutcome {
        theorem: plan.theorem,
        k: plan.k,
        predictor_kind: kind,
        gamma,
        records,
        summaries,
        hypotheses,
        predictor_outside_regime: series.outside_regime,
        fibre_exponent_estimate,
        warnings,
    })
}
