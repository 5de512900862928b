//! Quick end-to-end comparison of the fast paths against [`crate::oracle`].

use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bohr::{count_bohr, BohrSetSpec};
use crate::counting::{count, CountMode, CountOptions, CountQuery};
use crate::experiments::rng::{random_frac, stream_rng, unit_f64};
use crate::fixedpoint::{frac_mul, Frac64};
use crate::geometry::{volume_b_exact, volume_monte_carlo, BoxKind, ProductRegion};
use crate::oracle;
use crate::predictors::{euler_phi_sieve, psi_abh, psi_times};
use crate::psi::ApproxFunction;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, failures: Vec<String>, total: usize) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{total} cases")
        } else {
            format!(
                "{} of {total} failed; first: {}",
                failures.len(),
                failures[0]
            )
        },
    }
}

fn random_psi(rng: &mut ChaCha8Rng) -> ApproxFunction {
    match (unit_f64(rng) * 3.0) as u32 {
        0 => ApproxFunction::constant(unit_f64(rng) * 0.5).expect("in range"),
        1 => ApproxFunction::power_log(0.05 + unit_f64(rng), unit_f64(rng) * 1.5, 0.0)
            .expect("valid"),
        _ => ApproxFunction::power_log(0.05 + unit_f64(rng), unit_f64(rng), unit_f64(rng) * 2.0)
            .expect("valid"),
    }
}

/// Random instance for `mode` with `N = n`.
pub fn random_query(mode: CountMode, seed: u64, stream: u64, n: u64) -> CountQuery {
    let mut rng = stream_rng(seed, stream);
    let k = match mode {
        CountMode::CoprimePairs => 1,
        CountMode::Simultaneous => 1 + (unit_f64(&mut rng) * 3.0) as usize,
        _ => 2 + (unit_f64(&mut rng) * 2.0) as usize,
    };
    let alpha: Vec<Frac64> = (0..k).map(|_| random_frac(&mut rng)).collect();
    let psi = random_psi(&mut rng);
    let mut q = CountQuery::new(alpha, n, psi, mode);
    if !matches!(mode, CountMode::CoprimePairs) && unit_f64(&mut rng) < 0.5 {
        q.gamma = (0..k).map(|_| random_frac(&mut rng)).collect();
    }
    q
}

pub fn run_selfcheck(seed: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    let phi = euler_phi_sieve(10_000).expect("small sieve");
    let fails: Vec<String> = (1..=10_000u64)
        .filter(|&n| phi.get(n) as u64 != oracle::phi_brute(n))
        .map(|n| format!("phi({n})"))
        .collect();
    out.push(outcome("totient_sieve", fails, 10_000));

    let mut fails = Vec::new();
    let mut rng = stream_rng(seed, u64::MAX);
    for _ in 0..1000 {
        let a = random_frac(&mut rng);
        let m = rng.next_u64() % 1_000_000 + 1;
        let n = rng.next_u64() % 1_000_000 + 1;
        if frac_mul(m + n, a) != frac_mul(m, a) + frac_mul(n, a) {
            fails.push(format!("additivity at a = {a}"));
        }
    }
    out.push(outcome("frac_mul_additivity", fails, 1000));

    let mut fails = Vec::new();
    let mut total = 0;
    for (mi, mode) in CountMode::ALL.into_iter().enumerate() {
        for t in 0..5u64 {
            let q = random_query(mode, seed, 1000 * mi as u64 + t, 1000);
            total += 1;
            let fast = count(&q, &CountOptions::counts_only()).map(|r| r.count);
            let slow = oracle::count(&q);
            match (fast, slow) {
                (Ok(a), Ok(b)) if a == b => {}
                (a, b) => fails.push(format!("{mode} trial {t}: {a:?} vs {b:?}")),
            }
        }
    }
    out.push(outcome("counters_vs_oracle", fails, total));

    let mut fails = Vec::new();
    for t in 0..5u64 {
        let mut rng = stream_rng(seed, 5000 + t);
        let alpha = vec![random_frac(&mut rng)];
        let gamma = vec![random_frac(&mut rng)];
        let delta = vec![0.01 + 0.49 * unit_f64(&mut rng)];
        let spec =
            BohrSetSpec::new(1000, alpha.clone(), gamma.clone(), delta.clone()).expect("valid");
        let fast = count_bohr(&spec).expect("valid");
        let slow = oracle::bohr_count(&alpha, &gamma, &delta, 1000);
        if fast != slow {
            fails.push(format!("trial {t}: {fast} vs {slow}"));
        }
    }
    out.push(outcome("bohr_vs_oracle", fails, 5));

    let mut fails = Vec::new();
    for (k, lam) in [(1, 0.3), (2, 0.5), (3, 0.1)] {
        let region = ProductRegion::new(k, lam, BoxKind::UnitBox).expect("valid");
        let mc = volume_monte_carlo(&region, 1_000_000, seed).expect("valid");
        let exact = volume_b_exact(k, lam).expect("valid");
        if (mc.estimate - exact).abs() > 4.0 * mc.stderr {
            fails.push(format!(
                "k = {k}, lambda = {lam}: {} vs {exact}",
                mc.estimate
            ));
        }
    }
    out.push(outcome("volume_monte_carlo", fails, 3));

    let mut fails = Vec::new();
    let half = ApproxFunction::constant(0.5).expect("valid");
    let v = psi_abh(3, &half, &phi).expect("covered");
    if (v - 13.0 / 6.0).abs() > 1e-12 {
        fails.push(format!("psi_abh(3) = {v}"));
    }
    let eighth = ApproxFunction::constant(0.125).expect("valid");
    let v = psi_times(100, 2, &eighth).expect("valid");
    if (v - 12.5 * std::f64::consts::LN_2).abs() > 1e-12 {
        fails.push(format!("psi_times = {v}"));
    }
    out.push(outcome("predictor_closed_forms", fails, 2));

    out
}
