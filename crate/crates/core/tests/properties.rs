use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use multapprox::bohr::{count_bohr, count_bohr_hat, enumerate_bohr, BohrSetSpec};
use multapprox::counting::{count, count_prefixes, CountMode, CountOptions, CountQuery};
use multapprox::experiments::rng::{random_frac, stream_rng};
use multapprox::experiments::{run_plan, ExperimentPlan, PlanTheorem};
use multapprox::exponents::{estimate_mult_exponent, littlewood_records};
use multapprox::geometry::{volume_b_exact, volume_c_exact};
use multapprox::predictors::{psi_times, psi_times_log, PredictorKind, PredictorSeries};
use multapprox::{ApproxFunction, Frac64};

fn frac() -> impl Strategy<Value = Frac64> {
    any::<u64>().prop_map(Frac64::from_raw)
}

fn psi_strategy() -> impl Strategy<Value = ApproxFunction> {
    prop_oneof![
        (0.0..=0.5f64).prop_map(|c| ApproxFunction::constant(c).unwrap()),
        (0.05..2.0f64, 0.0..1.6f64, 0.0..2.0f64)
            .prop_map(|(c, k, a)| ApproxFunction::power_log(c, k, a).unwrap()),
    ]
}

fn mode_strategy() -> impl Strategy<Value = CountMode> {
    prop::sample::select(CountMode::ALL.to_vec())
}

/// A valid query for `mode`; k and γ are adjusted to what the mode accepts.
fn query(
    mode: CountMode,
    alpha: Vec<Frac64>,
    gamma: Vec<Frac64>,
    n: u64,
    psi: ApproxFunction,
) -> CountQuery {
    let (alpha, gamma) = match mode {
        CountMode::CoprimePairs => (alpha[..1].to_vec(), vec![Frac64::ZERO]),
        _ => (alpha, gamma),
    };
    CountQuery::new(alpha, n, psi, mode).with_gamma(gamma)
}

fn n_count(q: &CountQuery) -> u64 {
    count(q, &CountOptions::counts_only()).unwrap().count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_symmetric_and_in_range(a in frac()) {
        let d = a.dist_nearest(Frac64::ZERO).value();
        prop_assert_eq!(d, (Frac64::ZERO - a).dist_nearest(Frac64::ZERO).value());
        prop_assert!((0.0..=0.5).contains(&d));
    }

    #[test]
    fn frac_mul_additive(a in frac(), m in 0u64..u64::MAX / 2, n in 0u64..u64::MAX / 2) {
        prop_assert_eq!(a.frac_mul(m + n), a.frac_mul(m) + a.frac_mul(n));
    }

    #[test]
    fn streaming_equals_frac_mul(a in frac(), n in 0u64..5000) {
        let mut acc = Frac64::ZERO;
        for _ in 0..n {
            acc += a;
        }
        prop_assert_eq!(acc, a.frac_mul(n));
    }

    #[test]
    fn psi_eval_in_range(psi in psi_strategy(), n in 1u64..u64::MAX) {
        let v = psi.eval(n).unwrap();
        prop_assert!((0.0..=0.5).contains(&v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_monotone_in_n(
        mode in mode_strategy(),
        alpha in prop::collection::vec(frac(), 2),
        gamma in prop::collection::vec(frac(), 2),
        psi in psi_strategy(),
        n in 10u64..3000,
    ) {
        // The uniform count compares every n with ψ(N), so it can only be
        // monotone in N when ψ is constant.
        let psi = if mode == CountMode::MultiplicativeUniform { ApproxFunction::constant(psi.eval(n).unwrap()).unwrap() } else { psi };
        let q = query(mode, alpha, gamma, n, psi);
        let checkpoints = [n / 7 + 1, n / 3 + 1, n / 2 + 1, n];
        let prefix = count_prefixes(&q, &checkpoints, &CountOptions::counts_only()).unwrap();
        for w in prefix.windows(2) {
            prop_assert!(w[0].count <= w[1].count);
        }
        for (c, r) in checkpoints.iter().zip(&prefix) {
            let mut one = q.clone();
            one.n = *c;
            if mode == CountMode::RelaxedPairs {
                // Each prefix shares the cap of the longest range.
                continue;
            }
            prop_assert_eq!(n_count(&one), r.count);
        }
    }

    #[test]
    fn counts_monotone_in_psi(
        mode in mode_strategy(),
        alpha in prop::collection::vec(frac(), 2),
        gamma in prop::collection::vec(frac(), 2),
        c in 0.05..1.0f64,
        scale in 1.0..4.0f64,
        kappa in 0.0..1.5f64,
    ) {
        let small = query(mode, alpha.clone(), gamma.clone(), 2000, ApproxFunction::power_log(c, kappa, 0.0).unwrap());
        let large = query(mode, alpha, gamma, 2000, ApproxFunction::power_log(c * scale, kappa, 0.0).unwrap());
        prop_assert!(n_count(&small) <= n_count(&large));
    }

    #[test]
    fn integer_shift_invariance(
        mode in mode_strategy(),
        alpha in prop::collection::vec(-1.0e6..1.0e6f64, 2),
        m in -1000i64..1000,
        psi in psi_strategy(),
    ) {
        let a: Vec<Frac64> = alpha.iter().map(|&x| Frac64::from_real(x).unwrap()).collect();
        let shifted: Vec<Frac64> = alpha.iter().map(|&x| Frac64::from_real(x + m as f64).unwrap()).collect();
        let base = n_count(&query(mode, a.clone(), vec![Frac64::ZERO; 2], 1500, psi.clone()));
        prop_assume!(a == shifted);
        prop_assert_eq!(base, n_count(&query(mode, shifted, vec![Frac64::ZERO; 2], 1500, psi)));
    }

    #[test]
    fn relaxed_dominates_multiplicative(
        alpha in prop::collection::vec(frac(), 2..=3),
        gamma_head in frac(),
        psi in psi_strategy(),
        n in 1u64..1500,
    ) {
        let mut gamma = vec![Frac64::ZERO; alpha.len()];
        gamma[0] = gamma_head;
        let m = n_count(&query(CountMode::Multiplicative, alpha.clone(), gamma.clone(), n, psi.clone()));
        let r = n_count(&query(CountMode::RelaxedPairs, alpha, gamma, n, psi));
        prop_assert!(r >= m);
    }

    #[test]
    fn bohr_symmetric_and_nested(a in frac(), d1 in 0.0..0.5f64, d2 in 0.0..0.5f64) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let small = BohrSetSpec::new(800, vec![a], vec![Frac64::ZERO], vec![lo]).unwrap();
        let big = BohrSetSpec::new(800, vec![a], vec![Frac64::ZERO], vec![hi]).unwrap();
        let s = enumerate_bohr(&small).unwrap();
        let b = enumerate_bohr(&big).unwrap();
        prop_assert!(s.contains(&0));
        for x in &s {
            prop_assert!(s.contains(&-x));
            prop_assert!(b.contains(x));
        }
    }

    #[test]
    fn bohr_hat_close_to_positive_half(a in frac(), g in frac(), delta in 0.01..0.5f64, eps in 0.01..0.5f64) {
        let n = 5000u64;
        let spec = BohrSetSpec::new(n, vec![a], vec![g], vec![delta]).unwrap();
        let positive = enumerate_bohr(&spec).unwrap().into_iter().filter(|&x| x >= 1).count() as f64;
        let hat = count_bohr_hat(&spec, eps).unwrap() as f64;
        prop_assert!(hat <= positive);
        prop_assert!(positive - hat <= (n as f64).powf(eps.sqrt()) + 1.0);
        prop_assert!(count_bohr(&spec).unwrap() as f64 >= positive);
    }

    #[test]
    fn volume_monotone_and_scaled(k in 1usize..6, l1 in 0.001..1.0f64, l2 in 0.001..1.0f64) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        prop_assert!(volume_b_exact(k, lo).unwrap() <= volume_b_exact(k, hi).unwrap());
        // An extra coordinate in [0,1] only shrinks the product.
        prop_assert!(volume_b_exact(k + 1, lo).unwrap() >= volume_b_exact(k, lo).unwrap());
        let c = lo / (1u64 << k) as f64;
        let scaled = (1u64 << k) as f64 * volume_c_exact(k, c).unwrap();
        prop_assert!((scaled - volume_b_exact(k, lo).unwrap()).abs() <= 1e-15 * scaled.max(1e-300));
    }

    #[test]
    fn predictors_non_decreasing(k in 2usize..4, c in 0.01..0.25f64, kappa in 0.0..1.5f64, a in 0.0..2.0f64) {
        let psi = ApproxFunction::power_log(c / (1u64 << k) as f64, kappa, a).unwrap();
        let pts = [1u64, 10, 100, 1000, 10_000];
        for kind in [PredictorKind::SchmidtPsiK, PredictorKind::WangYuPsiTimes, PredictorKind::LogPsiTimes, PredictorKind::Tk] {
            let s = PredictorSeries::compute(kind, k, &psi, &pts, None).unwrap();
            prop_assert!(!s.outside_regime);
            let v: Vec<f64> = s.partial_sums.values().copied().collect();
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1]), "{:?} {:?}", kind, v);
        }
    }

    #[test]
    fn plan_counts_monotone_in_checkpoints(seed in any::<u64>(), c in 1000u64..20_000) {
        let psi = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
        let short = run_plan(&ExperimentPlan::new(PlanTheorem::WangYu, 2, psi.clone(), vec![c], 3, seed)).unwrap();
        let long = run_plan(&ExperimentPlan::new(PlanTheorem::WangYu, 2, psi, vec![c + c / 2], 3, seed)).unwrap();
        for (s, l) in short.records.iter().zip(&long.records) {
            prop_assert_eq!(&s.alpha, &l.alpha);
            prop_assert!(s.points[0].count <= l.points[0].count);
        }
    }
}

#[test]
fn psi_times_comparable_to_log_form() {
    // Terms with ψ(n) ≥ 2^-k contribute nothing to Ψ^×, so slow decay needs
    // a longer range before the two sums are comparable.
    for (kappa, from) in [
        (0.3, 100_000u64),
        (0.5, 1000),
        (0.6, 1000),
        (1.0, 1000),
        (1.5, 1000),
    ] {
        let psi = ApproxFunction::power_log(1.0, kappa, 0.0).unwrap();
        for n in [1000u64, 10_000, 100_000, 1_000_000]
            .into_iter()
            .filter(|&n| n >= from)
        {
            let r = psi_times(n, 2, &psi).unwrap() / psi_times_log(n, 2, &psi).unwrap();
            assert!((0.1..=10.0).contains(&r), "kappa {kappa}, N {n}: {r}");
        }
    }
}

#[test]
fn non_increasing_flag_matches_scan() {
    for psi in [
        ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap(),
        ApproxFunction::power_log(3.0, 0.2, 1.5).unwrap(),
        ApproxFunction::constant(0.3).unwrap(),
    ] {
        assert!(psi.non_increasing());
        let mut prev = psi.eval(1).unwrap();
        for n in 2..=1_000_000 {
            let v = psi.eval(n).unwrap();
            assert!(v <= prev, "{psi:?} increases at {n}");
            prev = v;
        }
    }
}

#[test]
fn exponent_and_littlewood_monotone_in_n() {
    let a = [Frac64::frac_sqrt(2), Frac64::frac_sqrt(11)];
    let mut prev_e = f64::NEG_INFINITY;
    let mut prev_l = f64::INFINITY;
    for n in [1000u64, 10_000, 100_000, 500_000] {
        let e = estimate_mult_exponent(&a, n, 100).unwrap().value;
        let l = littlewood_records(a[0], a[1], n)
            .unwrap()
            .final_value()
            .unwrap();
        assert!(e >= prev_e && l <= prev_l);
        prev_e = e;
        prev_l = l;
    }
}

#[test]
fn streaming_spot_checks() {
    // 10^5 random (α, n) pairs: the blocked counter's per-n decisions equal a
    // direct frac_mul evaluation.
    let mut rng = stream_rng(77, 0);
    let psi = ApproxFunction::power_log(1.0, 0.5, 0.0).unwrap();
    let mut checked = 0;
    while checked < 100_000 {
        let alpha = vec![random_frac(&mut rng), random_frac(&mut rng)];
        let q = CountQuery::new(alpha.clone(), 100_000, psi.clone(), CountMode::Simultaneous);
        let r = count(
            &q,
            &CountOptions {
                witness_cap: usize::MAX,
                radius_cap: None,
            },
        )
        .unwrap();
        let hits: Vec<u64> = r
            .witnesses
            .iter()
            .map(|w| serde_json::to_value(w).unwrap().as_u64().unwrap())
            .collect();
        let direct: Vec<u64> = (1..=100_000u64)
            .filter(|&n| {
                let p = psi.eval(n).unwrap();
                alpha
                    .iter()
                    .all(|a| a.frac_mul(n).dist_nearest(Frac64::ZERO).value() < p)
            })
            .collect();
        assert_eq!(hits, direct);
        checked += 100_000;
    }
}

#[test]
fn trial_alpha_uniform_chi_square() {
    let mut buckets = [0u64; 256];
    let samples = 10_000u64;
    for t in 0..samples {
        let a = random_frac(&mut stream_rng(2024, t));
        buckets[(a.raw() >> 56) as usize] += 1;
    }
    let expected = samples as f64 / 256.0;
    let stat: f64 = buckets
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(255.0).unwrap().cdf(stat);
    assert!(p > 1e-6, "chi-square {stat}, p = {p}");
}
