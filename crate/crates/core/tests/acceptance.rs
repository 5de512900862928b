//! The ten acceptance criteria at their stated tolerances.
//!
//! Each test prints one `PASS` or `FAIL` line and then asserts. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use multapprox::bohr::{bohr_density_report, epsilon_select, u_n_prefixes, BohrSetSpec};
use multapprox::cli::run_cli;
use multapprox::counting::{count, CountMode, CountOptions, CountQuery};
use multapprox::experiments::rng::{random_frac, stream_rng, unit_f64};
use multapprox::experiments::{
    run_plan, write_outcome, ExperimentPlan, Fibre, Metadata, OutputFormat, PlanTheorem,
};
use multapprox::geometry::{volume_b_exact, volume_monte_carlo, BoxKind, ProductRegion};
use multapprox::oracle;
use multapprox::predictors::{euler_phi_sieve, psi_times_log, t_k, PredictorKind, PredictorSeries};
use multapprox::{ApproxFunction, Frac64};

fn verdict(id: u32, name: &str, passed: bool, detail: &str) {
    println!(
        "criterion {id:>2} {name}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {id} {name}: {detail}");
}

fn decades(max: u64) -> Vec<u64> {
    std::iter::successors(Some(10u64), |n| Some(n * 10))
        .take_while(|&n| n <= max)
        .collect()
}

/// Composite Simpson rule on `2m` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / (2 * m) as f64;
    let inner: f64 = (1..2 * m)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

#[test]
fn criterion_01_volume() {
    let mut worst_sigma: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    let mut fails = Vec::new();
    for k in 1..=4usize {
        for (i, lam) in [0.9, 0.5, 0.1, 0.01].into_iter().enumerate() {
            let region = ProductRegion::new(k, lam, BoxKind::UnitBox).unwrap();
            let mc = volume_monte_carlo(&region, 10_000_000, 100 * k as u64 + i as u64).unwrap();
            let exact = volume_b_exact(k, lam).unwrap();
            let sigma = (mc.estimate - exact).abs() / mc.stderr;
            worst_sigma = worst_sigma.max(sigma);
            if sigma > 3.0 {
                fails.push(format!("k={k} lambda={lam}: {sigma:.2} se"));
            }
            if k >= 2 {
                // λ + ∫_λ^1 vol_{k-1}(λ/x) dx with x = λ e^u.
                let f = |u: f64| lam * u.exp() * volume_b_exact(k - 1, (-u).exp()).unwrap();
                let rhs = lam + simpson(f, 0.0, -lam.ln(), 5000);
                let err = (rhs - exact).abs();
                worst_quad = worst_quad.max(err);
                if err > 1e-8 {
                    fails.push(format!("quadrature k={k} lambda={lam}: {err:e}"));
                }
            }
        }
    }
    let detail = format!(
        "max {worst_sigma:.2} standard errors, max quadrature error {worst_quad:.1e}; {fails:?}"
    );
    verdict(1, "volume lemma", fails.is_empty(), &detail);
}

#[test]
fn criterion_02_t_k_versus_psi_times() {
    let psi = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
    let points = decades(1_000_000);
    let t = PredictorSeries::compute(PredictorKind::Tk, 2, &psi, &points, None).unwrap();
    let p =
        PredictorSeries::compute(PredictorKind::WangYuPsiTimes, 2, &psi, &points, None).unwrap();
    let ratio = t.at(1_000_000).unwrap() / p.at(1_000_000).unwrap();
    let mut psi_1 = 0.0;
    let mut next = 0;
    let mut bound_fails = Vec::new();
    for n in 1..=1_000_000u64 {
        psi_1 += psi.eval(n).unwrap();
        if n == points[next] {
            let (tv, pv) = (t.at(n).unwrap(), p.at(n).unwrap());
            if (tv - pv).abs() > 5.0 * (psi_1 + 1.0) {
                bound_fails.push(n);
            }
            next += 1;
        }
    }
    let passed = (ratio - 1.0).abs() <= 0.05 && bound_fails.is_empty();
    let detail =
        format!("T_2/Psi_2^x = {ratio:.4} at N = 10^6; additive bound fails at {bound_fails:?}");
    verdict(2, "T_k ~ Psi_k^x", passed, &detail);
}

#[test]
fn criterion_03_schmidt() {
    let psi = ApproxFunction::constant(0.25).unwrap();
    let out = run_plan(&ExperimentPlan::new(
        PlanTheorem::Schmidt,
        1,
        psi,
        vec![1_000_000],
        20,
        3,
    ))
    .unwrap();
    let ratios: Vec<f64> = out
        .records
        .iter()
        .map(|r| r.points[0].ratio.unwrap())
        .collect();
    let all_in = ratios.iter().all(|r| (0.95..=1.05).contains(r));
    let med1 = out.summaries[0].median.unwrap();

    let psi2 = ApproxFunction::power_log(1.0, 0.25, 0.0).unwrap();
    let out2 = run_plan(&ExperimentPlan::new(
        PlanTheorem::Schmidt,
        2,
        psi2,
        vec![1_000_000],
        20,
        3,
    ))
    .unwrap();
    let med2 = out2.summaries[0].median.unwrap();

    let passed = all_in && (0.99..=1.01).contains(&med1) && (0.9..=1.1).contains(&med2);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let detail =
        format!("k=1 ratios in [{lo:.4}, {hi:.4}], median {med1:.4}; k=2 median {med2:.4}");
    verdict(3, "Schmidt counting", passed, &detail);
}

#[test]
fn criterion_04_abh() {
    let psi = ApproxFunction::constant(0.5).unwrap();
    let out = run_plan(&ExperimentPlan::new(
        PlanTheorem::Abh,
        1,
        psi.clone(),
        vec![100_000],
        20,
        4,
    ))
    .unwrap();
    let med = out.summaries[0].median.unwrap();
    let mut mismatches = Vec::new();
    for t in 0..5 {
        let alpha = random_frac(&mut stream_rng(44, t));
        let q = CountQuery::new(vec![alpha], 1000, psi.clone(), CountMode::CoprimePairs);
        let fast = count(&q, &CountOptions::counts_only()).unwrap().count;
        let naive = oracle::count(&q).unwrap();
        if fast != naive {
            mismatches.push((t, fast, naive));
        }
    }
    let passed = (0.97..=1.03).contains(&med) && mismatches.is_empty();
    verdict(
        4,
        "ABH coprime counting",
        passed,
        &format!("median {med:.4}; oracle mismatches {mismatches:?}"),
    );
}

#[test]
fn criterion_05_wang_yu() {
    let psi = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
    let plan = ExperimentPlan::new(
        PlanTheorem::WangYu,
        2,
        psi,
        vec![100_000, 10_000_000],
        10,
        5,
    );
    let out = run_plan(&plan).unwrap();
    let med = out.summaries[1].median.unwrap();
    let closer = out
        .records
        .iter()
        .filter(|r| {
            (r.points[1].ratio.unwrap() - 1.0).abs() < (r.points[0].ratio.unwrap() - 1.0).abs()
        })
        .count();
    let passed = (0.8..=1.2).contains(&med) && closer >= 8;
    let detail = format!(
        "median S/Psi_2^x = {:.4} at 10^5, {med:.4} at 10^7; {closer}/10 trials closer to 1",
        out.summaries[0].median.unwrap()
    );
    verdict(5, "Wang-Yu asymptotic", passed, &detail);
}

fn fibre_psi() -> ApproxFunction {
    ApproxFunction::power_log(1.0, 0.6, 0.0)
        .unwrap()
        .with_power_bound(0.5)
}

#[test]
fn criterion_06_fibre_lower_bound() {
    let mut plan = ExperimentPlan::new(
        PlanTheorem::FibreThm,
        2,
        fibre_psi(),
        decades(1_000_000),
        20,
        6,
    );
    plan.gamma = vec![Frac64::from_real(0.3).unwrap(), Frac64::ZERO];
    plan.kappa = Some(0.5);
    plan.fixed_fibre = Some(Fibre {
        alpha: vec![Frac64::golden()],
        w: 1.0,
    });
    let out = run_plan(&plan).unwrap();
    let last = out.summaries.len() - 1;
    let min_ratio = out.summaries[last].min.unwrap();
    let no_trend = out
        .records
        .iter()
        .filter(|r| r.points[last].ratio.unwrap() >= 0.5 * r.points[0].ratio.unwrap())
        .count();
    let passed = min_ratio >= 0.05 && no_trend >= 18;
    let detail = format!(
        "min ratio {min_ratio:.4} at N = 10^6 (median {:.4}); {no_trend}/20 trials without decay",
        out.summaries[last].median.unwrap()
    );
    verdict(6, "fibre lower bound", passed, &detail);
}

#[test]
fn criterion_07_u_n_surrogate() {
    let psi = fibre_psi();
    let eps = epsilon_select(2, 1.0, 0.5).unwrap().epsilon;
    let points = [10_000u64, 100_000, 1_000_000];
    let phi = euler_phi_sieve(1_000_000).unwrap();
    let u = u_n_prefixes(
        &[Frac64::golden()],
        &[Frac64::from_real(0.3).unwrap()],
        &psi,
        eps,
        &points,
        &phi,
    )
    .unwrap();
    let ratios: Vec<f64> = u
        .iter()
        .map(|&(n, v)| v / psi_times_log(n, 2, &psi).unwrap())
        .collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let passed = lo >= 0.02 && hi <= 10.0 * lo;
    verdict(
        7,
        "U_N surrogate",
        passed,
        &format!("epsilon {eps}, U_N/Psi~ = {ratios:?}"),
    );
}

#[test]
fn criterion_08_bohr() {
    let n = 100_000u64;
    let mut per_delta = Vec::new();
    for delta in [0.25, 0.1, 0.01] {
        let good = (0..20u64)
            .filter(|&s| {
                let alpha = random_frac(&mut stream_rng(800 + s, 0));
                let spec =
                    BohrSetSpec::new(n, vec![alpha], vec![Frac64::ZERO], vec![delta]).unwrap();
                let c = bohr_density_report(&spec).unwrap().count as f64;
                let expected = (2 * n + 1) as f64 * 2.0 * delta;
                (c - expected).abs() <= 0.1 * expected
            })
            .count();
        per_delta.push(good);
    }
    let big = 1_000_000u64;
    let spec = BohrSetSpec::new(
        big,
        vec![Frac64::golden()],
        vec![Frac64::ZERO],
        vec![(big as f64).powf(-0.25)],
    )
    .unwrap();
    let golden = bohr_density_report(&spec).unwrap().normalized_ratio;
    let passed = per_delta.iter().all(|&g| g >= 18) && (0.1..=10.0).contains(&golden);
    let detail = format!("within 10% for delta 0.25/0.1/0.01: {per_delta:?} of 20; golden normalized ratio {golden:.4}");
    verdict(8, "Bohr equidistribution", passed, &detail);
}

fn plan_bytes(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let psi = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
        let plan = ExperimentPlan::new(
            PlanTheorem::WangYu,
            2,
            psi,
            vec![1000, 100_000, 300_000],
            6,
            99,
        );
        let out = run_plan(&plan).unwrap();
        let mut buf = Vec::new();
        write_outcome(
            &out,
            &Metadata::standard(Some(99)),
            OutputFormat::Csv,
            &mut buf,
        )
        .unwrap();
        buf
    })
}

fn cli_bytes(threads: usize) -> Vec<u8> {
    let t = threads.to_string();
    let args = [
        "multapprox",
        "--threads",
        &t,
        "experiment",
        "--theorem",
        "main",
        "--k",
        "3",
        "--kappa",
        "0.5",
        "--psi",
        "powerlog:1,0.7,0",
        "--gamma",
        "0.1,0.2,0",
        "--checkpoints",
        "1000,200000",
        "--trials",
        "4",
        "--seed",
        "9",
        "--format",
        "json",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(
        run_cli(args, &mut out, &mut err),
        0,
        "{}",
        String::from_utf8_lossy(&err)
    );
    out
}

#[test]
fn criterion_09_exactness_and_determinism() {
    let mut fails = Vec::new();
    let phi = euler_phi_sieve(10_000).unwrap();
    if let Some(n) = (1..=10_000u64).find(|&n| phi.get(n) as u64 != oracle::phi_brute(n)) {
        fails.push(format!("phi({n})"));
    }
    let mut checked = 0;
    for (mi, mode) in CountMode::ALL.into_iter().enumerate() {
        for t in 0..10u64 {
            let q = multapprox::selfcheck::random_query(mode, 909, 100 * mi as u64 + t, 1000);
            let fast = count(&q, &CountOptions::counts_only()).unwrap().count;
            let naive = oracle::count(&q).unwrap();
            checked += 1;
            if fast != naive {
                fails.push(format!("{mode} instance {t}: {fast} vs {naive}"));
            }
        }
    }
    let reference = plan_bytes(1);
    for th in [2, 8] {
        if plan_bytes(th) != reference {
            fails.push(format!("plan output differs at {th} threads"));
        }
    }
    let reference = cli_bytes(1);
    for th in [2, 8] {
        if cli_bytes(th) != reference {
            fails.push(format!("cli output differs at {th} threads"));
        }
    }
    let detail =
        format!("sieve to 10^4, {checked} counter instances, 1/2/8 threads; failures {fails:?}");
    verdict(9, "exactness and determinism", fails.is_empty(), &detail);
}

#[test]
fn criterion_10_relaxed_dominance() {
    let mut exceptions = Vec::new();
    let mut strict = 0;
    for t in 0..50u64 {
        let mut rng = stream_rng(1010, t);
        let alpha = vec![random_frac(&mut rng), random_frac(&mut rng)];
        let gamma = if unit_f64(&mut rng) < 0.5 {
            vec![random_frac(&mut rng), random_frac(&mut rng)]
        } else {
            vec![Frac64::ZERO; 2]
        };
        let psi =
            ApproxFunction::power_log(0.05 + unit_f64(&mut rng), unit_f64(&mut rng) * 1.5, 0.0)
                .unwrap();
        let mult = CountQuery::new(alpha.clone(), 1000, psi.clone(), CountMode::Multiplicative)
            .with_gamma(gamma.clone());
        let relaxed = CountQuery::new(alpha, 1000, psi, CountMode::RelaxedPairs).with_gamma(gamma);
        let m = count(&mult, &CountOptions::counts_only()).unwrap().count;
        let r = count(&relaxed, &CountOptions::counts_only()).unwrap().count;
        if r < m {
            exceptions.push((t, r, m));
        }
        if r > m {
            strict += 1;
        }
    }
    let detail = format!("50 instances, {strict} strictly larger, exceptions {exceptions:?}");
    verdict(10, "relaxed-pair dominance", exceptions.is_empty(), &detail);
}

#[test]
fn t_k_grows_like_its_own_closed_form() {
    // Context for criterion 2: T_2 tracks 2^k Psi_2^x, not Psi_2^x.
    let psi = ApproxFunction::power_log(1.0, 1.0, 0.0).unwrap();
    let p = PredictorSeries::compute(PredictorKind::WangYuPsiTimes, 2, &psi, &[1_000_000], None)
        .unwrap();
    let r = t_k(1_000_000, 2, &psi).unwrap() / p.at(1_000_000).unwrap();
    assert!((4.0..5.0).contains(&r), "{r}");
}
