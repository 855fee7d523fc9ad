//! One line per acceptance criterion, each at its stated tolerance.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ale_glue::ale_models::{burns_simanca, eguchi_hanson};
use ale_glue::cohomology::{
    increment_factor, mass_increment, pairing_mass, plan_blowups, plan_blowups_exact, topological_mass, total_increment,
    BlowupConfiguration, TopologicalMass,
};
use ale_glue::error::Error;
use ale_glue::experiments::{blowup, calibrate_two_point, solve_blowup};
use ale_glue::gluing::{glued_scalar_curvature_norm, two_point_sweep, CutoffProfile};
use ale_glue::mass::{adm_boundary_integral, fit_asymptotic_coefficient};
use ale_glue::scalarflat_solver::certify_threshold;
use ale_glue::validation::run_validation;
use ale_glue::weighted_analysis::{estimate_constants, loglog_slope, two_point_epsilon0};
use ale_glue::NormSpec;

const EPSILONS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
/// Chart point for the nearly flat end used by the solver runs.
const FAR_CHART: f64 = 1e4;
/// Chart point inside the curved region of Eguchi–Hanson.
const NEAR_CHART: f64 = 2.0;

fn report(n: usize, title: &str, passed: bool, detail: String) {
    println!("criterion {n} [{}] {title}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {n} failed: {detail}");
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let d: i64 = rng.gen_range(2..1000);
    let n: i64 = rng.gen_range(1..d);
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn criterion_1_exact_blowup_increment() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut cases = 0;
    for m in 2..=5 {
        for _ in 0..100 {
            let eps = random_rational(&mut rng);
            let base = TopologicalMass::exact(m, random_rational(&mut rng) - BigRational::one());
            let config = BlowupConfiguration::with_epsilons(m, base.clone(), std::slice::from_ref(&eps)).unwrap();
            let expected = BigRational::new(BigInt::from(m - 1), BigInt::from(2 * m - 1))
                * num_traits::pow(eps, 2 * (m - 1));
            let closed = topological_mass(&config).pi_coefficient - &base.pi_coefficient;
            let paired = pairing_mass(&config).pi_coefficient - &base.pi_coefficient;
            mismatches += usize::from(closed != expected) + usize::from(paired != expected);
            cases += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        "exact increment (m-1) eps^(2(m-1)) / ((2m-1) pi^(m-1))",
        mismatches == 0 && elapsed < 1.0,
        format!("{cases} cases, {mismatches} mismatches, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_2_mass_routes_agree() {
    let eh = eguchi_hanson::<f64>(1.0).unwrap();
    let radii = [10.0, 20.0, 40.0, 80.0, 160.0];
    let eh_mass = adm_boundary_integral(&eh, &radii).unwrap().mass;
    let eh_fit = fit_asymptotic_coefficient(&eh).unwrap();
    let bs = burns_simanca::<f64>(2).unwrap();
    let unit = adm_boundary_integral(&bs, &radii).unwrap().mass;
    let mut worst = 0.0f64;
    for eps in [0.5, 0.25] {
        let scaled = adm_boundary_integral(&bs.rescaled(eps), &radii).unwrap().mass;
        worst = worst.max((scaled / (unit * eps * eps) - 1.0).abs());
    }
    report(
        2,
        "Eguchi-Hanson mass vanishes, Burns-Simanca mass scales as eps^2",
        eh_mass.abs() <= 1e-4 && eh_fit.abs() <= 1e-6 && worst <= 5e-3,
        format!("|m_EH| = {:.2e}, |e_X| = {:.2e}, worst scaling error {worst:.2e}", eh_mass.abs(), eh_fit.abs()),
    );
}

#[test]
fn criterion_3_glued_curvature_scaling() {
    let eh = eguchi_hanson::<f64>(1.0).unwrap();
    let spec = NormSpec::default_for(2).with_delta(-0.5);
    let (mut r, mut norms) = (vec![], vec![]);
    for eps in EPSILONS {
        let pg = blowup(&eh, Some(NEAR_CHART), eps, CutoffProfile::default()).unwrap();
        norms.push(glued_scalar_curvature_norm(&pg, &spec).unwrap());
        r.push(pg.r_epsilon);
    }
    let slope = loglog_slope(&r, &norms);
    let floor = 4.0 - spec.delta - 0.3;
    report(
        3,
        "weighted curvature norm of the pre-glued metric vs r_eps",
        slope >= floor,
        format!("log-log slope {slope:.3} >= {floor:.2}"),
    );
}

#[test]
fn criterion_4_two_point_monotonicity() {
    let eh = eguchi_hanson::<f64>(1.0).unwrap();
    let spec = NormSpec::default_for(2);
    let cal = calibrate_two_point(&eh, NEAR_CHART, &EPSILONS, &spec).unwrap();
    let radii = [10.0, 30.0, 100.0, 300.0];
    let sweep = two_point_sweep(&eh, NEAR_CHART, &radii, &cal).unwrap();
    let family: Vec<_> = EPSILONS
        .iter()
        .map(|&e| blowup(&eh, Some(NEAR_CHART), e, CutoffProfile::default()).unwrap())
        .collect();
    let k_p = estimate_constants(&family, &spec, false).unwrap().k_p;
    let table = two_point_epsilon0(&eh, NEAR_CHART, &radii, &cal, k_p).unwrap();
    let r_star = sweep.r_star;
    let holds = r_star.is_some_and(|rs| {
        sweep
            .rows
            .iter()
            .filter(|row| row.r_q >= rs)
            .all(|row| row.c_q <= row.c_p && row.c_pq_bound <= row.c_p_bound)
    });
    let caveat = !table.caveats.is_empty();
    report(
        4,
        "two-point bounds monotone beyond R*",
        holds && caveat,
        format!("R* = {r_star:?}, rows {}, K_pq caveat attached: {caveat}", sweep.rows.len()),
    );
}

#[test]
fn criterion_5_contraction_below_threshold() {
    let eh = eguchi_hanson::<f64>(1.0).unwrap();
    let spec = NormSpec::default_for(2);
    let build = |e: f64| blowup(&eh, Some(FAR_CHART), e, CutoffProfile::default());
    let family: Vec<_> = EPSILONS.iter().map(|&e| build(e).unwrap()).collect();
    let constants = estimate_constants(&family, &spec, false).unwrap();
    let eps0 = constants.epsilon0;
    let threshold = certify_threshold(build, &constants, spec, 16.0 * eps0, 5).unwrap();
    let below: Vec<_> = threshold.checks.iter().filter(|c| c.epsilon < eps0).collect();
    let contracts = !below.is_empty()
        && below.iter().all(|c| {
            c.max_ratio <= 0.6 && c.max_pair_ratio <= 0.6 && c.first_iterate <= c.first_iterate_bound
        });
    let worst = below.iter().fold(0.0f64, |a, c| a.max(c.max_ratio).max(c.max_pair_ratio));
    report(
        5,
        "Picard contraction below the formula threshold",
        contracts && threshold.empirical_threshold >= eps0,
        format!(
            "eps0 = {eps0:.3e}, {} checks below, worst ratio {worst:.2e}, empirical threshold {:.3e}",
            below.len(),
            threshold.empirical_threshold
        ),
    );
}

#[test]
fn criterion_6_solved_mass_increment() {
    let eh = eguchi_hanson::<f64>(1.0).unwrap();
    let pg = blowup(&eh, Some(FAR_CHART), 0.05, CutoffProfile::default()).unwrap();
    let (solve, _) = solve_blowup(&pg, 512, 1e-8, 3).unwrap();
    report(
        6,
        "Newton-solved blow-up mass increment at eps = 0.05",
        solve.diagnostics.certified && solve.rel_err.abs() <= 0.01,
        format!(
            "increment {:.6e}, predicted {:.6e}, relative error {:.2e}",
            solve.mass_increment, solve.prediction, solve.rel_err
        ),
    );
}

#[test]
fn criterion_7_planner_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut exact_misses, mut rejections) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let m = rng.gen_range(2..=5);
        let eps0 = rng.gen_range(0.2..0.6);
        let base = -rng.gen_range(0.0..0.05);
        // gaps of up to a couple hundred capped blow-ups in each dimension
        let target = base + rng.gen_range(0.0..200.0) * mass_increment(m, 0.9 * eps0);
        let w = plan_blowups(base, target, m, eps0, 0.9).unwrap();
        let achieved = base + total_increment(m, &w);
        worst = worst.max((achieved - target).abs());

        let qb = -random_rational(&mut rng) / BigInt::from(20);
        let qt = &qb + random_rational(&mut rng) * num_traits::pow(BigRational::from_float(0.9 * eps0).unwrap(), 2 * (m - 1)) * BigInt::from(200);
        let weights = plan_blowups_exact(&qb, &qt, m, eps0, 0.9).unwrap();
        let sum = weights.iter().fold(BigRational::zero(), |a, w| a + &w.power);
        exact_misses += usize::from(&qb + increment_factor(m) * sum != qt);

        let below_real = matches!(plan_blowups(base, base - 1e-3, m, eps0, 0.9), Err(Error::TargetBelowBase { .. }));
        let below_exact = matches!(
            plan_blowups_exact(&qb, &(&qb - BigRational::one()), m, eps0, 0.9),
            Err(Error::TargetBelowBase { .. })
        );
        rejections += usize::from(below_real && below_exact);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        7,
        "planner reaches the target and rejects targets below base",
        worst <= 1e-12 && exact_misses == 0 && rejections == 100 && elapsed < 1.0,
        format!("worst real error {worst:.1e}, exact misses {exact_misses}, rejections {rejections}/100, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_8_invariant_suite() {
    let v = run_validation(7).unwrap();
    let summary: Vec<String> = v
        .checks
        .iter()
        .map(|c| format!("{} {:.1e}/{:.0e}", c.name, c.measured, c.tolerance))
        .collect();
    report(8, "property suites under validate", v.passed, summary.join("; "));
}
