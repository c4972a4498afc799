//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria:
//! 1. blow-up benchmark hits the exact profile and the estimated time
//! 2. positivity over the sorption-model x grid x velocity matrix
//! 3. mass balance over the same matrix with reactions disabled
//! 4. second-order spatial convergence on the Neumann heat equation
//! 5. occupancy cap for single-species Langmuir sorption
//! 6. comparison ordering against the frozen-data auxiliary problems
//! 7. exponent calculator at quotable points plus upward closure in p
//! 8. byte-identical CSV output across repeated runs
//! 9. sorption structure checkers: four laws pass, a broken law fails

use bulksurf::cli::csv_text;
use bulksurf::exponents::{
    local_wellposedness_admissible, parse_rational, rat, sorption_growth_admissible,
    sorption_trace_admissible, ExponentQuery,
};
use bulksurf::harness::{
    builtin_scenarios, check_comparison, check_heat_convergence, check_henry_blowup,
    check_langmuir_cap, check_mass_balance, check_positivity, comparison_scenarios,
    langmuir_cap_scenarios, mass_balance_matrix, positivity_matrix, PropertyVerdict,
};
use bulksurf::model::{
    check_sorption_structure, SamplePlan, SorptionModel, SorptionRates, Verdict, Witness,
};
use bulksurf::stepper::run;
use num_rational::BigRational;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn announce(criterion: &str, ok: bool, detail: &str) {
    println!(
        "ACCEPT {criterion}: {} ({detail})",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "{criterion}: {detail}");
}

#[test]
fn criterion_1_henry_blowup() {
    let started = Instant::now();
    let reports = check_henry_blowup().expect("blow-up scenario must run");
    let elapsed = started.elapsed().as_secs_f64();
    for r in &reports {
        println!("  {}", r.line());
        assert_eq!(r.verdict, PropertyVerdict::Pass, "{}", r.line());
    }
    // reaching check_henry_blowup's result at all proves the termination
    // reason was blow-up; the three graded assertions cover the rest
    announce(
        "1 henry_blowup",
        elapsed < 10.0,
        &format!("3 assertions pass, runtime {elapsed:.2}s < 10s"),
    );
}

#[test]
fn criterion_2_positivity_matrix() {
    let started = Instant::now();
    let scenarios = positivity_matrix();
    assert_eq!(scenarios.len(), 15, "5 models x 3 grid/velocity layouts");
    let mut worst = f64::NEG_INFINITY;
    for scenario in &scenarios {
        let report = check_positivity(scenario).expect("scenario must run");
        println!("  {}", report.line());
        assert_eq!(report.verdict, PropertyVerdict::Pass, "{}", report.line());
        worst = worst.max(report.measured);
    }
    let elapsed = started.elapsed().as_secs_f64();
    announce(
        "2 positivity",
        worst <= 1e-12 && elapsed < 120.0,
        &format!("worst negativity {worst:.3e} <= 1e-12, runtime {elapsed:.2}s < 120s"),
    );
}

#[test]
fn criterion_3_mass_balance_matrix() {
    let scenarios = mass_balance_matrix();
    assert_eq!(scenarios.len(), 15);
    let mut worst = 0.0f64;
    for scenario in &scenarios {
        let report = check_mass_balance(scenario).expect("scenario must run");
        println!("  {}", report.line());
        assert_eq!(report.verdict, PropertyVerdict::Pass, "{}", report.line());
        worst = worst.max(report.measured);
    }
    announce(
        "3 mass_balance",
        worst <= 1e-8,
        &format!("worst relative drift {worst:.3e} <= 1e-8 over T = 2"),
    );
}

#[test]
fn criterion_4_heat_convergence() {
    let report = check_heat_convergence().expect("heat runs must complete");
    println!("  {}", report.line());
    announce(
        "4 heat_convergence",
        report.verdict == PropertyVerdict::Pass,
        &format!("observed L2 order {:.3} >= 1.8 on 32->64", report.measured),
    );
}

#[test]
fn criterion_5_langmuir_cap() {
    let scenarios = langmuir_cap_scenarios();
    assert_eq!(scenarios.len(), 2);
    // the two built-ins start at occupancy 0 and 1.5
    for scenario in &scenarios {
        let report = check_langmuir_cap(scenario).expect("cap scenario must run");
        println!("  {}", report.line());
        assert_eq!(report.verdict, PropertyVerdict::Pass, "{}", report.line());
        assert!(report.measured <= 1e-8);
    }
    announce("5 langmuir_cap", true, "max theta <= max(theta(0), 1) + 1e-8 over T = 5");
}

#[test]
fn criterion_6_comparison_ordering() {
    let mut checked = 0;
    for scenario in comparison_scenarios() {
        if scenario.name == "frozen_equality" {
            continue;
        }
        let report = check_comparison(&scenario).expect("comparison scenario must run");
        println!("  {}", report.line());
        assert_eq!(report.verdict, PropertyVerdict::Pass, "{}", report.line());
        checked += 1;
    }
    announce(
        "6 comparison",
        checked == 2,
        "c <= z + 1e-8 on the Henry+linear and Langmuir+triangular scenarios",
    );
}

#[test]
fn criterion_7_exponent_calculator() {
    // quotable point: d = 3, K = 1, p = 2.5 admissible for the trace and
    // local well-posedness predicates
    let q = ExponentQuery::new(3, parse_rational("2.5").unwrap(), 1, 1).unwrap();
    assert!(sorption_trace_admissible(&q).admissible);
    assert!(local_wellposedness_admissible(&q).admissible);

    // quotable boundary point: d = 2, K = 1, p = 1.0 admissible for the
    // growth-assumption predicate (p >= d/2)
    let q = ExponentQuery::new(2, parse_rational("1.0").unwrap(), 1, 1).unwrap();
    assert!(sorption_growth_admissible(&q).admissible);

    // upward closure in p: scan 1000 exact rationals per predicate for 20
    // random (d, K) tuples
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let d = rng.gen_range(1..8);
        let ko = rng.gen_range(1..6);
        let ks = rng.gen_range(1..6);
        for predicate in 0..3 {
            let mut was_admissible = false;
            for i in 0..1000i64 {
                let p: BigRational = rat(1) + BigRational::new(i.into(), 100.into());
                let query = ExponentQuery::new(d, p, ko, ks).unwrap();
                let admissible = match predicate {
                    0 => sorption_trace_admissible(&query).admissible,
                    1 => sorption_growth_admissible(&query).admissible,
                    _ => local_wellposedness_admissible(&query).admissible,
                };
                assert!(
                    admissible || !was_admissible,
                    "predicate {predicate} lost admissibility at d={d} K=({ko},{ks}) p=1+{i}/100"
                );
                was_admissible = was_admissible || admissible;
            }
        }
    }
    announce(
        "7 exponents",
        true,
        "quotable points match; 3 predicates upward-closed on 20 x 1000 p-scans",
    );
}

#[test]
fn criterion_8_csv_determinism() {
    let scenarios = builtin_scenarios();
    for scenario in &scenarios {
        let render = || {
            let (system, initial) = scenario.build().expect("scenario must build");
            let result = run(&system, initial, scenario.t_end, &scenario.config)
                .expect("scenario must run");
            csv_text(scenario.species.names(), &result)
        };
        let first = render();
        let second = render();
        assert_eq!(
            first.as_bytes(),
            second.as_bytes(),
            "scenario {} is not deterministic",
            scenario.name
        );
    }
    announce(
        "8 determinism",
        true,
        &format!("byte-identical CSV across two runs of {} scenarios", scenarios.len()),
    );
}

/// Henry rates with the sign flipped: violates monotonicity, the linear
/// bounds and both sign conditions.
struct NegatedHenry {
    inner: SorptionModel,
}

impl SorptionRates for NegatedHenry {
    fn n_species(&self) -> usize {
        SorptionRates::n_species(&self.inner)
    }
    fn rates_unchecked(&self, c_trace: &[f64], c_surf: &[f64]) -> Vec<f64> {
        self.inner
            .rates_unchecked(c_trace, c_surf)
            .into_iter()
            .map(|s| -s)
            .collect()
    }
    fn k_ad(&self) -> &[f64] {
        self.inner.k_ad()
    }
    fn k_de(&self) -> &[f64] {
        self.inner.k_de()
    }
}

#[test]
fn criterion_9_structure_checkers() {
    let plan = SamplePlan::new(3.0); // 4096 points by default
    assert_eq!(plan.n_points, 4096);
    let k_ad = vec![1.0, 0.8];
    let k_de = vec![0.5, 1.1];
    let sigma = vec![1.0, 1.4];
    let models = vec![
        SorptionModel::henry(k_ad.clone(), k_de.clone()).unwrap(),
        SorptionModel::langmuir(k_ad.clone(), k_de.clone(), sigma.clone(), 2.0).unwrap(),
        SorptionModel::volmer(k_ad.clone(), k_de.clone(), sigma.clone(), 2.0, 0.7).unwrap(),
        SorptionModel::van_der_waals(k_ad.clone(), k_de.clone(), sigma.clone(), 2.0, 0.7).unwrap(),
    ];
    for model in &models {
        let report = check_sorption_structure(model, &plan);
        println!("  {report}");
        assert_eq!(
            report.verdict,
            Verdict::Pass,
            "{} fails: {report}",
            model.variant().label()
        );
    }

    let broken = NegatedHenry {
        inner: SorptionModel::henry(k_ad, k_de).unwrap(),
    };
    let report = check_sorption_structure(&broken, &plan);
    println!("  {report}");
    assert_eq!(report.verdict, Verdict::Fail);
    let witness = report.witness.as_ref().expect("failure carries a witness");
    // re-evaluating the named rule at the witness reproduces the violation
    let reproduced = reproduce_violation(&broken, witness, plan.radius);
    assert!(
        (reproduced - report.worst_violation).abs() <= 1e-9 * (1.0 + report.worst_violation),
        "witness reproduces {reproduced}, checker reported {}",
        report.worst_violation
    );
    announce(
        "9 structure_checkers",
        true,
        "Henry/Langmuir/Volmer/VanDerWaals pass at 4096 points; negated Henry fails with witness",
    );
}

/// Independently re-evaluates the inequality named by a sorption-structure
/// witness, returning the violation amount.
fn reproduce_violation(model: &impl SorptionRates, w: &Witness, radius: f64) -> f64 {
    let i: usize = w
        .rule
        .split(|c| c == '[' || c == ']')
        .nth(1)
        .and_then(|t| t.parse().ok())
        .expect("rule names a species index");
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = model.rates_unchecked(&w.primary, &w.secondary);
    if w.rule.contains("<= k_ad") {
        return s[i] - model.k_ad()[i] * (1.0 + norm(&w.primary));
    }
    if w.rule.contains(">= -k_de") {
        return -model.k_de()[i] * (1.0 + norm(&w.secondary)) - s[i];
    }
    if w.rule.contains("=0, c_surf) <= 0") {
        return s[i]; // witness already carries the zeroed trace component
    }
    if w.rule.contains("=0) >= 0") {
        return -s[i]; // witness already carries the zeroed surface component
    }
    // monotonicity rules: same finite-difference stencil as the checker
    let h = 1e-6 * radius.max(1.0);
    let bump_trace = w.rule.contains("/dc[");
    let base = if bump_trace {
        w.primary[i]
    } else {
        w.secondary[i]
    };
    let (lo_val, width) = if base >= h {
        (base - h, 2.0 * h)
    } else {
        (base, h)
    };
    let mut hi_c = w.primary.clone();
    let mut hi_s = w.secondary.clone();
    let mut lo_c = w.primary.clone();
    let mut lo_s = w.secondary.clone();
    if bump_trace {
        hi_c[i] = base + h;
        lo_c[i] = lo_val;
    } else {
        hi_s[i] = base + h;
        lo_s[i] = lo_val;
    }
    let slope = (model.rates_unchecked(&hi_c, &hi_s)[i] - model.rates_unchecked(&lo_c, &lo_s)[i])
        / width;
    if bump_trace {
        -slope // ds/dc_i >= 0 was violated
    } else {
        slope // ds/dc_surf_i <= 0 was violated
    }
}
