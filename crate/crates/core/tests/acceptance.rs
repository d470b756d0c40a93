//! One PASS/FAIL line per acceptance criterion, each at its stated
//! tolerance and runtime limit. Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxrep::finite::{run_finite_suite, SuiteConfig};
use maxrep::mc::mean_se;
use maxrep::path::{running_max, support_check, Aligned};
use maxrep::scenarios::{run, ScenarioId, ScenarioReport, ScenarioRun};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name, check, runtime limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn scenario(id: ScenarioId) -> ScenarioRun {
    run(id, &id.defaults()).unwrap_or_else(|e| panic!("{id} failed to run: {e}"))
}

fn flag(report: &ScenarioReport, name: &str) -> bool {
    report.check(name).unwrap_or_else(|| panic!("{}: no check {name}", report.scenario)).pass
}

fn estimate(report: &ScenarioReport, name: &str) -> f64 {
    report.check(name).unwrap_or_else(|| panic!("{}: no check {name}", report.scenario)).estimate
}

fn binomial(hits: impl Iterator<Item = bool>) -> (f64, f64) {
    let xs: Vec<f64> = hits.map(|b| f64::from(u8::from(b))).collect();
    mean_se(&xs)
}

fn first_jump() -> Outcome {
    let r = scenario(ScenarioId::S1FirstJump);
    let mut residual = 0.0f64;
    let mut escaped = 0.0f64;
    for b in &r.ensemble.bundles {
        let (z, u) = (b.path("Z").unwrap(), b.path("U").unwrap());
        let ustar = running_max(u);
        let al = Aligned::new(&[z, u, &ustar]);
        residual = residual.max((al.initial(0) - al.initial(1) / al.initial(2)).abs());
        for k in 0..al.len() {
            residual = residual.max((al.after(0, k) - al.after(1, k) / al.after(2, k)).abs());
        }
        escaped += support_check(&ustar, |i| z.value_at_instant(i) == 1.0).escaped_mass;
    }
    Outcome {
        pass: r.ensemble.bundles.len() == 10_000 && residual <= 1e-12 && escaped == 0.0,
        detail: format!("n={} max|Z-U/U*|={residual:e} escaped mass={escaped:e}", r.ensemble.bundles.len()),
    }
}

fn nonunique() -> Outcome {
    let r = scenario(ScenarioId::S2Nonunique);
    let rep = &r.report;
    let valid = flag(rep, "U.certificate_valid") && flag(rep, "U_alt.certificate_valid");
    let bundles = &r.ensemble.bundles;
    let (p_diff, se_diff) = binomial(bundles.iter().map(|b| {
        let (u, u_alt) = (b.path("U").unwrap(), b.path("U_alt").unwrap());
        let al = Aligned::new(&[u, u_alt]);
        u.initial_value() != u_alt.initial_value() || (0..al.len()).any(|k| al.after(0, k) != al.after(1, k))
    }));
    let (p_first, se_first) =
        binomial(bundles.iter().map(|b| b.scalar("S_prime").unwrap() < b.scalar("S").unwrap()));
    let diff_ok = (p_diff - 0.5).abs() <= 3.0 * se_diff;
    let first_ok = (p_first - 0.5).abs() <= 3.0 * se_first;
    let mart: Vec<_> = rep.checks.iter().filter(|c| c.name.starts_with("martingale[-A+gamma_prime]")).collect();
    let mart_ok = mart.len() == 8 && mart.iter().all(|c| c.pass);
    Outcome {
        pass: valid && diff_ok && first_ok && mart_ok && rep.check("p_u_differs_from_u_alt").is_some(),
        detail: format!(
            "certificates valid={valid} P[U!=U'']={p_diff:.4}±{se_diff:.4} (0.5±3SE: {diff_ok}) \
             P[S'<S]={p_first:.4}±{se_first:.4} (0.5±3SE: {first_ok}) martingale -A+gamma' {}/{} pass",
            mart.iter().filter(|c| c.pass).count(),
            mart.len()
        ),
    }
}

fn removal() -> Outcome {
    let r = scenario(ScenarioId::S6JumpRemoval);
    let err = estimate(&r.report, "u_prime_vs_u_max_rel_error");
    Outcome { pass: err <= 1e-9, detail: format!("max relative error over paths {err:e}") }
}

fn interpolation() -> Outcome {
    let r = scenario(ScenarioId::S7Interpolation);
    let equal = flag(&r.report, "c=0.gamma_hat_equals_gamma_event_list");
    let quarter = flag(&r.report, "c=0.25.U.certificate_valid");
    let half = flag(&r.report, "c=0.5.U.certificate_valid");
    Outcome {
        pass: equal && quarter && half,
        detail: format!("gamma_hat_0 event-list equal={equal} VALID c=1/4: {quarter} c=1/2: {half}"),
    }
}

fn doob() -> Outcome {
    let id = ScenarioId::S4ContinuousDoob;
    let mut params = id.defaults();
    params.n_paths = 2_000;
    params.n_inner = 2_000;
    params.dt = 1e-3;
    params.k = 3.0;
    let r = run(id, &params).expect("s4 runs");
    let sup: Vec<_> = r.report.checks.iter().filter(|c| c.name.starts_with("sup_after_t_ge_lambda")).collect();
    let worst = sup
        .iter()
        .map(|c| (c.estimate - c.target.unwrap_or(f64::NAN)).abs() / c.tol)
        .fold(0.0, f64::max);
    Outcome {
        pass: sup.len() == 20 && sup.iter().all(|c| c.pass),
        detail: format!(
            "{}/{} thresholds within max(3SE, tail+0.005); worst |err|/tol={worst:.3}",
            sup.iter().filter(|c| c.pass).count(),
            sup.len()
        ),
    }
}

fn counterexample() -> Outcome {
    let r = scenario(ScenarioId::S3Counterexample);
    let rep = &r.report;
    let q = rep.check("q_hat_ci95_inside_unit_interval").expect("q_hat check");
    let entrances: Vec<_> = rep.checks.iter().filter(|c| c.name.ends_with(".ci95_below_one") && c.name.starts_with("z_at_entrance")).collect();
    let entrance_ok = !entrances.is_empty() && entrances.iter().all(|c| c.pass);
    let isolated = flag(rep, "c_finite_right_isolated") && r.ensemble.bundles.len() == 10_000;
    Outcome {
        pass: q.pass && flag(rep, "q_hat_vs_ln2") && entrance_ok && isolated,
        detail: format!(
            "q_hat={:.4}±{:.4} (ln 2={:.4}) CI inside (0,1)={} entrance Z CI<1 {}/{} C finite right-isolated on all {} paths={isolated}",
            q.estimate,
            q.se,
            std::f64::consts::LN_2,
            q.pass,
            entrances.iter().filter(|c| c.pass).count(),
            entrances.len(),
            r.ensemble.bundles.len()
        ),
    }
}

fn finite_suite() -> Outcome {
    let report = run_finite_suite(&SuiteConfig::default()).expect("finite suite runs");
    let infeasible = report.checks.get("mmr_infeasible").is_some_and(|t| t.passed == report.cases as u64);
    let failing: Vec<&str> =
        report.checks.iter().filter(|(_, t)| t.passed != t.checked).map(|(n, _)| n.as_str()).collect();
    Outcome {
        pass: report.pass && infeasible && report.cases <= 10_000 && report.config.max_periods == 4,
        detail: format!(
            "{} models, {} cases ({} honest), failing identities {failing:?}",
            report.models, report.cases, report.honest_cases
        ),
    }
}

fn properties() -> Outcome {
    let n = 1_000;
    let t = common::property_suite(&mut ChaCha8Rng::seed_from_u64(20_260_317), n);
    Outcome {
        pass: [t.skorokhod, t.gexp, t.supmultip, t.by_parts].iter().all(|&c| c == n),
        detail: format!(
            "skorokhod {}/{n} gexp {}/{n} supmultip {}/{n} by-parts {}/{n}",
            t.skorokhod, t.gexp, t.supmultip, t.by_parts
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("first-jump exactness", first_jump, 30),
        ("non-uniqueness", nonunique, 60),
        ("jump-removal round trip", removal, 60),
        ("compensator interpolation", interpolation, 60),
        ("Doob maximal identity", doob, 600),
        ("counter-example evidence", counterexample, 300),
        ("finite suite", finite_suite, 120),
        ("property suites", properties, 60),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} criterion {} ({name}): {} [{:.2}s, limit {limit}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
