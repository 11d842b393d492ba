//! End-to-end acceptance criteria. Each test prints one PASS/FAIL line.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use facpow::harness::{aggregate, bench, build_problem, check, run, RunConfig, Trace};
use facpow::identities::{averaging_suite, facpow_suite, library_evaluator, sandwich_suite, CheckResult};
use facpow::optimizers::{BoundKind, BoundSpec};
use facpow::problems::reference_optimum;

fn verdict(id: u32, title: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let in_time = elapsed <= limit;
    let ok = pass && in_time;
    println!(
        "criterion {id} {}: {title} ({:.2}s, limit {}s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded {}s", limit.as_secs());
}

fn suite_detail(rows: &[CheckResult]) -> (bool, String) {
    let failed: Vec<String> = rows.iter().filter(|r| !r.passed()).map(|r| r.to_string()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks", rows.len())
    } else {
        failed.join(" | ")
    };
    (failed.is_empty(), detail)
}

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_toml(text).expect("valid config")
}

fn spec_of(trace: &Trace) -> BoundSpec {
    BoundSpec::new(trace.bound.expect("trace has a bound"), trace.bound_constants.clone()).expect("constants present")
}

#[test]
fn criterion_1_identity_suite() {
    let t = Instant::now();
    let rows = facpow_suite(&library_evaluator);
    let (pass, detail) = suite_detail(&rows);
    verdict(1, "factorial power identities", pass, t.elapsed(), Duration::from_secs(5), &detail);
}

#[test]
fn criterion_2_sandwich_bounds() {
    let t = Instant::now();
    let rows = sandwich_suite(&library_evaluator);
    let (pass, detail) = suite_detail(&rows);
    verdict(2, "half-power sandwich and bound comparison", pass, t.elapsed(), Duration::from_secs(1), &detail);
}

#[test]
fn criterion_3_equivalences() {
    let t = Instant::now();
    let rows = averaging_suite();
    let (pass, detail) = suite_detail(&rows);
    verdict(3, "averaging and momentum equivalences", pass, t.elapsed(), Duration::from_secs(5), &detail);
}

#[test]
fn criterion_4_nesterov_quadratics() {
    let t = Instant::now();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for inst in 1..=5 {
        let trace = run(&cfg(&format!(
            "problem = \"quadratic\"\ndim = 20\nrows = 40\ninstance_seed = {inst}\nmethod = \"nesterov\"\nsteps = 500\n"
        )))
        .unwrap();
        assert_eq!(trace.bound, Some(BoundKind::Nesterov));
        assert_eq!(trace.rows.len(), 501);
        let report = check(&trace, &spec_of(&trace), 1.0).unwrap();
        pass &= report.passed();
        worst = worst.max(report.worst_ratio);
    }
    let detail = format!("5 instances x 500 steps, worst gap/bound {worst:.4}");
    verdict(4, "accelerated rate on quadratics", pass, t.elapsed(), Duration::from_secs(10), &detail);
}

#[test]
fn criterion_5_pathwise_distance() {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (method, schedule, bound) in [
        ("sgdm", "nonsmooth", BoundKind::SgdmNonsmooth),
        ("dual-avg", "factorial", BoundKind::DualAvgFactorial),
        ("dual-avg", "recursive", BoundKind::DualAvgRecursive),
    ] {
        let mut worst: f64 = 0.0;
        for target in [0.01, 0.5, 0.9] {
            let trace = run(&cfg(&format!(
                "problem = \"distance\"\ndim = 10\nradius = 1.0\nlipschitz = 1.0\ntarget_norm = {target}\n\
                 method = \"{method}\"\nschedule = \"{schedule}\"\nsteps = 5000\n"
            )))
            .unwrap();
            assert_eq!(trace.bound, Some(bound));
            let report = check(&trace, &spec_of(&trace), 1.0).unwrap();
            pass &= report.passed();
            worst = worst.max(report.worst_ratio);
        }
        parts.push(format!("{bound} worst {worst:.4}"));
    }
    verdict(5, "pathwise bounds on the distance problem", pass, t.elapsed(), Duration::from_secs(10), &parts.join(", "));
}

const SVM_BASE: &str = "problem = \"svm\"\ndataset = \"fixture\"\nweight_decay = 0.001\nmethod = \"sgdm\"\n";

#[test]
fn criterion_6_strongly_convex_expectation() {
    let t = Instant::now();
    let problem = build_problem(&cfg(&format!("{SVM_BASE}steps = 1\n"))).unwrap();
    assert!(problem.constants().g_is_estimate);
    let f_star = reference_optimum(problem.as_ref(), 100_000).unwrap();
    let config = cfg(&format!(
        "{SVM_BASE}schedule = \"strongly-convex\"\nsteps = 10000\nstride = 100\nf_star = {f_star:?}\n"
    ));
    let ens = bench(&config, 100, None).unwrap();
    let spec = spec_of(&ens.traces[0]);
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [100u64, 1000, 10_000] {
        let j = ens.traces[0].rows.iter().position(|r| r.step == n).unwrap();
        let mean = ens.traces.iter().map(|tr| tr.rows[j].f_gap).sum::<f64>() / ens.traces.len() as f64;
        let bound = spec.value(n).unwrap();
        pass &= mean <= bound;
        parts.push(format!("n={n} mean {mean:.4e} <= {bound:.4e}"));
    }
    let detail = format!("f* ~ {f_star:.6}; {}", parts.join(", "));
    verdict(6, "strongly convex SGDM in expectation", pass, t.elapsed(), Duration::from_secs(120), &detail);
}

/// Largest `mean Λ_s / (rate^s mean Λ_0)` over the epochs.
fn lyapunov_ratio(config: &RunConfig, rate: f64) -> f64 {
    let ens = bench(config, 20, None).unwrap();
    let epochs = ens.traces[0].rows.len();
    let mean = |s: usize| {
        ens.traces.iter().map(|tr| tr.rows[s].diagnostics["lyapunov"]).sum::<f64>() / ens.traces.len() as f64
    };
    let base = mean(0);
    (1..epochs).map(|s| mean(s) / (rate.powi(s as i32) * base)).fold(0.0, f64::max)
}

#[test]
fn criterion_7_svrgm_contraction() {
    let t = Instant::now();
    let mut worst_convex: f64 = 0.0;
    let mut worst_strong: f64 = 0.0;
    for inst in 1..=3 {
        let base = format!("problem = \"quadratic\"\ndim = 20\nrows = 40\ninstance_seed = {inst}\nmethod = \"svrgm\"\nepochs = 8\n");
        let convex = cfg(&format!("{base}ridge = 0.0\nschedule = \"convex\"\nm0 = 40\n"));
        worst_convex = worst_convex.max(lyapunov_ratio(&convex, 0.5));
        for ridge in [0.1, 1.0] {
            let strong = cfg(&format!("{base}ridge = {ridge:?}\nschedule = \"strongly-convex\"\n"));
            worst_strong = worst_strong.max(lyapunov_ratio(&strong, 0.6));
        }
    }
    let pass = worst_convex <= 1.1 && worst_strong <= 1.1;
    let detail = format!(
        "worst mean-Lyapunov / rate^s over 8 epochs: convex {worst_convex:.4} (rate 1/2), strongly convex {worst_strong:.4} (rate 3/5), slack 1.1"
    );
    verdict(7, "SVRGM epoch contraction", pass, t.elapsed(), Duration::from_secs(120), &detail);
}

#[test]
fn criterion_8_momentum_order_sweep() {
    let t = Instant::now();
    let orders = [0.0, 1.0, 3.0, 5.0];
    let problem = build_problem(&cfg(&format!("{SVM_BASE}steps = 1\n"))).unwrap();
    let reference = reference_optimum(problem.as_ref(), 100_000).unwrap();
    let ensembles: Vec<Vec<Trace>> = orders
        .iter()
        .map(|r| {
            let c = cfg(&format!(
                "{SVM_BASE}schedule = \"factorial\"\nmomentum_r = {r:?}\nsteps = 50000\nstride = 5000\n"
            ));
            bench(&c, 40, None).unwrap().traces
        })
        .collect();
    // Empirical gaps share one reference across the whole sweep.
    let best = ensembles
        .iter()
        .flatten()
        .flat_map(|tr| tr.rows.iter().map(|r| r.f_gap))
        .fold(reference, f64::min);
    let medians: Vec<f64> = ensembles
        .iter()
        .map(|ens| aggregate(ens, Some(best)).unwrap().rows.last().unwrap().median)
        .collect();
    let (m0, m1, m3, m5) = (medians[0], medians[1], medians[2], medians[3]);
    let pass = m3 <= m0 && m3 <= m1 && m5 >= 0.9 * m3;
    let detail = format!(
        "median final gap r=0 {m0:.4e}, r=1 {m1:.4e}, r=3 {m3:.4e}, r=5 {m5:.4e} (r5/r3 = {:.3}, need >= 0.9)",
        m5 / m3
    );
    verdict(8, "momentum order sweep on the SVM fixture", pass, t.elapsed(), Duration::from_secs(300), &detail);
}

fn facpow_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_facpow")).args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn criterion_9_determinism_and_check_exit_codes() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let stochastic = dir.path().join("sgd.toml");
    write(
        &stochastic,
        "problem = \"quadratic\"\ndim = 20\nrows = 40\ninstance_seed = 3\nridge = 0.5\nmethod = \"sgdm\"\n\
         schedule = \"strongly-convex\"\nsteps = 2000\nstride = 10\n",
    );
    let s = stochastic.to_string_lossy().into_owned();
    let a = facpow_bin(&["run", "--config", &s, "--seed", "42", "--out", &p("a.csv")]);
    let b = facpow_bin(&["run", "--config", &s, "--seed", "42", "--out", &p("b.csv")]);
    let c = facpow_bin(&["run", "--config", &s, "--seed", "43", "--out", &p("c.csv")]);
    assert!(a.status.success() && b.status.success() && c.status.success());
    let bytes = |n: &str| std::fs::read(p(n)).unwrap();
    let identical = bytes("a.csv") == bytes("b.csv");
    let seed_matters = bytes("a.csv") != bytes("c.csv");

    let distance = dir.path().join("dist.toml");
    write(
        &distance,
        "problem = \"distance\"\ndim = 10\ntarget_norm = 0.9\nmethod = \"sgdm\"\nsteps = 5000\n",
    );
    let d = distance.to_string_lossy().into_owned();
    assert!(facpow_bin(&["run", "--config", &d, "--out", &p("d.csv")]).status.success());
    let full = facpow_bin(&["check", "--trace", &p("d.csv"), "--bound", "sgdm-nonsmooth"]);
    // The bound is linear in R, so R = 0.5 halves it.
    let halved = facpow_bin(&["check", "--trace", &p("d.csv"), "--bound", "sgdm-nonsmooth", "--const", "R=0.5"]);
    let (full_code, halved_code) = (full.status.code(), halved.status.code());

    let pass = identical && seed_matters && full_code == Some(0) && halved_code == Some(1);
    let detail = format!(
        "same seed identical: {identical}, other seed differs: {seed_matters}, check exit {full_code:?}, halved bound exit {halved_code:?} ({})",
        String::from_utf8_lossy(&halved.stdout).trim()
    );
    verdict(9, "harness determinism and check exit codes", pass, t.elapsed(), Duration::from_secs(60), &detail);
}
