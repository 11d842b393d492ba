use facpow::harness::{
    aggregate, bench, check, render_svg, run, seed_stream, validate_svg, Curve, Experiment, HarnessError, RunConfig,
    Trace, ValueKind,
};
use facpow::optimizers::{BoundKind, BoundSpec};

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_toml(text).unwrap()
}

const QUAD_SGDM: &str = "problem = \"quadratic\"\ndim = 5\nrows = 12\ninstance_seed = 2\nridge = 0.5\n\
                         method = \"sgdm\"\nschedule = \"strongly-convex\"\nsteps = 300\nstride = 7\n";

#[test]
fn zero_step_run_has_one_row() {
    let t = run(&cfg("problem = \"distance\"\ndim = 3\ntarget_norm = 0.4\nmethod = \"sgdm\"\nsteps = 0\n")).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0].step, 0);
    assert!((t.rows[0].f_gap - 0.4).abs() < 1e-15);
    assert_eq!(t.to_csv().lines().count(), 2);
}

#[test]
fn checkpoints_follow_stride_and_final_step() {
    let t = run(&cfg(QUAD_SGDM)).unwrap();
    let steps: Vec<u64> = t.rows.iter().map(|r| r.step).collect();
    let mut expected: Vec<u64> = (0..=300).step_by(7).collect();
    expected.push(300);
    assert_eq!(steps, expected);
    assert!(t.validate().is_ok());
    // One stochastic component gradient per SGDM step.
    assert!(t.rows.iter().all(|r| r.grad_evals == r.step));
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let mut c = cfg(QUAD_SGDM);
    let a = run(&c).unwrap().to_csv();
    assert_eq!(a, run(&c).unwrap().to_csv());
    c.seed = 1;
    assert_ne!(a, run(&c).unwrap().to_csv());
}

#[test]
fn deterministic_problems_ignore_the_seed() {
    let mut c = cfg("problem = \"distance\"\ndim = 4\ntarget_norm = 0.3\nmethod = \"sgdm\"\nsteps = 200\nstride = 10\n");
    let a = run(&c).unwrap().to_csv();
    c.seed = 99;
    assert_eq!(a, run(&c).unwrap().to_csv());
    let ens = bench(&c, 4, Some(2)).unwrap();
    assert!(ens.aggregate.rows.iter().all(|r| r.q25 == r.q75 && r.median == r.q25));
}

#[test]
fn bench_is_independent_of_thread_count() {
    let c = cfg(QUAD_SGDM);
    let serial = bench(&c, 6, Some(1)).unwrap();
    let parallel = bench(&c, 6, Some(4)).unwrap();
    assert_eq!(serial.aggregate, parallel.aggregate);
    for (a, b) in serial.traces.iter().zip(&parallel.traces) {
        assert_eq!(a.to_csv(), b.to_csv());
    }
    // Member 0 is the single run with the same base seed.
    assert_eq!(serial.traces[0].to_csv(), run(&c).unwrap().to_csv());
    for w in serial.traces.windows(2) {
        assert_ne!(w[0].to_csv(), w[1].to_csv());
    }
    for r in &serial.aggregate.rows {
        assert!(r.q25 <= r.median && r.median <= r.q75);
    }
    let _ = seed_stream(0, 0);
}

#[test]
fn bench_needs_two_seeds() {
    assert!(matches!(bench(&cfg(QUAD_SGDM), 1, None), Err(HarnessError::Config { field, .. }) if field == "seeds"));
}

#[test]
fn missing_constants_fail_before_running() {
    let cases = [
        ("problem = \"distance\"\ndim = 2\nmethod = \"nesterov\"\nsteps = 5\n", vec!["L"]),
        ("problem = \"quadratic\"\ndim = 2\nmethod = \"sgdm\"\nsteps = 5\n", vec!["G", "R"]),
        ("problem = \"quadratic\"\ndim = 2\nmethod = \"dual-avg\"\nsteps = 5\n", vec!["G", "R"]),
        (
            "problem = \"distance\"\ndim = 2\nmethod = \"svrgm\"\nepochs = 2\n",
            vec!["n_components", "L_component"],
        ),
        (
            "problem = \"quadratic\"\ndim = 2\nmethod = \"svrgm\"\nschedule = \"strongly-convex\"\nepochs = 2\n",
            vec!["mu_component"],
        ),
    ];
    for (text, expected) in cases {
        match Experiment::prepare(&cfg(text)) {
            Err(HarnessError::MissingConstants { missing, .. }) => assert_eq!(missing, expected, "{text}"),
            Err(e) => panic!("{text}: unexpected {e}"),
            Ok(_) => panic!("{text}: expected failure"),
        }
    }
    // An explicitly requested bound must be computable.
    let err = Experiment::prepare(&cfg(
        "problem = \"quadratic\"\ndim = 2\nmethod = \"nesterov\"\nsteps = 5\nbound = \"sgdm-nonsmooth\"\n",
    ))
    .err()
    .unwrap();
    assert!(matches!(&err, HarnessError::MissingConstants { missing, .. } if missing == &vec!["G", "R"]), "{err}");
}

#[test]
fn nesterov_trace_respects_its_bound_column() {
    let t = run(&cfg("problem = \"quadratic\"\ndim = 20\nrows = 40\ninstance_seed = 9\nmethod = \"nesterov\"\nsteps = 200\n"))
        .unwrap();
    assert_eq!(t.bound, Some(BoundKind::Nesterov));
    assert_eq!(t.rows[0].bound, Some(f64::INFINITY));
    for r in &t.rows {
        assert!(r.f_gap <= r.bound.unwrap(), "step {}", r.step);
        assert_eq!(r.grad_evals, 40 * r.step);
    }
    let spec = BoundSpec::new(BoundKind::Nesterov, t.bound_constants.clone()).unwrap();
    assert!(check(&t, &spec, 1.0).unwrap().passed());
}

#[test]
fn svrgm_rows_are_epochs() {
    let t = run(&cfg(
        "problem = \"quadratic\"\ndim = 4\nrows = 10\nmethod = \"svrgm\"\nschedule = \"convex\"\nm0 = 3\nepochs = 4\n",
    ))
    .unwrap();
    let evals: Vec<u64> = t.rows.iter().map(|r| r.grad_evals).collect();
    // Epoch s runs 3·2^s inner steps after a 10-component snapshot.
    assert_eq!(evals, vec![0, 10 + 12, 22 + 10 + 24, 56 + 10 + 48, 114 + 10 + 96]);
    let lens: Vec<f64> = t.rows.iter().map(|r| r.diagnostics["epoch_len"]).collect();
    assert_eq!(lens, vec![3.0, 6.0, 12.0, 24.0, 48.0]);
    assert!(t.rows.iter().all(|r| r.diagnostics.contains_key("lyapunov")));
    assert_eq!(t.bound_constants.m0, Some(3.0));
}

#[test]
fn dual_averaging_records_duality_gap() {
    let t = run(&cfg(
        "problem = \"distance\"\ndim = 3\ntarget_norm = 0.5\nmethod = \"dual-avg\"\nschedule = \"recursive\"\nsteps = 50\n",
    ))
    .unwrap();
    assert_eq!(t.value_kind, ValueKind::Gap);
    // At x0 = 0 the gradient is −e1 (unit norm), so the gap is R·G = 1.
    assert!((t.rows[0].f_gap - 1.0).abs() < 1e-15);
    // With x* in the ball, convexity makes the duality gap an upper bound on
    // the mean objective gap of x_0..x_n (every step is a checkpoint here).
    let mut sum = 0.0;
    for (n, r) in t.rows.iter().enumerate() {
        sum += r.diagnostics["f_gap"];
        assert!(r.f_gap + 1e-12 >= sum / (n + 1) as f64, "step {}", r.step);
    }
}

#[test]
fn conditional_gradient_stays_in_the_ball() {
    for schedule in ["factorial", "open-loop", "inverse-k"] {
        let t = run(&cfg(&format!(
            "problem = \"distance\"\ndim = 3\ntarget_norm = 0.5\nmethod = \"cond-grad\"\nschedule = \"{schedule}\"\nsteps = 400\nstride = 50\n"
        )))
        .unwrap();
        let last = t.final_row().unwrap();
        assert!(last.f_gap < 0.05, "{schedule}: {}", last.f_gap);
        assert!(t.bound.is_none());
    }
}

#[test]
fn svm_without_reference_records_values() {
    let c = cfg("problem = \"svm\"\ndataset = \"fixture\"\nmethod = \"sgdm\"\nschedule = \"strongly-convex\"\nsteps = 50\nstride = 10\n");
    let t = run(&c).unwrap();
    assert_eq!(t.value_kind, ValueKind::Value);
    assert_eq!(t.rows[0].f_gap, 1.0);
    assert!(t.bound.is_none());
    let ens = bench(&c, 3, None).unwrap();
    let best = ens.aggregate.empirical_reference.unwrap();
    assert!(ens.aggregate.rows.iter().all(|r| r.q25 >= 0.0));
    assert_eq!(aggregate(&ens.traces, None).unwrap().empirical_reference, Some(best));
    let explicit = cfg("problem = \"svm\"\ndataset = \"fixture\"\nmethod = \"sgdm\"\nsteps = 5\nbound = \"sgdm-nonsmooth\"\n");
    assert!(matches!(Experiment::prepare(&explicit), Err(HarnessError::Config { field, .. }) if field == "bound"));
}

#[test]
fn dataset_paths_resolve_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.libsvm"), "1 1:1\n2 1:-1\n1 1:0.5\n").unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "problem = \"svm\"\ndataset = \"tiny.libsvm\"\nmethod = \"sgdm\"\nsteps = 3\n").unwrap();
    let c = RunConfig::from_path(&path).unwrap();
    let t = Experiment::prepare(&c).unwrap().run().unwrap();
    assert_eq!(t.rows.len(), 4);
    std::fs::write(&path, "problem = \"svm\"\ndataset = \"absent.libsvm\"\nmethod = \"sgdm\"\nsteps = 3\n").unwrap();
    let err = Experiment::prepare(&RunConfig::from_path(&path).unwrap()).err().unwrap();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn trace_files_round_trip_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let t = run(&cfg(QUAD_SGDM)).unwrap();
    let path = dir.path().join("q.csv");
    t.write(&path).unwrap();
    let (back, side) = Trace::read(&path).unwrap();
    assert_eq!(back.to_csv(), t.to_csv());
    let side = side.unwrap();
    // The quadratic declares no G, so there is no default bound.
    assert_eq!(side.bound, None);
    assert_eq!(side.bound_constants().unwrap(), t.bound_constants);
    let svg = render_svg(&[Curve::from_trace(&back, "q")], "quadratic").unwrap();
    assert_eq!(validate_svg(&svg).unwrap().polylines, 1);
}
