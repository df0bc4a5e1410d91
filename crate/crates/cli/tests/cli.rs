use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-cascade"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (header, rows)
}

#[test]
fn chsh_example_all_violated() {
    let o = run(&["chsh-cascade", "--coeffs", "0.70710678,0.70710678", "--n", "3", "--epsilon", "0.01", "--auto-theta", "--normalize"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["k", "gamma_k", "simulated", "bound", "violated"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn unnormalized_coefficients_are_rejected() {
    let o = run(&["chsh-cascade", "--coeffs", "0.70710678,0.70710678", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("--normalize"));
}

#[test]
fn svetlichny_boundary_has_no_second_charlie() {
    let o = run(&["svetlichny-cascade", "--sin2-2alpha", "0.888888889", "--n", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("no feasible theta for k=2"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn verify_appendix_a_passes() {
    let o = run(&["verify", "--suite", "appendix-a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["suite", "check", "max_error", "tolerance", "passed"]);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn unknown_suite_is_an_invalid_argument() {
    let o = run(&["verify", "--suite", "theorem-9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn argument_errors_exit_2() {
    for args in [
        vec!["chsh-cascade", "--coeffs", "0.8,0.6", "--n", "2", "--theta", "1.0"],
        vec!["chsh-cascade", "--coeffs", "0.8,0.6", "--n", "2", "--epsilon", "-1"],
        vec!["chsh-cascade", "--coeffs", "0.6,0.8", "--n", "2"],
        vec!["svetlichny-cascade", "--sin2-2alpha", "1.5", "--n", "1"],
        vec!["sweep", "gamma1", "--theta", "0,0.5,3"],
        vec!["chsh-cascade", "--n", "2"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unwritable_output_exits_4() {
    let o = run(&["find-theta", "--n", "2", "--output", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn fixed_theta_beyond_feasibility_is_a_search_failure() {
    let o = run(&["chsh-cascade", "--coeffs", "0.8,0.6", "--n", "4", "--theta-frac-pi", "0.25"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let args = ["find-theta", "--n", "3"];
    let direct = run(&args);
    let o = bin().args(args).args(["--output", path.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn csv_is_lf_only() {
    let o = run(&["sweep", "theta-n", "--n-range", "1,4"]);
    assert!(o.status.success());
    assert!(!o.stdout.contains(&b'\r'));
    assert!(o.stdout.ends_with(b"\n"));
}

#[test]
fn json_document_shape() {
    let o = run(&["chsh-cascade", "--coeffs", "0.8,0.6", "--n", "2", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let obj = doc.as_object().unwrap();
    assert_eq!(obj.keys().collect::<Vec<_>>(), ["meta", "rows"]);
    let meta = &doc["meta"];
    assert_eq!(meta["command"], "chsh-cascade");
    assert!(meta["version"].is_string());
    assert!(meta["tolerances"].is_object());
    let columns: Vec<&str> = meta["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    for row in doc["rows"].as_array().unwrap() {
        let keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, columns);
    }
}

#[test]
fn normalize_factor_is_recorded() {
    let o = run(&["chsh-cascade", "--coeffs", "3,4", "--normalize", "--n", "1", "--theta", "0.5", "--format", "json"]);
    // 3,4 is ascending: rejected even after rescaling.
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["chsh-cascade", "--coeffs", "4,3", "--normalize", "--n", "1", "--theta", "0.5", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["meta"]["parameters"]["normalize_factor"].to_string(), "0.2");
}

#[test]
fn violation_flags_follow_emitted_values() {
    for (args, bound) in [
        (vec!["chsh-cascade", "--coeffs", "0.8,0.6", "--n", "3"], 2.0),
        (vec!["chsh-cascade", "--coeffs", "0.8,0.6", "--n", "3", "--gammas", "0.3,0.6,1", "--theta", "0.3"], 2.0),
        (vec!["svetlichny-cascade", "--alpha", "pi/4", "--n", "2"], 4.0),
        (vec!["svetlichny-cascade", "--sin2-2alpha", "0.7", "--n", "2", "--gammas", "0.5,1", "--theta", "pi/4"], 4.0),
    ] {
        let o = run(&args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        let (_, rows) = csv_rows(&stdout(&o));
        for r in rows {
            let simulated: f64 = r[2].parse().unwrap();
            assert_eq!(r[4] == "true", simulated > bound, "{args:?} row {r:?}");
        }
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let specs: [&[&str]; 4] = [
        &["sweep", "chsh-max-k", "--theta", "0.05,pi/4,6", "--l", "0.4,1,4", "--n-max", "4"],
        &["sweep", "svetlichny-max-k", "--sin2-2alpha", "0.5,1,6", "--format", "json"],
        &["chsh-cascade", "--coeffs", "0.7,0.5,0.4,0.316227766016838", "--normalize", "--n", "3", "--format", "json"],
        &["find-theta", "--scenario", "svetlichny", "--n", "2"],
    ];
    for spec in specs {
        let outputs: Vec<Vec<u8>> = ["1", "4", "0", "1"]
            .iter()
            .map(|threads| {
                let o = bin().args(spec).env("NONLOCAL_CASCADE_THREADS", threads).output().unwrap();
                assert!(o.status.success(), "{spec:?}: {}", stderr(&o));
                o.stdout
            })
            .collect();
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{spec:?} differs between runs");
    }
}

#[test]
fn bad_thread_count_exits_2() {
    let o = bin().args(["find-theta", "--n", "1"]).env("NONLOCAL_CASCADE_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
