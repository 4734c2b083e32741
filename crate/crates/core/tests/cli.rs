use std::fs;
use std::path::Path;
use std::process::Command;

use metrize::cli::run;
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("metrize").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = invoke(args);
    let v: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}\n{err}"));
    assert_valid(&v);
    assert_eq!(v["exit_status"], code);
    (code, v)
}

fn assert_valid(v: &Value) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run_report.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}");
}

fn stage<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["stages"].as_array().unwrap().iter().find(|s| s["name"] == name).unwrap_or_else(|| panic!("no stage {name}"))
}

#[test]
fn branciari_audit_exits_one_with_nu_pass() {
    let (code, v) = report(&["audit", "gallery:branciari4", "--axioms", "III,nu=2"]);
    assert_eq!(code, 1);
    assert_eq!(stage(&v, "III")["verdict"], "fail");
    assert_eq!(stage(&v, "nu=2")["verdict"], "pass");
    let digest = v["input_digest"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn clean_metric_audit_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, ",a,b,c\na,0,1,2\nb,1,0,3/2\nc,2,3/2,0\n").unwrap();
    let p = path.to_str().unwrap();
    let (code, v) = report(&["audit", p, "--class", "metric", "--axioms", "I,II,III,IV,IV-strict,K"]);
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(v["stages"].as_array().unwrap().len(), 6);
}

#[test]
fn malformed_csv_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, ",a,b\na,0,1\nb,x,0\n").unwrap();
    let (code, v) = report(&["audit", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().is_some());
    let (code, _) = report(&["audit", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_flags_exit_two() {
    let (code, _, err) = invoke(&["audit", "gallery:branciari4", "--no-such-flag"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
    let (code, _) = report(&["audit", "gallery:branciari4", "--axioms", "VII"]);
    assert_eq!(code, 2);
}

#[test]
fn square_line_induce_flags_degeneracy() {
    let (code, v) = report(&["induce", "gallery:square-line:64", "--exponent", "1"]);
    assert_eq!(code, 0);
    let r = &stage(&v, "induce")["result"];
    assert_eq!(r["is_metric"], true);
    let notes = r["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("degeneracy trend")));
    let labels: Vec<&str> = r["labels"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
    let i0 = labels.iter().position(|&l| l == "0").unwrap();
    let i1 = labels.iter().position(|&l| l == "1").unwrap();
    assert_eq!(r["induced"][i0][i1], "1/64");
}

#[test]
fn auto_exponent_on_example_399_is_one_third() {
    let (code, v) = report(&["induce", "gallery:example-399:64", "--exponent", "auto"]);
    assert_eq!(code, 0);
    assert_eq!(stage(&v, "exponent-selection")["result"]["p"], "1/3");
    assert_eq!(stage(&v, "induce")["result"]["exponent"], "1/3");
}

#[test]
fn exponent_out_of_range_exits_two() {
    let (code, _) = report(&["induce", "gallery:square-line:8", "--exponent", "2"]);
    assert_eq!(code, 2);
    let (code, _) = report(&["induce", "gallery:square-line:8", "--exponent", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn ain_regime_records_assumption() {
    let (_, v) = report(&["induce", "gallery:square-line:8", "--regime", "aIN", "--beta", "1/2"]);
    assert!(!v["assumptions"].as_array().unwrap().is_empty());
    assert_eq!(stage(&v, "induce")["result"]["sandwich"]["regime"], "aIN");
}

#[test]
fn setchain_prints_small_bound() {
    let (code, v) = report(&["setchain", "gallery:au-counterexample:64:20"]);
    assert_eq!(code, 0);
    let r = &stage(&v, "setchain")["result"];
    assert!(r["distance_f64"].as_f64().unwrap() <= 2.003e-5);
    assert_eq!(r["reference_bound"], "21/1048576");
    assert_eq!(r["within_reference_bound"], true);
}

#[test]
fn twogen_discretize_on_branciari_is_discrete() {
    let (code, v) = report(&["discretize", "gallery:branciari4", "--method", "twogen"]);
    assert_eq!(code, 0);
    let space = &stage(&v, "twogen")["result"]["space"]["entries"];
    for (i, row) in space.as_array().unwrap().iter().enumerate() {
        for (j, e) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(e, if i == j { "0" } else { "1" });
        }
    }
    let induced = &stage(&v, "induce")["result"]["induced"];
    assert_eq!(induced, space);
}

#[test]
fn au_discretize_records_condition_c() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nw.json");
    let (code, out, _) = invoke(&["discretize", "gallery:2gen-slow:6", "--method", "nw", "--levels", "6"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let families = &stage(&v, "nw-families")["result"]["families"];
    fs::write(&path, serde_json::to_string(families).unwrap()).unwrap();
    let (code, v) = report(&["discretize", path.to_str().unwrap(), "--method", "au"]);
    assert_eq!(code, 0);
    assert_eq!(stage(&v, "AU-C")["verdict"], "info");
    assert!(v["assumptions"].as_array().unwrap().iter().any(|a| a.as_str().unwrap().contains("(C)")));
    let (code, v) = report(&["discretize", "gallery:au-counterexample:16:6", "--method", "au"]);
    assert_eq!(code, 1);
    assert_eq!(stage(&v, "AU-B")["verdict"], "fail");
}

#[test]
fn chittenden_discretize_with_table_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    fs::write(&phi, r#"[["0", "0"], ["1/1000", "1/4000"], ["1", "1/4"]]"#).unwrap();
    let (code, v) = report(&["discretize", "gallery:square-line:4", "--method", "chittenden", "--phi", phi.to_str().unwrap()]);
    assert!(code <= 1);
    assert_eq!(v["input_digest"].as_array().unwrap().len(), 2);
    assert_eq!(stage(&v, "chittenden-precondition")["result"]["axiom"], "V");
}

#[test]
fn fixpoint_coordinate_trace_converges() {
    let dir = tempfile::tempdir().unwrap();
    let steps = dir.path().join("steps.csv");
    let (code, v) = report(&[
        "fixpoint",
        "--coord",
        "affine:0.8,0",
        "--dist",
        "pow2",
        "--x0",
        "1",
        "--tol",
        "1e-12",
        "--steps-csv",
        steps.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(stage(&v, "fixpoint")["result"]["stop_reason"], "cauchy-tol");
    assert_eq!(stage(&v, "geometric-decay")["verdict"], "pass");
    assert!(!v["assumptions"].as_array().unwrap().is_empty());
    let csv = fs::read_to_string(steps).unwrap();
    assert!(csv.starts_with("step,distance\n0,"));
}

#[test]
fn fixpoint_index_map() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.csv");
    fs::write(&path, ",a,b,c\na,0,1,3\nb,1,0,2\nc,3,2,0\n").unwrap();
    let (code, v) = report(&["fixpoint", path.to_str().unwrap(), "--map", "a,a,b", "--x0", "c"]);
    assert_eq!(code, 0);
    assert_eq!(stage(&v, "fixpoint")["result"]["stop_reason"], "fixed-point-exact");
    let (code, v) = report(&["fixpoint", path.to_str().unwrap(), "--map", "b,a,c", "--x0", "a"]);
    assert_eq!(code, 1);
    assert_eq!(stage(&v, "fixpoint")["result"]["stop_reason"], "cycle-detected");
    let (code, _) = report(&["fixpoint", path.to_str().unwrap(), "--map", "a,z,b", "--x0", "c"]);
    assert_eq!(code, 2);
}

#[test]
fn gallery_output_feeds_back_into_audit() {
    let dir = tempfile::tempdir().unwrap();
    for (name, ext) in [("example-399", "json"), ("example-399", "csv"), ("noncoherent", "json"), ("random", "csv")] {
        let path = dir.path().join(format!("{name}.{ext}"));
        let p = path.to_str().unwrap();
        let (code, _, err) = invoke(&["gallery", name, "--n", "8", "--out", p]);
        assert_eq!(code, 0, "{err}");
        let (code, v) = report(&["audit", p, "--axioms", "I,II"]);
        assert_eq!(code, 0, "{name}.{ext}: {v:#}");
    }
    let (_, out, _) = invoke(&["gallery", "noncoherent", "--n", "8"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["witness"]["seq_abn"].is_array());
    assert_eq!(v["gallery"]["name"], "noncoherent");
    let (code, _, _) = invoke(&["gallery", "au-counterexample", "--format", "csv"]);
    assert_eq!(code, 2);
    let (code, _, _) = invoke(&["gallery", "nope"]);
    assert_eq!(code, 2);
}

#[test]
fn commands_are_deterministic() {
    for args in [
        vec!["audit", "gallery:random:bmetric(2):7", "--seed", "11", "--axioms", "III,IV,K"],
        vec!["induce", "gallery:random:twogen:6", "--seed", "5"],
        vec!["discretize", "gallery:random:twogen:6", "--method", "twogen", "--seed", "5"],
    ] {
        assert_eq!(invoke(&args), invoke(&args));
    }
    let a = invoke(&["gallery", "random", "--seed", "1"]).1;
    let b = invoke(&["gallery", "random", "--seed", "2"]).1;
    assert_ne!(a, b);
}

#[test]
fn float_mode_is_accepted() {
    let (code, v) = report(&["--mode", "float", "induce", "gallery:square-line:4", "--exponent", "1/2"]);
    assert_eq!(code, 0, "{v:#}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_metrize");
    let status = Command::new(bin).args(["audit", "gallery:branciari4", "--axioms", "III"]).output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = Command::new(bin).args(["audit", "gallery:branciari4", "--axioms", "nu=2"]).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    let status = Command::new(bin).args(["induce", "gallery:branciari4", "--exponent", "5"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}
