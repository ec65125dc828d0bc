use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn pvmra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvmra")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).expect("stdout is JSON")
}

fn error(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let last = text.lines().last().expect("diagnostic line");
    serde_json::from_str(last).expect("stderr is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pvmra-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn classify_golden() {
    let o = pvmra(&["pv", "classify", "--poly", "-1,-1"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["classification"], "PV");
    let roots = v["roots"].as_array().unwrap();
    assert!((roots[0].as_f64().unwrap() - 1.6180339887498949).abs() < 1e-12);
    assert!((roots[1].as_f64().unwrap() + 0.6180339887498949).abs() < 1e-12);
}

#[test]
fn floats_have_seventeen_digits() {
    let o = pvmra(&["pv", "classify", "--poly=-1,-1"]);
    let text = stdout(&o);
    assert!(text.contains("1.6180339887498949e0"), "{text}");
}

#[test]
fn rho_haar_from_file() {
    let dir = scratch("rho");
    let mask = dir.join("haar.json");
    fs::write(&mask, r#"{"lambda":{"real":2.0},"coeffs":[[1,0],[1,0]],"translations":[[0],[1]]}"#).unwrap();
    let o = pvmra(&["refine", "rho", "--mask", mask.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((json(&o)["rho"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    let o = pvmra(&["refine", "rho", "--mask", "builtin:haar"]);
    assert!((json(&o)["rho"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn expand_zero_is_origin() {
    let o = pvmra(&["subst", "expand", "--poly=-1,-1", "--sigma", "0,1", "--L", "60", "--k", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, vec!["0.0000000000000000e0,0,0"]);
}

#[test]
fn validation_errors_exit_two() {
    let o = pvmra(&["pv", "classify", "--poly", "1,1,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error(&o)["class"], "validation");

    let o = pvmra(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error(&o)["error"], "unknown_command");

    let o = pvmra(&["qlat", "generate", "--poly=-1,-1", "--sigma", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error(&o)["error"], "bad_config");

    let o = pvmra(&["pv", "classify", "--poly=-1,-1", "--tol-nonsense=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_three() {
    let o = pvmra(&["refine", "erdos", "--mask", "builtin:haar", "--k-max", "3"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error(&o);
    assert_eq!(e["error"], "zero_hit");
    assert_eq!(e["class"], "numerical");
}

#[test]
fn budget_errors_exit_four() {
    let o = pvmra(&["subst", "expand", "--poly=-1,-1", "--sigma", "0,1", "--L", "60", "--k", "20", "--budget", "100"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error(&o)["class"], "budget");
}

#[test]
fn tolerance_flag_forms() {
    let a = pvmra(&["pv", "classify", "--poly=-1,-1", "--tol-root=1e-11"]);
    let b = pvmra(&["pv", "classify", "--poly=-1,-1", "--tol", "root=1e-11"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn outputs_are_deterministic() {
    let run = |tag: &str| {
        let dir = scratch(tag);
        let o = pvmra(&[
            "--out", dir.to_str().unwrap(), "--seed", "7",
            "subst", "mask", "--poly=-1,-1", "--sigma", "0,1", "--L", "60", "--samples", "50",
        ]);
        assert!(o.status.success());
        let p = pvmra(&["--out", dir.to_str().unwrap(), "qlat", "generate", "--poly=-1,-1,0", "--sigma", "0,1,1", "--L", "40", "--svg"]);
        assert!(p.status.success());
        ["vector_mask.json", "points.csv", "points.svg"].map(|f| fs::read(dir.join(f)).unwrap())
    };
    assert_eq!(run("det-a"), run("det-b"));
}

#[test]
fn artifacts_round_trip() {
    let dir = scratch("round");
    let d = dir.to_str().unwrap();
    let o = pvmra(&["--out", d, "subst", "derive", "--poly=-1,-1", "--sigma", "0,1", "--L", "60"]);
    assert!(o.status.success());
    let rule = dir.join("rule.json");
    let text = fs::read_to_string(&rule).unwrap();
    let parsed = pvmra::subst::SubstitutionRule::from_json(&text).expect("rule re-validates");
    let again: serde_json::Value = serde_json::from_str(&parsed.to_json()).unwrap();
    assert_eq!(again, serde_json::from_str::<serde_json::Value>(&text).unwrap());

    let o = pvmra(&["subst", "expand", "--rule", rule.to_str().unwrap(), "--k", "10"]);
    let direct = pvmra(&["subst", "expand", "--poly=-1,-1", "--sigma", "0,1", "--L", "60", "--k", "10"]);
    assert!(o.status.success());
    assert_eq!(o.stdout, direct.stdout);

    let mask = dir.join("gm.json");
    fs::write(&mask, pvmra::refine::golden_mean_mask().to_spec().to_json()).unwrap();
    let o = pvmra(&["refine", "rho", "--mask", mask.to_str().unwrap()]);
    assert!((json(&o)["rho"].as_f64().unwrap() + 0.69424191363).abs() < 1e-8);
}

#[test]
fn projection_from_samples() {
    let dir = scratch("proj");
    let samples = dir.join("s.csv");
    let mut text = String::from("x,value\n");
    for i in 0..=2000 {
        let x = -5.0 + 10.0 * i as f64 / 2000.0;
        text.push_str(&format!("{x},3.5\n"));
    }
    fs::write(&samples, text).unwrap();
    let o = pvmra(&["mra", "project", "--poly=-1,-1", "--sigma", "0,1", "--L", "10", "--k", "1",
        "--samples", samples.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("breakpoint,value"));
    let rows: Vec<&str> = out.lines().skip(1).collect();
    let (last, body) = rows.split_last().unwrap();
    assert!(last.ends_with(','));
    for line in body {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 3.5);
    }
}

#[test]
fn nesting_and_xi() {
    let o = pvmra(&["mra", "xi", "--poly=-1,-1", "--sigma", "0,1"]);
    let xi = json(&o)["xi"][1].as_f64().unwrap();
    assert!((xi - 0.3819660112501051).abs() < 1e-12);
    let o = pvmra(&["mra", "nesting", "--poly=-1,-1", "--sigma", "0,1", "--L", "30", "--tau", "0,0"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["violations"], 0);
}

#[test]
fn every_subcommand_has_help() {
    for path in [
        "pv classify", "pv pvnorm", "qlat generate", "qlat gaps", "qlat check", "subst derive", "subst expand",
        "subst mask", "refine mahler", "refine rho", "refine hat", "refine meanlog", "refine sublevel",
        "refine erdos", "refine orbit", "mra xi", "mra nesting", "mra project",
    ] {
        let mut args: Vec<&str> = path.split(' ').collect();
        args.push("--help");
        assert!(pvmra(&args).status.success(), "{path}");
    }
}
