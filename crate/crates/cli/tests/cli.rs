use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnt-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}): {}", String::from_utf8_lossy(&o.stderr))
    })
}

fn geometries() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../geometries")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL_T2: &str = r#"{"n":2,"m":32,"frame":{"name":"t2_rotating","a":0.3},"group":"O",
    "u":[[1],[2]],"checks":["main","stokes","div_lemma"]}"#;

#[test]
fn verify_passes_and_reports_schema() {
    let o = run(&["verify", "--system", "random", "--p", "3", "--q", "2", "--trials", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["schema"], "gnt-lab-report");
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["exit_code"], 0);
    assert_eq!(r["config"]["command"]["name"], "verify");
    let trials = r["result"]["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 50);
    for t in trials {
        let names: Vec<&str> = t["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
        for want in ["gn1", "gn2", "gn3", "cayley_hamilton", "t_explicit"] {
            assert!(names.contains(&want));
        }
        assert!(t["checks"].as_array().unwrap().iter().all(|c| c["max_abs"] == 0.0));
    }
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&["verify", "--vary", "--p", "4", "--q", "3", "--trials", "8", "--seed", "17", "--classical", "--output", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        assert!(o.stdout.is_empty());
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // the output path is part of the embedded config; everything else must agree
    let strip = |bytes: &[u8]| -> Value {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        v["config"]["output"] = Value::Null;
        v
    };
    assert_eq!(strip(&x), strip(&y));
    let stdout_a = run(&["verify", "--trials", "5", "--seed", "3"]).stdout;
    let stdout_b = run(&["verify", "--trials", "5", "--seed", "3"]).stdout;
    assert_eq!(stdout_a, stdout_b);
}

#[test]
fn replay_matches_and_detects_tampering() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.json");
    let o = run(&["verify", "--vary", "--p", "4", "--q", "3", "--trials", "6", "--seed", "9", "--output", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let o = run(&["verify", "--replay", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["result"]["matches"], true);

    let mut v: Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    v["result"]["trials"][2]["seed"] = Value::from(1u64);
    let tampered = write(&dir, "tampered.json", &v.to_string());
    let o = run(&["verify", "--replay", tampered.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(report(&o)["result"]["matches"], false);
}

#[test]
fn exit_codes_for_bad_input_and_caps() {
    let o = run(&["verify", "--p", "0"]);
    assert_eq!(code(&o), 2);
    let r = report(&o);
    assert_eq!(r["status"], "invalid_input");
    assert!(r["error"].as_str().unwrap().contains("p, q"));

    let o = run(&["verify", "--p", "9", "--trials", "1"]);
    assert_eq!(code(&o), 3);
    assert_eq!(report(&o)["status"], "refused");

    assert_eq!(code(&run(&["kappa-table", "--p", "4", "--q", "2", "--r", "3"])), 2);
    assert_eq!(code(&run(&["verify", "--tol", "bogus=1"])), 2);

    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"n":2,"m":32,"frame":{"name":"t2_rotating"},"colour":1}"#);
    assert_eq!(code(&run(&["integrate", "--geometry", bad.to_str().unwrap()])), 2);

    // the smoothness guard refuses grids too coarse for the field
    let rough = write(&dir, "rough.json", r#"{"n":2,"m":4,"frame":{"name":"t2_rotating","a":2.0},"u":[[1]],"checks":["main"]}"#);
    assert_eq!(code(&run(&["integrate", "--geometry", rough.to_str().unwrap()])), 3);
}

#[test]
fn failing_check_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "t3.json",
        r#"{"n":3,"m":16,"frame":{"name":"random","p":2,"q":1,"seed":3},"group":"O","u":[[2]],"checks":["main"]}"#,
    );
    let o = run(&["integrate", "--geometry", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["integrate", "--geometry", cfg.to_str().unwrap(), "--tol", "integral=1e-14"]);
    assert_eq!(code(&o), 1);
    let r = report(&o);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["config"]["tolerances"]["integral"], 1e-14);
    assert_eq!(r["result"]["checks"][0]["pass"], false);
}

#[test]
fn kappa_table_codimension_one_row() {
    let o = run(&["kappa-table", "--p", "2", "--q", "1", "--r", "2"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r["result"]["value"], "1·κ·vol");
    assert_eq!(r["result"]["row"]["closed_form"]["coef"], "1");

    let o = run(&["kappa-table", "--p", "4", "--q", "2"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    let vals: Vec<&str> = r["result"]["values"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(vals, ["1·vol", "4·κ·vol", "8/3·κ^2·vol"]);
}

#[test]
fn integrate_shipped_t2_example() {
    let g = geometries().join("t2_rotating.json");
    let o = run(&["integrate", "--geometry", g.to_str().unwrap(), "--u", "1", "--check", "main"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let checks = report(&o)["result"]["checks"].as_array().unwrap().clone();
    assert_eq!(checks.len(), 1);
    assert!(checks[0]["residual"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn refinement_csv_is_written_atomically() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "t2.json", SMALL_T2);
    let csv_path = dir.path().join("study.csv");
    let out = dir.path().join("report.json");
    let o = run(&[
        "integrate", "--geometry", cfg.to_str().unwrap(), "--check", "div_lemma", "--u", "2",
        "--refine", "16,32,64", "--csv", csv_path.to_str().unwrap(), "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    let headers: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["check", "u", "m", "error", "residual", "order"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][5], "");
    for row in &rows[1..] {
        assert!(row[5].parse::<f64>().unwrap() >= 1.8, "{row:?}");
    }
    // nothing but the two outputs and the inputs in the directory: no stray temporaries
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["report.json", "study.csv", "t2.json"]);

    let o = run(&["integrate", "--geometry", cfg.to_str().unwrap(), "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "t2.json", SMALL_T2);
    let one = bin().args(["integrate", "--geometry", cfg.to_str().unwrap()]).env("GNT_LAB_THREADS", "1").output().unwrap();
    let three = bin().args(["integrate", "--geometry", cfg.to_str().unwrap()]).env("GNT_LAB_THREADS", "3").output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
    let bad = bin().args(["kappa-table", "--p", "2", "--q", "1"]).env("GNT_LAB_THREADS", "zero").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn gnt_and_classical_on_a_system_file() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", r#"{"p":2,"q":1,"matrices":[[[1,0],[0,2]]]}"#);
    let o = run(&["gnt", "--system", sys.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert!(r["result"]["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));

    let o = run(&["classical", "--system", sys.to_str().unwrap(), "--r-max", "2"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r["result"]["rows"][1]["S"], "2");

    let bad = write(&dir, "bad.json", r#"{"p":2,"q":1,"matrices":[[[1,0,0],[0,2,0]]]}"#);
    assert_eq!(code(&run(&["gnt", "--system", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["classical", "--r-max", "3"])), 2);
}
