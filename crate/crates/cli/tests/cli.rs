use relk::relk0::{DegreewiseTriple, RelationPayload};
use relk::rings::{Matrix, Surjection};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn relk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relk")).args(args).env_remove("RELK_MAX_CANDIDATES").output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report on stdout")
}

fn checks(r: &Value) -> &Vec<Value> {
    r["body"]["checks"].as_array().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn heller_reports_the_unit_cokernel() {
    let out = relk(&["heller", "--surjection", "Z->Z/5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["header"]["schema_version"], 1);
    assert_eq!(r["body"]["pass"], true);
    let c = &checks(&r)[0];
    assert_eq!(c["id"], "heller:Z->Z/5");
    assert_eq!(c["detail"]["group_order"], 2);
    assert!(c.get("witness").is_none());
}

#[test]
fn cycle_map_passes_at_bound_three() {
    let out = relk(&["cycmap", "--field", "2", "--modulus", "t^2", "--bound", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    let d = &checks(&r)[0]["detail"];
    assert_eq!(d["isomorphism"], true);
    assert_eq!(d["chow_order"], 2);
    assert!(d["probe"].is_object());
}

#[test]
fn chow_reports_invariant_factors() {
    let out = relk(&["chow", "--field", "2", "--modulus", "t", "--bound", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    let d = &checks(&r)[0]["detail"];
    assert_eq!(d["order"], 1);
}

#[test]
fn verify_suite_passes_on_every_surjection() {
    let out = relk(&["verify", "--suite", "chi_composite", "--seed", "1", "--count", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["body"]["total"], 250);
    assert_eq!(r["body"]["passed"], 250);
    let ids: Vec<&str> = checks(&r).iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"chi_composite:Z->Z/8:00049"));
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bodies_are_reproducible() {
    let args = ["verify", "--suite", "chi_shift", "--surjection", "Z/9->Z/3", "--seed", "7", "--count", "30"];
    let a = report(&relk(&args));
    let b = report(&relk(&args));
    assert_eq!(a["body"], b["body"]);
    let t = ["transfer", "--field", "3", "--modulus", "t^2+1", "--seed", "4", "--count", "5"];
    assert_eq!(report(&relk(&t))["body"], report(&relk(&t))["body"]);
}

#[test]
fn unknown_suite_is_invalid() {
    let out = relk(&["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--suite"));
}

#[test]
fn invalid_instances_name_the_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad_ref = write(
        dir.path(),
        "a.json",
        r#"{"schema_version":1,"surjection":"Z->Z/5",
            "complexes":{"P":{"lo":0,"ranks":[1]}},
            "triples":{"T":{"complex":{"p":"P","q":"X","alpha":{"lo":0,"components":[]}}}}}"#,
    );
    let out = relk(&["class", "--instance", &bad_ref]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("triples.T.complex.q: unknown complex `X`"), "{}", stderr(&out));

    let bad_version = write(dir.path(), "b.json", r#"{"schema_version":2}"#);
    let out = relk(&["class", "--instance", &bad_version]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("schema_version"));

    let unknown_field = write(dir.path(), "c.json", r#"{"schema_version":1,"extra":0}"#);
    assert_eq!(relk(&["class", "--instance", &unknown_field]).status.code(), Some(2));

    let not_surjective = write(
        dir.path(),
        "d.json",
        r#"{"schema_version":1,"surjection":"Z->Z/5",
            "matrices":{"u":{"over":"target","rows":[[0]]}},
            "triples":{"T":{"degreewise":{"phi":"u"}}}}"#,
    );
    let out = relk(&["class", "--instance", &not_surjective]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("triples.T"), "{}", stderr(&out));
}

#[test]
fn class_of_instance_triples() {
    let dir = tempfile::tempdir().unwrap();
    // [Z --3--> Z] with Q = 0 has class 3^{-1} = 2 in (Z/5)^× / {±1}
    let path = write(
        dir.path(),
        "t.json",
        r#"{"schema_version":1,"surjection":"Z->Z/5",
            "matrices":{"u":{"over":"target","rows":[[2]]},"d":{"over":"source","rows":[[3]]}},
            "complexes":{"P":{"lo":0,"ranks":[1,1],"diffs":["d"]},"O":{"lo":0,"ranks":[]}},
            "triples":{"T":{"degreewise":{"phi":"u"}},
                       "C":{"complex":{"p":"P","q":"O","alpha":{"lo":0,"components":[]}}}}}"#,
    );
    let out = relk(&["class", "--instance", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    let cs = checks(&r);
    assert_eq!(cs[0]["id"], "class:C");
    let two_or_three = |v: &Value| v == "2" || v == "3";
    assert!(two_or_three(&cs[0]["detail"]["class"]), "{}", cs[0]);
    assert!(two_or_three(&cs[1]["detail"]["class"]), "{}", cs[1]);
    assert_eq!(cs[0]["detail"]["class"], cs[1]["detail"]["class"]);
    assert_ne!(cs[0]["instance"], cs[1]["instance"]);

    let out = relk(&["class", "--instance", &path, "--triple", "T"]);
    assert_eq!(report(&out)["body"]["total"], 1);
}

#[test]
fn guard_trips_with_its_own_exit_code() {
    let out = relk(&["cycmap", "--field", "2", "--modulus", "t^2", "--bound", "3", "--max-candidates", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("cap of 10"));

    let out = Command::new(env!("CARGO_BIN_EXE_relk"))
        .args(["chow", "--field", "2", "--modulus", "t^2", "--bound", "3"])
        .env("RELK_MAX_CANDIDATES", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn replay_reports_a_failing_witness() {
    let surj = Surjection::parse("Z->Z/5").unwrap();
    let b = surj.target();
    let first = DegreewiseTriple::new(&surj, &Matrix::from_i64(b, &[&[2]])).unwrap();
    let second = DegreewiseTriple::new(&surj, &Matrix::identity(b, 2)).unwrap();
    let payload = RelationPayload::RelBCompose { first, second };
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.json", &serde_json::to_string(&payload).unwrap());
    let out = relk(&["verify", "--replay", &path]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let c = &checks(&r)[0];
    assert_eq!(c["pass"], false);
    assert_eq!(c["witness"]["payload"]["kind"], "rel_b_compose");

    // a report with failures replays its witnesses
    let report_path = write(dir.path(), "r.json", &String::from_utf8(out.stdout).unwrap());
    let again = relk(&["verify", "--replay", &report_path]);
    assert_eq!(again.status.code(), Some(1));
    assert_eq!(checks(&report(&again))[0]["pass"], false);
}

#[test]
fn replay_accepts_a_passing_payload() {
    let surj = Surjection::parse("Z->Z/8").unwrap();
    let b = surj.target();
    let first = DegreewiseTriple::new(&surj, &Matrix::from_i64(b, &[&[3]])).unwrap();
    let second = DegreewiseTriple::new(&surj, &Matrix::from_i64(b, &[&[5]])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let body = serde_json::json!({ "payload": RelationPayload::RelBCompose { first, second } });
    let path = write(dir.path(), "p.json", &body.to_string());
    let out = relk(&["verify", "--replay", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn sampled_transfer_and_locus_pass() {
    for cmd in ["transfer", "locus"] {
        let out = relk(&[cmd, "--field", "2", "--modulus", "t^2", "--seed", "3", "--count", "8"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", stderr(&out));
        assert_eq!(report(&out)["body"]["passed"], 8);
    }
    let out = relk(&["transfer", "--field", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transfer_of_instance_matrices() {
    let dir = tempfile::tempdir().unwrap();
    // S = A[y]/(y^2 + 1) over F3, modulus t; det(y) = 1 and N(y) = 1
    let path = write(
        dir.path(),
        "t.json",
        r#"{"schema_version":1,"modulus":{"field":3,"modulus":[0,1]},
            "algebra":{"field":3,"relation":[[1],[],[1]]},
            "algebra_matrices":{"y":{"entries":[[[[],[1]]]]}}}"#,
    );
    let out = relk(&["transfer", "--instance", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    let c = &checks(&r)[0];
    assert_eq!(c["id"], "transfer:y");
    assert_eq!(c["detail"]["norm"], c["detail"]["transfer_det"]);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = relk(&["--out", path.to_str().unwrap(), "heller", "--surjection", "Z/9->Z/3"]);
    assert_eq!(out.status.code(), Some(0));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved["body"]["checks"][0]["id"], "heller:Z/9->Z/3");
}
