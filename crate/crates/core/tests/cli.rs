use std::process::Command;

fn avgrl(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_avgrl")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_prints_the_structure_line() {
    assert_eq!(avgrl(&["validate", "WeaklyComm3"]).1, "class=WeaklyCommunicating transient=[0]\n");
    assert_eq!(avgrl(&["validate", "Triangle"]).1, "class=Communicating transient=[]\n");
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"states":["a"],"actions":["x"],"transitions":[{"s":"a","a":"x","next":"a","reward":0,"prob":0.9}]}"#,
    );
    let (code, _, err) = avgrl(&["validate", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
    assert_eq!(avgrl(&["validate", "NoSuchModel"]).0, 2);
    assert_eq!(avgrl(&["bogus"]).0, 2);
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        &dir,
        "sticky.json",
        r#"{"states":["a","b"],"actions":["x"],"transitions":[
            {"s":"a","a":"x","next":"a","reward":0,"prob":0.999999999999999},
            {"s":"a","a":"x","next":"b","reward":0,"prob":0.000000000000001},
            {"s":"b","a":"x","next":"b","reward":1,"prob":0.999999999999999},
            {"s":"b","a":"x","next":"a","reward":1,"prob":0.000000000000001}]}"#,
    );
    let policy = write(&dir, "policy.json", "[[1.0], [1.0]]");
    let (code, _, err) = avgrl(&["analyze", &model, "--policy", &policy]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn solve_probe_and_analyze_outputs() {
    let (code, out, _) = avgrl(&["solve", "TwoStateSwitch", "--f", "entry:1,dashed"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(report["residual_sup"].as_f64().unwrap() <= 1e-9);
    assert!(report["witness_q"]["values"][1].as_f64().unwrap().abs() <= 1e-9);

    let (code, out, _) = avgrl(&["probe", "Triangle", "--samples", "3", "--seed", "4"]);
    assert_eq!(code, 0);
    let (members, midpoints) = out.split_once("\n\n").unwrap();
    assert!(members.starts_with("member,q_1_solid,"));
    assert!(midpoints.starts_with("member_a,member_b,distance,midpoint_residual"));

    let dir = tempfile::tempdir().unwrap();
    let policy = write(&dir, "policy.json", "[[1, 0], [1, 0]]");
    let (code, out, _) = avgrl(&["analyze", "TwoStateSwitch", "--policy", &policy]);
    assert_eq!(code, 0);
    assert_eq!(out, "state,class,p_1,p_2,reward_rate\n1,0,1,0,0\n2,1,0,1,0\n");
}

#[test]
fn induce_prints_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let options = write(
        &dir,
        "options.json",
        r#"{"options": [{"name": "hop", "policy": [{"s": "1", "a": "dashed", "prob": 1}, {"s": "2", "a": "dashed", "prob": 1}],
                         "termination": [{"s": "1", "beta": 1}]}]}"#,
    );
    let (code, out, err) = avgrl(&["induce", "TwoStateSwitch", &options]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "state,option,exp_reward,exp_length,p_1,p_2\n1,hop,-2,2,1,0\n2,hop,-1,1,1,0\n");
}

#[test]
fn run_writes_files_and_honours_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        &dir,
        "p1.json",
        r#"{"model": {"builtin": "TwoStateSwitch"},
            "learner": {"algorithm": "differential", "eta": 1.0, "alpha": {"law": "constant", "c": 0.1}, "r_bar0": -3.0},
            "behavior": [0.8, 0.2], "start_state": "1", "steps": 1000, "runs": 10, "record_every": 10, "seed": 0}"#,
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "7"), (&out_b, "7")] {
        let (code, _, err) = avgrl(&["run", &config, "--out-dir", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0, "{err}");
    }
    let a = std::fs::read(out_a.join("runs.csv")).unwrap();
    assert_eq!(a, std::fs::read(out_b.join("runs.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1001);
    let report = std::fs::read_to_string(out_a.join("convergence.csv")).unwrap();
    assert_eq!(report.lines().count(), 11);

    let (code, out, _) = avgrl(&["run", &config, "--format", "json"]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 10);

    let zero = write(&dir, "zero.json", &std::fs::read_to_string(&config).unwrap().replace("\"steps\": 1000", "\"steps\": 0"));
    assert_eq!(avgrl(&["run", &zero]).0, 2);
}
