use std::process::{Command, Output};

use serde_json::Value;

fn hypquot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypquot"))
        .args(args)
        .env_remove("HYPQUOT_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn l1_norm_in_a_tree_is_the_distance() {
    let out = hypquot(&["norm", "--group", "free:2", "--radius", "3", "--from", "e", "--to", "aba", "--p", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["solution"]["value"].as_f64(), Some(3.0));
}

#[test]
fn l2_norm_on_a_tree_path() {
    let out = hypquot(&["norm", "--group", "free:2", "--radius", "3", "--from", "e", "--to", "ab", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let value = json_of(&out)["solution"]["value"].as_f64().unwrap();
    assert!((value - 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn certify_holder_bound_on_z2z3() {
    let out = hypquot(&["certify", "2.9", "--group", "z2z3", "--radius", "6", "--p", "1.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let st = &v["statements"][0];
    assert_eq!(st["statement"], "2.9");
    assert_eq!(st["counts"]["violated"].as_u64(), Some(0));
    assert!(st["counts"]["holds"].as_u64().unwrap() > 0);
}

#[test]
fn counterexample_matches_closed_form() {
    let out = hypquot(&["counterexample", "--m", "2", "--d", "3", "--epsilon", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let ce = &json_of(&out)["counterexample"];
    let formula = ce["formula_value"].as_f64().unwrap();
    assert!((formula - 2.2771).abs() < 1e-3, "{formula}");
    assert!((ce["constructed_value"].as_f64().unwrap() - formula).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(hypquot(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hypquot(&["delta"]).status.code(), Some(2));
    let out = hypquot(&["certify", "2.9", "--group", "z2z3", "--radius", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"]["kind"], "usage");
}

#[test]
fn exact_delta_beyond_the_cap_is_a_resource_error() {
    let out = hypquot(&["delta", "--group", "surface2", "--radius", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_of(&out)["error"]["kind"], "resource");
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let body = |threads: &str| {
        let out = hypquot(&[
            "certify", "all", "--group", "z2z3", "--radius", "5", "--p", "1.2", "--samples", "60", "--pairs", "20",
            "--seed", "7", "--threads", threads,
        ]);
        assert_eq!(out.status.code(), Some(0));
        let mut v = json_of(&out);
        v.as_object_mut().unwrap().remove("timestamp");
        v
    };
    assert_eq!(body("1"), body("4"));
}

#[test]
fn graph_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("hypquot-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("ball.txt");
    let out = hypquot(&["graph", "--group", "grid2d", "--radius", "2", "--write", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let built = json_of(&out);
    let out = hypquot(&["graph", "--graph", file.to_str().unwrap()]);
    let loaded = json_of(&out);
    assert_eq!(built["vertices"], loaded["vertices"]);
    assert_eq!(built["edges"], loaded["edges"]);
    let out = hypquot(&["norm", "--graph", file.to_str().unwrap(), "--from", "0", "--to", "5", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn decompose_reads_a_chain_file() {
    let dir = std::env::temp_dir().join(format!("hypquot-dec-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let graph = dir.join("cycle.txt");
    std::fs::write(&graph, "4 4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let chain = dir.join("chain.txt");
    std::fs::write(&chain, "0 1 1.5\n1 2 1.5\n0 3 -0.5\n3 2 -0.5\n").unwrap();
    let out = hypquot(&["decompose", "--graph", graph.to_str().unwrap(), "--chain", chain.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!((v["alpha_sum"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).unwrap();
}
