use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qntk_core::io::{circuit_to_json, training_to_csv};
use qntk_core::oracle::random::{random_template, RandomTemplateSpec};
use qntk_core::oracle::Oracle;
use qntk_core::trained_mean::{invert_gram, regress, InverseOptions};
use qntk_core::{CircuitTemplate, Estimator, InputPoint, SampleSet, TrainingSet};
use serde_json::Value;
use tempfile::TempDir;

const COS_CIRCUIT: &str = r#"{
  "n": 1,
  "layers": [[{"gate": "H", "qubits": [0]}], [{"gate": "H", "qubits": [0]}]],
  "generators": ["Z"],
  "observable": [{"coeff": 1.0, "pauli": "Z"}]
}"#;

fn qntk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qntk"))
        .args(args)
        .output()
        .expect("failed to run qntk")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("qntk exited by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_of(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn bits(s: &str) -> InputPoint {
    s.parse().unwrap()
}

/// Three training points with labels and a query whose exact training kernel
/// is comfortably invertible.
fn regression_instance() -> (CircuitTemplate, TrainingSet, InputPoint) {
    let oracle = Oracle::from_env();
    let train = [bits("001"), bits("010"), bits("100")];
    let query = bits("111");
    for seed in 0.. {
        let t = random_template(&RandomTemplateSpec::new(3, 4, 2).with_inputs(3), seed);
        let mut all = train.to_vec();
        all.push(query.clone());
        let Ok(gram) = oracle.exact_gram_enumeration(&t, &all) else { continue };
        let Ok(inv) = invert_gram(&gram.view((0, 0), (3, 3)).into_owned()) else { continue };
        if inv.condition_number > 20.0 || inv.lambda_min < 0.1 || gram[(3, 0)].abs() < 0.1 {
            continue;
        }
        let training = TrainingSet::new(train.to_vec(), vec![1.0, -0.5, 0.75]).unwrap();
        let exact = oracle.exact_mu_infinity(&t, &query, &training).unwrap();
        // Skip instances where a handful of samples already gives the exact answer.
        let pilot = SampleSet::random(t.num_params(), 100, 1).unwrap();
        let est = Estimator::with_workers(&t, 1);
        let Ok(r) = regress(&est, &training, std::slice::from_ref(&query), &pilot, &InverseOptions::default()) else {
            continue;
        };
        if (r.mu_values[0] - exact).abs() > 1e-3 {
            return (t, training, query);
        }
    }
    unreachable!()
}

fn regression_files(dir: &TempDir) -> (PathBuf, PathBuf, CircuitTemplate, TrainingSet, InputPoint) {
    let (t, training, query) = regression_instance();
    let c = write(dir, "circuit.json", &circuit_to_json(&t));
    let d = write(dir, "train.csv", &training_to_csv(&training));
    (c, d, t, training, query)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn cos_circuit_ntk_is_one_half() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cos.json", COS_CIRCUIT);
    let mut within = 0;
    for seed in 0..20 {
        let seed = seed.to_string();
        let v = json_of(&qntk(&["estimate-ntk", "--circuit", s(&c), "--epsilon", "0.05", "--delta", "0.05", "--seed", &seed]));
        assert_eq!(v["N"], 3935);
        if (f(&v["value"]) - 0.5).abs() < 0.05 {
            within += 1;
        }
    }
    assert!(within >= 19, "{within} of 20 seeds within 0.05");
}

#[test]
fn ntk_output_fields() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cos.json", COS_CIRCUIT);
    let out = dir.path().join("out.json");
    let r = qntk(&["estimate-ntk", "--circuit", s(&c), "--samples", "500", "--seed", "7", "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let text = std::fs::read_to_string(&out).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    for key in ["value", "N", "std_error", "seed", "epsilon", "delta", "elapsed_ms"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["N"], 500);
    assert_eq!(v["seed"], 7);
    assert!(v["epsilon"].is_null());
    assert!(text.contains("e-1"), "floats use exponent notation: {text}");

    let e = json_of(&qntk(&["estimate-ntk", "--circuit", s(&c), "--enumerate"]));
    assert_eq!(f(&e["value"]), 0.5);
    assert_eq!(e["sampling"], "enumeration");
    assert!(e["seed"].is_null());
}

#[test]
fn malformed_json_exits_2_with_position() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "bad.json", "{\n  \"n\": 1,\n  \"layers\": [\n");
    let r = qntk(&["estimate-ntk", "--circuit", s(&c), "--samples", "10"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("line"), "{}", stderr(&r));

    let c = write(&dir, "pauli.json", &COS_CIRCUIT.replace("[\"Z\"]", "[\"Q\"]"));
    let r = qntk(&["estimate-ntk", "--circuit", s(&c), "--samples", "10"]);
    assert_eq!(code(&r), 2, "{}", stderr(&r));
    assert!(stderr(&r).contains("column"), "{}", stderr(&r));

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&missing), "--samples", "10"])), 2);
}

#[test]
fn bad_targets_exit_3() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cos.json", COS_CIRCUIT);
    let r = qntk(&["estimate-ntk", "--circuit", s(&c), "--epsilon", "0.05", "--delta", "1.5"]);
    assert_eq!(code(&r), 3);
    assert!(stderr(&r).contains("delta"), "{}", stderr(&r));
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&c), "--epsilon", "-1", "--delta", "0.1"])), 3);
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&c), "--samples", "0"])), 3);
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&c)])), 3);
}

#[test]
fn wrong_query_width_exits_2() {
    let dir = TempDir::new().unwrap();
    let (c, _, _, _, _) = regression_files(&dir);
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&c), "--query", "01", "--samples", "10"])), 2);
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&c), "--query", "0a1", "--samples", "10"])), 2);
    assert_eq!(code(&qntk(&["estimate-ntk", "--circuit", s(&c), "--samples", "10"])), 2);
}

#[test]
fn empty_dataset_exits_2() {
    let dir = TempDir::new().unwrap();
    let (c, _, _, _, _) = regression_files(&dir);
    for (name, text) in [("empty.csv", ""), ("header.csv", "x,y\n")] {
        let d = write(&dir, name, text);
        let r = qntk(&["estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "111", "--samples", "100"]);
        assert_eq!(code(&r), 2, "{name}: {}", stderr(&r));
    }
    let d = write(&dir, "dup.csv", "001,1\n001,2\n");
    assert_eq!(code(&qntk(&["estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "111", "--samples", "100"])), 2);
}

#[test]
fn mu_matches_exact_within_three_std_errors() {
    let dir = TempDir::new().unwrap();
    let (c, d, t, training, query) = regression_files(&dir);
    let exact = Oracle::from_env().exact_mu_infinity(&t, &query, &training).unwrap();
    let v = json_of(&qntk(&[
        "estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "111", "--samples", "100000", "--seed", "11",
    ]));
    let q = &v["queries"][0];
    let (mu, se) = (f(&q["mu"]), f(&q["std_error"]));
    assert!(se > 0.0 && se < 0.05, "std error {se}");
    assert!((mu - exact).abs() <= 3.0 * se, "mu {mu} exact {exact} se {se}");
    assert_eq!(v["N"], 100000);
    assert!(f(&v["inverse"]["condition_number"]) >= 1.0);
    assert!(f(&v["inverse"]["residual"]) < 1e-10);
    assert_eq!(v["gram"]["matrix"].as_array().unwrap().len(), 3);
    assert_eq!(v["regularized"], false);
}

#[test]
fn mu_interpolates_training_points_under_enumeration() {
    let dir = TempDir::new().unwrap();
    let (c, d, _, training, _) = regression_files(&dir);
    let v = json_of(&qntk(&[
        "estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "010", "--query", "111", "--enumerate",
    ]));
    let q = &v["queries"][0];
    assert_eq!(q["x"], "010");
    assert!((f(&q["mu"]) - training.labels()[1]).abs() < 1e-10);
    assert_eq!(f(&q["training_label"]), training.labels()[1]);
    assert!(v["queries"][1]["training_label"].is_null());
}

#[test]
fn mu_from_epsilon_runs_a_pilot() {
    let dir = TempDir::new().unwrap();
    let (c, d, _, _, _) = regression_files(&dir);
    let size = json_of(&qntk(&[
        "sample-size", "mu", "--circuit", s(&c), "--data", s(&d), "--epsilon", "1.0", "--delta", "0.1", "--pilot", "200",
    ]));
    let needed = size["N"].as_u64().unwrap();
    assert!(needed > 1000);
    let r = qntk(&[
        "estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "111", "--epsilon", "1.0", "--delta", "0.1",
        "--pilot", "200", "--max-samples", "1000",
    ]);
    assert_eq!(code(&r), 3, "{}", stderr(&r));
    assert!(stderr(&r).contains(&format!("N = {needed}")), "{}", stderr(&r));

    let uniform = json_of(&qntk(&[
        "sample-size", "mu", "--circuit", s(&c), "--data", s(&d), "--epsilon", "1.0", "--delta", "0.1", "--pilot", "200",
        "--uniform-over-X",
    ]));
    assert_eq!(uniform["feature_space_size"], 8);
    assert!(uniform["N"].as_u64().unwrap() > needed);
}

#[test]
fn singular_gram_exits_4() {
    let dir = TempDir::new().unwrap();
    // f depends on the input only through a global sign, so the kernel has rank one.
    let c = write(
        &dir,
        "rank1.json",
        r#"{"n": 1, "input_bits": 2,
            "layers": [[{"gate": "X", "qubits": [0], "if_bit": 0}, {"gate": "H", "qubits": [0]}], [{"gate": "H", "qubits": [0]}]],
            "generators": ["Z"],
            "observable": [{"coeff": 1.0, "pauli": "Z"}]}"#,
    );
    let d = write(&dir, "train.csv", "00,1\n10,2\n");
    let r = qntk(&["estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "11", "--enumerate"]);
    assert_eq!(code(&r), 4, "{}", stderr(&r));
    assert!(stderr(&r).contains("not invertible"));
    let r = qntk(&["estimate-mu", "--circuit", s(&c), "--data", s(&d), "--query", "11", "--enumerate", "--ridge", "0.1"]);
    let v = json_of(&r);
    assert_eq!(v["regularized"], true);
    assert!(stderr(&r).contains("ridge"));
}

#[test]
fn sample_size_calculators() {
    let v = json_of(&qntk(&["sample-size", "ntk", "--epsilon", "0.1", "--delta", "0.01", "--params", "10", "--terms", "1"]));
    assert_eq!(v["N"], 141289);
    let r = qntk(&["sample-size", "ntk", "--epsilon", "0.1", "--delta", "1.5", "--params", "10", "--terms", "1"]);
    assert_eq!(code(&r), 3);

    let r = qntk(&["sample-size", "mu", "--epsilon", "0.1", "--delta", "0.01", "--params", "10", "--terms", "1"]);
    assert_eq!(code(&r), 3, "{}", stderr(&r));
    let v = json_of(&qntk(&[
        "sample-size", "mu", "--epsilon", "0.1", "--delta", "0.01", "--params", "4", "--terms", "2", "--d-train", "3",
        "--norm-k-inv", "2", "--norm-y", "1.5", "--norm-k-inv-y", "1",
    ]));
    assert!(v["N"].as_u64().unwrap() > 0);
    assert!(v["pilot"].is_null());
    let r = qntk(&[
        "sample-size", "mu", "--epsilon", "1000", "--delta", "0.01", "--params", "4", "--terms", "2", "--d-train", "3",
        "--norm-k-inv", "2", "--norm-y", "1.5", "--norm-k-inv-y", "1",
    ]);
    assert_eq!(code(&r), 3, "epsilon above the limit: {}", stderr(&r));
}

#[test]
fn sample_size_pilot_reports_norms() {
    let dir = TempDir::new().unwrap();
    let (c, d, _, training, _) = regression_files(&dir);
    let v = json_of(&qntk(&[
        "sample-size", "mu", "--circuit", s(&c), "--data", s(&d), "--epsilon", "0.5", "--delta", "0.1", "--pilot", "500",
    ]));
    let pilot = &v["pilot"];
    assert_eq!(pilot["N"], 500);
    for key in ["norm_k_inv", "norm_y", "norm_k_inv_y"] {
        assert!(f(&pilot[key]) > 0.0, "{key}");
    }
    let norm_y = training.labels().iter().map(|y| y * y).sum::<f64>().sqrt();
    assert!((f(&pilot["norm_y"]) - norm_y).abs() < 1e-15);
    assert!(v["N"].as_u64().unwrap() > 0);
    assert_eq!(v["d_train"], 3);
}

fn without_elapsed(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"elapsed_ms\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn outputs_are_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let (c, d, _, _, _) = regression_files(&dir);
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("ntk", vec!["estimate-ntk", "--query", "001", "--query", "111", "--samples", "3000", "--seed", "5"]),
        ("gram", vec!["estimate-gram", "--query", "000", "--query", "111", "--samples", "3000", "--seed", "5"]),
        ("mu", vec!["estimate-mu", "--query", "111", "--samples", "3000", "--seed", "5"]),
    ];
    for (name, args) in runs {
        let mut texts = Vec::new();
        for workers in ["1", "2", "4", "0"] {
            let out = dir.path().join(format!("{name}-{workers}.json"));
            let mut full = args.clone();
            full.extend(["--circuit", s(&c), "--workers", workers, "--out", s(&out)]);
            if name != "ntk" {
                full.extend(["--data", s(&d)]);
            }
            let r = qntk(&full);
            assert_eq!(code(&r), 0, "{name}: {}", stderr(&r));
            texts.push(without_elapsed(&std::fs::read_to_string(&out).unwrap()));
        }
        assert!(texts.windows(2).all(|w| w[0] == w[1]), "{name} differs across worker counts");
    }
}

#[test]
fn gram_from_dataset_and_queries() {
    let dir = TempDir::new().unwrap();
    let (c, d, t, _, _) = regression_files(&dir);
    let v = json_of(&qntk(&["estimate-gram", "--circuit", s(&c), "--data", s(&d), "--query", "111", "--query", "001", "--enumerate"]));
    let inputs: Vec<InputPoint> = v["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| bits(x.as_str().unwrap()))
        .collect();
    assert_eq!(inputs.len(), 4);
    let exact = Oracle::from_env().exact_gram_enumeration(&t, &inputs).unwrap();
    let m = v["gram"]["matrix"].as_array().unwrap();
    for r in 0..4 {
        for col in 0..4 {
            assert!((f(&m[r][col]) - exact[(r, col)]).abs() < 1e-12);
        }
    }
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let ok = qntk(&["verify"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let table = String::from_utf8_lossy(&ok.stdout);
    assert!(table.lines().filter(|l| l.starts_with("PASS")).count() >= 10);

    let bad = qntk(&["verify", "--inject-phase-fault"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
    assert!(stderr(&bad).contains("verification failed"));
}

#[test]
fn nonzero_mean_warns() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "const.json",
        r#"{"n": 1, "layers": [[], []], "generators": ["Z"], "observable": [{"coeff": 1.0, "pauli": "Z"}]}"#,
    );
    let r = qntk(&["estimate-ntk", "--circuit", s(&c), "--samples", "200"]);
    let v = json_of(&r);
    assert!(stderr(&r).contains("warning"));
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn quick_bench_writes_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let r = qntk(&["bench", "--quick", "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("sweep,n,L,m,N,seconds"));
    assert_eq!(csv.lines().count(), 13);
    assert!(String::from_utf8_lossy(&r.stdout).contains("exponent in n"));
}
