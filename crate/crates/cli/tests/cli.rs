use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ffq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffq"))
        .args(args)
        .env_remove("FFQ_SEED")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = ffq(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let text = std::fs::read_to_string(path).unwrap();
    jsonschema::JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let s = schema(name);
    let msgs: Vec<String> = match s.validate(v) {
        Ok(()) => return,
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    panic!("{name} output violates schema: {msgs:?}\n{v:#}");
}

const ADVERSARIAL: &str = "x^17+x^16+x^14+x^13+x^8+x^7+x^6+x^5+x^4+x^3+x^2+x+1";

#[test]
fn factor_example() {
    let v = ok_json(&[
        "factor",
        "--p",
        "2",
        "--poly",
        "x^6+x^4+x+1",
        "--oracle",
        "quantum-sim",
        "--seed",
        "7",
        "--json",
    ]);
    let factors = v["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 3);
    assert!(factors.iter().all(|f| f["multiplicity"] == 1));
    let degrees: Vec<u64> = factors
        .iter()
        .map(|f| f["degree"].as_u64().unwrap())
        .collect();
    assert_eq!(degrees, vec![1, 2, 3]);
    assert_eq!(v["unit"], "1");
    assert_eq!(v["seed"], 7);
    assert_valid("factor", &v);
}

#[test]
fn factor_text_output() {
    let out = ffq(&["factor", "--p", "3", "--poly", "2*x^2+x", "--seed", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("F_3: 2*x^2+x = [2] * (x) * (x+2)"),
        "{text}"
    );
}

#[test]
fn order_example() {
    let out = ffq(&[
        "order",
        "--p",
        "2",
        "--modulus",
        "x^3+x+1",
        "--ell",
        "3",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains(" is 3 "));
    let v = ok_json(&[
        "order",
        "--p",
        "2",
        "--modulus",
        "x^3+x+1",
        "--ell",
        "3",
        "--seed",
        "1",
        "--json",
    ]);
    assert_eq!(v["order"], "3");
    assert!(v["transcript"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["verified"] == true));
    assert_valid("order", &v);
}

#[test]
fn exact_backend() {
    let v = ok_json(&[
        "order",
        "--p",
        "3",
        "--poly",
        "x^5+2*x+1",
        "--oracle",
        "exact",
        "--seed",
        "0",
        "--json",
    ]);
    assert_eq!(v["order"], "5");
    assert_eq!(v["backend"], "exact");
    assert_valid("order", &v);
}

#[test]
fn parse_error_exits_1_without_output() {
    for args in [
        &["factor", "--p", "2", "--poly", "x+"][..],
        &[
            "factor", "--p", "2", "--poly", "x+", "--json", "--seed", "1",
        ],
        &["factor", "--p", "4", "--poly", "x+1", "--seed", "1"],
        &[
            "factor", "--p", "3", "--m", "2", "--h", "y^2+2", "--poly", "x", "--seed", "1",
        ],
        &["factor", "--p", "2", "--no-such-flag"],
        &["ddf", "--p", "2", "--poly", "x^2", "--seed", "1"],
        &[
            "stats",
            "factor-count",
            "--p",
            "2",
            "--n",
            "4",
            "--trials",
            "10",
            "--seed",
            "1",
        ],
    ] {
        let out = ffq(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn json_requires_seed() {
    let out = ffq(&["factor", "--p", "2", "--poly", "x+1", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let via_env = Command::new(env!("CARGO_BIN_EXE_ffq"))
        .args(["factor", "--p", "2", "--poly", "x^6+x^4+x+1", "--json"])
        .env("FFQ_SEED", "7")
        .output()
        .unwrap();
    assert!(via_env.status.success());
    let direct = ffq(&[
        "factor",
        "--p",
        "2",
        "--poly",
        "x^6+x^4+x+1",
        "--json",
        "--seed",
        "7",
    ]);
    assert_eq!(via_env.stdout, direct.stdout);
}

#[test]
fn oracle_exhausted_exits_3() {
    // the Frobenius order modulo a degree-12 irreducible is 12 > 2^2
    let args = [
        "order",
        "--p",
        "2",
        "--modulus",
        "x^12+x^3+1",
        "--ell",
        "2",
        "--seed",
        "1",
        "--json",
    ];
    let out = ffq(&args);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn byte_identical_reruns() {
    let runs: [&[&str]; 6] = [
        &[
            "factor",
            "--p",
            "5",
            "--poly",
            "x^9+3*x^4+x^2+1",
            "--json",
            "--seed",
            "11",
        ],
        &[
            "factor",
            "--p",
            "7",
            "--m",
            "2",
            "--poly",
            "x^6+[y]*x+1",
            "--json",
            "--seed",
            "12",
        ],
        &[
            "ddf",
            "--p",
            "2",
            "--poly",
            ADVERSARIAL,
            "--json",
            "--seed",
            "13",
        ],
        &[
            "order",
            "--p",
            "3",
            "--modulus",
            "x^7+2*x+1",
            "--json",
            "--seed",
            "14",
            "--mode",
            "idealized",
        ],
        &[
            "stats",
            "factor-count",
            "--p",
            "3",
            "--n",
            "10",
            "--trials",
            "200",
            "--json",
            "--seed",
            "15",
        ],
        &[
            "stats",
            "splitting-degree",
            "--p",
            "5",
            "--n",
            "12",
            "--trials",
            "100",
            "--json",
            "--seed",
            "16",
        ],
    ];
    for args in runs {
        let a = ffq(args);
        let b = ffq(args);
        assert!(
            a.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn random_field_modulus_is_reported_and_reproducible() {
    let args = [
        "factor", "--p", "3", "--m", "3", "--poly", "x^4+1", "--json", "--seed", "5",
    ];
    let v = ok_json(&args);
    let h = v["field"]["h"].as_str().unwrap().to_string();
    assert!(h.starts_with("y^3"));
    assert_valid("factor", &v);
    let again = ok_json(&[
        "factor", "--p", "3", "--m", "3", "--h", &h, "--poly", "x^4+1", "--json", "--seed", "5",
    ]);
    assert_eq!(v, again);
}

#[test]
fn ddf_output() {
    let v = ok_json(&[
        "ddf",
        "--p",
        "2",
        "--poly",
        ADVERSARIAL,
        "--ell",
        "8",
        "--json",
        "--seed",
        "3",
    ]);
    let degrees: Vec<u64> = v["parts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["degree"].as_u64().unwrap())
        .collect();
    assert_eq!(degrees, vec![2, 3, 5, 7]);
    assert_eq!(v["fallbacks"], 0);
    assert_valid("ddf", &v);
}

#[test]
fn ddf_verbose_trace_is_json_lines() {
    let out = ffq(&[
        "ddf",
        "--p",
        "2",
        "--poly",
        ADVERSARIAL,
        "--seed",
        "3",
        "--verbose",
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let records: Vec<Value> = stderr
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!records.is_empty());
    for r in &records {
        for key in [
            "input_degree",
            "s",
            "ell_used",
            "fallback",
            "d",
            "primes",
            "children",
        ] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(records[0]["input_degree"], 17);
}

#[test]
fn poly_file_input() {
    let dir = std::env::temp_dir().join(format!("ffq-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f.txt");
    std::fs::write(&path, "x^6+x^4+x+1\n").unwrap();
    let from_file = ffq(&[
        "factor",
        "--p",
        "2",
        "--poly-file",
        path.to_str().unwrap(),
        "--json",
        "--seed",
        "7",
    ]);
    let inline = ffq(&[
        "factor",
        "--p",
        "2",
        "--poly",
        "x^6+x^4+x+1",
        "--json",
        "--seed",
        "7",
    ]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, inline.stdout);
}

#[test]
fn extension_field_factor() {
    let v = ok_json(&[
        "factor",
        "--p",
        "3",
        "--m",
        "2",
        "--modulus",
        "y^2+1",
        "--poly",
        "x^2+1",
        "--json",
        "--seed",
        "2",
    ]);
    let polys: Vec<&str> = v["factors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["poly"].as_str().unwrap())
        .collect();
    assert_eq!(polys, vec!["x+[y]", "x+[2*y]"]);
    assert_eq!(v["field"]["h"], "y^2+1");
    assert_valid("factor", &v);
}

#[test]
fn factor_count_linear() {
    let v = ok_json(&[
        "stats",
        "factor-count",
        "--p",
        "7",
        "--n",
        "1",
        "--trials",
        "100",
        "--json",
        "--seed",
        "1",
    ]);
    assert_eq!(v["mean"], 1.0);
    assert_eq!(v["variance"], 0.0);
    assert_valid("factor-count", &v);
}

#[test]
fn factor_count_exhaustive_and_policy() {
    let distinct = ok_json(&[
        "stats",
        "factor-count",
        "--p",
        "2",
        "--n",
        "4",
        "--exhaustive",
        "--json",
        "--seed",
        "1",
    ]);
    let with_mult = ok_json(&[
        "stats",
        "factor-count",
        "--p",
        "2",
        "--n",
        "4",
        "--exhaustive",
        "--policy",
        "multiplicity",
        "--json",
        "--seed",
        "1",
    ]);
    assert_eq!(distinct["trials"], 16);
    assert!(with_mult["mean"].as_f64().unwrap() > distinct["mean"].as_f64().unwrap());
    assert_valid("factor-count", &distinct);
    assert_valid("factor-count", &with_mult);
}

#[test]
fn splitting_degree_small() {
    let v = ok_json(&[
        "stats",
        "splitting-degree",
        "--p",
        "3",
        "--n",
        "2",
        "--trials",
        "100",
        "--json",
        "--seed",
        "4",
    ]);
    let keys: Vec<&String> = v["histogram"].as_object().unwrap().keys().collect();
    assert!(keys.iter().all(|k| *k == "1" || *k == "2"), "{keys:?}");
    assert_valid("splitting-degree", &v);
    let ex = ok_json(&[
        "stats",
        "splitting-degree",
        "--p",
        "2",
        "--n",
        "6",
        "--exhaustive",
        "--json",
        "--seed",
        "4",
    ]);
    assert_eq!(ex["trials"], 32);
    assert_valid("splitting-degree", &ex);
    let too_big = ffq(&[
        "stats",
        "splitting-degree",
        "--p",
        "2",
        "--n",
        "65",
        "--seed",
        "1",
    ]);
    assert_eq!(too_big.status.code(), Some(1));
}

#[test]
fn bench_csv() {
    let out = ffq(&[
        "bench", "--p", "3", "--n", "1,16", "--trials", "2", "--seed", "9",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,trial,compositions,multiplications,mulmods,wall_ms,depth,fallbacks")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows[..2] {
        assert_eq!(row[0], "1");
        assert_eq!(row[2], "0");
    }
    assert!(rows[2..].iter().all(|r| r[0] == "16"));
}
