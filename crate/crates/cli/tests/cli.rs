use std::io::Write;
use std::process::{Command, Output, Stdio};

const PATTERN: &str = r#"{"arms":[[1,1,1,1,1,1],[1,1],[1,1]]}"#;

fn hyperstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperstar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key).map(str::trim)).unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn estimate_prints_arm_index_and_ell() {
    let o = hyperstar(&["estimate", PATTERN]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(field(&s, "arm "), "1");
    assert_eq!(field(&s, "index "), "2");
    assert_eq!(field(&s, "ell "), "2.000000");
    assert_eq!(field(&s, "weighted_lengths "), "6.000000 2.000000 2.000000");
}

#[test]
fn estimate_offset_snaps_to_nearest() {
    let o = hyperstar(&["estimate", PATTERN, "--offset", "0.25", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ell"], 2.125);
    assert_eq!(v["index"], 2);
    assert_eq!(v["arm"], 1);
}

#[test]
fn estimate_reads_files() {
    let dir = std::env::temp_dir().join(format!("hyperstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("p.json");
    std::fs::write(&path, PATTERN).unwrap();
    let o = hyperstar(&["estimate", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "estimate "), "1:2");
}

#[test]
fn too_few_arms_is_a_named_input_error() {
    let o = hyperstar(&["estimate", r#"{"arms":[]}"#]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("need at least 2 arms"));
}

#[test]
fn malformed_json_exits_3() {
    let o = hyperstar(&["estimate", r#"{"arms":[[1,"#]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_file_exits_1() {
    let o = hyperstar(&["estimate", "/nonexistent/pattern.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hyperstar(&["estimate"]).status.code(), Some(2));
    assert_eq!(hyperstar(&["tables", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(hyperstar(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn simulate_single_infection_is_the_source() {
    let o = hyperstar(&["simulate", r#"{"arms":[[1,2],[3]]}"#, "--n", "1", "--source", "1:2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["region"]["hub"], false);
    assert_eq!(v["region"]["spans"][0], serde_json::json!({"lo": 2, "hi": 2}));
    assert!(v.get("arms").is_none());
    assert_eq!(v["meta"]["seed"], 20_210_301);
    assert_eq!(v["meta"]["rng"], "ChaCha8Rng");
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let args = ["simulate", r#"{"arms":[[1,1,1,1,1,1,1,1],[2,2,2,2,2,2],[3,3,3,3]]}"#, "--n", "9", "--seed", "5"];
    let a = hyperstar(&args);
    let b = hyperstar(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_rejects_oversized_n() {
    let o = hyperstar(&["simulate", r#"{"arms":[[1],[1]]}"#, "--n", "4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_output_feeds_estimate() {
    let sim = hyperstar(&["simulate", r#"{"arms":[[1,1,1,1,1,1,1,1],[2,2,2,2,2,2,2,2]]}"#, "--n", "12", "--seed", "9"]);
    assert!(sim.status.success());
    let mut child = Command::new(env!("CARGO_BIN_EXE_hyperstar"))
        .args(["estimate", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&sim.stdout).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn tables_default_offsets_give_thirty_rows() {
    let o = hyperstar(&["tables", "--trials", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# hyperstar "));
    assert!(meta.contains("rng=ChaCha8Rng") && meta.contains("seed=20210301"));
    assert_eq!(lines.next().unwrap(), hyperstar::experiments::CSV_HEADER);
    assert_eq!(lines.count(), 30);
}

#[test]
fn tables_json_matches_csv() {
    let args = ["tables", "--trials", "4", "--offsets", "0,0.5", "--seed", "11"];
    let csv = stdout(&hyperstar(&args));
    let json = hyperstar(&[&args[..], &["--format", "json"]].concat());
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(v["meta"]["seed"], 11);
    let csv_rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), csv_rows.len());
    for (row, line) in rows.iter().zip(csv_rows) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(row["generator"], cells[0]);
        assert_eq!(row["mode"], cells[1]);
        let node: f64 = cells[4].parse().unwrap();
        assert!((row["node_error_rate"].as_f64().unwrap() - node).abs() < 1e-6);
    }
}

#[test]
fn tables_are_identical_across_worker_counts() {
    let base = ["tables", "--trials", "5", "--offsets", "0,0.25"];
    let one = hyperstar(&[&base[..], &["--threads", "1"]].concat());
    let four = hyperstar(&[&base[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn sensitivity_reports_every_kind() {
    let o = hyperstar(&["sensitivity", "--trials", "50", "--arms", "5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("# hyperstar "));
    let kinds: Vec<&str> = s.lines().skip(2).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        kinds,
        ["missing_arm_nonlongest", "missing_arm_longest", "missing_step_nonlongest", "missing_step_longest"]
    );
}

#[test]
fn experiment_writes_records() {
    let dir = std::env::temp_dir().join(format!("hyperstar-rec-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("records.jsonl");
    let o = hyperstar(&["experiment", "--trials", "6", "--mode", "multiple", "--records", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 6);
    for line in text.lines() {
        let r: hyperstar::experiments::TrialRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.mode, hyperstar::OverlapMode::Multiple);
    }
}
