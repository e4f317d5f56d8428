use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iwd-sched")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    jsonschema::validator_for(&serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()).unwrap()
}

#[test]
fn schedule_diamond_interval_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bin(&["schedule", "--workflow", "bundled:diamond", "--interval", "4", "--seed", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());

    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("schedule.json")).unwrap()).unwrap();
    assert!(schema("schedule-report.v1.schema.json").is_valid(&report));
    assert_eq!(report["feasible"], true);
    assert_eq!(report["placements"].as_array().unwrap().len(), 4);

    let trace = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(trace.starts_with("iteration,iter_cost,best_cost,best_makespan\n"));
    assert_eq!(trace.lines().count(), 21);

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples/diamond.schedule.json");
    assert_eq!(fs::read_to_string(golden).unwrap(), fs::read_to_string(dir.path().join("schedule.json")).unwrap());
}

#[test]
fn schedule_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let zero = bin(&["schedule", "--workflow", "bundled:diamond", "--deadline-s", "0", "--out", out]);
    assert_eq!(zero.status.code(), Some(2));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("schedule.json")).unwrap()).unwrap();
    assert_eq!(report["feasible"], false);

    let missing = bin(&["schedule", "--workflow", "/no/such/workflow.json", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/workflow.json"));

    assert_eq!(bin(&["schedule", "--workflow", "bundled:diamond", "--interval", "9"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn greedy_and_oracle_schedulers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for s in ["greedy", "oracle"] {
        let o = bin(&[
            "schedule", "--workflow", "bundled:diamond", "--scheduler", s, "--deadline-s", "100000", "--pool-size", "3",
            "--out", out, "--json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{s}: {}", String::from_utf8_lossy(&o.stderr));
        let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(report["scheduler"], s);
        assert_eq!(report["tec"], 0.06);
    }
    // The oracle refuses the full 18-node pool for 28 tasks.
    let o = bin(&["schedule", "--workflow", "bundled:ligo-small", "--scheduler", "oracle", "--interval", "4", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn deadlines_text_and_json() {
    let o = bin(&["deadlines", "--workflow", "bundled:montage-small", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(schema("deadlines.schema.json").is_valid(&doc));
    let d: Vec<f64> = doc["deadlines_s"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[0] < w[1]));

    let text = stdout(&bin(&["deadlines", "--workflow", "bundled:diamond"]));
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("deadline_4 144.384615"));
}

#[test]
fn single_type_profile_gives_equal_deadlines() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("one.json");
    fs::write(
        &profile,
        r#"{"version": "profile/v1", "catalog": [{"name": "only", "ecu": 2, "cores": 1, "memory_gb": 4, "cost_per_period": 0.1}]}"#,
    )
    .unwrap();
    let o = bin(&["deadlines", "--workflow", "bundled:diamond", "--json", "--profile", profile.to_str().unwrap()]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let d = doc["deadlines_s"].as_array().unwrap();
    assert!(d.iter().all(|x| *x == d[0]));
}

#[test]
fn convergence_csv() {
    let o = bin(&["convergence", "--workflow", "bundled:cybershake-small", "--seeds", "3", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,mean_best_cost,mean_best_makespan_s"));
    let costs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(costs.len(), 20);
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));

    let short = bin(&["convergence", "--workflow", "bundled:diamond", "--iwd.max-iter", "5", "--seeds", "1"]);
    assert_eq!(stdout(&short).lines().count(), 6);
}

#[test]
fn convergence_with_one_seed_equals_the_single_run_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--workflow", "bundled:sipht-small", "--interval", "3", "--seed", "11"];
    let curve = stdout(&bin(&[&["convergence", "--seeds", "1"], &args[..]].concat()));
    let run = bin(&[&["schedule", "--out", out], &args[..]].concat());
    assert_ne!(run.status.code(), Some(1));
    let trace = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let pick = |text: &str, cols: [usize; 2]| -> Vec<String> {
        text.lines().skip(1).map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{}", f[cols[0]], f[cols[1]])
        }).collect()
    };
    // curve: iteration, mean_best_cost; trace: iteration, best_cost
    assert_eq!(pick(&curve, [0, 1]), pick(&trace, [0, 2]));
}

#[test]
fn bench_is_reproducible_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let grid = [
        "bench", "--workflow", "bundled:diamond", "--workflow", "bundled:sipht-small", "--workflow", "bundled:missing",
        "--trials", "3", "--seed", "9",
    ];
    for path in [&a, &b] {
        let o = bin(&[&grid[..], &["--out", path.to_str().unwrap()]].concat());
        assert_eq!(o.status.code(), Some(0));
    }
    let (ta, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    let mut rdr = csv::Reader::from_reader(ta.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 4 * 2);
    let keys: Vec<(String, String, String)> =
        rows.iter().map(|r| (r[0].to_string(), r[1].to_string(), r[2].to_string())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for r in &rows {
        if r[0].starts_with("bundled:missing") {
            assert!(r[9].contains("unknown bundled workflow"));
            assert!(r[4].is_empty());
        } else {
            let met: f64 = r[4].parse().unwrap();
            assert!((0.0..=100.0).contains(&met));
            assert_eq!(&r[7], "3");
            assert_eq!(&r[8], "9");
        }
    }
}
