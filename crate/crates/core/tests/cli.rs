use levy_breakdrift::cli::{preset, preset_names, Job, JobSpec};
use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_levy-breakdrift");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn")
}

fn cli_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(BIN).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn broken_sup_flag_example() {
    let out = cli(&["broken-sup", "--model", "brownian", "--c1", "1", "--c2", "1", "--T", "0.7", "--u", "1", "--horizon", "inf"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let v = recs[0]["result"]["value"].as_f64().unwrap();
    assert!((v - 0.135_335).abs() < 1e-6, "{v}");
    assert!(recs[0]["result"]["err_est"].as_f64().is_some());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall time"));
}

#[test]
fn identity_check_flag_example() {
    let out = cli(&["identity-check", "--c", "1", "--T", "1", "--u", "1", "--variant", "minus"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0]["result"];
    let (l, rhs) = (r["lhs"].as_f64().unwrap(), r["rhs"].as_f64().unwrap());
    assert!((l - 0.022_750).abs() < 1e-6 && (rhs - 0.022_750).abs() < 1e-6);
    assert!(r["abs_diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn mc_reruns_are_byte_identical() {
    let args = ["mc", "--preset", "gamma-broken", "--seed", "42", "--n-paths", "20000"];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = cli(&["mc", "--preset", "gamma-broken", "--seed", "43", "--n-paths", "20000"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn records_round_trip() {
    let jobs: [&[&str]; 4] = [
        &["run", "--config", "../../presets/broken-grid-sp.json"],
        &["run", "--config", "../../presets/ruin-crossing.json"],
        &["run", "--config", "../../presets/laplace-exponential.json"],
        &["mc", "--preset", "gamma-broken", "--n-paths", "10000", "--seed", "3"],
    ];
    for args in jobs {
        let out = cli(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let text = String::from_utf8(out.stdout).unwrap();
        for line in text.lines().step_by(7) {
            let again = cli_stdin(&["run", "--config", "-"], line);
            assert_eq!(again.status.code(), Some(0));
            assert_eq!(String::from_utf8(again.stdout).unwrap(), format!("{line}\n"));
        }
    }
}

#[test]
fn record_is_a_single_point_job() {
    let out = cli(&["run", "--config", "../../presets/identity-grid-plus.json"]);
    for rec in records(&out) {
        let spec: JobSpec = serde_json::from_value(rec).unwrap();
        assert_eq!(spec.job.points().unwrap().len(), 1);
    }
}

#[test]
fn exit_codes() {
    let domain = cli(&["sup", "--model", "gamma", "--delta", "2", "--c", "1", "--u", "1", "--horizon", "1", "--side", "sn"]);
    assert_eq!(domain.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("error"));
    let negative_u = cli(&["broken-sup", "--model", "brownian", "--c1", "1", "--c2", "1", "--T", "1", "--u", "-1", "--horizon", "inf"]);
    assert_eq!(negative_u.status.code(), Some(2));
    let unknown = cli_stdin(&["run", "--config", "-"], r#"{"job":{"command":"mass","model":{"family":"brownian"},"t":[1],"z":2}}"#);
    assert_eq!(unknown.status.code(), Some(2));
    let empty = cli_stdin(&["run", "--config", "-"], r#"{"job":{"command":"mass","model":{"family":"brownian"},"t":[]}}"#);
    assert_eq!(empty.status.code(), Some(2));
    let tight = ["--abs-tol", "1e-15", "--rel-tol", "1e-15", "--max-subdivisions", "10"];
    let conv = cli(&[&["sup", "--model", "stable", "--alpha", "1.5", "--c", "0.8", "--u", "1.2", "--horizon", "2"][..], &tight].concat());
    assert_eq!(conv.status.code(), Some(3));
    let budget = cli(&["mc", "--preset", "gamma-broken", "--n-paths", "10", "--seed", "1"]);
    assert_eq!(budget.status.code(), Some(2));
}

#[test]
fn plot_sup_u_is_nonincreasing() {
    let out = cli(&["plot-data", "--preset", "plot-sup-u"]);
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 50);
    assert_eq!(h[0], "u");
    let v = column(&h, "value");
    assert!(rows.windows(2).all(|w| w[1][v] <= w[0][v]));
}

#[test]
fn plot_laplace_gamma_in_unit_interval() {
    let out = cli(&["plot-data", "--preset", "plot-laplace-gamma"]);
    let (h, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 20);
    let v = column(&h, "value");
    assert!(rows.iter().all(|r| r[v] > 0.0 && r[v] <= 1.0));
    assert!(rows.windows(2).all(|w| w[1][v] <= w[0][v]));
}

#[test]
fn ruin_surface_ordering() {
    let out = cli(&["plot-data", "--preset", "plot-ruin-surface"]);
    let (h, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 100);
    let (sim, or) = (column(&h, "psi_sim"), column(&h, "psi_or"));
    assert!(rows.iter().all(|r| r[sim] <= r[or]));
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let json = cli(&["run", "--config", "../../presets/mass-gamma.json"]);
    let csv = cli(&["run", "--config", "../../presets/mass-gamma.json", "--output", "csv"]);
    let (h, rows) = csv_rows(&csv);
    let v = column(&h, "value");
    for (rec, row) in records(&json).iter().zip(&rows) {
        assert_eq!(rec["result"]["value"].as_f64().unwrap().to_bits(), row[v].to_bits());
    }
}

#[test]
fn presets_are_listed_and_parse() {
    let out = cli(&["presets"]);
    let listed: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(listed, preset_names().collect::<Vec<_>>());
    for name in preset_names() {
        let spec = preset(name).unwrap();
        assert!(spec.job.points().is_ok(), "{name}");
        let on_disk = std::fs::read_to_string(format!("../../presets/{name}.json")).unwrap();
        assert_eq!(JobSpec::from_json(&on_disk).unwrap(), spec);
    }
    assert!(matches!(preset("gamma-broken").unwrap().job, Job::Mc { .. }));
}

#[test]
fn schema_lists_every_result_key() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string("../../docs/output_schema.json").unwrap()).unwrap();
    let by_command = &schema["$defs"]["results_by_command"]["properties"];
    for name in ["ruin-crossing", "brownian-broken-reduction", "identity-grid-minus", "mass-gamma", "plot-laplace-gamma"] {
        let out = cli(&["run", "--config", &format!("../../presets/{name}.json"), "--output", "json"]);
        for rec in records(&out) {
            let command = rec["job"]["command"].as_str().unwrap();
            let props = &by_command[command]["properties"];
            for key in rec["result"].as_object().unwrap().keys() {
                assert!(props.get(key).is_some(), "{command}: `{key}` missing from schema");
            }
        }
    }
}
