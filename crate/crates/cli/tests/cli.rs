use std::process::{Command, Output};

fn photocalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photocalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn distribution_anchor_rows() {
    let o = photocalc(&["distribution", "--y", "0.25", "--t2", "0.8", "--k", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    let expected = [0.944911182523068, 0.0449957705963366, 0.00883845493856611];
    for (l, want) in expected.iter().enumerate() {
        assert_eq!(rows[l][0], l.to_string());
        let p: f64 = rows[l][1].parse().unwrap();
        assert!((p / want - 1.0).abs() < 1e-13, "l={l}: {p}");
    }
}

#[test]
fn output_is_byte_stable() {
    let args = ["estimate", "--y", "0.25", "--t2", "0.8", "--k", "1", "--shots", "200000", "--seed", "11"];
    let a = photocalc(&args);
    let b = photocalc(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = photocalc(&["estimate", "--y", "0.25", "--t2", "0.8", "--k", "1", "--shots", "200000", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn metadata_header_lists_resolved_parameters() {
    let text = stdout(&photocalc(&["distribution", "--y", "0.25", "--B", "0.25", "--k", "2", "--l-max", "4"]));
    for key in ["# command: distribution", "# k: 2", "# precision-bits: 256", "# tail-eps:", "# generator:", "# y1:"] {
        assert!(text.contains(key), "missing {key}");
    }
    assert_eq!(data_rows(&text).len(), 5);
}

#[test]
fn usage_errors_exit_one_and_name_the_flag() {
    let o = photocalc(&["estimate", "--y", "0.25"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("--t2") && err.contains("--B"), "{err}");

    let o = photocalc(&["convert", "--s", "1", "--db", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("--db"));

    assert_eq!(photocalc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(photocalc(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_two_with_error_name() {
    let o = photocalc(&["distribution", "--y", "0.6", "--t2", "0.8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("OutOfRange"));

    let o = photocalc(&["distribution", "--y", "0.25", "--t2", "0.8", "--k", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("UnsupportedK"));

    let o = photocalc(&["herald", "--y", "0.45", "--t2", "0.8", "--nmax", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("TruncationTooSmall"));
}

#[test]
fn convert_round_trips_through_y1() {
    let fwd = stdout(&photocalc(&["convert", "--y", "0.3", "--B", "0.5"]));
    let y1 = data_rows(&fwd).into_iter().find(|r| r[0] == "y1").unwrap()[1].clone();
    let back = stdout(&photocalc(&["convert", "--y1", &y1, "--B", "0.5"]));
    let y: f64 = data_rows(&back).into_iter().find(|r| r[0] == "y").unwrap()[1].parse().unwrap();
    assert!((y - 0.3).abs() < 1e-15);
}

#[test]
fn sweep_example_is_monotone_in_log_domain() {
    let o = photocalc(&["sweep", "--k", "0", "--B", "0.25", "--grid", "0:0.2:0.01", "--l", "94"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "log_value").unwrap();
    let logs: Vec<f64> = reader.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(logs.len(), 21);
    assert!(logs.iter().all(|v| v.is_finite()));
    assert!(logs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn herald_reports_unit_fidelity() {
    let o = photocalc(&["herald", "--y", "0.25", "--t2", "0.8", "--k", "2", "--l", "0,1,2,3", "--nmax", "50"]);
    assert_eq!(o.status.code(), Some(0));
    for row in data_rows(&stdout(&o)) {
        let f: f64 = row[3].parse().unwrap();
        assert!(f >= 1.0 - 1e-10, "{row:?}");
    }
    let dump = stdout(&photocalc(&[
        "herald", "--y", "0.25", "--t2", "0.8", "--k", "1", "--l", "1", "--nmax", "30", "--dump-state",
    ]));
    for row in data_rows(&dump) {
        let (a, b): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!((a - b).abs() < 1e-12, "{row:?}");
    }
}

#[test]
fn exact_estimates_reproduce_norms() {
    let o = photocalc(&["estimate", "--y", "0.25", "--B", "0.25", "--k", "0", "--l", "2", "--exact"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][5].parse().unwrap();
    assert!((v / 8.164614940802437 - 1.0).abs() < 1e-6);
}

#[test]
fn verify_passes_on_standard_grid() {
    let o = photocalc(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(data_rows(&stdout(&o)).iter().all(|r| r[4] == "true"));
}

#[test]
fn verify_failure_exits_three() {
    // 20 photons cannot hold the input at the stronger grid points
    let o = photocalc(&["verify", "--nmax", "20"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out = dir.path().join("dist.json");
    std::fs::write(&conf, "# anchor point\ny = 0.25\nt2 = 0.8\nk = 0\nl_max = 2\nformat = json\n").unwrap();
    let o = photocalc(&["distribution", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(json["metadata"]["command"], "distribution");
    let p0 = rows[0]["probability"].as_f64().unwrap();
    assert!((p0 / 0.944911182523068 - 1.0).abs() < 1e-13);
}
