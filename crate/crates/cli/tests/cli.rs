use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adlab")).args(args).output().expect("adlab runs")
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const SMALL_RUN: [&str; 8] = ["--omega", "0.1", "--theta", "0.7", "--t-end", "20", "--dt", "0.01"];

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run"];
    args.extend(SMALL_RUN);
    args.extend(extra);
    args.extend(["--out", dir.to_str().unwrap()]);
    adlab(&args)
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_into(a.path(), &[]).status.success());
    assert!(run_into(b.path(), &[]).status.success());
    for name in ["trace.csv", "residuals.csv", "fidelity.csv", "nu.csv", "report.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), &[]);
    assert!(out.status.success());
    assert_eq!(
        first_line(&dir.path().join("trace.csv")),
        "t,re_U_00,im_U_00,re_U_01,im_U_01,re_U_10,im_U_10,re_U_11,im_U_11"
    );
    assert_eq!(first_line(&dir.path().join("residuals.csv")), "t,unitarity,duality,equivalence");
    assert_eq!(first_line(&dir.path().join("fidelity.csv")), "t,fidelity_h,fidelity_dual");
    assert_eq!(first_line(&dir.path().join("nu.csv")), "nu_measured,nu_predicted,pass");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("nu_measured,nu_predicted,pass"));
    assert_eq!(lines.next().unwrap().split(',').count(), 3);

    let sweep_dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--axis", "theta", "--values", "0.3,0.6"];
    args.extend(SMALL_RUN[..2].iter().chain(&SMALL_RUN[4..]));
    args.extend(["--out", sweep_dir.path().to_str().unwrap()]);
    assert!(adlab(&args).status.success());
    assert_eq!(
        first_line(&sweep_dir.path().join("summary.csv")),
        "axis_value,min_fid_h,min_fid_dual,verdict_h,verdict_dual,nu_measured,nu_predicted"
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.toml");
    fs::write(&config, "t_end = 10.0\nanalyses = []\n").unwrap();
    let out = adlab(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "t_end = 10.0\ncolour = 3\n").unwrap();
    assert_eq!(adlab(&["run", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(adlab(&["run", "--omega", "0.1"]).status.code(), Some(2));
    assert_eq!(adlab(&["report", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn slow_rotation_run_tracks_the_instantaneous_state() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("slow.toml");
    fs::write(
        &config,
        "model = \"rotating\"\nomega0 = 1.0\nomega = 0.01\ntheta = 0.7853981633974483\n\
         t_end = 628.3185307179587\ndt = 0.01\nanalyses = [\"adiabatic_h\"]\n",
    )
    .unwrap();
    let out = adlab(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("fidelity.csv")).unwrap();
    let min = reader.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(min >= 0.999, "min fidelity {min}");
}

#[test]
fn single_value_sweep_matches_run() {
    let (run_dir, sweep_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["--omega", "0.05", "--t-end", "40", "--dt", "0.01", "--analyses", "adiabatic_h,adiabatic_dual"];
    let mut args = vec!["run", "--theta", "0.4"];
    args.extend(common);
    args.extend(["--out", run_dir.path().to_str().unwrap()]);
    assert!(adlab(&args).status.success());
    let mut args = vec!["sweep", "--axis", "theta", "--values", "0.4"];
    args.extend(common);
    args.extend(["--out", sweep_dir.path().to_str().unwrap()]);
    assert!(adlab(&args).status.success());

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.path().join("report.json")).unwrap()).unwrap();
    let mut reader = csv::Reader::from_path(sweep_dir.path().join("summary.csv")).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    assert_eq!(row[1].parse::<f64>().unwrap(), report["min_fidelity_h"].as_f64().unwrap());
    assert_eq!(row[2].parse::<f64>().unwrap(), report["min_fidelity_dual"].as_f64().unwrap());
    assert_eq!(&row[3], "");
}

#[test]
fn report_rerenders_saved_json() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), &[]).status.success());
    let out = adlab(&["report", dir.path().join("report.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rotating"), "{text}");
    assert!(text.contains("resonant") || text.contains("adiabatic") || text.contains("marginal"));
}
