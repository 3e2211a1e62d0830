use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"{"schema":1,
 "model":{"measure":{"type":"cgmy","c":1,"g":5,"m":5,"y":1.5}},
 "payoff":{"kind":"call","strike":1},
 "scheme":{"kind":"corrected"},
 "n_sweep":[4,8,16],
 "sim":{"delta_sim":0.02,"seed":3,"paths":200,"fine_refinement":4},
 "estimator":{"outer_states":8,"inner_branches":8,"conditioning_intervals":4,"bootstrap_resamples":20}}"#;

fn jumphedge(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jumphedge")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let mut csv = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let run = jumphedge(&["run", &config, "--workers", workers, "--out", out.to_str().unwrap()]);
        assert!(matches!(run.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&run.stderr));
        let bytes = std::fs::read(out.join("rates.csv")).unwrap();
        assert_eq!(bytes, run.stdout);
        assert!(out.join("report.json").exists());
        csv.push(bytes);
    }
    assert_eq!(csv[0], csv[1]);
    let header = String::from_utf8_lossy(&csv[0]).lines().next().unwrap().to_string();
    assert_eq!(header, "n,eps,card_mean,card_se,l2,l2_se,s2,s2_se,bmo,bmo_se,bmoproxy,max_jump_q95");
}

#[test]
fn invalid_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &CONFIG.replace("\"schema\":1", "\"schema\":1,\"colour\":2"));
    let run = jumphedge(&["run", &config]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("colour"));
}

#[test]
fn degenerate_counterexample_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"schema":1,"rate":1,"f_first":0.3}"#);
    assert_eq!(jumphedge(&["counterexample", &config]).status.code(), Some(1));
}

#[test]
fn counterexample_passes_and_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"schema":1,"paths":20000,"seed":4}"#);
    let run = jumphedge(&["counterexample", &config]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!((v["delta"].as_f64().unwrap() - 0.2).abs() < 1e-12);
}
