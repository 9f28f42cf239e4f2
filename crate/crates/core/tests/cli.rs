//! End-to-end checks of the binary: exit codes, file outputs, and
//! reproducibility across reruns, worker counts, and seed overrides.

use std::path::Path;
use std::process::Command;

fn releak() -> Command {
    Command::new(env!("CARGO_BIN_EXE_releak"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
records = 120
qi_domains = [10, 6]
sensitive_domain = 8
sensitive_entropy = 1.5
k = [2, 4]
overlap = 20
seed = 5
seed_count = 2
"#;

#[test]
fn breach_run_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let status = releak()
            .args(["breach", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out1.join("breach_report.csv")).unwrap();
    let b = std::fs::read(out2.join("breach_report.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "reruns must write identical reports");
    assert!(out1.join("breach_manifest.json").exists());
}

#[test]
fn worker_count_does_not_change_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out1 = dir.path().join("j1");
    let out4 = dir.path().join("j4");
    for (out, jobs) in [(&out1, "1"), (&out4, "4")] {
        let status = releak()
            .args(["breach", "--jobs", jobs, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(out1.join("breach_report.csv")).unwrap(),
        std::fs::read(out4.join("breach_report.csv")).unwrap()
    );
}

#[test]
fn seed_override_changes_results_and_is_itself_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |seed: &str, out: &Path| {
        let status = releak()
            .args(["breach", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        std::fs::read(out.join("breach_report.csv")).unwrap()
    };
    let a = run("9", &dir.path().join("s9"));
    let b = run("9", &dir.path().join("s9b"));
    let c = run("10", &dir.path().join("s10"));
    assert_eq!(a, b);
    assert_ne!(a, c, "different seeds must change the draws");
}

#[test]
fn infeasible_cells_mark_errors_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // k = 50 cannot hold on 40-record subsets; k = 2 cells still succeed.
    let cfg = write_config(
        dir.path(),
        r#"
records = 120
qi_domains = [10, 6]
sensitive_domain = 8
k = [2, 50]
overlap = 20
seed_count = 1
"#,
    );
    let out = dir.path().join("out");
    let status = releak()
        .args(["breach", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "partial failure must exit 2");
    let report = std::fs::read_to_string(out.join("breach_report.csv")).unwrap();
    assert!(report.contains("error"), "error rows missing:\n{report}");
    assert!(report.contains("pvp"), "successful cells missing");
}

#[test]
fn fatal_problems_exit_1() {
    let status = releak()
        .args(["breach", "--config", "/nonexistent/config.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "records = 120\nunknown_key = 3\n");
    let status = releak().args(["breach", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(1), "unknown config keys are fatal");
}

#[test]
fn anonymize_then_attack_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mk_cfg = |name: &str, csv: &str, k: usize, out: &str| {
        let body = format!(
            "dataset = {:?}\nschema = {:?}\nk = [{k}]\nout = {:?}\n",
            fixtures.join(csv).to_str().unwrap(),
            fixtures.join("hospital.schema").to_str().unwrap(),
            dir.path().join(out).to_str().unwrap(),
        );
        write_config(&dir.path().join(name), &body)
    };
    std::fs::create_dir_all(dir.path().join("c1")).unwrap();
    std::fs::create_dir_all(dir.path().join("c2")).unwrap();
    std::fs::create_dir_all(dir.path().join("c3")).unwrap();
    let cfg1 = mk_cfg("c1", "hospital1.csv", 4, "r1");
    let cfg2 = mk_cfg("c2", "hospital2.csv", 6, "r2");
    for cfg in [&cfg1, &cfg2] {
        let status = releak().args(["anonymize", "--config"]).arg(cfg).status().unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let r1 = dir.path().join("r1/release.json");
    let r2 = dir.path().join("r2/release.json");
    assert!(r1.exists() && dir.path().join("r1/anonymized.csv").exists());

    // Published releases never leak record membership.
    let json = std::fs::read_to_string(&r1).unwrap();
    assert!(!json.contains("member_ids"));

    let attack_cfg = write_config(
        &dir.path().join("c3"),
        &format!(
            "dataset = {:?}\nschema = {:?}\nrelease_files = [{:?}, {:?}]\nout = {:?}\n",
            fixtures.join("hospital1.csv").to_str().unwrap(),
            fixtures.join("hospital.schema").to_str().unwrap(),
            r1.to_str().unwrap(),
            r2.to_str().unwrap(),
            dir.path().join("attack").to_str().unwrap(),
        ),
    );
    let output = releak().args(["attack", "--config"]).arg(&attack_cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("population 12"), "stdout: {stdout}");
    assert!(dir.path().join("attack/attack_report.json").exists());
    let summary = std::fs::read_to_string(dir.path().join("attack/attack_summary.csv")).unwrap();
    assert!(summary.contains("pvp"), "summary:\n{summary}");
}

#[test]
fn dp_suite_runs_clean_with_defaults_scaled_down() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
dp_mechanisms = ["randomized-response", "geometric-counter", "publish-random-record"]
dp_n = [2]
rr_flip = [0.25]
dp_epsilon = [0.6931471805599453]
dp_delta = [0.0, 0.5]
priors = ["uniform", "point-mass-mixture"]
"#,
    );
    let out = dir.path().join("out");
    let status = releak()
        .args(["dp", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("dp_report.csv")).unwrap();
    assert!(report.contains("worst_case_sd"));
    assert!(report.contains("good_set_mass"));
}
