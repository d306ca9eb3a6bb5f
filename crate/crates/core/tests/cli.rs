use std::fs;
use std::path::Path;
use std::process::Command;

use gcconvex::cli::report::{Report, SCHEMA_VERSION};
use gcconvex::cli::{run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn binary(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_gcconvex"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn read_report(dir: &Path) -> Report {
    Report::from_json_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn without_timestamp(dir: &Path) -> String {
    let mut r = read_report(dir);
    r.timestamp = 0;
    r.to_json()
}

fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["gcconvex"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    run(argv)
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(binary(&["list"]), EXIT_PASS);
    assert_eq!(binary(&["--help"]), EXIT_PASS);
    assert_eq!(
        binary(&[
            "check-structure",
            "sphere_rotation",
            "--resolution",
            "16",
            "--out",
            out
        ]),
        EXIT_PASS
    );
    assert_eq!(
        binary(&[
            "check-structure",
            "nonintegrable_control",
            "--resolution",
            "16",
            "--out",
            out
        ]),
        EXIT_FAIL
    );
    assert_eq!(binary(&["check-structure"]), EXIT_USAGE);
    assert_eq!(binary(&["check-structure", "nowhere"]), EXIT_USAGE);
    assert_eq!(
        binary(&["levels", "sphere_rotation", "--jobs", "0"]),
        EXIT_USAGE
    );
    assert_eq!(
        binary(&["levels", "sphere_rotation", "--tol-fixed", "-1"]),
        EXIT_USAGE
    );
    assert_eq!(
        binary(&[
            "levels",
            "sphere_rotation",
            "--config",
            "/nonexistent/gc.toml"
        ]),
        EXIT_USAGE
    );
}

#[test]
fn passing_run_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(
            tmp.path(),
            &["all", "product_spheres_T2", "--resolution", "16"]
        ),
        EXIT_PASS
    );
    for f in [
        "report.json",
        "moment_cloud.csv",
        "hull.csv",
        "critical.csv",
        "levels.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    let r = read_report(tmp.path());
    assert_eq!(r.schema, SCHEMA_VERSION);
    assert_eq!(r.command, "all");
    assert_eq!(r.example.name, "product_spheres_T2");
    assert_eq!(r.example.rank, 2);
    assert!(r.pass && r.failed_checks().is_empty());
    assert_eq!(r.fixed_components.len(), 4);
    assert_eq!(r.hull.as_ref().unwrap().vertices.len(), 4);
    assert_eq!(r.levels.len(), 25);
    let cloud = fs::read_to_string(tmp.path().join("moment_cloud.csv")).unwrap();
    assert_eq!(cloud.lines().next().unwrap(), "id,mu0,mu1");
    assert_eq!(cloud.lines().count(), r.example.samples + 1);
    let hull = fs::read_to_string(tmp.path().join("hull.csv")).unwrap();
    assert_eq!(hull.lines().count(), 5);
}

#[test]
fn failing_run_names_the_failed_checks() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(
            tmp.path(),
            &[
                "check-hamiltonian",
                "broken_moment_control",
                "--resolution",
                "16"
            ]
        ),
        EXIT_FAIL
    );
    let r = read_report(tmp.path());
    assert!(!r.pass);
    let failed: Vec<&str> = r.failed_checks().iter().map(|c| c.check.as_str()).collect();
    assert!(failed.contains(&"moment_condition"), "{failed:?}");
    let moment = r
        .checks
        .iter()
        .find(|c| c.check == "moment_condition")
        .unwrap();
    assert!(moment.offending_count > 0);
    assert!(moment.offending.len() <= moment.offending_count.min(50));
    assert!(moment.max_residual.0 > 1e-3);
}

#[test]
fn missing_action_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(
            tmp.path(),
            &["convexity", "nonintegrable_control", "--resolution", "16"]
        ),
        EXIT_USAGE
    );
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from-file");
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "example = \"sphere_rotation\"\nresolution = 24\nseed = 9\ntol_residual = 1e-7\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    assert_eq!(
        run([
            "gcconvex",
            "check-hamiltonian",
            "--config",
            cfg.to_str().unwrap()
        ]),
        EXIT_PASS
    );
    let r = read_report(&out);
    assert_eq!(r.example.resolution, 24);
    assert_eq!(r.config.seed, 9);
    assert_eq!(r.config.tol_residual.0, 1e-7);

    let flagged = tmp.path().join("from-flags");
    let code = run([
        "gcconvex",
        "check-hamiltonian",
        "--config",
        cfg.to_str().unwrap(),
        "--resolution",
        "16",
        "--seed",
        "4",
        "--out",
        flagged.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS);
    let r = read_report(&flagged);
    assert_eq!(r.example.resolution, 16);
    assert_eq!(r.config.seed, 4);
    assert_eq!(r.config.tol_residual.0, 1e-7);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "example = \"sphere_rotation\"\nresolutoin = 32\n").unwrap();
    assert_eq!(
        run(["gcconvex", "levels", "--config", cfg.to_str().unwrap()]),
        EXIT_USAGE
    );
}

#[test]
fn reports_are_deterministic_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, jobs) in dirs.iter().zip(["1", "1", "4"]) {
        assert_eq!(
            run_in(
                dir,
                &[
                    "all",
                    "twisted_sphere_torus",
                    "--resolution",
                    "16",
                    "--jobs",
                    jobs
                ]
            ),
            EXIT_PASS
        );
    }
    let first = without_timestamp(&dirs[0]);
    for dir in &dirs[1..] {
        assert_eq!(without_timestamp(dir), first);
        for f in ["moment_cloud.csv", "hull.csv", "critical.csv", "levels.csv"] {
            assert_eq!(
                fs::read(dirs[0].join(f)).unwrap(),
                fs::read(dir.join(f)).unwrap(),
                "{f}"
            );
        }
    }
}

#[test]
fn report_json_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(
            tmp.path(),
            &["morse", "sphere_bshift", "--resolution", "16"]
        ),
        EXIT_PASS
    );
    let text = fs::read_to_string(tmp.path().join("report.json")).unwrap();
    let r = Report::from_json_str(&text).unwrap();
    assert_eq!(r.to_json() + "\n", text);
    assert!(r.checks.iter().all(|c| c.module == "morse"));
}

#[test]
fn checked_in_report_seeds_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/report_json");
    for name in [
        "sphere_rotation.json",
        "product_spheres_T2.json",
        "broken_moment_control.json",
    ] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        let r = Report::from_json_str(&text).unwrap();
        assert_eq!(r.schema, SCHEMA_VERSION, "{name}");
    }
}
