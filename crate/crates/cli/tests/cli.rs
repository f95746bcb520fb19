use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repeaterscope"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(
        &path,
        "# reduced grids\ndistances = 100, 300\nn_segment_options = 2, 8\nchannel_options = 4, 16\nqpc_n_max = 3\nqpc_m_max = 3\nspacings = 2\nrelay_spacings = 5\n",
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_csv_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "mtp-sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("mtp-sweep.csv")).unwrap();
    assert!(csv.starts_with("experiment,architecture,distance_km,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    let echo = fs::read_to_string(out.join("mtp-sweep.config.txt")).unwrap();
    assert!(echo.contains("experiment = mtp-sweep"));
    assert!(echo.contains("distances = 100, 300"));
}

#[test]
fn empty_config_uses_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    fs::write(&cfg, "").unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "relay-expectation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let echo = fs::read_to_string(out.join("relay-expectation.config.txt")).unwrap();
    assert!(echo.contains("eps_g = 0.001"));
    assert!(echo.contains("xi = 0.00025"));
    assert!(echo.contains("relay_channels = 128, 256"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for name in [
        "relay-expectation",
        "mtp-sweep",
        "envelope-compare",
        "cost-compare",
    ] {
        let a = dir.path().join(format!("a-{name}"));
        let b = dir.path().join(format!("b-{name}"));
        for d in [&a, &b] {
            let o = run(&[
                "run",
                name,
                "--config",
                &cfg,
                "--out",
                d.to_str().unwrap(),
                "--seed",
                "9",
            ]);
            assert!(o.status.success(), "{name}");
        }
        for entry in fs::read_dir(&a).unwrap() {
            let f = entry.unwrap().file_name();
            if f.to_string_lossy().ends_with(".csv") {
                assert_eq!(
                    fs::read(a.join(&f)).unwrap(),
                    fs::read(b.join(&f)).unwrap(),
                    "{name}"
                );
            }
        }
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    assert_eq!(
        run(&["run", "fig9", "--config", &cfg]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["run", "mtp-sweep"]).status.code(), Some(2));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "seed = 1\nn_segments = 3\n").unwrap();
    let o = run(&["run", "mtp-sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("bad.cfg:2:") && err.contains("power of two"),
        "{err}"
    );

    let o = run(&[
        "run",
        "mtp-sweep",
        "--config",
        dir.path().join("missing.cfg").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_passes_and_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("v");
    let o = run(&[
        "validate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--trials",
        "1000000",
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(
        stdout.lines().filter(|l| l.starts_with("PASS ")).count() >= 9,
        "{stdout}"
    );
    let table = fs::read_to_string(out.join("validate.csv")).unwrap();
    assert!(table.starts_with("criterion,passed,value,tolerance,detail\n"));
    assert!(
        table
            .lines()
            .skip(1)
            .all(|l| l.split(',').nth(1) == Some("true")),
        "{table}"
    );
}
