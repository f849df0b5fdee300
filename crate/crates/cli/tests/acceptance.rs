//! CLI acceptance: every command re-runs byte-for-byte from its own CSV
//! provenance header, plus the per-command behaviours (candidate ordering,
//! degenerate tags, bound columns, failure modes, exit codes).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_uhmc")
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_cfg(name: &str, text: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

fn note(csv: &str, key: &str) -> String {
    let prefix = format!("# {key}: ");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("missing note '{key}'"))
        .to_string()
}

/// A8: each command, re-run from its own CSV provenance header, reproduces
/// the file byte for byte.
#[test]
fn a8_rerun_from_provenance_is_byte_identical() {
    let cases: Vec<(&str, PathBuf)> = vec![
        ("analyze", write_cfg("a8_analyze.cfg", "m = 1\nl = 4\nepsilon = 0.01\ndim = 1\n")),
        (
            "sample",
            write_cfg(
                "a8_sample.cfg",
                "spectrum = 1.0\ndelta = 0.2\nk = 3\neta = 0.5\ntransitions = 12000\nburn_in = 500\nstride = 12000\n",
            ),
        ),
        (
            "couple",
            write_cfg(
                "a8_couple.cfg",
                "oracle = perturbed\nalpha = 0.1\ndim = 10\ndelta = 0.004\nk = 2\neta = 0.95\ntransitions = 500\n",
            ),
        ),
        (
            "risk",
            write_cfg(
                "a8_risk.cfg",
                "spectrum = 1.0\ndelta = 0.01\nk = 1\neta = 0.9\nreplicas = 40\nn_grid = 100,200\n",
            ),
        ),
        ("tune", write_cfg("a8_tune.cfg", "m = 1\nl = 25\ndelta = 0.05\nepsilon = 0.005\ndim = 2\n")),
    ];
    for (cmd, cfg) in cases {
        let first = tmp(&format!("a8_{cmd}_1.csv"));
        let second = tmp(&format!("a8_{cmd}_2.csv"));
        let out = run(&[
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "17",
            "--threads",
            "2",
            "--out",
            first.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run(&[
            cmd,
            "--config",
            first.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{cmd} re-run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(read(&first), read(&second), "{cmd} re-run differs");
    }
    println!(
        "[A8] PASS all five commands reproduce their output byte-for-byte from the CSV header"
    );
}

#[test]
fn analyze_orders_candidates_and_tags_resonance() {
    // tuned candidates: optimal >= langevin >= position_hmc in rate
    let cfg = write_cfg("an_order.cfg", "m = 1\nl = 4\nepsilon = 0.01\ndim = 1\n");
    let out_path = tmp("an_order.csv");
    assert!(run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let rows = data_rows(&read(&out_path));
    assert_eq!(rows.len(), 3);
    let rho: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(rows[0][0], "optimal");
    assert_eq!(rows[1][0], "langevin");
    assert_eq!(rows[2][0], "position_hmc");
    assert!(rho[0] >= rho[1] && rho[1] >= rho[2], "rates {rho:?}");
    // all three share the step size, hence the bias column
    assert!(rows
        .iter()
        .all(|r| r[1] == rows[0][1] && r[7] == rows[0][7]));

    // kappa = 1: the tuned damping degenerates to zero
    let cfg = write_cfg("an_kappa1.cfg", "m = 2\nl = 2\nepsilon = 0.01\ndim = 3\n");
    let out_path = tmp("an_kappa1.csv");
    assert!(run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let rows = data_rows(&read(&out_path));
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.0);

    // explicit resonant parameters: zero rate, degenerate tag
    let cfg = write_cfg(
        "an_res.cfg",
        "m = 1\nl = 4\ndelta = 0.08246680715673207\nk = 20\neta = 0.5\n",
    );
    let out_path = tmp("an_res.csv");
    assert!(run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let rows = data_rows(&read(&out_path));
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][8], "periodic-degenerate");
}

#[test]
fn sample_zero_transitions_and_replay() {
    let cfg = write_cfg(
        "sa_zero.cfg",
        "spectrum = 2.0\ndelta = 0.1\ntransitions = 0\n",
    );
    let out_path = tmp("sa_zero.csv");
    assert!(run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let rows = data_rows(&read(&out_path));
    assert_eq!(rows.len(), 1, "only the initial snapshot");
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[0][1], "1");

    // same seed and config give bit-identical files
    let cfg = write_cfg(
        "sa_replay.cfg",
        "spectrum = 1.5\ndelta = 0.2\ntransitions = 11000\nstride = 11000\n",
    );
    let (p1, p2) = (tmp("sa_replay1.csv"), tmp("sa_replay2.csv"));
    assert!(run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        p1.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        p2.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(read(&p1), read(&p2));
}

#[test]
fn sample_overflow_writes_partial_csv_with_trailer() {
    // unstable step size: the chain blows up and the run aborts mid-way
    let cfg = write_cfg(
        "sa_boom.cfg",
        "spectrum = 1.0\ndelta = 3.0\ntransitions = 5000\nstride = 100\n",
    );
    let out_path = tmp("sa_boom.csv");
    let out = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("\"status\":\"aborted\""),
        "stderr: {stderr}"
    );
    let text = read(&out_path);
    assert!(
        text.lines().last().unwrap().starts_with("# aborted:"),
        "missing trailer"
    );
    assert!(
        !data_rows(&text).is_empty(),
        "partial rows should be present"
    );
}

#[test]
fn couple_reports_fit_certificate_and_degenerate_offsets() {
    // identical initial states: all-zero distances, degenerate fit flag
    let cfg = write_cfg(
        "co_zero.cfg",
        "spectrum = 1.0,4.0\ndelta = 0.15\nk = 2\neta = 0.3\ntransitions = 100\noffset_norm = 0\n",
    );
    let out_path = tmp("co_zero.csv");
    assert!(run(&[
        "couple",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let text = read(&out_path);
    assert_eq!(note(&text, "fit flag"), "degenerate-all-zero");
    assert!(data_rows(&text)
        .iter()
        .all(|r| r[1] == "0.0000000000000000e0"));

    // quadratic class: fitted and closed-form rates agree within 5%
    let cfg = write_cfg(
        "co_fit.cfg",
        "spectrum = 1.0,4.0\ndelta = 0.15\nk = 2\neta = 0.3\ntransitions = 600\n",
    );
    let out_path = tmp("co_fit.csv");
    assert!(run(&[
        "couple",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let text = read(&out_path);
    let fitted: f64 = note(&text, "fit rate_per_gradient").parse().unwrap();
    let analytic: f64 = note(&text, "analytic rho_per_gradient").parse().unwrap();
    assert!(
        (fitted / analytic - 1.0).abs() < 0.05,
        "fitted {fitted} vs analytic {analytic}"
    );
    assert!(note(&text, "certified rho").starts_with("none"));

    // certified configuration: per-step contraction reported as pass
    let cfg = write_cfg(
        "co_cert.cfg",
        "oracle = perturbed\nalpha = 0.1\ndim = 10\ndelta = 0.004\nk = 2\neta = 0.95\ntransitions = 400\n",
    );
    let out_path = tmp("co_cert.csv");
    let out = run(&[
        "couple",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = read(&out_path);
    assert_eq!(note(&text, "contraction check"), "pass");
    assert_eq!(note(&text, "certified regime"), "general");
}

#[test]
fn risk_bound_columns_follow_certificate() {
    // certified: bound column filled and above the empirical MSE
    let cfg = write_cfg(
        "ri_ok.cfg",
        "spectrum = 1.0\ndelta = 0.01\nk = 1\neta = 0.9\nreplicas = 40\nn_grid = 100,200,400\n",
    );
    let out_path = tmp("ri_ok.csv");
    let out = run(&[
        "risk",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for row in data_rows(&read(&out_path)) {
        assert_eq!(row[7], "ok");
        let mse: f64 = row[2].parse().unwrap();
        let ln_bound: f64 = row[6].parse().unwrap();
        assert!(mse.ln() <= ln_bound, "mse {mse} above bound");
    }

    // certificate unavailable: empty bound column plus the failed conditions
    let cfg = write_cfg(
        "ri_bad.cfg",
        "spectrum = 1.0\ndelta = 0.01\nk = 1\neta = 0.999\nreplicas = 30\nn_grid = 100\n",
    );
    let out_path = tmp("ri_bad.csv");
    let out = run(&[
        "risk",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows = data_rows(&read(&out_path));
    assert_eq!(rows[0][6], "");
    assert_eq!(rows[0][7], "unavailable");
    assert!(rows[0][8].contains("damping"), "reason: {}", rows[0][8]);
}

#[test]
fn data_rows_do_not_depend_on_thread_count() {
    let cfg = write_cfg(
        "threads.cfg",
        "spectrum = 1.0,2.0\ndelta = 0.01\nk = 1\neta = 0.9\nreplicas = 40\nn_grid = 150,300\n",
    );
    let (p1, p2) = (tmp("threads1.csv"), tmp("threads4.csv"));
    assert!(run(&[
        "risk",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "2",
        "--threads",
        "1",
        "--out",
        p1.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "risk",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "2",
        "--threads",
        "4",
        "--out",
        p2.to_str().unwrap()
    ])
    .status
    .success());
    // headers record the differing thread counts; every data row is identical
    assert_eq!(data_rows(&read(&p1)), data_rows(&read(&p2)));
}

#[test]
fn tune_reports_k_star_candidates() {
    let cfg = write_cfg("tu.cfg", "m = 1\nl = 25\ndelta = 0.05\n");
    let out_path = tmp("tu.csv");
    assert!(run(&[
        "tune",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap()
    ])
    .status
    .success());
    let rows = data_rows(&read(&out_path));
    assert_eq!(rows[0][0], "fixed_delta_tuned");
    let k_star: u32 = rows[0][5].parse().unwrap();
    let best_k: u32 = rows[0][2].parse().unwrap();
    assert_eq!(k_star, 11);
    assert!(best_k == k_star || best_k == k_star - 1);
    let best_k0: u32 = rows[1][2].parse().unwrap();
    assert!(best_k0 == k_star || best_k0 == k_star - 1);
}

#[test]
fn validation_errors_name_the_field_and_exit_nonzero() {
    let cfg = write_cfg("bad_key.cfg", "m = 1\nl = 4\nepsilonn = 0.01\ndim = 1\n");
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilonn"));

    let cfg = write_cfg("bad_val.cfg", "m = 1\nl = abc\nepsilon = 0.01\ndim = 1\n");
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("'l'") && err.contains("abc"), "stderr: {err}");

    // a config recorded for another command is refused
    let cfg = write_cfg(
        "bad_cmd.cfg",
        "command = tune\nm = 1\nl = 4\nepsilon = 0.01\ndim = 1\n",
    );
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
