use std::path::PathBuf;
use std::process::{Command, Output};

fn cfou(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfou"))
        .args(args)
        .env_remove("CFOU_WORKERS")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfou-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn rows(path: &PathBuf) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=v1"));
    lines.next().unwrap();
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn hurst_outside_estimation_range_is_a_usage_error() {
    let out = scratch("h08.csv");
    let o = cfou(&["simulate", "--h", "0.8", "--t", "10", "--n", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn noiseless_path_is_the_exponential() {
    let out = scratch("a0.csv");
    let o = cfou(&[
        "simulate", "--h", "0.6", "--lambda", "1", "--omega", "0.5", "--a", "0", "--z0-re", "0.6", "--z0-im",
        "-0.3", "--t", "10", "--n", "1000", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header = std::fs::read_to_string(&out).unwrap();
    assert_eq!(header.lines().nth(1), Some("t,re_z,im_z"));
    let data = rows(&out);
    assert_eq!(data.len(), 1001);
    for r in data {
        let (t, re, im) = (r[0], r[1], r[2]);
        // e^{−(1 − 0.5i)t} (0.6 − 0.3i); |z| < 1 keeps 12-digit rounding below 1e-12
        let (m, ph) = ((-t).exp(), 0.5 * t);
        let (er, ei) = (m * ph.cos(), m * ph.sin());
        let (zr, zi) = (0.6 * er + 0.3 * ei, 0.6 * ei - 0.3 * er);
        assert!((re - zr).abs() <= 1e-12 && (im - zi).abs() <= 1e-12, "t={t}: {re} {im} vs {zr} {zi}");
    }
}

#[test]
fn simulate_is_byte_deterministic() {
    let (a, b) = (scratch("det_a.csv"), scratch("det_b.csv"));
    for p in [&a, &b] {
        let o = cfou(&[
            "simulate", "--h", "0.6", "--lambda", "1", "--omega", "0.5", "--a", "1", "--t", "100", "--n", "4096",
            "--seed", "7", "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn brownian_asymptotics_print_the_scaled_identity() {
    let o = cfou(&["asymptotics", "--h", "0.5", "--lambda", "2", "--omega", "0.7", "--a", "0.25"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    // λ/(4a) = 2
    assert!(stdout.contains("cov_nominal        = [[2, 0], [0, 2]]"), "{stdout}");
}

#[test]
fn chaoscheck_routes_agree() {
    let out = scratch("chaos.csv");
    let o = cfou(&["chaoscheck", "--n", "8", "--count", "4", "--seed", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for r in rows(&out) {
        assert!(r[4] < 1e-9 && r[6] < 1e-9, "{r:?}");
    }
}

#[test]
fn mc_csv_does_not_depend_on_workers() {
    let (a, b) = (scratch("mc_1.csv"), scratch("mc_8.csv"));
    for (p, w) in [(&a, "1"), (&b, "8")] {
        let o = cfou(&[
            "mc", "--h", "0.6", "--omega", "0.5", "--dt", "0.0625", "--t-list", "5,10", "--replicas", "40", "--seed",
            "9", "--workers", w, "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_values_are_overridden_by_flags() {
    let cfg = scratch("run.cfg");
    let out = scratch("cfg.csv");
    std::fs::write(
        &cfg,
        format!("[model]\nh = 0.6\na = 0\nz0_re = 1\n\n[grid]\nt = 2\nn = 20\n\n[run]\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = cfou(&["--config", cfg.to_str().unwrap(), "simulate", "--n", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = rows(&out);
    assert_eq!(data.len(), 11);
    assert!((data[10][1] - (-2.0f64).exp()).abs() < 1e-12);

    std::fs::write(&cfg, "[model]\nhurst = 0.6\n").unwrap();
    let o = cfou(&["--config", cfg.to_str().unwrap(), "asymptotics", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_paths_are_io_errors() {
    let o = cfou(&["simulate", "--h", "0.6", "--t", "1", "--n", "4", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let o = cfou(&["estimate", "--h", "0.6", "--input", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn estimate_reads_simulated_paths() {
    let path = scratch("est_in.csv");
    let out = scratch("est_out.csv");
    let sim = cfou(&["simulate", "--h", "0.6", "--omega", "0.5", "--t", "50", "--dt", "0.03125", "--seed", "2", "--out", path.to_str().unwrap()]);
    assert!(sim.status.success());
    let from_file = cfou(&["estimate", "--h", "0.6", "--omega", "0.5", "--input", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let direct = scratch("est_direct.csv");
    let o = cfou(&["estimate", "--h", "0.6", "--omega", "0.5", "--t", "50", "--dt", "0.03125", "--seed", "2", "--out", direct.to_str().unwrap()]);
    assert!(o.status.success());
    let (x, y) = (rows(&out)[0].clone(), rows(&direct)[0].clone());
    for (u, v) in x.iter().zip(&y) {
        assert!((u - v).abs() <= 1e-9 * v.abs().max(1.0), "{x:?} vs {y:?}");
    }
}
