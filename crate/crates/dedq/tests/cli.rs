use std::fs;
use std::path::{Path, PathBuf};

use dedq::cli::{run, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_OK};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(format!("{name}.toml")).display().to_string()
}

/// Runs in-process; returns (exit code, stdout, stderr).
fn dedq(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dedq").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let base = cfg("base");
    let files: Vec<PathBuf> = ["a.csv", "b.csv", "c.csv"].iter().map(|f| dir.path().join(f)).collect();
    for (f, seed) in files.iter().zip(["7", "7", "8"]) {
        let (code, _, err) = dedq(&[
            "simulate", "--config", &base, "--n", "16", "--horizon", "10", "--seed", seed, "--out",
            f.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let a = fs::read(&files[0]).unwrap();
    assert_eq!(a, fs::read(&files[1]).unwrap());
    assert_ne!(a, fs::read(&files[2]).unwrap());

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# dedq ") && meta.contains("seed=7") && meta.contains("command=simulate"));
    assert_eq!(lines.next().unwrap(), "t,kind,class,k,N1,Nm1,G1,Gm1,Q");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 100);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 9);
        assert!(["arrival", "match", "renege"].contains(&cols[1]));
        let n: [i64; 4] = [4, 5, 6, 7].map(|j| cols[j].parse().unwrap());
        // N1 - Nm1 - G1 + Gm1 + Q(0) = Q with Q(0) = 0
        assert_eq!(n[0] - n[1] - n[2] + n[3], cols[8].parse::<i64>().unwrap());
    }
}

#[test]
fn flags_override_file_values() {
    let (_, out, _) = dedq(&["simulate", "--config", &cfg("base"), "--horizon", "0.5"]);
    let last: f64 = out.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last <= 0.5);
    assert!(out.lines().next().unwrap().contains("seed=7"));
    let (_, out, _) = dedq(&["simulate", "--config", &cfg("base"), "--horizon", "0.5", "--seed", "99"]);
    assert!(out.lines().next().unwrap().contains("seed=99"));
}

#[test]
fn stationary_prints_c0_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pi.csv");
    let (code, stdout, _) = dedq(&["stationary", "--config", &cfg("ou"), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let c0: f64 = stdout.trim().strip_prefix("C0 = ").unwrap().parse().unwrap();
    assert!((c0 - 0.5641896).abs() < 1e-7);
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "x,pdf,cdf");
    assert_eq!(lines.len(), 2 + dedq_core::stationary::TABLE_NODES);
    let last_cdf: f64 = lines.last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((last_cdf - 1.0).abs() < 1e-9);
}

#[test]
fn picard_reads_a_driver_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    let mut text = String::from("# constant input\nt,x\n");
    for j in 0..=2000 {
        text.push_str(&format!("{},1\n", j as f64 * 1e-3));
    }
    fs::write(&input, text).unwrap();
    let (code, out, err) = dedq(&["picard", "--input", input.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows: Vec<Vec<f64>> = out
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2001);
    for r in rows {
        assert!((r[1] - (-r[0]).exp()).abs() < 1e-6, "{r:?}");
        assert_eq!(r[2], 0.0);
    }

    fs::write(&input, "t,x\n0,1\n0.1,1\n0.3,1\n").unwrap();
    let (code, _, err) = dedq(&["picard", "--input", input.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("uniform grid"), "{err}");
}

#[test]
fn sde_modes_write_their_formats() {
    let ou = cfg("ou");
    for (mode, header, rows) in [
        ("path", "t,Q", 1001),
        ("driver", "t,X", 1001),
        ("terminal", "seed,QT", 20),
        ("psi", "seed,gap", 20),
    ] {
        let (code, out, err) = dedq(&["sde", "--config", &ou, "--mode", mode, "--reps", "20", "--horizon", "1"]);
        assert_eq!(code, EXIT_OK, "{mode}: {err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[1], header);
        assert_eq!(lines.len() - 2, rows, "{mode}");
    }
}

#[test]
fn diagnose_reports_both_classes() {
    let (code, out, _) = dedq(&["diagnose", "--config", &cfg("hazard"), "--reps", "200"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "class,mean,se,pass");
    assert!(lines[2].starts_with("1,") && lines[3].starts_with("-1,"));

    let (code, out, _) = dedq(&["diagnose", "--config", &cfg("hazard"), "--reps", "200", "--intervals", "4"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 2 + 8);

    // fixed-CDF patience has no hazard rate
    let (code, _, err) = dedq(&["diagnose", "--config", &cfg("base"), "--reps", "5"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("hazard"), "{err}");
}

#[test]
fn convergence_passes_on_ou_at_small_scale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("ou.toml");
    let text = fs::read_to_string(cfg("ou"))
        .unwrap()
        .replace("n_list = [4, 16, 64, 256]", "n_list = [4, 256]")
        .replace("stationary_samples = 100000", "stationary_samples = 20000")
        .replace("long_horizon = 50.0", "long_horizon = 10.0");
    fs::write(&cfg_path, text).unwrap();
    let out = dir.path().join("results");
    let (code, stdout, err) = dedq(&[
        "convergence", "--config", cfg_path.to_str().unwrap(), "--reps", "400", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{stdout}{err}");
    for (file, header) in [
        ("thm41.csv", "n,used,excluded,unreliable,median,q1,q3,iqr"),
        ("thm42.csv", "n,des_samples,sde_samples,censored,ks,threshold"),
        ("thm43.csv", "source,n,samples,ks,threshold,c0,burn_in,thinning"),
    ] {
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), header);
    }
}

#[test]
fn convergence_fails_without_a_trend() {
    // deterministic balanced arrivals and no reneging: nothing converges because nothing moves
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("flat.toml");
    fs::write(
        &cfg_path,
        "lambda = 1.0\n[arrival.1]\nfamily = \"deterministic\"\n[arrival.-1]\nfamily = \"deterministic\"\n[run]\nn_list = [4, 16]\nhorizon = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("results");
    let (code, stdout, _) = dedq(&[
        "convergence", "--config", cfg_path.to_str().unwrap(), "--reps", "5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_CHECK_FAILED, "{stdout}");
    assert!(stdout.contains("thm43 SKIPPED"), "{stdout}");
    assert_eq!(fs::read_to_string(out.join("thm43.csv")).unwrap().lines().count(), 2);
}

#[test]
fn invalid_input_exits_one() {
    let (code, _, err) = dedq(&["simulate", "--bogus"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("--bogus"));

    let (code, _, err) = dedq(&["simulate"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("--config"), "{err}");

    let (code, _, err) = dedq(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("not found"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "lambda = 1.0\n[arrival.1]\nfamily = \"exponential\"\nmean = 2.0\n[arrival.-1]\nfamily = \"exponential\"\n").unwrap();
    let (code, _, err) = dedq(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("arrival.1") && err.contains("line 2"), "{err}");

    let (code, _, _) = dedq(&["simulate", "--config", &cfg("base"), "--dt", "-1"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = dedq(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["simulate", "analyze", "picard", "sde", "stationary", "diagnose", "convergence"] {
        assert!(out.contains(sub), "{sub}");
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dedq");
    let status = std::process::Command::new(bin).args(["stationary", "--config", &cfg("ou")]).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).starts_with("C0 = 0.5641895"));
    let status = std::process::Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(status.status.code(), Some(1));
}
