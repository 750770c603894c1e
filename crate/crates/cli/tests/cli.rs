use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = "H = 0.3\nns = [4]\nbands = 4\nmesh_h = 0.04\n";

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    let dirs = format!(
        "output_dir = {:?}\ncache_dir = {:?}\n",
        dir.join("out"),
        dir.join("cache")
    );
    // top-level keys must precede any table
    let (top, tables) = body
        .split_once("\n[")
        .map_or((body.to_string(), String::new()), |(a, b)| {
            (format!("{a}\n"), format!("[{b}"))
        });
    fs::write(&p, format!("{top}{dirs}{tables}")).unwrap();
    p
}

fn perfband(cmd: &str, cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfband"))
        .args([cmd, "--config"])
        .arg(cfg)
        .env_remove("PERFBAND_OUTPUT_DIR")
        .env_remove("PERFBAND_CACHE_DIR")
        .output()
        .unwrap()
}

fn artifact(dir: &Path, prefix: &str, ext: &str) -> PathBuf {
    fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            let n = p.file_name().unwrap().to_str().unwrap();
            n.starts_with(prefix) && n.ends_with(ext) && n[prefix.len()..].len() == 16 + ext.len()
        })
        .unwrap_or_else(|| panic!("no {prefix}*{ext}"))
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("mesh_h = 0.04", "mesh_h = -1"));
    let out = perfband("dispersion", &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh_h"));
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), &format!("{BASE}ms = [3]\n").replace("0.3", "0.45"));
    let out = perfband("sweep", &cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`ms`"), "{err}");
}

#[test]
fn dispersion_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("bands = 4", "bands = 6"));
    let out = perfband("dispersion", &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(artifact(dir.path(), "dispersion-", ".csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 33 * 6);
    // at eta = 0: 0, (2 pi)^2 twice, (pi/H)^2, (2 pi)^2 + (pi/H)^2 twice
    let at0: Vec<f64> = rows.iter().filter(|r| r[0] == 0.0).map(|r| r[2]).collect();
    let (a, b) = (4.0 * PI * PI, (PI / 0.3).powi(2));
    let want = [0.0, a, a, b, a + b, a + b];
    for (a, b) in at0.iter().zip(want) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{a} vs {b}");
    }
    // at eta = pi the lowest level is double
    let at_pi: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == PI).collect();
    assert!((at_pi[0][2] - PI * PI).abs() < 1e-12 && at_pi[0][5] == 2.0);
    assert!(artifact(dir.path(), "dispersion-", ".svg").exists());
}

#[test]
fn repeated_solve_reads_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BASE}[solve]\nn = 4\neta = 0.5\n"));
    let first = perfband("solve", &cfg);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let path = artifact(dir.path(), "solve-", ".csv");
    let bytes = fs::read(&path).unwrap();
    assert!(fs::read_dir(dir.path().join("cache")).unwrap().count() == 1);

    let second = perfband("solve", &cfg);
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stderr).contains("from cache"));
    assert_eq!(fs::read(&path).unwrap(), bytes);

    // a different tolerance is a different run
    let cfg = write_config(
        dir.path(),
        &format!("{BASE}[solve]\nn = 4\neta = 0.5\n[solver]\ntol = 1e-9\n"),
    );
    let third = perfband("solve", &cfg);
    assert!(third.status.success());
    assert!(!String::from_utf8_lossy(&third.stderr).contains("from cache"));
    assert_eq!(fs::read_dir(dir.path().join("cache")).unwrap().count(), 2);
}

#[test]
fn environment_overrides_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let other = dir.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_perfband"))
        .args(["dispersion", "--config"])
        .arg(&cfg)
        .env("PERFBAND_OUTPUT_DIR", &other)
        .env_remove("PERFBAND_CACHE_DIR")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read_dir(&other).unwrap().count(), 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn sweep_reports_a_slope() {
    let dir = tempfile::tempdir().unwrap();
    let body = "H = 0.3\nns = [4, 8, 16]\nbands = 1\nmesh_h = 0.04\nms = [1]\n[eta]\nvalues = [-3.141592653589793, 0.0, 2.0, 3.141592653589793]\n";
    let cfg = write_config(dir.path(), body);
    let out = perfband("sweep", &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(artifact(dir.path(), "sweep-", ".csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("m,epsilon,sup_err,signed_max,slope,C0,pass_upper,pass_rate")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let slope: f64 = rows[0][4].parse().unwrap();
    assert!((0.9..=1.3).contains(&slope), "slope {slope}");
    assert_eq!(rows[0][7], "true");
}

#[test]
fn every_command_writes_csv_or_text_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        format!("{BASE}[eta]\nvalues = [0.0, 1.0]\n[quasimode]\nj = [0, 1]\netas = [0.5]\n[solve]\nn = 4\neta = 1.0\n");
    let cfg = write_config(dir.path(), &body);
    for (cmd, prefix, data) in [
        ("mesh", "mesh-N4-", ".txt"),
        ("cell", "cell-", ".csv"),
        ("quasimode", "quasimode-", ".csv"),
        ("bands", "bands-N4-", ".csv"),
    ] {
        let out = perfband(cmd, &cfg);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(artifact(dir.path(), prefix, data).exists());
        let svg = fs::read_to_string(artifact(dir.path(), prefix, ".svg")).unwrap();
        assert!(svg.starts_with("<svg"));
    }
    let q = fs::read_to_string(artifact(dir.path(), "quasimode-", ".csv")).unwrap();
    assert_eq!(q.lines().count(), 3);
}

#[test]
fn solver_failure_exits_nonzero_and_names_eta() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{BASE}[eta]\nvalues = [0.5]\n[solver]\ntol = 1e-30\nmax_cycles = 1\n");
    let cfg = write_config(dir.path(), &body);
    let out = perfband("bands", &cfg);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eta = 0.5"), "{err}");
}
