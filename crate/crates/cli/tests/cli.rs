use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn entroflux(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entroflux"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn euler_hypotheses_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroflux(&["check-hypotheses", "--config", config("euler.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    let meta = &report["metadata"];
    assert_eq!(meta["seed"], 20240611);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    let verdicts = report["report"]["reports"].as_array().unwrap();
    assert_eq!(verdicts.len(), 6);
    assert!(verdicts.iter().all(|r| r["verdict"] == "pass"), "{verdicts:?}");
}

#[test]
fn every_command_runs_on_every_bundled_config() {
    let cases: &[(&str, &[&str], i32)] = &[
        ("euler.toml", &["simulate", "concentration", "recession", "probe-uniqueness", "orlicz-suite"], 0),
        ("swmhd.toml", &["check-hypotheses", "simulate", "concentration", "recession", "probe-uniqueness"], 0),
        ("orlicz.toml", &["orlicz-suite"], 0),
        ("euler-riemann.toml", &["simulate"], 0),
    ];
    for (cfg, commands, expected) in cases {
        for cmd in *commands {
            let dir = tempfile::tempdir().unwrap();
            let start = std::time::Instant::now();
            let o = entroflux(&[cmd, "--config", config(cfg).to_str().unwrap()], dir.path());
            assert_eq!(code(&o), *expected, "{cfg} {cmd}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(start.elapsed().as_secs_f64() < 10.0, "{cfg} {cmd} took {:?}", start.elapsed());
            let stdout = String::from_utf8_lossy(&o.stdout);
            assert!(stdout.contains(&format!("{cmd}: pass")), "{stdout}");
        }
    }
}

#[test]
fn negative_control_probe_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroflux(&["probe-uniqueness", "--config", config("euler-mismatch.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("probe.json"));
    assert_eq!(report["report"]["pass"], false);
}

#[test]
fn riemann_data_probe_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroflux(&["probe-uniqueness", "--config", config("euler-riemann.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gradient monitor"));
}

#[test]
fn solver_less_systems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroflux(&["simulate", "--system", "inc-euler", "--seed", "1"], dir.path());
    assert_eq!(code(&o), 2);
    let o = entroflux(&["recession", "--system", "inc-euler", "--seed", "1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validation_errors_are_all_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[system]\nid = \"mhd3d\"\n[grid]\ncfl = 1.5\n").unwrap();
    let o = entroflux(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["seed is mandatory", "cfl = 1.5", "registered ids"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
    std::fs::write(&bad, "seed = 1\n[grid]\nresolution = 64\n").unwrap();
    let o = entroflux(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn seed_flag_overrides_file_and_enters_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroflux(&["orlicz-suite", "--config", config("orlicz.toml").to_str().unwrap(), "--seed", "5"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&dir.path().join("orlicz.json"))["metadata"]["seed"], 5);
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn reruns_are_bit_identical() {
    for cmd in ["check-hypotheses", "simulate", "concentration", "recession", "probe-uniqueness"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = config("swmhd.toml");
        assert_eq!(code(&entroflux(&[cmd, "--config", cfg.to_str().unwrap()], a.path())), 0);
        assert_eq!(code(&entroflux(&[cmd, "--config", cfg.to_str().unwrap(), "--threads", "1"], b.path())), 0);
        assert_eq!(tree(a.path()), tree(b.path()), "{cmd}");
    }
}

#[test]
fn snapshot_layout_matches_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroflux(&["simulate", "--config", config("swmhd.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    let side = read_json(&dir.path().join("snapshots/snap_0000.json"))["report"].clone();
    let bytes = std::fs::read(dir.path().join("snapshots/snap_0000.bin")).unwrap();
    let n = side["N"].as_u64().unwrap() as usize;
    let comps = side["components"].as_u64().unwrap() as usize;
    assert_eq!(bytes.len(), n * n * comps * 8);
    // The default swmhd data start at h = 1 + 0.05 sin(2πx₁) in cell 0.
    let h0 = f64::from_le_bytes(bytes[..8].try_into().unwrap());
    let x = 0.5 / n as f64;
    assert!((h0 - 1.0 - 0.05 * (2.0 * std::f64::consts::PI * x).sin()).abs() < 1e-3, "{h0}");
}
