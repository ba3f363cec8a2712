use std::process::Command;

fn octd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_octd"))
}

const FIXED_POINTS: &str = "experiment = \"fixed-points\"\n[params]\nv = 1.0\nlambda = 0.5\nkappa = 0.3\nspin = 1.0\nn_max = 4\n";

#[test]
fn lists_recipes() {
    let out = octd().arg("list-recipes").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2-regionI", "figS6-stable-fsr2", "figS5-nointeraction"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn negative_kappa_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, FIXED_POINTS.replace("kappa = 0.3", "kappa = -0.1")).unwrap();
    let out = octd().args(["fixed-points", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_and_experiments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, FIXED_POINTS.replace("kappa = 0.3", "kapa = 0.3")).unwrap();
    assert_eq!(octd().args(["fixed-points", "--config"]).arg(&cfg).status().unwrap().code(), Some(2));
    assert_eq!(octd().args(["no-such-thing", "--recipe", "fig2-regionI"]).status().unwrap().code(), Some(2));
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, FIXED_POINTS).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(octd().args(["fixed-points", "--config"]).arg(&cfg).arg("--out").arg(&a).status().unwrap().success());
    let manifest = a.join("manifest.json");
    assert!(octd().args(["fixed-points", "--config"]).arg(&manifest).arg("--out").arg(&b).status().unwrap().success());
    for f in ["fixed_points.csv", "eigenvalues.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, FIXED_POINTS).unwrap();
    let status = octd().args(["fixed-points", "--config"]).arg(&cfg).env("OCTD_OUT", dir.path()).status().unwrap();
    assert!(status.success());
    assert!(dir.path().join("fixed-points/manifest.json").exists());
}
