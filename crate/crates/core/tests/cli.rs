use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sns-torus");

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    Command::new(BIN).args([cmd, "--config"]).arg(cfg).arg("--out").arg(out).output().unwrap()
}

const SMALL: &str = r#"
seed = 3
[sim]
cutoff = 4
nu = 1.0
dt = 0.01
horizon = 0.5
record_every = 5
[sim.initial]
kind = "random"
amplitude = 1.0
decay = 1.0
"#;

#[test]
fn simulate_writes_manifest_and_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", SMALL);
    let out = tmp.path().join("out");
    let o = run("simulate", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11);
}

#[test]
fn unknown_key_is_a_config_error_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &SMALL.replace("nu = 1.0", "nu = 1.0\nviscosity = 2.0"));
    let out = tmp.path().join("out");
    let o = run("simulate", &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("viscosity"));
    assert!(!out.exists());
}

#[test]
fn invalid_values_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for (from, to) in [("nu = 1.0", "nu = -1.0"), ("dt = 0.01", "dt = 0.0"), ("cutoff = 4", "cutoff = 0")] {
        let cfg = write_config(tmp.path(), "bad.toml", &SMALL.replace(from, to));
        let out = tmp.path().join("out");
        assert_eq!(run("simulate", &cfg, &out).status.code(), Some(2), "{to}");
        assert!(!out.exists());
    }
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("out");
    // coupling needs a [coupling] table
    assert_eq!(run("couple", &cfg, &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn blow_up_is_reported_as_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[sim]
cutoff = 8
nu = 1e-6
dt = 1.0
horizon = 200.0
[sim.initial]
kind = "modes"
modes = [{ k1 = 1, k2 = 0, value = 1e6 }, { k1 = 0, k2 = 1, value = 1e6 }, { k1 = 1, k2 = 2, value = 1e6 }]
[noise]
kind = "additive-diagonal"
a = 0.0
sigma0 = 0.0
"#;
    let cfg = write_config(tmp.path(), "blow.toml", text);
    let o = run("simulate", &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step"));
}

#[test]
fn too_few_samples_is_a_statistics_refusal() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[ergodic]\nobservables = [{{ kind = \"energy\" }}]\n");
    let cfg = write_config(tmp.path(), "e.toml", &text);
    let o = run("ergodic", &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_and_noise_validation_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[sim]\ncutoff = 5\nnu = 1.0\ndt = 0.01\nhorizon = 1.0\n[noise]\nkind = \"multiplicative-low-mode\"\nm = 10\n[oracle]\npairs = 5\n[validation]\nsamples = 20\n";
    let cfg = write_config(tmp.path(), "v.toml", text);
    for cmd in ["oracle", "validate-noise"] {
        let out = tmp.path().join(cmd);
        let o = run(cmd, &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let noise: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("validate-noise/noise.json")).unwrap()).unwrap();
    let s: f64 = (1..=10).map(|n| 1.0 / ((n + 1) * (n + 1)) as f64).sum();
    assert!((noise["c1"].as_f64().unwrap() - s).abs() < 1e-14);
    assert_eq!(noise["pass"], true);
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", SMALL);
    let read = |seed: &str| {
        let out = tmp.path().join(format!("s{seed}"));
        let o = Command::new(BIN)
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(read("5"), read("5"));
    assert_ne!(read("5"), read("6"));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let (rc, _) = sns_torus::config::RunConfig::load(&path).unwrap();
            rc.sim_config(&dir).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if rc.coupling.is_some() {
                rc.coupling_config().unwrap();
            }
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
