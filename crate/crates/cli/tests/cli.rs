use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
# tiny but complete
sim.n_particles = 300
sim.replicas = 3
sim.t_end = 0.5
study.checkpoints = 0.25, 0.5
grid.nv = 20
grid.ne = 10
smolu1d.nv = 48
study.slow_lambdas = 10, 100
";

fn coagfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coagfuse")).args(args).env("COAGFUSE_THREADS", "1").output().expect("spawn")
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.cfg");
    std::fs::write(&p, SMALL).unwrap();
    p.to_str().unwrap().to_string()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn defaults_lists_the_schema() {
    let out = coagfuse(&["defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("coag.alpha = 0.25"));
    assert!(text.contains("grid.e_max = 1000"));
}

#[test]
fn run_mc_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = coagfuse(&["run-mc", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9", "--snapshots"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["replica_000_moments.csv", "replica_002_moments.csv", "replica_001_snapshots.csv"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs");
    }
    let csv = String::from_utf8(read(&a.join("replica_000_moments.csv"))).unwrap();
    assert!(csv.starts_with("time,M_0_-4,M_0_0,M_0_1,M_0_2,M_0_4,M_1_0,M_4_0\n"));
    let summary: serde_json::Value = serde_json::from_slice(&read(&a.join("summary.json"))).unwrap();
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);

    let c = dir.path().join("c");
    let o = coagfuse(&["run-mc", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "10"]);
    assert!(o.status.success());
    assert_ne!(read(&a.join("replica_000_moments.csv")), read(&c.join("replica_000_moments.csv")));
}

#[test]
fn deterministic_solvers_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let sec = dir.path().join("sec");
    let o = coagfuse(&["run-sectional", "--config", &cfg, "--out", sec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(read(&sec.join("cells.csv"))).unwrap().starts_with("time,v_lo,v_hi,e_lo,e_hi,density\n"));
    assert!(sec.join("moments.csv").exists());
    assert!(sec.join("render.py").exists());

    let one = dir.path().join("one");
    let o = coagfuse(&["run-smolu1d", "--config", &cfg, "--out", one.to_str().unwrap()]);
    assert!(o.status.success());
    let marginal = String::from_utf8(read(&one.join("marginal.csv"))).unwrap();
    assert!(marginal.starts_with("time,v_lo,v_hi,mass\n"));
    // initial record plus 0.25 and 0.5
    assert_eq!(marginal.lines().count(), 1 + 3 * 48);
}

#[test]
fn study_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("slow");
    let o = coagfuse(&["study", "slow-fusion", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("no fusion: area moment drift"), "{stdout}");
    assert!(out.join("slow_fusion.csv").exists());
    let summary: serde_json::Value = serde_json::from_slice(&read(&out.join("slow_fusion.json"))).unwrap();
    assert!(summary["checks"].as_array().unwrap().len() >= 3);
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.cfg");
    std::fs::write(&p, "coag.alpha = 0.25\ncoag.gamma = 1\n").unwrap();
    let o = coagfuse(&["run-sectional", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("coag.gamma"));
}
