use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdbackhaul"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("fdbackhaul-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn run_writes_all_outputs() {
    let dir = scratch("run");
    let cfg = dir.join("c.toml");
    let text = String::from_utf8(bin().arg("default-config").output().unwrap().stdout).unwrap();
    let text = text
        .replace("duration_s = 50.0", "duration_s = 0.5")
        .replace("n_drops = 20", "n_drops = 2")
        .replace("placement = \"uniform\"", "placement = \"fixed-loss\"\nloss_db = [100.0]");
    fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let st = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--variant", "hd,fd-pa", "--seed", "5", "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    for f in ["throughput.csv", "mode_usage.csv", "queues.csv", "decisions.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let tp = fs::read_to_string(out.join("throughput.csv")).unwrap();
    assert_eq!(tp.lines().count(), 3);
    assert!(tp.starts_with("backhaul,variant,n_drops"));

    // Same seed, same numbers.
    let again = dir.join("again");
    bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--variant", "hd,fd-pa", "--seed", "5", "--out", again.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(tp, fs::read_to_string(again.join("throughput.csv")).unwrap());
}

#[test]
fn sweep_and_power_opt() {
    let o = bin().args(["sweep-capacity", "--preset", "fig4"]).output().unwrap();
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("param_db,c_hd"));

    let o = bin()
        .args(["power-opt", "--mode", "fdb", "--signal-db=-90,-95", "--cross-db=-120,-120", "--noise-dbm=-91,-99", "--pmax-dbm=46,24", "--oracle", "50"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("ratio"));
}

#[test]
fn bad_input_fails() {
    assert!(!bin().args(["sweep-capacity", "--preset", "nope"]).status().unwrap().success());
    assert!(!bin().args(["power-opt", "--mode", "fdd", "--signal-db=-90"]).status().unwrap().success());
    let dir = scratch("bad");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "n_ues = 0\n").unwrap();
    assert!(!bin().args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]).status().unwrap().success());
}
