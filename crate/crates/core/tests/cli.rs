use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn coordlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coordlearn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn seed_sweep_writes_logs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let game = fixture("cycle2.cisg");
    let o = coordlearn(&[
        "run", "--game", &game, "--protocol", "case1", "--monitoring", "imperfect", "--t-mix", "2", "--epsilon",
        "0.25", "--delta", "0.1", "--gamma", "0.1", "--k1-override", "5", "--seed", "1..30", "--steps", "20000",
        "--oracle", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "seed,steps,final_avg,v_opt,target,time_to_target,switches");
    assert_eq!(lines.len(), 31);
    for (i, line) in lines[1..].iter().enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], (i + 1).to_string());
        assert_eq!(f[1], "20000");
        assert_eq!(f[3], "0.5");
        // (1 - 0.1)(0.5 - 2 * 0.25) = 0
        assert_eq!(f[4], "0");
        assert_eq!(f[5], "0");
    }
    for seed in [1, 30] {
        let d = out.join(format!("seed_{seed}"));
        let log = fs::read_to_string(d.join("runlog.csv")).unwrap();
        assert!(log.starts_with("step,state,actions,payoff,phase,event\n"));
        assert_eq!(log.lines().count(), 20001);
        assert!(d.join("config.json").exists());
    }
}

#[test]
fn replay_reproduces_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let game = fixture("cycle2.cisg");
    for protocol in ["case4", "rmax-single"] {
        let o = coordlearn(&[
            "run", "--game", &game, "--protocol", protocol, "--t-mix", "2", "--k1-override", "3", "--seed", "4",
            "--steps", "700", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let replayed = dir.path().join("replayed.csv");
        let o = coordlearn(&[
            "replay",
            "--config",
            out.join("seed_4/config.json").to_str().unwrap(),
            "--out",
            replayed.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(fs::read(replayed).unwrap(), fs::read(out.join("seed_4/runlog.csv")).unwrap());
    }
}

#[test]
fn rmax_single_matches_case1() {
    let dir = tempfile::tempdir().unwrap();
    let game = fixture("cycle2.cisg");
    let mut logs = Vec::new();
    for protocol in ["case1", "rmax-single"] {
        let out = dir.path().join(protocol);
        let o = coordlearn(&[
            "run", "--game", &game, "--protocol", protocol, "--t-mix", "2", "--k1-override", "3", "--seed", "2",
            "--steps", "300", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        logs.push(fs::read(out.join("seed_2/runlog.csv")).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
}

fn assert_config_error(args: &[&str], needle: &str, out: &Path) {
    let o = coordlearn(args);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    assert!(!out.exists(), "nothing may be written on a configuration error");
}

#[test]
fn configuration_errors_exit_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = out.to_str().unwrap();
    let game = fixture("cycle2.cisg");
    assert_config_error(
        &["run", "--game", &game, "--protocol", "case3", "--monitoring", "imperfect", "--t-mix", "2", "--steps", "5", "--out", o],
        "perfect monitoring",
        &out,
    );
    assert_config_error(
        &["run", "--game", &game, "--protocol", "case6", "--t-mix", "4", "--bound", "2", "--steps", "5", "--out", o],
        "mixing time",
        &out,
    );
    assert_config_error(
        &["run", "--game", &game, "--protocol", "case1", "--steps", "5", "--out", o],
        "t_mix",
        &out,
    );
    assert_config_error(
        &["run", "--game", "/no/such/file", "--protocol", "case1", "--t-mix", "2", "--steps", "5", "--out", o],
        "cannot read",
        &out,
    );
    assert_config_error(
        &["run", "--game", &fixture("absorbing.cisg"), "--protocol", "case1", "--t-mix", "2", "--steps", "5", "--oracle", "--out", o],
        "ergodic",
        &out,
    );
    assert_config_error(
        &["run", "--game", &game, "--protocol", "case7", "--t-mix", "2", "--steps", "5", "--out", o],
        "unknown protocol",
        &out,
    );
}

#[test]
fn oracle_reports() {
    let o = coordlearn(&["oracle", "--game", &fixture("cycle2.cisg")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("ergodic: yes"));
    assert!(text.contains("v(M): 0.5\n"));
    assert!(text.contains("mixing time (eps=0.25): 2\n"));

    let o = coordlearn(&["oracle", "--game", &fixture("coordination2x2.cisg")]);
    let text = stdout(&o);
    assert!(text.contains("v(M): 1\n"));
    assert!(text.contains("0 -> (0, 0)"));

    let o = coordlearn(&["oracle", "--game", &fixture("absorbing.cisg")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("ergodic: no"));
    assert!(text.contains("witness: policy [(0, 0), (1, 1)]"));
    assert!(!text.contains("v(M)"));
}

#[test]
fn generated_games_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.cisg");
    let o = coordlearn(&["generate", "--states", "3", "--actions", "2,3", "--seed", "5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let o = coordlearn(&["oracle", "--game", path.to_str().unwrap()]);
    assert!(stdout(&o).contains("actions: 2x3"));
    assert!(stdout(&o).contains("ergodic: yes"));
}
