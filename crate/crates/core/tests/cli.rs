use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subgoal-attention")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn enumerate_layouts_prints_every_layout_once() {
    let o = cli(&["enumerate-layouts"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1056);
    assert!(lines.contains(&"3,3,2,2 red,green,blue,yellow"));
    lines.sort();
    lines.dedup();
    assert_eq!(lines.len(), 1056);
}

#[test]
fn run_writes_csv_and_echoes_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fixed.csv");
    let o = cli(&[
        "run",
        "--experiment",
        "no-attn-fixed",
        "--episodes",
        "12",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("experiment=no-attn-fixed episodes=12 seed=2"));
    assert!(stdout(&o).contains("final 12 episodes"));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("episode,length,return,success,baseline\n"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.cfg");
    let out = dir.path().join("run.csv");
    fs::write(&config, format!("experiment=partial\nepisodes=50\nseed=9\nout={}\n", out.display())).unwrap();
    let o = cli(&["run", "--config", config.to_str().unwrap(), "--episodes", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("experiment=partial episodes=3 seed=9"));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 4);
}

#[test]
fn summarize_buckets_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    assert!(cli(&["run", "--experiment", "constrained", "--episodes", "10", "--out", out.to_str().unwrap()])
        .status
        .success());
    let o = cli(&["summarize", "--in", out.to_str().unwrap(), "--bucket", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "first_episode,count,mean_length,variance_length");
    let counts: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["4", "4", "2"]);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let o = cli(&["run", "--experiment", "bogus"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown experiment"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "experiment=partial\nlearning_rate=3\n").unwrap();
    let o = cli(&["run", "--config", config.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = cli(&["summarize", "--in", dir.path().join("missing.csv").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing.csv"));

    let o = cli(&["run", "--experiment", "partial", "--out", dir.path().join("no/such/dir.csv").to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn gradcheck_passes_on_one_seed() {
    let o = cli(&["gradcheck", "--seeds", "1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("attention controller"));
    assert!(text.trim_end().ends_with("gradcheck passed"));
}
