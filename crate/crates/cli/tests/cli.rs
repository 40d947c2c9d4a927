use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "[graph]
n = 36
communities = 3
min_community = 8
max_community = 16
avg_degree = 6
max_degree = 12

[experiment]
strategies = nc, ep_r
seedings = 100%, random
k = 6
packet_size = 8
trials = 3
seed = 11
max_sim_time = 1e6
";

fn oppnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oppnet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.conf");
    fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path) -> Output {
    oppnet(&["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

/// Every file under `dir`, relative path to contents.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let mut bytes = fs::read(&p).unwrap();
                if p.ends_with("manifest.json") {
                    let text = String::from_utf8(bytes).unwrap();
                    bytes = text.lines().filter(|l| !l.contains("created_unix")).collect::<String>().into_bytes();
                }
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    files.sort();
    files
}

fn assert_one_line_error(o: &Output, kind: &str) -> String {
    assert!(!o.status.success());
    let err = stderr(o);
    let last = err.lines().last().unwrap_or_default().to_owned();
    assert!(last.starts_with(&format!("error[{kind}]: ")), "{err}");
    last
}

#[test]
fn run_writes_every_cell_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    for cell in ["network_coding__100pct", "epidemic_random__100pct", "network_coding__random", "epidemic_random__random"] {
        for f in ["latency.csv", "finish.csv", "transmissions.csv", "per_node.csv", "users.csv"] {
            assert!(out.join(cell).join(f).is_file(), "{cell}/{f}");
        }
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([11, 12, 13]));
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 4);
    assert!(out.join("plans/random.json").is_file());

    let first = snapshot(&out);
    let o = run(&cfg, &out);
    assert!(o.status.success());
    assert_eq!(first, snapshot(&out));

    let report = oppnet(&["report", out.to_str().unwrap()]);
    assert!(report.status.success(), "{}", stderr(&report));
    let table = stdout(&report);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("seeding") && lines[0].contains("network_coding") && lines[0].contains("epidemic_random"));
    assert!(lines[1].starts_with("100pct") && lines[2].starts_with("random"));
    assert!(!table.contains('*'));
}

#[test]
fn overrides_change_seeds_and_trials() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let o = oppnet(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "100", "--trials", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([100, 101]));
    let rows = fs::read_to_string(out.join("network_coding__random/finish.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}

#[test]
fn truncated_cells_are_starred() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("max_sim_time = 1e6", "max_sim_time = 0.001"));
    let out = tmp.path().join("out");
    assert!(run(&cfg, &out).status.success());
    let table = stdout(&oppnet(&["report", out.to_str().unwrap()]));
    assert!(table.lines().nth(1).unwrap().contains('*'), "{table}");
}

#[test]
fn missing_k_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("k = 6\n", ""));
    let line = assert_one_line_error(&run(&cfg, &tmp.path().join("out")), "config");
    assert!(line.contains("`k`"), "{line}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failing_cells_do_not_stop_the_others() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("seedings = 100%, random", "seedings = mcu, random").replace("trials = 3", "trials = 2\nfailure = mcu_partial:0.5");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let line = assert_one_line_error(&run(&cfg, &out), "cell");
    assert!(line.contains("2 of 4 cells failed"), "{line}");
    assert!(out.join("network_coding__mcu/finish.csv").is_file());
    assert!(!out.join("network_coding__random").exists());
    let line = assert_one_line_error(&oppnet(&["report", out.to_str().unwrap()]), "report");
    assert!(line.contains("network_coding__random") && line.contains("epidemic_random__random"), "{line}");
}

#[test]
fn report_needs_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    assert_one_line_error(&oppnet(&["report", tmp.path().to_str().unwrap()]), "report");
}

#[test]
fn gen_prints_stats_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.txt");
    let b = tmp.path().join("b.txt");
    let o = oppnet(&["gen", "--communities", "14", "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("nodes 200") && text.contains("communities 14"), "{text}");
    let frac: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("inter-community edge fraction "))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.08..=0.12).contains(&frac), "{frac}");
    assert!(oppnet(&["gen", "--communities", "14", "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let o = oppnet(&["gen", "--communities", "8", "--out", a.to_str().unwrap()]);
    assert!(stdout(&o).contains("communities 8"), "{}", stdout(&o));
}

#[test]
fn bad_arguments_are_one_line_usage_errors() {
    assert_one_line_error(&oppnet(&["run"]), "usage");
    assert_one_line_error(&oppnet(&["frobnicate"]), "usage");
    assert!(oppnet(&["--help"]).status.success());
}
