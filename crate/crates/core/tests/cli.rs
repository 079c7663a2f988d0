use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_packing-bb"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn generate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str| {
        cli(
            &[
                "generate", "-m", "1", "-n", "100", "--beta", "0.25", "--seed", "7", "-o", name,
            ],
            dir.path(),
        )
    };
    assert!(gen("inst.txt").status.success());
    assert!(gen("again.txt").status.success());
    let text = fs::read_to_string(dir.path().join("inst.txt")).unwrap();
    assert_eq!(
        text,
        fs::read_to_string(dir.path().join("again.txt")).unwrap()
    );
    assert!(text.starts_with("# packing instance seed=7"));

    let out = cli(
        &[
            "solve",
            "inst.txt",
            "--node-rule",
            "best-bound",
            "--var-rule",
            "first",
            "--tree-dump",
            "tree.txt",
        ],
        dir.path(),
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["outcome"], "completed");
    let nodes = summary["node_count"].as_u64().unwrap();
    let dump = fs::read_to_string(dir.path().join("tree.txt")).unwrap();
    assert_eq!(dump.lines().count() as u64, nodes + 1);
    assert!(dump.starts_with("# id parent status branch_var lp_value depth\n0 - branched "));
}

#[test]
fn census_respects_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    cli(
        &[
            "generate", "-m", "1", "-n", "21", "--beta", "0.3", "-o", "big.txt",
        ],
        dir.path(),
    );
    let out = cli(&["census", "big.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));

    cli(
        &[
            "generate",
            "-m",
            "2",
            "-n",
            "10",
            "--beta",
            "0.3,0.2",
            "-o",
            "small.txt",
        ],
        dir.path(),
    );
    let report = stdout_json(&cli(
        &["census", "small.txt", "--observe", "best-bound"],
        dir.path(),
    ));
    assert_eq!(report["bound_satisfied"], true);
    assert_eq!(
        report["good_points"].as_array().unwrap().len() as u64,
        report["good_count"].as_u64().unwrap()
    );
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        cli(&["solve", "--bogus"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        cli(&["solve", "missing.txt"], dir.path()).status.code(),
        Some(2)
    );
    fs::write(
        dir.path().join("bad.cfg"),
        "kind = scaling\nm = 1\nbeta = 0.25\nn_list = 10\nreplica = 3\n",
    )
    .unwrap();
    let out = cli(&["run", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`replica`"));
}

#[test]
fn help_documents_every_subcommand_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let help = String::from_utf8(cli(&["--help"], dir.path()).stdout).unwrap();
    for sub in [
        "generate",
        "solve",
        "census",
        "scaling",
        "slabs",
        "arrangement",
        "run",
    ] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
    let help = String::from_utf8(cli(&["solve", "--help"], dir.path()).stdout).unwrap();
    for flag in [
        "--node-rule",
        "--var-rule",
        "--seed",
        "--script",
        "--node-budget",
        "--tree-dump",
    ] {
        assert!(help.contains(flag), "{flag} missing from solve help");
    }
}

#[test]
fn scaling_config_writes_rows_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let config = "kind = scaling\nm = 1\nbeta = 0.25\nn_list = (50,100,200,400)\nreplicas = 20\nbase_seed = 1\n\
                  rows = rows.csv\naggregate = agg.json\ntimings = times.csv\n";
    fs::write(dir.path().join("scaling.cfg"), config).unwrap();
    let aggregate = stdout_json(&cli(&["run", "--config", "scaling.cfg"], dir.path()));
    let rows = fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert!(rows.starts_with("# packing-bb rows v1 kind=scaling\n"));
    assert_eq!(rows.lines().count(), 2 + 80);
    assert_eq!(aggregate["rows"], 80);
    assert_eq!(
        aggregate["config"]["n_list"],
        serde_json::json!([50, 100, 200, 400])
    );
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("agg.json")).unwrap()).unwrap();
    assert_eq!(saved, aggregate);
    assert_eq!(
        fs::read_to_string(dir.path().join("times.csv"))
            .unwrap()
            .lines()
            .count(),
        81
    );
}

#[test]
fn census_experiment_satisfies_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("census.cfg"),
        "kind = census\nm = 1\nbeta = 0.3\nn_list = 12\nreplicas = 50\n",
    )
    .unwrap();
    let aggregate = stdout_json(&cli(&["run", "--config", "census.cfg"], dir.path()));
    let reports = aggregate["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 50);
    assert!(reports.iter().all(|r| r["bound_satisfied"] == true));
    assert_eq!(aggregate["all_bound_satisfied"], true);
}

#[test]
fn arrangement_and_slabs() {
    let dir = tempfile::tempdir().unwrap();
    cli(
        &[
            "generate", "-m", "1", "-n", "50", "--beta", "0.25", "-o", "inst.txt",
        ],
        dir.path(),
    );
    let out = stdout_json(&cli(
        &["arrangement", "inst.txt", "--trials", "2000", "--list"],
        dir.path(),
    ));
    assert!(out["exact_cells"].as_u64().unwrap() <= 101);
    assert_eq!(out["sampled_missing"], 0);
    assert_eq!(
        out["cells"].as_array().unwrap().len() as u64,
        out["exact_cells"].as_u64().unwrap()
    );

    let out = stdout_json(&cli(
        &[
            "slabs",
            "-m",
            "2",
            "--beta",
            "0.3",
            "--n-list",
            "200",
            "--replicas",
            "3",
            "--rows",
            "slabs.csv",
        ],
        dir.path(),
    ));
    assert_eq!(out["rows"], 3);
    assert!(fs::read_to_string(dir.path().join("slabs.csv"))
        .unwrap()
        .contains("max_ratio"));
}
