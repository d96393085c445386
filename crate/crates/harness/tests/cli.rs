use std::path::Path;
use std::process::Command;

use clbo_harness::cli_main;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("clbo").chain(args.iter().copied());
    let code = cli_main(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn run_smoke_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, stderr) = run(&["run", "--problem", "branin2", "--optimizer", "ego", "--repeats", "2", "--seed", "7", "--out", out]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("median final regret"));
    let text = String::from_utf8(read(&dir.path().join("branin2-ego.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# clbo-trace v1"));
    assert_eq!(lines.next(), Some("run,iteration,n_total,f_min,regret,provenance,z,regime,pei_invoked"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // Two runs of 60 evaluations each.
    assert_eq!(rows.len(), 120);
    assert!(rows.iter().all(|r| r.len() == 9));
    for run in ["0", "1"] {
        let regrets: Vec<f64> = rows.iter().filter(|r| r[0] == run).map(|r| r[4].parse().unwrap()).collect();
        assert_eq!(regrets.len(), 60);
        assert!(regrets.windows(2).all(|w| w[1] <= w[0]));
        assert!(regrets.iter().all(|&r| r >= 0.0));
    }
    assert!(rows.iter().take(12).all(|r| r[1] == "0" && r[5] == "init"));
    let summary = String::from_utf8(read(&dir.path().join("summary.csv"))).unwrap();
    assert!(summary.starts_with("# clbo-summary v1\nexperiment,problem,optimizer,n_total,q1,median,q3\n"));
    assert_eq!(summary.lines().count(), 2 + 60);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let args = [
            "run", "--problem", "forrester1", "--optimizer", "clbo", "--repeats", "3", "--seed", "3",
            "--n-budget", "14", "--record-ambiguity", "--ambiguity-grid", "32", "--out", d.path().to_str().unwrap(),
        ];
        assert_eq!(run(&args).0, 0);
        let json = [&args[..], &["--format", "json"]].concat();
        assert_eq!(run(&json).0, 0);
    }
    for f in ["forrester1-clbo.csv", "forrester1-clbo.ambiguity.csv", "summary.csv", "report.json"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&read(&a.path().join("report.json"))).unwrap();
    assert_eq!(report["schema"], "clbo-report/v1");
    assert_eq!(report["experiments"][0]["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_optimizer_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["run", "--problem", "branin2", "--optimizer", "sgd", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("optimizer"), "{err}");
    let (code, _, err) = run(&["run", "--problem", "rosenbrock", "--optimizer", "ego"]);
    assert_eq!(code, 1);
    assert!(err.contains("problem"), "{err}");
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);
    let (code, _, err) = run(&["run", "--problem", "branin2", "--optimizer", "ego", "--seed", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("--seed"), "{err}");
}

#[test]
fn suite_config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"adam\"\n", "experiment[0]", "optimizer"),
        ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\n[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\nepsilon = -1.0\n", "experiment[1]", "epsilon"),
        ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\nseeds = 4\n", "seeds", "seeds"),
        ("[[experiment]]\nproblem = 3\noptimizer = \"ego\"\n", "problem", "problem"),
    ];
    for (k, (text, a, b)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{k}.toml"));
        std::fs::write(&p, text).unwrap();
        let (code, _, err) = run(&["suite", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 1, "{err}");
        assert!(err.contains(a) && err.contains(b), "{err}");
    }
    let (code, _, err) = run(&["suite", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.toml"));
}

#[test]
fn suite_and_compare_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    let out = dir.path().join("suite-out");
    std::fs::write(
        &cfg,
        format!(
            "output_dir = {:?}\n[[experiment]]\nname = \"q-ego\"\nproblem = \"quadratic1\"\noptimizer = \"ego\"\nrepeats = 2\nn_budget = 10\n\n[[experiment]]\nproblem = \"quadratic1\"\noptimizer = \"pei2\"\nrepeats = 2\nn_budget = 10\nfailure_rate = 0.2\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let (code, _, err) = run(&["suite", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.join("q-ego.csv").exists());
    assert!(out.join("quadratic1-pei2.csv").exists());

    let cmp = dir.path().join("cmp");
    let args = [
        "compare", "--problems", "quadratic1,forrester1", "--optimizers", "clbo,ego,cl2", "--repeats", "2",
        "--n-budget", "10", "--out", cmp.to_str().unwrap(),
    ];
    let (code, table, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    assert!(table.contains("clbo-mfgp2") && table.contains("forrester1"));
    let csv = String::from_utf8(read(&cmp.join("compare.csv"))).unwrap();
    assert!(csv.starts_with("# clbo-compare v1\nproblem,optimizer,median_final_regret,rank,runs\n"));
    assert_eq!(csv.lines().count(), 2 + 6);
    let first = read(&cmp.join("compare.csv"));
    assert_eq!(run(&args).0, 0);
    assert_eq!(first, read(&cmp.join("compare.csv")));
}

#[test]
fn binary_exit_codes_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_clbo");
    let status = Command::new(bin)
        .args(["run", "--problem", "quadratic1", "--optimizer", "ego", "--repeats", "1", "--n-budget", "8"])
        .env("CLBO_OUT_DIR", dir.path())
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("quadratic1-ego.csv").exists());

    let bad = Command::new(bin).args(["run", "--problem", "quadratic1", "--optimizer", "nope"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("optimizer"));

    // An unwritable output path is a runtime failure, not a config error.
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let io = Command::new(bin)
        .args(["run", "--problem", "quadratic1", "--optimizer", "ego", "--repeats", "1", "--n-budget", "8"])
        .arg("--out")
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(io.status.code(), Some(2));
}

#[test]
fn oracle_twice_is_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["oracle", "--out", a.path().to_str().unwrap()]).0, 0);
    assert_eq!(run(&["oracle", "--out", b.path().to_str().unwrap()]).0, 0);
    assert_eq!(read(&a.path().join("oracle.json")), read(&b.path().join("oracle.json")));
}
