//! End-to-end checks of the `ar1dp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ar1dp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ar1dp"))
        .args(args)
        .current_dir(dir)
        .env_remove("AR1DP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Data lines of a CSV output, skipping the provenance comment.
fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn parse_rows(path: &Path) -> Vec<Vec<f64>> {
    csv_lines(path)
        .iter()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

/// Writes a small scenario panel and a short-run config next to it.
fn small_fit_setup(dir: &Path, scenario: &str) -> PathBuf {
    ok(&ar1dp(
        &["simulate", "--scenario", scenario, "--seed", "5", "--units", "20", "--out", "data.csv"],
        dir,
    ));
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "data = \"data.csv\"\n[model]\ndefaults = \"simulation\"\n[prior]\ntruncation = 10\n\
         [mcmc]\niterations = 300\nburn_in = 100\nthin = 5\nnum_particles = 20\nseed = 4\n",
    )
    .unwrap();
    cfg
}

#[test]
fn simulate_writes_long_panel_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ar1dp(&["simulate", "--scenario", "1", "--seed", "7", "--out", "a.csv"], d);
    ok(&out);
    ok(&ar1dp(&["simulate", "--scenario", "1", "--seed", "7", "--out", "b.csv"], d));
    let lines = csv_lines(&d.join("a.csv"));
    assert_eq!(lines[0], "time,unit,value,true_cluster");
    assert_eq!(lines.len() - 1, 400);
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("# ar1dp "));
}

#[test]
fn simulate_default_path_uses_output_dir_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ar1dp"))
        .args(["simulate", "--scenario", "6", "--seed", "2"])
        .current_dir(dir.path())
        .env("AR1DP_OUTPUT_DIR", "sims")
        .output()
        .unwrap();
    ok(&out);
    let lines = csv_lines(&dir.path().join("sims/scenario6_seed2.csv"));
    assert_eq!(lines.len() - 1, 200);
}

#[test]
fn unknown_scenario_names_the_valid_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = ar1dp(&["simulate", "--scenario", "9", "--seed", "1"], dir.path());
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1-7"), "{}", stderr(&out));
}

#[test]
fn missing_data_file_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "data = \"no_such_panel.csv\"\n").unwrap();
    let out = ar1dp(&["fit", "--config", "run.toml", "--out-dir", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no_such_panel.csv"), "{}", stderr(&out));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "data = \"d.csv\"\n[mcmc]\nparticles = 3\n").unwrap();
    let out = ar1dp(&["fit", "--config", "run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("particles"), "{}", stderr(&out));
}

#[test]
fn simulation_preset_keeps_2500_draws() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&ar1dp(&["simulate", "--scenario", "1", "--seed", "7", "--units", "4", "--out", "s1.csv"], d));
    std::fs::write(
        d.join("run.toml"),
        "data = \"s1.csv\"\n[prior]\ntruncation = 2\n[mcmc]\npreset = \"simulation\"\nnum_particles = 2\n",
    )
    .unwrap();
    ok(&ar1dp(&["fit", "--config", "run.toml", "--out-dir", "o", "--quiet"], d));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("o/trace.json")).unwrap()).unwrap();
    assert_eq!(meta["draws"], 2500);
    assert_eq!(meta["schema"], "ar1dp-trace");
    let names: Vec<&str> = meta["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for want in ["iteration", "psi", "M", "s", "theta_mu", "theta_tau", "beta"] {
        assert!(names.contains(&want), "missing column {want}");
    }
    assert_eq!(csv_lines(&d.join("o/acceptance.csv")).len() - 1, 50_000);
}

#[test]
fn seed_flag_overrides_config_and_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "2");
    ok(&ar1dp(&["fit", "--config", "run.toml", "--seed", "99", "--out-dir", "o", "--quiet"], d));
    let echoed = std::fs::read_to_string(d.join("o/resolved_config.toml")).unwrap();
    assert!(echoed.starts_with("# ar1dp "));
    assert!(echoed.lines().any(|l| l.trim() == "seed = 99"), "{echoed}");
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("o/trace.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 99);
    // The echoed file is itself a valid configuration reproducing the run.
    ok(&ar1dp(&["fit", "--config", "o/resolved_config.toml", "--out-dir", "o2", "--quiet"], d));
    assert_eq!(
        std::fs::read(d.join("o/trace.bin")).unwrap(),
        std::fs::read(d.join("o2/trace.bin")).unwrap()
    );
}

#[test]
fn coclustering_matrices_are_symmetric_with_unit_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "6");
    ok(&ar1dp(&["fit", "--config", "run.toml", "--out-dir", "o", "--quiet"], d));
    ok(&ar1dp(&["summarize", "--trace", "o/trace.json", "--what", "coclust"], d));
    for t in 1..=2 {
        let m = parse_rows(&d.join(format!("o/coclust_t{t}.csv")));
        assert_eq!(m.len(), 20);
        for i in 0..20 {
            assert_eq!(m[i].len(), 20);
            assert_eq!(m[i][i], 1.0);
            for j in 0..20 {
                assert_eq!(m[i][j], m[j][i]);
                assert!((0.0..=1.0).contains(&m[i][j]));
            }
        }
    }
}

#[test]
fn predictive_grids_integrate_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "2");
    ok(&ar1dp(&["fit", "--config", "run.toml", "--out-dir", "o", "--quiet"], d));
    ok(&ar1dp(&["summarize", "--trace", "o/trace.json", "--what", "predictive"], d));
    for t in 1..=4 {
        let lines = csv_lines(&d.join(format!("o/predictive_t{t}.csv")));
        assert_eq!(lines[0], "y,density");
        let rows: Vec<(f64, f64)> = lines[1..]
            .iter()
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        let integral: f64 = rows.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        assert!((integral - 1.0).abs() < 0.02, "t = {t}: {integral}");
    }
}

#[test]
fn binder_and_labels_cover_every_unit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "2");
    ok(&ar1dp(&["fit", "--config", "run.toml", "--out-dir", "o", "--quiet"], d));
    ok(&ar1dp(
        &["summarize", "--trace", "o/trace.json", "--what", "binder", "--what", "labels"],
        d,
    ));
    let binder = csv_lines(&d.join("o/binder.csv"));
    assert_eq!(binder[0], "time,unit,cluster,label");
    assert_eq!(binder.len() - 1, 4 * 20);
    let labels = csv_lines(&d.join("o/labels.csv"));
    assert_eq!(labels[0], "time,cluster,size,mean,sd,label");
    for t in 1..=4 {
        let total: usize = labels[1..]
            .iter()
            .filter(|l| l.starts_with(&format!("{t},")))
            .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 20);
    }
}

#[test]
fn psi_posterior_of_a_constant_trace_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "1");
    ok(&ar1dp(
        &["fit", "--config", "run.toml", "--out-dir", "o", "--quiet", "--trace-format", "csv"],
        d,
    ));
    // Overwrite the psi column of the CSV trace with 0.5.
    let path = d.join("o/trace.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut out = String::new();
    let mut psi_col = None;
    for line in text.lines() {
        if line.starts_with('#') {
            out.push_str(line);
        } else if psi_col.is_none() {
            psi_col = line.split(',').position(|h| h == "psi");
            out.push_str(line);
        } else {
            let mut fields: Vec<&str> = line.split(',').collect();
            fields[psi_col.unwrap()] = "0.5";
            out.push_str(&fields.join(","));
        }
        out.push('\n');
    }
    std::fs::write(&path, out).unwrap();
    ok(&ar1dp(&["summarize", "--trace", "o/trace.json", "--what", "psi-posterior"], d));
    let post: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("o/posterior.json")).unwrap()).unwrap();
    for key in ["mean", "median", "lower_95", "upper_95"] {
        assert_eq!(post["psi"][key], 0.5, "{key}");
    }
    assert_eq!(post["psi"]["prob_positive"], 1.0);
    assert_eq!(post["psi"]["draws"], 40);
}

#[test]
fn unknown_summary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = ar1dp(&["summarize", "--trace", "t.json", "--what", "histogram"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn binary_and_csv_traces_summarise_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "7");
    ok(&ar1dp(&["fit", "--config", "run.toml", "--out-dir", "b", "--quiet"], d));
    ok(&ar1dp(
        &["fit", "--config", "run.toml", "--out-dir", "c", "--quiet", "--trace-format", "csv"],
        d,
    ));
    for sub in ["b", "c"] {
        ok(&ar1dp(
            &["summarize", "--trace", &format!("{sub}/trace.json"), "--what", "coclust", "--what", "psi-posterior"],
            d,
        ));
    }
    for f in ["coclust_t1.csv", "coclust_t2.csv", "posterior.json"] {
        assert_eq!(
            std::fs::read(d.join("b").join(f)).unwrap(),
            std::fs::read(d.join("c").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn multiple_chains_get_separate_traces_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fit_setup(d, "2");
    ok(&ar1dp(
        &["fit", "--config", "run.toml", "--out-dir", "o", "--quiet", "--chains", "2", "--threads", "2"],
        d,
    ));
    let seeds: Vec<u64> = (0..2)
        .map(|i| {
            let meta: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(d.join(format!("o/trace_chain{i}.json"))).unwrap())
                    .unwrap();
            meta["seed"].as_u64().unwrap()
        })
        .collect();
    assert_eq!(seeds, vec![4, 5]);
    assert!(d.join("o/acceptance_chain1.csv").exists());
    assert_ne!(
        std::fs::read(d.join("o/trace_chain0.bin")).unwrap(),
        std::fs::read(d.join("o/trace_chain1.bin")).unwrap()
    );
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let run = || -> Vec<(String, Vec<u8>)> {
        let _ = std::fs::remove_dir_all(root.join("o"));
        small_fit_setup(root, "4");
        ok(&ar1dp(&["fit", "--config", "run.toml", "--out-dir", "o", "--quiet"], root));
        ok(&ar1dp(
            &[
                "summarize", "--trace", "o/trace.json", "--what", "coclust", "--what", "binder", "--what", "labels",
                "--what", "predictive", "--what", "psi-posterior",
            ],
            root,
        ));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(root.join("o"))
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.push(("data.csv".into(), std::fs::read(root.join("data.csv")).unwrap()));
        files.sort();
        files
    };
    let (fa, fb) = (run(), run());
    assert_eq!(fa.len(), fb.len());
    assert!(fa.len() >= 14);
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert_eq!(da, db, "{na} differs");
        if na.ends_with(".csv") || na.ends_with(".toml") {
            assert!(da.starts_with(b"# ar1dp "), "{na} lacks provenance");
        }
    }
}
