//! End-to-end checks of the file pipelines and the `squeezer` binary:
//! state files, figure outputs, and process exit codes.

use squeezer_core::cli::{self, Figure, RunConfig};
use std::path::Path;
use std::process::Command;

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fig3_pipeline_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let dir = cli::cmd_reproduce(&cfg, Figure::Fig3, tmp.path()).unwrap();
    let summary = read_json(&dir.join("summary.json"));
    // Phase dependence collapses through the gate...
    let spread_in = summary["input_variance_spread"].as_f64().unwrap();
    let spread_out = summary["output_variance_spread"].as_f64().unwrap();
    assert!(spread_out < 0.05, "output spread {spread_out}");
    assert!(spread_in > 0.5, "input spread {spread_in} suspiciously small");
    // ...while keeping the Wigner function negative,
    assert!(summary["output_wigner_min"].as_f64().unwrap() < -0.05);
    // and the single-photon character sharpens (A drops).
    let a_in = summary["input_anticorrelation_a"].as_f64().unwrap();
    let a_out = summary["output_anticorrelation_a"].as_f64().unwrap();
    assert!(a_out < a_in, "A did not decrease: {a_in} -> {a_out}");
    // The ideal-ancilla reference recovers the bare photon.
    assert!(summary["ideal_ancilla_photon_fidelity"].as_f64().unwrap() > 0.99);
    // Emitted states reload as valid density matrices.
    let rho = cli::read_state(&dir.join("state_out.json")).unwrap();
    rho.validate().unwrap();
    let manifest = read_json(&dir.join("manifest.json"));
    assert!(manifest["files"].as_array().unwrap().len() >= 10);
}

#[test]
fn metric_figure_pipelines() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.cutoff = 40;
    let dir = cli::cmd_reproduce(&cfg, Figure::SupplFig1, tmp.path()).unwrap();
    let bounds = std::fs::read_to_string(dir.join("bounds.csv")).unwrap();
    let mut coherent_cols = Vec::new();
    let mut gaussian_cols = Vec::new();
    for line in bounds.lines().skip(1) {
        let mut parts = line.split(',');
        let _beta: f64 = parts.next().unwrap().parse().unwrap();
        coherent_cols.push(parts.next().unwrap().parse::<f64>().unwrap());
        gaussian_cols.push(parts.next().unwrap().parse::<f64>().unwrap());
    }
    assert!(!coherent_cols.is_empty());
    for (c, g) in coherent_cols.iter().zip(&gaussian_cols) {
        assert!(g <= &(c + 1e-9), "gaussian bound above coherent bound");
    }
    // Curves exist for the input photon and each squeezing level.
    for label in ["photon", "squeezed_g026", "squeezed_g037", "squeezed_g067"] {
        assert!(dir.join(format!("curve_{label}.csv")).exists());
    }

    let dir2 = cli::cmd_reproduce(&cfg, Figure::SupplFig2, tmp.path()).unwrap();
    let summary = read_json(&dir2.join("summary.json"));
    let beta0 = summary["beta0"].as_array().unwrap();
    assert_eq!(beta0.len(), 4);
    // The squeezed states' extremal β₀ sit above the bare photon's.
    let photon_b0 = beta0[0]["beta0_for_d"].as_f64().unwrap();
    let strongest_b0 = beta0[3]["beta0_for_d"].as_f64().unwrap();
    assert!(strongest_b0 > photon_b0);
}

#[test]
fn binary_round_trip_and_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_squeezer");
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "cutoff": 30,
            "input_state": {"type": "fock", "n": 1},
            "gate": {"gamma": 0.26},
            "tomography": {"phases": 8, "samples_per_phase": 1500, "seed": 3}
        }"#,
    )
    .unwrap();

    let run = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .output()
            .expect("binary should launch")
    };

    let out_s = out.to_str().unwrap();
    let cfg_s = config.to_str().unwrap();
    let status = run(&["--config", cfg_s, "--out", out_s, "prepare"]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let state = out.join("state.json");
    assert!(state.exists());
    let state_s = state.to_str().unwrap();

    for args in [
        vec!["--config", cfg_s, "--out", out_s, "apply", state_s],
        vec!["--config", cfg_s, "--out", out_s, "wigner", state_s, "--points", "41"],
        vec!["--config", cfg_s, "--out", out_s, "marginals", state_s, "--phases", "6"],
        vec![
            "--config", cfg_s, "--out", out_s, "metrics", state_s,
            "--beta-points", "12", "--anticorrelation", "1.0",
        ],
        vec!["--config", cfg_s, "--out", out_s, "tomo", state_s],
    ] {
        let result = run(&args);
        assert!(
            result.status.success(),
            "{:?}: {}",
            args,
            String::from_utf8_lossy(&result.stderr)
        );
    }
    for name in [
        "state_out.json",
        "wigner.csv",
        "wigner_summary.json",
        "marginals.csv",
        "marginals_variances.csv",
        "metric_curve.csv",
        "metrics_report.json",
        "records.csv",
        "reconstruction.json",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let recon = read_json(&out.join("reconstruction.json"));
    assert!(recon["fidelity_with_input"].as_f64().unwrap() > 0.98);
    assert_eq!(recon["seed"].as_u64().unwrap(), 3);

    // Validation failures exit with code 2.
    let bad = run(&["--out", out_s, "reproduce", "fig9"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = run(&["--out", out_s, "wigner", "/nonexistent/state.json"]);
    assert_eq!(missing.status.code(), Some(2));
    // A grid that cannot cover the state is also a validation failure.
    let cramped = run(&["--out", out_s, "wigner", state_s, "--range", "0.5"]);
    assert_eq!(cramped.status.code(), Some(2));
}
