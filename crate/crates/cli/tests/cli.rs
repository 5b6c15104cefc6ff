use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use spinbath_cli::config::{Detuning, ScalingConfig, ScalingInstanceConfig, SweepSpec};
use spinbath_cli::run::SWEEP_COLUMNS;
use spinbath_cli::*;

fn small_n2() -> RunConfig {
    RunConfig {
        n_ions: 2,
        cutoff: 4,
        omega1_mhz: 0.707,
        rabi_mhz: 0.95,
        nbar: vec![0.3, 1.0],
        resamples: 500,
        ..RunConfig::default()
    }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn default_trace_has_the_standard_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        resamples: 200,
        ..RunConfig::default()
    };
    let m = run_trace(&cfg, dir.path()).unwrap();
    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, ["t_us", "t_over_tauS", "sigma_z"]);
    assert_eq!(rows.len(), 130);
    assert_eq!(m.dim, vec![42]);
    assert_eq!(m.generator, "chacha20");
    let raw = std::fs::read(dir.path().join("trace.csv")).unwrap();
    assert!(raw.windows(2).any(|w| w == b"\r\n"));
    verify(dir.path()).unwrap();
}

#[test]
fn trace_time_average_matches_diagonal_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        resamples: 200,
        ..RunConfig::default()
    };
    let m = run_trace(&cfg, dir.path()).unwrap();
    let mu_exp = m.summary["mu_exp"].as_f64().unwrap();
    let mu_infty = m.summary["mu_infty"].as_f64().unwrap();
    assert!((mu_exp - mu_infty).abs() <= 0.02, "{mu_exp} vs {mu_infty}");
    let (h, rows) = read_csv(&dir.path().join("trace.csv"));
    let sz = column(&h, &rows, "sigma_z");
    assert!((sz[0] + 1.0).abs() < 1e-12);
    // Oscillations persist through the window.
    let late = &sz[100..];
    let spread = late.iter().cloned().fold(f64::MIN, f64::max)
        - late.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.3, "spread {spread}");
}

#[test]
fn optional_trace_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        gamma_dec: Some(0.05),
        repetitions: Some(50),
        ..small_n2()
    };
    run_trace(&cfg, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(
        h,
        [
            "t_us",
            "t_over_tauS",
            "sigma_z",
            "sigma_z_damped",
            "sigma_z_sampled"
        ]
    );
    let t = column(&h, &rows, "t_us");
    let ideal = column(&h, &rows, "sigma_z");
    let damped = column(&h, &rows, "sigma_z_damped");
    for k in 0..t.len() {
        assert!((damped[k] - ideal[k] * (-0.05 * t[k]).exp()).abs() < 1e-14);
    }
    // r = 50 repetitions give values on the 2k/50 - 1 lattice.
    for v in column(&h, &rows, "sigma_z_sampled") {
        let k = (v + 1.0) * 25.0;
        assert!((k - k.round()).abs() < 1e-9);
    }
}

#[test]
fn trace_rejects_a_sweep() {
    let cfg = RunConfig {
        omega_z_mhz: Detuning::Sweep(SweepSpec {
            start: 0.0,
            stop: 1.0,
            count: 3,
        }),
        ..small_n2()
    };
    let err = run_trace(&cfg, tempfile::tempdir().unwrap().path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn single_point_sweep_equals_trace() {
    let cfg = RunConfig {
        omega_z_mhz: Detuning::Fixed(0.3),
        repetitions: Some(100),
        ..small_n2()
    };
    let a = tempfile::tempdir().unwrap();
    let m = run_trace(&cfg, a.path()).unwrap();
    let sweep_cfg = RunConfig {
        omega_z_mhz: Detuning::Sweep(SweepSpec {
            start: 0.3,
            stop: 0.3,
            count: 1,
        }),
        ..cfg
    };
    let b = tempfile::tempdir().unwrap();
    run_sweep(&sweep_cfg, b.path()).unwrap();
    let (h, rows) = read_csv(&b.path().join("sweep.csv"));
    assert_eq!(h, SWEEP_COLUMNS);
    assert_eq!(rows.len(), 1);
    for (col, key) in [
        ("mu_exp", "mu_exp"),
        ("delta_exp", "delta_exp"),
        ("mu_exp_err", "mu_exp_err"),
        ("delta_exp_err", "delta_exp_err"),
        ("mu_infty", "mu_infty"),
        ("mu_micro", "mu_micro"),
        ("D_eff", "d_eff"),
        ("D_eff_err", "d_eff_err"),
    ] {
        assert_eq!(
            column(&h, &rows, col)[0],
            m.summary[key].as_f64().unwrap(),
            "{col}"
        );
    }
}

#[test]
fn undriven_sweep_is_trivial() {
    let cfg = RunConfig {
        rabi_mhz: 0.0,
        omega_z_mhz: Detuning::Sweep(SweepSpec {
            start: 0.0,
            stop: 1.0,
            count: 4,
        }),
        ..small_n2()
    };
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&cfg, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert!(column(&h, &rows, "D_eff").iter().all(|&d| d == 1.0));
    assert!(column(&h, &rows, "delta_exp").iter().all(|&d| d == 0.0));
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let base = RunConfig {
        omega_z_mhz: Detuning::Sweep(SweepSpec {
            start: 0.0,
            stop: 2.0,
            count: 6,
        }),
        gamma_dec: Some(0.02),
        repetitions: Some(100),
        seed: 7,
        ..small_n2()
    };
    let files: Vec<Vec<u8>> = [1, 4]
        .iter()
        .map(|&w| {
            let dir = tempfile::tempdir().unwrap();
            let cfg = RunConfig {
                workers: Some(w),
                ..base.clone()
            };
            run_sweep(&cfg, dir.path()).unwrap();
            std::fs::read(dir.path().join("sweep.csv")).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}

#[test]
fn n3_detuning_sweep_has_one_broad_maximum() {
    let cfg = RunConfig {
        n_ions: 3,
        cutoff: 6,
        omega1_mhz: 0.707,
        rabi_mhz: 1.28,
        nbar: vec![0.6, 1.1, 0.9],
        omega_z_mhz: Detuning::Sweep(SweepSpec {
            start: 0.0,
            stop: 4.0 * 0.707,
            count: 20,
        }),
        resamples: 100,
        ..RunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&cfg, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("sweep.csv"));
    let d = column(&h, &rows, "D_eff");
    let peak = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    assert!(d[..=peak].windows(2).all(|w| w[1] >= w[0]), "{d:?}");
    assert!(d[peak..].windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert!(d[peak] > 2.0 * d[d.len() - 1]);
}

#[test]
fn tampered_output_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    run_modes(&small_n2(), dir.path()).unwrap();
    verify(dir.path()).unwrap();
    let p = dir.path().join("modes.csv");
    let mut bytes = std::fs::read(&p).unwrap();
    bytes.push(b' ');
    std::fs::write(&p, bytes).unwrap();
    assert_eq!(verify(dir.path()).unwrap_err().exit_code(), 2);
}

#[test]
fn modes_report_two_ions() {
    let dir = tempfile::tempdir().unwrap();
    run_modes(&small_n2(), dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("modes.csv"));
    assert_eq!(h, ["mode", "freq_mhz", "ratio", "eta", "b_ion1", "b_ion2"]);
    let ratio = column(&h, &rows, "ratio");
    assert!((ratio[1] - 3f64.sqrt()).abs() < 1e-10);
    let eta = column(&h, &rows, "eta");
    assert!((eta[0] - 0.54).abs() < 1e-12);
}

fn scaling_instance(omega_z_mhz: f64, cutoff: usize) -> ScalingInstanceConfig {
    ScalingInstanceConfig {
        n_ions: 2,
        cutoff,
        omega1_mhz: 0.7,
        rabi_mhz: 1.0,
        omega_z_mhz,
        eta1: 0.54,
        spin_ion: 1,
        initial_phonons: vec![vec![1, 1], vec![2, 2]],
    }
}

#[test]
fn scaling_flags_failed_instance_and_fits_the_rest() {
    let cfg = RunConfig {
        scaling: Some(ScalingConfig {
            instances: vec![
                scaling_instance(0.25, 6),
                scaling_instance(0.35, 6),
                scaling_instance(0.45, 6),
                scaling_instance(0.3, 300),
            ],
        }),
        budget_gib: 0.5,
        ..RunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let m = run_scaling_study(&cfg, dir.path()).unwrap();
    assert_eq!(m.failed_rows, 2);
    let (h, rows) = read_csv(&dir.path().join("scaling.csv"));
    assert_eq!(rows.len(), 8);
    let err = h.iter().position(|c| c == "error").unwrap();
    assert!(rows[6][err].contains("budget"));
    assert!(rows[6][h.iter().position(|c| c == "ipr").unwrap()].is_empty());
    let fit: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["points"], 6);
    let ipr = column(&h, &rows[..6], "ipr");
    let delta = column(&h, &rows[..6], "delta_infty");
    let own = spinbath::ergodicity::fit_log_log(&ipr, &delta).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - own.slope).abs() < 1e-12);
}

#[test]
fn scaling_needs_three_states() {
    let cfg = RunConfig {
        scaling: Some(ScalingConfig {
            instances: vec![ScalingInstanceConfig {
                initial_phonons: vec![vec![1, 1]],
                ..scaling_instance(0.3, 4)
            }],
        }),
        ..RunConfig::default()
    };
    let err = run_scaling_study(&cfg, tempfile::tempdir().unwrap().path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn validation_rejects_bad_configs() {
    for text in [
        r#"{"n_ions": 2}"#,
        r#"{"omega1_mhz": -1}"#,
        r#"{"omega_z_mhz": {"start": 0, "stop": 1, "count": 0}}"#,
        r#"{"resamples": 0}"#,
        r#"{"unknown_field": 1}"#,
        r#"{"spin_ion": 2}"#,
        "not json",
    ] {
        let err = RunConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
    }
    assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinbath"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");

    std::fs::write(&cfg_path, r#"{"n_ions": 3, "nbar": [1, 1]}"#).unwrap();
    let out = binary()
        .args(["trace", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let reason: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(reason["error"], "config");

    std::fs::write(
        &cfg_path,
        r#"{"n_ions": 3, "cutoff": 40, "nbar": [1, 1, 1]}"#,
    )
    .unwrap();
    let out = binary()
        .args(["trace", "--budget-gib", "1", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let run_dir = dir.path().join("modes");
    let out = binary()
        .args(["modes", "--seed", "3", "--workers", "2", "--out"])
        .arg(&run_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let m = verify(&run_dir).unwrap();
    assert_eq!(m.config.seed, 3);
    assert_eq!(m.config.workers, Some(2));
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        1usize..=4,
        1usize..30,
        0.01f64..5.0,
        0.0f64..5.0,
        prop_oneof![
            (0.0f64..3.0).prop_map(Detuning::Fixed),
            (0.0f64..3.0, 0.0f64..3.0, 1usize..50)
                .prop_map(|(start, stop, count)| Detuning::Sweep(SweepSpec { start, stop, count })),
        ],
        any::<u64>(),
        proptest::option::of(0.0f64..1.0),
        proptest::option::of(1u64..1000),
    )
        .prop_flat_map(|(n, nc, w1, rabi, wz, seed, gamma, reps)| {
            proptest::collection::vec(0.0f64..3.0, n).prop_map(move |nbar| RunConfig {
                n_ions: n,
                cutoff: nc,
                omega1_mhz: w1,
                rabi_mhz: rabi,
                omega_z_mhz: wz,
                nbar,
                seed,
                gamma_dec: gamma,
                repetitions: reps,
                ..RunConfig::default()
            })
        })
}

proptest! {
    #[test]
    fn config_round_trip(cfg in arb_config()) {
        let once = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&once, &cfg);
        let twice = RunConfig::from_json(&once.to_json()).unwrap();
        prop_assert_eq!(twice, once);
    }
}
