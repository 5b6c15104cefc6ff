//! The four commands. Each returns its manifest after writing its files.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use spinbath::ed::{
    apply_decoherence, default_time_grid, diagonal_ensemble_average, diagonalize,
    evolve_expectation, Observable, TimeTrace,
};
use spinbath::ensembles::{energy_moments, energy_shell_width, microcanonical_average};
use spinbath::ergodicity::{
    deff_with_uncertainty, desk_scaling_grid, effective_dimension, fluctuation_scaling_study, ipr,
    windowed_deff, ScalingInstance,
};
use spinbath::hilbert::{thermal_initial_state, Spin};
use spinbath::model::SystemSpec;
use spinbath::stats::{bootstrap_uncertainty, simulate_projective_sampling, Window, RNG_ALGORITHM};

use crate::config::{Detuning, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{emit, fmt_f64, RunManifest, Table, Timing, ARTIFACT_VERSION};

/// Independent seed per (point, purpose) pair.
fn derive_seed(seed: u64, point: usize, purpose: u64) -> u64 {
    let mut z = seed ^ (point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ purpose.rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Time unit of the grid and the statistics window: the spin period, or the
/// COM period when the drive is off.
pub fn time_unit(spec: &SystemSpec) -> f64 {
    if spec.rabi > 0.0 {
        spec.tau_s()
    } else {
        TAU / spec.omega1
    }
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Everything computed for one detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub omega_z_mhz: f64,
    pub mu_exp: f64,
    pub delta_exp: f64,
    pub mu_exp_err: f64,
    pub delta_exp_err: f64,
    pub mu_infty: f64,
    pub mu_micro: f64,
    pub d_eff: f64,
    pub d_eff_err: f64,
    pub ipr_mean: f64,
    /// Weight-averaged energy-shell width, MHz.
    pub w_alpha_mean_mhz: f64,
    pub trace_trunc: f64,
    pub dim: usize,
}

struct PointTraces {
    ideal: TimeTrace,
    damped: Option<TimeTrace>,
    sampled: Option<TimeTrace>,
    unit: f64,
}

fn evaluate_point(
    cfg: &RunConfig,
    omega_z_mhz: f64,
    index: usize,
) -> spinbath::Result<(PointResult, PointTraces)> {
    let spec = cfg.system(omega_z_mhz);
    let h = spec.hamiltonian(cfg.budget())?;
    let sp = diagonalize(&h)?;
    let mix = thermal_initial_state(&sp.space, &cfg.nbar, Spin::Down, cfg.weight_floor)?;

    let unit = time_unit(&spec);
    let g = cfg.time_grid;
    let times = default_time_grid(unit, g.transient_points, g.window_points, g.t_max_tau);
    let ideal = evolve_expectation(&sp, &mix, Observable::SigmaZ, &times, true)?;
    let damped = cfg
        .gamma_dec
        .map(|gamma| apply_decoherence(&ideal, gamma))
        .transpose()?;
    let sampled = cfg
        .repetitions
        .map(|r| {
            let base = damped.as_ref().unwrap_or(&ideal);
            simulate_projective_sampling(base, r, derive_seed(cfg.seed, index, 0))
        })
        .transpose()?;
    let measured = sampled.as_ref().or(damped.as_ref()).unwrap_or(&ideal);
    let window = Window {
        lo: unit,
        hi: g.t_max_tau * unit,
    };
    let stats = bootstrap_uncertainty(
        measured,
        window,
        cfg.resamples,
        derive_seed(cfg.seed, index, 1),
    )?;

    let mu_infty = diagonal_ensemble_average(&sp, &mix, Observable::SigmaZ);
    let em = energy_moments(&h, &mix)?;
    let micro = microcanonical_average(&sp, em.mean, em.std, Observable::SigmaZ)?;
    let d_eff = match cfg.window_policy {
        Some(p) => windowed_deff(&h, &mix, p.into())?.d_eff,
        None => effective_dimension(&sp, &mix)?,
    };
    let d_eff_err = deff_with_uncertainty(&sp, &mix)?.sigma;

    let total = mix.total_weight();
    let mut ipr_sum = 0.0;
    let mut w_sum = 0.0;
    for c in &mix.components {
        ipr_sum += ipr(&sp, c.index)?;
        w_sum += c.weight * energy_shell_width(&sp, c.index)?.width;
    }
    let result = PointResult {
        omega_z_mhz,
        mu_exp: stats.mu_exp,
        delta_exp: stats.delta_exp,
        mu_exp_err: stats.mu_err,
        delta_exp_err: stats.delta_err,
        mu_infty,
        mu_micro: micro.value,
        d_eff,
        d_eff_err,
        ipr_mean: ipr_sum / mix.len() as f64,
        w_alpha_mean_mhz: w_sum / total / TAU,
        trace_trunc: mix.truncated_trace,
        dim: sp.dim(),
    };
    Ok((
        result,
        PointTraces {
            ideal,
            damped,
            sampled,
            unit,
        },
    ))
}

fn manifest(cfg: &RunConfig, command: &str, workers: usize) -> RunManifest {
    RunManifest {
        command: command.into(),
        artifact_version: ARTIFACT_VERSION.into(),
        config: cfg.clone(),
        generator: RNG_ALGORITHM.into(),
        dim: Vec::new(),
        truncated_trace: Vec::new(),
        failed_rows: 0,
        timing: Timing {
            wall_seconds: 0.0,
            workers,
        },
        summary: serde_json::Value::Null,
        outputs: Vec::new(),
    }
}

fn workers_of(cfg: &RunConfig) -> usize {
    cfg.workers.unwrap_or_else(default_workers)
}

/// Single detuning: `trace.csv` plus the point summary in the manifest.
pub fn run_trace(cfg: &RunConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let omega_z = match cfg.omega_z_mhz {
        Detuning::Fixed(w) => w,
        Detuning::Sweep(_) => {
            return Err(CliError::Config(
                "trace takes a single detuning; use sweep for a detuning range".into(),
            ))
        }
    };
    let start = Instant::now();
    let workers = workers_of(cfg);
    let (point, traces) = pool(workers)?.install(|| evaluate_point(cfg, omega_z, 0))?;

    let mut header = vec!["t_us", "t_over_tauS", "sigma_z"];
    if traces.damped.is_some() {
        header.push("sigma_z_damped");
    }
    if traces.sampled.is_some() {
        header.push("sigma_z_sampled");
    }
    let mut table = Table::new("trace.csv", &header);
    for (k, &t) in traces.ideal.times.iter().enumerate() {
        let mut row = vec![
            fmt_f64(t),
            fmt_f64(t / traces.unit),
            fmt_f64(traces.ideal.values[k]),
        ];
        if let Some(d) = &traces.damped {
            row.push(fmt_f64(d.values[k]));
        }
        if let Some(s) = &traces.sampled {
            row.push(fmt_f64(s.values[k]));
        }
        table.push(row);
    }

    let mut m = manifest(cfg, "trace", workers);
    m.dim = vec![point.dim];
    m.truncated_trace = vec![point.trace_trunc];
    m.summary = serde_json::to_value(&point).expect("point serializes");
    m.timing.wall_seconds = start.elapsed().as_secs_f64();
    emit(out, m, &[table], &[])
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "omega_z",
    "mu_exp",
    "delta_exp",
    "mu_exp_err",
    "delta_exp_err",
    "mu_infty",
    "mu_micro",
    "D_eff",
    "D_eff_err",
    "ipr_mean",
    "W_alpha_mean",
    "trace_trunc",
    "error",
];

/// One row per detuning in sweep order. A failed point keeps its detuning,
/// leaves the numbers empty and records the reason.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let workers = workers_of(cfg);
    let detunings = cfg.detunings_mhz();
    let results: Vec<spinbath::Result<PointResult>> = pool(workers)?.install(|| {
        detunings
            .par_iter()
            .enumerate()
            .map(|(k, &w)| evaluate_point(cfg, w, k).map(|(p, _)| p))
            .collect()
    });

    let mut table = Table::new("sweep.csv", &SWEEP_COLUMNS);
    let mut m = manifest(cfg, "sweep", workers);
    for (w, r) in detunings.iter().zip(&results) {
        match r {
            Ok(p) => {
                let mut row: Vec<String> = [
                    p.omega_z_mhz,
                    p.mu_exp,
                    p.delta_exp,
                    p.mu_exp_err,
                    p.delta_exp_err,
                    p.mu_infty,
                    p.mu_micro,
                    p.d_eff,
                    p.d_eff_err,
                    p.ipr_mean,
                    p.w_alpha_mean_mhz,
                    p.trace_trunc,
                ]
                .iter()
                .map(|&x| fmt_f64(x))
                .collect();
                row.push(String::new());
                table.push(row);
                m.dim.push(p.dim);
                m.truncated_trace.push(p.trace_trunc);
            }
            Err(e) => {
                let mut row = vec![fmt_f64(*w)];
                row.extend(vec![String::new(); SWEEP_COLUMNS.len() - 2]);
                row.push(e.to_string());
                table.push(row);
                m.failed_rows += 1;
            }
        }
    }
    m.timing.wall_seconds = start.elapsed().as_secs_f64();
    emit(out, m, &[table], &[])
}

fn scaling_grid(cfg: &RunConfig) -> Vec<ScalingInstance> {
    match &cfg.scaling {
        None => desk_scaling_grid(),
        Some(s) => s
            .instances
            .iter()
            .map(|i| ScalingInstance {
                system: i.system(),
                initial_phonons: i.initial_phonons.clone(),
            })
            .collect(),
    }
}

/// `scaling.csv` with one row per pure initial state and `fit.json` with the
/// log-log fit of delta_infty against IPR.
pub fn run_scaling_study(cfg: &RunConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let grid = scaling_grid(cfg);
    let states: usize = grid.iter().map(|i| i.initial_phonons.len()).sum();
    if states < 3 {
        return Err(CliError::Config(format!(
            "a scaling study needs at least 3 initial states, got {states}"
        )));
    }
    let start = Instant::now();
    let workers = workers_of(cfg);
    let study = pool(workers)?.install(|| fluctuation_scaling_study(&grid, cfg.budget()))?;

    let mut table = Table::new(
        "scaling.csv",
        &[
            "instance",
            "n_ions",
            "cutoff",
            "rabi_mhz",
            "omega_z_mhz",
            "phonons",
            "ipr",
            "D_eff",
            "delta_infty",
            "error",
        ],
    );
    let mut m = manifest(cfg, "scaling", workers);
    let num = |x: f64| {
        if x.is_nan() {
            String::new()
        } else {
            fmt_f64(x)
        }
    };
    for r in &study.rows {
        let phonons: Vec<String> = r.phonons.iter().map(|n| n.to_string()).collect();
        // A pure initial state has D_eff equal to its IPR.
        table.push(vec![
            r.instance.to_string(),
            r.n_ions.to_string(),
            r.cutoff.to_string(),
            fmt_f64(r.rabi / TAU),
            fmt_f64(r.omega_z / TAU),
            phonons.join(" "),
            num(r.ipr),
            num(r.ipr),
            num(r.delta_infty),
            r.error.clone().unwrap_or_default(),
        ]);
        if r.error.is_some() {
            m.failed_rows += 1;
        }
    }
    let fit = serde_json::to_string_pretty(&study.fit).expect("fit serializes");
    m.summary = serde_json::to_value(study.fit).expect("fit serializes");
    m.timing.wall_seconds = start.elapsed().as_secs_f64();
    emit(out, m, &[table], &[("fit.json".into(), fit.into_bytes())])
}

/// Normal modes of the configured chain: frequencies, ratios, Lamb-Dicke
/// parameters and participation vectors.
pub fn run_modes(cfg: &RunConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let chain = cfg.system(0.0).chain()?;
    let mut header: Vec<String> = ["mode", "freq_mhz", "ratio", "eta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=chain.n_ions).map(|i| format!("b_ion{i}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new("modes.csv", &header_refs);
    let ratios = chain.frequency_ratios();
    for (j, vector) in chain.mode_vectors.iter().enumerate() {
        let mut row = vec![
            (j + 1).to_string(),
            fmt_f64(chain.mode_freqs[j] / TAU),
            fmt_f64(ratios[j]),
            fmt_f64(chain.etas[j]),
        ];
        row.extend(vector.iter().map(|&b| fmt_f64(b)));
        table.push(row);
    }
    let mut m = manifest(cfg, "modes", 1);
    m.summary = serde_json::json!({ "positions": chain.positions });
    m.timing.wall_seconds = start.elapsed().as_secs_f64();
    emit(out, m, &[table], &[])
}
