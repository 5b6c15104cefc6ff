//! wasm-bindgen bindings for the static demo page. Every function takes MHz
//! and returns a JSON document.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use spinbath::ed::{diagonalize, evolve_expectation, uniform_grid, Observable};
use spinbath::ergodicity::effective_dimension;
use spinbath::hilbert::{thermal_initial_state, MemoryBudget, Spin};
use spinbath::model::{mhz, SystemSpec};
use wasm_bindgen::prelude::*;

/// Largest Hilbert space the page will diagonalize.
const MAX_DIM: usize = 1200;

fn spec(
    n_ions: usize,
    cutoff: usize,
    omega1_mhz: f64,
    rabi_mhz: f64,
    omega_z_mhz: f64,
    eta1: f64,
) -> Result<SystemSpec, String> {
    let dim = 2
        * (cutoff + 1)
            .checked_pow(n_ions as u32)
            .unwrap_or(usize::MAX);
    if dim > MAX_DIM {
        return Err(format!("dimension {dim} exceeds the demo limit {MAX_DIM}"));
    }
    if !(rabi_mhz > 0.0) {
        return Err("Rabi frequency must be positive".into());
    }
    Ok(SystemSpec {
        n_ions,
        cutoff,
        omega1: mhz(omega1_mhz),
        eta1,
        rabi: mhz(rabi_mhz),
        omega_z: mhz(omega_z_mhz),
        spin_ion: 1,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn js(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct Trace {
    t_over_tau: Vec<f64>,
    sigma_z: Vec<f64>,
    mu_infty: f64,
    d_eff: f64,
    dim: usize,
}

fn trace_impl(
    s: &SystemSpec,
    nbar: &[f64],
    t_max_tau: f64,
    points: usize,
) -> Result<Trace, String> {
    let sp = diagonalize(
        &s.hamiltonian(MemoryBudget::default())
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mix = thermal_initial_state(&sp.space, nbar, Spin::Down, 0.0).map_err(|e| e.to_string())?;
    let tau = s.tau_s();
    let times = uniform_grid(t_max_tau * tau, points.max(2));
    let tr = evolve_expectation(&sp, &mix, Observable::SigmaZ, &times, true)
        .map_err(|e| e.to_string())?;
    Ok(Trace {
        t_over_tau: tr.times_over_tau(),
        sigma_z: tr.values,
        mu_infty: spinbath::ed::diagonal_ensemble_average(&sp, &mix, Observable::SigmaZ),
        d_eff: effective_dimension(&sp, &mix).map_err(|e| e.to_string())?,
        dim: sp.dim(),
    })
}

/// `<sigma_z(t)>` on a uniform grid up to `t_max_tau` spin periods.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn time_trace(
    n_ions: usize,
    cutoff: usize,
    omega1_mhz: f64,
    rabi_mhz: f64,
    omega_z_mhz: f64,
    eta1: f64,
    nbar: Vec<f64>,
    t_max_tau: f64,
    points: usize,
) -> Result<String, JsError> {
    let s = spec(n_ions, cutoff, omega1_mhz, rabi_mhz, omega_z_mhz, eta1).map_err(js)?;
    trace_impl(&s, &nbar, t_max_tau, points)
        .map(|t| to_json(&t))
        .map_err(js)
}

#[derive(Serialize)]
struct DeffCurve {
    omega_z_mhz: Vec<f64>,
    d_eff: Vec<f64>,
}

/// D_eff of the thermal initial state against detuning.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn deff_curve(
    n_ions: usize,
    cutoff: usize,
    omega1_mhz: f64,
    rabi_mhz: f64,
    eta1: f64,
    nbar: Vec<f64>,
    omega_z_max_mhz: f64,
    count: usize,
) -> Result<String, JsError> {
    let base = spec(n_ions, cutoff, omega1_mhz, rabi_mhz, 0.0, eta1).map_err(js)?;
    let count = count.max(2);
    let mut curve = DeffCurve {
        omega_z_mhz: Vec::with_capacity(count),
        d_eff: Vec::with_capacity(count),
    };
    for k in 0..count {
        let w = omega_z_max_mhz * k as f64 / (count - 1) as f64;
        let s = base.with_omega_z(mhz(w));
        let sp = diagonalize(&s.hamiltonian(MemoryBudget::default()).map_err(js)?).map_err(js)?;
        let mix = thermal_initial_state(&sp.space, &nbar, Spin::Down, 0.0).map_err(js)?;
        curve.omega_z_mhz.push(w);
        curve
            .d_eff
            .push(effective_dimension(&sp, &mix).map_err(js)?);
    }
    Ok(to_json(&curve))
}

#[derive(Serialize)]
struct Modes {
    freqs_mhz: Vec<f64>,
    ratios: Vec<f64>,
    etas: Vec<f64>,
    positions: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

/// Axial normal modes of an `n_ions` chain with the spin on the first ion.
#[wasm_bindgen]
pub fn normal_modes(n_ions: usize, omega1_mhz: f64, eta1: f64) -> Result<String, JsError> {
    let chain = spinbath::ionchain::IonChain::new(n_ions, mhz(omega1_mhz), eta1, 1).map_err(js)?;
    Ok(to_json(&Modes {
        freqs_mhz: chain
            .mode_freqs
            .iter()
            .map(|w| w / std::f64::consts::TAU)
            .collect(),
        ratios: chain.frequency_ratios(),
        etas: chain.etas.clone(),
        positions: chain.positions.clone(),
        vectors: chain.mode_vectors.clone(),
    }))
}
