//! Participation measures: IPR, the weighted effective dimension, the
//! band-window approximation for large spaces, truncation extrapolation and
//! the fluctuation scaling study.

use faer::Mat;
use serde::Serialize;

use crate::ed::{
    diagonalize, diagonalize_matrix, infinite_time_fluctuations, Observable, Spectrum,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    energy_sorted_basis, BasisState, Component, Hamiltonian, HilbertSpace, InitialMixture,
    MemoryBudget, Spin,
};
use crate::model::SystemSpec;
use crate::numeric::{compensated_sum, map_indexed, CompensatedSum};

/// `1 / sum_b |c_b(a)|^4` for basis state `alpha`.
pub fn ipr(spectrum: &Spectrum, alpha: usize) -> Result<f64> {
    if alpha >= spectrum.dim() {
        return Err(Error::OutOfRange {
            index: alpha,
            value: spectrum.dim() as f64,
        });
    }
    let v = &spectrum.vectors;
    let s: CompensatedSum = (0..spectrum.dim()).map(|b| v[(alpha, b)].powi(4)).collect();
    Ok(1.0 / s.value())
}

fn check_mixture(mixture: &InitialMixture) -> Result<f64> {
    if mixture.is_empty() {
        return Err(Error::InvalidParameter("initial mixture is empty".into()));
    }
    let total = mixture.total_weight();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "initial mixture has no positive weight".into(),
        ));
    }
    Ok(total)
}

/// `sum_a w_a IPR(a) / sum_a w_a`.
pub fn effective_dimension(spectrum: &Spectrum, mixture: &InitialMixture) -> Result<f64> {
    let total = check_mixture(mixture)?;
    let mut acc = CompensatedSum::new();
    for c in &mixture.components {
        acc.add(c.weight * ipr(spectrum, c.index)?);
    }
    Ok(acc.value() / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPolicy {
    pub initial: usize,
    pub step: usize,
    /// Relative change of D_eff below which the window stops growing.
    pub tolerance: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            initial: 1000,
            step: 1000,
            tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationEstimate {
    pub d1: f64,
    pub d2: f64,
    pub mean: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    /// `(basis index, IPR)` per mixture component.
    pub component_ipr: Vec<(usize, f64)>,
    pub d_eff: f64,
    /// Window size used for the final value.
    pub n_states: usize,
    /// Relative change of D_eff over the last window step.
    pub relative_change: f64,
    /// The window covered the whole space, so `d_eff` is exact.
    pub full_window: bool,
    /// `(n_states, D_eff)` for every window tried.
    pub history: Vec<(usize, f64)>,
    pub truncation: Option<TruncationEstimate>,
}

/// Exact report from a full eigensystem.
pub fn ergodicity_report(
    spectrum: &Spectrum,
    mixture: &InitialMixture,
) -> Result<ErgodicityReport> {
    let d_eff = effective_dimension(spectrum, mixture)?;
    let component_ipr = mixture
        .components
        .iter()
        .map(|c| Ok((c.index, ipr(spectrum, c.index)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErgodicityReport {
        component_ipr,
        d_eff,
        n_states: spectrum.dim(),
        relative_change: 0.0,
        full_window: true,
        history: vec![(spectrum.dim(), d_eff)],
        truncation: None,
    })
}

/// Start of a window of `n` states centred on `rank`, shifted to stay inside
/// `0..dim`.
fn window_start(rank: usize, n: usize, dim: usize) -> usize {
    rank.saturating_sub(n / 2).min(dim - n)
}

/// IPR of each component from the Hamiltonian restricted to a window of `n`
/// energy-sorted states around it.
fn windowed_iprs(sorted: &Mat<f64>, ranks: &[usize], n: usize) -> Result<Vec<f64>> {
    let dim = sorted.nrows();
    let starts: Vec<usize> = ranks.iter().map(|&r| window_start(r, n, dim)).collect();
    let mut distinct = starts.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let solved = map_indexed(distinct.len(), |k| {
        let lo = distinct[k];
        let sub = sorted.as_ref().submatrix(lo, lo, n, n);
        diagonalize_matrix(sub).map(|e| e.vectors)
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ranks
        .iter()
        .zip(&starts)
        .map(|(&r, lo)| {
            let v = &solved[distinct.binary_search(lo).unwrap()];
            let row = r - lo;
            let s: CompensatedSum = (0..n).map(|b| v[(row, b)].powi(4)).collect();
            1.0 / s.value()
        })
        .collect())
}

/// D_eff from diagonalizing, for every component, only the window of
/// `n_states` uncoupled states nearest in energy. The window grows by
/// `policy.step` until D_eff changes by less than `policy.tolerance`
/// (relative), or until it covers the whole space.
pub fn windowed_deff(
    h: &Hamiltonian,
    mixture: &InitialMixture,
    policy: WindowPolicy,
) -> Result<ErgodicityReport> {
    let total = check_mixture(mixture)?;
    if policy.initial < 2 || policy.step == 0 {
        return Err(Error::InvalidParameter(
            "window must start at >= 2 states and grow by >= 1".into(),
        ));
    }
    if !(policy.tolerance > 0.0) {
        return Err(Error::InvalidParameter(
            "window tolerance must be positive".into(),
        ));
    }
    let dim = h.dim();
    let order = energy_sorted_basis(&h.space, h.params.omega_z, &h.params.mode_freqs);
    let mut rank_of = vec![0usize; dim];
    for (r, &i) in order.iter().enumerate() {
        rank_of[i] = r;
    }
    let sorted = h.permuted(&order);
    let ranks: Vec<usize> = mixture
        .components
        .iter()
        .map(|c| rank_of[c.index])
        .collect();

    let aggregate = |iprs: &[f64]| {
        let s: CompensatedSum = mixture
            .components
            .iter()
            .zip(iprs)
            .map(|(c, x)| c.weight * x)
            .collect();
        s.value() / total
    };

    let mut history = Vec::new();
    let mut n = policy.initial.min(dim);
    let mut prev: Option<f64> = None;
    let change = |d: f64, prev: Option<f64>| prev.map_or(0.0, |p: f64| ((d - p) / p).abs());
    loop {
        if n == dim {
            // Same path as the exact computation, so the two agree bit for bit.
            let mut report = ergodicity_report(&diagonalize(h)?, mixture)?;
            report.relative_change = change(report.d_eff, prev);
            history.push((n, report.d_eff));
            report.history = history;
            return Ok(report);
        }
        let iprs = windowed_iprs(&sorted, &ranks, n)?;
        let d = aggregate(&iprs);
        history.push((n, d));
        if prev.is_some() && change(d, prev) < policy.tolerance {
            return Ok(ErgodicityReport {
                component_ipr: mixture
                    .components
                    .iter()
                    .map(|c| c.index)
                    .zip(iprs)
                    .collect(),
                d_eff: d,
                n_states: n,
                relative_change: change(d, prev),
                full_window: false,
                history,
                truncation: None,
            });
        }
        prev = Some(d);
        n = (n + policy.step).min(dim);
    }
}

/// The mixture restricted to components with at most `n_trunc` phonons in
/// every mode.
pub fn truncate_mixture(
    space: &HilbertSpace,
    mixture: &InitialMixture,
    n_trunc: usize,
) -> InitialMixture {
    let components: Vec<Component> = mixture
        .components
        .iter()
        .filter(|c| {
            space
                .phonons_of(c.index % space.mode_dim)
                .iter()
                .all(|&n| n <= n_trunc)
        })
        .copied()
        .collect();
    InitialMixture {
        truncated_trace: compensated_sum(components.iter().map(|c| c.weight)),
        components,
        ..mixture.clone()
    }
}

/// `(n_trunc, D_eff, truncated trace)` with the initial state cut at each
/// `n_trunc` while the spectrum keeps its full cutoff.
pub fn truncation_series(
    spectrum: &Spectrum,
    mixture: &InitialMixture,
    n_truncs: impl IntoIterator<Item = usize>,
) -> Result<Vec<(usize, f64, f64)>> {
    n_truncs
        .into_iter()
        .map(|n| {
            let m = truncate_mixture(&spectrum.space, mixture, n);
            Ok((n, effective_dimension(spectrum, &m)?, m.truncated_trace))
        })
        .collect()
}

/// D_eff at the full cutoff with its truncation bracket from the last two
/// initial-state truncations.
pub fn deff_with_uncertainty(
    spectrum: &Spectrum,
    mixture: &InitialMixture,
) -> Result<TruncationEstimate> {
    let nc = spectrum.space.cutoff;
    let series = truncation_series(spectrum, mixture, [nc - 1, nc])?;
    truncation_uncertainty(&series.iter().map(|&(n, d, _)| (n, d)).collect::<Vec<_>>())
}

/// Brackets the cutoff-converged D_eff from a series `(cutoff, D_eff)`:
/// `d1` is the last value and `d2` its linear extrapolation one cutoff step
/// further.
pub fn truncation_uncertainty(series: &[(usize, f64)]) -> Result<TruncationEstimate> {
    if series.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: series.len(),
        });
    }
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidParameter(
            "cutoffs must be strictly ascending".into(),
        ));
    }
    let (n0, a) = series[series.len() - 2];
    let (n1, d1) = series[series.len() - 1];
    let slope = (d1 - a) / (n1 - n0) as f64;
    let d2 = d1 + slope;
    Ok(TruncationEstimate {
        d1,
        d2,
        mean: 0.5 * (d1 + d2),
        sigma: (d1 - d2).abs() / 4.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    pub intercept_err: f64,
    pub points: usize,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} abscissae for {} ordinates",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::SingularFit(format!("{} point(s)", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::SingularFit(
            "log-log fit needs positive values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 1e-24 * n) {
        return Err(Error::SingularFit("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_err, intercept_err) = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        let s2 = rss / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(PowerLawFit {
        slope,
        slope_err,
        intercept,
        intercept_err,
        points: lx.len(),
    })
}

/// One full-ED instance and the pure initial states evaluated on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingInstance {
    pub system: SystemSpec,
    /// Phonon numbers of the spin-down initial product states.
    pub initial_phonons: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub instance: usize,
    pub n_ions: usize,
    pub cutoff: usize,
    pub rabi: f64,
    pub omega_z: f64,
    pub phonons: Vec<usize>,
    pub ipr: f64,
    pub delta_infty: f64,
    /// Set when the instance failed; `ipr` and `delta_infty` are NaN then.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    pub fit: PowerLawFit,
}

/// The desk-scale grid: N = 1, 2, 3 at cutoffs 20, 10, 6 and Rabi
/// frequencies 0.7, 1.0, 1.3 MHz, detunings from Rabi/4 to Rabi/2 in steps
/// of Rabi/20, and initial states with one and two phonons in every mode.
pub fn desk_scaling_grid() -> Vec<ScalingInstance> {
    use crate::model::mhz;
    let mut out = Vec::new();
    for (n, cutoff, rabi_mhz) in [(1, 20, 0.7), (2, 10, 1.0), (3, 6, 1.3)] {
        let rabi = mhz(rabi_mhz);
        for k in 5..=10 {
            out.push(ScalingInstance {
                system: SystemSpec {
                    n_ions: n,
                    cutoff,
                    omega1: mhz(0.7),
                    eta1: 0.54,
                    rabi,
                    omega_z: rabi * k as f64 / 20.0,
                    spin_ion: 1,
                },
                initial_phonons: vec![vec![1; n], vec![2; n]],
            });
        }
    }
    out
}

fn scaling_rows(id: usize, inst: &ScalingInstance, budget: MemoryBudget) -> Vec<ScalingRow> {
    let row = |phonons: &Vec<usize>, value: Result<(f64, f64)>| {
        let (ipr, delta, error) = match value {
            Ok((i, d)) => (i, d, None),
            Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
        };
        ScalingRow {
            instance: id,
            n_ions: inst.system.n_ions,
            cutoff: inst.system.cutoff,
            rabi: inst.system.rabi,
            omega_z: inst.system.omega_z,
            phonons: phonons.clone(),
            ipr,
            delta_infty: delta,
            error,
        }
    };
    let spectrum = inst
        .system
        .hamiltonian(budget)
        .and_then(|h| diagonalize(&h));
    inst.initial_phonons
        .iter()
        .map(|ph| {
            let value = spectrum.clone().and_then(|sp| {
                if ph.len() != sp.space.n_modes || ph.iter().any(|&n| n > sp.space.cutoff) {
                    return Err(Error::InvalidParameter(format!(
                        "initial phonons {ph:?} outside the truncated space"
                    )));
                }
                let idx = sp.space.encode(&BasisState {
                    spin: Spin::Down,
                    phonons: ph.clone(),
                });
                let mix = InitialMixture::pure(&sp.space, idx);
                let f = infinite_time_fluctuations(
                    &sp,
                    &mix,
                    Observable::SigmaZ,
                    crate::ed::DEFAULT_GAP_TOLERANCE,
                )?;
                Ok((ipr(&sp, idx)?, f.delta))
            });
            row(ph, value)
        })
        .collect()
}

/// `delta_infty` against IPR for pure initial states over a grid of
/// instances, with the log-log slope fitted over the rows that succeeded.
pub fn fluctuation_scaling_study(
    grid: &[ScalingInstance],
    budget: MemoryBudget,
) -> Result<ScalingStudy> {
    let rows: Vec<ScalingRow> = map_indexed(grid.len(), |i| scaling_rows(i, &grid[i], budget))
        .into_iter()
        .flatten()
        .collect();
    let ok: Vec<&ScalingRow> = rows
        .iter()
        .filter(|r| r.error.is_none() && r.delta_infty > 0.0)
        .collect();
    let x: Vec<f64> = ok.iter().map(|r| r.ipr).collect();
    let y: Vec<f64> = ok.iter().map(|r| r.delta_infty).collect();
    let fit = fit_log_log(&x, &y)?;
    Ok(ScalingStudy { rows, fit })
}
