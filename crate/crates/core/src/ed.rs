//! Full diagonalization, eigenbasis time evolution, and diagonal-ensemble
//! averages and fluctuations.
//!
//! For an initial mixture `rho` and observable `O` the dynamics reduce to the
//! coherence matrix `K_12 = rho_12 O_21` in the energy eigenbasis:
//!
//! ```text
//! <O(t)> = sum_12 K_12 exp(-i (E_1 - E_2) t)
//! ```
//!
//! which is contracted once and then evaluated on any number of times.

use faer::{Mat, MatRef, Side};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Hamiltonian, HilbertSpace, InitialMixture, ModelParams};
use crate::numeric::{compensated_sum, map_indexed};

/// Default tolerance for treating two energy gaps as equal (rad/us).
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-9;

/// Time points evaluated per batched matrix product.
const TIME_BATCH: usize = 256;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub energies: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn diagonalize_matrix(h: MatRef<'_, f64>) -> Result<Eigensystem> {
    let dim = h.nrows();
    if h.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.has_nan() || !h.is_all_finite() {
        return Err(Error::Eigensolver {
            dim,
            reason: "matrix has non-finite entries".into(),
        });
    }
    if (0..dim).all(|j| (0..dim).all(|i| i == j || h[(i, j)] == 0.0)) {
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| h[(a, a)].total_cmp(&h[(b, b)]).then(a.cmp(&b)));
        return Ok(Eigensystem {
            energies: order.iter().map(|&i| h[(i, i)]).collect(),
            vectors: Mat::from_fn(dim, dim, |i, b| if order[b] == i { 1.0 } else { 0.0 }),
        });
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver {
            dim,
            reason: format!("{e:?} (Frobenius norm {:e})", h.norm_l2()),
        })?;
    let s = evd.S();
    Ok(Eigensystem {
        energies: (0..dim).map(|i| s[i]).collect(),
        vectors: evd.U().to_owned(),
    })
}

/// Full eigensystem of a model Hamiltonian plus its residual diagnostic.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub space: HilbertSpace,
    pub params: ModelParams,
    pub energies: Vec<f64>,
    /// Column `b` is `|psi_b>` in the product basis (quadrature-phase gauge).
    pub vectors: Mat<f64>,
    /// `max_b ||H v_b - E_b v_b|| / ||H||_2`.
    pub residual: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `c_b(a) = <psi_b|phi_a>` up to the gauge phase of `|phi_a>`.
    pub fn overlap(&self, beta: usize, alpha: usize) -> f64 {
        self.vectors[(alpha, beta)]
    }

    /// `|c_b(a)|^2` for all `b`.
    pub fn populations(&self, alpha: usize) -> Vec<f64> {
        let v = &self.vectors;
        (0..self.dim())
            .map(|b| v[(alpha, b)] * v[(alpha, b)])
            .collect()
    }

    /// `V^T diag(d) V` for an operator diagonal in the product basis.
    pub fn diagonal_operator_in_eigenbasis(&self, diag: &[f64]) -> Mat<f64> {
        let v = &self.vectors;
        let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| diag[i] * v[(i, j)]);
        v.transpose() * &scaled
    }

    /// `V^T A V`.
    pub fn operator_in_eigenbasis(&self, op: MatRef<'_, f64>) -> Mat<f64> {
        let v = &self.vectors;
        v.transpose() * (op * v)
    }

    /// Initial density matrix `V^T diag(w) V` in the eigenbasis (unnormalized).
    pub fn density_in_eigenbasis(&self, mixture: &InitialMixture) -> Mat<f64> {
        let v = &self.vectors;
        let rows = Mat::from_fn(mixture.len(), self.dim(), |k, b| {
            v[(mixture.components[k].index, b)]
        });
        let weighted = Mat::from_fn(mixture.len(), self.dim(), |k, b| {
            mixture.components[k].weight * rows[(k, b)]
        });
        rows.transpose() * &weighted
    }

    /// Smallest spacing between consecutive energies.
    pub fn min_level_spacing(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn diagonalize(h: &Hamiltonian) -> Result<Spectrum> {
    let eig = diagonalize_matrix(h.matrix.as_ref())?;
    let dim = h.dim();
    let hv = &h.matrix * &eig.vectors;
    let norm = eig
        .energies
        .iter()
        .fold(0.0_f64, |m, e| m.max(e.abs()))
        .max(f64::MIN_POSITIVE);
    let residual = (0..dim)
        .map(|b| {
            let e = eig.energies[b];
            (0..dim)
                .map(|i| {
                    let r = hv[(i, b)] - e * eig.vectors[(i, b)];
                    r * r
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0_f64, f64::max)
        / norm;
    if !(residual <= 1e-8) {
        return Err(Error::Eigensolver {
            dim,
            reason: format!("eigenpair residual {residual:e} exceeds 1e-8"),
        });
    }
    Ok(Spectrum {
        space: h.space.clone(),
        params: h.params.clone(),
        energies: eig.energies,
        vectors: eig.vectors,
        residual,
    })
}

/// Spin observables, acting as the identity on the phonons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observable {
    SigmaX,
    SigmaY,
    SigmaZ,
    Identity,
}

/// An observable in the eigenbasis, `O = re + i im`.
#[derive(Debug, Clone)]
pub struct EigenOperator {
    pub re: Mat<f64>,
    pub im: Option<Mat<f64>>,
}

impl EigenOperator {
    pub fn new(spectrum: &Spectrum, observable: Observable) -> Self {
        let space = &spectrum.space;
        let m = space.mode_dim;
        let v = &spectrum.vectors;
        let dim = spectrum.dim();
        match observable {
            Observable::SigmaZ => Self {
                re: spectrum.diagonal_operator_in_eigenbasis(&space.sigma_z_diagonal()),
                im: None,
            },
            Observable::Identity => Self {
                re: Mat::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 }),
                im: None,
            },
            Observable::SigmaX => {
                // sigma_x swaps the spin halves of a state vector.
                let ov = Mat::from_fn(dim, dim, |i, j| v[((i + m) % dim, j)]);
                Self {
                    re: v.transpose() * &ov,
                    im: None,
                }
            }
            Observable::SigmaY => {
                // <down|sy|up> = i, <up|sy|down> = -i.
                let av = Mat::from_fn(
                    dim,
                    dim,
                    |i, j| {
                        if i < m {
                            v[(i + m, j)]
                        } else {
                            -v[(i - m, j)]
                        }
                    },
                );
                Self {
                    re: Mat::zeros(dim, dim),
                    im: Some(v.transpose() * &av),
                }
            }
        }
    }
}

/// `K_12 = rho_12 O_21` for one mixture and observable, ready for time
/// evaluation. Optionally normalized by the mixture's truncated trace.
#[derive(Debug, Clone)]
pub struct Coherences {
    /// Energies shifted by their mean to keep phases small.
    shifted: Vec<f64>,
    energies: Vec<f64>,
    /// Off-diagonal part of `Re K`; the diagonal is kept in `stationary`.
    kr: Mat<f64>,
    ki: Option<Mat<f64>>,
    /// `sum_b K_bb`, the time-independent part.
    stationary: f64,
    pub normalized: bool,
    pub truncated_trace: f64,
}

impl Coherences {
    pub fn new(
        spectrum: &Spectrum,
        mixture: &InitialMixture,
        observable: Observable,
        normalize: bool,
    ) -> Self {
        let op = EigenOperator::new(spectrum, observable);
        Self::from_operator(spectrum, mixture, &op, normalize)
    }

    pub fn from_operator(
        spectrum: &Spectrum,
        mixture: &InitialMixture,
        op: &EigenOperator,
        normalize: bool,
    ) -> Self {
        let rho = spectrum.density_in_eigenbasis(mixture);
        let dim = spectrum.dim();
        let total = mixture.total_weight();
        let scale = if normalize { 1.0 / total } else { 1.0 };
        // rho and O_re are symmetric, O_im antisymmetric; symmetrizing keeps
        // the evaluated trace exactly real.
        let stationary = compensated_sum((0..dim).map(|b| scale * rho[(b, b)] * op.re[(b, b)]));
        let kr = Mat::from_fn(dim, dim, |a, b| {
            if a == b {
                return 0.0;
            }
            let r = 0.5 * (rho[(a, b)] + rho[(b, a)]);
            let o = 0.5 * (op.re[(a, b)] + op.re[(b, a)]);
            scale * r * o
        });
        let ki = op.im.as_ref().map(|im| {
            Mat::from_fn(dim, dim, |a, b| {
                let r = 0.5 * (rho[(a, b)] + rho[(b, a)]);
                // K_12 uses O_21.
                let o = 0.5 * (im[(b, a)] - im[(a, b)]);
                scale * r * o
            })
        });
        let mean = compensated_sum(spectrum.energies.iter().copied()) / dim as f64;
        Self {
            shifted: spectrum.energies.iter().map(|e| e - mean).collect(),
            energies: spectrum.energies.clone(),
            kr,
            ki,
            stationary,
            normalized: normalize,
            truncated_trace: mixture.truncated_trace,
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `<O(t)>` on every time in `times`.
    pub fn expectation(&self, times: &[f64]) -> Vec<f64> {
        let batches = times.len().div_ceil(TIME_BATCH);
        let parts = map_indexed(batches, |b| {
            let lo = b * TIME_BATCH;
            let hi = (lo + TIME_BATCH).min(times.len());
            self.expectation_batch(&times[lo..hi])
        });
        parts.into_iter().flatten().collect()
    }

    fn expectation_batch(&self, times: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let nt = times.len();
        let c = Mat::from_fn(dim, nt, |b, k| (self.shifted[b] * times[k]).cos());
        let s = Mat::from_fn(dim, nt, |b, k| (self.shifted[b] * times[k]).sin());
        let kc = &self.kr * &c;
        let ks = &self.kr * &s;
        let extra = self.ki.as_ref().map(|ki| (ki * &c, ki * &s));
        (0..nt)
            .map(|k| {
                let mut acc = self.stationary;
                for b in 0..dim {
                    acc += c[(b, k)] * kc[(b, k)] + s[(b, k)] * ks[(b, k)];
                }
                if let Some((kic, kis)) = &extra {
                    for b in 0..dim {
                        acc += s[(b, k)] * kic[(b, k)] - c[(b, k)] * kis[(b, k)];
                    }
                }
                acc
            })
            .collect()
    }

    /// Imaginary part of `sum_12 K_12 exp(-i (E_1 - E_2) t)`, zero up to
    /// rounding for a Hermitian observable.
    pub fn imaginary_residue(&self, t: f64) -> f64 {
        let dim = self.dim();
        let c: Vec<f64> = self.shifted.iter().map(|e| (e * t).cos()).collect();
        let s: Vec<f64> = self.shifted.iter().map(|e| (e * t).sin()).collect();
        let mut acc = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                // u_a conj(u_b) with u = c - i s
                let re = c[a] * c[b] + s[a] * s[b];
                let im = c[a] * s[b] - s[a] * c[b];
                acc += self.kr[(a, b)] * im;
                if let Some(ki) = &self.ki {
                    acc += ki[(a, b)] * re;
                }
            }
        }
        acc
    }

    /// Contiguous runs of (numerically) equal energies.
    fn degenerate_blocks(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 1..=self.dim() {
            if i == self.dim() || self.energies[i] - self.energies[i - 1] > tol {
                blocks.push((start, i));
                start = i;
            }
        }
        blocks
    }

    /// Infinite-time average: the zero-frequency part of the coherences,
    /// `sum_b rho_bb O_bb` plus pairs inside degenerate eigenvalue blocks.
    pub fn diagonal_average(&self, tol: f64) -> f64 {
        let mut acc = crate::numeric::CompensatedSum::new();
        acc.add(self.stationary);
        for (lo, hi) in self.degenerate_blocks(tol) {
            for a in lo..hi {
                for b in lo..hi {
                    acc.add(self.kr[(a, b)]);
                }
            }
        }
        acc.value()
    }

    /// Root-mean-square time fluctuation about the infinite-time average.
    /// Pairs whose gaps agree within `gap_tol` interfere and are summed
    /// coherently before squaring.
    pub fn fluctuations(&self, gap_tol: f64) -> Fluctuations {
        let blocks = self.degenerate_blocks(gap_tol);
        let mut block_of = vec![0usize; self.dim()];
        for (k, &(lo, hi)) in blocks.iter().enumerate() {
            block_of[lo..hi].iter_mut().for_each(|x| *x = k);
        }

        let dim = self.dim();
        let mut pairs: Vec<(f64, f64, f64)> = Vec::with_capacity(dim * (dim - 1) / 2);
        for b in 0..dim {
            for a in 0..b {
                if block_of[a] == block_of[b] {
                    continue;
                }
                let re = self.kr[(a, b)];
                let im = self.ki.as_ref().map_or(0.0, |ki| ki[(a, b)]);
                if re == 0.0 && im == 0.0 {
                    continue;
                }
                pairs.push((self.energies[b] - self.energies[a], re, im));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut variance = crate::numeric::CompensatedSum::new();
        let mut degenerate_groups = 0;
        let mut largest_group = 0;
        let mut i = 0;
        while i < pairs.len() {
            let mut j = i + 1;
            let (mut sr, mut si) = (pairs[i].1, pairs[i].2);
            while j < pairs.len() && pairs[j].0 - pairs[j - 1].0 <= gap_tol {
                sr += pairs[j].1;
                si += pairs[j].2;
                j += 1;
            }
            let size = j - i;
            if size > 1 {
                degenerate_groups += 1;
            }
            largest_group = largest_group.max(size);
            variance.add(2.0 * (sr * sr + si * si));
            i = j;
        }
        Fluctuations {
            delta: variance.value().max(0.0).sqrt(),
            degenerate_gap_groups: degenerate_groups,
            largest_gap_group: largest_group,
            degenerate_energy_blocks: blocks.iter().filter(|(lo, hi)| hi - lo > 1).count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fluctuations {
    pub delta: f64,
    /// Gap groups holding more than one eigenvalue pair.
    pub degenerate_gap_groups: usize,
    pub largest_gap_group: usize,
    /// Eigenvalue clusters of size > 1 (their internal pairs do not oscillate).
    pub degenerate_energy_blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace {
    /// Sample times (us).
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Spin oscillation period `2 pi / Rabi` (us).
    pub tau_s: f64,
    /// Whether values are divided by the truncated trace.
    pub normalized: bool,
    pub truncated_trace: f64,
}

impl TimeTrace {
    /// Values without the truncated-trace normalization.
    pub fn raw_values(&self) -> Vec<f64> {
        if self.normalized {
            self.values
                .iter()
                .map(|v| v * self.truncated_trace)
                .collect()
        } else {
            self.values.clone()
        }
    }

    pub fn times_over_tau(&self) -> Vec<f64> {
        self.times.iter().map(|t| t / self.tau_s).collect()
    }
}

/// `2 pi / Rabi`.
pub fn spin_period(rabi: f64) -> f64 {
    std::f64::consts::TAU / rabi
}

/// Experiment-like grid: `transient` points in `[0, tau_s)` followed by
/// `window` uniform points in `[tau_s, t_max_tau * tau_s]`.
pub fn default_time_grid(tau_s: f64, transient: usize, window: usize, t_max_tau: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..transient)
        .map(|k| tau_s * k as f64 / transient as f64)
        .collect();
    if window == 1 {
        t.push(tau_s);
    } else {
        t.extend(
            (0..window).map(|k| tau_s * (1.0 + (t_max_tau - 1.0) * k as f64 / (window - 1) as f64)),
        );
    }
    t
}

/// 30 transient points plus 100 points on `[tau_s, 13 tau_s]`.
pub fn standard_time_grid(tau_s: f64) -> Vec<f64> {
    default_time_grid(tau_s, 30, 100, 13.0)
}

pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect()
}

pub fn evolve_expectation(
    spectrum: &Spectrum,
    mixture: &InitialMixture,
    observable: Observable,
    times: &[f64],
    normalize: bool,
) -> Result<TimeTrace> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    let coh = Coherences::new(spectrum, mixture, observable, normalize);
    Ok(TimeTrace {
        times: times.to_vec(),
        values: coh.expectation(times),
        tau_s: spin_period(spectrum.params.rabi),
        normalized: normalize,
        truncated_trace: mixture.truncated_trace,
    })
}

/// Infinite-time average of `observable`, normalized by the truncated trace.
pub fn diagonal_ensemble_average(
    spectrum: &Spectrum,
    mixture: &InitialMixture,
    observable: Observable,
) -> f64 {
    Coherences::new(spectrum, mixture, observable, true).diagonal_average(DEFAULT_GAP_TOLERANCE)
}

pub fn infinite_time_fluctuations(
    spectrum: &Spectrum,
    mixture: &InitialMixture,
    observable: Observable,
    gap_tolerance: f64,
) -> Result<Fluctuations> {
    if !(gap_tolerance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gap tolerance must be non-negative, got {gap_tolerance}"
        )));
    }
    Ok(Coherences::new(spectrum, mixture, observable, true).fluctuations(gap_tolerance))
}

/// Multiplies the trace by `exp(-gamma t)`.
pub fn apply_decoherence(trace: &TimeTrace, gamma: f64) -> Result<TimeTrace> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "decoherence rate must be non-negative, got {gamma}"
        )));
    }
    let mut out = trace.clone();
    for (v, t) in out.values.iter_mut().zip(&trace.times) {
        *v *= (-gamma * t).exp();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevivalEstimate {
    /// `2 pi / mean nearest-neighbor mode spacing` (us).
    pub tau_rev: f64,
    pub mean_spacing: f64,
    pub min_spacing: f64,
    pub max_spacing: f64,
}

/// Order-of-magnitude revival time from the mode spacing.
pub fn predict_revival_time(mode_freqs: &[f64]) -> Result<RevivalEstimate> {
    if mode_freqs.len() < 2 {
        return Err(Error::UndefinedRevival(
            "a single mode has no spacing".into(),
        ));
    }
    let mut w = mode_freqs.to_vec();
    w.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::UndefinedRevival(
            "degenerate mode frequencies".into(),
        ));
    }
    Ok(RevivalEstimate {
        tau_rev: std::f64::consts::TAU / mean,
        mean_spacing: mean,
        min_spacing: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        max_spacing: gaps.iter().copied().fold(0.0, f64::max),
    })
}

/// Diagonal elements `O_bb` in the eigenbasis, without forming the full
/// transformed operator.
pub fn observable_diagonal(spectrum: &Spectrum, observable: Observable) -> Vec<f64> {
    let v = &spectrum.vectors;
    let dim = spectrum.dim();
    let m = spectrum.space.mode_dim;
    let sz = spectrum.space.sigma_z_diagonal();
    (0..dim)
        .map(|b| match observable {
            Observable::Identity => 1.0,
            // Purely imaginary antisymmetric in a real basis.
            Observable::SigmaY => 0.0,
            Observable::SigmaZ => (0..dim).map(|i| sz[i] * v[(i, b)] * v[(i, b)]).sum(),
            Observable::SigmaX => 2.0 * (0..m).map(|i| v[(i, b)] * v[(i + m, b)]).sum::<f64>(),
        })
        .collect()
}
