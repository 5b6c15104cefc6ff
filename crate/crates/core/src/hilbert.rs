//! Truncated spin x Fock product space, displacement operators, the
//! Hamiltonian and thermal initial states.
//!
//! Frequencies are angular (rad/us) with hbar = 1.
//!
//! # Quadrature-phase gauge
//!
//! With the per-mode phase `U = diag(i^n)`, the displacement
//! `exp[i eta (a + a^dag)]` becomes the real orthogonal `exp[eta (a^dag - a)]`,
//! so `U^dag H U` is real symmetric. `U` is diagonal in the product basis, which
//! makes every product-state population, every `|<psi_b|phi_a>|^2` and every
//! expectation value of a product-basis-diagonal or spin-only observable
//! identical in both gauges. [`build_hamiltonian`] returns the real form;
//! [`build_hamiltonian_complex`] assembles the textbook complex form.

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes per dense complex matrix entry, used for the budget check.
const COMPLEX_ENTRY_BYTES: u128 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    /// Eigenvalue of `sigma_z`: `+1` for up, `-1` for down.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisState {
    pub spin: Spin,
    pub phonons: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryBudget {
    pub bytes: u128,
}

impl MemoryBudget {
    pub fn gib(gib: f64) -> Self {
        Self {
            bytes: (gib * (1u128 << 30) as f64) as u128,
        }
    }

    pub fn unlimited() -> Self {
        Self { bytes: u128::MAX }
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self::gib(8.0)
    }
}

/// Product basis `|s>|n_1>...|n_N>`. Flat index: spin is the most significant
/// digit (`down = 0`), then modes 1..N in base `cutoff + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    pub n_modes: usize,
    pub cutoff: usize,
    /// `(cutoff + 1)^n_modes`
    pub mode_dim: usize,
    pub dim: usize,
}

impl HilbertSpace {
    pub fn encode(&self, state: &BasisState) -> usize {
        debug_assert_eq!(state.phonons.len(), self.n_modes);
        let base = self.cutoff + 1;
        let phonon_index = state.phonons.iter().fold(0, |acc, &n| {
            debug_assert!(n <= self.cutoff);
            acc * base + n
        });
        match state.spin {
            Spin::Down => phonon_index,
            Spin::Up => self.mode_dim + phonon_index,
        }
    }

    pub fn decode(&self, index: usize) -> BasisState {
        BasisState {
            spin: self.spin_of(index),
            phonons: self.phonons_of(index % self.mode_dim),
        }
    }

    pub fn spin_of(&self, index: usize) -> Spin {
        if index < self.mode_dim {
            Spin::Down
        } else {
            Spin::Up
        }
    }

    /// Occupations of the phonon index `p` (flat index modulo `mode_dim`).
    pub fn phonons_of(&self, mut p: usize) -> Vec<usize> {
        let base = self.cutoff + 1;
        let mut occ = vec![0; self.n_modes];
        for slot in occ.iter_mut().rev() {
            *slot = p % base;
            p /= base;
        }
        occ
    }

    pub fn total_phonons(&self, index: usize) -> usize {
        self.phonons_of(index % self.mode_dim).iter().sum()
    }

    /// `sigma_z` eigenvalue of every basis state.
    pub fn sigma_z_diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.spin_of(i).sz()).collect()
    }

    /// Phase `i^(n_1 + ... + n_N)` of each basis vector under the
    /// quadrature-phase gauge.
    pub fn gauge_phases(&self) -> Vec<c64> {
        const POWERS: [c64; 4] = [
            c64 { re: 1.0, im: 0.0 },
            c64 { re: 0.0, im: 1.0 },
            c64 { re: -1.0, im: 0.0 },
            c64 { re: 0.0, im: -1.0 },
        ];
        (0..self.dim)
            .map(|i| POWERS[self.total_phonons(i) % 4])
            .collect()
    }

    /// Bytes needed for one dense `dim x dim` complex matrix.
    pub fn dense_bytes(&self) -> u128 {
        (self.dim as u128) * (self.dim as u128) * COMPLEX_ENTRY_BYTES
    }
}

pub fn build_space(n_modes: usize, cutoff: usize, budget: MemoryBudget) -> Result<HilbertSpace> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("need at least one mode".into()));
    }
    if cutoff == 0 {
        return Err(Error::InvalidParameter("phonon cutoff must be >= 1".into()));
    }
    let mode_dim = (cutoff + 1)
        .checked_pow(n_modes as u32)
        .ok_or_else(|| Error::InvalidParameter("Hilbert dimension overflows".into()))?;
    let dim = 2 * mode_dim;
    let space = HilbertSpace {
        n_modes,
        cutoff,
        mode_dim,
        dim,
    };
    let required = space.dense_bytes();
    if required > budget.bytes {
        return Err(Error::DimensionExceedsBudget {
            dim,
            required_bytes: required,
            budget_bytes: budget.bytes,
        });
    }
    Ok(space)
}

/// Truncated quadrature `X = a + a^dag` on `0..=cutoff`.
pub fn quadrature(cutoff: usize) -> Mat<f64> {
    Mat::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if j == i + 1 {
            (j as f64).sqrt()
        } else if i == j + 1 {
            (i as f64).sqrt()
        } else {
            0.0
        }
    })
}

/// `exp[i eta X]` on the truncated mode space, built from the eigensystem of
/// the truncated `X` so it is exactly unitary there. Near the cutoff row and
/// column it deviates from the untruncated matrix elements.
pub fn mode_displacement(cutoff: usize, eta: f64) -> Mat<c64> {
    let x = quadrature(cutoff);
    let evd = x
        .self_adjoint_eigen(Side::Lower)
        .expect("tridiagonal quadrature eigensystem");
    let v = evd.U();
    let s = evd.S();
    let d = cutoff + 1;
    let phases: Vec<c64> = (0..d).map(|k| c64::from_polar(1.0, eta * s[k])).collect();
    Mat::from_fn(d, d, |i, j| {
        (0..d).fold(c64::new(0.0, 0.0), |acc, k| {
            acc + phases[k] * (v[(i, k)] * v[(j, k)])
        })
    })
}

/// The displacement in the quadrature-phase gauge, `i^(m-n) D_nm`, which is
/// the real orthogonal `exp[eta (a^dag - a)]`.
pub fn mode_displacement_real(cutoff: usize, eta: f64) -> Mat<f64> {
    let d = mode_displacement(cutoff, eta);
    Mat::from_fn(cutoff + 1, cutoff + 1, |n, m| {
        let phase = match (m + 4 - n % 4) % 4 {
            0 => c64::new(1.0, 0.0),
            1 => c64::new(0.0, 1.0),
            2 => c64::new(-1.0, 0.0),
            _ => c64::new(0.0, -1.0),
        };
        (phase * d[(n, m)]).re
    })
}

fn kron_real(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

fn kron_complex(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Parameters of `H = (wz/2) sz + sum_j w_j n_j + (Rabi/2)(s+ D + s- D^dag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_z: f64,
    pub rabi: f64,
    pub mode_freqs: Vec<f64>,
    pub etas: Vec<f64>,
}

impl ModelParams {
    fn check(&self, space: &HilbertSpace) -> Result<()> {
        if self.mode_freqs.len() != space.n_modes || self.etas.len() != space.n_modes {
            return Err(Error::DimensionMismatch(format!(
                "space has {} modes, got {} frequencies and {} couplings",
                space.n_modes,
                self.mode_freqs.len(),
                self.etas.len()
            )));
        }
        if self.etas.iter().any(|e| !e.is_finite()) || !self.rabi.is_finite() {
            return Err(Error::InvalidParameter("non-finite coupling".into()));
        }
        Ok(())
    }
}

/// Uncoupled energy `E0 = (wz/2) s + sum_j n_j w_j` of every basis state.
pub fn unperturbed_energies(space: &HilbertSpace, omega_z: f64, mode_freqs: &[f64]) -> Vec<f64> {
    (0..space.dim)
        .map(|i| {
            let phonon: f64 = space
                .phonons_of(i % space.mode_dim)
                .iter()
                .zip(mode_freqs)
                .map(|(&n, &w)| n as f64 * w)
                .sum();
            0.5 * omega_z * space.spin_of(i).sz() + phonon
        })
        .collect()
}

/// Real symmetric Hamiltonian in the quadrature-phase gauge.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub space: HilbertSpace,
    pub params: ModelParams,
    pub matrix: Mat<f64>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm_l2()
    }

    /// `H_perm[i][j] = H[order[i]][order[j]]`.
    pub fn permuted(&self, order: &[usize]) -> Mat<f64> {
        let h = &self.matrix;
        Mat::from_fn(order.len(), order.len(), |i, j| h[(order[i], order[j])])
    }
}

pub fn build_hamiltonian(space: &HilbertSpace, params: &ModelParams) -> Result<Hamiltonian> {
    params.check(space)?;
    let mut displacement = Mat::from_fn(1, 1, |_, _| 1.0);
    for &eta in &params.etas {
        let dj = mode_displacement_real(space.cutoff, eta);
        displacement = kron_real(displacement.as_ref(), dj.as_ref());
    }

    let m = space.mode_dim;
    let half_rabi = 0.5 * params.rabi;
    let e0 = unperturbed_energies(space, params.omega_z, &params.mode_freqs);
    let mut h = Mat::<f64>::zeros(space.dim, space.dim);
    for i in 0..space.dim {
        h[(i, i)] = e0[i];
    }
    if half_rabi != 0.0 {
        for r in 0..m {
            for c in 0..m {
                let v = half_rabi * displacement[(r, c)];
                // sigma+ D: up rows, down columns; sigma- D^T is its transpose.
                h[(m + r, c)] = v;
                h[(c, m + r)] = v;
            }
        }
    }
    Ok(Hamiltonian {
        space: space.clone(),
        params: params.clone(),
        matrix: h,
    })
}

/// How [`build_hamiltonian_complex`] assembles the spin-phonon term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyForm {
    /// `(R/2) sx + (R/2)(s+ C + s- C^dag)` with `C = D - 1`.
    Carrier,
    /// `(R/2)(s+ D + s- D^dag)`.
    Displacement,
}

/// The Hamiltonian in the original complex gauge.
pub fn build_hamiltonian_complex(
    space: &HilbertSpace,
    params: &ModelParams,
    form: AssemblyForm,
) -> Result<Mat<c64>> {
    params.check(space)?;
    let mut d = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
    for &eta in &params.etas {
        d = kron_complex(d.as_ref(), mode_displacement(space.cutoff, eta).as_ref());
    }
    let m = space.mode_dim;
    let half = 0.5 * params.rabi;
    let e0 = unperturbed_energies(space, params.omega_z, &params.mode_freqs);
    let mut h = Mat::<c64>::zeros(space.dim, space.dim);
    for i in 0..space.dim {
        h[(i, i)] = c64::new(e0[i], 0.0);
    }
    match form {
        AssemblyForm::Displacement => {
            for r in 0..m {
                for c in 0..m {
                    h[(m + r, c)] += d[(r, c)] * half;
                    h[(c, m + r)] += d[(r, c)].conj() * half;
                }
            }
        }
        AssemblyForm::Carrier => {
            // sigma_x acts as the identity on the phonons.
            for p in 0..m {
                h[(m + p, p)] += c64::new(half, 0.0);
                h[(p, m + p)] += c64::new(half, 0.0);
            }
            for r in 0..m {
                for c in 0..m {
                    let mut cval = d[(r, c)];
                    if r == c {
                        cval -= c64::new(1.0, 0.0);
                    }
                    h[(m + r, c)] += cval * half;
                    h[(c, m + r)] += cval.conj() * half;
                }
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub index: usize,
    pub weight: f64,
}

/// `rho(0) = sum_a w_a |phi_a><phi_a|` over product basis states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialMixture {
    pub components: Vec<Component>,
    pub spin: Spin,
    pub nbar: Vec<f64>,
    /// `sum_a w_a`; below one when the cutoff drops thermal population.
    pub truncated_trace: f64,
}

impl InitialMixture {
    /// A single basis state with unit weight.
    pub fn pure(space: &HilbertSpace, index: usize) -> Self {
        Self {
            components: vec![Component { index, weight: 1.0 }],
            spin: space.spin_of(index),
            nbar: vec![0.0; space.n_modes],
            truncated_trace: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::numeric::compensated_sum(self.components.iter().map(|c| c.weight))
    }

    /// Weights divided by their sum.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total = self.total_weight();
        self.components.iter().map(|c| c.weight / total).collect()
    }

    /// Expectation of a product-basis-diagonal observable at `t = 0`,
    /// normalized by the truncated trace.
    pub fn diagonal_expectation(&self, diag: &[f64]) -> f64 {
        let num = crate::numeric::compensated_sum(
            self.components.iter().map(|c| c.weight * diag[c.index]),
        );
        num / self.total_weight()
    }
}

/// Geometric (thermal) occupation probability `nbar^n / (1 + nbar)^(n+1)`.
pub fn thermal_occupation(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let q = nbar / (1.0 + nbar);
    q.powi(n as i32) / (1.0 + nbar)
}

/// Thermal phonon mixture with every mode at occupation `nbar[j]` and the spin
/// in `spin`. Components below `weight_floor * max w` are dropped.
pub fn thermal_initial_state(
    space: &HilbertSpace,
    nbar: &[f64],
    spin: Spin,
    weight_floor: f64,
) -> Result<InitialMixture> {
    if nbar.len() != space.n_modes {
        return Err(Error::DimensionMismatch(format!(
            "{} occupations for {} modes",
            nbar.len(),
            space.n_modes
        )));
    }
    if nbar.iter().any(|&n| !(n >= 0.0 && n.is_finite())) {
        return Err(Error::InvalidParameter(
            "mean occupations must be non-negative".into(),
        ));
    }
    if !(0.0..1.0).contains(&weight_floor) {
        return Err(Error::InvalidParameter(format!(
            "weight floor must be in [0, 1), got {weight_floor}"
        )));
    }
    let mode_probs: Vec<Vec<f64>> = nbar
        .iter()
        .map(|&nb| {
            (0..=space.cutoff)
                .map(|n| thermal_occupation(nb, n))
                .collect()
        })
        .collect();
    let offset = match spin {
        Spin::Down => 0,
        Spin::Up => space.mode_dim,
    };
    let mut components: Vec<Component> = (0..space.mode_dim)
        .filter_map(|p| {
            let occ = space.phonons_of(p);
            let w: f64 = occ
                .iter()
                .zip(&mode_probs)
                .map(|(&n, probs)| probs[n])
                .product();
            (w > 0.0).then_some(Component {
                index: offset + p,
                weight: w,
            })
        })
        .collect();
    let max_w = components.iter().map(|c| c.weight).fold(0.0, f64::max);
    components.retain(|c| c.weight >= weight_floor * max_w);
    let truncated_trace = crate::numeric::compensated_sum(components.iter().map(|c| c.weight));
    Ok(InitialMixture {
        components,
        spin,
        nbar: nbar.to_vec(),
        truncated_trace,
    })
}

/// Basis indices ordered by uncoupled energy, ties broken by flat index.
pub fn energy_sorted_basis(space: &HilbertSpace, omega_z: f64, mode_freqs: &[f64]) -> Vec<usize> {
    let e0 = unperturbed_energies(space, omega_z, mode_freqs);
    let mut order: Vec<usize> = (0..space.dim).collect();
    order.sort_by(|&a, &b| e0[a].total_cmp(&e0[b]).then(a.cmp(&b)));
    order
}
