//! Equilibrium geometry and axial normal modes of a linear chain of equal-mass
//! ions, and the per-mode spin-phonon (Lamb-Dicke) couplings of the ion that
//! carries the spin.
//!
//! Lengths are in units of the Coulomb length scale `(e^2 / 4 pi eps0 m w^2)^(1/3)`,
//! so the force balance and the axial Hessian are parameter free.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_IONS: usize = 8;

const NEWTON_MAX_ITERATIONS: usize = 200;
const FORCE_TOLERANCE: f64 = 1e-12;

/// Geometry, axial modes and coupling parameters of an `n`-ion chain.
#[derive(Debug, Clone, Serialize)]
pub struct IonChain {
    pub n_ions: usize,
    /// Angular frequency of the center-of-mass mode (rad/us).
    pub omega1: f64,
    pub positions: Vec<f64>,
    /// Ascending mode frequencies (rad/us); `mode_freqs[0] == omega1`.
    pub mode_freqs: Vec<f64>,
    /// `mode_vectors[j][i]` is the amplitude of ion `i` in mode `j`.
    pub mode_vectors: Vec<Vec<f64>>,
    /// 1-based index of the spin-carrying ion.
    pub spin_ion_index: usize,
    pub eta1: f64,
    pub etas: Vec<f64>,
}

impl IonChain {
    pub fn new(n_ions: usize, omega1: f64, eta1: f64, spin_ion_index: usize) -> Result<Self> {
        if !(omega1 > 0.0 && omega1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega1 must be positive, got {omega1}"
            )));
        }
        let positions = equilibrium_positions(n_ions)?;
        let modes = modes_from_positions(&positions, omega1)?;
        let etas = lamb_dicke_parameters(&modes, eta1, spin_ion_index)?;
        Ok(Self {
            n_ions,
            omega1,
            positions,
            mode_freqs: modes.freqs,
            mode_vectors: modes.vectors,
            spin_ion_index,
            eta1,
            etas,
        })
    }

    pub fn frequency_ratios(&self) -> Vec<f64> {
        self.mode_freqs.iter().map(|w| w / self.omega1).collect()
    }

    /// Mode amplitudes of the spin ion relative to the COM mode, `M_j`.
    pub fn relative_amplitudes(&self) -> Vec<f64> {
        let i = self.spin_ion_index - 1;
        let b1 = self.mode_vectors[0][i];
        self.mode_vectors.iter().map(|b| b[i] / b1).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalModes {
    pub freqs: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn check_ion_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_IONS {
        return Err(Error::InvalidParameter(format!(
            "ion count must be in 1..={MAX_IONS}, got {n}"
        )));
    }
    Ok(())
}

/// Dimensionless force on each ion: harmonic restoring force plus Coulomb
/// repulsion from every other ion.
pub fn force_residual(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut f = u[i];
            for k in 0..n {
                if k == i {
                    continue;
                }
                let d = u[i] - u[k];
                f -= d.signum() / (d * d);
            }
            f
        })
        .collect()
}

/// Dimensionless axial Hessian at positions `u`. It is also the Jacobian of
/// [`force_residual`].
pub fn axial_hessian(u: &[f64]) -> Mat<f64> {
    let n = u.len();
    Mat::from_fn(n, n, |i, k| {
        if i == k {
            1.0 + (0..n)
                .filter(|&m| m != i)
                .map(|m| 2.0 / (u[i] - u[m]).abs().powi(3))
                .sum::<f64>()
        } else {
            -2.0 / (u[i] - u[k]).abs().powi(3)
        }
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Equilibrium coordinates of `n` ions, ascending.
///
/// Damped Newton iteration from a uniformly spaced seed. The step is halved
/// until the residual decreases, which keeps the ordering intact.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    check_ion_count(n)?;
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let center = (n as f64 + 1.0) / 2.0;
    let mut u: Vec<f64> = (1..=n).map(|i| i as f64 - center).collect();
    let mut residual = max_abs(&force_residual(&u));

    for _ in 0..NEWTON_MAX_ITERATIONS {
        if residual <= FORCE_TOLERANCE * 0.01 {
            break;
        }
        let f = force_residual(&u);
        let jac = axial_hessian(&u);
        let rhs = Mat::from_fn(n, 1, |i, _| f[i]);
        // The Hessian is positive definite at every ordered configuration.
        let step = match jac.llt(Side::Lower) {
            Ok(llt) => llt.solve(&rhs),
            Err(_) => {
                return Err(Error::SolverFailure {
                    iterations: 0,
                    residual,
                })
            }
        };

        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..n).map(|i| u[i] - damping * step[(i, 0)]).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered {
                let r = max_abs(&force_residual(&trial));
                if r < residual {
                    u = trial;
                    residual = r;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            // Rounding floor reached.
            break;
        }
    }

    if residual > FORCE_TOLERANCE {
        return Err(Error::SolverFailure {
            iterations: NEWTON_MAX_ITERATIONS,
            residual,
        });
    }
    Ok(u)
}

/// Axial normal modes of the `n`-ion chain with COM frequency `omega1`.
pub fn normal_modes(n: usize, omega1: f64) -> Result<NormalModes> {
    let positions = equilibrium_positions(n)?;
    modes_from_positions(&positions, omega1)
}

fn modes_from_positions(u: &[f64], omega1: f64) -> Result<NormalModes> {
    let n = u.len();
    let hessian = axial_hessian(u);
    let evd = hessian
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver {
            dim: n,
            reason: format!("{e:?}"),
        })?;
    let s = evd.S();
    let v = evd.U();
    let lambda1 = s[0];

    let mut freqs = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for j in 0..n {
        // The COM eigenvalue is exactly 1; anchoring on it keeps freqs[0] == omega1.
        let ratio = if j == 0 { 1.0 } else { (s[j] / lambda1).sqrt() };
        freqs.push(omega1 * ratio);
        let mut b: Vec<f64> = (0..n).map(|i| v[(i, j)]).collect();
        let pivot = b.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        if pivot < 0.0 {
            b.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(b);
    }
    Ok(NormalModes { freqs, vectors })
}

/// `eta_j = M_j sqrt(omega_1 / omega_j) eta_1` with `M_j = b_j(s) / b_1(s)`.
pub fn lamb_dicke_parameters(
    modes: &NormalModes,
    eta1: f64,
    spin_ion_index: usize,
) -> Result<Vec<f64>> {
    let n = modes.freqs.len();
    if spin_ion_index == 0 || spin_ion_index > n {
        return Err(Error::InvalidParameter(format!(
            "spin ion index must be in 1..={n}, got {spin_ion_index}"
        )));
    }
    if !(eta1 >= 0.0 && eta1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eta1 must be non-negative, got {eta1}"
        )));
    }
    let i = spin_ion_index - 1;
    let b1 = modes.vectors[0][i];
    let w1 = modes.freqs[0];
    Ok((0..n)
        .map(|j| {
            if j == 0 {
                eta1
            } else {
                modes.vectors[j][i] / b1 * (w1 / modes.freqs[j]).sqrt() * eta1
            }
        })
        .collect())
}

/// Coupling enhanced by a thermal occupation, `eta sqrt(2 nbar + 1)`.
pub fn effective_lamb_dicke(eta: f64, nbar: f64) -> f64 {
    eta * (2.0 * nbar + 1.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ion_sits_at_origin() {
        assert_eq!(equilibrium_positions(1).unwrap(), vec![0.0]);
        let modes = normal_modes(1, 2.5).unwrap();
        assert_eq!(modes.freqs, vec![2.5]);
        assert_eq!(modes.vectors, vec![vec![1.0]]);
    }

    #[test]
    fn two_and_three_ion_closed_forms() {
        let u2 = equilibrium_positions(2).unwrap();
        let a2 = 0.5_f64.powf(2.0 / 3.0);
        assert!((u2[0] + a2).abs() < 1e-12 && (u2[1] - a2).abs() < 1e-12);

        let u3 = equilibrium_positions(3).unwrap();
        let a3 = 1.25_f64.cbrt();
        assert!((u3[0] + a3).abs() < 1e-12);
        assert!(u3[1].abs() < 1e-12);
        assert!((u3[2] - a3).abs() < 1e-12);
    }

    #[test]
    fn force_balance_and_symmetry_up_to_eight_ions() {
        for n in 1..=MAX_IONS {
            let u = equilibrium_positions(n).unwrap();
            assert!(max_abs(&force_residual(&u)) <= 1e-12, "n={n}");
            assert!(u.windows(2).all(|w| w[1] > w[0]));
            for i in 0..n {
                assert!((u[i] + u[n - 1 - i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mode_vectors_orthonormal_and_com_first() {
        for n in 1..=MAX_IONS {
            let m = normal_modes(n, 1.0).unwrap();
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| m.vectors[a][i] * m.vectors[b][i]).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
            let c = 1.0 / (n as f64).sqrt();
            assert!(m.vectors[0].iter().all(|x| (x - c).abs() < 1e-10));
            assert!(m.freqs.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn frequency_ratios_match_measured_table() {
        let expected = [(2, 1.73), (3, 2.41), (4, 3.05), (5, 3.67)];
        for (n, r) in expected {
            let m = normal_modes(n, 1.0).unwrap();
            assert!(
                (m.freqs[n - 1] - r).abs() < 0.01,
                "n={n}: {}",
                m.freqs[n - 1]
            );
        }
        assert!((normal_modes(2, 1.0).unwrap().freqs[1] - 3f64.sqrt()).abs() < 1e-12);
        let m5 = normal_modes(5, 1.0).unwrap();
        // Independent root solve + eigvalsh gives 3.670809.
        assert!((m5.freqs[4] - 3.670809).abs() < 1e-5);
    }

    #[test]
    fn ratios_independent_of_trap_frequency() {
        let a = normal_modes(4, 1.0).unwrap();
        let b = normal_modes(4, 7.3).unwrap();
        for j in 0..4 {
            assert!((a.freqs[j] - b.freqs[j] / 7.3).abs() < 1e-12);
        }
    }

    #[test]
    fn lamb_dicke_examples() {
        let m1 = normal_modes(1, 1.0).unwrap();
        assert_eq!(lamb_dicke_parameters(&m1, 0.54, 1).unwrap(), vec![0.54]);

        let m2 = normal_modes(2, 1.0).unwrap();
        let eta = lamb_dicke_parameters(&m2, 0.54, 1).unwrap();
        assert_eq!(eta[0], 0.54);
        assert!((eta[1] - 0.54 * 3f64.powf(-0.25)).abs() < 1e-12);
        assert!((eta[1] - 0.4103).abs() < 1e-4);

        let zero = lamb_dicke_parameters(&m2, 0.0, 2).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));

        assert!(lamb_dicke_parameters(&m2, 0.5, 3).is_err());
        assert!(lamb_dicke_parameters(&m2, 0.5, 0).is_err());
    }

    #[test]
    fn lamb_dicke_bound_per_chain() {
        for n in 1..=6 {
            for s in 1..=n {
                let chain = IonChain::new(n, 1.0, 0.54, s).unwrap();
                for j in 0..n {
                    let bound_amp = (0..n)
                        .map(|i| (chain.mode_vectors[j][i] / chain.mode_vectors[0][i]).abs())
                        .fold(0.0, f64::max);
                    let bound = 0.54 * (1.0 / chain.mode_freqs[j]).sqrt() * bound_amp;
                    assert!(chain.etas[j].abs() <= bound + 1e-12);
                }
                assert_eq!(chain.relative_amplitudes()[0], 1.0);
            }
        }
    }

    #[test]
    fn effective_coupling() {
        assert!((effective_lamb_dicke(0.54, 1.0) - 0.9353).abs() < 1e-4);
        assert!((effective_lamb_dicke(0.54, 1.0) - 0.94).abs() < 0.01);
        assert_eq!(effective_lamb_dicke(0.54, 0.0), 0.54);
        assert!((effective_lamb_dicke(0.54, 0.8) - 0.870724).abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs() {
        assert!(equilibrium_positions(0).is_err());
        assert!(equilibrium_positions(9).is_err());
        assert!(IonChain::new(2, -1.0, 0.5, 1).is_err());
    }
}
