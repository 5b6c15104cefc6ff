//! Microcanonical averages, energy moments of the initial state, the density
//! of states and ETH matrix-element diagnostics.

use serde::Serialize;

use crate::ed::{observable_diagonal, EigenOperator, Observable, Spectrum};
use crate::error::{Error, Result};
use crate::hilbert::{Hamiltonian, InitialMixture};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyMoments {
    pub mean: f64,
    pub std: f64,
}

/// Mean and standard deviation of `H` in the initial mixture, normalized by
/// its truncated trace.
pub fn energy_moments(h: &Hamiltonian, mixture: &InitialMixture) -> Result<EnergyMoments> {
    if mixture.is_empty() {
        return Err(Error::InvalidParameter("initial mixture is empty".into()));
    }
    let total = mixture.total_weight();
    let m = &h.matrix;
    let mean: CompensatedSum = mixture
        .components
        .iter()
        .map(|c| c.weight * m[(c.index, c.index)])
        .collect();
    let mean = mean.value() / total;
    // <a|(H - E)^2|a> = sum_g H_ga^2 - 2 E H_aa + E^2, written as a sum of
    // squares so rounding cannot make it negative.
    let var: CompensatedSum = mixture
        .components
        .iter()
        .map(|c| {
            let a = c.index;
            let off: f64 = (0..h.dim())
                .filter(|&g| g != a)
                .map(|g| m[(g, a)] * m[(g, a)])
                .sum();
            c.weight * (off + (m[(a, a)] - mean).powi(2))
        })
        .collect();
    let var = var.value() / total;
    if var < -1e-12 || !var.is_finite() {
        return Err(Error::NegativeVariance(var));
    }
    Ok(EnergyMoments {
        mean,
        std: var.max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicrocanonicalAverage {
    pub value: f64,
    pub mean_energy: f64,
    pub width: f64,
    /// `1 / sum P^2`, the number of states effectively in the shell.
    pub shell_states: f64,
    /// The width was zero and the nearest eigenstate(s) were used instead.
    pub nearest_state_fallback: bool,
}

/// Unnormalized shell weights `exp[-(E_b - mean)^2 / (width/2)^2]`, scaled
/// so the largest is one and they cannot all underflow. A zero width selects
/// the nearest eigenstate(s); the flag reports that fallback.
fn shell_weights(energies: &[f64], mean: f64, width: f64) -> Result<(Vec<f64>, bool)> {
    if energies.is_empty() || !mean.is_finite() {
        return Err(Error::EmptyShell(format!(
            "no eigenstates near mean energy {mean}"
        )));
    }
    if !(width >= 0.0) || width.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "energy width must be finite and non-negative, got {width}"
        )));
    }
    if width == 0.0 {
        let nearest = energies
            .iter()
            .map(|e| (e - mean).abs())
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-9_f64.max(1e-12 * mean.abs());
        let p = energies
            .iter()
            .map(|e| {
                if (e - mean).abs() - nearest <= tol {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        return Ok((p, true));
    }
    let s = 0.5 * width;
    let expo: Vec<f64> = energies.iter().map(|e| -((e - mean) / s).powi(2)).collect();
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = expo.iter().map(|x| (x - top).exp()).collect();
    if !raw.iter().all(|p| p.is_finite()) {
        return Err(Error::EmptyShell(format!(
            "shell weights undefined at mean {mean}, width {width}"
        )));
    }
    Ok((raw, false))
}

/// Normalized microcanonical weights `P_b`.
pub fn microcanonical_weights(energies: &[f64], mean: f64, width: f64) -> Result<Vec<f64>> {
    let (raw, _) = shell_weights(energies, mean, width)?;
    let norm: CompensatedSum = raw.iter().copied().collect();
    let norm = norm.value();
    Ok(raw.iter().map(|p| p / norm).collect())
}

pub fn microcanonical_average(
    spectrum: &Spectrum,
    mean: f64,
    width: f64,
    observable: Observable,
) -> Result<MicrocanonicalAverage> {
    let (raw, fallback) = shell_weights(&spectrum.energies, mean, width)?;
    let diag = observable_diagonal(spectrum, observable);
    let norm: CompensatedSum = raw.iter().copied().collect();
    let num: CompensatedSum = raw.iter().zip(&diag).map(|(a, b)| a * b).collect();
    let norm = norm.value();
    Ok(MicrocanonicalAverage {
        value: num.value() / norm,
        mean_energy: mean,
        width,
        shell_states: norm * norm / raw.iter().map(|x| x * x).sum::<f64>(),
        nearest_state_fallback: fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellWidth {
    pub mean: f64,
    pub width: f64,
}

/// Mean and standard deviation of `E_b` under `|c_b(alpha)|^2`.
pub fn energy_shell_width(spectrum: &Spectrum, alpha: usize) -> Result<ShellWidth> {
    if alpha >= spectrum.dim() {
        return Err(Error::OutOfRange {
            index: alpha,
            value: spectrum.dim() as f64,
        });
    }
    let pops = spectrum.populations(alpha);
    let norm: f64 = pops.iter().sum();
    let mean = pops
        .iter()
        .zip(&spectrum.energies)
        .map(|(p, e)| p * e)
        .sum::<f64>()
        / norm;
    let var = pops
        .iter()
        .zip(&spectrum.energies)
        .map(|(p, e)| p * (e - mean).powi(2))
        .sum::<f64>()
        / norm;
    Ok(ShellWidth {
        mean,
        width: var.max(0.0).sqrt(),
    })
}

/// Mean spacing between the lowest and highest eigenvalues.
pub fn mean_level_spacing(energies: &[f64]) -> f64 {
    let n = energies.len();
    if n < 2 {
        return 0.0;
    }
    (energies[n - 1] - energies[0]) / (n - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityOfStates {
    pub energies: Vec<f64>,
    pub density: Vec<f64>,
    /// Standard deviation of the Gaussian kernel.
    pub bandwidth: f64,
}

impl DensityOfStates {
    /// Kernel estimate at an arbitrary energy.
    pub fn at(levels: &[f64], bandwidth: f64, e: f64) -> f64 {
        let c = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        levels
            .iter()
            .map(|l| c * (-0.5 * ((e - l) / bandwidth).powi(2)).exp())
            .sum()
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.energies
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(e, d)| 0.5 * (e[1] - e[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// Gaussian-smoothed `D(E) = sum_b delta(E - E_b)` on `points` energies
/// spanning the spectrum plus four bandwidths on each side. The default
/// bandwidth is three mean level spacings.
pub fn density_of_states(
    spectrum: &Spectrum,
    bandwidth: Option<f64>,
    points: usize,
) -> Result<DensityOfStates> {
    let e = &spectrum.energies;
    let bw = bandwidth.unwrap_or_else(|| 3.0 * mean_level_spacing(e));
    if !(bw > 0.0 && bw.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bw}"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter(
            "need at least two grid points".into(),
        ));
    }
    let lo = e[0] - 4.0 * bw;
    let hi = e[e.len() - 1] + 4.0 * bw;
    let grid: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    let density = grid
        .iter()
        .map(|&x| DensityOfStates::at(e, bw, x))
        .collect();
    Ok(DensityOfStates {
        energies: grid,
        density,
        bandwidth: bw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EthOptions {
    /// Fraction of eigenstates, centred on the middle of the spectrum, used
    /// for off-diagonal sampling.
    pub central_fraction: f64,
    pub bins: usize,
    /// DOS kernel width; defaults to three mean level spacings.
    pub bandwidth: Option<f64>,
    /// Basis states whose shell widths are reported alongside the profile.
    pub components: Vec<usize>,
}

impl Default for EthOptions {
    fn default() -> Self {
        Self {
            central_fraction: 0.6,
            bins: 41,
            bandwidth: None,
            components: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EthProfile {
    /// `(E_b, O_bb)` for every eigenstate.
    pub diagonal: Vec<(f64, f64)>,
    /// Eigenvalue window used for the off-diagonal sampling.
    pub energy_window: (f64, f64),
    pub bin_centers: Vec<f64>,
    /// Bin means of `|O_12|^2 D((E_1 + E_2)/2)` against `omega = E_1 - E_2`.
    pub profile: Vec<f64>,
    pub profile_err: Vec<f64>,
    pub counts: Vec<usize>,
    /// RMS width in `omega` of the profile.
    pub width: f64,
    pub bandwidth: f64,
    /// `(basis index, W_alpha)`.
    pub shell_widths: Vec<(usize, f64)>,
}

impl EthProfile {
    pub fn mean_shell_width(&self) -> Option<f64> {
        (!self.shell_widths.is_empty()).then(|| {
            self.shell_widths.iter().map(|s| s.1).sum::<f64>() / self.shell_widths.len() as f64
        })
    }
}

pub fn eth_diagnostics(
    spectrum: &Spectrum,
    observable: Observable,
    options: &EthOptions,
) -> Result<EthProfile> {
    if !(options.central_fraction > 0.0 && options.central_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "central fraction must be in (0, 1], got {}",
            options.central_fraction
        )));
    }
    if options.bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let dim = spectrum.dim();
    let e = &spectrum.energies;
    let op = EigenOperator::new(spectrum, observable);
    let diagonal: Vec<(f64, f64)> = (0..dim).map(|b| (e[b], op.re[(b, b)])).collect();

    let keep = ((dim as f64 * options.central_fraction).round() as usize).clamp(1, dim);
    let lo = (dim - keep) / 2;
    let hi = lo + keep;
    let bw = options
        .bandwidth
        .unwrap_or_else(|| 3.0 * mean_level_spacing(e));
    if !(bw > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bw}"
        )));
    }
    let w_max = e[hi - 1] - e[lo];
    let nb = options.bins;
    let bin_width = if w_max > 0.0 {
        2.0 * w_max / nb as f64
    } else {
        1.0
    };
    let bin_centers: Vec<f64> = (0..nb)
        .map(|k| -w_max + (k as f64 + 0.5) * bin_width)
        .collect();
    let mut sum = vec![0.0; nb];
    let mut sum_sq = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    // DOS at pair mid-energies via a fine lookup grid.
    let dos = density_of_states(spectrum, Some(bw), 2048)?;
    let dos_at = |x: f64| {
        let g = &dos.energies;
        let t = (x - g[0]) / (g[1] - g[0]);
        let k = (t.floor() as usize).min(g.len() - 2);
        let f = t - k as f64;
        dos.density[k] * (1.0 - f) + dos.density[k + 1] * f
    };
    for a in lo..hi {
        for b in lo..hi {
            if a == b {
                continue;
            }
            let w = e[a] - e[b];
            let k = (((w + w_max) / bin_width) as usize).min(nb - 1);
            let im = op.im.as_ref().map_or(0.0, |m| m[(a, b)]);
            let val = (op.re[(a, b)].powi(2) + im * im) * dos_at(0.5 * (e[a] + e[b]));
            sum[k] += val;
            sum_sq[k] += val * val;
            counts[k] += 1;
        }
    }
    let profile: Vec<f64> = (0..nb)
        .map(|k| {
            if counts[k] > 0 {
                sum[k] / counts[k] as f64
            } else {
                0.0
            }
        })
        .collect();
    let profile_err: Vec<f64> = (0..nb)
        .map(|k| {
            let n = counts[k] as f64;
            if counts[k] < 2 {
                return 0.0;
            }
            let var = (sum_sq[k] / n - profile[k].powi(2)).max(0.0) * n / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    let mass: f64 = profile.iter().sum();
    let width = if mass > 0.0 {
        (bin_centers
            .iter()
            .zip(&profile)
            .map(|(w, p)| w * w * p)
            .sum::<f64>()
            / mass)
            .sqrt()
    } else {
        0.0
    };
    let shell_widths = options
        .components
        .iter()
        .map(|&a| Ok((a, energy_shell_width(spectrum, a)?.width)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EthProfile {
        diagonal,
        energy_window: (e[lo], e[hi - 1]),
        bin_centers,
        profile,
        profile_err,
        counts,
        width,
        bandwidth: bw,
        shell_widths,
    })
}
