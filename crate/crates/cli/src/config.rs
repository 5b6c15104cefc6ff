//! Run configuration. Frequencies are read in MHz and converted to angular
//! units only when a [`SystemSpec`] is built.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinbath::ergodicity::WindowPolicy;
use spinbath::hilbert::MemoryBudget;
use spinbath::ionchain::MAX_IONS;
use spinbath::model::{mhz, SystemSpec};

use crate::error::{CliError, CliResult};

/// Uniform detuning sweep, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * k as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Detuning {
    Fixed(f64),
    Sweep(SweepSpec),
}

/// Sample grid: `transient_points` before one spin period, then
/// `window_points` up to `t_max_tau` periods. The statistics window is
/// `[1, t_max_tau]` periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGridConfig {
    pub transient_points: usize,
    pub window_points: usize,
    pub t_max_tau: f64,
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        Self {
            transient_points: 30,
            window_points: 100,
            t_max_tau: 13.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowPolicyConfig {
    pub initial: usize,
    pub step: usize,
    pub tolerance: f64,
}

impl From<WindowPolicyConfig> for WindowPolicy {
    fn from(p: WindowPolicyConfig) -> Self {
        WindowPolicy {
            initial: p.initial,
            step: p.step,
            tolerance: p.tolerance,
        }
    }
}

/// One instance of a scaling grid, in MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingInstanceConfig {
    pub n_ions: usize,
    pub cutoff: usize,
    pub omega1_mhz: f64,
    pub rabi_mhz: f64,
    pub omega_z_mhz: f64,
    #[serde(default = "default_eta1")]
    pub eta1: f64,
    #[serde(default = "default_spin_ion")]
    pub spin_ion: usize,
    /// Phonon numbers of each spin-down initial product state.
    pub initial_phonons: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub instances: Vec<ScalingInstanceConfig>,
}

fn default_eta1() -> f64 {
    0.54
}

fn default_spin_ion() -> usize {
    1
}

/// Everything a run needs. Missing fields take the single-ion trace values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_ions: usize,
    pub cutoff: usize,
    pub omega1_mhz: f64,
    pub rabi_mhz: f64,
    pub omega_z_mhz: Detuning,
    pub eta1: f64,
    /// Thermal occupation of every mode, COM first.
    pub nbar: Vec<f64>,
    /// 1-based position of the spin ion.
    pub spin_ion: usize,
    /// Thermal components lighter than this fraction of the heaviest are
    /// dropped.
    pub weight_floor: f64,
    pub time_grid: TimeGridConfig,
    pub seed: u64,
    pub resamples: usize,
    /// Projective measurements per time point for the sampled trace.
    pub repetitions: Option<u64>,
    /// Decoherence rate (1/us) for the damped trace.
    pub gamma_dec: Option<f64>,
    pub window_policy: Option<WindowPolicyConfig>,
    pub budget_gib: f64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// Scaling grid; the desk grid when absent.
    pub scaling: Option<ScalingConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_ions: 1,
            cutoff: 20,
            omega1_mhz: 0.724,
            rabi_mhz: 0.73,
            omega_z_mhz: Detuning::Fixed(0.0),
            eta1: default_eta1(),
            nbar: vec![0.8],
            spin_ion: default_spin_ion(),
            weight_floor: 0.0,
            time_grid: TimeGridConfig::default(),
            seed: 0,
            resamples: spinbath::stats::DEFAULT_RESAMPLES,
            repetitions: None,
            gamma_dec: None,
            window_policy: None,
            budget_gib: 8.0,
            workers: None,
            out: None,
            scaling: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn finite_nonneg(name: &str, x: f64) -> CliResult<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be finite and non-negative, got {x}"
        )))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(1..=MAX_IONS).contains(&self.n_ions) {
            return Err(invalid(format!("n_ions must be in 1..={MAX_IONS}")));
        }
        if self.cutoff == 0 {
            return Err(invalid("cutoff must be at least 1"));
        }
        if !(self.omega1_mhz.is_finite() && self.omega1_mhz > 0.0) {
            return Err(invalid("omega1_mhz must be positive"));
        }
        finite_nonneg("rabi_mhz", self.rabi_mhz)?;
        finite_nonneg("eta1", self.eta1)?;
        finite_nonneg("weight_floor", self.weight_floor)?;
        match self.omega_z_mhz {
            Detuning::Fixed(w) => finite_nonneg("omega_z_mhz", w)?,
            Detuning::Sweep(s) => {
                if s.count == 0 {
                    return Err(invalid("sweep count must be at least 1"));
                }
                finite_nonneg("sweep start", s.start)?;
                finite_nonneg("sweep stop", s.stop)?;
            }
        }
        if self.nbar.len() != self.n_ions {
            return Err(invalid(format!(
                "nbar has {} entries for {} modes",
                self.nbar.len(),
                self.n_ions
            )));
        }
        for &n in &self.nbar {
            finite_nonneg("nbar", n)?;
        }
        if !(1..=self.n_ions).contains(&self.spin_ion) {
            return Err(invalid("spin_ion must be between 1 and n_ions"));
        }
        let g = self.time_grid;
        if g.window_points < 2 || !(g.t_max_tau > 1.0 && g.t_max_tau.is_finite()) {
            return Err(invalid(
                "time grid needs at least 2 window points and t_max_tau > 1",
            ));
        }
        if self.resamples == 0 {
            return Err(invalid("resamples must be at least 1"));
        }
        if self.repetitions == Some(0) {
            return Err(invalid("repetitions must be at least 1"));
        }
        if let Some(gamma) = self.gamma_dec {
            finite_nonneg("gamma_dec", gamma)?;
        }
        if let Some(p) = self.window_policy {
            if p.initial < 2 || p.step == 0 || !(p.tolerance > 0.0) {
                return Err(invalid(
                    "window policy needs initial >= 2, step >= 1 and a positive tolerance",
                ));
            }
        }
        if !(self.budget_gib.is_finite() && self.budget_gib > 0.0) {
            return Err(invalid("budget_gib must be positive"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        if let Some(s) = &self.scaling {
            for inst in &s.instances {
                if !(inst.omega1_mhz > 0.0 && inst.omega1_mhz.is_finite()) {
                    return Err(invalid("scaling omega1_mhz must be positive"));
                }
                finite_nonneg("scaling rabi_mhz", inst.rabi_mhz)?;
                finite_nonneg("scaling omega_z_mhz", inst.omega_z_mhz)?;
                if inst
                    .initial_phonons
                    .iter()
                    .any(|p| p.len() != inst.n_ions || p.iter().any(|&n| n > inst.cutoff))
                {
                    return Err(invalid(
                        "scaling initial_phonons must have one entry per mode, each within the cutoff",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> MemoryBudget {
        MemoryBudget::gib(self.budget_gib)
    }

    /// Detunings in MHz, in run order.
    pub fn detunings_mhz(&self) -> Vec<f64> {
        match self.omega_z_mhz {
            Detuning::Fixed(w) => vec![w],
            Detuning::Sweep(s) => s.values(),
        }
    }

    pub fn system(&self, omega_z_mhz: f64) -> SystemSpec {
        SystemSpec {
            n_ions: self.n_ions,
            cutoff: self.cutoff,
            omega1: mhz(self.omega1_mhz),
            eta1: self.eta1,
            rabi: mhz(self.rabi_mhz),
            omega_z: mhz(omega_z_mhz),
            spin_ion: self.spin_ion,
        }
    }
}

impl ScalingInstanceConfig {
    pub fn system(&self) -> SystemSpec {
        SystemSpec {
            n_ions: self.n_ions,
            cutoff: self.cutoff,
            omega1: mhz(self.omega1_mhz),
            eta1: self.eta1,
            rabi: mhz(self.rabi_mhz),
            omega_z: mhz(self.omega_z_mhz),
            spin_ion: self.spin_ion,
        }
    }
}
