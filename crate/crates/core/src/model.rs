//! Physical parameter sets and the chain -> Hamiltonian pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    build_hamiltonian, build_space, Hamiltonian, HilbertSpace, MemoryBudget, ModelParams,
};
use crate::ionchain::IonChain;

/// Angular frequency (rad/us) of a frequency given in MHz.
pub fn mhz(f: f64) -> f64 {
    std::f64::consts::TAU * f
}

/// One spin coupled to the axial modes of an `n_ions` chain.
/// Frequencies are angular (rad/us).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n_ions: usize,
    pub cutoff: usize,
    pub omega1: f64,
    pub eta1: f64,
    pub rabi: f64,
    pub omega_z: f64,
    /// 1-based position of the spin ion.
    pub spin_ion: usize,
}

impl SystemSpec {
    pub fn chain(&self) -> Result<IonChain> {
        IonChain::new(self.n_ions, self.omega1, self.eta1, self.spin_ion)
    }

    pub fn params(&self) -> Result<ModelParams> {
        if !(self.rabi.is_finite() && self.omega_z.is_finite()) {
            return Err(Error::InvalidParameter(
                "Rabi frequency and detuning must be finite".into(),
            ));
        }
        let chain = self.chain()?;
        Ok(ModelParams {
            omega_z: self.omega_z,
            rabi: self.rabi,
            mode_freqs: chain.mode_freqs,
            etas: chain.etas,
        })
    }

    pub fn space(&self, budget: MemoryBudget) -> Result<HilbertSpace> {
        build_space(self.n_ions, self.cutoff, budget)
    }

    pub fn hamiltonian(&self, budget: MemoryBudget) -> Result<Hamiltonian> {
        let space = self.space(budget)?;
        build_hamiltonian(&space, &self.params()?)
    }

    pub fn with_omega_z(&self, omega_z: f64) -> Self {
        Self {
            omega_z,
            ..self.clone()
        }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self {
            cutoff,
            ..self.clone()
        }
    }

    pub fn tau_s(&self) -> f64 {
        crate::ed::spin_period(self.rabi)
    }
}
